"""ComposeOn: extend a monophonic melody into a two-hand piece, phrase by
phrase, and explain every generated element at three proficiency levels."""

__version__ = "0.1.0"
