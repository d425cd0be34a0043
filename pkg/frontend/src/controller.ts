// Application state and actions. The server is the single source of truth:
// every change round-trips through the API and the view re-renders from the
// response. One session mutation is in flight at a time, mirroring the
// server's per-session serialization.

import { ApiClient } from "./api.js";
import {
  Alternatives,
  ApiError,
  EditField,
  ExplanationDoc,
  Level,
  ScoreDocument,
  SessionStateName,
  SessionSummary,
} from "./types.js";

export interface MentorEntry {
  query: string;
  response: string;
  source: "live" | "stub";
}

export interface ViewState {
  session: SessionSummary | null;
  score: ScoreDocument | null;
  selectedMeasure: number | null;
  alternatives: Alternatives | null;
  explanation: ExplanationDoc | null;
  level: Level;
  bpm: number;
  playbackBeat: number | null;
  mentorInput: string;
  mentorTranscript: MentorEntry[];
  notices: string[];
  busy: boolean;
}

type Listener = (state: ViewState) => void;

const MUTATIONS_BY_STATE: Record<SessionStateName, readonly string[]> = {
  empty: ["upload"],
  uploaded: ["process"],
  analyzed: ["continue", "end"],
  extended: ["continue", "end", "edit"],
  ended: [],
};

export class AppController {
  readonly state: ViewState = {
    session: null,
    score: null,
    selectedMeasure: null,
    alternatives: null,
    explanation: null,
    level: "beginner",
    bpm: 120,
    playbackBeat: null,
    mentorInput: "",
    mentorTranscript: [],
    notices: [],
    busy: false,
  };

  private listeners: Listener[] = [];

  constructor(private readonly api: ApiClient) {}

  subscribe(listener: Listener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const listener of this.listeners) listener(this.state);
  }

  private notice(message: string): void {
    this.state.notices.push(message);
    this.emit();
  }

  dismissNotices(): void {
    this.state.notices = [];
    this.emit();
  }

  can(mutation: string): boolean {
    const state = this.state.session?.state ?? "empty";
    return MUTATIONS_BY_STATE[state].includes(mutation) && !this.state.busy;
  }

  /** Wrap a session mutation: state-machine gate, busy flag, error notice. */
  private async mutate<T>(gate: string, run: () => Promise<T>): Promise<T | null> {
    if (!this.can(gate)) {
      if (!this.state.busy) this.notice(`'${gate}' is not available right now`);
      return null;
    }
    this.state.busy = true;
    this.emit();
    try {
      return await run();
    } catch (error) {
      this.notice(error instanceof ApiError
        ? `${error.code}: ${error.message}`
        : String(error));
      return null;
    } finally {
      this.state.busy = false;
      this.emit();
    }
  }

  async start(seed?: number): Promise<void> {
    try {
      this.state.session = await this.api.createSession(seed);
    } catch (error) {
      this.notice(String(error));
      return;
    }
    this.emit();
  }

  async uploadFile(file: File | Blob, name: string): Promise<void> {
    await this.mutate("upload", async () => {
      const id = this.requireSession();
      this.state.session = name.toLowerCase().endsWith(".mid") || name.toLowerCase().endsWith(".midi")
        ? await this.api.uploadMidi(id, file, name)
        : await this.api.uploadAudio(id, file, name);
    });
  }

  async process(): Promise<void> {
    await this.mutate("process", async () => {
      const id = this.requireSession();
      this.state.session = await this.api.process(id, this.state.bpm);
      this.state.score = await this.api.getScore(id);
      if (this.state.session.analysis?.ambiguous) {
        this.notice("Key detection was ambiguous; using the best candidate");
      }
    });
  }

  async continuePhrase(): Promise<void> {
    await this.mutate("continue", async () => {
      const id = this.requireSession();
      const reply = await this.api.continuePhrase(id);
      this.state.score = reply.score;
      this.state.session = await this.api.getSession(id);
    });
  }

  async endPiece(): Promise<void> {
    await this.mutate("end", async () => {
      const id = this.requireSession();
      const reply = await this.api.endPiece(id);
      this.state.score = reply.score;
      this.state.session = await this.api.getSession(id);
    });
  }

  /** Measure click: select it and fetch its explanation at the current
   * level, plus the edit menus when the measure is editable. */
  async selectMeasure(index: number): Promise<void> {
    const id = this.requireSession();
    this.state.selectedMeasure = index;
    this.state.alternatives = null;
    try {
      this.state.explanation = await this.api.explanation(id, "measure", index, this.state.level);
      const editable = index >= (this.state.score?.input_measures ?? 0)
        && this.state.score?.state === "extended"
        && index !== this.state.score?.final_measure;
      if (editable) {
        this.state.alternatives = await this.api.alternatives(id, index);
      }
    } catch (error) {
      this.notice(error instanceof ApiError ? `${error.code}: ${error.message}` : String(error));
    }
    this.emit();
  }

  async selectPhrase(index: number): Promise<void> {
    const id = this.requireSession();
    try {
      this.state.explanation = await this.api.explanation(id, "phrase", index, this.state.level);
    } catch (error) {
      this.notice(error instanceof ApiError ? `${error.code}: ${error.message}` : String(error));
    }
    this.emit();
  }

  /** Explanation-level switch refreshes the open explanation. */
  async setLevel(level: Level): Promise<void> {
    this.state.level = level;
    const open = this.state.explanation;
    if (open && this.state.session) {
      try {
        this.state.explanation = await this.api.explanation(
          this.state.session.id, open.scope.kind, open.scope.index, level);
      } catch (error) {
        this.notice(String(error));
      }
    }
    this.emit();
  }

  setBpm(bpm: number): void {
    this.state.bpm = bpm;
    this.emit();
  }

  setPlaybackBeat(beat: number | null): void {
    this.state.playbackBeat = beat;
    this.emit();
  }

  /** Hyperlinked term click: populate the mentor input (no request yet). */
  clickTerm(term: string): void {
    this.state.mentorInput = term;
    this.emit();
  }

  setMentorInput(text: string): void {
    this.state.mentorInput = text;
    this.emit();
  }

  async askMentor(): Promise<void> {
    const query = this.state.mentorInput.trim();
    if (!query) return;
    try {
      const reply = await this.api.askMentor(query);
      this.state.mentorTranscript.push({
        query: reply.query, response: reply.response, source: reply.source,
      });
      this.state.mentorInput = "";
    } catch (error) {
      this.notice(error instanceof ApiError ? `${error.code}: ${error.message}` : String(error));
    }
    this.emit();
  }

  /** Edit menu selection: PATCH the measure and re-render from the server's
   * response (never mutate the local score directly). */
  async editMeasure(field: EditField, value: string | number): Promise<void> {
    const measure = this.state.selectedMeasure;
    if (measure === null) return;
    await this.mutate("edit", async () => {
      const id = this.requireSession();
      const reply = await this.api.editMeasure(id, measure, field, value);
      this.state.score = reply.score;
      this.state.explanation = await this.api.explanation(id, "measure", measure, this.state.level);
      this.state.alternatives = await this.api.alternatives(id, measure);
      this.state.session = await this.api.getSession(id);
    });
  }

  exportUrl(): string | null {
    return this.state.session ? this.api.exportUrl(this.state.session.id) : null;
  }

  private requireSession(): string {
    if (!this.state.session) throw new Error("no session yet");
    return this.state.session.id;
  }
}
