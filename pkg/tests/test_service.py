import json
import threading
from pathlib import Path

import jsonschema
import pytest
from fastapi.testclient import TestClient

from composeon.service import SessionStore, create_app

SCHEMA_DIR = Path(__file__).resolve().parent.parent / "docs" / "schemas"


def load_schema(name):
    return json.loads((SCHEMA_DIR / f"{name}.json").read_text())


@pytest.fixture()
def client(tmp_path, corpus_db):
    store = SessionStore(data_dir=tmp_path, db=corpus_db)
    return TestClient(create_app(store))


def make_session(client, demo_midi_bytes, seed=0, substitution_probability=0.0,
                 process=True):
    created = client.post("/api/v1/sessions", json={
        "seed": seed, "substitution_probability": substitution_probability,
    })
    assert created.status_code == 201
    sid = created.json()["id"]
    up = client.post(f"/api/v1/sessions/{sid}/midi",
                     files={"file": ("demo.mid", demo_midi_bytes, "audio/midi")})
    assert up.status_code == 200
    if process:
        assert client.post(f"/api/v1/sessions/{sid}/process", json={}).status_code == 200
    return sid


class TestHappyPath:
    def test_health(self, client):
        body = client.get("/api/v1/health").json()
        assert body["status"] == "ok"
        assert len(body["corpus_digest"]) == 64

    def test_upload_process_analysis(self, client, demo_midi_bytes):
        sid = make_session(client, demo_midi_bytes)
        summary = client.get(f"/api/v1/sessions/{sid}").json()
        jsonschema.validate(summary, load_schema("session"))
        assert summary["state"] == "analyzed"
        assert summary["analysis"]["key"] == "D major"
        assert summary["analysis"]["degrees"] == ["I", "IV"]

    def test_wav_upload(self, client, demo_wav_bytes):
        created = client.post("/api/v1/sessions", json={})
        sid = created.json()["id"]
        up = client.post(f"/api/v1/sessions/{sid}/audio",
                         files={"file": ("demo.wav", demo_wav_bytes, "audio/wav")})
        assert up.status_code == 200
        done = client.post(f"/api/v1/sessions/{sid}/process", json={"bpm": 120})
        assert done.status_code == 200
        assert done.json()["analysis"]["key"] == "D major"

    def test_continue_end_score(self, client, demo_midi_bytes):
        sid = make_session(client, demo_midi_bytes)
        reply = client.post(f"/api/v1/sessions/{sid}/continue").json()
        assert reply["phrase"]["chords"] == ["D", "G", "A", "D"]
        jsonschema.validate(reply["score"], load_schema("score"))
        done = client.post(f"/api/v1/sessions/{sid}/end").json()
        assert done["end"]["chord"] == "D"
        score = client.get(f"/api/v1/sessions/{sid}/score").json()
        jsonschema.validate(score, load_schema("score"))
        assert score["state"] == "ended"
        assert score["measure_count"] == 7

    def test_export_bytes_parse(self, client, demo_midi_bytes):
        from composeon.midi import parse_smf
        sid = make_session(client, demo_midi_bytes)
        client.post(f"/api/v1/sessions/{sid}/continue")
        reply = client.get(f"/api/v1/sessions/{sid}/export")
        assert reply.status_code == 200
        assert reply.headers["content-type"].startswith("audio/midi")
        doc = parse_smf(reply.content)
        assert len(doc.tracks) == 3

    def test_explanation_endpoint(self, client, demo_midi_bytes):
        sid = make_session(client, demo_midi_bytes)
        client.post(f"/api/v1/sessions/{sid}/continue")
        reply = client.get(f"/api/v1/sessions/{sid}/explanation",
                           params={"scope": "phrase", "index": 0,
                                   "level": "intermediate"})
        body = reply.json()
        jsonschema.validate(body, load_schema("explanation"))
        assert "I-IV-V-I" in body["sections"][0]["text"]

    def test_alternatives_and_edit(self, client, demo_midi_bytes):
        sid = make_session(client, demo_midi_bytes)
        start = client.post(f"/api/v1/sessions/{sid}/continue").json()["phrase"]["start_measure"]
        alts = client.get(f"/api/v1/sessions/{sid}/measures/{start + 1}/alternatives").json()
        jsonschema.validate(alts, load_schema("alternatives"))
        assert "ii" in alts["degrees"]
        reply = client.patch(f"/api/v1/sessions/{sid}/measures/{start + 1}",
                             json={"field": "degree", "value": "ii"})
        assert reply.status_code == 200
        body = reply.json()
        assert body["measure"]["right_hand"]["chord"] == "Em"
        assert body["score"]["phrases"][0]["progression"] == ["I", "ii", "V", "I"]

    def test_glossary(self, client):
        terms = client.get("/api/v1/glossary").json()["terms"]
        assert "dominant" in terms

    def test_mentor_stub(self, client):
        body = client.post("/api/v1/mentor", json={"query": "circle of fifths"}).json()
        jsonschema.validate(body, load_schema("mentor"))
        assert body["source"] == "stub"

    def test_save_load(self, client, demo_midi_bytes):
        sid = make_session(client, demo_midi_bytes, seed=5)
        client.post(f"/api/v1/sessions/{sid}/continue")
        client.post(f"/api/v1/sessions/{sid}/end")
        before = client.get(f"/api/v1/sessions/{sid}/export").content
        assert client.post(f"/api/v1/sessions/{sid}/save").json()["saved"]
        loaded = client.post(f"/api/v1/sessions/{sid}/load")
        assert loaded.status_code == 200
        after = client.get(f"/api/v1/sessions/{sid}/export").content
        assert after == before


class TestErrors:
    def test_unknown_session_404(self, client):
        assert client.get("/api/v1/sessions/nope").status_code == 404
        assert client.get("/api/v1/sessions/nope/score").status_code == 404

    def test_process_before_upload_409(self, client):
        sid = client.post("/api/v1/sessions", json={}).json()["id"]
        reply = client.post(f"/api/v1/sessions/{sid}/process", json={})
        assert reply.status_code == 409
        jsonschema.validate(reply.json(), load_schema("error"))

    def test_continue_after_end_409(self, client, demo_midi_bytes):
        sid = make_session(client, demo_midi_bytes)
        client.post(f"/api/v1/sessions/{sid}/end")
        assert client.post(f"/api/v1/sessions/{sid}/continue").status_code == 409

    def test_polyphonic_midi_422(self, client):
        from composeon.midi import EndOfTrack, NoteOff, NoteOn, SmfDocument, write_smf
        track = [NoteOn(0, 0, 60, 80), NoteOn(0, 0, 64, 80),
                 NoteOff(480, 0, 60, 0), NoteOff(480, 0, 64, 0), EndOfTrack(480)]
        data = write_smf(SmfDocument(0, 480, [track]))
        sid = client.post("/api/v1/sessions", json={}).json()["id"]
        client.post(f"/api/v1/sessions/{sid}/midi",
                    files={"file": ("p.mid", data, "audio/midi")})
        reply = client.post(f"/api/v1/sessions/{sid}/process", json={})
        assert reply.status_code == 422
        assert reply.json()["error"] == "PolyphonicInput"

    def test_mp3_upload_415(self, client):
        sid = client.post("/api/v1/sessions", json={}).json()["id"]
        reply = client.post(f"/api/v1/sessions/{sid}/audio",
                            files={"file": ("song.mp3", b"ID3\x04data", "audio/mpeg")})
        assert reply.status_code == 415
        assert "mp3" in reply.json()["message"]

    def test_edit_input_measure_403(self, client, demo_midi_bytes):
        sid = make_session(client, demo_midi_bytes)
        client.post(f"/api/v1/sessions/{sid}/continue")
        reply = client.patch(f"/api/v1/sessions/{sid}/measures/0",
                             json={"field": "degree", "value": "ii"})
        assert reply.status_code == 403

    def test_edit_unoffered_value_422(self, client, demo_midi_bytes):
        sid = make_session(client, demo_midi_bytes)
        start = client.post(f"/api/v1/sessions/{sid}/continue").json()["phrase"]["start_measure"]
        reply = client.patch(f"/api/v1/sessions/{sid}/measures/{start}",
                             json={"field": "rhythm", "value": 99})
        assert reply.status_code == 422

    def test_scope_out_of_range_422(self, client, demo_midi_bytes):
        sid = make_session(client, demo_midi_bytes)
        reply = client.get(f"/api/v1/sessions/{sid}/explanation",
                           params={"scope": "measure", "index": 999, "level": "beginner"})
        assert reply.status_code == 422

    def test_load_missing_404(self, client):
        assert client.post("/api/v1/sessions/ghost/load").status_code == 404

    def test_exhaustion_422(self, client, demo_midi_bytes, corpus_db):
        from composeon.score import Mode
        sid = make_session(client, demo_midi_bytes)
        pool = sum(1 for e in corpus_db.progressions if e.matches_mode(Mode.MAJOR))
        for _ in range(pool):
            assert client.post(f"/api/v1/sessions/{sid}/continue").status_code == 200
        reply = client.post(f"/api/v1/sessions/{sid}/continue")
        assert reply.status_code == 422
        assert reply.json()["error"] == "CorpusExhausted"


class TestConcurrency:
    def test_parallel_continues_serialize(self, client, demo_midi_bytes):
        sid = make_session(client, demo_midi_bytes)
        errors = []

        def hit():
            reply = client.post(f"/api/v1/sessions/{sid}/continue")
            if reply.status_code != 200:
                errors.append(reply.status_code)

        threads = [threading.Thread(target=hit) for _ in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        summary = client.get(f"/api/v1/sessions/{sid}").json()
        assert summary["phrase_count"] == 4

    def test_sessions_independent(self, client, demo_midi_bytes):
        a = make_session(client, demo_midi_bytes, seed=1)
        b = make_session(client, demo_midi_bytes, seed=1)
        client.post(f"/api/v1/sessions/{a}/continue")
        assert client.get(f"/api/v1/sessions/{b}").json()["phrase_count"] == 0
