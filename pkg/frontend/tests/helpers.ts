// Mock API transport: a FetchLike that serves canned documents and records
// every request so tests can assert methods, paths, and bodies.

import { FetchLike } from "../src/api.js";
import {
  ExplanationDoc,
  Level,
  ScoreDocument,
  SessionSummary,
} from "../src/types.js";

export interface RecordedRequest {
  method: string;
  path: string;
  body: unknown;
}

export function sessionSummary(state: SessionSummary["state"], extras: Partial<SessionSummary> = {}): SessionSummary {
  return {
    id: "s-1",
    state,
    bpm: 120,
    created: 0,
    updated: 0,
    config: { seed: 0, substitution_probability: 0.2, ornament_rate: 0.05 },
    measure_count: state === "empty" || state === "uploaded" ? 0 : 6,
    phrase_count: state === "extended" ? 1 : 0,
    analysis: state === "empty" || state === "uploaded" ? null : {
      key: "D major",
      ambiguous: false,
      key_ranking: [["D major", 1.0]],
      measure_chords: ["D", "G"],
      degrees: ["I", "IV"],
      fitted_rhythm_id: 2,
      fitted_distance: 0,
    },
    edits: 0,
    ...extras,
  };
}

function inputMeasure(index: number, chord: string, degree: string) {
  return {
    index,
    source: "input" as const,
    chord,
    degree,
    events: [
      { kind: "note" as const, onset: "0", duration: "2", midi: 62, name: "D4" },
      { kind: "note" as const, onset: "2", duration: "2", midi: 66, name: "F#4" },
    ],
  };
}

function generatedMeasure(index: number, chord: string, degree: string, ornament = false) {
  const first: any = { kind: "note", onset: "0", duration: "1", midi: 74, name: "D5" };
  if (ornament) first.ornament = { kind: "trill", auxiliary: 76 };
  return {
    index,
    source: "generated" as const,
    chord,
    degree,
    events: [
      first,
      { kind: "rest" as const, onset: "1", duration: "1" },
      { kind: "note" as const, onset: "2", duration: "2", midi: 69, name: "A4" },
    ],
  };
}

export function scoreDocument(state: ScoreDocument["state"] = "extended"): ScoreDocument {
  const degrees = ["I", "IV", "V", "I"];
  const chords = ["D", "G", "A", "D"];
  return {
    state,
    bpm: 120,
    key: { tonic: 2, mode: "major", name: "D major" },
    input_measures: 2,
    measure_count: 6,
    parts: [
      {
        role: "right_hand",
        measures: [
          inputMeasure(0, "D", "I"),
          inputMeasure(1, "G", "IV"),
          ...degrees.map((d, i) => generatedMeasure(2 + i, chords[i]!, d, i === 2)),
        ],
      },
      {
        role: "left_hand",
        measures: [0, 1, 2, 3, 4, 5].map((index) => ({
          index,
          source: index < 2 ? ("input" as const) : ("generated" as const),
          chord: index < 2 ? null : chords[index - 2]!,
          degree: index < 2 ? null : degrees[index - 2]!,
          events: index < 2
            ? [{ kind: "rest" as const, onset: "0", duration: "4" }]
            : [{ kind: "note" as const, onset: "0", duration: "4", midi: 38, name: "D2" }],
        })),
      },
    ],
    phrases: [{
      index: 0,
      entry_id: "classic-01",
      start_measure: 2,
      length: 4,
      progression: degrees,
      chords,
      rhythm_plan: [2, 7, 12, 7],
      substituted: [false, false, false, false],
    }],
    final_measure: null,
  };
}

export function explanationDoc(kind: "measure" | "phrase" | "piece",
                               index: number | null, level: Level): ExplanationDoc {
  return {
    scope: { kind, index },
    level,
    sections: [
      { aspect: "chords", text: `at ${level}: the [[tonic]] chord governs ${kind} ${index}`, facts: {} },
      { aspect: "rhythm", text: "pattern 2 of the 16 [[rhythm pattern]]s", facts: { pattern: ["2"] } },
      { aspect: "embellishment", text: "a [[trill]] decorates one note", facts: {} },
    ],
    terms: ["tonic", "rhythm pattern", "trill"],
  };
}

export class MockServer {
  requests: RecordedRequest[] = [];
  score: ScoreDocument = scoreDocument();
  session: SessionSummary = sessionSummary("extended");
  failNext: { status: number; code: string; message: string } | null = null;
  ambiguousAnalysis = false;

  fetch: FetchLike = async (url, init) => {
    const method = init?.method ?? "GET";
    const path = url.replace(/^.*\/api\/v1/, "");
    let body: unknown = undefined;
    if (typeof init?.body === "string") body = JSON.parse(init.body);
    else if (init?.body instanceof FormData) body = "<form-data>";
    this.requests.push({ method, path, body });

    if (this.failNext) {
      const { status, code, message } = this.failNext;
      this.failNext = null;
      return new Response(JSON.stringify({ error: code, message }), { status });
    }
    return new Response(JSON.stringify(this.route(method, path, body)), { status: 200 });
  };

  private route(method: string, path: string, body: unknown): unknown {
    if (path === "/sessions" && method === "POST") {
      this.session = sessionSummary("empty");
      return this.session;
    }
    if (/^\/sessions\/[^/]+$/.test(path)) return this.session;
    if (path.endsWith("/audio") || path.endsWith("/midi")) {
      this.session = sessionSummary("uploaded");
      return this.session;
    }
    if (path.endsWith("/process")) {
      this.session = sessionSummary("analyzed");
      if (this.ambiguousAnalysis && this.session.analysis) {
        this.session.analysis.ambiguous = true;
      }
      this.score = scoreDocument("analyzed");
      return this.session;
    }
    if (path.endsWith("/continue")) {
      this.session = sessionSummary("extended");
      this.score = scoreDocument("extended");
      return { phrase: this.score.phrases[0], score: this.score };
    }
    if (path.endsWith("/end")) {
      this.session = sessionSummary("ended");
      this.score = scoreDocument("ended");
      return { end: { final_measure: 6, chord: "D" }, score: this.score };
    }
    if (path.endsWith("/score")) return this.score;
    if (path.includes("/explanation")) {
      const params = new URLSearchParams(path.split("?")[1]);
      const kind = (params.get("scope") ?? "piece") as "measure" | "phrase" | "piece";
      const rawIndex = params.get("index");
      return explanationDoc(kind, rawIndex === null ? null : Number(rawIndex),
                            (params.get("level") ?? "beginner") as Level);
    }
    if (path.includes("/alternatives")) {
      const measure = Number(path.split("/measures/")[1]!.split("/")[0]);
      return {
        measure,
        degrees: ["I", "ii", "iii", "IV", "V", "vi", "viidim", "V7"],
        rhythms: Array.from({ length: 16 }, (_, i) => i + 1),
      };
    }
    if (/\/measures\/\d+$/.test(path) && method === "PATCH") {
      const measure = Number(path.split("/measures/")[1]);
      const edit = body as { field: string; value: string | number };
      this.score = scoreDocument("extended");
      const target = this.score.parts[0]!.measures[measure]!;
      if (edit.field === "degree") {
        target.degree = String(edit.value);
        target.chord = edit.value === "ii" ? "Em" : target.chord;
        this.score.phrases[0]!.progression[measure - 2] = String(edit.value);
      } else {
        this.score.phrases[0]!.rhythm_plan[measure - 2] = Number(edit.value);
      }
      target.source = "edited";
      return {
        measure: { measure, right_hand: target, left_hand: this.score.parts[1]!.measures[measure] },
        score: this.score,
      };
    }
    if (path === "/mentor") {
      const query = (body as { query: string }).query;
      return { query, response: `about ${query}...`, source: "stub" };
    }
    throw new Error(`mock server: unhandled ${method} ${path}`);
  }
}
