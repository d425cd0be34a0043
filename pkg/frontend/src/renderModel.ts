// Pure render models: everything the DOM layer draws is computed here so
// the UI contract is testable without a browser.

import { parseBeats, BEATS_PER_MEASURE } from "./playback.js";
import { PhraseInfo, ScoreDocument, ScoreMeasure } from "./types.js";

export interface NoteCellModel {
  midi: number;
  name: string;
  leftPercent: number;   // onset within the measure, 0..100
  widthPercent: number;  // duration within the measure, 0..100
  topPercent: number;    // vertical position within the part lane
  ornament: string | null;
}

export interface MeasureCellModel {
  index: number;
  source: "input" | "generated" | "edited";
  editable: boolean;
  chord: string | null;
  degree: string | null;
  phraseIndex: number | null;
  phraseStart: boolean;
  rhythmId: number | null;
  right: NoteCellModel[];
  left: NoteCellModel[];
  ornamentCount: number;
}

const RH_RANGE: [number, number] = [57, 88];
const LH_RANGE: [number, number] = [33, 62];

function noteModels(measure: ScoreMeasure | undefined, range: [number, number]): NoteCellModel[] {
  if (!measure) return [];
  const [lo, hi] = range;
  const span = hi - lo;
  const out: NoteCellModel[] = [];
  for (const event of measure.events) {
    if (event.kind !== "note" || event.midi === undefined) continue;
    out.push({
      midi: event.midi,
      name: event.name ?? String(event.midi),
      leftPercent: (parseBeats(event.onset) / BEATS_PER_MEASURE) * 100,
      widthPercent: (parseBeats(event.duration) / BEATS_PER_MEASURE) * 100,
      topPercent: (1 - (Math.min(Math.max(event.midi, lo), hi) - lo) / span) * 100,
      ornament: event.ornament?.kind ?? null,
    });
  }
  return out;
}

function phraseAt(phrases: PhraseInfo[], measure: number): PhraseInfo | null {
  for (const phrase of phrases) {
    if (measure >= phrase.start_measure && measure < phrase.start_measure + phrase.length) {
      return phrase;
    }
  }
  return null;
}

/** One clickable cell per measure, with phrase boundaries, ornament badges,
 * and the input/generated distinction the grid renders. */
export function buildMeasureGrid(score: ScoreDocument): MeasureCellModel[] {
  const right = score.parts.find((p) => p.role === "right_hand");
  const left = score.parts.find((p) => p.role === "left_hand");
  const cells: MeasureCellModel[] = [];
  for (let index = 0; index < score.measure_count; index += 1) {
    const rhMeasure = right?.measures[index];
    const lhMeasure = left?.measures[index];
    const phrase = phraseAt(score.phrases, index);
    const rh = noteModels(rhMeasure, RH_RANGE);
    cells.push({
      index,
      source: rhMeasure?.source ?? "input",
      editable: phrase !== null && score.state !== "ended",
      chord: rhMeasure?.chord ?? null,
      degree: rhMeasure?.degree ?? null,
      phraseIndex: phrase?.index ?? null,
      phraseStart: phrase?.start_measure === index,
      rhythmId: phrase ? phrase.rhythm_plan[index - phrase.start_measure] ?? null : null,
      right: rh,
      left: noteModels(lhMeasure, LH_RANGE),
      ornamentCount: rh.filter((n) => n.ornament !== null).length,
    });
  }
  return cells;
}

export interface PianoKeyModel {
  midi: number;
  black: boolean;
  lit: boolean;
}

const BLACK_PCS = new Set([1, 3, 6, 8, 10]);

/** 61-key virtual piano (C2..C7) with the sounding notes lit. */
export function buildPiano(litMidis: number[], lo = 36, hi = 96): PianoKeyModel[] {
  const lit = new Set(litMidis);
  const keys: PianoKeyModel[] = [];
  for (let midi = lo; midi <= hi; midi += 1) {
    keys.push({ midi, black: BLACK_PCS.has(midi % 12), lit: lit.has(midi) });
  }
  return keys;
}

/** Term links: split "[[term]]" markup into text/link runs for rendering. */
export interface TextRun {
  kind: "text" | "term";
  value: string;
}

export function splitTermLinks(text: string): TextRun[] {
  const runs: TextRun[] = [];
  const pattern = /\[\[([a-z0-9 -]+)\]\]/g;
  let cursor = 0;
  for (const match of text.matchAll(pattern)) {
    const index = match.index ?? 0;
    if (index > cursor) runs.push({ kind: "text", value: text.slice(cursor, index) });
    runs.push({ kind: "term", value: match[1] ?? "" });
    cursor = index + match[0].length;
  }
  if (cursor < text.length) runs.push({ kind: "text", value: text.slice(cursor) });
  return runs;
}
