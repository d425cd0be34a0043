// Playback math (pure, unit-tested) plus the WebAudio oscillator player.

import { ScoreDocument, ScoreEvent } from "./types.js";

export const BEATS_PER_MEASURE = 4;

export function parseBeats(rational: string): number {
  const [num, den] = rational.split("/");
  return Number(num) / (den === undefined ? 1 : Number(den));
}

/** Measure to highlight while the playhead sits at `beat` (0-based). */
export function highlightIndex(beat: number): number {
  return Math.floor(beat / BEATS_PER_MEASURE);
}

export function midiToFrequency(midi: number): number {
  return 440 * Math.pow(2, (midi - 69) / 12);
}

export interface ScheduledNote {
  timeBeats: number; // absolute beats from the start of the piece
  durationBeats: number;
  midi: number;
  hand: "right_hand" | "left_hand";
}

/** Flatten the score into absolute-time notes, ornaments included as their
 * principal note (decoration is an export-time concern). */
export function schedule(score: ScoreDocument): ScheduledNote[] {
  const notes: ScheduledNote[] = [];
  for (const part of score.parts) {
    for (const measure of part.measures) {
      const base = measure.index * BEATS_PER_MEASURE;
      for (const event of measure.events) {
        if (event.kind !== "note" || event.midi === undefined) continue;
        notes.push({
          timeBeats: base + parseBeats(event.onset),
          durationBeats: parseBeats(event.duration),
          midi: event.midi,
          hand: part.role,
        });
      }
    }
  }
  notes.sort((a, b) => a.timeBeats - b.timeBeats || a.midi - b.midi);
  return notes;
}

export function totalBeats(score: ScoreDocument): number {
  return score.measure_count * BEATS_PER_MEASURE;
}

/** MIDI numbers sounding at `beat`, for the virtual piano lighting. */
export function soundingAt(notes: ScheduledNote[], beat: number): number[] {
  const lit = new Set<number>();
  for (const note of notes) {
    if (note.timeBeats <= beat && beat < note.timeBeats + note.durationBeats) {
      lit.add(note.midi);
    }
  }
  return [...lit].sort((a, b) => a - b);
}

export interface PlayerCallbacks {
  onBeat?: (beat: number) => void;
  onStop?: () => void;
}

/** Oscillator-envelope playback: one triangle oscillator per note with a
 * short attack/release, scheduled against the AudioContext clock. */
export class Player {
  private ctx: AudioContext | null = null;
  private startedAt = 0;
  private beatsPerSecond = 2;
  private ticker: number | null = null;
  private playing = false;
  private scheduled: OscillatorNode[] = [];

  constructor(private callbacks: PlayerCallbacks = {}) {}

  get isPlaying(): boolean {
    return this.playing;
  }

  currentBeat(): number {
    if (!this.playing || this.ctx === null) return 0;
    return (this.ctx.currentTime - this.startedAt) * this.beatsPerSecond;
  }

  play(score: ScoreDocument, bpm: number): void {
    this.stop();
    this.ctx = this.ctx ?? new AudioContext();
    this.beatsPerSecond = bpm / 60;
    const t0 = this.ctx.currentTime + 0.05;
    this.startedAt = t0;
    const master = this.ctx.createGain();
    master.gain.value = 0.35;
    master.connect(this.ctx.destination);

    for (const note of schedule(score)) {
      const osc = this.ctx.createOscillator();
      osc.type = note.hand === "left_hand" ? "sine" : "triangle";
      osc.frequency.value = midiToFrequency(note.midi);
      const gain = this.ctx.createGain();
      const start = t0 + note.timeBeats / this.beatsPerSecond;
      const stop = start + note.durationBeats / this.beatsPerSecond;
      gain.gain.setValueAtTime(0, start);
      gain.gain.linearRampToValueAtTime(note.hand === "left_hand" ? 0.5 : 0.9, start + 0.02);
      gain.gain.setValueAtTime(gain.gain.value, Math.max(start + 0.02, stop - 0.05));
      gain.gain.linearRampToValueAtTime(0, stop);
      osc.connect(gain);
      gain.connect(master);
      osc.start(start);
      osc.stop(stop + 0.05);
      this.scheduled.push(osc);
    }

    this.playing = true;
    const end = totalBeats(score);
    const tick = () => {
      if (!this.playing) return;
      const beat = this.currentBeat();
      if (beat >= end) {
        this.stop();
        return;
      }
      this.callbacks.onBeat?.(beat);
      this.ticker = window.setTimeout(tick, 40);
    };
    tick();
  }

  stop(): void {
    if (this.ticker !== null) {
      clearTimeout(this.ticker);
      this.ticker = null;
    }
    for (const osc of this.scheduled) {
      try {
        osc.stop();
      } catch {
        /* already stopped */
      }
    }
    this.scheduled = [];
    if (this.playing) {
      this.playing = false;
      this.callbacks.onStop?.();
    }
  }
}
