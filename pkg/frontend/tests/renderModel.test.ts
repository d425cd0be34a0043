import { describe, expect, it } from "vitest";

import { buildMeasureGrid, buildPiano, splitTermLinks } from "../src/renderModel.js";
import { scoreDocument } from "./helpers.js";

describe("buildMeasureGrid", () => {
  it("produces one clickable cell per measure", () => {
    const cells = buildMeasureGrid(scoreDocument());
    expect(cells).toHaveLength(6);
    expect(cells.map((c) => c.index)).toEqual([0, 1, 2, 3, 4, 5]);
  });

  it("distinguishes input from generated measures", () => {
    const cells = buildMeasureGrid(scoreDocument());
    expect(cells[0]!.source).toBe("input");
    expect(cells[1]!.source).toBe("input");
    expect(cells[2]!.source).toBe("generated");
    expect(cells[0]!.editable).toBe(false);
    expect(cells[2]!.editable).toBe(true);
  });

  it("marks phrase boundaries and rhythm ids", () => {
    const cells = buildMeasureGrid(scoreDocument());
    expect(cells[2]!.phraseStart).toBe(true);
    expect(cells[3]!.phraseStart).toBe(false);
    expect(cells[2]!.phraseIndex).toBe(0);
    expect(cells[0]!.phraseIndex).toBeNull();
    expect(cells[2]!.rhythmId).toBe(2);
    expect(cells[3]!.rhythmId).toBe(7);
  });

  it("carries ornament badges and note geometry", () => {
    const cells = buildMeasureGrid(scoreDocument());
    expect(cells[4]!.ornamentCount).toBe(1);  // the trill fixture
    expect(cells[2]!.ornamentCount).toBe(0);
    const note = cells[2]!.right[0]!;
    expect(note.leftPercent).toBe(0);
    expect(note.widthPercent).toBeCloseTo(25); // 1 beat of 4
    const second = cells[2]!.right[1]!;
    expect(second.leftPercent).toBeCloseTo(50); // onset beat 2
  });

  it("freezes edits after end", () => {
    const cells = buildMeasureGrid(scoreDocument("ended"));
    expect(cells.every((c) => !c.editable)).toBe(true);
  });
});

describe("buildPiano", () => {
  it("builds the key range with lit notes", () => {
    const keys = buildPiano([60, 64, 67]);
    expect(keys[0]!.midi).toBe(36);
    expect(keys[keys.length - 1]!.midi).toBe(96);
    const lit = keys.filter((k) => k.lit).map((k) => k.midi);
    expect(lit).toEqual([60, 64, 67]);
    expect(keys.find((k) => k.midi === 61)!.black).toBe(true);
    expect(keys.find((k) => k.midi === 60)!.black).toBe(false);
  });
});

describe("splitTermLinks", () => {
  it("splits [[term]] markup into runs", () => {
    const runs = splitTermLinks("the [[tonic]] pulls toward the [[dominant]].");
    expect(runs).toEqual([
      { kind: "text", value: "the " },
      { kind: "term", value: "tonic" },
      { kind: "text", value: " pulls toward the " },
      { kind: "term", value: "dominant" },
      { kind: "text", value: "." },
    ]);
  });

  it("passes plain text through", () => {
    expect(splitTermLinks("no jargon here")).toEqual([
      { kind: "text", value: "no jargon here" },
    ]);
  });
});
