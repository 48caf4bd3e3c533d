import { describe, expect, it } from "vitest";

import type { JobLossRow } from "../src/api.js";
import { LossBuffer, toPolyline } from "../src/losses.js";

function row(iteration: number, scale: number, v = 0.5): JobLossRow {
  return { iteration, scale, d_loss: -v, g_adv: v, g_rec: v / 10, sigma: 0.1 };
}

describe("LossBuffer", () => {
  it("absorbs rows and advances the cursor", () => {
    const buf = new LossBuffer();
    expect(buf.nextIndex).toBe(0);
    const added = buf.absorb({ losses: [row(0, 2), row(1, 2)], next_index: 2 });
    expect(added).toBe(2);
    expect(buf.nextIndex).toBe(2);
    buf.absorb({ losses: [], next_index: 2 });
    expect(buf.length).toBe(2);
  });

  it("polling with the cursor never duplicates rows", () => {
    const buf = new LossBuffer();
    const all = [row(0, 1), row(1, 1), row(0, 0), row(1, 0)];
    buf.absorb({ losses: all.slice(0, 2), next_index: 2 });
    buf.absorb({ losses: all.slice(2), next_index: 4 });
    expect(buf.length).toBe(4);
    expect(buf.latest()?.scale).toBe(0);
  });

  it("groups per scale, coarsest first", () => {
    const buf = new LossBuffer();
    buf.absorb({ losses: [row(0, 2), row(0, 1), row(1, 2)], next_index: 3 });
    expect(buf.scales()).toEqual([2, 1]);
    expect(buf.series(2, "g_adv").map((p) => p.x)).toEqual([0, 1]);
  });

  it("clear resets everything", () => {
    const buf = new LossBuffer();
    buf.absorb({ losses: [row(0, 0)], next_index: 1 });
    buf.clear();
    expect(buf.length).toBe(0);
    expect(buf.nextIndex).toBe(0);
  });
});

describe("toPolyline", () => {
  it("maps points into the padded pixel box", () => {
    const line = toPolyline(
      [
        { x: 0, y: 0 },
        { x: 10, y: 1 },
      ],
      100,
      50,
      4,
    );
    expect(line[0]).toEqual({ x: 4, y: 46 }); // min x, min y -> bottom-left
    expect(line[1]).toEqual({ x: 96, y: 4 }); // max x, max y -> top-right
  });

  it("handles flat series without dividing by zero", () => {
    const line = toPolyline(
      [
        { x: 0, y: 3 },
        { x: 1, y: 3 },
      ],
      100,
      50,
    );
    expect(line.every((p) => Number.isFinite(p.y))).toBe(true);
  });

  it("empty input gives an empty polyline", () => {
    expect(toPolyline([], 100, 50)).toEqual([]);
  });
});
