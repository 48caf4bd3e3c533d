/**
 * Incremental loss-log accumulation for the training dashboard chart.
 * The jobs endpoint streams rows from a cursor; this buffer appends them
 * and groups per scale for one polyline per scale and series.
 */

import type { JobLossRow, JobStatus } from "./api.js";

export type SeriesName = "d_loss" | "g_adv" | "g_rec";

export class LossBuffer {
  private rows: JobLossRow[] = [];
  private cursor = 0;

  get nextIndex(): number {
    return this.cursor;
  }

  get length(): number {
    return this.rows.length;
  }

  /** Feed one polled status; returns how many new rows arrived. */
  absorb(status: Pick<JobStatus, "losses" | "next_index">): number {
    const added = status.losses.length;
    if (added > 0) this.rows.push(...status.losses);
    this.cursor = status.next_index;
    return added;
  }

  scales(): number[] {
    const seen = new Set<number>();
    for (const row of this.rows) seen.add(row.scale);
    return [...seen].sort((a, b) => b - a); // coarsest first
  }

  series(scale: number, name: SeriesName): { x: number; y: number }[] {
    return this.rows
      .filter((r) => r.scale === scale)
      .map((r) => ({ x: r.iteration, y: r[name] }));
  }

  latest(): JobLossRow | undefined {
    return this.rows[this.rows.length - 1];
  }

  clear(): void {
    this.rows = [];
    this.cursor = 0;
  }
}

/** Map data points into pixel space for a simple canvas polyline. */
export function toPolyline(
  points: { x: number; y: number }[],
  width: number,
  height: number,
  pad = 4,
): { x: number; y: number }[] {
  if (points.length === 0) return [];
  const xs = points.map((p) => p.x);
  const ys = points.map((p) => p.y);
  const xMin = Math.min(...xs);
  const xMax = Math.max(...xs);
  const yMin = Math.min(...ys);
  const yMax = Math.max(...ys);
  const xSpan = xMax - xMin || 1;
  const ySpan = yMax - yMin || 1;
  return points.map((p) => ({
    x: pad + ((p.x - xMin) / xSpan) * (width - 2 * pad),
    y: height - pad - ((p.y - yMin) / ySpan) * (height - 2 * pad),
  }));
}
