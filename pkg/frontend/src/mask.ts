/**
 * Brush-painted binary mask over the injection composite. The grid model
 * is plain data (testable without a canvas); rendering and PNG export
 * happen in the panel layer.
 */

export class MaskGrid {
  readonly width: number;
  readonly height: number;
  private readonly cells: Uint8Array;

  constructor(width: number, height: number) {
    if (width < 1 || height < 1) throw new Error("mask dims must be positive");
    this.width = width;
    this.height = height;
    this.cells = new Uint8Array(width * height);
  }

  get(x: number, y: number): boolean {
    return this.cells[y * this.width + x] === 1;
  }

  /** Paint (or erase) a filled disc centred on (cx, cy). */
  stroke(cx: number, cy: number, radius: number, erase = false): void {
    const r2 = radius * radius;
    const x0 = Math.max(0, Math.floor(cx - radius));
    const x1 = Math.min(this.width - 1, Math.ceil(cx + radius));
    const y0 = Math.max(0, Math.floor(cy - radius));
    const y1 = Math.min(this.height - 1, Math.ceil(cy + radius));
    for (let y = y0; y <= y1; y++) {
      for (let x = x0; x <= x1; x++) {
        const dx = x - cx;
        const dy = y - cy;
        if (dx * dx + dy * dy <= r2) {
          this.cells[y * this.width + x] = erase ? 0 : 1;
        }
      }
    }
  }

  /** Straight line of strokes, so fast pointer moves leave no gaps. */
  line(x0: number, y0: number, x1: number, y1: number, radius: number, erase = false): void {
    const steps = Math.max(1, Math.ceil(Math.hypot(x1 - x0, y1 - y0)));
    for (let i = 0; i <= steps; i++) {
      const t = i / steps;
      this.stroke(x0 + (x1 - x0) * t, y0 + (y1 - y0) * t, radius, erase);
    }
  }

  clear(): void {
    this.cells.fill(0);
  }

  isEmpty(): boolean {
    return !this.cells.some((v) => v === 1);
  }

  paintedCount(): number {
    let count = 0;
    for (const v of this.cells) count += v;
    return count;
  }

  /** Grayscale RGBA pixels (white = selected) for canvas/PNG export. */
  toRgba(): Uint8ClampedArray<ArrayBuffer> {
    const out = new Uint8ClampedArray(new ArrayBuffer(this.width * this.height * 4));
    for (let i = 0; i < this.cells.length; i++) {
      const v = this.cells[i] === 1 ? 255 : 0;
      out[i * 4] = v;
      out[i * 4 + 1] = v;
      out[i * 4 + 2] = v;
      out[i * 4 + 3] = 255;
    }
    return out;
  }
}
