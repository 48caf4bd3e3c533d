/**
 * Shareable session state, round-tripped through the URL hash so a
 * studio session (model, panel, scale, seed, walk parameters) can be
 * restored from a link.
 */

export interface StudioState {
  model?: string;
  panel?: "dashboard" | "inject" | "gallery" | "animate";
  scale?: number;
  startScale?: number;
  seed?: number;
  count?: number;
  alpha?: number;
  beta?: number;
  frames?: number;
  noise?: boolean;
  preset?: string;
  task?: string;
}

const NUMBER_KEYS = ["scale", "startScale", "seed", "count", "frames"] as const;
const FLOAT_KEYS = ["alpha", "beta"] as const;
const STRING_KEYS = ["model", "panel", "preset", "task"] as const;

export function encodeState(state: StudioState): string {
  const params = new URLSearchParams();
  for (const key of [...STRING_KEYS, ...NUMBER_KEYS, ...FLOAT_KEYS]) {
    const value = state[key];
    if (value !== undefined) params.set(key, String(value));
  }
  if (state.noise !== undefined) params.set("noise", state.noise ? "1" : "0");
  return params.toString();
}

export function decodeState(hash: string): StudioState {
  const text = hash.startsWith("#") ? hash.slice(1) : hash;
  const params = new URLSearchParams(text);
  const state: StudioState = {};
  for (const key of STRING_KEYS) {
    const v = params.get(key);
    if (v !== null && v !== "") {
      if (key === "panel") {
        if (v === "dashboard" || v === "inject" || v === "gallery" || v === "animate") {
          state.panel = v;
        }
      } else {
        state[key] = v;
      }
    }
  }
  for (const key of NUMBER_KEYS) {
    const v = params.get(key);
    if (v !== null) {
      const parsed = Number.parseInt(v, 10);
      if (Number.isFinite(parsed)) state[key] = parsed;
    }
  }
  for (const key of FLOAT_KEYS) {
    const v = params.get(key);
    if (v !== null) {
      const parsed = Number.parseFloat(v);
      if (Number.isFinite(parsed)) state[key] = parsed;
    }
  }
  const noise = params.get("noise");
  if (noise !== null) state.noise = noise !== "0";
  return state;
}

export type StateListener = (state: StudioState) => void;

/** Keeps window.location.hash and an in-memory state object in sync. */
export class UrlStateStore {
  private state: StudioState;
  private listeners: StateListener[] = [];

  constructor(private readonly win: Pick<Window, "location" | "addEventListener"> = window) {
    this.state = decodeState(win.location.hash);
    win.addEventListener("hashchange", () => {
      this.state = decodeState(this.win.location.hash);
      this.emit();
    });
  }

  get(): StudioState {
    return { ...this.state };
  }

  update(patch: Partial<StudioState>): void {
    this.state = { ...this.state, ...patch };
    const encoded = encodeState(this.state);
    if (this.win.location.hash.replace(/^#/, "") !== encoded) {
      this.win.location.hash = encoded;
    }
    this.emit();
  }

  subscribe(listener: StateListener): void {
    this.listeners.push(listener);
  }

  private emit(): void {
    for (const l of this.listeners) l(this.get());
  }
}
