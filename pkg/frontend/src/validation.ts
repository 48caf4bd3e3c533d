/**
 * Client-side mirrors of the service's request validation. The UI never
 * sends a request these reject.
 */

export interface Check {
  ok: boolean;
  message?: string;
}

const pass: Check = { ok: true };

function fail(message: string): Check {
  return { ok: false, message };
}

/** Anchor strength / velocity smoothing of the animation walk. */
export function checkUnitInterval(name: string, value: number): Check {
  if (!Number.isFinite(value)) return fail(`${name} must be a number`);
  if (value < 0 || value > 1) return fail(`${name} must lie in [0, 1]`);
  return pass;
}

export const checkAlpha = (v: number): Check => checkUnitInterval("alpha", v);
export const checkBeta = (v: number): Check => checkUnitInterval("beta", v);

/**
 * Injection scale: strictly below the coarsest index (the coarsest scale
 * is purely generative, injection would replace it entirely).
 */
export function checkInjectionScale(scale: number, coarsestIndex: number): Check {
  if (!Number.isInteger(scale)) return fail("scale must be an integer");
  if (scale < 0) return fail("scale must be >= 0");
  if (scale >= coarsestIndex) {
    return fail(`scale must be below the coarsest index ${coarsestIndex}`);
  }
  return pass;
}

/** Generation start scale may equal the coarsest index. */
export function checkStartScale(scale: number, coarsestIndex: number): Check {
  if (!Number.isInteger(scale)) return fail("start scale must be an integer");
  if (scale < 0 || scale > coarsestIndex) {
    return fail(`start scale must lie in [0, ${coarsestIndex}]`);
  }
  return pass;
}

export function checkFrames(frames: number): Check {
  if (!Number.isInteger(frames) || frames < 1 || frames > 300) {
    return fail("frames must be an integer in [1, 300]");
  }
  return pass;
}

export function checkCount(count: number): Check {
  if (!Number.isInteger(count) || count < 1 || count > 64) {
    return fail("count must be an integer in [1, 64]");
  }
  return pass;
}

export function checkDim(name: string, value: number | undefined): Check {
  if (value === undefined) return pass;
  if (!Number.isInteger(value) || value < 11 || value > 4096) {
    return fail(`${name} must be an integer in [11, 4096]`);
  }
  return pass;
}

export function checkSeed(seed: number | undefined): Check {
  if (seed === undefined) return pass;
  if (!Number.isInteger(seed) || seed < 0) return fail("seed must be a non-negative integer");
  return pass;
}

/** Slider bounds for the injection explorer: [0, N-1]. */
export function injectionSliderBounds(coarsestIndex: number): { min: number; max: number } {
  return { min: 0, max: Math.max(coarsestIndex - 1, 0) };
}

/** Slider bounds for generation / animation start scale: [0, N]. */
export function startScaleSliderBounds(coarsestIndex: number): { min: number; max: number } {
  return { min: 0, max: coarsestIndex };
}

export function firstFailure(...checks: Check[]): Check {
  for (const c of checks) {
    if (!c.ok) return c;
  }
  return pass;
}
