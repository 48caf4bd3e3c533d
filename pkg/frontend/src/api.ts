/**
 * Typed client for the model service. Pure API layer: no model logic
 * lives in the browser. Every mutating helper takes an optional
 * AbortSignal so panels can cancel an in-flight request when a
 * parameter changes.
 */

export interface JobLossRow {
  iteration: number;
  scale: number;
  d_loss: number;
  g_adv: number;
  g_rec: number;
  sigma: number;
}

export interface JobStatus {
  job_id: string;
  state: "queued" | "running" | "done" | "failed";
  scale: number | null;
  iter: number | null;
  num_scales: number | null;
  iters_per_scale: number | null;
  model_id: string | null;
  error: string | null;
  losses: JobLossRow[];
  next_index: number;
}

export interface ModelSummary {
  model_id: string;
  name: string | null;
  coarsest_index: number;
  levels: number[][];
}

export interface ModelManifest {
  coarsest_index: number;
  scale_factor: number;
  levels: number[][];
  sigmas: number[];
  padding_mode: string;
  channels: number;
}

export interface InjectionPresetRow {
  scale: number;
  num_scales: number;
}

export interface AnimationPresetRow {
  start_scale: number;
  num_scales: number;
  alpha: number;
  beta: number;
}

export interface PresetTables {
  harmonization: Record<string, InjectionPresetRow>;
  editing: Record<string, InjectionPresetRow>;
  paint_to_image: Record<string, InjectionPresetRow>;
  animation: Record<string, AnimationPresetRow>;
}

export interface PresetsResponse {
  coarsest_index: number;
  presets: PresetTables;
}

export interface SampleResult {
  images: string[];
  etag: string;
  seed: number;
}

export interface InjectResult {
  image: string;
  scale: number;
  preset: string | null;
}

export interface AnimateResult {
  frames: string[];
  gif: string | null;
}

export interface ApiError {
  code: string;
  message: string;
}

export class ServiceError extends Error {
  readonly code: string;
  readonly status: number;

  constructor(status: number, body: ApiError) {
    super(body.message);
    this.code = body.code;
    this.status = status;
  }
}

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

async function parseJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let body: ApiError;
    try {
      body = (await resp.json()) as ApiError;
    } catch {
      body = { code: "http_error", message: `HTTP ${resp.status}` };
    }
    throw new ServiceError(resp.status, body);
  }
  return (await resp.json()) as T;
}

export class StudioApi {
  private readonly base: string;
  private readonly fetchFn: FetchLike;

  constructor(base = "", fetchFn: FetchLike = (u, i) => fetch(u, i)) {
    this.base = base.replace(/\/$/, "");
    this.fetchFn = fetchFn;
  }

  url(path: string): string {
    return `${this.base}${path}`;
  }

  async createModel(
    image: Blob,
    config: Record<string, unknown>,
    signal?: AbortSignal,
  ): Promise<{ job_id: string }> {
    const form = new FormData();
    form.append("image", image, "upload.png");
    form.append("config", JSON.stringify(config));
    const resp = await this.fetchFn(this.url("/v1/models"), {
      method: "POST",
      body: form,
      signal,
    });
    return parseJson(resp);
  }

  async jobStatus(jobId: string, since = 0, signal?: AbortSignal): Promise<JobStatus> {
    const resp = await this.fetchFn(
      this.url(`/v1/jobs/${encodeURIComponent(jobId)}?since=${since}`),
      { signal },
    );
    return parseJson(resp);
  }

  async listModels(signal?: AbortSignal): Promise<ModelSummary[]> {
    const resp = await this.fetchFn(this.url("/v1/models"), { signal });
    return parseJson(resp);
  }

  async manifest(modelId: string, signal?: AbortSignal): Promise<ModelManifest> {
    const resp = await this.fetchFn(
      this.url(`/v1/models/${encodeURIComponent(modelId)}`),
      { signal },
    );
    return parseJson(resp);
  }

  async presets(modelId: string, signal?: AbortSignal): Promise<PresetsResponse> {
    const resp = await this.fetchFn(
      this.url(`/v1/models/${encodeURIComponent(modelId)}/presets`),
      { signal },
    );
    return parseJson(resp);
  }

  async sample(
    modelId: string,
    body: {
      start_scale?: number;
      width?: number;
      height?: number;
      count: number;
      seed?: number;
      padding?: string;
    },
    signal?: AbortSignal,
  ): Promise<SampleResult> {
    const resp = await this.fetchFn(
      this.url(`/v1/models/${encodeURIComponent(modelId)}/samples`),
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
        signal,
      },
    );
    return parseJson(resp);
  }

  async inject(
    modelId: string,
    image: Blob,
    opts: { scale?: number; preset?: string; presetTask?: string; noise?: boolean; seed?: number; mask?: Blob },
    signal?: AbortSignal,
  ): Promise<InjectResult> {
    const form = new FormData();
    form.append("image", image, "inject.png");
    if (opts.scale !== undefined) form.append("scale", String(opts.scale));
    if (opts.preset !== undefined) form.append("preset", opts.preset);
    if (opts.presetTask !== undefined) form.append("preset_task", opts.presetTask);
    if (opts.noise !== undefined) form.append("noise", String(opts.noise));
    if (opts.seed !== undefined) form.append("seed", String(opts.seed));
    if (opts.mask !== undefined) form.append("mask", opts.mask, "mask.png");
    const resp = await this.fetchFn(
      this.url(`/v1/models/${encodeURIComponent(modelId)}/inject`),
      { method: "POST", body: form, signal },
    );
    return parseJson(resp);
  }

  async animate(
    modelId: string,
    body: { alpha: number; beta: number; start_scale?: number; frames: number; seed?: number; fps?: number },
    signal?: AbortSignal,
  ): Promise<AnimateResult> {
    const resp = await this.fetchFn(
      this.url(`/v1/models/${encodeURIComponent(modelId)}/animate`),
      {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify(body),
        signal,
      },
    );
    return parseJson(resp);
  }
}

/**
 * Serializes one in-flight request per panel: starting a new request
 * aborts the previous one, so stale responses can never paint over
 * fresh parameters.
 */
export class PanelRequest {
  private controller: AbortController | null = null;

  async run<T>(work: (signal: AbortSignal) => Promise<T>): Promise<T | null> {
    this.controller?.abort();
    const controller = new AbortController();
    this.controller = controller;
    try {
      return await work(controller.signal);
    } catch (err) {
      if (controller.signal.aborted) return null;
      throw err;
    } finally {
      if (this.controller === controller) this.controller = null;
    }
  }

  cancel(): void {
    this.controller?.abort();
    this.controller = null;
  }
}
