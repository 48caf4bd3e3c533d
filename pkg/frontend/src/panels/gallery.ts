/**
 * Sample gallery: K samples at a chosen start scale and output size,
 * shown beside the training image. Pinning the seed makes the request
 * reproducible; the server's ETag confirms identical reruns.
 */

import { PanelRequest, ServiceError, StudioApi } from "../api.js";
import { button, clear, el, errorBox, imageCard, labeled, numberInput, showError, slider } from "../dom.js";
import { UrlStateStore } from "../state.js";
import { checkCount, checkDim, checkSeed, checkStartScale, firstFailure, startScaleSliderBounds } from "../validation.js";

export class GalleryPanel {
  readonly root: HTMLElement;
  private readonly request = new PanelRequest();
  private readonly errors: HTMLElement;
  private readonly grid: HTMLElement;
  private readonly meta: HTMLElement;
  private readonly startSlider: HTMLInputElement;
  private readonly startLabel: HTMLElement;
  private readonly countInput: HTMLInputElement;
  private readonly seedInput: HTMLInputElement;
  private readonly widthInput: HTMLInputElement;
  private readonly heightInput: HTMLInputElement;
  private modelId: string | null = null;
  private coarsest = 0;
  private lastEtag: string | null = null;

  constructor(private readonly api: StudioApi, private readonly state: UrlStateStore) {
    this.errors = errorBox();
    this.grid = el("div", { class: "gallery" });
    this.meta = el("div", { class: "note" });
    this.startSlider = slider(0, 0, 0);
    this.startLabel = el("span", { class: "value", text: "0" });
    this.countInput = numberInput(4, { min: "1", max: "64" });
    this.seedInput = numberInput(0, { min: "0" });
    this.widthInput = numberInput("", { placeholder: "training", min: "11", max: "4096" });
    this.heightInput = numberInput("", { placeholder: "training", min: "11", max: "4096" });

    this.startSlider.addEventListener("input", () => {
      this.startLabel.textContent = this.startSlider.value;
      this.state.update({ startScale: Number(this.startSlider.value) });
    });

    this.root = el("section", { class: "panel" }, [
      el("h2", { text: "Sample gallery" }),
      el("div", { class: "controls" }, [
        el("div", { class: "field" }, [
          el("span", { text: "start scale (coarsest = full variability)" }),
          this.startSlider,
          this.startLabel,
        ]),
        labeled("count", this.countInput),
        labeled("seed", this.seedInput),
        button("random seed", () => {
          this.seedInput.value = String(Math.floor(Math.random() * 2 ** 31));
        }),
        labeled("width", this.widthInput),
        labeled("height", this.heightInput),
        button("generate", () => void this.run()),
      ]),
      this.errors,
      this.meta,
      this.grid,
    ]);
  }

  async setModel(modelId: string): Promise<void> {
    this.modelId = modelId;
    const manifest = await this.api.manifest(modelId);
    this.coarsest = manifest.coarsest_index;
    const bounds = startScaleSliderBounds(this.coarsest);
    this.startSlider.min = String(bounds.min);
    this.startSlider.max = String(bounds.max);
    const fromUrl = this.state.get().startScale;
    const start =
      fromUrl !== undefined && checkStartScale(fromUrl, this.coarsest).ok
        ? fromUrl
        : this.coarsest;
    this.startSlider.value = String(start);
    this.startLabel.textContent = String(start);
    const seed = this.state.get().seed;
    if (seed !== undefined) this.seedInput.value = String(seed);
  }

  async run(): Promise<void> {
    if (!this.modelId) return;
    const startScale = Number(this.startSlider.value);
    const count = Number(this.countInput.value);
    const seed = Number(this.seedInput.value);
    const width = this.widthInput.value ? Number(this.widthInput.value) : undefined;
    const height = this.heightInput.value ? Number(this.heightInput.value) : undefined;
    const check = firstFailure(
      checkStartScale(startScale, this.coarsest),
      checkCount(count),
      checkSeed(seed),
      checkDim("width", width),
      checkDim("height", height),
    );
    if (!check.ok) {
      showError(this.errors, check.message ?? "invalid parameters");
      return;
    }
    showError(this.errors, null);
    this.state.update({ startScale, seed, count });
    const result = await this.request
      .run((signal) =>
        this.api.sample(
          this.modelId!,
          { start_scale: startScale, count, seed, width, height },
          signal,
        ),
      )
      .catch((err) => {
        showError(this.errors, err instanceof ServiceError ? `${err.code}: ${err.message}` : String(err));
        return null;
      });
    if (!result) return;
    const repeated = this.lastEtag !== null && this.lastEtag === result.etag;
    this.lastEtag = result.etag;
    this.meta.textContent = `seed ${result.seed} — etag ${result.etag.slice(0, 12)}…${repeated ? " (identical to previous request)" : ""}`;
    clear(this.grid);
    this.grid.append(
      imageCard(this.api.url(`/v1/models/${this.modelId}/image`), "training image"),
    );
    result.images.forEach((url, i) => {
      this.grid.append(imageCard(this.api.url(url), `sample ${i} (start ${startScale})`));
    });
  }

  dispose(): void {
    this.request.cancel();
  }
}
