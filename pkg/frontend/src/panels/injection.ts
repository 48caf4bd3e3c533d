/**
 * Injection explorer: compose an input on a canvas over the training
 * image (or upload a composite), paint an optional mask, pick the
 * injection scale on a [0, N-1] slider, and compare results across
 * attempts. The coarser the injection scale, the larger the structures
 * the model may rewrite; fine scales only re-texture.
 */

import { PanelRequest, PresetsResponse, ServiceError, StudioApi } from "../api.js";
import { button, clear, el, errorBox, fileToBlob, imageCard, labeled, showError, slider } from "../dom.js";
import { MaskGrid } from "../mask.js";
import { fillFromInjectionPreset, injectionOptions } from "../presets.js";
import { UrlStateStore } from "../state.js";
import { checkInjectionScale, checkSeed, firstFailure, injectionSliderBounds } from "../validation.js";

export class InjectionPanel {
  readonly root: HTMLElement;
  private readonly request = new PanelRequest();
  private readonly errors: HTMLElement;
  private readonly results: HTMLElement;
  private readonly scaleSlider: HTMLInputElement;
  private readonly scaleLabel: HTMLElement;
  private readonly noiseToggle: HTMLInputElement;
  private readonly seedInput: HTMLInputElement;
  private readonly presetSelect: HTMLSelectElement;
  private readonly presetNote: HTMLElement;
  private readonly canvas: HTMLCanvasElement;
  private readonly maskCanvas: HTMLCanvasElement;
  private readonly brushToggle: HTMLInputElement;
  private mask: MaskGrid | null = null;
  private baseImage: ImageBitmap | null = null;
  private pasteImage: ImageBitmap | null = null;
  private modelId: string | null = null;
  private coarsest = 1;
  private drawing = false;
  private lastPoint: { x: number; y: number } | null = null;

  constructor(private readonly api: StudioApi, private readonly state: UrlStateStore) {
    this.errors = errorBox();
    this.results = el("div", { class: "gallery" });
    this.scaleSlider = slider(0, 0, 0);
    this.scaleLabel = el("span", { class: "value", text: "0" });
    this.noiseToggle = el("input", { type: "checkbox", checked: "checked" });
    this.seedInput = el("input", { type: "number", value: "0", min: "0" });
    this.presetSelect = el("select");
    this.presetNote = el("div", { class: "note" });
    this.canvas = el("canvas", { class: "compose", width: "256", height: "256" });
    this.maskCanvas = el("canvas", { class: "mask-overlay", width: "256", height: "256" });
    this.brushToggle = el("input", { type: "checkbox" });

    const composite = el("input", { type: "file", accept: "image/png,image/jpeg" });
    composite.addEventListener("change", async () => {
      const blob = await fileToBlob(composite);
      if (blob) {
        this.baseImage = await createImageBitmap(blob);
        this.fitCanvases(this.baseImage.width, this.baseImage.height);
        this.redrawCanvas();
      }
    });
    const pasteFile = el("input", { type: "file", accept: "image/png,image/jpeg" });
    pasteFile.addEventListener("change", async () => {
      const blob = await fileToBlob(pasteFile);
      if (blob) this.pasteImage = await createImageBitmap(blob);
    });

    this.scaleSlider.addEventListener("input", () => {
      this.scaleLabel.textContent = this.scaleSlider.value;
      this.state.update({ scale: Number(this.scaleSlider.value) });
      void this.run();
    });
    this.noiseToggle.addEventListener("change", () => {
      this.state.update({ noise: this.noiseToggle.checked });
      void this.run();
    });
    this.presetSelect.addEventListener("change", () => this.applyPreset());

    const stack = el("div", { class: "canvas-stack" }, [this.canvas, this.maskCanvas]);
    this.wirePointer();

    this.root = el("section", { class: "panel" }, [
      el("h2", { text: "Injection explorer" }),
      el("div", { class: "controls" }, [
        labeled("composite", composite),
        labeled("paste layer (click canvas to stamp)", pasteFile),
        labeled("preset", this.presetSelect),
        el("div", { class: "field" }, [
          el("span", { text: "injection scale (0 = finest)" }),
          this.scaleSlider,
          this.scaleLabel,
        ]),
        labeled("add noise", this.noiseToggle),
        labeled("seed", this.seedInput),
        labeled("mask brush", this.brushToggle),
        button("clear mask", () => {
          this.mask?.clear();
          this.redrawMask();
        }),
        button("inject", () => void this.run()),
      ]),
      this.presetNote,
      this.errors,
      stack,
      this.results,
    ]);
  }

  async setModel(modelId: string): Promise<void> {
    this.modelId = modelId;
    const [manifest, presets] = await Promise.all([
      this.api.manifest(modelId),
      this.api.presets(modelId),
    ]);
    this.coarsest = manifest.coarsest_index;
    const bounds = injectionSliderBounds(this.coarsest);
    this.scaleSlider.min = String(bounds.min);
    this.scaleSlider.max = String(bounds.max);
    const fromUrl = this.state.get().scale;
    const scale = fromUrl !== undefined && checkInjectionScale(fromUrl, this.coarsest).ok ? fromUrl : 0;
    this.scaleSlider.value = String(scale);
    this.scaleLabel.textContent = String(scale);
    this.populatePresets(presets);

    const img = new Image();
    img.src = this.api.url(`/v1/models/${modelId}/image`);
    await img.decode().catch(() => undefined);
    if (img.naturalWidth > 0) {
      this.baseImage = await createImageBitmap(img);
      this.fitCanvases(img.naturalWidth, img.naturalHeight);
      this.redrawCanvas();
    }
  }

  private populatePresets(presets: PresetsResponse): void {
    clear(this.presetSelect);
    this.presetSelect.append(el("option", { value: "", text: "(no preset)" }));
    for (const option of injectionOptions(presets.presets)) {
      this.presetSelect.append(el("option", { value: option.key, text: option.label }));
    }
    const urlPreset = this.state.get().preset;
    if (urlPreset) {
      this.presetSelect.value = urlPreset;
      this.applyPreset(false);
    }
  }

  private applyPreset(rerun = true): void {
    const key = this.presetSelect.value;
    this.presetNote.textContent = "";
    if (!key || !this.modelId) return;
    const [task, ...nameParts] = key.split("/");
    const name = nameParts.join("/");
    void this.api.presets(this.modelId).then((presets) => {
      const option = injectionOptions(presets.presets).find(
        (o) => o.task === task && o.name === name,
      );
      if (!option) return;
      const fill = fillFromInjectionPreset(option, this.coarsest);
      this.scaleSlider.value = String(fill.scale);
      this.scaleLabel.textContent = String(fill.scale);
      this.state.update({ scale: fill.scale, preset: key, task });
      this.presetNote.textContent =
        fill.depthWarning ?? `preset ${name}: n=${option.scale}, N=${option.numScales}`;
      if (rerun) void this.run();
    });
  }

  private fitCanvases(width: number, height: number): void {
    for (const c of [this.canvas, this.maskCanvas]) {
      c.width = width;
      c.height = height;
    }
    this.mask = new MaskGrid(width, height);
  }

  private redrawCanvas(): void {
    const ctx = this.canvas.getContext("2d");
    if (!ctx) return;
    ctx.clearRect(0, 0, this.canvas.width, this.canvas.height);
    if (this.baseImage) ctx.drawImage(this.baseImage, 0, 0);
  }

  private redrawMask(): void {
    const ctx = this.maskCanvas.getContext("2d");
    if (!ctx || !this.mask) return;
    ctx.clearRect(0, 0, this.maskCanvas.width, this.maskCanvas.height);
    const rgba = this.mask.toRgba();
    for (let i = 0; i < rgba.length; i += 4) {
      rgba[i + 3] = rgba[i] > 0 ? 96 : 0; // translucent overlay
    }
    ctx.putImageData(new ImageData(rgba, this.mask.width, this.mask.height), 0, 0);
  }

  private wirePointer(): void {
    const position = (ev: PointerEvent) => {
      const rect = this.maskCanvas.getBoundingClientRect();
      return {
        x: ((ev.clientX - rect.left) / rect.width) * this.maskCanvas.width,
        y: ((ev.clientY - rect.top) / rect.height) * this.maskCanvas.height,
      };
    };
    this.maskCanvas.addEventListener("pointerdown", (ev) => {
      const p = position(ev);
      if (this.brushToggle.checked && this.mask) {
        this.drawing = true;
        this.lastPoint = p;
        this.mask.stroke(p.x, p.y, 6, ev.shiftKey);
        this.redrawMask();
      } else if (this.pasteImage) {
        const ctx = this.canvas.getContext("2d");
        ctx?.drawImage(
          this.pasteImage,
          p.x - this.pasteImage.width / 2,
          p.y - this.pasteImage.height / 2,
        );
      }
    });
    this.maskCanvas.addEventListener("pointermove", (ev) => {
      if (!this.drawing || !this.mask || !this.lastPoint) return;
      const p = position(ev);
      this.mask.line(this.lastPoint.x, this.lastPoint.y, p.x, p.y, 6, ev.shiftKey);
      this.lastPoint = p;
      this.redrawMask();
    });
    const stop = () => {
      this.drawing = false;
      this.lastPoint = null;
    };
    this.maskCanvas.addEventListener("pointerup", stop);
    this.maskCanvas.addEventListener("pointerleave", stop);
  }

  private async canvasBlob(canvas: HTMLCanvasElement): Promise<Blob> {
    return new Promise((resolve, reject) => {
      canvas.toBlob((b) => (b ? resolve(b) : reject(new Error("canvas export failed"))), "image/png");
    });
  }

  private async maskBlob(): Promise<Blob | undefined> {
    if (!this.mask || this.mask.isEmpty()) return undefined;
    const tmp = document.createElement("canvas");
    tmp.width = this.mask.width;
    tmp.height = this.mask.height;
    const ctx = tmp.getContext("2d");
    if (!ctx) return undefined;
    ctx.putImageData(new ImageData(this.mask.toRgba(), tmp.width, tmp.height), 0, 0);
    return this.canvasBlob(tmp);
  }

  async run(): Promise<void> {
    if (!this.modelId || !this.baseImage) return;
    const scale = Number(this.scaleSlider.value);
    const seed = Number(this.seedInput.value);
    const check = firstFailure(
      checkInjectionScale(scale, this.coarsest),
      checkSeed(seed),
    );
    if (!check.ok) {
      showError(this.errors, check.message ?? "invalid parameters");
      return;
    }
    showError(this.errors, null);
    const image = await this.canvasBlob(this.canvas);
    const mask = await this.maskBlob();
    const result = await this.request.run((signal) =>
      this.api.inject(
        this.modelId!,
        image,
        { scale, noise: this.noiseToggle.checked, seed, mask },
        signal,
      ),
    ).catch((err) => {
      showError(this.errors, err instanceof ServiceError ? `${err.code}: ${err.message}` : String(err));
      return null;
    });
    if (result) {
      this.results.prepend(
        imageCard(this.api.url(result.image), `scale ${result.scale}${mask ? ", masked" : ""}`),
      );
    }
  }

  dispose(): void {
    this.request.cancel();
  }
}
