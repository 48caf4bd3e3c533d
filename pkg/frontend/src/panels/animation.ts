/**
 * Animation lab: walk the noise maps around the reconstruction set.
 * Alpha (anchor strength) and beta (velocity smoothing) live on [0, 1]
 * sliders backed by validation; frames play in-place and the animated
 * GIF is linked for download.
 */

import { PanelRequest, PresetsResponse, ServiceError, StudioApi } from "../api.js";
import { button, clear, el, errorBox, labeled, numberInput, showError, slider } from "../dom.js";
import { animationOptions } from "../presets.js";
import { UrlStateStore } from "../state.js";
import { checkAlpha, checkBeta, checkFrames, checkSeed, checkStartScale, firstFailure, startScaleSliderBounds } from "../validation.js";

export class AnimationPanel {
  readonly root: HTMLElement;
  private readonly request = new PanelRequest();
  private readonly errors: HTMLElement;
  private readonly alphaSlider: HTMLInputElement;
  private readonly alphaLabel: HTMLElement;
  private readonly betaSlider: HTMLInputElement;
  private readonly betaLabel: HTMLElement;
  private readonly startSelect: HTMLSelectElement;
  private readonly framesInput: HTMLInputElement;
  private readonly seedInput: HTMLInputElement;
  private readonly presetSelect: HTMLSelectElement;
  private readonly presetNote: HTMLElement;
  private readonly viewer: HTMLImageElement;
  private readonly gifLink: HTMLAnchorElement;
  private modelId: string | null = null;
  private coarsest = 0;
  private frameUrls: string[] = [];
  private player: number | null = null;

  constructor(private readonly api: StudioApi, private readonly state: UrlStateStore) {
    this.errors = errorBox();
    this.alphaSlider = slider(0, 1, 0.1, 0.01);
    this.alphaLabel = el("span", { class: "value", text: "0.10" });
    this.betaSlider = slider(0, 1, 0.9, 0.01);
    this.betaLabel = el("span", { class: "value", text: "0.90" });
    this.startSelect = el("select");
    this.framesInput = numberInput(24, { min: "1", max: "300" });
    this.seedInput = numberInput(0, { min: "0" });
    this.presetSelect = el("select");
    this.presetNote = el("div", { class: "note" });
    this.viewer = el("img", { class: "player", alt: "animation frame" });
    this.gifLink = el("a", { text: "download gif", class: "gif-link" });

    this.alphaSlider.addEventListener("input", () => {
      this.alphaLabel.textContent = Number(this.alphaSlider.value).toFixed(2);
      this.state.update({ alpha: Number(this.alphaSlider.value) });
    });
    this.betaSlider.addEventListener("input", () => {
      this.betaLabel.textContent = Number(this.betaSlider.value).toFixed(2);
      this.state.update({ beta: Number(this.betaSlider.value) });
    });
    this.presetSelect.addEventListener("change", () => this.applyPreset());

    this.root = el("section", { class: "panel" }, [
      el("h2", { text: "Animation lab" }),
      el("div", { class: "controls" }, [
        labeled("preset", this.presetSelect),
        el("div", { class: "field" }, [
          el("span", { text: "alpha (pull toward the original)" }),
          this.alphaSlider,
          this.alphaLabel,
        ]),
        el("div", { class: "field" }, [
          el("span", { text: "beta (motion smoothness)" }),
          this.betaSlider,
          this.betaLabel,
        ]),
        labeled("start scale", this.startSelect),
        labeled("frames", this.framesInput),
        labeled("seed", this.seedInput),
        button("animate", () => void this.run()),
      ]),
      this.presetNote,
      this.errors,
      el("div", { class: "player-row" }, [this.viewer, this.gifLink]),
    ]);
  }

  async setModel(modelId: string): Promise<void> {
    this.modelId = modelId;
    const [manifest, presets] = await Promise.all([
      this.api.manifest(modelId),
      this.api.presets(modelId),
    ]);
    this.coarsest = manifest.coarsest_index;
    clear(this.startSelect);
    const bounds = startScaleSliderBounds(this.coarsest);
    for (let n = bounds.max; n >= bounds.min; n--) {
      this.startSelect.append(el("option", { value: String(n), text: `scale ${n}` }));
    }
    this.startSelect.value = String(this.coarsest);
    this.populatePresets(presets);
    const st = this.state.get();
    if (st.alpha !== undefined && checkAlpha(st.alpha).ok) {
      this.alphaSlider.value = String(st.alpha);
      this.alphaLabel.textContent = st.alpha.toFixed(2);
    }
    if (st.beta !== undefined && checkBeta(st.beta).ok) {
      this.betaSlider.value = String(st.beta);
      this.betaLabel.textContent = st.beta.toFixed(2);
    }
  }

  private populatePresets(presets: PresetsResponse): void {
    clear(this.presetSelect);
    this.presetSelect.append(el("option", { value: "", text: "(no preset)" }));
    for (const option of animationOptions(presets.presets)) {
      this.presetSelect.append(el("option", { value: option.name, text: option.label }));
    }
  }

  private applyPreset(): void {
    const name = this.presetSelect.value;
    this.presetNote.textContent = "";
    if (!name || !this.modelId) return;
    void this.api.presets(this.modelId).then((presets) => {
      const option = animationOptions(presets.presets).find((o) => o.name === name);
      if (!option) return;
      this.alphaSlider.value = String(option.alpha);
      this.alphaLabel.textContent = option.alpha.toFixed(2);
      this.betaSlider.value = String(option.beta);
      this.betaLabel.textContent = option.beta.toFixed(2);
      const start = Math.min(option.startScale, this.coarsest);
      this.startSelect.value = String(start);
      this.state.update({ alpha: option.alpha, beta: option.beta, startScale: start });
      this.presetNote.textContent =
        option.numScales !== this.coarsest
          ? `preset "${name}" was tuned for N=${option.numScales}; this model has N=${this.coarsest}`
          : `preset "${name}" applied`;
    });
  }

  async run(): Promise<void> {
    if (!this.modelId) return;
    const alpha = Number(this.alphaSlider.value);
    const beta = Number(this.betaSlider.value);
    const startScale = Number(this.startSelect.value);
    const frames = Number(this.framesInput.value);
    const seed = Number(this.seedInput.value);
    const check = firstFailure(
      checkAlpha(alpha),
      checkBeta(beta),
      checkStartScale(startScale, this.coarsest),
      checkFrames(frames),
      checkSeed(seed),
    );
    if (!check.ok) {
      showError(this.errors, check.message ?? "invalid parameters");
      return;
    }
    showError(this.errors, null);
    this.state.update({ alpha, beta, startScale, frames });
    const result = await this.request
      .run((signal) =>
        this.api.animate(
          this.modelId!,
          { alpha, beta, start_scale: startScale, frames, seed },
          signal,
        ),
      )
      .catch((err) => {
        showError(this.errors, err instanceof ServiceError ? `${err.code}: ${err.message}` : String(err));
        return null;
      });
    if (!result) return;
    this.frameUrls = result.frames.map((u) => this.api.url(u));
    if (result.gif) {
      this.gifLink.href = this.api.url(result.gif);
      this.gifLink.style.display = "inline";
    }
    this.play();
  }

  private play(): void {
    if (this.player !== null) window.clearInterval(this.player);
    if (this.frameUrls.length === 0) return;
    let i = 0;
    this.viewer.src = this.frameUrls[0];
    this.player = window.setInterval(() => {
      i = (i + 1) % this.frameUrls.length;
      this.viewer.src = this.frameUrls[i];
    }, 100);
  }

  dispose(): void {
    this.request.cancel();
    if (this.player !== null) window.clearInterval(this.player);
  }
}
