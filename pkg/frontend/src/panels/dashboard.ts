/**
 * Training dashboard: upload an image, queue a training job, watch the
 * per-scale loss curves live (1 s polling), and land on the trained
 * model when the job finishes.
 */

import { StudioApi, ServiceError } from "../api.js";
import { button, el, errorBox, fileToBlob, labeled, numberInput, showError } from "../dom.js";
import { LossBuffer, SeriesName, toPolyline } from "../losses.js";
import { poll, PollHandle } from "../poller.js";
import { UrlStateStore } from "../state.js";

const SERIES: { name: SeriesName; color: string }[] = [
  { name: "d_loss", color: "#d9534f" },
  { name: "g_adv", color: "#5b9bd5" },
  { name: "g_rec", color: "#58a55c" },
];

export class DashboardPanel {
  readonly root: HTMLElement;
  private handle: PollHandle | null = null;
  private readonly losses = new LossBuffer();
  private readonly status: HTMLElement;
  private readonly charts: HTMLElement;
  private readonly errors: HTMLElement;

  constructor(
    private readonly api: StudioApi,
    private readonly state: UrlStateStore,
    private readonly onModelReady: (modelId: string) => void,
  ) {
    const file = el("input", { type: "file", accept: "image/png,image/jpeg" });
    const iters = numberInput(2000, { min: "1", max: "20000" });
    const seed = numberInput(0, { min: "0" });
    const name = el("input", { type: "text", placeholder: "optional name" });
    this.errors = errorBox();
    this.status = el("div", { class: "status", text: "no job running" });
    this.charts = el("div", { class: "charts" });

    const start = button("train model", async () => {
      const blob = await fileToBlob(file);
      if (!blob) {
        showError(this.errors, "choose a training image first");
        return;
      }
      showError(this.errors, null);
      try {
        const { job_id } = await this.api.createModel(blob, {
          iters_per_scale: Number(iters.value),
          seed: Number(seed.value),
          name: name.value || undefined,
        });
        this.watch(job_id);
      } catch (err) {
        showError(this.errors, err instanceof ServiceError ? `${err.code}: ${err.message}` : String(err));
      }
    });

    this.root = el("section", { class: "panel" }, [
      el("h2", { text: "Training" }),
      el("form", { class: "controls" }, [
        labeled("image", file),
        labeled("iterations / scale", iters),
        labeled("seed", seed),
        labeled("name", name),
        start,
      ]),
      this.errors,
      this.status,
      this.charts,
    ]);
  }

  watch(jobId: string): void {
    this.handle?.stop();
    this.losses.clear();
    this.status.textContent = `job ${jobId}: queued`;
    this.handle = poll(async () => {
      const s = await this.api.jobStatus(jobId, this.losses.nextIndex);
      this.losses.absorb(s);
      const where =
        s.scale !== null && s.iter !== null
          ? ` — scale ${s.scale}, iteration ${s.iter}${s.iters_per_scale ? `/${s.iters_per_scale}` : ""}`
          : "";
      this.status.textContent = `job ${jobId}: ${s.state}${where}`;
      this.redraw();
      if (s.state === "done" && s.model_id) {
        this.status.textContent = `job ${jobId}: done — model ${s.model_id}`;
        this.state.update({ model: s.model_id });
        this.onModelReady(s.model_id);
        return false;
      }
      if (s.state === "failed") {
        showError(this.errors, s.error ?? "training failed");
        return false;
      }
      return true;
    }, 1000);
  }

  private redraw(): void {
    for (const scale of this.losses.scales()) {
      const id = `chart-scale-${scale}`;
      let canvas = this.charts.querySelector<HTMLCanvasElement>(`#${id}`);
      if (!canvas) {
        const block = el("div", { class: "chart-block" }, [
          el("h3", { text: `scale ${scale}` }),
        ]);
        canvas = el("canvas", { id, width: "420", height: "140" });
        block.append(canvas, this.legend());
        this.charts.append(block);
      }
      const ctx = canvas.getContext("2d");
      if (!ctx) continue;
      ctx.clearRect(0, 0, canvas.width, canvas.height);
      for (const { name, color } of SERIES) {
        const line = toPolyline(this.losses.series(scale, name), canvas.width, canvas.height);
        if (line.length < 2) continue;
        ctx.strokeStyle = color;
        ctx.lineWidth = 1;
        ctx.beginPath();
        ctx.moveTo(line[0].x, line[0].y);
        for (const p of line.slice(1)) ctx.lineTo(p.x, p.y);
        ctx.stroke();
      }
    }
  }

  private legend(): HTMLElement {
    return el(
      "div",
      { class: "legend" },
      SERIES.map(({ name, color }) =>
        el("span", { class: "legend-item" }, [
          el("i", { style: `background:${color}` }),
          name,
        ]),
      ),
    );
  }

  dispose(): void {
    this.handle?.stop();
  }
}
