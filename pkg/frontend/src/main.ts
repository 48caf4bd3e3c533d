/**
 * Studio bootstrap: a model picker, four panels behind tabs, and URL
 * state so sessions are shareable (model id, panel, scale, seed...).
 */

import { StudioApi } from "./api.js";
import { button, clear, el } from "./dom.js";
import { DashboardPanel } from "./panels/dashboard.js";
import { GalleryPanel } from "./panels/gallery.js";
import { InjectionPanel } from "./panels/injection.js";
import { AnimationPanel } from "./panels/animation.js";
import { StudioState, UrlStateStore } from "./state.js";

type PanelName = NonNullable<StudioState["panel"]>;

function boot(): void {
  const api = new StudioApi("");
  const state = new UrlStateStore(window);
  const rootEl = document.getElementById("app");
  if (!rootEl) throw new Error("missing #app container");

  const modelSelect = el("select", { class: "model-select" });
  const refreshModels = async (selected?: string) => {
    const models = await api.listModels().catch(() => []);
    clear(modelSelect);
    modelSelect.append(el("option", { value: "", text: "(choose a model)" }));
    for (const m of models) {
      modelSelect.append(
        el("option", {
          value: m.model_id,
          text: `${m.name ?? m.model_id} — ${m.levels[0][0]}x${m.levels[0][1]}, N=${m.coarsest_index}`,
        }),
      );
    }
    const want = selected ?? state.get().model;
    if (want && models.some((m) => m.model_id === want)) {
      modelSelect.value = want;
    }
  };

  const injection = new InjectionPanel(api, state);
  const gallery = new GalleryPanel(api, state);
  const animation = new AnimationPanel(api, state);
  const dashboard = new DashboardPanel(api, state, (modelId) => {
    void refreshModels(modelId).then(() => applyModel(modelId));
  });

  const panels: Record<PanelName, { root: HTMLElement }> = {
    dashboard,
    inject: injection,
    gallery,
    animate: animation,
  };

  const tabs = el("nav", { class: "tabs" });
  const content = el("main", { class: "content" });

  const show = (name: PanelName) => {
    state.update({ panel: name });
    clear(content);
    content.append(panels[name].root);
    for (const b of Array.from(tabs.querySelectorAll("button"))) {
      b.classList.toggle("active", b.dataset.panel === name);
    }
  };

  const tabDefs: [PanelName, string][] = [
    ["dashboard", "Training"],
    ["inject", "Injection explorer"],
    ["gallery", "Sample gallery"],
    ["animate", "Animation lab"],
  ];
  for (const [name, label] of tabDefs) {
    const b = button(label, () => show(name), "tab");
    b.dataset.panel = name;
    tabs.append(b);
  }

  const applyModel = (modelId: string) => {
    if (!modelId) return;
    state.update({ model: modelId });
    void injection.setModel(modelId);
    void gallery.setModel(modelId);
    void animation.setModel(modelId);
  };

  modelSelect.addEventListener("change", () => applyModel(modelSelect.value));

  rootEl.append(
    el("header", { class: "topbar" }, [
      el("h1", { text: "single-image generation studio" }),
      modelSelect,
    ]),
    tabs,
    content,
  );

  void refreshModels().then(() => {
    const st = state.get();
    if (st.model) applyModel(st.model);
    show(st.panel ?? "dashboard");
  });
}

boot();
