/**
 * Preset handling: flatten the registry tables for the dropdown and
 * auto-fill panel parameters from a chosen row.
 */

import type { AnimationPresetRow, InjectionPresetRow, PresetTables } from "./api.js";

export type InjectionTask = "harmonization" | "editing" | "paint_to_image";

export const INJECTION_TASKS: InjectionTask[] = [
  "harmonization",
  "editing",
  "paint_to_image",
];

export interface InjectionPresetOption {
  task: InjectionTask;
  name: string;
  scale: number;
  numScales: number;
  /** Stable dropdown value: presets named identically across tasks stay distinct. */
  key: string;
  label: string;
}

export function injectionOptions(tables: PresetTables): InjectionPresetOption[] {
  const options: InjectionPresetOption[] = [];
  for (const task of INJECTION_TASKS) {
    const rows: Record<string, InjectionPresetRow> = tables[task];
    for (const [name, row] of Object.entries(rows)) {
      options.push({
        task,
        name,
        scale: row.scale,
        numScales: row.num_scales,
        key: `${task}/${name}`,
        label: `${name} (${task.replace(/_/g, " ")}, n=${row.scale}, N=${row.num_scales})`,
      });
    }
  }
  return options;
}

export function findInjectionOption(
  tables: PresetTables,
  key: string,
): InjectionPresetOption | undefined {
  return injectionOptions(tables).find((o) => o.key === key);
}

export interface AnimationPresetOption {
  name: string;
  startScale: number;
  numScales: number;
  alpha: number;
  beta: number;
  label: string;
}

export function animationOptions(tables: PresetTables): AnimationPresetOption[] {
  return Object.entries(tables.animation).map(([name, row]: [string, AnimationPresetRow]) => ({
    name,
    startScale: row.start_scale,
    numScales: row.num_scales,
    alpha: row.alpha,
    beta: row.beta,
    label: `${name} (n=${row.start_scale}, N=${row.num_scales}, a=${row.alpha}, b=${row.beta})`,
  }));
}

export interface PresetFill {
  scale: number;
  numScales: number;
  /** Set when the preset was tuned for a different pyramid depth. */
  depthWarning?: string;
}

/**
 * Auto-fill the injection scale from a preset, clamping into the
 * model's valid range and warning when the depths disagree.
 */
export function fillFromInjectionPreset(
  option: InjectionPresetOption,
  modelCoarsestIndex: number,
): PresetFill {
  const maxScale = Math.max(modelCoarsestIndex - 1, 0);
  const scale = Math.min(option.scale, maxScale);
  const fill: PresetFill = { scale, numScales: option.numScales };
  if (option.numScales !== modelCoarsestIndex) {
    fill.depthWarning =
      `preset "${option.name}" was tuned for N=${option.numScales}; ` +
      `this model has N=${modelCoarsestIndex}`;
  }
  return fill;
}
