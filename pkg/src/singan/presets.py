"""Curated per-image manipulation settings, shipped as a JSON registry.

Injection tasks record the scale an image is fed into and the pyramid
depth it was tuned for; animation entries add the random-walk anchor and
smoothness parameters.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from typing import Optional

INJECTION_TASKS = ("harmonization", "editing", "paint_to_image")
ALL_TASKS = INJECTION_TASKS + ("animation",)


class PresetError(KeyError):
    pass


@dataclass(frozen=True)
class InjectionPreset:
    task: str
    name: str
    scale: int
    num_scales: int


@dataclass(frozen=True)
class AnimationPreset:
    name: str
    start_scale: int
    num_scales: int
    alpha: float
    beta: float
    task: str = "animation"


class PresetRegistry:
    def __init__(self, raw: dict):
        self._raw = raw
        self._validate()

    @classmethod
    def load_default(cls) -> "PresetRegistry":
        text = resources.files("singan").joinpath("data/presets.json").read_text()
        return cls(json.loads(text))

    @classmethod
    def load_file(cls, path) -> "PresetRegistry":
        with open(path) as f:
            return cls(json.load(f))

    def _validate(self) -> None:
        for task in ALL_TASKS:
            if task not in self._raw:
                raise PresetError(f"registry missing task table {task!r}")
        for task in INJECTION_TASKS:
            for name, row in self._raw[task].items():
                scale, total = int(row["scale"]), int(row["num_scales"])
                if not 0 <= scale < total:
                    raise PresetError(f"{task}/{name}: scale {scale} not below N={total}")
        for name, row in self._raw["animation"].items():
            if not 0 <= int(row["start_scale"]) <= int(row["num_scales"]):
                raise PresetError(f"animation/{name}: start scale outside [0, N]")
            for key in ("alpha", "beta"):
                if not 0.0 <= float(row[key]) <= 1.0:
                    raise PresetError(f"animation/{name}: {key} outside [0, 1]")

    def raw(self) -> dict:
        return self._raw

    def names(self, task: str) -> list[str]:
        if task not in ALL_TASKS:
            raise PresetError(f"unknown preset task {task!r}")
        return list(self._raw[task])

    def injection(self, task: str, name: str) -> InjectionPreset:
        if task not in INJECTION_TASKS:
            raise PresetError(f"unknown injection task {task!r}")
        try:
            row = self._raw[task][name]
        except KeyError:
            raise PresetError(f"no preset {name!r} under {task}") from None
        return InjectionPreset(
            task=task, name=name, scale=int(row["scale"]), num_scales=int(row["num_scales"])
        )

    def animation(self, name: str) -> AnimationPreset:
        try:
            row = self._raw["animation"][name]
        except KeyError:
            raise PresetError(f"no animation preset {name!r}") from None
        return AnimationPreset(
            name=name,
            start_scale=int(row["start_scale"]),
            num_scales=int(row["num_scales"]),
            alpha=float(row["alpha"]),
            beta=float(row["beta"]),
        )

    def find_injection(self, name: str, task: Optional[str] = None) -> InjectionPreset:
        """Look a preset up by name; ambiguous names require a task."""
        if task is not None:
            return self.injection(task, name)
        hits = [t for t in INJECTION_TASKS if name in self._raw[t]]
        if not hits:
            raise PresetError(f"no injection preset named {name!r}")
        if len(hits) > 1:
            raise PresetError(
                f"preset name {name!r} is ambiguous across tasks {hits}; specify one"
            )
        return self.injection(hits[0], name)


def load_registry() -> PresetRegistry:
    return PresetRegistry.load_default()
