"""Trained generator pyramids and the generation chain they share.

A GeneratorStack owns the per-scale generators (stored coarsest to
finest), the per-scale noise amplitudes, the fixed coarsest
reconstruction noise map and the cached reconstruction images. Scale
indices in the public API count from the finest level: scale 0 is full
resolution, scale ``coarsest_index`` (= N) is the smallest level.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
import numpy as np
import torch

from . import imaging
from .imaging import ScaleSchedule
from .nets import Generator, PaddingMode, noise_dims


def img_to_tensor(img: np.ndarray) -> torch.Tensor:
    """(H, W, C) float32 array -> (1, C, H, W) tensor."""
    img = imaging.as_image(img)
    return torch.from_numpy(np.ascontiguousarray(img.transpose(2, 0, 1)))[None]


def tensor_to_img(t: torch.Tensor) -> np.ndarray:
    """(1, C, H, W) tensor -> (H, W, C) float32 array (no clamping)."""
    return t.detach().cpu().numpy()[0].transpose(1, 2, 0).astype(np.float32)


def resize_tensor(t: torch.Tensor, dims: tuple[int, int]) -> torch.Tensor:
    """Resize through the canonical cubic resampler (clamps to [-1, 1]).

    Identical dims return the input unchanged so reconstruction paths
    stay bit-exact.
    """
    if tuple(t.shape[-2:]) == tuple(dims):
        return t
    return img_to_tensor(imaging.resize(tensor_to_img(t), dims))


def chain_step(
    gen: Generator,
    z: torch.Tensor,
    prev: torch.Tensor | None,
    dims: tuple[int, int],
    mode: PaddingMode,
    channels: int,
) -> torch.Tensor:
    """One pyramid scale: upsample the coarser image, refine, clamp.

    ``prev`` is the output of the coarser scale (or None at the coarsest
    scale, which makes the generation purely noise-driven).
    """
    if prev is None:
        prev_up = torch.zeros((1, channels) + tuple(dims), dtype=torch.float32)
    else:
        prev_up = resize_tensor(prev, dims)
    out = gen(z, prev_up, padding_mode=mode)
    return torch.clamp(out, -1.0, 1.0)


def hash_state_dict(module: torch.nn.Module) -> str:
    """Stable digest of a module's parameters and buffers."""
    h = hashlib.sha256()
    sd = module.state_dict()
    for name in sorted(sd):
        h.update(name.encode())
        h.update(np.ascontiguousarray(sd[name].detach().cpu().numpy()).tobytes())
    return h.hexdigest()


@dataclass
class GeneratorStack:
    """A fully trained pyramid plus everything needed to sample from it."""

    schedule: ScaleSchedule
    generators: list[Generator]          # coarsest -> finest
    sigmas: list[float]                  # coarsest -> finest
    z_star: np.ndarray                   # (1, C, h, w) fixed coarsest recon noise
    recon_images: list[np.ndarray]       # coarsest -> finest, (H, W, C) in [-1, 1]
    train_image: np.ndarray              # finest-level training image
    config: "object"                     # TrainConfig snapshot
    freeze_hashes: list[str] = field(default_factory=list)

    @property
    def coarsest_index(self) -> int:
        return self.schedule.coarsest

    @property
    def num_scales(self) -> int:
        return self.schedule.num_levels

    @property
    def channels(self) -> int:
        return self.train_image.shape[2]

    def _i(self, n: int) -> int:
        if not 0 <= n <= self.coarsest_index:
            raise IndexError(f"scale {n} outside [0, {self.coarsest_index}]")
        return self.coarsest_index - n

    def generator_at(self, n: int) -> Generator:
        return self.generators[self._i(n)]

    def sigma_at(self, n: int) -> float:
        return self.sigmas[self._i(n)]

    def recon_at(self, n: int) -> np.ndarray:
        return self.recon_images[self._i(n)]

    def dims_at(self, n: int) -> tuple[int, int]:
        return self.schedule.dims(n)

    def pyramid_image(self, n: int) -> np.ndarray:
        """The training image downsampled to level n."""
        if n == 0:
            return self.train_image.copy()
        return imaging.downsample(self.train_image, self.dims_at(n))

    def training_padding_mode(self) -> PaddingMode:
        return PaddingMode.parse(self.config.padding_mode)

    def reconstruction_noise(self, n: int, mode: PaddingMode | None = None) -> torch.Tensor:
        """The fixed reconstruction noise map for scale n (z* or zeros)."""
        mode = PaddingMode.parse(mode) if mode is not None else self.training_padding_mode()
        if n == self.coarsest_index:
            z = torch.from_numpy(self.z_star.copy())
            # z* is stored at the dims it was drawn with during training;
            # NOISE_PAD replays it zero-bordered at the oversized dims.
            want = noise_dims(self.dims_at(n), mode)
            if tuple(z.shape[-2:]) != want:
                z = _fit_noise(z, want)
            return z
        want = noise_dims(self.dims_at(n), mode)
        return torch.zeros((1, self.channels) + want, dtype=torch.float32)

    def run_reconstruction(self, mode: PaddingMode | None = None) -> list[np.ndarray]:
        """Replay the {z*, 0, ..., 0} path; returns per-scale outputs coarse->fine."""
        mode = PaddingMode.parse(mode) if mode is not None else self.training_padding_mode()
        outputs = []
        prev = None
        with torch.no_grad():
            for n in range(self.coarsest_index, -1, -1):
                z = self.reconstruction_noise(n, mode)
                prev = chain_step(
                    self.generator_at(n), z, prev, self.dims_at(n), mode, self.channels
                )
                outputs.append(tensor_to_img(prev))
        return outputs


def _fit_noise(z: torch.Tensor, dims: tuple[int, int]) -> torch.Tensor:
    """Zero-pad or center-crop a noise map to the requested dims."""
    h, w = z.shape[-2:]
    th, tw = dims
    if th >= h and tw >= w:
        pt, pl = (th - h) // 2, (tw - w) // 2
        return torch.nn.functional.pad(z, (pl, tw - w - pl, pt, th - h - pt))
    if th <= h and tw <= w:
        ot, ol = (h - th) // 2, (w - tw) // 2
        return z[..., ot : ot + th, ol : ol + tw]
    raise ValueError(f"cannot fit noise {(h, w)} to {dims}")


def draw_noise(
    rng: np.random.Generator,
    dims: tuple[int, int],
    channels: int,
    sigma: float,
) -> torch.Tensor:
    """Spatial Gaussian noise map as a (1, C, H, W) tensor."""
    if sigma == 0.0:
        return torch.zeros((1, channels) + tuple(dims), dtype=torch.float32)
    z = rng.standard_normal((1, channels) + tuple(dims), dtype=np.float32)
    return torch.from_numpy(z * np.float32(sigma))


def seed_from(*parts) -> int:
    """Deterministic 64-bit seed derived from arbitrary labelled parts."""
    h = hashlib.sha256("\x1f".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(h[:8], "little")


def rng_from(*parts) -> np.random.Generator:
    return np.random.default_rng(seed_from(*parts))
