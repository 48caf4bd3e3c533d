"""Image manipulation through scale injection.

Every task feeds an external image into the generator chain at a chosen
scale and lets the finer scales re-texture it: harmonization and editing
blend the result back into the original through a mask, paint-to-image
runs bare injection, super-resolution repeatedly injects the upsampled
image into the finest generator, and animation walks the noise maps
around the reconstruction set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch

from . import imaging
from .imaging import InvalidInputError
from .nets import PaddingMode, noise_dims
from .stack import (
    GeneratorStack,
    chain_step,
    draw_noise,
    img_to_tensor,
    rng_from,
    tensor_to_img,
)


@dataclass
class InjectionRequest:
    """An image to push through the pyramid from scale ``scale_n`` down.

    ``blend_mask`` (H, W) in [0, 1] at the finest dims composites the
    generated image over the original input outside the masked region.
    """

    input: np.ndarray
    scale_n: int
    add_noise: bool = True
    blend_mask: Optional[np.ndarray] = None
    seed: int = 0
    feather_radius: float = 0.0
    padding_mode: str = PaddingMode.INPUT_ZERO.value


@dataclass
class AnimationParams:
    """Random-walk controls: ``alpha`` pulls frames toward the original
    image, ``beta`` smooths the velocity of change."""

    alpha: float = 0.1
    beta: float = 0.9
    start_scale: Optional[int] = None
    frames: int = 30
    fps: int = 10
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise InvalidInputError(f"alpha must be in [0, 1], got {self.alpha}")
        if not 0.0 <= self.beta <= 1.0:
            raise InvalidInputError(f"beta must be in [0, 1], got {self.beta}")
        if self.frames < 1:
            raise InvalidInputError("frames must be >= 1")


@dataclass(frozen=True)
class SuperResConfig:
    """Upscale plan: factor ``s`` reached in ``k`` rounds of factor ``r``."""

    s: int
    k: int
    r: float
    alpha_rec: float = 100.0


def plan_super_resolution(s: int, max_k: int = 16) -> SuperResConfig:
    """Choose the round count k so the per-round factor s**(1/k) is
    closest to 4/3 (ties toward fewer rounds)."""
    if s < 1:
        raise InvalidInputError(f"upscale factor must be >= 1, got {s}")
    if s == 1:
        return SuperResConfig(s=1, k=1, r=1.0)
    target = 4.0 / 3.0
    best_k = min(range(1, max_k + 1), key=lambda k: (abs(s ** (1.0 / k) - target), k))
    return SuperResConfig(s=s, k=best_k, r=s ** (1.0 / best_k))


def super_resolution_dims(in_dims: tuple[int, int], cfg: SuperResConfig) -> list[tuple[int, int]]:
    """Target dims of every upsampling round; the last is exactly s x input."""
    h, w = int(in_dims[0]), int(in_dims[1])
    dims = []
    for j in range(1, cfg.k + 1):
        if j == cfg.k:
            dims.append((h * cfg.s, w * cfg.s))
        else:
            f = cfg.r**j
            dims.append((int(math.floor(h * f + 0.5)), int(math.floor(w * f + 0.5))))
    return dims


def inject(stack: GeneratorStack, req: InjectionRequest) -> np.ndarray:
    """Resize the input to the level-n dims and refine it through G_n..G_0."""
    n = int(req.scale_n)
    if n >= stack.coarsest_index:
        raise InvalidInputError(
            f"injection scale must be below the coarsest index {stack.coarsest_index}"
        )
    if n < 0:
        raise InvalidInputError(f"injection scale must be >= 0, got {n}")
    img = imaging.as_image(req.input)
    if img.shape[2] != stack.channels:
        raise InvalidInputError(
            f"input has {img.shape[2]} channels, stack expects {stack.channels}"
        )
    mode = PaddingMode.parse(req.padding_mode)
    y = img_to_tensor(imaging.resize(img, stack.dims_at(n)))
    with torch.no_grad():
        for k in range(n, -1, -1):
            dims = stack.dims_at(k)
            if req.add_noise:
                rng = rng_from(req.seed, "inject", k)
                z = draw_noise(rng, noise_dims(dims, mode), stack.channels, stack.sigma_at(k))
            else:
                z = torch.zeros((1, stack.channels) + noise_dims(dims, mode), dtype=torch.float32)
            y = chain_step(stack.generator_at(k), z, y, dims, mode, stack.channels)
    out = np.clip(tensor_to_img(y), -1.0, 1.0)

    if req.blend_mask is None:
        return out
    original = imaging.resize(img, stack.dims_at(0))
    mask = prepare_mask(req.blend_mask, stack.dims_at(0), req.feather_radius)
    return blend(out, original, mask)


def prepare_mask(
    mask: np.ndarray, dims: tuple[int, int], feather_radius: float = 0.0
) -> np.ndarray:
    """Validate a (H, W) mask in [0, 1]; optional Gaussian feathering."""
    m = np.asarray(mask, dtype=np.float32)
    if m.ndim == 3:
        m = m[:, :, 0]
    if m.ndim != 2:
        raise InvalidInputError(f"mask must be 2-D, got shape {mask.shape}")
    if m.shape != tuple(dims):
        raise InvalidInputError(f"mask dims {m.shape} must equal finest dims {tuple(dims)}")
    if m.min() < 0.0 or m.max() > 1.0:
        raise InvalidInputError("mask values must lie in [0, 1]")
    if feather_radius > 0.0:
        from scipy.ndimage import gaussian_filter

        m = gaussian_filter(m, sigma=feather_radius).astype(np.float32)
    return m


def blend(generated: np.ndarray, original: np.ndarray, mask: np.ndarray) -> np.ndarray:
    """mask * generated + (1 - mask) * original, pixelwise."""
    m = mask[:, :, None]
    return (m * generated + (1.0 - m) * original).astype(np.float32)


def harmonize(
    stack: GeneratorStack,
    composite: np.ndarray,
    mask: np.ndarray,
    scale: int,
    **kwargs,
) -> np.ndarray:
    """Re-texture a pasted object so it matches the background image."""
    req = InjectionRequest(input=composite, scale_n=scale, blend_mask=mask, **kwargs)
    return inject(stack, req)


def edit(
    stack: GeneratorStack,
    composite: np.ndarray,
    mask: np.ndarray,
    scale: int,
    **kwargs,
) -> np.ndarray:
    """Seamlessly stitch copy-pasted image regions (same mechanics as
    harmonization; presets differ)."""
    req = InjectionRequest(input=composite, scale_n=scale, blend_mask=mask, **kwargs)
    return inject(stack, req)


def paint_to_image(
    stack: GeneratorStack, clipart: np.ndarray, scale: int, **kwargs
) -> np.ndarray:
    """Turn a paint/clipart layout into a photo-realistic image (no mask)."""
    req = InjectionRequest(input=clipart, scale_n=scale, **kwargs)
    return inject(stack, req)


def super_resolve(
    lr_image: np.ndarray,
    cfg: SuperResConfig,
    stack: GeneratorStack,
    add_noise: bool = True,
    seed: int = 0,
) -> np.ndarray:
    """k rounds of (upsample by r, refine through the finest generator).

    ``stack`` must have been trained on ``lr_image`` in super-resolution
    mode (reconstruction weight 100, pyramid factor r).
    """
    img = imaging.as_image(lr_image)
    mode = stack.training_padding_mode()
    gen0 = stack.generator_at(0)
    sigma0 = stack.sigma_at(0)
    y = img_to_tensor(img)
    with torch.no_grad():
        for j, dims in enumerate(super_resolution_dims(img.shape[:2], cfg)):
            if tuple(y.shape[-2:]) != dims:
                y = img_to_tensor(imaging.upsample(tensor_to_img(y), dims))
            if add_noise:
                rng = rng_from(seed, "sr", j)
                z = draw_noise(rng, noise_dims(dims, mode), stack.channels, sigma0)
            else:
                z = torch.zeros((1, stack.channels) + noise_dims(dims, mode), dtype=torch.float32)
            y = torch.clamp(gen0(z, y, padding_mode=mode), -1.0, 1.0)
    return np.clip(tensor_to_img(y), -1.0, 1.0)


def walk_step(
    z_prev: torch.Tensor,
    z_curr: torch.Tensor,
    z_rec: torch.Tensor,
    u: torch.Tensor,
    alpha: float,
    beta: float,
) -> torch.Tensor:
    """One step of the noise random walk anchored at the reconstruction maps."""
    z_diff = beta * (z_curr - z_prev) + (1.0 - beta) * u
    return alpha * z_rec + (1.0 - alpha) * (z_curr + z_diff)


def animate(stack: GeneratorStack, params: AnimationParams) -> list[np.ndarray]:
    """Generate a temporally coherent frame sequence.

    Frame 0 reproduces the training image (walk starts at the
    reconstruction maps); scales coarser than ``start_scale`` keep their
    reconstruction maps for the whole clip. Uses noise-padded boundaries
    so corners stay lively.
    """
    mode = PaddingMode.NOISE_PAD
    n_start = stack.coarsest_index if params.start_scale is None else int(params.start_scale)
    if not 0 <= n_start <= stack.coarsest_index:
        raise InvalidInputError(
            f"start_scale {n_start} outside [0, {stack.coarsest_index}]"
        )
    rec = {n: stack.reconstruction_noise(n, mode) for n in range(stack.coarsest_index + 1)}
    curr = {n: rec[n].clone() for n in rec}
    prev = {n: rec[n].clone() for n in rec}  # z(-1) := z(0)

    frames = []
    for t in range(int(params.frames)):
        maps = [curr[n] for n in range(stack.coarsest_index, -1, -1)]
        frames.append(_render(stack, maps, mode))
        nxt = {}
        for n in range(stack.coarsest_index + 1):
            if n > n_start:
                nxt[n] = rec[n]
                continue
            rng = rng_from(params.seed, "animate", t, n)
            u = draw_noise(rng, tuple(rec[n].shape[-2:]), stack.channels, stack.sigma_at(n))
            nxt[n] = walk_step(prev[n], curr[n], rec[n], u, params.alpha, params.beta)
        prev, curr = curr, nxt
    return frames


def _render(stack: GeneratorStack, maps, mode: PaddingMode) -> np.ndarray:
    prev = None
    with torch.no_grad():
        for idx, n in enumerate(range(stack.coarsest_index, -1, -1)):
            prev = chain_step(
                stack.generator_at(n), maps[idx], prev, stack.dims_at(n), mode, stack.channels
            )
    return np.clip(tensor_to_img(prev), -1.0, 1.0)


def save_frames(frames, directory, gif_path=None, fps: int = 10) -> list[str]:
    """Write frames as a numbered PNG sequence, optionally an animated GIF."""
    import os

    from PIL import Image

    os.makedirs(directory, exist_ok=True)
    paths = []
    pils = []
    for i, frame in enumerate(frames):
        path = os.path.join(directory, f"frame_{i:04d}.png")
        imaging.save_image(frame, path)
        paths.append(path)
        pils.append(Image.fromarray(imaging.to_uint8(frame).squeeze(-1) if frame.shape[2] == 1 else imaging.to_uint8(frame)))
    if gif_path is not None and pils:
        duration = max(1, int(round(1000.0 / max(fps, 1))))
        pils[0].save(
            gif_path, save_all=True, append_images=pils[1:], duration=duration, loop=0
        )
        paths.append(str(gif_path))
    return paths
