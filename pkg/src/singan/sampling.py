"""Inference-time generation from a trained pyramid.

Supports full generation from the coarsest scale, reduced-variability
generation seeded with the downsampled training image at an intermediate
scale, arbitrary output dimensions (noise maps are resized level by
level), and the sample statistics used for evaluation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import torch

from . import imaging
from .imaging import InvalidInputError, level_dims
from .nets import RECEPTIVE_FIELD, PaddingMode, noise_dims
from .stack import (
    GeneratorStack,
    chain_step,
    draw_noise,
    img_to_tensor,
    rng_from,
    tensor_to_img,
)


@dataclass
class SampleRequest:
    """Parameters of one generation call.

    ``start_scale`` counts from the finest level (0) to the coarsest (N);
    starting below N keeps the global structure of the training image and
    randomizes only finer scales. ``height``/``width`` default to the
    training dims; all intermediate levels are rescaled proportionally.
    """

    start_scale: Optional[int] = None
    height: Optional[int] = None
    width: Optional[int] = None
    padding_mode: str = PaddingMode.INPUT_ZERO.value
    seed: Optional[int] = None
    count: int = 1


def derived_levels(stack: GeneratorStack, out_dims: tuple[int, int]) -> list[tuple[int, int]]:
    """Per-level dims for an arbitrary finest-level output size."""
    return [level_dims(out_dims, stack.schedule.r, n) for n in range(stack.num_scales)]


def _resolve(stack: GeneratorStack, req: SampleRequest):
    n_start = stack.coarsest_index if req.start_scale is None else int(req.start_scale)
    if not 0 <= n_start <= stack.coarsest_index:
        raise InvalidInputError(
            f"start_scale {n_start} outside [0, {stack.coarsest_index}]"
        )
    th, tw = stack.dims_at(0)
    out_dims = (int(req.height or th), int(req.width or tw))
    if out_dims[0] < 1 or out_dims[1] < 1:
        raise InvalidInputError(f"output dims must be positive, got {out_dims}")
    levels = derived_levels(stack, out_dims)
    for n in range(0, n_start + 1):
        if min(levels[n]) < RECEPTIVE_FIELD:
            raise InvalidInputError(
                f"level {n} dims {levels[n]} fall below the {RECEPTIVE_FIELD}px receptive field"
            )
    mode = PaddingMode.parse(req.padding_mode)
    return n_start, levels, mode


def generate(
    stack: GeneratorStack,
    req: SampleRequest,
    noise_maps: Optional[Sequence[torch.Tensor]] = None,
) -> list[np.ndarray]:
    """Draw ``req.count`` samples; returns (H, W, C) arrays in [-1, 1].

    When ``noise_maps`` is given (ordered coarsest to finest, one map per
    scale from the coarsest down to ``start_scale``... 0), those exact
    maps are used instead of random draws — passing the reconstruction
    set {z*, 0, ..., 0} reproduces the cached reconstruction bit for bit.
    """
    n_start, levels, mode = _resolve(stack, req)
    seed = req.seed if req.seed is not None else int(np.random.SeedSequence().entropy % (2**63))
    outputs = []
    for k in range(int(req.count)):
        prev = None
        if n_start < stack.coarsest_index:
            prev = img_to_tensor(
                imaging.resize(stack.train_image, levels[n_start + 1])
            )
        with torch.no_grad():
            for n in range(n_start, -1, -1):
                if noise_maps is not None:
                    z = noise_maps[stack.coarsest_index - n]
                else:
                    rng = rng_from(seed, "sample", k, n)
                    z = draw_noise(
                        rng, noise_dims(levels[n], mode), stack.channels, stack.sigma_at(n)
                    )
                prev = chain_step(
                    stack.generator_at(n), z, prev, levels[n], mode, stack.channels
                )
        outputs.append(np.clip(tensor_to_img(prev), -1.0, 1.0))
    return outputs


def reconstruction_noise_maps(stack: GeneratorStack, mode: PaddingMode | str | None = None) -> list[torch.Tensor]:
    """The fixed {z*, 0, ..., 0} map set, ordered coarsest to finest."""
    mode = PaddingMode.parse(mode) if mode is not None else stack.training_padding_mode()
    return [
        stack.reconstruction_noise(n, mode)
        for n in range(stack.coarsest_index, -1, -1)
    ]


def sample_stack_array(samples: Sequence[np.ndarray]) -> np.ndarray:
    return np.stack([np.asarray(s, dtype=np.float32) for s in samples], axis=0)


def diversity_map(
    stack: GeneratorStack,
    start_scale: Optional[int] = None,
    count: int = 100,
    seed: int = 0,
    padding_mode: str = PaddingMode.INPUT_ZERO.value,
) -> tuple[np.ndarray, float]:
    """Per-pixel std over generated samples and its normalized mean.

    The scalar is the mean of the std map divided by the std of the
    training image's intensity values.
    """
    if count < 2:
        raise InvalidInputError("diversity needs at least 2 samples")
    req = SampleRequest(
        start_scale=start_scale, seed=seed, count=count, padding_mode=padding_mode
    )
    samples = sample_stack_array(generate(stack, req))
    return diversity_from_samples(samples, stack.train_image)


def diversity_from_samples(
    samples: np.ndarray, train_image: np.ndarray
) -> tuple[np.ndarray, float]:
    """Diversity statistic of an explicit (K, H, W, C) sample array."""
    std_map = samples.astype(np.float64).std(axis=0)
    ref = float(np.asarray(train_image, dtype=np.float64).std())
    scalar = float(std_map.mean() / ref) if ref > 0 else 0.0
    return std_map.astype(np.float32), scalar


def corner_variability(
    stack: GeneratorStack,
    padding_mode: PaddingMode | str,
    count: int = 50,
    seed: int = 0,
    window: int = 5,
) -> float:
    """Mean per-pixel std over the four window x window image corners.

    Lower values mean the boundary policy pins the corners down; used to
    compare LAYER_ZERO, INPUT_ZERO and NOISE_PAD on one trained stack.
    """
    mode = PaddingMode.parse(padding_mode)
    req = SampleRequest(seed=seed, count=count, padding_mode=mode.value)
    samples = sample_stack_array(generate(stack, req))
    std_map = samples.astype(np.float64).std(axis=0)
    h, w = std_map.shape[:2]
    win = min(window, h, w)
    corners = [
        std_map[:win, :win],
        std_map[:win, w - win :],
        std_map[h - win :, :win],
        std_map[h - win :, w - win :],
    ]
    return float(np.mean([c.mean() for c in corners]))
