"""Image I/O, value-range normalization, scale schedules and resampling.

Images are numpy float32 arrays of shape (H, W, C) with C in {1, 3} and
values in [-1, 1]. 8-bit PNG/JPEG channel values map linearly onto that
range. All resampling goes through a single separable cubic-convolution
kernel (Catmull-Rom, a=-0.5) with kernel-width scaling for anti-aliased
downsampling, so every resize in the system is reproducible bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from PIL import Image


class InvalidInputError(ValueError):
    """Raised when an image or dimension argument violates a precondition."""


# ---------------------------------------------------------------------------
# Image values
# ---------------------------------------------------------------------------

def as_image(arr: np.ndarray) -> np.ndarray:
    """Validate and coerce an array into the internal image format.

    Accepts (H, W) or (H, W, C) input; returns float32 (H, W, C) with
    C in {1, 3}. Raises InvalidInputError on non-finite values or
    unsupported channel counts.
    """
    a = np.asarray(arr, dtype=np.float32)
    if a.ndim == 2:
        a = a[:, :, None]
    if a.ndim != 3 or a.shape[2] not in (1, 3):
        raise InvalidInputError(f"expected (H, W, 1|3) image, got shape {arr.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise InvalidInputError(f"empty image: shape {arr.shape}")
    if not np.isfinite(a).all():
        raise InvalidInputError("image contains non-finite values")
    return a


def load_image(path) -> np.ndarray:
    """Read a PNG/JPEG file into a float32 (H, W, C) array in [-1, 1]."""
    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            im = im.convert("L")
        elif im.mode != "RGB":
            im = im.convert("RGB")
        data = np.asarray(im, dtype=np.float32)
    return as_image(data / 255.0 * 2.0 - 1.0)


def save_image(img: np.ndarray, path) -> None:
    """Write an image in [-1, 1] to an 8-bit PNG/JPEG file."""
    arr = to_uint8(img)
    if arr.shape[2] == 1:
        pil = Image.fromarray(arr[:, :, 0], mode="L")
    else:
        pil = Image.fromarray(arr, mode="RGB")
    pil.save(path)


def to_uint8(img: np.ndarray) -> np.ndarray:
    img = as_image(img)
    scaled = (np.clip(img, -1.0, 1.0) + 1.0) / 2.0 * 255.0
    return np.floor(scaled + 0.5).astype(np.uint8)


def encode_png(img: np.ndarray) -> bytes:
    """PNG-encode an image in [-1, 1]; used by the service and CLI."""
    import io

    buf = io.BytesIO()
    arr = to_uint8(img)
    if arr.shape[2] == 1:
        Image.fromarray(arr[:, :, 0], mode="L").save(buf, format="PNG")
    else:
        Image.fromarray(arr, mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


# ---------------------------------------------------------------------------
# Resampling
# ---------------------------------------------------------------------------

_CUBIC_A = -0.5  # Catmull-Rom


def _cubic_kernel(x: np.ndarray) -> np.ndarray:
    a = _CUBIC_A
    ax = np.abs(x)
    ax2 = ax * ax
    ax3 = ax2 * ax
    inner = (a + 2.0) * ax3 - (a + 3.0) * ax2 + 1.0
    outer = a * ax3 - 5.0 * a * ax2 + 8.0 * a * ax - 4.0 * a
    return np.where(ax <= 1.0, inner, np.where(ax < 2.0, outer, 0.0))


def resample_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Dense (n_out, n_in) weight matrix for 1-D cubic resampling.

    Uses half-pixel-centred sample positions. When shrinking, the kernel
    is widened by the scale ratio (anti-aliasing). Border taps are folded
    onto the edge samples and each row is normalized to sum to 1, so
    constant signals are preserved exactly up to float rounding.
    """
    if n_in < 1 or n_out < 1:
        raise InvalidInputError("resample sizes must be positive")
    scale = n_in / n_out
    support = max(scale, 1.0)
    radius = 2.0 * support
    mat = np.zeros((n_out, n_in), dtype=np.float64)
    for i in range(n_out):
        center = (i + 0.5) * scale - 0.5
        lo = int(math.floor(center - radius))
        hi = int(math.ceil(center + radius))
        taps = np.arange(lo, hi + 1)
        w = _cubic_kernel((taps - center) / support)
        total = w.sum()
        if total == 0.0:
            raise InvalidInputError("degenerate resampling weights")
        w = w / total
        clamped = np.clip(taps, 0, n_in - 1)
        np.add.at(mat[i], clamped, w)
    return mat


def resize(img: np.ndarray, target_dims: tuple[int, int]) -> np.ndarray:
    """Resample an image to (height, width) with the cubic kernel.

    Direction-agnostic; each axis may independently grow or shrink.
    Output is clamped to [-1, 1].
    """
    img = as_image(img)
    th, tw = int(target_dims[0]), int(target_dims[1])
    if th < 1 or tw < 1:
        raise InvalidInputError(f"target dims must be positive, got {target_dims}")
    h, w = img.shape[:2]
    out = img.astype(np.float64)
    if th != h:
        mat_h = resample_matrix(h, th)
        out = np.einsum("oh,hwc->owc", mat_h, out)
    if tw != w:
        mat_w = resample_matrix(w, tw)
        out = np.einsum("ow,hwc->hoc", mat_w, out)
    return np.clip(out, -1.0, 1.0).astype(np.float32)


def downsample(img: np.ndarray, target_dims: tuple[int, int]) -> np.ndarray:
    """Shrink an image to target (height, width). Upscaling requests error."""
    img = as_image(img)
    th, tw = int(target_dims[0]), int(target_dims[1])
    if th > img.shape[0] or tw > img.shape[1]:
        raise InvalidInputError(
            f"downsample target {target_dims} exceeds source {img.shape[:2]}"
        )
    if (th, tw) == img.shape[:2]:
        return img.copy()
    return resize(img, (th, tw))


def upsample(img: np.ndarray, target_dims: tuple[int, int]) -> np.ndarray:
    """Grow an image to target (height, width). Shrinking requests error."""
    img = as_image(img)
    th, tw = int(target_dims[0]), int(target_dims[1])
    if th < img.shape[0] or tw < img.shape[1]:
        raise InvalidInputError(
            f"upsample target {target_dims} below source {img.shape[:2]}"
        )
    if (th, tw) == img.shape[:2]:
        return img.copy()
    return resize(img, (th, tw))


# ---------------------------------------------------------------------------
# Scale schedule
# ---------------------------------------------------------------------------

def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class ScaleSchedule:
    """Per-level image dimensions of the pyramid.

    ``levels[n]`` is the (height, width) of level n, ordered finest
    (index 0) to coarsest (index ``coarsest``). ``r`` is the actual
    per-level scale factor.
    """

    levels: tuple[tuple[int, int], ...]
    r: float

    @property
    def coarsest(self) -> int:
        return len(self.levels) - 1

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    def dims(self, n: int) -> tuple[int, int]:
        return self.levels[n]

    def as_dict(self) -> dict:
        return {"levels": [list(d) for d in self.levels], "r": self.r}

    @classmethod
    def from_dict(cls, d: dict) -> "ScaleSchedule":
        return cls(levels=tuple(tuple(x) for x in d["levels"]), r=float(d["r"]))


def level_dims(finest_dims: tuple[int, int], r: float, n: int) -> tuple[int, int]:
    """Dims of level n computed from the finest level, rounding half-up.

    Computed directly from level 0 (not iteratively) so rounding never
    drifts across levels.
    """
    h0, w0 = finest_dims
    f = r**n
    return (_round_half_up(h0 / f), _round_half_up(w0 / f))


def fit_training_dims(
    source_dims: tuple[int, int], max_fine_dim: int
) -> tuple[int, int]:
    """Scale dims down so the larger side is at most ``max_fine_dim``."""
    h, w = int(source_dims[0]), int(source_dims[1])
    if h < 1 or w < 1:
        raise InvalidInputError(f"source dims must be positive, got {source_dims}")
    m = max(h, w)
    if m <= max_fine_dim:
        return (h, w)
    f = max_fine_dim / m
    return (max(1, _round_half_up(h * f)), max(1, _round_half_up(w * f)))


def build_scale_schedule(
    source_dims: tuple[int, int],
    min_coarse_dim: int = 25,
    max_fine_dim: int = 250,
    target_r: float = 4.0 / 3.0,
    resize_input: bool = True,
) -> ScaleSchedule:
    """Choose the pyramid depth and scale factor for a source image.

    The finest level is the source resized so its larger side fits
    ``max_fine_dim`` (skipped when ``resize_input`` is false). The number
    of downsampling steps N is the positive integer that brings the
    actual per-step factor ``(min_dim/min_coarse_dim)**(1/N)`` closest to
    ``target_r``; the coarsest level then has its smaller side equal to
    ``min_coarse_dim``. Images already at or below ``min_coarse_dim``
    degenerate to a single level with r = 1.
    """
    h, w = int(source_dims[0]), int(source_dims[1])
    if h < 1 or w < 1:
        raise InvalidInputError(f"source dims must be positive, got {source_dims}")
    if resize_input:
        h, w = fit_training_dims((h, w), max_fine_dim)
    min_dim = min(h, w)
    if min_dim <= min_coarse_dim:
        return ScaleSchedule(levels=((h, w),), r=1.0)

    ratio = min_dim / min_coarse_dim
    # |ratio**(1/N) - target_r| is unimodal in N, so the minimizer is one
    # of the two integers bracketing log(ratio)/log(target_r).
    n_star = math.log(ratio) / math.log(target_r)
    candidates = {max(1, math.floor(n_star)), max(1, math.ceil(n_star))}
    best_n = min(candidates, key=lambda n: (abs(ratio ** (1.0 / n) - target_r), n))
    r = ratio ** (1.0 / best_n)

    levels = [level_dims((h, w), r, n) for n in range(best_n + 1)]
    _check_monotone(levels)
    return ScaleSchedule(levels=tuple(levels), r=r)


def build_pinned_schedule(
    source_dims: tuple[int, int],
    r: float,
    min_coarse_dim: int = 25,
) -> ScaleSchedule:
    """Schedule with an externally fixed scale factor (super-resolution).

    Levels are added while the smaller side stays at or above
    ``min_coarse_dim``; r is kept exactly as given.
    """
    h, w = int(source_dims[0]), int(source_dims[1])
    if h < 1 or w < 1:
        raise InvalidInputError(f"source dims must be positive, got {source_dims}")
    if r <= 1.0:
        return ScaleSchedule(levels=((h, w),), r=1.0)
    levels = [(h, w)]
    n = 1
    while True:
        dims = level_dims((h, w), r, n)
        prev = levels[-1]
        if min(dims) < min_coarse_dim or not (dims[0] < prev[0] and dims[1] < prev[1]):
            break
        levels.append(dims)
        n += 1
    _check_monotone(levels)
    return ScaleSchedule(levels=tuple(levels), r=r if len(levels) > 1 else 1.0)


def _check_monotone(levels) -> None:
    for a, b in zip(levels, levels[1:]):
        if not (b[0] < a[0] and b[1] < a[1]):
            raise InvalidInputError(f"schedule levels not strictly decreasing: {levels}")


def build_pyramid(img: np.ndarray, schedule: ScaleSchedule) -> list[np.ndarray]:
    """Downsampled copies of ``img`` at every schedule level, finest first.

    ``img`` must already be at the schedule's finest dims.
    """
    img = as_image(img)
    if img.shape[:2] != schedule.levels[0]:
        raise InvalidInputError(
            f"image dims {img.shape[:2]} do not match schedule finest {schedule.levels[0]}"
        )
    return [img.copy()] + [downsample(img, d) for d in schedule.levels[1:]]
