"""Quantitative evaluation: Fréchet feature distance over the internal
spatial distribution of deep features, plus RMSE and report plumbing.

The single-image distance treats every spatial location of a deep
feature map as one sample vector, fits a Gaussian (mean + covariance)
per image, and measures the Fréchet distance between the two Gaussians.
A deterministic fixed-random-convolution extractor keeps the test suite
hermetic; the pretrained classification-network extractor is an optional
external asset loaded lazily.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Iterable, Protocol

import numpy as np
import scipy.linalg

from . import imaging


class MetricError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureStats:
    """Gaussian summary of a feature map's per-location vectors."""

    mu: np.ndarray
    sigma: np.ndarray
    n_locations: int

    @property
    def dim(self) -> int:
        return self.mu.shape[0]


def feature_stats(fmap: np.ndarray) -> FeatureStats:
    """Mean and covariance over spatial locations of a (C, H, W) map."""
    f = np.asarray(fmap, dtype=np.float64)
    if f.ndim != 3:
        raise MetricError(f"expected (C, H, W) feature map, got shape {f.shape}")
    c = f.shape[0]
    x = f.reshape(c, -1).T  # (locations, C)
    mu = x.mean(axis=0)
    sigma = np.cov(x, rowvar=False)
    if sigma.ndim == 0:
        sigma = sigma.reshape(1, 1)
    return FeatureStats(mu=mu, sigma=sigma, n_locations=x.shape[0])


def regularize_stats(stats: FeatureStats, eps: float = 1e-6) -> FeatureStats:
    """Add eps to the covariance diagonal (ill-conditioned small samples)."""
    return FeatureStats(
        mu=stats.mu,
        sigma=stats.sigma + eps * np.eye(stats.dim),
        n_locations=stats.n_locations,
    )


def frechet_distance(a: FeatureStats, b: FeatureStats) -> float:
    """||mu_a - mu_b||^2 + Tr(S_a + S_b - 2 (S_a S_b)^(1/2)), clamped at 0."""
    if a.dim != b.dim:
        raise MetricError(f"feature dims differ: {a.dim} vs {b.dim}")
    mu_diff = a.mu - b.mu
    s1 = _symmetrize(a.sigma)
    s2 = _symmetrize(b.sigma)
    covmean = scipy.linalg.sqrtm(s1 @ s2)
    if np.iscomplexobj(covmean):
        if np.abs(covmean.imag).max() > 1e-6:
            raise MetricError("covariance square root has a large imaginary part")
        covmean = covmean.real
    if not np.isfinite(covmean).all():
        raise MetricError("covariance square root is non-finite; regularize the stats")
    dist = float(mu_diff @ mu_diff + np.trace(s1 + s2 - 2.0 * covmean))
    return max(dist, 0.0)


def _symmetrize(m: np.ndarray) -> np.ndarray:
    m = np.asarray(m, dtype=np.float64)
    return (m + m.T) / 2.0


class FeatureExtractor(Protocol):
    identifier: str

    def extract(self, img: np.ndarray) -> np.ndarray: ...


class RandomConvExtractor:
    """Deterministic fallback extractor: a fixed seeded stack of valid
    3x3 convolutions with leaky-rectifier nonlinearities."""

    def __init__(self, channels: int = 3, out_channels: int = 16, layers: int = 2, seed: int = 90210):
        self.identifier = f"randconv-c{out_channels}-l{layers}-s{seed}"
        rng = np.random.default_rng(seed)
        widths = [channels] + [out_channels] * layers
        self.kernels = [
            rng.standard_normal((widths[i + 1], widths[i], 3, 3)).astype(np.float64)
            / np.sqrt(widths[i] * 9.0)
            for i in range(layers)
        ]

    def extract(self, img: np.ndarray) -> np.ndarray:
        x = imaging.as_image(img).astype(np.float64).transpose(2, 0, 1)
        if x.shape[0] != self.kernels[0].shape[1]:
            if x.shape[0] == 1 and self.kernels[0].shape[1] == 3:
                x = np.repeat(x, 3, axis=0)
            else:
                raise MetricError(
                    f"extractor expects {self.kernels[0].shape[1]} channels, got {x.shape[0]}"
                )
        for i, k in enumerate(self.kernels):
            x = _conv_valid(x, k)
            if i < len(self.kernels) - 1:
                x = np.where(x > 0, x, 0.2 * x)
        return x.astype(np.float32)


def _conv_valid(x: np.ndarray, kernels: np.ndarray) -> np.ndarray:
    c_out, c_in, kh, kw = kernels.shape
    c, h, w = x.shape
    if h < kh or w < kw:
        raise MetricError(f"image {h}x{w} smaller than the extractor kernel")
    oh, ow = h - kh + 1, w - kw + 1
    windows = np.lib.stride_tricks.sliding_window_view(x, (kh, kw), axis=(1, 2))
    return np.einsum("chwij,ocij->ohw", windows[:, :oh, :ow], kernels)


class InceptionFeatureExtractor:
    """Features from the convolutional layer just before the second
    pooling stage of a pretrained ImageNet classifier (external asset).

    Weights are fetched once and cached by torchvision; construction
    fails with a clear error when the asset is unavailable.
    """

    identifier = "inception_v3-prepool2-torchvision"

    def __init__(self):
        import torch
        from torchvision.models import Inception_V3_Weights, inception_v3

        net = inception_v3(weights=Inception_V3_Weights.DEFAULT)
        net.eval()
        self._torch = torch
        self._stem = [
            net.Conv2d_1a_3x3,
            net.Conv2d_2a_3x3,
            net.Conv2d_2b_3x3,
            net.maxpool1,
            net.Conv2d_3b_1x1,
            net.Conv2d_4a_3x3,
        ]

    def extract(self, img: np.ndarray) -> np.ndarray:
        torch = self._torch
        x = imaging.as_image(img)
        if x.shape[2] == 1:
            x = np.repeat(x, 3, axis=2)
        t = torch.from_numpy(x.transpose(2, 0, 1))[None]
        with torch.no_grad():
            for layer in self._stem:
                t = layer(t)
        return t[0].numpy()


def sifid(real: np.ndarray, fake: np.ndarray, fx: FeatureExtractor, eps: float = 1e-6) -> float:
    """Fréchet distance between the internal feature statistics of one
    real and one generated image."""
    stats_r = feature_stats(fx.extract(real))
    stats_f = feature_stats(fx.extract(fake))
    if stats_r.n_locations < stats_r.dim or stats_f.n_locations < stats_f.dim:
        stats_r = regularize_stats(stats_r, eps)
        stats_f = regularize_stats(stats_f, eps)
    return frechet_distance(stats_r, stats_f)


def sifid_many(real: np.ndarray, fakes: Iterable[np.ndarray], fx: FeatureExtractor) -> list[float]:
    return [sifid(real, fake, fx) for fake in fakes]


def rmse(a: np.ndarray, b: np.ndarray) -> float:
    """Root mean squared error between two equal-shape arrays."""
    x = np.asarray(a, dtype=np.float64)
    y = np.asarray(b, dtype=np.float64)
    if x.shape != y.shape:
        raise MetricError(f"shape mismatch {x.shape} vs {y.shape}")
    return float(np.sqrt(np.mean((x - y) ** 2)))


REPORT_COLUMNS = ("image_id", "start_scale", "sifid", "diversity", "rmse")


def write_report(path, rows: Iterable[dict]) -> None:
    """CSV evaluation report, one row per (image, start scale)."""
    with open(path, "w", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=REPORT_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow({c: row.get(c, "") for c in REPORT_COLUMNS})
