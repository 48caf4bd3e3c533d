"""Sequential coarse-to-fine adversarial training of the generator pyramid.

Each scale runs a min-max game between its generator and a patch critic:
the critic loss is the Wasserstein surrogate with a gradient penalty,
the generator adds a mean-squared reconstruction term that pins a fixed
noise sequence {z*, 0, ..., 0} to reproduce the training image. Once a
scale finishes, its weights are frozen and the next scale starts from
them (random re-init when the channel width changes).
"""

from __future__ import annotations

import copy
import csv
import math
from dataclasses import asdict, dataclass
from typing import Callable, Optional

import numpy as np
import torch
from torch import nn

from . import imaging
from .imaging import ScaleSchedule, build_scale_schedule, build_pinned_schedule
from .nets import (
    Discriminator,
    Generator,
    PaddingMode,
    init_weights,
    kernels_for_scale,
    noise_dims,
)
from .stack import (
    GeneratorStack,
    chain_step,
    draw_noise,
    hash_state_dict,
    img_to_tensor,
    resize_tensor,
    rng_from,
    seed_from,
    tensor_to_img,
)

Observer = Callable[[dict], None]

LOG_COLUMNS = ("iteration", "scale", "d_loss", "g_adv", "g_rec", "sigma")


class TrainingDivergedError(RuntimeError):
    """Raised when a loss goes non-finite; carries a diagnostic snapshot."""

    def __init__(self, message: str, snapshot: dict):
        super().__init__(message)
        self.snapshot = snapshot


@dataclass
class TrainConfig:
    """Hyperparameters of one pyramid training run."""

    iters_per_scale: int = 2000
    g_steps: int = 3
    d_steps: int = 3
    lr: float = 5e-4
    lr_decay_factor: float = 0.1
    lr_decay_iter: int = 1600
    adam_beta1: float = 0.5
    adam_beta2: float = 0.999
    alpha_rec: float = 10.0
    lambda_gp: float = 0.1
    sigma_scale: float = 0.1
    sigma_coarsest: float = 1.0
    padding_mode: str = PaddingMode.INPUT_ZERO.value
    seed: int = 0
    min_coarse_dim: int = 25
    max_fine_dim: int = 250
    target_r: float = 4.0 / 3.0
    resize_input: bool = True
    pinned_r: Optional[float] = None

    def __post_init__(self):
        self.padding_mode = PaddingMode.parse(self.padding_mode).value
        positives = (
            "iters_per_scale", "g_steps", "d_steps", "lr", "lr_decay_factor",
            "lr_decay_iter", "adam_beta1", "adam_beta2", "alpha_rec",
            "lambda_gp", "sigma_scale", "sigma_coarsest", "min_coarse_dim",
            "max_fine_dim",
        )
        for name in positives:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.target_r <= 1.0:
            raise ValueError("target_r must exceed 1")

    @classmethod
    def for_super_resolution(cls, r: float, **overrides) -> "TrainConfig":
        """Super-resolution preset: strong reconstruction weight, pinned factor."""
        overrides.setdefault("alpha_rec", 100.0)
        overrides.setdefault("resize_input", False)
        return cls(pinned_r=r, **overrides)

    def as_dict(self) -> dict:
        return asdict(self)


def toy_config(**overrides) -> TrainConfig:
    """The deterministic desk-scale regression fixture configuration.

    33x33 training image, 3 levels (min coarse dim 19), 400 iterations
    per scale, seed 1234. Used by the acceptance suite.
    """
    base = dict(
        iters_per_scale=400,
        lr_decay_iter=320,
        min_coarse_dim=19,
        max_fine_dim=33,
        seed=1234,
    )
    base.update(overrides)
    return TrainConfig(**base)


# ---------------------------------------------------------------------------
# Loss terms
# ---------------------------------------------------------------------------

def adversarial_loss_d(
    d_real: torch.Tensor,
    d_fake_scores,
    gp: torch.Tensor,
    lambda_gp: float,
) -> torch.Tensor:
    """Critic loss: mean fake score minus the real score plus the penalty.

    The critic maximizes the negation. There is no expectation over real
    images — a single training example exists.
    """
    if not torch.is_tensor(d_fake_scores):
        d_fake_scores = torch.stack(list(d_fake_scores))
    return d_fake_scores.mean() - d_real + lambda_gp * gp


def gradient_penalty(
    disc: Discriminator,
    x_real: torch.Tensor,
    x_fake: torch.Tensor,
    gamma: float,
) -> torch.Tensor:
    """(|∇ score| - 1)^2 at the gamma-interpolate of real and fake."""
    if x_real.shape != x_fake.shape:
        raise ValueError(f"shape mismatch {tuple(x_real.shape)} vs {tuple(x_fake.shape)}")
    with torch.enable_grad():
        x_bar = (gamma * x_real + (1.0 - gamma) * x_fake).detach().requires_grad_(True)
        score = disc(x_bar).mean()
        (grad,) = torch.autograd.grad(score, x_bar, create_graph=True)
        return (grad.flatten().norm(2) - 1.0) ** 2


def reconstruction_loss(
    gen: Generator,
    z_rec: torch.Tensor,
    prev_up_rec: torch.Tensor,
    x_n: torch.Tensor,
    mode: PaddingMode,
) -> torch.Tensor:
    """Mean squared error of the reconstruction path against the pyramid image."""
    out = gen(z_rec, prev_up_rec, padding_mode=mode)
    return torch.mean((out - x_n) ** 2)


def compute_noise_std(
    x_rec_up: np.ndarray,
    x_n: np.ndarray,
    sigma_scale: float,
    is_coarsest: bool,
) -> float:
    """Per-scale noise amplitude.

    The coarsest scale uses 1.0 by convention; every other scale scales
    the RMSE between the upsampled coarser reconstruction and the pyramid
    image — a measure of the detail that scale must add.
    """
    if is_coarsest:
        return 1.0
    a = np.asarray(x_rec_up, dtype=np.float64)
    b = np.asarray(x_n, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    return float(sigma_scale * math.sqrt(np.mean((a - b) ** 2)))


def _check_finite(value: float, what: str, snapshot: dict) -> None:
    if not math.isfinite(value):
        raise TrainingDivergedError(f"non-finite {what}: {value}", snapshot)


def _freeze_norm_stats(
    gen: Generator,
    z_rec: torch.Tensor,
    prev_up_rec: torch.Tensor,
    mode: PaddingMode,
) -> None:
    """Pin normalization statistics to the reconstruction batch and switch
    to inference mode.

    Training optimizes the reconstruction under per-batch statistics;
    anchoring the frozen statistics to that same batch keeps the
    inference-time reconstruction path faithful to what was optimized.
    """
    gen.train()
    for m in gen.modules():
        if isinstance(m, nn.BatchNorm2d):
            m.reset_running_stats()
            m.momentum = None
    with torch.no_grad():
        gen(z_rec, prev_up_rec, padding_mode=mode)
    gen.eval()


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

def _build_schedule(img: np.ndarray, cfg: TrainConfig) -> ScaleSchedule:
    dims = img.shape[:2]
    if cfg.pinned_r is not None:
        if cfg.resize_input:
            dims = imaging.fit_training_dims(dims, cfg.max_fine_dim)
        return build_pinned_schedule(dims, cfg.pinned_r, cfg.min_coarse_dim)
    return build_scale_schedule(
        dims,
        min_coarse_dim=cfg.min_coarse_dim,
        max_fine_dim=cfg.max_fine_dim,
        target_r=cfg.target_r,
        resize_input=cfg.resize_input,
    )


def train_pyramid(
    x: np.ndarray,
    cfg: TrainConfig,
    observer: Observer | None = None,
    log_path=None,
) -> GeneratorStack:
    """Train the whole pyramid on one image, coarsest scale first."""
    # Tensors here are tiny; intra-op threading costs more than it saves.
    prev_threads = torch.get_num_threads()
    torch.set_num_threads(1)
    try:
        return _train_pyramid(x, cfg, observer, log_path)
    finally:
        torch.set_num_threads(prev_threads)


def _train_pyramid(
    x: np.ndarray,
    cfg: TrainConfig,
    observer: Observer | None = None,
    log_path=None,
) -> GeneratorStack:
    img = imaging.as_image(x)
    schedule = _build_schedule(img, cfg)
    if img.shape[:2] != schedule.levels[0]:
        img = imaging.resize(img, schedule.levels[0])
    pyramid = imaging.build_pyramid(img, schedule)
    channels = img.shape[2]
    coarsest = schedule.coarsest
    mode = PaddingMode.parse(cfg.padding_mode)

    log_file = open(log_path, "w", newline="") if log_path else None
    writer = None
    if log_file:
        writer = csv.writer(log_file)
        writer.writerow(LOG_COLUMNS)

    def emit(event: dict) -> None:
        if observer is not None:
            observer(event)
        if writer is not None and event.get("type") == "iteration":
            writer.writerow([event[c] for c in LOG_COLUMNS])

    generators: list[Generator] = []
    sigmas: list[float] = []
    recon_images: list[np.ndarray] = []
    freeze_hashes: list[str] = []
    z_star_np: np.ndarray | None = None
    prev_d: Discriminator | None = None

    try:
        for i in range(coarsest + 1):
            n = coarsest - i
            dims_n = schedule.dims(n)
            x_n = img_to_tensor(pyramid[n])

            width = kernels_for_scale(i)
            gen = Generator(channels, width, padding_mode=mode)
            disc = Discriminator(channels, width)
            transferred = i > 0 and width == kernels_for_scale(i - 1)
            if transferred:
                gen.load_state_dict(copy.deepcopy(generators[-1].state_dict()))
                disc.load_state_dict(copy.deepcopy(prev_d.state_dict()))
            else:
                init_weights(gen, seed_from(cfg.seed, "weights", i, "g"))
                init_weights(disc, seed_from(cfg.seed, "weights", i, "d"))

            # Reconstruction-path inputs for this scale are fixed: the frozen
            # coarser scales never change during this scale's training.
            if i == 0:
                prev_up_rec = torch.zeros((1, channels) + dims_n, dtype=torch.float32)
                z_rng = rng_from(cfg.seed, "z_star")
                z_star = draw_noise(z_rng, noise_dims(dims_n, mode), channels, cfg.sigma_coarsest)
                z_star_np = z_star.numpy().copy()
                z_rec = z_star
                sigma = compute_noise_std(pyramid[n], pyramid[n], cfg.sigma_scale, True)
            else:
                prev_up_rec = resize_tensor(img_to_tensor(recon_images[-1]), dims_n)
                z_rec = torch.zeros((1, channels) + noise_dims(dims_n, mode), dtype=torch.float32)
                sigma = compute_noise_std(
                    tensor_to_img(prev_up_rec), pyramid[n], cfg.sigma_scale, False
                )
            sigmas.append(sigma)

            emit({
                "type": "scale_start",
                "scale": n,
                "index_from_coarse": i,
                "dims": list(dims_n),
                "sigma": sigma,
                "init": "transfer" if transferred else "random",
                "g_init_hash": hash_state_dict(gen),
                "d_init_hash": hash_state_dict(disc),
            })

            _train_scale(
                gen, disc, generators, sigmas, schedule, x_n, n, i, cfg, mode,
                channels, z_rec, prev_up_rec, emit,
            )

            _freeze_norm_stats(gen, z_rec, prev_up_rec, mode)
            for p in gen.parameters():
                p.requires_grad_(False)
            with torch.no_grad():
                recon = chain_step(gen, z_rec, None if i == 0 else img_to_tensor(recon_images[-1]), dims_n, mode, channels)
            recon_img = tensor_to_img(recon)
            recon_images.append(recon_img)
            freeze_hashes.append(hash_state_dict(gen))
            generators.append(gen)
            prev_d = disc

            emit({
                "type": "scale_end",
                "scale": n,
                "freeze_hash": freeze_hashes[-1],
                "recon_rmse": float(np.sqrt(np.mean((recon_img.astype(np.float64) - pyramid[n].astype(np.float64)) ** 2))),
            })
    finally:
        if log_file:
            log_file.close()

    return GeneratorStack(
        schedule=schedule,
        generators=generators,
        sigmas=sigmas,
        z_star=z_star_np,
        recon_images=recon_images,
        train_image=img,
        config=cfg,
        freeze_hashes=freeze_hashes,
    )


def _sample_fake_prev(
    generators: list[Generator],
    sigmas: list[float],
    schedule: ScaleSchedule,
    rng: np.random.Generator,
    mode: PaddingMode,
    channels: int,
) -> torch.Tensor | None:
    """Run the frozen coarser scales with fresh noise; None when empty."""
    prev = None
    coarsest = schedule.coarsest
    with torch.no_grad():
        for j, gen in enumerate(generators):
            dims = schedule.dims(coarsest - j)
            z = draw_noise(rng, noise_dims(dims, mode), channels, sigmas[j])
            prev = chain_step(gen, z, prev, dims, mode, channels)
    return prev


def _train_scale(
    gen: Generator,
    disc: Discriminator,
    frozen: list[Generator],
    sigmas: list[float],
    schedule: ScaleSchedule,
    x_n: torch.Tensor,
    n: int,
    i: int,
    cfg: TrainConfig,
    mode: PaddingMode,
    channels: int,
    z_rec: torch.Tensor,
    prev_up_rec: torch.Tensor,
    emit: Observer,
) -> None:
    dims_n = schedule.dims(n)
    sigma = sigmas[-1]
    rng = rng_from(cfg.seed, "train", i)
    opt_g = torch.optim.Adam(gen.parameters(), lr=cfg.lr, betas=(cfg.adam_beta1, cfg.adam_beta2))
    opt_d = torch.optim.Adam(disc.parameters(), lr=cfg.lr, betas=(cfg.adam_beta1, cfg.adam_beta2))
    sched_g = torch.optim.lr_scheduler.MultiStepLR(opt_g, milestones=[cfg.lr_decay_iter], gamma=cfg.lr_decay_factor)
    sched_d = torch.optim.lr_scheduler.MultiStepLR(opt_d, milestones=[cfg.lr_decay_iter], gamma=cfg.lr_decay_factor)
    gen.train()
    disc.train()

    def make_fake() -> torch.Tensor:
        prev = _sample_fake_prev(frozen, sigmas[:-1], schedule, rng, mode, channels)
        z = draw_noise(rng, noise_dims(dims_n, mode), channels, sigma)
        return chain_step(gen, z, prev, dims_n, mode, channels)

    for it in range(cfg.iters_per_scale):
        snapshot = {"scale": n, "iteration": it, "sigma": sigma}

        g_adv_val = g_rec_val = 0.0
        for _ in range(cfg.g_steps):
            opt_g.zero_grad()
            fake = make_fake()
            g_adv = -disc(fake).mean()
            g_rec = reconstruction_loss(gen, z_rec, prev_up_rec, x_n, mode)
            # The reconstruction norm is a sum of squares: with the mean the
            # gradient shrinks with pixel count and the adversarial term
            # drowns it, stalling reconstruction.
            loss_g = g_adv + cfg.alpha_rec * g_rec * x_n.numel()
            loss_g.backward()
            opt_g.step()
            g_adv_val, g_rec_val = g_adv.item(), g_rec.item()
        _check_finite(g_adv_val, "generator adversarial loss", {**snapshot, "g_adv": g_adv_val})
        _check_finite(g_rec_val, "reconstruction loss", {**snapshot, "g_rec": g_rec_val})

        d_loss_val = 0.0
        for _ in range(cfg.d_steps):
            opt_d.zero_grad()
            with torch.no_grad():
                fake = make_fake()
            d_real = disc(x_n).mean()
            d_fake = disc(fake).mean()
            gp = gradient_penalty(disc, x_n, fake, float(rng.uniform(0.0, 1.0)))
            loss_d = adversarial_loss_d(d_real, d_fake[None], gp, cfg.lambda_gp)
            loss_d.backward()
            opt_d.step()
            d_loss_val = loss_d.item()
        _check_finite(d_loss_val, "critic loss", {**snapshot, "d_loss": d_loss_val})

        sched_g.step()
        sched_d.step()
        emit({
            "type": "iteration",
            "iteration": it,
            "scale": n,
            "d_loss": d_loss_val,
            "g_adv": g_adv_val,
            "g_rec": g_rec_val,
            "sigma": sigma,
        })
