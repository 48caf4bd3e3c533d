import hashlib
import json
import os
import time
from pathlib import Path

import numpy as np
import pytest
import torch

from singan import store
from singan.imaging import load_image
from singan.training import TrainConfig, toy_config, train_pyramid

torch.set_num_threads(1)

FIXTURES = Path(__file__).parent / "fixtures"
CACHE = Path(__file__).parent / ".cache"

TOY_IMAGE_PATH = FIXTURES / "toy_33.png"


def _cache_enabled() -> bool:
    return os.environ.get("SINGAN_TEST_CACHE", "1") != "0"


def cached_train(img: np.ndarray, cfg: TrainConfig, name: str):
    """Train once per (name, config) and reuse the checkpoint across runs.

    Returns (stack, info) where info records the wall-clock seconds of the
    original training run on this machine.
    """
    key = hashlib.sha256(
        (json.dumps(cfg.as_dict(), sort_keys=True) + store.array_digest(img)).encode()
    ).hexdigest()[:16]
    path = CACHE / f"{name}-{key}"
    info_path = path / "train_info.json"
    if _cache_enabled() and (path / "manifest.json").is_file() and info_path.is_file():
        return store.load(path), json.loads(info_path.read_text())
    t0 = time.perf_counter()
    stack = train_pyramid(img, cfg)
    seconds = time.perf_counter() - t0
    info = {"seconds": seconds}
    if _cache_enabled():
        CACHE.mkdir(exist_ok=True)
        store.save(stack, path)
        info_path.write_text(json.dumps(info))
    return stack, info


@pytest.fixture(scope="session")
def toy_image() -> np.ndarray:
    return load_image(TOY_IMAGE_PATH)


@pytest.fixture(scope="session")
def toy_bundle(toy_image):
    return cached_train(toy_image, toy_config(), "toy")


@pytest.fixture(scope="session")
def toy_stack(toy_bundle):
    return toy_bundle[0]


@pytest.fixture(scope="session")
def toy_train_seconds(toy_bundle) -> float:
    return toy_bundle[1]["seconds"]


@pytest.fixture(scope="session")
def mini_image() -> np.ndarray:
    """A 25x25 two-level training image for fast plumbing tests."""
    rng = np.random.default_rng(7)
    yy, xx = np.mgrid[0:25, 0:25].astype(np.float64)
    img = np.stack(
        [
            0.8 - 1.4 * yy / 24,
            np.where(xx > 12, 0.4, -0.4) + rng.uniform(-0.2, 0.2, (25, 25)),
            0.6 * np.sin(xx / 3.0),
        ],
        axis=-1,
    )
    return np.clip(img, -1, 1).astype(np.float32)


def mini_config(**overrides) -> TrainConfig:
    base = dict(
        iters_per_scale=30,
        lr_decay_iter=24,
        min_coarse_dim=19,
        max_fine_dim=25,
        seed=99,
    )
    base.update(overrides)
    return TrainConfig(**base)


@pytest.fixture(scope="session")
def mini_stack(mini_image):
    return cached_train(mini_image, mini_config(), "mini")[0]


def make_untrained_stack(img: np.ndarray, cfg: TrainConfig):
    """A structurally valid stack with random frozen weights (no training).

    Useful for plumbing tests that need a deep pyramid but no learned
    behavior (preset resolution, dims wiring).
    """
    import torch

    from singan import imaging
    from singan.nets import Generator, PaddingMode, init_weights, kernels_for_scale, noise_dims
    from singan.stack import GeneratorStack, draw_noise, hash_state_dict, rng_from
    from singan.training import _build_schedule

    image = imaging.as_image(img)
    schedule = _build_schedule(image, cfg)
    if image.shape[:2] != schedule.levels[0]:
        image = imaging.resize(image, schedule.levels[0])
    mode = PaddingMode.parse(cfg.padding_mode)
    channels = image.shape[2]
    coarsest = schedule.coarsest
    generators = []
    sigmas = []
    for i in range(coarsest + 1):
        gen = Generator(channels, kernels_for_scale(i), padding_mode=mode)
        init_weights(gen, i + 1000 * cfg.seed)
        gen.eval()
        for p in gen.parameters():
            p.requires_grad_(False)
        generators.append(gen)
        sigmas.append(1.0 if i == 0 else 0.05)
    z_star = draw_noise(
        rng_from(cfg.seed, "z_star"),
        noise_dims(schedule.dims(coarsest), mode),
        channels,
        cfg.sigma_coarsest,
    ).numpy()
    stack = GeneratorStack(
        schedule=schedule,
        generators=generators,
        sigmas=sigmas,
        z_star=z_star,
        recon_images=[],
        train_image=image,
        config=cfg,
        freeze_hashes=[hash_state_dict(g) for g in generators],
    )
    stack.recon_images = stack.run_reconstruction(mode)
    return stack


@pytest.fixture(scope="session")
def deep_stack():
    """An untrained 9-level pyramid (N=8) for preset-resolution tests."""
    rng = np.random.default_rng(17)
    img = np.clip(
        rng.uniform(-1, 1, (110, 110, 3)) * 0.4
        + np.linspace(-0.6, 0.6, 110)[:, None, None],
        -1,
        1,
    ).astype(np.float32)
    cfg = TrainConfig(iters_per_scale=1, lr_decay_iter=1, min_coarse_dim=11, max_fine_dim=110, seed=3)
    return make_untrained_stack(img, cfg)


@pytest.fixture(scope="session")
def sr_image() -> np.ndarray:
    rng = np.random.default_rng(13)
    yy, xx = np.mgrid[0:50, 0:50].astype(np.float64)
    img = np.stack(
        [
            np.sin(yy / 4.0) * 0.6,
            0.7 - 1.2 * yy / 49,
            np.where((xx // 8) % 2 == 0, 0.35, -0.35) + rng.uniform(-0.15, 0.15, (50, 50)),
        ],
        axis=-1,
    )
    return np.clip(img, -1, 1).astype(np.float32)


@pytest.fixture(scope="session")
def sr_bundle(sr_image):
    """A super-resolution-mode stack (factor 4 plan) at plumbing quality."""
    from singan.applications import plan_super_resolution

    plan = plan_super_resolution(4)
    cfg = TrainConfig.for_super_resolution(
        plan.r, iters_per_scale=60, lr_decay_iter=48, seed=5
    )
    stack, info = cached_train(sr_image, cfg, "sr")
    return stack, plan, sr_image, info


@pytest.fixture(scope="session")
def sr_stack(sr_bundle):
    stack, plan, sr_image, _ = sr_bundle
    return stack, plan, sr_image
