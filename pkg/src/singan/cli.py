"""Command-line client for training, sampling, manipulation and evaluation.

Every verb supports ``--json`` for machine-readable output and exits 0 on
success. The CLI holds no model logic; it parses arguments, calls the
library, and reports results.
"""

from __future__ import annotations

import hashlib
import json
import os
from pathlib import Path

import click
import numpy as np

from . import imaging, metrics, store
from .applications import (
    AnimationParams,
    InjectionRequest,
    animate as run_animation,
    inject as run_injection,
    plan_super_resolution,
    save_frames,
    super_resolve,
)
from .imaging import InvalidInputError
from .nets import ConfigError, ShapeError
from .presets import PresetError, load_registry
from .sampling import SampleRequest, diversity_map, generate
from .store import CheckpointError
from .training import TrainConfig, TrainingDivergedError, train_pyramid

_CORE_ERRORS = (
    InvalidInputError,
    ConfigError,
    ShapeError,
    PresetError,
    CheckpointError,
    TrainingDivergedError,
    ValueError,
)


def _emit(result: dict, as_json: bool, lines=None) -> None:
    if as_json:
        click.echo(json.dumps(result, indent=2, sort_keys=True))
    else:
        for line in lines or []:
            click.echo(line)


def _wrap(fn):
    """Translate library errors into exit-code-1 CLI failures."""

    def runner(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except _CORE_ERRORS as e:
            raise click.ClickException(str(e))

    runner.__name__ = fn.__name__
    runner.__doc__ = fn.__doc__
    return runner


@click.group()
@click.version_option(package_name="singan")
def main():
    """Single-image generative modeling toolkit."""


@main.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", "output", required=True, type=click.Path(), help="Checkpoint directory to write.")
@click.option("--scales-max-dim", default=250, show_default=True, help="Resize the input so its larger side fits this.")
@click.option("--no-resize", is_flag=True, help="Keep the input at native resolution (high-res runs).")
@click.option("--min-coarse-dim", default=25, show_default=True)
@click.option("--iters", default=2000, show_default=True, help="Iterations per scale.")
@click.option("--seed", default=0, show_default=True)
@click.option("--sr-mode", is_flag=True, help="Super-resolution training: reconstruction weight 100, pinned pyramid factor.")
@click.option("--sr-factor", default=4, show_default=True, help="Upscale factor the SR pyramid targets (with --sr-mode).")
@click.option("--padding", default="input", type=click.Choice(["layer", "input", "noise"]), show_default=True)
@click.option("--log", "log_path", type=click.Path(), default=None, help="Write the per-iteration loss CSV here.")
@click.option("--json", "as_json", is_flag=True)
@_wrap
def train(image, output, scales_max_dim, no_resize, min_coarse_dim, iters, seed, sr_mode, sr_factor, padding, log_path, as_json):
    """Train a generator pyramid on one image and save a checkpoint."""
    img = imaging.load_image(image)
    if sr_mode:
        plan = plan_super_resolution(sr_factor)
        cfg = TrainConfig.for_super_resolution(
            plan.r,
            iters_per_scale=iters,
            seed=seed,
            min_coarse_dim=min_coarse_dim,
            padding_mode=padding,
        )
    else:
        cfg = TrainConfig(
            iters_per_scale=iters,
            seed=seed,
            max_fine_dim=scales_max_dim,
            min_coarse_dim=min_coarse_dim,
            resize_input=not no_resize,
            padding_mode=padding,
        )

    progress: dict = {}
    def observe(event):
        if event["type"] == "scale_start" and not as_json:
            click.echo(f"scale {event['scale']} ({event['dims'][0]}x{event['dims'][1]}), sigma={event['sigma']:.4f}")
        progress[event.get("scale")] = event

    stack = train_pyramid(img, cfg, observer=observe, log_path=log_path)
    store.save(stack, output)
    result = {
        "checkpoint": str(output),
        "levels": [list(d) for d in stack.schedule.levels],
        "scale_factor": stack.schedule.r,
        "coarsest_index": stack.coarsest_index,
        "sigmas": stack.sigmas,
        "config": cfg.as_dict(),
    }
    _emit(result, as_json, [f"saved checkpoint to {output} ({stack.num_scales} scales, r={stack.schedule.r:.4f})"])


@main.command()
@click.argument("ckpt", type=click.Path(exists=True, file_okay=False))
@click.option("--start-scale", type=int, default=None, help="Scale to start generation from (default: coarsest).")
@click.option("--width", type=int, default=None)
@click.option("--height", type=int, default=None)
@click.option("--count", default=1, show_default=True)
@click.option("--seed", type=int, default=None)
@click.option("--padding", default="input", type=click.Choice(["layer", "input", "noise"]), show_default=True)
@click.option("-o", "--output", "output", type=click.Path(), default="samples", show_default=True, help="Directory for the PNGs.")
@click.option("--json", "as_json", is_flag=True)
@_wrap
def sample(ckpt, start_scale, width, height, count, seed, padding, output, as_json):
    """Generate random samples from a trained checkpoint."""
    stack = store.load(ckpt)
    seed = seed if seed is not None else int.from_bytes(os.urandom(4), "little")
    req = SampleRequest(
        start_scale=start_scale, width=width, height=height,
        padding_mode=padding, seed=seed, count=count,
    )
    images = generate(stack, req)
    outdir = Path(output)
    outdir.mkdir(parents=True, exist_ok=True)
    paths, hashes = [], []
    for k, img in enumerate(images):
        path = outdir / f"sample_{seed}_{k:03d}.png"
        imaging.save_image(img, path)
        paths.append(str(path))
        hashes.append(hashlib.sha256(path.read_bytes()).hexdigest())
    result = {"seed": seed, "images": paths, "hashes": hashes}
    _emit(result, as_json, [f"wrote {len(paths)} samples to {outdir} (seed {seed})"])


def _run_inject(ckpt, image, scale, preset, preset_task, mask, no_noise, seed, feather, output, as_json):
    stack = store.load(ckpt)
    img = imaging.load_image(image)
    preset_name = None
    warning = None
    if preset is not None:
        registry = load_registry()
        hit = registry.find_injection(preset, task=preset_task)
        scale = hit.scale
        preset_name = f"{hit.task}/{hit.name}"
        if hit.num_scales != stack.coarsest_index:
            warning = (
                f"preset {hit.name!r} was tuned for N={hit.num_scales}; "
                f"this checkpoint has N={stack.coarsest_index}"
            )
    if scale is None:
        raise click.ClickException("provide --scale or --preset")
    mask_arr = None
    if mask is not None:
        m = imaging.load_image(mask)
        mask_arr = np.where(m.mean(axis=2) > 0.0, 1.0, 0.0).astype(np.float32)
    out = run_injection(
        stack,
        InjectionRequest(
            input=img, scale_n=int(scale), add_noise=not no_noise,
            blend_mask=mask_arr, seed=seed, feather_radius=feather,
        ),
    )
    imaging.save_image(out, output)
    result = {"image": str(output), "scale": int(scale), "preset": preset_name}
    if warning:
        result["warning"] = warning
        if not as_json:
            click.echo(f"warning: {warning}", err=True)
    _emit(result, as_json, [f"wrote {output} (injected at scale {scale})"])


_inject_options = [
    click.option("--scale", type=int, default=None, help="Injection scale (0 = finest)."),
    click.option("--preset", type=str, default=None, help="Named preset from the registry."),
    click.option("--mask", type=click.Path(exists=True, dir_okay=False), default=None),
    click.option("--no-noise", is_flag=True, help="Deterministic preview without per-scale noise."),
    click.option("--seed", default=0, show_default=True),
    click.option("--feather", default=0.0, show_default=True, help="Gaussian feather radius for the mask."),
    click.option("-o", "--output", "output", type=click.Path(), default="injected.png", show_default=True),
    click.option("--json", "as_json", is_flag=True),
]


def _with_inject_options(fn):
    for opt in reversed(_inject_options):
        fn = opt(fn)
    return fn


@main.command()
@click.argument("ckpt", type=click.Path(exists=True, file_okay=False))
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("--task", "preset_task", type=click.Choice(["harmonization", "editing", "paint_to_image"]), default=None, help="Disambiguate preset names shared across tasks.")
@_with_inject_options
@_wrap
def inject(ckpt, image, preset_task, scale, preset, mask, no_noise, seed, feather, output, as_json):
    """Feed an image into the pyramid at a scale and re-texture it."""
    _run_inject(ckpt, image, scale, preset, preset_task, mask, no_noise, seed, feather, output, as_json)


@main.command()
@click.argument("ckpt", type=click.Path(exists=True, file_okay=False))
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@_with_inject_options
@_wrap
def harmonize(ckpt, image, scale, preset, mask, no_noise, seed, feather, output, as_json):
    """Blend a pasted object into the training image's texture (mask required)."""
    if mask is None:
        raise click.ClickException("harmonize requires --mask")
    _run_inject(ckpt, image, scale, preset, "harmonization", mask, no_noise, seed, feather, output, as_json)


@main.command()
@click.argument("ckpt", type=click.Path(exists=True, file_okay=False))
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@_with_inject_options
@_wrap
def edit(ckpt, image, scale, preset, mask, no_noise, seed, feather, output, as_json):
    """Seamlessly stitch copy-pasted regions (mask required)."""
    if mask is None:
        raise click.ClickException("edit requires --mask")
    _run_inject(ckpt, image, scale, preset, "editing", mask, no_noise, seed, feather, output, as_json)


@main.command()
@click.argument("ckpt", type=click.Path(exists=True, file_okay=False))
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@_with_inject_options
@_wrap
def paint(ckpt, image, scale, preset, mask, no_noise, seed, feather, output, as_json):
    """Turn a paint/clipart layout into a photo-realistic image."""
    _run_inject(ckpt, image, scale, preset, "paint_to_image", mask, no_noise, seed, feather, output, as_json)


@main.command()
@click.argument("image", type=click.Path(exists=True, dir_okay=False))
@click.option("--factor", "-s", default=4, show_default=True, help="Integer upscale factor.")
@click.option("--ckpt", type=click.Path(exists=True, file_okay=False), default=None, help="Reuse an SR-mode checkpoint instead of training.")
@click.option("--iters", default=2000, show_default=True, help="Iterations per scale when training on the fly.")
@click.option("--seed", default=0, show_default=True)
@click.option("--no-noise", is_flag=True)
@click.option("-o", "--output", "output", type=click.Path(), default="sr.png", show_default=True)
@click.option("--save-ckpt", type=click.Path(), default=None, help="Keep the on-the-fly checkpoint here.")
@click.option("--json", "as_json", is_flag=True)
@_wrap
def sr(image, factor, ckpt, iters, seed, no_noise, output, save_ckpt, as_json):
    """Super-resolve an image by an integer factor."""
    img = imaging.load_image(image)
    plan = plan_super_resolution(factor)
    if ckpt is not None:
        stack = store.load(ckpt)
    else:
        cfg = TrainConfig.for_super_resolution(plan.r, iters_per_scale=iters, seed=seed)
        stack = train_pyramid(img, cfg)
        if save_ckpt:
            store.save(stack, save_ckpt)
    out = super_resolve(img, plan, stack, add_noise=not no_noise, seed=seed)
    imaging.save_image(out, output)
    result = {
        "image": str(output),
        "factor": plan.s,
        "rounds": plan.k,
        "round_factor": plan.r,
        "alpha_rec": stack.config.alpha_rec,
        "input_dims": list(img.shape[:2]),
        "output_dims": list(out.shape[:2]),
    }
    _emit(result, as_json, [
        f"wrote {output}: {img.shape[0]}x{img.shape[1]} -> {out.shape[0]}x{out.shape[1]} "
        f"({plan.k} rounds of r={plan.r:.4f})"
    ])


@main.command()
@click.argument("ckpt", type=click.Path(exists=True, file_okay=False))
@click.option("--alpha", required=True, type=float, help="Anchor strength toward the original image, in [0, 1].")
@click.option("--beta", required=True, type=float, help="Velocity smoothing, in [0, 1].")
@click.option("--start-scale", type=int, default=None)
@click.option("--frames", default=30, show_default=True)
@click.option("--fps", default=10, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--preset", type=str, default=None, help="Animation preset name (overrides alpha/beta/start-scale).")
@click.option("-o", "--output", "output", type=click.Path(), default="animation", show_default=True)
@click.option("--gif/--no-gif", default=True, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@_wrap
def animate(ckpt, alpha, beta, start_scale, frames, fps, seed, preset, output, gif, as_json):
    """Render a temporally coherent frame sequence from one image."""
    stack = store.load(ckpt)
    if preset is not None:
        p = load_registry().animation(preset)
        alpha, beta, start_scale = p.alpha, p.beta, p.start_scale
    params = AnimationParams(
        alpha=alpha, beta=beta, start_scale=start_scale, frames=frames, fps=fps, seed=seed
    )
    rendered = run_animation(stack, params)
    gif_path = Path(output).with_suffix(".gif") if gif else None
    paths = save_frames(rendered, output, gif_path=gif_path, fps=fps)
    result = {
        "frames": paths[: len(rendered)],
        "gif": str(gif_path) if gif_path else None,
        "alpha": alpha,
        "beta": beta,
        "start_scale": params.start_scale if params.start_scale is not None else stack.coarsest_index,
    }
    _emit(result, as_json, [f"wrote {len(rendered)} frames to {output}"])


@main.command()
@click.argument("real", type=click.Path(exists=True, dir_okay=False))
@click.argument("fake_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--extractor", default="fallback", type=click.Choice(["fallback", "inception"]), show_default=True)
@click.option("--report", type=click.Path(), default=None, help="Write a CSV report here.")
@click.option("--start-scale", type=int, default=None, help="Recorded in the report rows.")
@click.option("--json", "as_json", is_flag=True)
@_wrap
def sifid(real, fake_dir, extractor, report, start_scale, as_json):
    """Fréchet feature distance between one real image and generated samples."""
    real_img = imaging.load_image(real)
    if extractor == "inception":
        from .metrics import InceptionFeatureExtractor

        fx = InceptionFeatureExtractor()
    else:
        fx = metrics.RandomConvExtractor()
    fakes = sorted(
        p for p in Path(fake_dir).iterdir() if p.suffix.lower() in (".png", ".jpg", ".jpeg")
    )
    if not fakes:
        raise click.ClickException(f"no images found under {fake_dir}")
    scores = {str(p): metrics.sifid(real_img, imaging.load_image(p), fx) for p in fakes}
    mean = float(np.mean(list(scores.values())))
    if report:
        metrics.write_report(
            report,
            [
                {"image_id": p, "start_scale": start_scale if start_scale is not None else "", "sifid": s, "diversity": "", "rmse": ""}
                for p, s in scores.items()
            ],
        )
    result = {"extractor": fx.identifier, "mean_sifid": mean, "scores": scores}
    _emit(result, as_json, [f"mean sifid over {len(scores)} images: {mean:.6f} ({fx.identifier})"])


@main.command()
@click.argument("ckpt", type=click.Path(exists=True, file_okay=False))
@click.option("--count", default=100, show_default=True)
@click.option("--start-scale", type=int, default=None)
@click.option("--seed", default=0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@_wrap
def diversity(ckpt, count, start_scale, seed, as_json):
    """Mean per-pixel std over samples, normalized by the training image."""
    stack = store.load(ckpt)
    _, scalar = diversity_map(stack, start_scale=start_scale, count=count, seed=seed)
    result = {
        "diversity": scalar,
        "count": count,
        "start_scale": start_scale if start_scale is not None else stack.coarsest_index,
    }
    _emit(result, as_json, [f"diversity: {scalar:.4f} ({count} samples)"])


@main.command()
@click.option("--port", default=None, type=int, help="Overrides SINGAN_PORT (default 8000).")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--data-dir", type=click.Path(), default=None, help="Overrides SINGAN_DATA_DIR.")
@_wrap
def serve(port, host, data_dir):
    """Run the HTTP service (and the studio, when its build exists)."""
    import uvicorn

    from .service import create_app

    if port is None:
        port = int(os.environ.get("SINGAN_PORT", "8000"))
    app = create_app(Path(data_dir) if data_dir else None)
    uvicorn.run(app, host=host, port=port)


@main.command("presets")
@click.option("--task", type=click.Choice(["harmonization", "editing", "paint_to_image", "animation"]), default=None)
@click.option("--json", "as_json", is_flag=True)
@_wrap
def presets_cmd(task, as_json):
    """List the registry of per-image manipulation settings."""
    registry = load_registry()
    raw = registry.raw()
    tables = {task: raw[task]} if task else {t: raw[t] for t in ("harmonization", "editing", "paint_to_image", "animation")}
    lines = []
    for tname, rows in tables.items():
        lines.append(f"{tname}:")
        for name, row in rows.items():
            lines.append(f"  {name}: {row}")
    _emit(tables, as_json, lines)


if __name__ == "__main__":
    main()
