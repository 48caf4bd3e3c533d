"""Deterministic checkpoint persistence.

A checkpoint is a directory: a JSON manifest describing the pyramid
(levels, scale factor, noise amplitudes, kernel counts, config snapshot,
content digests), one raw weight blob per scale, the fixed coarsest
reconstruction noise, the training image, and a copy of the preset
registry. Weight blobs are flat little-endian float32 arrays behind a
16-byte header (magic ``SGW1``, scale index, tensor count); tensor names
and shapes live in the manifest. No pickle anywhere, so checkpoints are
inspectable and language neutral.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import tempfile
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np
import torch

import jsonschema

from .imaging import ScaleSchedule
from .nets import Generator, PaddingMode, kernels_for_scale
from .presets import load_registry
from .stack import GeneratorStack
from .training import TrainConfig

FORMAT_VERSION = 1
MAGIC = b"SGW1"
HEADER = struct.Struct("<4sIII")  # magic, scale index, tensor count, reserved
MANIFEST_NAME = "manifest.json"


class CheckpointError(Exception):
    pass


class ManifestError(CheckpointError):
    pass


class VersionMismatchError(CheckpointError):
    pass


class DigestMismatchError(CheckpointError):
    pass


class TruncatedBlobError(CheckpointError):
    pass


@dataclass(frozen=True)
class Checkpoint:
    path: Path
    manifest: dict


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def array_digest(arr: np.ndarray) -> str:
    return sha256_bytes(np.ascontiguousarray(arr).tobytes())


def _tensor_entries(module: torch.nn.Module) -> list[tuple[str, torch.Tensor]]:
    sd = module.state_dict()
    return [(name, sd[name]) for name in sorted(sd)]


def _encode_blob(index_from_coarse: int, entries) -> bytes:
    parts = [HEADER.pack(MAGIC, index_from_coarse, len(entries), 0)]
    for _, tensor in entries:
        arr = tensor.detach().cpu().numpy().astype("<f4")
        parts.append(np.ascontiguousarray(arr).tobytes())
    return b"".join(parts)


def save(stack: GeneratorStack, path) -> Checkpoint:
    """Write a stack to ``path`` atomically (temp dir + rename)."""
    path = Path(path)
    z_star = np.ascontiguousarray(stack.z_star.astype("<f4"))
    image = np.ascontiguousarray(stack.train_image.astype("<f4"))

    weights = []
    blobs = []
    for i, gen in enumerate(stack.generators):
        entries = _tensor_entries(gen)
        blob = _encode_blob(i, entries)
        blobs.append(blob)
        weights.append({
            "file": f"scale_{i}.weights",
            "scale_index_from_coarse": i,
            "sha256": sha256_bytes(blob),
            "tensors": [
                {"name": name, "shape": list(t.shape), "dtype": str(t.dtype).replace("torch.", "")}
                for name, t in entries
            ],
        })

    cfg = stack.config
    manifest = {
        "format_version": FORMAT_VERSION,
        "coarsest_index": stack.coarsest_index,
        "scale_factor": stack.schedule.r,
        "levels": [list(d) for d in stack.schedule.levels],
        "sigmas": list(map(float, stack.sigmas)),
        "padding_mode": PaddingMode.parse(cfg.padding_mode).value,
        "kernel_counts": [kernels_for_scale(i) for i in range(stack.num_scales)],
        "value_range": [-1.0, 1.0],
        "seed": int(cfg.seed),
        "channels": stack.channels,
        "z_star": {
            "file": "noise_star.bin",
            "shape": list(z_star.shape),
            "sha256": array_digest(z_star),
        },
        "train_image": {
            "file": "image.bin",
            "shape": list(image.shape),
            "sha256": array_digest(image),
        },
        "weights": weights,
        "freeze_hashes": list(stack.freeze_hashes),
        "config": cfg.as_dict(),
    }
    validate_manifest(manifest)

    tmp = Path(tempfile.mkdtemp(prefix=path.name + ".", dir=path.parent or "."))
    try:
        (tmp / MANIFEST_NAME).write_text(_dump_manifest(manifest))
        for meta, blob in zip(weights, blobs):
            (tmp / meta["file"]).write_bytes(blob)
        (tmp / "noise_star.bin").write_bytes(z_star.tobytes())
        (tmp / "image.bin").write_bytes(image.tobytes())
        (tmp / "presets.json").write_text(
            json.dumps(load_registry().raw(), indent=2, sort_keys=True)
        )
        if path.exists():
            _remove_dir(path)
        os.replace(tmp, path)
    except Exception:
        _remove_dir(tmp)
        raise
    return Checkpoint(path=path, manifest=manifest)


def _dump_manifest(manifest: dict) -> str:
    return json.dumps(manifest, indent=2, sort_keys=True)


def _remove_dir(p: Path) -> None:
    import shutil

    shutil.rmtree(p, ignore_errors=True)


_SCHEMA = None


def manifest_schema() -> dict:
    global _SCHEMA
    if _SCHEMA is None:
        text = resources.files("singan").joinpath("data/checkpoint_schema.json").read_text()
        _SCHEMA = json.loads(text)
    return _SCHEMA


def validate_manifest(manifest: dict) -> None:
    try:
        jsonschema.validate(manifest, manifest_schema())
    except jsonschema.ValidationError as e:
        raise ManifestError(f"manifest schema violation: {e.message}") from None
    if manifest["format_version"] != FORMAT_VERSION:
        raise VersionMismatchError(
            f"checkpoint format {manifest['format_version']} != supported {FORMAT_VERSION}"
        )
    if len(manifest["weights"]) != manifest["coarsest_index"] + 1:
        raise ManifestError(
            f"{len(manifest['weights'])} weight blobs for {manifest['coarsest_index'] + 1} scales"
        )


def _read_exact(path: Path, expected_sha: str) -> bytes:
    data = path.read_bytes()
    if sha256_bytes(data) != expected_sha:
        raise DigestMismatchError(f"{path.name}: content digest mismatch")
    return data


def _decode_blob(data: bytes, meta: dict) -> dict[str, torch.Tensor]:
    if len(data) < HEADER.size:
        raise TruncatedBlobError(f"{meta['file']}: shorter than the header")
    magic, index, count, _ = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ManifestError(f"{meta['file']}: bad magic {magic!r}")
    if index != meta["scale_index_from_coarse"]:
        raise ManifestError(f"{meta['file']}: header scale index {index} != manifest")
    if count != len(meta["tensors"]):
        raise ManifestError(f"{meta['file']}: header tensor count {count} != manifest")
    offset = HEADER.size
    out = {}
    for tmeta in meta["tensors"]:
        numel = int(np.prod(tmeta["shape"])) if tmeta["shape"] else 1
        nbytes = numel * 4
        if offset + nbytes > len(data):
            raise TruncatedBlobError(f"{meta['file']}: truncated at tensor {tmeta['name']}")
        arr = np.frombuffer(data, dtype="<f4", count=numel, offset=offset).reshape(tmeta["shape"])
        t = torch.from_numpy(arr.copy())
        if tmeta["dtype"] != "float32":
            t = t.to(getattr(torch, tmeta["dtype"]))
        out[tmeta["name"]] = t
        offset += nbytes
    if offset != len(data):
        raise ManifestError(f"{meta['file']}: {len(data) - offset} trailing bytes")
    return out


def load(path) -> GeneratorStack:
    """Load a checkpoint; reconstruction images are recomputed so the
    loaded stack reproduces the saved stack's outputs bit for bit."""
    path = Path(path)
    mpath = path / MANIFEST_NAME
    if not mpath.is_file():
        raise ManifestError(f"no {MANIFEST_NAME} under {path}")
    try:
        manifest = json.loads(mpath.read_text())
    except json.JSONDecodeError as e:
        raise ManifestError(f"manifest is not valid JSON: {e}") from None
    validate_manifest(manifest)

    schedule = ScaleSchedule(
        levels=tuple(tuple(d) for d in manifest["levels"]),
        r=float(manifest["scale_factor"]),
    )
    channels = int(manifest["channels"])
    cfg = TrainConfig(**manifest["config"])
    mode = PaddingMode.parse(manifest["padding_mode"])

    z_meta = manifest["z_star"]
    z_star = np.frombuffer(
        _read_exact(path / z_meta["file"], z_meta["sha256"]), dtype="<f4"
    ).reshape(z_meta["shape"]).copy()
    img_meta = manifest["train_image"]
    image = np.frombuffer(
        _read_exact(path / img_meta["file"], img_meta["sha256"]), dtype="<f4"
    ).reshape(img_meta["shape"]).copy()

    generators = []
    for meta in manifest["weights"]:
        i = meta["scale_index_from_coarse"]
        gen = Generator(channels, manifest["kernel_counts"][i], padding_mode=mode)
        tensors = _decode_blob(_read_exact(path / meta["file"], meta["sha256"]), meta)
        gen.load_state_dict(tensors)
        gen.eval()
        for p in gen.parameters():
            p.requires_grad_(False)
        generators.append(gen)

    stack = GeneratorStack(
        schedule=schedule,
        generators=generators,
        sigmas=[float(s) for s in manifest["sigmas"]],
        z_star=z_star,
        recon_images=[],
        train_image=image,
        config=cfg,
        freeze_hashes=list(manifest["freeze_hashes"]),
    )
    stack.recon_images = stack.run_reconstruction(mode)
    return stack
