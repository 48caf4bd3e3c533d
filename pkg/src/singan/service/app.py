"""HTTP service wrapping the core package for the studio and batch clients.

Long-running training goes through an in-process job queue (one worker,
bounded backlog); inference endpoints share read-only loaded stacks.
Generated images are written under the data directory and served back as
PNG files.
"""

from __future__ import annotations

import hashlib
import io
import json
import os
import re
import threading
import uuid
from pathlib import Path
from typing import Optional

import numpy as np
from fastapi import FastAPI, File, Form, Request, UploadFile
from fastapi.exceptions import RequestValidationError
from fastapi.responses import FileResponse, JSONResponse, Response
from fastapi.staticfiles import StaticFiles

from .. import imaging, store
from ..applications import (
    AnimationParams,
    InjectionRequest,
    animate,
    inject,
    plan_super_resolution,
    save_frames,
)
from ..imaging import InvalidInputError
from ..nets import ConfigError, ShapeError
from ..presets import PresetError, load_registry
from ..sampling import SampleRequest, generate
from ..store import CheckpointError
from ..training import TrainConfig, train_pyramid
from .jobs import Job, JobManager, QueueFullError
from .schemas import (
    AnimateBody,
    AnimateResult,
    ErrorBody,
    InjectResult,
    JobCreated,
    JobStatus,
    LossRow,
    ModelSummary,
    SampleBody,
    SampleResult,
    TrainOptions,
)

_FILE_RE = re.compile(r"^[A-Za-z0-9_\-]+\.(png|gif)$")


def default_data_dir() -> Path:
    return Path(os.environ.get("SINGAN_DATA_DIR", "./singan-data"))


class ModelRegistry:
    """Loads checkpoints lazily and keeps a handful in memory."""

    def __init__(self, models_dir: Path, capacity: int = 4):
        self.models_dir = models_dir
        self.capacity = capacity
        self._cache: dict[str, object] = {}
        self._order: list[str] = []
        self._lock = threading.Lock()

    def path(self, model_id: str) -> Path:
        return self.models_dir / model_id

    def list_ids(self) -> list[str]:
        if not self.models_dir.is_dir():
            return []
        return sorted(
            p.name for p in self.models_dir.iterdir() if (p / "manifest.json").is_file()
        )

    def get(self, model_id: str):
        with self._lock:
            if model_id in self._cache:
                return self._cache[model_id]
        path = self.path(model_id)
        if not (path / "manifest.json").is_file():
            raise KeyError(model_id)
        stack = store.load(path)
        with self._lock:
            self._cache[model_id] = stack
            self._order.append(model_id)
            while len(self._order) > self.capacity:
                evicted = self._order.pop(0)
                self._cache.pop(evicted, None)
        return stack

    def meta(self, model_id: str) -> dict:
        meta_path = self.path(model_id) / "model_meta.json"
        if meta_path.is_file():
            return json.loads(meta_path.read_text())
        return {}


def create_app(data_dir: Optional[Path] = None) -> FastAPI:
    data_dir = Path(data_dir) if data_dir is not None else default_data_dir()
    models_dir = data_dir / "models"
    outputs_dir = data_dir / "outputs"
    uploads_dir = data_dir / "uploads"
    for d in (models_dir, outputs_dir, uploads_dir):
        d.mkdir(parents=True, exist_ok=True)

    app = FastAPI(
        title="singan service",
        version="1.0.0",
        description=(
            "Single-image generative modeling: train a pyramid of patch "
            "generators on one image, then sample, inject, super-resolve "
            "and animate through this API."
        ),
    )
    registry = ModelRegistry(models_dir)
    jobs = JobManager()
    presets = load_registry()
    app.state.data_dir = data_dir
    app.state.jobs = jobs
    app.state.registry = registry

    # ----- error discipline: every error is {code, message} -----

    def _error(status: int, code: str, message: str) -> JSONResponse:
        return JSONResponse(
            status_code=status, content=ErrorBody(code=code, message=message).model_dump()
        )

    @app.exception_handler(RequestValidationError)
    async def _validation_handler(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        loc = ".".join(str(x) for x in first.get("loc", []))
        return _error(422, "validation_error", f"{loc}: {first.get('msg', 'invalid')}")

    @app.exception_handler(InvalidInputError)
    @app.exception_handler(ConfigError)
    @app.exception_handler(ShapeError)
    async def _invalid_handler(request: Request, exc: Exception):
        return _error(422, "invalid_input", str(exc))

    @app.exception_handler(PresetError)
    async def _preset_handler(request: Request, exc: Exception):
        return _error(404, "preset_not_found", str(exc))

    @app.exception_handler(QueueFullError)
    async def _queue_handler(request: Request, exc: Exception):
        return _error(409, "queue_full", str(exc))

    @app.exception_handler(KeyError)
    async def _missing_handler(request: Request, exc: Exception):
        return _error(404, "not_found", f"unknown resource {exc}")

    @app.exception_handler(CheckpointError)
    async def _checkpoint_handler(request: Request, exc: Exception):
        return _error(500, "checkpoint_error", str(exc))

    # ----- helpers -----

    def _save_png(img: np.ndarray) -> str:
        name = f"{uuid.uuid4().hex}.png"
        (outputs_dir / name).write_bytes(imaging.encode_png(img))
        return f"/v1/files/{name}"

    def _read_upload(file: UploadFile) -> np.ndarray:
        data = file.file.read()
        if not data:
            raise InvalidInputError("empty image upload")
        try:
            return imaging.load_image(io.BytesIO(data))
        except InvalidInputError:
            raise
        except Exception as e:
            raise InvalidInputError(f"could not decode image: {e}") from None

    def _get_stack(model_id: str):
        try:
            return registry.get(model_id)
        except KeyError:
            raise KeyError(model_id)

    # ----- endpoints -----

    @app.post("/v1/models", response_model=JobCreated, status_code=202)
    def create_model(
        image: UploadFile = File(...),
        config: str = Form(default="{}"),
    ):
        opts = TrainOptions.model_validate_json(config)
        img = _read_upload(image)
        upload_name = f"{uuid.uuid4().hex}.png"
        (uploads_dir / upload_name).write_bytes(imaging.encode_png(img))

        def work(job: Job) -> str:
            if opts.sr_mode:
                plan = plan_super_resolution(opts.sr_factor)
                cfg = TrainConfig.for_super_resolution(
                    plan.r,
                    iters_per_scale=opts.iters_per_scale,
                    seed=opts.seed,
                    min_coarse_dim=opts.min_coarse_dim,
                    padding_mode=opts.padding,
                )
            else:
                cfg = TrainConfig(
                    iters_per_scale=opts.iters_per_scale,
                    seed=opts.seed,
                    max_fine_dim=opts.scales_max_dim,
                    min_coarse_dim=opts.min_coarse_dim,
                    padding_mode=opts.padding,
                )
            job.iters_per_scale = cfg.iters_per_scale

            def observe(event: dict) -> None:
                if event["type"] == "scale_start":
                    job.scale = event["scale"]
                    job.iter = 0
                elif event["type"] == "iteration":
                    job.scale = event["scale"]
                    job.iter = event["iteration"]
                    job.losses.append(
                        {k: event[k] for k in ("iteration", "scale", "d_loss", "g_adv", "g_rec", "sigma")}
                    )

            stack = train_pyramid(img, cfg, observer=observe)
            job.num_scales = stack.num_scales
            model_id = uuid.uuid4().hex[:12]
            store.save(stack, models_dir / model_id)
            if opts.name:
                (models_dir / model_id / "model_meta.json").write_text(
                    json.dumps({"name": opts.name, "source": upload_name})
                )
            return model_id

        job = jobs.submit(work)
        return JobCreated(job_id=job.job_id)

    @app.get("/v1/jobs/{job_id}", response_model=JobStatus)
    def job_status(job_id: str, since: int = 0):
        job = jobs.get(job_id)
        if job is None:
            raise KeyError(job_id)
        rows = job.losses[since:]
        return JobStatus(
            job_id=job.job_id,
            state=job.state,
            scale=job.scale,
            iter=job.iter,
            num_scales=job.num_scales,
            iters_per_scale=job.iters_per_scale,
            model_id=job.model_id,
            error=job.error,
            losses=[LossRow(**r) for r in rows],
            next_index=since + len(rows),
        )

    @app.get("/v1/models")
    def list_models():
        out = []
        for model_id in registry.list_ids():
            manifest = json.loads((registry.path(model_id) / "manifest.json").read_text())
            out.append(
                ModelSummary(
                    model_id=model_id,
                    name=registry.meta(model_id).get("name"),
                    coarsest_index=manifest["coarsest_index"],
                    levels=manifest["levels"],
                ).model_dump()
            )
        return out

    @app.get("/v1/models/{model_id}")
    def model_manifest(model_id: str):
        path = registry.path(model_id) / "manifest.json"
        if not path.is_file():
            raise KeyError(model_id)
        return json.loads(path.read_text())

    @app.post("/v1/models/{model_id}/samples", response_model=SampleResult)
    def sample(model_id: str, body: SampleBody):
        stack = _get_stack(model_id)
        seed = body.seed if body.seed is not None else int.from_bytes(os.urandom(4), "little")
        req = SampleRequest(
            start_scale=body.start_scale,
            height=body.height,
            width=body.width,
            padding_mode=body.padding,
            seed=seed,
            count=body.count,
        )
        images = generate(stack, req)
        digest = hashlib.sha256()
        urls = []
        for img in images:
            png = imaging.encode_png(img)
            digest.update(png)
            name = f"{uuid.uuid4().hex}.png"
            (outputs_dir / name).write_bytes(png)
            urls.append(f"/v1/files/{name}")
        etag = digest.hexdigest()
        return Response(
            content=SampleResult(images=urls, etag=etag, seed=seed).model_dump_json(),
            media_type="application/json",
            headers={"ETag": f'"{etag}"'},
        )

    @app.post("/v1/models/{model_id}/inject", response_model=InjectResult)
    def inject_image(
        model_id: str,
        image: UploadFile = File(...),
        scale: Optional[int] = Form(default=None),
        preset: Optional[str] = Form(default=None),
        preset_task: Optional[str] = Form(default=None),
        noise: bool = Form(default=True),
        seed: int = Form(default=0),
        feather: float = Form(default=0.0),
        mask: Optional[UploadFile] = File(default=None),
    ):
        stack = _get_stack(model_id)
        preset_name = None
        if preset is not None:
            hit = presets.find_injection(preset, task=preset_task)
            scale = hit.scale
            preset_name = f"{hit.task}/{hit.name}"
        if scale is None:
            raise InvalidInputError("provide either a scale or a preset")
        img = _read_upload(image)
        mask_arr = None
        if mask is not None:
            m = _read_upload(mask)
            mask_arr = np.where(m.mean(axis=2) > 0.0, 1.0, 0.0).astype(np.float32)
        out = inject(
            stack,
            InjectionRequest(
                input=img,
                scale_n=int(scale),
                add_noise=noise,
                blend_mask=mask_arr,
                seed=seed,
                feather_radius=feather,
            ),
        )
        return InjectResult(image=_save_png(out), scale=int(scale), preset=preset_name)

    @app.post("/v1/models/{model_id}/animate", response_model=AnimateResult)
    def animate_model(model_id: str, body: AnimateBody):
        stack = _get_stack(model_id)
        params = AnimationParams(
            alpha=body.alpha,
            beta=body.beta,
            start_scale=body.start_scale,
            frames=body.frames,
            fps=body.fps,
            seed=body.seed,
        )
        frames = animate(stack, params)
        urls = [_save_png(f) for f in frames]
        token = uuid.uuid4().hex
        gif_name = f"{token}.gif"
        save_frames(frames, outputs_dir / token, gif_path=outputs_dir / gif_name, fps=body.fps)
        return AnimateResult(frames=urls, gif=f"/v1/files/{gif_name}")

    @app.get("/v1/models/{model_id}/image")
    def model_image(model_id: str):
        stack = _get_stack(model_id)
        return Response(content=imaging.encode_png(stack.train_image), media_type="image/png")

    @app.get("/v1/models/{model_id}/presets")
    def model_presets(model_id: str):
        path = registry.path(model_id) / "manifest.json"
        if not path.is_file():
            raise KeyError(model_id)
        manifest = json.loads(path.read_text())
        return {
            "coarsest_index": manifest["coarsest_index"],
            "presets": presets.raw(),
        }

    @app.get("/v1/files/{name}")
    def serve_file(name: str):
        if not _FILE_RE.match(name):
            raise InvalidInputError(f"bad file name {name!r}")
        path = outputs_dir / name
        if not path.is_file():
            raise KeyError(name)
        media = "image/png" if name.endswith(".png") else "image/gif"
        return FileResponse(path, media_type=media)

    @app.get("/healthz")
    def health():
        return {"status": "ok"}

    env_dist = os.environ.get("SINGAN_STUDIO_DIST")
    candidates = [
        Path.cwd() / "frontend" / "dist",
        Path(__file__).resolve().parents[3] / "frontend" / "dist",
    ]
    if env_dist:
        candidates.insert(0, Path(env_dist))
    for candidate in candidates:
        if candidate.is_dir():
            app.mount("/studio", StaticFiles(directory=candidate, html=True), name="studio")
            break

    return app
