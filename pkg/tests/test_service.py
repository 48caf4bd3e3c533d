import io
import json
import threading
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from singan import imaging, store
from singan.service import create_app
from singan.service.jobs import MAX_QUEUE_DEPTH


@pytest.fixture()
def service(tmp_path, mini_stack):
    app = create_app(tmp_path / "data")
    client = TestClient(app)
    store.save(mini_stack, tmp_path / "data" / "models" / "mini")
    yield client, app
    app.state.jobs.shutdown()


def png_bytes(img: np.ndarray) -> bytes:
    return imaging.encode_png(img)


def tiny_image() -> bytes:
    rng = np.random.default_rng(0)
    return png_bytes(rng.uniform(-1, 1, (25, 25, 3)).astype(np.float32))


def wait_job(client, job_id, timeout=120.0):
    t0 = time.time()
    states = []
    while time.time() - t0 < timeout:
        body = client.get(f"/v1/jobs/{job_id}").json()
        if not states or states[-1] != body["state"]:
            states.append(body["state"])
        if body["state"] in ("done", "failed"):
            return body, states
        time.sleep(0.05)
    raise TimeoutError(states)


class TestJobLifecycle:
    def test_train_job_completes(self, service):
        client, app = service
        resp = client.post(
            "/v1/models",
            files={"image": ("toy.png", tiny_image(), "image/png")},
            data={"config": json.dumps({"iters_per_scale": 2, "seed": 1, "name": "t"})},
        )
        assert resp.status_code == 202
        job_id = resp.json()["job_id"]
        body, states = wait_job(client, job_id)
        assert body["state"] == "done"
        assert body["model_id"]
        # states observed through polling are a subsequence of the machine
        allowed = ["queued", "running", "done"]
        assert [s for s in allowed if s in states] == states
        manifest = client.get(f"/v1/models/{body['model_id']}").json()
        assert manifest["coarsest_index"] >= 0
        models = client.get("/v1/models").json()
        assert any(m["model_id"] == body["model_id"] for m in models)

    def test_job_losses_streamed_incrementally(self, service):
        client, app = service
        resp = client.post(
            "/v1/models",
            files={"image": ("toy.png", tiny_image(), "image/png")},
            data={"config": json.dumps({"iters_per_scale": 3, "seed": 2})},
        )
        job_id = resp.json()["job_id"]
        body, _ = wait_job(client, job_id)
        full = client.get(f"/v1/jobs/{job_id}").json()
        assert len(full["losses"]) == 3  # single-scale 25px pyramid
        tail = client.get(f"/v1/jobs/{job_id}", params={"since": full["next_index"]}).json()
        assert tail["losses"] == []
        assert tail["next_index"] == full["next_index"]

    def test_unknown_job_404(self, service):
        client, _ = service
        resp = client.get("/v1/jobs/nope")
        assert resp.status_code == 404
        assert set(resp.json()) == {"code", "message"}

    def test_queue_full_gives_409(self, service):
        client, app = service
        release = threading.Event()
        started = threading.Event()

        def blocker(job):
            started.set()
            release.wait(timeout=30)
            return "blocked-model"

        app.state.jobs.submit(blocker)
        started.wait(timeout=5)
        ok = 0
        for _ in range(MAX_QUEUE_DEPTH):
            r = client.post(
                "/v1/models",
                files={"image": ("toy.png", tiny_image(), "image/png")},
                data={"config": json.dumps({"iters_per_scale": 1})},
            )
            assert r.status_code == 202
            ok += 1
        r = client.post(
            "/v1/models",
            files={"image": ("toy.png", tiny_image(), "image/png")},
            data={"config": json.dumps({"iters_per_scale": 1})},
        )
        assert r.status_code == 409
        assert r.json()["code"] == "queue_full"
        release.set()


class TestValidation:
    def test_invalid_alpha_422(self, service):
        client, _ = service
        resp = client.post(
            "/v1/models/mini/animate",
            json={"alpha": 1.5, "beta": 0.5, "frames": 2},
        )
        assert resp.status_code == 422
        body = resp.json()
        assert body["code"] == "validation_error"
        assert "alpha" in body["message"]

    def test_out_of_range_scale_422(self, service):
        client, _ = service
        resp = client.post("/v1/models/mini/samples", json={"start_scale": 99, "seed": 1})
        assert resp.status_code == 422
        assert resp.json()["code"] == "invalid_input"

    def test_bad_count_422(self, service):
        client, _ = service
        resp = client.post("/v1/models/mini/samples", json={"count": 0})
        assert resp.status_code == 422

    def test_unknown_model_404(self, service):
        client, _ = service
        resp = client.post("/v1/models/ghost/samples", json={"count": 1, "seed": 1})
        assert resp.status_code == 404


class TestSamples:
    def test_fixed_seed_stable_etag(self, service):
        client, _ = service
        a = client.post("/v1/models/mini/samples", json={"count": 2, "seed": 7})
        b = client.post("/v1/models/mini/samples", json={"count": 2, "seed": 7})
        assert a.status_code == b.status_code == 200
        assert a.headers["etag"] == b.headers["etag"]
        assert a.json()["etag"] == b.json()["etag"]

    def test_different_seed_different_etag(self, service):
        client, _ = service
        a = client.post("/v1/models/mini/samples", json={"count": 1, "seed": 7})
        b = client.post("/v1/models/mini/samples", json={"count": 1, "seed": 8})
        assert a.json()["etag"] != b.json()["etag"]

    def test_images_served_as_png(self, service):
        client, _ = service
        resp = client.post("/v1/models/mini/samples", json={"count": 1, "seed": 3})
        url = resp.json()["images"][0]
        img = client.get(url)
        assert img.status_code == 200
        assert img.headers["content-type"] == "image/png"
        assert img.content[:8] == b"\x89PNG\r\n\x1a\n"

    def test_custom_dims(self, service, mini_stack):
        client, _ = service
        h0, w0 = mini_stack.dims_at(0)
        resp = client.post(
            "/v1/models/mini/samples", json={"count": 1, "seed": 4, "width": w0 * 2}
        )
        url = resp.json()["images"][0]
        from PIL import Image

        img = Image.open(io.BytesIO(client.get(url).content))
        assert img.size == (w0 * 2, h0)


class TestInject:
    def test_inject_with_scale(self, service, mini_stack):
        client, _ = service
        resp = client.post(
            "/v1/models/mini/inject",
            files={"image": ("in.png", png_bytes(mini_stack.train_image), "image/png")},
            data={"scale": "0", "seed": "5"},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["scale"] == 0
        assert client.get(body["image"]).status_code == 200

    def test_inject_with_mask(self, service, mini_stack):
        client, _ = service
        mask = np.zeros(mini_stack.dims_at(0) + (3,), dtype=np.float32)
        mask[:, :, :] = -1.0
        mask[5:10, 5:10] = 1.0
        resp = client.post(
            "/v1/models/mini/inject",
            files={
                "image": ("in.png", png_bytes(mini_stack.train_image), "image/png"),
                "mask": ("mask.png", png_bytes(mask), "image/png"),
            },
            data={"scale": "0", "seed": "5"},
        )
        assert resp.status_code == 200

    def test_inject_rejects_coarsest(self, service, mini_stack):
        client, _ = service
        resp = client.post(
            "/v1/models/mini/inject",
            files={"image": ("in.png", png_bytes(mini_stack.train_image), "image/png")},
            data={"scale": str(mini_stack.coarsest_index)},
        )
        assert resp.status_code == 422

    def test_inject_unknown_preset_404(self, service, mini_stack):
        client, _ = service
        resp = client.post(
            "/v1/models/mini/inject",
            files={"image": ("in.png", png_bytes(mini_stack.train_image), "image/png")},
            data={"preset": "NoSuchPreset"},
        )
        assert resp.status_code == 404


class TestAnimateEndpoint:
    def test_animate_returns_frames_and_gif(self, service):
        client, _ = service
        resp = client.post(
            "/v1/models/mini/animate",
            json={"alpha": 0.2, "beta": 0.8, "frames": 3, "seed": 1},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["frames"]) == 3
        gif = client.get(body["gif"])
        assert gif.headers["content-type"] == "image/gif"


class TestModelImage:
    def test_training_image_served(self, service, mini_stack):
        client, _ = service
        resp = client.get("/v1/models/mini/image")
        assert resp.status_code == 200
        assert resp.headers["content-type"] == "image/png"
        from PIL import Image

        img = Image.open(io.BytesIO(resp.content))
        h, w = mini_stack.dims_at(0)
        assert img.size == (w, h)

    def test_unknown_model(self, service):
        client, _ = service
        assert client.get("/v1/models/ghost/image").status_code == 404


class TestPresetsEndpoint:
    def test_model_presets(self, service):
        client, _ = service
        resp = client.get("/v1/models/mini/presets")
        assert resp.status_code == 200
        body = resp.json()
        assert body["presets"]["harmonization"]["Tree"] == {"scale": 1, "num_scales": 9}
        assert "coarsest_index" in body

    def test_get_idempotent(self, service):
        client, _ = service
        a = client.get("/v1/models/mini/presets").json()
        b = client.get("/v1/models/mini/presets").json()
        assert a == b


class TestFileServing:
    def test_traversal_rejected(self, service):
        client, _ = service
        resp = client.get("/v1/files/..%2Fmanifest.json")
        assert resp.status_code in (404, 422)

    def test_missing_file_404(self, service):
        client, _ = service
        assert client.get("/v1/files/nope.png").status_code == 404


class TestOpenApiDocument:
    def test_committed_document_in_sync(self, service):
        from pathlib import Path

        client, app = service
        committed = Path(__file__).parents[1] / "docs" / "openapi.json"
        if not committed.is_file():
            pytest.skip("openapi document not generated yet")
        assert json.loads(committed.read_text()) == app.openapi()
