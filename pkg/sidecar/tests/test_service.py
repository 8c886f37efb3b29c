from __future__ import annotations

import pytest
import torch
from fastapi.testclient import TestClient
from transformers import AutoModelForCausalLM, AutoTokenizer

from longsumm_sidecar.registry import SidecarModelEntry, load_registry
from longsumm_sidecar.service import (
    INSTRUCT_TEMPLATE,
    SUMMARY_MARKER,
    _load_checkpoint,
    apply_instruct_template,
    create_app,
)


@pytest.fixture(scope="module")
def client(app):
    return TestClient(app)


class TestRegistry:
    def test_loads_three_entries(self, entries):
        assert [e.model_id for e in entries] == [
            "tiny-encoder", "tiny-encoder-cls", "tiny-decoder",
        ]

    def test_validation_rejects_bad_role(self, checkpoints):
        with pytest.raises(ValueError, match="role"):
            SidecarModelEntry(
                "bad", checkpoints["encoder"], "ranker", "encoder", 512, "t"
            )

    def test_extractive_must_be_encoder(self, checkpoints):
        with pytest.raises(ValueError, match="encoder"):
            SidecarModelEntry(
                "bad", checkpoints["decoder"], "extractive", "decoder-only", 512, "t"
            )

    def test_duplicate_ids_rejected(self, registry_path, tmp_path):
        content = registry_path.read_text().replace("tiny-encoder-cls", "tiny-encoder")
        duplicated = tmp_path / "dup.yaml"
        duplicated.write_text(content)
        with pytest.raises(ValueError, match="duplicate"):
            load_registry(duplicated)

    def test_declared_context_must_fit_checkpoint(self, checkpoints):
        entry = SidecarModelEntry(
            "too-long", checkpoints["encoder"], "extractive", "encoder", 10_000, "t"
        )
        with pytest.raises(ValueError, match="configured maximum"):
            _load_checkpoint(entry)


class TestModelsEndpoint:
    def test_profiles_shape(self, client):
        profiles = client.get("/v1/models").json()["profiles"]
        by_id = {p["model_id"]: p for p in profiles}
        assert by_id["tiny-decoder"]["architecture"] == "decoder-only"
        assert by_id["tiny-decoder"]["reserved_generation_tokens"] == 32
        assert by_id["tiny-encoder"]["context_length"] == 512
        # embedding profiles declare how vectors are pooled
        assert by_id["tiny-encoder"]["pooling"] == "mean"
        assert by_id["tiny-encoder-cls"]["pooling"] == "cls"
        assert by_id["tiny-decoder"]["pooling"] is None

    def test_unknown_endpoint_404(self, client):
        assert client.get("/v1/nothing").status_code == 404


class TestCountTokens:
    def test_empty_text_counts_zero(self, client):
        response = client.post(
            "/v1/count_tokens", json={"model": "tiny-encoder", "text": ""}
        )
        assert response.status_code == 200
        assert response.json() == {"count": 0}

    def test_counts_whitespace_tokens(self, client):
        response = client.post(
            "/v1/count_tokens",
            json={"model": "tiny-encoder", "text": "Summarise the following"},
        )
        assert response.json() == {"count": 3}

    def test_accepts_tokenizer_id(self, client):
        response = client.post(
            "/v1/count_tokens", json={"model": "tiny-words", "text": "a b"}
        )
        assert response.status_code == 200
        assert response.json()["count"] == 2

    def test_unknown_model_lists_available(self, client):
        response = client.post("/v1/count_tokens", json={"model": "nope", "text": "x"})
        assert response.status_code == 404
        body = response.json()
        assert "tiny-encoder" in body["available_models"]
        assert "error" in body

    def test_malformed_body_422(self, client):
        response = client.post("/v1/count_tokens", json={"model": "tiny-encoder"})
        assert response.status_code == 422


class TestEmbed:
    def test_three_texts_three_vectors(self, client):
        response = client.post(
            "/v1/embed",
            json={"model": "tiny-encoder", "texts": ["One.", "Two.", "Three."]},
        )
        assert response.status_code == 200
        body = response.json()
        assert len(body["vectors"]) == 3
        assert body["dim"] == 16
        assert all(len(v) == 16 for v in body["vectors"])
        assert all(isinstance(x, float) for v in body["vectors"] for x in v)

    def test_deterministic_within_tolerance(self, client):
        payload = {"model": "tiny-encoder", "texts": ["the same text twice"]}
        first = client.post("/v1/embed", json=payload).json()["vectors"][0]
        second = client.post("/v1/embed", json=payload).json()["vectors"][0]
        assert max(abs(a - b) for a, b in zip(first, second)) < 1e-6

    def test_mean_and_cls_pooling_differ(self, client):
        payload = {"texts": ["a document with several words"]}
        mean = client.post("/v1/embed", json={"model": "tiny-encoder", **payload})
        cls = client.post("/v1/embed", json={"model": "tiny-encoder-cls", **payload})
        assert mean.json()["vectors"] != cls.json()["vectors"]

    def test_empty_text_rejected(self, client):
        response = client.post(
            "/v1/embed", json={"model": "tiny-encoder", "texts": ["ok", ""]}
        )
        assert response.status_code == 422

    def test_generation_model_does_not_embed(self, client):
        response = client.post(
            "/v1/embed", json={"model": "tiny-decoder", "texts": ["x"]}
        )
        assert response.status_code == 422


class TestGenerate:
    def test_returns_text(self, client):
        response = client.post(
            "/v1/generate",
            json={
                "model": "tiny-decoder",
                "prompt": "This is a tiny document about regulations",
                "max_new_tokens": 8,
            },
        )
        assert response.status_code == 200
        assert isinstance(response.json()["text"], str)

    def test_greedy_decoding_is_deterministic(self, client):
        payload = {
            "model": "tiny-decoder",
            "prompt": "the following text about articles of law.",
            "max_new_tokens": 12,
        }
        first = client.post("/v1/generate", json=payload).json()["text"]
        second = client.post("/v1/generate", json=payload).json()["text"]
        assert first == second

    def test_sampling_requires_seed(self, client):
        response = client.post(
            "/v1/generate",
            json={"model": "tiny-decoder", "prompt": "x", "max_new_tokens": 4,
                  "sample": True},
        )
        assert response.status_code == 422

    def test_seeded_sampling_is_reproducible(self, client):
        payload = {
            "model": "tiny-decoder", "prompt": "the following text",
            "max_new_tokens": 8, "sample": True, "seed": 7,
        }
        first = client.post("/v1/generate", json=payload).json()["text"]
        second = client.post("/v1/generate", json=payload).json()["text"]
        assert first == second

    def test_embedding_model_does_not_generate(self, client):
        response = client.post(
            "/v1/generate", json={"model": "tiny-encoder", "prompt": "x"}
        )
        assert response.status_code == 422

    def test_invalid_max_new_tokens(self, client):
        response = client.post(
            "/v1/generate",
            json={"model": "tiny-decoder", "prompt": "x", "max_new_tokens": 0},
        )
        assert response.status_code == 422


class TestInstructTemplate:
    def test_template_matches_expected_bytes(self):
        rendered = apply_instruct_template("X")
        expected = b"Summarise the following text.\n### Text:\nX\n### Summary:\n"
        assert rendered.encode("utf-8") == expected
        assert INSTRUCT_TEMPLATE.format(text="X") == rendered

    def test_already_templated_prompt_left_alone(self):
        templated = INSTRUCT_TEMPLATE.format(text="body")
        assert apply_instruct_template(templated) == templated

    def test_round_trip_strips_template_from_output(self, client, checkpoints):
        raw = "This is a tiny document about regulations and articles of law."
        response = client.post(
            "/v1/generate",
            json={"model": "tiny-decoder", "prompt": raw, "max_new_tokens": 10},
        )
        served = response.json()["text"]
        assert SUMMARY_MARKER not in served

        # recompute outside the service: same template, greedy continuation only
        tokenizer = AutoTokenizer.from_pretrained(checkpoints["decoder"])
        model = AutoModelForCausalLM.from_pretrained(checkpoints["decoder"]).eval()
        prompt = apply_instruct_template(raw)
        encoded = tokenizer(
            prompt, return_tensors="pt", truncation=True, max_length=246,
            add_special_tokens=False,
        )
        with torch.no_grad():
            output = model.generate(
                **encoded, max_new_tokens=10, do_sample=False,
                pad_token_id=tokenizer.pad_token_id,
            )
        continuation = output[0][encoded["input_ids"].shape[1]:]
        expected = tokenizer.decode(continuation, skip_special_tokens=True).strip()
        assert served == expected

    def test_templated_prompt_not_double_wrapped(self, client):
        raw = "the following text"
        direct = client.post(
            "/v1/generate",
            json={"model": "tiny-decoder", "prompt": raw, "max_new_tokens": 6},
        ).json()["text"]
        pre_templated = client.post(
            "/v1/generate",
            json={
                "model": "tiny-decoder",
                "prompt": apply_instruct_template(raw),
                "max_new_tokens": 6,
            },
        ).json()["text"]
        assert direct == pre_templated


class TestLoadingState:
    def test_busy_load_returns_503(self, entries):
        fresh_app = create_app(entries, preload=False)
        fresh_client = TestClient(fresh_app)
        pool = fresh_app.state.pool
        lock = pool._load_locks["tiny-encoder"]
        assert lock.acquire(blocking=False)
        try:
            response = fresh_client.post(
                "/v1/count_tokens", json={"model": "tiny-encoder", "text": "x"}
            )
            assert response.status_code == 503
        finally:
            lock.release()
        # once the load lock is free the same request succeeds
        ok = fresh_client.post(
            "/v1/count_tokens", json={"model": "tiny-encoder", "text": "x"}
        )
        assert ok.status_code == 200
