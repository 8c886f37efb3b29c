"""HTTP client for the /v1 wire protocol."""

from __future__ import annotations

import logging
import threading
import time
from typing import Callable

import requests

from longsumm.backends.errors import (
    ProtocolError,
    TransportError,
    UnknownModelError,
)
from longsumm.backends.profiles import GenerationRequest, ModelProfile, run_generation

log = logging.getLogger(__name__)

# connection-phase failures; safe to retry even for generation
_CONNECT_ERRORS = (requests.exceptions.ConnectionError, requests.exceptions.ConnectTimeout)
_IDEMPOTENT_ERRORS = _CONNECT_ERRORS + (requests.exceptions.Timeout,)


class HttpBackend:
    """Client for a model service speaking the /v1 protocol.

    Idempotent calls (count, embed, models) are retried with exponential
    backoff on transport failures and 5xx responses, up to ``max_attempts``.
    Generation is retried only on connection-phase errors, i.e. before the
    request can have reached the model.
    """

    def __init__(
        self,
        base_url: str,
        timeout: float = 30.0,
        max_attempts: int = 3,
        backoff_seconds: float = 0.25,
        max_in_flight: int = 4,
        auth_token: str | None = None,
        session: requests.Session | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.max_attempts = max(1, max_attempts)
        self.backoff_seconds = backoff_seconds
        self._in_flight = threading.BoundedSemaphore(max(1, max_in_flight))
        self._session = session or requests.Session()
        if auth_token:
            self._session.headers["Authorization"] = f"Bearer {auth_token}"
        self._profiles: dict[str, ModelProfile] | None = None

    # -- transport --------------------------------------------------------

    def _request(
        self,
        method: str,
        path: str,
        payload: dict | None,
        retry_errors,
        retry_5xx: bool = True,
    ) -> dict:
        url = f"{self.base_url}{path}"
        last_error: Exception | None = None
        for attempt in range(self.max_attempts):
            if attempt:
                delay = self.backoff_seconds * (2 ** (attempt - 1))
                log.debug("retrying %s %s in %.2fs", method, path, delay)
                time.sleep(delay)
            try:
                with self._in_flight:
                    response = self._session.request(
                        method, url, json=payload, timeout=self.timeout
                    )
            except retry_errors as exc:
                last_error = exc
                continue
            except requests.exceptions.RequestException as exc:
                raise TransportError(f"{method} {url} failed: {exc}") from exc
            if response.status_code >= 500:
                error = TransportError(f"{method} {url} returned {response.status_code}")
                if not retry_5xx:
                    raise error
                last_error = error
                continue
            return self._decode(response, url)
        raise TransportError(
            f"{method} {url} failed after {self.max_attempts} attempts: {last_error}"
        )

    def _decode(self, response: requests.Response, url: str) -> dict:
        try:
            body = response.json()
        except ValueError as exc:
            raise ProtocolError(f"{url}: response is not JSON") from exc
        if response.status_code == 404:
            raise UnknownModelError(
                str(body.get("error", "unknown model")),
                body.get("available_models", []),
            )
        if response.status_code >= 400:
            raise ProtocolError(f"{url}: HTTP {response.status_code}: {body}")
        if not isinstance(body, dict):
            raise ProtocolError(f"{url}: expected a JSON object, got {type(body).__name__}")
        return body

    # -- protocol surface ------------------------------------------------

    def list_models(self) -> list[ModelProfile]:
        body = self._request("GET", "/v1/models", None, _IDEMPOTENT_ERRORS)
        try:
            profiles = [ModelProfile.from_dict(entry) for entry in body["profiles"]]
        except (KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed /v1/models response: {body}") from exc
        self._profiles = {p.model_id: p for p in profiles}
        return profiles

    def profile(self, model_id: str) -> ModelProfile:
        if self._profiles is None:
            self.list_models()
        assert self._profiles is not None
        profile = self._profiles.get(model_id)
        if profile is None:
            raise UnknownModelError(model_id, list(self._profiles))
        return profile

    def count_tokens(self, name: str, text: str) -> int:
        model_id = self._resolve_counting_model(name)
        body = self._request(
            "POST", "/v1/count_tokens", {"model": model_id, "text": text}, _IDEMPOTENT_ERRORS
        )
        count = body.get("count")
        if not isinstance(count, int) or isinstance(count, bool):
            raise ProtocolError(f"/v1/count_tokens returned a non-integer count: {body}")
        return count

    def embed(self, model_id: str, texts: list[str]) -> list[list[float]]:
        if not texts:
            raise ValueError("embed requires a non-empty list of texts")
        body = self._request(
            "POST", "/v1/embed", {"model": model_id, "texts": list(texts)}, _IDEMPOTENT_ERRORS
        )
        vectors = body.get("vectors")
        dim = body.get("dim")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProtocolError(f"/v1/embed returned {len(vectors or [])} vectors "
                                f"for {len(texts)} texts")
        for vector in vectors:
            if not isinstance(vector, list) or (dim is not None and len(vector) != dim):
                raise ProtocolError("/v1/embed returned vectors of inconsistent dimension")
        return vectors

    def generate_text(self, model_id: str, prompt: str, max_new_tokens: int) -> str:
        # retried only when the request never reached the service
        body = self._request(
            "POST",
            "/v1/generate",
            {"model": model_id, "prompt": prompt, "max_new_tokens": max_new_tokens},
            _CONNECT_ERRORS,
            retry_5xx=False,
        )
        text = body.get("text")
        if not isinstance(text, str):
            raise ProtocolError(f"/v1/generate returned a non-string text: {body}")
        return text

    def generate(self, req: GenerationRequest) -> str:
        return run_generation(self, req)

    def token_count_fn(self) -> Callable[[str, str], int]:
        return lambda text, tokenizer_id: self.count_tokens(tokenizer_id, text)

    # -- helpers ----------------------------------------------------------

    def _resolve_counting_model(self, name: str) -> str:
        """Accept either a model id or a tokenizer id for counting."""
        if self._profiles is None:
            self.list_models()
        assert self._profiles is not None
        if name in self._profiles:
            return name
        for profile in self._profiles.values():
            if profile.tokenizer_id == name:
                return profile.model_id
        raise UnknownModelError(name, list(self._profiles))
