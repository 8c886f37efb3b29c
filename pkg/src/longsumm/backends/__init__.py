"""Model-service clients: wire protocol, deterministic mocks, HTTP transport.

The wire protocol (JSON over HTTP) has four live endpoints and one reserved:

* ``GET  /v1/models``        -> ``{"profiles": [...]}``
* ``POST /v1/count_tokens``  -> ``{"count": int}``
* ``POST /v1/embed``         -> ``{"vectors": [[float]], "dim": int}``
* ``POST /v1/generate``      -> ``{"text": str}``
* ``POST /v1/score``         -> reserved for model-based metrics, unimplemented

:class:`MockBackend` implements the same surface in-process so the whole
pipeline runs hermetically; :class:`HttpBackend` speaks the protocol to a
real service.
"""

from longsumm.backends.errors import (
    BackendError,
    ContextOverflowError,
    ProtocolError,
    TransportError,
    UnknownModelError,
)
from longsumm.backends.profiles import (
    LLAMA3_TEMPLATE,
    SUMMARY_MARKER,
    GenerationRequest,
    ModelProfile,
    build_prompt,
    run_generation,
)
from longsumm.backends.mock import (
    HashEmbedder,
    MockBackend,
    char4_token_count,
    default_mock_backend,
    word_token_count,
)
from longsumm.backends.http import HttpBackend
from longsumm.backends.server import MockWireServer

__all__ = [
    "BackendError",
    "ContextOverflowError",
    "ProtocolError",
    "TransportError",
    "UnknownModelError",
    "ModelProfile",
    "GenerationRequest",
    "LLAMA3_TEMPLATE",
    "SUMMARY_MARKER",
    "build_prompt",
    "run_generation",
    "MockBackend",
    "HashEmbedder",
    "default_mock_backend",
    "word_token_count",
    "char4_token_count",
    "HttpBackend",
    "MockWireServer",
]
