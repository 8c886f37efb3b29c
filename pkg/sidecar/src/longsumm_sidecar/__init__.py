"""Reference model service for the /v1 summarization wire protocol.

Serves tokenizer counting, sentence embedding (mean or CLS pooling over the
last hidden states), and abstractive generation over real transformer
checkpoints, behind the same four endpoints the pipeline's HTTP client
speaks: /v1/models, /v1/count_tokens, /v1/embed, /v1/generate.
"""

__version__ = "0.1.0"

from longsumm_sidecar.registry import SidecarModelEntry, load_registry
from longsumm_sidecar.service import create_app

__all__ = ["__version__", "SidecarModelEntry", "load_registry", "create_app"]
