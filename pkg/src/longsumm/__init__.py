"""Multi-step extractive-abstractive summarization for very long documents.

The pipeline chunks a document into sentence-preserving pieces, plans how
many extractive compression steps are needed for it to fit an abstractive
model's context window, selects representative sentences per chunk with
K-means over sentence embeddings, and hands the concatenated extract to the
abstractive model for the final summary. Corpus preparation and ROUGE
evaluation round out the toolkit.
"""

__version__ = "0.1.0"

from longsumm.corpus import DocumentPair
from longsumm.planner import CompressionPlan, RatioStrategy
from longsumm.pipeline import PipelineConfig, RunRecord, run_batch, summarize

__all__ = [
    "__version__",
    "DocumentPair",
    "CompressionPlan",
    "RatioStrategy",
    "PipelineConfig",
    "RunRecord",
    "run_batch",
    "summarize",
]
