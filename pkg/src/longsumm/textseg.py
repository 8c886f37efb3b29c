"""Sentence segmentation and token-bounded chunking.

A document is decomposed into an ordered list of sentences, which are then
packed greedily into chunks that fit a token budget. Sentences are never
split across chunks; a single sentence that alone exceeds the budget becomes
its own chunk, truncated to the budget and flagged.

Token counting is delegated to a backend tokenizer (see
:mod:`longsumm.backends`); a thread-safe cache keeps repeated counts cheap
and stable within a run.
"""

from __future__ import annotations

import re
import threading
from dataclasses import dataclass, field
from typing import Callable

__all__ = [
    "Sentence",
    "Chunk",
    "CachedTokenCounter",
    "segment_sentences",
    "attach_token_counts",
    "chunk_document",
    "count_tokens",
    "truncate_to_token_budget",
    "normalize_whitespace",
]

# Abbreviations whose trailing period does not close a sentence. Tuned for
# EU regulatory prose; extendable per call.
ABBREVIATIONS = frozenset(
    {
        "art", "arts", "no", "nos", "para", "paras", "subpara",
        "e.g", "i.e", "etc", "cf", "vs", "viz", "approx",
        "p", "pp", "vol", "ch", "sec", "fig", "ann", "reg", "dir", "dec",
        "mr", "mrs", "ms", "dr", "prof", "st", "inc", "ltd", "co",
    }
)

# Sentence boundary: closing punctuation, optional quotes/brackets, a
# whitespace run, and a capitalized opener for the next sentence.
_BOUNDARY = re.compile(
    r"([.!?]+)([\"'”’»)\]]*)(\s+)(?=[\"'“‘«(\[]*[A-Z])"
)

_PARAGRAPH_BREAK = re.compile(r"\n\s*\n")

_WS_RUN = re.compile(r"\s+")


def normalize_whitespace(text: str) -> str:
    """Collapse whitespace runs to single spaces and trim the ends."""
    return _WS_RUN.sub(" ", text).strip()


@dataclass
class Sentence:
    """A sentence with its position in the document and per-tokenizer counts."""

    index: int
    text: str
    token_count: dict[str, int] = field(default_factory=dict)


@dataclass
class Chunk:
    """A consecutive run of whole sentences fitting a token budget."""

    chunk_index: int
    sentences: list[Sentence]
    token_count: int
    truncated: bool = False

    @property
    def text(self) -> str:
        return " ".join(s.text for s in self.sentences)


def _guard_token(prefix: str) -> str:
    """The word immediately before a candidate boundary, normalized."""
    match = re.search(r"\S+$", prefix)
    if not match:
        return ""
    token = match.group().lstrip("(\"'“‘«[")
    # drop the final punctuation run so "No." compares as "no", "e.g." as "e.g"
    token = re.sub(r"[.!?]+$", "", token)
    return token.lower()


def _split_paragraph(paragraph: str, abbreviations: frozenset[str]) -> list[str]:
    pieces: list[str] = []
    start = 0
    for match in _BOUNDARY.finditer(paragraph):
        if _guard_token(paragraph[start : match.start(1)] + match.group(1)[:-1]) in abbreviations:
            continue
        candidate = paragraph[start : match.start(3)].strip()
        if candidate:
            pieces.append(candidate)
        start = match.end()
    tail = paragraph[start:].strip()
    if tail:
        pieces.append(tail)
    return pieces


def segment_sentences(
    text: str, *, abbreviations: frozenset[str] = ABBREVIATIONS
) -> list[Sentence]:
    """Split ``text`` into sentences with consecutive indices from 0.

    Rule-based: a sentence ends at ``.``, ``!`` or ``?`` (plus closing
    quotes/brackets) followed by whitespace and a capitalized opener, unless
    the preceding word is a known abbreviation. Paragraph breaks always end
    a sentence. Joining the results with single spaces reproduces the input
    up to whitespace normalization.
    """
    sentences: list[Sentence] = []
    for paragraph in _PARAGRAPH_BREAK.split(text):
        paragraph = paragraph.strip()
        if not paragraph:
            continue
        for piece in _split_paragraph(paragraph, abbreviations):
            sentences.append(Sentence(index=len(sentences), text=piece))
    return sentences


class CachedTokenCounter:
    """Thread-safe get-or-compute cache in front of a token-counting backend.

    ``count_fn(text, tokenizer_id)`` must be deterministic; concurrent
    callers may both compute a missing entry, but the first stored value
    wins and all callers observe a single stable count per key.
    """

    def __init__(self, count_fn: Callable[[str, str], int]):
        self._count_fn = count_fn
        self._cache: dict[tuple[str, str], int] = {}
        self._lock = threading.Lock()

    def count(self, text: str, tokenizer_id: str) -> int:
        key = (tokenizer_id, text)
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        value = self._count_fn(text, tokenizer_id)
        with self._lock:
            return self._cache.setdefault(key, value)


def count_tokens(text: str, tokenizer_id: str, backend: CachedTokenCounter) -> int:
    """Count tokens of ``text`` under ``tokenizer_id`` via the cached backend."""
    return backend.count(text, tokenizer_id)


def attach_token_counts(
    sentences: list[Sentence], tokenizer_id: str, counter: CachedTokenCounter
) -> None:
    """Fill ``token_count[tokenizer_id]`` for every sentence in place."""
    for sentence in sentences:
        if tokenizer_id not in sentence.token_count:
            sentence.token_count[tokenizer_id] = counter.count(sentence.text, tokenizer_id)


def truncate_to_token_budget(
    text: str, budget: int, tokenizer_id: str, counter: CachedTokenCounter
) -> str:
    """Longest word-boundary prefix of ``text`` whose token count is <= budget.

    Falls back to a character-boundary search when even the first word is
    over budget. Returns "" only if no non-empty prefix fits.
    """
    if budget < 1:
        raise ValueError(f"token budget must be >= 1, got {budget}")
    if counter.count(text, tokenizer_id) <= budget:
        return text
    words = text.split()
    lo, hi = 0, len(words)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if counter.count(" ".join(words[:mid]), tokenizer_id) <= budget:
            lo = mid
        else:
            hi = mid - 1
    if lo > 0:
        return " ".join(words[:lo])
    # single over-budget word: cut inside it
    head = words[0] if words else text
    lo, hi = 0, len(head)
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if counter.count(head[:mid], tokenizer_id) <= budget:
            lo = mid
        else:
            hi = mid - 1
    return head[:lo]


def chunk_document(
    sentences: list[Sentence],
    limit: int,
    tokenizer_id: str,
    counter: CachedTokenCounter | None = None,
) -> list[Chunk]:
    """Greedily pack sentences into chunks of at most ``limit`` tokens.

    Each chunk is the maximal prefix of the remaining sentences whose total
    count fits ``limit``. A single sentence exceeding ``limit`` becomes its
    own chunk, truncated to the budget (requires ``counter``) and flagged.
    Concatenating the chunks preserves document order and covers every
    sentence exactly once.
    """
    if limit < 1:
        raise ValueError(f"chunk token limit must be >= 1, got {limit}")

    def tokens_of(sentence: Sentence) -> int:
        cached = sentence.token_count.get(tokenizer_id)
        if cached is not None:
            return cached
        if counter is None:
            raise ValueError(
                f"sentence {sentence.index} has no token count for {tokenizer_id!r} "
                "and no counter was provided"
            )
        n = counter.count(sentence.text, tokenizer_id)
        sentence.token_count[tokenizer_id] = n
        return n

    chunks: list[Chunk] = []
    current: list[Sentence] = []
    current_tokens = 0

    def flush() -> None:
        nonlocal current, current_tokens
        if current:
            chunks.append(Chunk(len(chunks), current, current_tokens))
            current = []
            current_tokens = 0

    for sentence in sentences:
        n = tokens_of(sentence)
        if n > limit:
            if counter is None:
                raise ValueError(
                    f"sentence {sentence.index} exceeds the chunk limit and no "
                    "counter was provided for truncation"
                )
            flush()
            cut = truncate_to_token_budget(sentence.text, limit, tokenizer_id, counter)
            cut_tokens = counter.count(cut, tokenizer_id)
            clipped = Sentence(
                index=sentence.index, text=cut, token_count={tokenizer_id: cut_tokens}
            )
            chunks.append(Chunk(len(chunks), [clipped], cut_tokens, truncated=True))
            continue
        if current and current_tokens + n > limit:
            flush()
        current.append(sentence)
        current_tokens += n
    flush()
    return chunks
