from __future__ import annotations

import pytest

from longsumm.backends import default_mock_backend
from longsumm.corpus import DocumentPair

_FILLER = (
    "alpha beta gamma delta epsilon zeta eta theta iota kappa "
    "lambda omicron sigma tau upsilon"
).split()


def make_document_text(total_tokens: int, words_per_sentence: int = 10) -> str:
    """Deterministic text of exactly ``total_tokens`` whitespace tokens.

    Every sentence starts with a capital, ends with a period, and survives
    the rule-based segmenter as a single sentence.
    """
    if total_tokens < 2:
        return "Stub." if total_tokens else ""
    sentences = []
    remaining = total_tokens
    index = 0
    while remaining > 0:
        n = min(words_per_sentence, remaining)
        if n == 1:
            sentences[-1] += " extra"
            break
        words = ["Item", str(index)]
        while len(words) < n:
            words.append(_FILLER[(index + len(words)) % len(_FILLER)])
        sentences.append(" ".join(words) + ".")
        remaining -= n
        index += 1
    return " ".join(sentences)


def make_pair(doc_id: str, total_tokens: int, split: str = "test") -> DocumentPair:
    return DocumentPair(
        id=doc_id,
        reference_text=make_document_text(total_tokens),
        gold_summary=f"Gold summary for {doc_id}.",
        split=split,
    )


@pytest.fixture
def mock_backend():
    return default_mock_backend()


def pytest_terminal_summary(terminalreporter):
    rows = []
    for status, key in (("PASS", "passed"), ("FAIL", "failed"), ("SKIPPED", "skipped")):
        for report in terminalreporter.stats.get(key, []):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" not in nodeid:
                continue
            if getattr(report, "when", "call") == "call" or status == "SKIPPED":
                rows.append((nodeid.split("::")[-1], status))
    if rows:
        terminalreporter.section("acceptance criteria")
        for name, status in sorted(set(rows)):
            terminalreporter.write_line(f"{status:8s} {name}")
