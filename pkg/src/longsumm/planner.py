"""Compression planning: how many extractive steps, at which ratios.

Extraction runs only when a document is longer than the abstractive model's
context budget. Three strategies are supported:

* ``fixed``     - every step compresses by the same ratio (default 0.4);
                  the step count is the smallest N with R^N * |D| <= K.
* ``dependent`` - a single step whose ratio K / |D| lands the document
                  exactly on the context budget.
* ``hybrid``    - fixed-ratio steps, except the final step uses a dependent
                  ratio so the cascade ends exactly at the budget.

``simulate_cascade`` is the reference arithmetic: it multiplies the document
length through the ratio sequence, and the planners are defined in terms of
it so that step counts are minimal under the exact same floating-point
products on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

__all__ = [
    "STRATEGY_KINDS",
    "RatioStrategy",
    "CompressionPlan",
    "simulate_cascade",
    "plan_fixed",
    "plan_dependent",
    "plan_hybrid",
    "plan",
]

STRATEGY_KINDS = ("fixed", "dependent", "hybrid")


@dataclass(frozen=True)
class RatioStrategy:
    """Which ratio rule to apply, and the fixed ratio where relevant."""

    kind: str = "fixed"
    fixed_ratio: float = 0.4

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ValueError(f"unknown strategy {self.kind!r}, expected one of {STRATEGY_KINDS}")
        if not 0.0 < self.fixed_ratio < 1.0:
            raise ValueError(f"fixed ratio must be in (0, 1), got {self.fixed_ratio}")


@dataclass(frozen=True)
class CompressionPlan:
    """A resolved plan: number of steps and the ratio for each step."""

    strategy: str
    doc_length: int
    context_length: int
    n_steps: int
    step_ratios: tuple[float, ...] = field(default=())
    degenerate_dependent: bool = False  # hybrid collapsed to a single dependent step

    def predicted_lengths(self) -> list[float]:
        """Ideal cascade lengths after each step."""
        return simulate_cascade(self.doc_length, self.step_ratios)

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy,
            "doc_tokens": self.doc_length,
            "context_length": self.context_length,
            "n_steps": self.n_steps,
            "ratios": list(self.step_ratios),
            "predicted_lengths": self.predicted_lengths(),
            "degenerate_dependent": self.degenerate_dependent,
        }


def _validate_lengths(doc_length: int, context_length: int) -> None:
    if doc_length < 1:
        raise ValueError(f"document length must be >= 1, got {doc_length}")
    if context_length < 1:
        raise ValueError(f"context length must be >= 1, got {context_length}")


def simulate_cascade(doc_length: float, step_ratios) -> list[float]:
    """Lengths after each step: ``lengths[j] = doc_length * prod(ratios[:j+1])``."""
    lengths: list[float] = []
    size = float(doc_length)
    for ratio in step_ratios:
        if not 0.0 < ratio <= 1.0:
            raise ValueError(f"step ratio must be in (0, 1], got {ratio}")
        size *= ratio
        lengths.append(size)
    return lengths


def _cascade_end(doc_length: int, ratio: float, n_steps: int) -> float:
    size = float(doc_length)
    for _ in range(n_steps):
        size *= ratio
    return size


def plan_fixed(doc_length: int, context_length: int, ratio: float = 0.4) -> CompressionPlan:
    """Plan the minimal number of fixed-ratio steps to reach the budget.

    Zero steps when the document already fits. Otherwise N starts from the
    closed form ``ceil(log(K / |D|) / log(R))`` and is settled against the
    cascade product, which is authoritative when the logarithmic form lands
    on a step boundary.
    """
    _validate_lengths(doc_length, context_length)
    if not 0.0 < ratio < 1.0:
        raise ValueError(f"fixed ratio must be in (0, 1), got {ratio}")
    if doc_length <= context_length:
        return CompressionPlan("fixed", doc_length, context_length, 0)
    estimate = math.ceil(math.log(context_length / doc_length) / math.log(ratio))
    n = max(1, estimate)
    while _cascade_end(doc_length, ratio, n) > context_length:
        n += 1
    while n > 1 and _cascade_end(doc_length, ratio, n - 1) <= context_length:
        n -= 1
    return CompressionPlan("fixed", doc_length, context_length, n, (ratio,) * n)


def plan_dependent(doc_length: int, context_length: int) -> CompressionPlan:
    """One step at ratio K / |D|, or none when the document already fits."""
    _validate_lengths(doc_length, context_length)
    if doc_length <= context_length:
        return CompressionPlan("dependent", doc_length, context_length, 0)
    return CompressionPlan(
        "dependent", doc_length, context_length, 1, (context_length / doc_length,)
    )


def plan_hybrid(doc_length: int, context_length: int, fixed_ratio: float = 0.4) -> CompressionPlan:
    """Fixed-ratio steps with a dependent final step.

    The step count comes from the fixed-ratio rule; the last ratio is chosen
    so the ideal cascade ends exactly at the context budget. With only one
    step to take there are no fixed steps left, and the plan degenerates to
    the dependent strategy (flagged on the plan).
    """
    base = plan_fixed(doc_length, context_length, fixed_ratio)
    if base.n_steps == 0:
        return CompressionPlan("hybrid", doc_length, context_length, 0)
    if base.n_steps == 1:
        dependent = plan_dependent(doc_length, context_length)
        return CompressionPlan(
            "hybrid",
            doc_length,
            context_length,
            1,
            dependent.step_ratios,
            degenerate_dependent=True,
        )
    lead_length = _cascade_end(doc_length, fixed_ratio, base.n_steps - 1)
    final_ratio = min(1.0, context_length / lead_length)
    ratios = (fixed_ratio,) * (base.n_steps - 1) + (final_ratio,)
    return CompressionPlan("hybrid", doc_length, context_length, base.n_steps, ratios)


def plan(doc_length: int, context_length: int, strategy: RatioStrategy) -> CompressionPlan:
    """Dispatch to the planner for ``strategy.kind``."""
    if strategy.kind == "fixed":
        return plan_fixed(doc_length, context_length, strategy.fixed_ratio)
    if strategy.kind == "dependent":
        return plan_dependent(doc_length, context_length)
    return plan_hybrid(doc_length, context_length, strategy.fixed_ratio)
