"""Shared result containers and error types."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any


class DomainError(ValueError):
    """Arguments outside the domain where a quantity is defined."""


class BudgetError(RuntimeError):
    """A computation would exceed its configured size budget."""


class ConstructionError(RuntimeError):
    """A geometric construction cannot be carried out on the given input."""


@dataclass(frozen=True)
class SumResult:
    """A truncated sum with a certified absolute error bound.

    The exact value lies in ``[value - tail_bound, value + tail_bound]``.
    ``radius`` records the largest explicitly summed index (0 for finite sums).
    """

    value: float
    tail_bound: float = 0.0
    radius: int = 0

    def __post_init__(self):
        if not self.tail_bound >= 0:
            raise ValueError("tail_bound must be non-negative")

    @property
    def lower(self) -> float:
        return self.value - self.tail_bound

    @property
    def upper(self) -> float:
        return self.value + self.tail_bound

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return abs(x - self.value) <= self.tail_bound + slack

    def __add__(self, other):
        if isinstance(other, SumResult):
            return SumResult(self.value + other.value, self.tail_bound + other.tail_bound,
                             max(self.radius, other.radius))
        return SumResult(self.value + float(other), self.tail_bound, self.radius)

    __radd__ = __add__

    def __neg__(self):
        return SumResult(-self.value, self.tail_bound, self.radius)

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, c):
        c = float(c)
        return SumResult(self.value * c, self.tail_bound * abs(c), self.radius)

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (1.0 / float(c))

    def to_dict(self) -> dict:
        return {"value": self.value, "tail_bound": self.tail_bound, "radius": self.radius}


def exact(x: float) -> SumResult:
    return SumResult(float(x), 0.0, 0)


def total(items) -> SumResult:
    out = SumResult(0.0)
    for it in items:
        out = out + it
    return out


HOLDS = "holds"
HOLDS_WITHIN_TAILS = "holds-within-tails"
VIOLATED = "violated"


@dataclass(frozen=True)
class Certificate:
    """Numerical check of ``lhs >= rhs`` (or ``lhs == rhs`` when ``equality``)."""

    lhs: SumResult
    rhs: SumResult
    context: str = ""
    equality: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.lhs.value - self.rhs.value

    @property
    def tails(self) -> float:
        return self.lhs.tail_bound + self.rhs.tail_bound

    @property
    def verdict(self) -> str:
        s, t = self.slack, self.tails
        if self.equality:
            return HOLDS if s == 0 else (HOLDS_WITHIN_TAILS if abs(s) <= t else VIOLATED)
        if s >= 0:
            return HOLDS
        return HOLDS_WITHIN_TAILS if s >= -t else VIOLATED

    @property
    def ok(self) -> bool:
        return self.verdict != VIOLATED

    @property
    def strict(self) -> bool:
        """Strict inequality certified beyond the truncation error."""
        return self.slack > self.tails

    def to_dict(self) -> dict[str, Any]:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return str(v)
            return v
        return {
            "context": self.context,
            "lhs": self.lhs.to_dict(),
            "rhs": self.rhs.to_dict(),
            "slack": self.slack,
            "verdict": self.verdict,
            **{k: clean(v) for k, v in self.extra.items()},
        }
