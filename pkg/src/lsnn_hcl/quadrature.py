"""Composite midpoint and trapezoidal rules for single and double integrals.

These two rules are the only integration primitive used by the discrete
divergence operator and the block loss.  Low-order composite rules are
deliberate: with enough sub-intervals they remain accurate for integrands
with isolated jumps, which higher-order rules on a single panel do not.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np

__all__ = ["RuleKind", "CompositeRule", "integrate_1d", "integrate_2d"]


class RuleKind(str, Enum):
    MIDPOINT = "midpoint"
    TRAPEZOIDAL = "trapezoidal"


@dataclass(frozen=True)
class CompositeRule:
    """A composite quadrature rule: `kind` applied on `p` uniform sub-intervals."""

    kind: RuleKind
    p: int = 1

    def __post_init__(self):
        object.__setattr__(self, "kind", RuleKind(self.kind))
        if self.p < 1:
            raise ValueError(f"sub-interval count must be >= 1, got {self.p}")

    def nodes_weights(self, c: float, d: float) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes and weights on [c, d]."""
        width = d - c
        if self.kind is RuleKind.MIDPOINT:
            nodes = c + (np.arange(self.p) + 0.5) * (width / self.p)
            weights = np.full(self.p, width / self.p)
        else:
            nodes = c + np.arange(self.p + 1) * (width / self.p)
            weights = np.full(self.p + 1, width / self.p)
            weights[0] *= 0.5
            weights[-1] *= 0.5
        return nodes, weights


def integrate_1d(phi: Callable, c: float, d: float, rule: CompositeRule) -> float:
    """Composite quadrature of ``phi`` over [c, d].

    ``phi`` must accept a numpy array of nodes and return values of the same
    shape.  Midpoint evaluates at sub-interval centers; trapezoidal at the
    p+1 uniform nodes with endpoint weight 1 and interior weight 2, scaled
    by (d-c)/(2p).
    """
    if not c < d:
        raise ValueError(f"integration interval must satisfy c < d, got [{c}, {d}]")
    nodes, weights = rule.nodes_weights(c, d)
    values = np.asarray(phi(nodes), dtype=float)
    # np.dot on contiguous arrays uses pairwise/blocked accumulation, which keeps
    # results reproducible independent of any outer-loop chunking.
    return float(np.dot(weights, values))


def integrate_2d(
    phi: Callable,
    box: tuple[float, float, float, float],
    rule_1: CompositeRule,
    rule_2: CompositeRule,
) -> float:
    """Tensor-product composite quadrature of ``phi(s1, s2)`` over a box.

    ``box`` is (c1, d1, c2, d2); ``rule_1`` integrates along s1 (inner),
    ``rule_2`` along s2 (outer).  Equivalent to applying the outer rule to
    ``s2 -> integrate_1d(phi(., s2), c1, d1, rule_1)``.
    """
    c1, d1, c2, d2 = box
    if not (c1 < d1 and c2 < d2):
        raise ValueError(f"degenerate integration box {box}")
    n1, w1 = rule_1.nodes_weights(c1, d1)
    n2, w2 = rule_2.nodes_weights(c2, d2)
    s1, s2 = np.meshgrid(n1, n2, indexing="ij")
    values = np.asarray(phi(s1, s2), dtype=float)
    return float(np.dot(w2, np.dot(w1, values)))
