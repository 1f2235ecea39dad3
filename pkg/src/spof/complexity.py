"""Macro-operation cost model of the two privatization paths.

Counts only the arithmetic that privatization adds per user per step:
coefficient construction and noising for the coefficient-perturbation
path; gradient noising, norm computation, and clipping for the
gradient-perturbation path.  Costs per primitive are data, keyed by a
profile name; the default profile prices add/sub at 1, mul at 3, div at
32, and logic gates at 1, with table-lookup exponentials free.  Square
roots are modeled as 7 Newton-Raphson iterations (one add, mul, and div
each).
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

__all__ = [
    "OpCosts",
    "ComplexityReport",
    "COST_PROFILES",
    "noise_read_cost",
    "c_spof",
    "c_dpsgd",
    "reduction",
    "report",
]

SQRT_ITERATIONS = 7


@dataclass(frozen=True)
class OpCosts:
    """Macro-op counts per primitive operation."""

    add: int = 1
    sub: int = 1
    mul: int = 3
    div: int = 32
    not_: int = 1
    and_: int = 1
    or_: int = 1

    def __post_init__(self):
        for name, value in asdict(self).items():
            if value < 0:
                raise ValueError(f"cost {name} must be non-negative, got {value}")


COST_PROFILES = {
    "amd-k7": OpCosts(),
    "unit": OpCosts(add=1, sub=1, mul=1, div=1, not_=1, and_=1, or_=1),
}


def noise_read_cost(costs: OpCosts) -> int:
    """Reading one precomputed noise sample: two adds plus a 2:1 mux
    (one NOT, two AND, one OR); the bit shifter stays unused here."""
    return 2 * costs.add + costs.not_ + 2 * costs.and_ + costs.or_


def c_spof(n: int, l: int, costs: OpCosts = COST_PROFILES["amd-k7"]) -> int:
    """Cost of stabilizing and noising the loss coefficients, per user.

    2n additions to apply noise, 2n noise reads, 2n subtractions and n
    multiplications to build the coefficients, and n*l additions for the
    stabilization shift.  Collapses to (19 + l) * n at default costs.
    """
    if n < 1 or l < 1:
        raise ValueError("n and l must be at least 1")
    cn = noise_read_cost(costs)
    return (
        2 * n * costs.add + 2 * n * cn
        + 2 * n * costs.sub + n * costs.mul
        + n * l * costs.add
    )


def c_dpsgd(n: int, costs: OpCosts = COST_PROFILES["amd-k7"]) -> int:
    """Cost of norm computation, clipping, and gradient noising, per user.

    n noise additions and reads; n + 1 divisions for clipping; n - 1
    additions, 2n multiplications (squarings), and one modeled square
    root for the norm; and n gradient-entry updates at one add, sub, and
    div each (exponentials priced at zero).  Collapses to 80n + 283 at
    default costs.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    cn = noise_read_cost(costs)
    entry_update = costs.add + costs.sub + costs.div
    return (
        n * (costs.add + cn)
        + (n + 1) * costs.div
        + (n - 1) * costs.add
        + 2 * n * costs.mul
        + SQRT_ITERATIONS * (costs.add + costs.mul + costs.div)
        + n * entry_update
    )


def reduction(n: int, l: int, costs: OpCosts = COST_PROFILES["amd-k7"]) -> float:
    """Percent cost reduction of the coefficient path over the gradient path."""
    dpsgd = c_dpsgd(n, costs)
    return 100.0 * (dpsgd - c_spof(n, l, costs)) / dpsgd


@dataclass(frozen=True)
class ComplexityReport:
    n: int
    l: int
    profile: str
    c_spof: int
    c_dpsgd: int
    reduction_percent: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2)

    def to_csv(self) -> str:
        head = "n,l,profile,c_spof,c_dpsgd,reduction_percent"
        row = f"{self.n},{self.l},{self.profile},{self.c_spof},{self.c_dpsgd},{self.reduction_percent:.4f}"
        return head + "\n" + row + "\n"


def report(n: int, l: int, profile: str = "amd-k7") -> ComplexityReport:
    costs = COST_PROFILES[profile]
    return ComplexityReport(
        n=n,
        l=l,
        profile=profile,
        c_spof=c_spof(n, l, costs),
        c_dpsgd=c_dpsgd(n, costs),
        reduction_percent=reduction(n, l, costs),
    )
