"""Amplification calculus: r-fold AND within a table, b-fold OR across tables.

A base collision probability p becomes 1 - (1 - p**r)**b. The solver
finds the scheme minimizing total = r*b that meets a sensitivity target
(collision probability >= p1_min at the near distance and <= p2_max at
the far distance); ties on total go to the smaller r since hashing cost
scales with r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import families
from .core import (
    DistanceKind,
    DomainError,
    InfeasibleError,
    angle_from_distance,
    sample_pairs_at_angle,
)
from ._mix import derive


@dataclass(frozen=True)
class SensitivityTarget:
    """Require collision prob >= p1_min at distance <= d1, <= p2_max at >= d2."""

    d1: float
    d2: float
    p1_min: float
    p2_max: float

    def __post_init__(self):
        if not self.d1 < self.d2:
            raise DomainError(f"need d1 < d2, got {self.d1} >= {self.d2}")
        if not 0.0 < self.p2_max < self.p1_min < 1.0:
            raise DomainError(
                f"need 0 < p2_max < p1_min < 1, got p1_min={self.p1_min}, p2_max={self.p2_max}"
            )


@dataclass(frozen=True)
class AmplifiedScheme:
    """r hash functions per table, b tables."""

    r: int
    b: int

    def __post_init__(self):
        if self.r < 1 or self.b < 1:
            raise DomainError(f"r and b must be >= 1, got r={self.r}, b={self.b}")

    @property
    def total(self) -> int:
        return self.r * self.b


def amplified_probability(p: float, r: int, b: int) -> float:
    """1 - (1 - p**r)**b, stable at both ends of [0, 1]."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must be in [0, 1], got {p}")
    if r < 1 or b < 1:
        raise DomainError(f"r and b must be >= 1, got r={r}, b={b}")
    if r == 1 and b == 1:
        return p
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    q = p**r
    if q >= 1.0:
        return 1.0
    # -expm1(b*log1p(-q)) keeps precision for q near 0 and near 1
    return -math.expm1(b * math.log1p(-q))


def solve_parameters(
    p1: float,
    p2: float,
    target: SensitivityTarget,
    r_max: int = 32,
    b_max: int = 100_000,
) -> AmplifiedScheme:
    """Minimal-total (r, b) meeting the target for base probabilities (p1, p2).

    For each r the p1 constraint fixes the minimal b in closed form
    (checked and adjusted against the exact formula); the p2 constraint
    is then verified at that b, since growing b only raises both
    probabilities. Raises InfeasibleError when no (r, b) within bounds
    satisfies both constraints.
    """
    if not 0.0 <= p2 <= p1 <= 1.0:
        raise DomainError(f"need 0 <= p2 <= p1 <= 1, got p1={p1}, p2={p2}")
    if r_max < 1 or b_max < 1:
        raise DomainError("r_max and b_max must be >= 1")
    best: AmplifiedScheme | None = None
    for r in range(1, r_max + 1):
        b = _min_tables(p1, r, target.p1_min, b_max)
        if b is None:
            continue
        if best is not None and r * b >= best.total:
            continue
        if amplified_probability(p2, r, b) <= target.p2_max:
            best = AmplifiedScheme(r, b)
    if best is None:
        raise InfeasibleError(
            f"no scheme with r <= {r_max}, b <= {b_max} reaches "
            f"({target.p1_min}, {target.p2_max}) from base ({p1}, {p2})"
        )
    return best


def _min_tables(p1: float, r: int, p1_min: float, b_max: int) -> int | None:
    """Smallest b with amplified_probability(p1, r, b) >= p1_min, else None."""
    q = p1**r
    if q >= 1.0:
        return 1
    if q <= 0.0:
        return None
    b = max(1, math.ceil(math.log1p(-p1_min) / math.log1p(-q)))
    # align with the exact evaluation at float boundaries
    while b <= b_max and amplified_probability(p1, r, b) < p1_min:
        b += 1
    while b > 1 and amplified_probability(p1, r, b - 1) >= p1_min:
        b -= 1
    return b if b <= b_max else None


def estimate_base_probability(
    family: families.MinhashFamily,
    dist: float,
    kind: DistanceKind,
    trials: int,
    seed: int,
    backend=None,
):
    """Monte Carlo collision rate of one minhash at the given distance.

    Returns (p_hat, std_err) with the binomial standard error. Pairs are
    drawn from sample_pairs_at_angle with seeds independent of the
    family, so different families estimated with the same seed see the
    same pairs.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    alpha = angle_from_distance(dist, kind)
    U, V = sample_pairs_at_angle(family.input_dim, alpha, trials, seed)
    hu = families.family_hash_batch(family, 0, U, backend)
    hv = families.family_hash_batch(family, 0, V, backend)
    p_hat = float(np.mean(hu == hv))
    return p_hat, math.sqrt(p_hat * (1.0 - p_hat) / trials)


def simulate_amplified_probability(
    family: families.MinhashFamily,
    scheme: AmplifiedScheme,
    dist: float,
    kind: DistanceKind,
    trials: int,
    seed: int,
    backend=None,
) -> float:
    """Fresh Monte Carlo of the full (r, b) scheme at one distance.

    A pair collides when some table agrees on all r of its minhashes;
    table t uses the global minhash indices [t*r, (t+1)*r).
    """
    alpha = angle_from_distance(dist, kind)
    U, V = sample_pairs_at_angle(family.input_dim, alpha, trials, derive(seed, 17))
    r, b = scheme.r, scheme.b
    indices = range(r * b)
    hu = families.family_hash_many(family, indices, U, backend)
    hv = families.family_hash_many(family, indices, V, backend)
    same = (hu == hv).reshape(trials, b, r)
    return float(same.all(axis=2).any(axis=1).mean())


def neutral_deviation(grid, p_hat) -> float:
    """Signed area between a collision curve and the neutral line 1 - d.

    The grid must be in normalized euclidean form (values in [0, 1]).
    Positive means the curve sits above the line: fewer false negatives,
    more false positives; negative the opposite.
    """
    grid = np.asarray(grid, dtype=np.float64)
    p_hat = np.asarray(p_hat, dtype=np.float64)
    if grid.shape != p_hat.shape:
        raise DomainError("grid and p_hat must have equal lengths")
    if grid.size and (grid.min() < 0.0 or grid.max() > 1.0):
        raise DomainError("neutral deviation expects normalized distances in [0, 1]")
    return float(np.trapezoid(p_hat - (1.0 - grid), grid))
