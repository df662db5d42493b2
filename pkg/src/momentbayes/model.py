"""Domain types and closed-form (no-constraint) posterior quantities.

The inference problem is a categorical model with ``k`` outcomes carrying
numeric labels ``f_i``, observed counts ``m_i`` (``n`` draws total), a
Dirichlet-style prior given by pseudo-counts ``alpha_i`` (all 1 for the
uniform prior), and a target value ``F`` for the posterior expectation of
``sum_i f_i * theta_i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateLabels,
    LengthMismatch,
    MomentOutOfRange,
    NonPositivePseudoCount,
    OutOfSupport,
)

SIMPLEX_ATOL = 1e-12


@dataclass(frozen=True)
class OutcomeModel:
    """The outcome labels ``f_1..f_k``."""

    labels: tuple[float, ...]

    def __init__(self, labels) -> None:
        labels = tuple(float(x) for x in labels)
        if len(labels) < 2:
            raise ValueError(f"need at least 2 outcomes, got {len(labels)}")
        if not all(math.isfinite(x) for x in labels):
            raise ValueError("labels must be finite")
        object.__setattr__(self, "labels", labels)

    @property
    def k(self) -> int:
        return len(self.labels)

    @property
    def degenerate(self) -> bool:
        """True when all labels are equal, so the moment carries no information."""
        return min(self.labels) == max(self.labels)


@dataclass(frozen=True)
class CountData:
    """Observed counts per outcome. ``n == 0`` (no data) is allowed."""

    counts: tuple[int, ...]

    def __init__(self, counts) -> None:
        out = []
        for c in counts:
            ci = int(c)
            if ci != c:
                raise ValueError(f"counts must be integers, got {c!r}")
            if ci < 0:
                raise ValueError(f"counts must be nonnegative, got {c!r}")
            out.append(ci)
        object.__setattr__(self, "counts", tuple(out))

    @property
    def n(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class PriorSpec:
    """Per-outcome pseudo-counts; all ones is the uniform prior on the simplex."""

    pseudo_counts: tuple[float, ...]

    def __init__(self, pseudo_counts) -> None:
        pcs = tuple(float(a) for a in pseudo_counts)
        for a in pcs:
            if not (a > 0.0) or not math.isfinite(a):
                raise NonPositivePseudoCount(f"pseudo-counts must be > 0, got {a!r}")
        object.__setattr__(self, "pseudo_counts", pcs)

    @classmethod
    def flat(cls, k: int) -> "PriorSpec":
        return cls((1.0,) * k)


@dataclass(frozen=True)
class Problem:
    """A fully validated inference problem."""

    model: OutcomeModel
    data: CountData
    prior: PriorSpec
    moment_target: float

    def __post_init__(self) -> None:
        k = self.model.k
        if len(self.data.counts) != k or len(self.prior.pseudo_counts) != k:
            raise LengthMismatch(
                f"labels/counts/pseudo-counts lengths differ: "
                f"{k}/{len(self.data.counts)}/{len(self.prior.pseudo_counts)}"
            )
        F = self.moment_target
        if not math.isfinite(F):
            raise MomentOutOfRange(f"moment target must be finite, got {F!r}")
        lo, hi = min(self.model.labels), max(self.model.labels)
        if self.model.degenerate:
            if F != lo:
                raise DegenerateLabels(
                    f"all labels equal {lo}; a moment target of {F} is unsatisfiable"
                )
        elif not (lo < F < hi):
            raise MomentOutOfRange(
                f"moment target {F} must lie strictly inside ({lo}, {hi})"
            )

    @property
    def k(self) -> int:
        return self.model.k

    def labels_array(self) -> np.ndarray:
        return np.asarray(self.model.labels, dtype=float)

    def exponents(self) -> np.ndarray:
        """Density exponents ``m_i + alpha_i - 1`` of each ``theta_i``."""
        m = np.asarray(self.data.counts, dtype=float)
        a = np.asarray(self.prior.pseudo_counts, dtype=float)
        return m + a - 1.0


@dataclass(frozen=True)
class SimplexPoint:
    """A point ``theta`` on the probability simplex."""

    theta: tuple[float, ...]

    def __init__(self, theta) -> None:
        th = tuple(float(x) for x in theta)
        if any(x < 0.0 or not math.isfinite(x) for x in th):
            raise ValueError(f"coordinates must be finite and >= 0, got {th}")
        if abs(sum(th) - 1.0) > SIMPLEX_ATOL:
            raise ValueError(f"coordinates sum to {sum(th)!r}, not 1")
        object.__setattr__(self, "theta", th)


def validate_problem(model, data, prior, moment_target) -> Problem:
    """Assemble and validate a :class:`Problem` from its components."""
    if not isinstance(model, OutcomeModel):
        model = OutcomeModel(model)
    if not isinstance(data, CountData):
        data = CountData(data)
    if not isinstance(prior, PriorSpec):
        prior = PriorSpec(prior)
    return Problem(model, data, prior, float(moment_target))


def make_problem(labels, counts, moment_target, pseudo_counts=None) -> Problem:
    """Convenience constructor; ``pseudo_counts`` defaults to the flat prior."""
    model = OutcomeModel(labels)
    prior = PriorSpec.flat(model.k) if pseudo_counts is None else PriorSpec(pseudo_counts)
    return validate_problem(model, CountData(counts), prior, moment_target)


def log_unnormalized_density(p: Problem, beta: float, theta: SimplexPoint) -> float:
    """Log of the unnormalized posterior density at ``theta``.

    Returns ``sum_i [(m_i + alpha_i - 1) ln theta_i + beta f_i theta_i]``.
    A zero coordinate contributes 0 when its exponent is exactly 0
    (continuous extension) and -inf when the exponent is positive; a
    negative exponent at a zero coordinate is outside the support.
    """
    if not isinstance(theta, SimplexPoint):
        theta = SimplexPoint(theta)
    e = p.exponents()
    f = p.model.labels
    if len(theta.theta) != p.k:
        raise LengthMismatch(f"theta has length {len(theta.theta)}, expected {p.k}")
    total = 0.0
    for ei, fi, ti in zip(e, f, theta.theta):
        if ti == 0.0:
            if ei < 0.0:
                raise OutOfSupport(
                    f"theta coordinate 0 with exponent {ei} < 0 is outside the support"
                )
            if ei > 0.0:
                total = -math.inf
                continue
            # exponent exactly 0: 0 * ln 0 := 0
        else:
            total += ei * math.log(ti)
        total += beta * fi * ti
    return total


def bayes_posterior_mean(p: Problem) -> np.ndarray:
    """Posterior mean with no moment constraint: ``(m_i + alpha_i) / (n + sum alpha)``."""
    a = np.asarray(p.data.counts, dtype=float) + np.asarray(
        p.prior.pseudo_counts, dtype=float
    )
    return a / a.sum()
