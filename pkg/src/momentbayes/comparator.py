"""Exponentially tilted empirical distribution, and its distance from the
constrained posterior means.

The large-deviation route estimates the outcome distribution by the sample
frequencies ``nu_i = m_i / n`` and tilts them onto the moment constraint:

    theta*_i = nu_i exp(eta f_i) / sum_j nu_j exp(eta f_j),

with the scalar ``eta`` chosen so that ``sum_i f_i theta*_i = F``.  This is
exact only as the sample grows; at finite ``n`` it treats frequencies as
probabilities and admits no fluctuations, which is what the comparison
report quantifies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import solver
from .errors import MomentOutOfRange, NoData, ZeroSupport
from .model import CountData, Problem

DEFAULT_TILT_TOL = 1e-12
FINITE_SAMPLE_N = 100


@dataclass(frozen=True)
class TiltedEmpirical:
    """Tilted-frequency solution: ``theta*_i proportional to nu_i e^{eta f_i}``."""

    frequencies: tuple[float, ...]
    eta: float
    probabilities: tuple[float, ...]


@dataclass(frozen=True)
class ComparisonReport:
    me: solver.MEPosterior
    tilted: TiltedEmpirical
    difference: tuple[float, ...]
    l1: float
    linf: float
    annotation: str | None

    @property
    def beta(self) -> float:
        return self.me.beta

    @property
    def eta(self) -> float:
        return self.tilted.eta


def empirical_frequencies(data: CountData) -> np.ndarray:
    """Sample frequencies ``nu_i = m_i / n``; undefined without data."""
    if data.n == 0:
        raise NoData("no observations: frequencies are undefined")
    return np.asarray(data.counts, dtype=float) / data.n


def _tilted_probs(nu: np.ndarray, f: np.ndarray, eta: float) -> np.ndarray:
    z = eta * f
    w = nu * np.exp(z - z.max())
    return w / w.sum()


def solve_tilt(nu, f, F: float, tol: float = DEFAULT_TILT_TOL) -> TiltedEmpirical:
    """Solve the tilt ``eta`` so the tilted frequencies hit the moment target."""
    nu = np.asarray(nu, dtype=float)
    f = np.asarray(f, dtype=float)
    if nu.shape != f.shape or nu.ndim != 1:
        raise ValueError(f"frequency/label shapes differ: {nu.shape} vs {f.shape}")
    if np.any(nu < 0.0) or abs(nu.sum() - 1.0) > 1e-9:
        raise ValueError(f"frequencies must be a probability vector, got {nu}")
    F = float(F)
    support = f[nu > 0.0]
    lo, hi = support.min(), support.max()
    freqs = tuple(float(x) for x in nu)
    if lo == hi:
        # All frequency sits on one label value; only that value is attainable.
        if F == lo:
            return TiltedEmpirical(freqs, 0.0, freqs)
        if not (f.min() < F < f.max()):
            raise MomentOutOfRange(
                f"target {F} must lie strictly inside ({f.min()}, {f.max()})"
            )
        raise ZeroSupport(
            f"all frequency is on label {lo}; target {F} is unreachable by tilting"
        )
    if not (f.min() < F < f.max()):
        raise MomentOutOfRange(
            f"target {F} must lie strictly inside ({f.min()}, {f.max()})"
        )
    if not (lo < F < hi):
        raise ZeroSupport(
            f"target {F} is outside ({lo}, {hi}) spanned by outcomes with "
            f"nonzero frequency: the tilt cannot move zero frequencies"
        )

    def newton(eta):
        probs = _tilted_probs(nu, f, eta)
        g = float(np.dot(f, probs))
        slope = float(np.dot(f * f, probs)) - g * g
        return g, slope

    def value(eta):
        return newton(eta)[0]

    eta, _ = solver.solve_increasing(value, newton, F, tol=tol, cap=1e6, guess=0.0)
    probs = tuple(float(x) for x in _tilted_probs(nu, f, eta))
    return TiltedEmpirical(freqs, eta, probs)


def compare(p: Problem, tol: float = solver.DEFAULT_TOL,
            beta_cap: float = solver.DEFAULT_BETA_CAP,
            tilt_tol: float = DEFAULT_TILT_TOL) -> ComparisonReport:
    """Full posterior update next to the tilted-frequency solution."""
    nu = empirical_frequencies(p.data)
    me = solver.full_update(p, tol, beta_cap)
    tilted = solve_tilt(nu, p.labels_array(), p.moment_target, tilt_tol)
    diff = np.asarray(me.means) - np.asarray(tilted.probabilities)
    annotation = None
    if np.any(nu == 0.0) or p.data.n < FINITE_SAMPLE_N:
        annotation = (
            f"frequencies from n={p.data.n} draws are used as probabilities"
            + (", including exact zeros that stay zero under tilting"
               if np.any(nu == 0.0) else "")
            + f"; the tilted solution ignores sampling fluctuations at n < {FINITE_SAMPLE_N}"
        )
    return ComparisonReport(
        me=me,
        tilted=tilted,
        difference=tuple(float(d) for d in diff),
        l1=float(np.abs(diff).sum()),
        linf=float(np.abs(diff).max()),
        annotation=annotation,
    )
