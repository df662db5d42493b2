"""Independent verification paths for the normalization and its moments.

Two routes that share no code with the series evaluator: iterated adaptive
quadrature over the simplex in reduced coordinates (small dimension only),
and self-normalized importance sampling from the conjugate proposal with
weights ``exp(beta * f . theta)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import gammaln

from .errors import DimensionTooHigh, ToleranceNotMet
from .model import Problem

QUADRATURE_MAX_K = 4
DEFAULT_REL_TOL = 1e-10
MIN_SAMPLES = 10**3
LOW_ESS = 100.0
_BATCH = 1 << 17


@dataclass(frozen=True)
class OracleEstimate:
    log_value: float
    std_error: float
    method: str
    samples_or_evals: int
    seed: int | None = None


@dataclass(frozen=True)
class MonteCarloMoments:
    """Importance-sampling estimate of ``ln Z`` and the posterior means."""

    estimate: OracleEstimate
    means: tuple[float, ...]
    mean_std_errors: tuple[float, ...]
    ess: float
    low_ess: bool


def quadrature_zeta(p: Problem, beta: float,
                    rel_tol: float = DEFAULT_REL_TOL) -> OracleEstimate:
    """``ln Z`` by iterated one-dimensional adaptive quadrature.

    Integrates in the reduced coordinates (the last coordinate eliminated
    via ``1 - sum``), innermost dimension adapting first.  Deterministic;
    raises when the error estimate cannot be brought under ``rel_tol``.
    """
    k = p.k
    if k > QUADRATURE_MAX_K:
        raise DimensionTooHigh(
            f"iterated quadrature is limited to k <= {QUADRATURE_MAX_K}, got k={k}"
        )
    if not math.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta!r}")
    e = p.exponents()
    f = p.labels_array()
    shift = float(np.max(beta * f))
    evals = [0]
    # Request more than asked so QUADPACK's own (conservative) error
    # estimate lands under the caller's tolerance.
    eps = [max(rel_tol * 0.1**(d + 1), 5e-14) for d in range(k - 1)]

    def density(theta):
        evals[0] += 1
        total = -shift
        for ei, fi, ti in zip(e, f, theta):
            if ti <= 0.0:
                if ei > 0.0:
                    return 0.0
                if ei < 0.0:
                    return math.inf  # integrable endpoint singularity
            else:
                total += ei * math.log(ti)
            total += beta * fi * ti
        return math.exp(total)

    def nest(coords, depth):
        if depth == k - 1:
            return density(coords + [1.0 - sum(coords)])
        upper = 1.0 - sum(coords)
        if upper <= 0.0:
            return 0.0
        val, _ = integrate.quad(
            lambda x: nest(coords + [x], depth + 1),
            0.0, upper, epsabs=0.0, epsrel=eps[depth], limit=500,
        )
        return val

    val, abserr = integrate.quad(
        lambda x: nest([x], 1),
        0.0, 1.0, epsabs=0.0, epsrel=eps[0], limit=500,
    )
    est_rel = abserr / val + sum(eps[1:])
    if not math.isfinite(val) or val <= 0.0 or est_rel > rel_tol:
        raise ToleranceNotMet(
            f"estimated relative error {est_rel:.3g} exceeds {rel_tol:.3g}"
        )
    return OracleEstimate(
        log_value=math.log(val) + shift,
        std_error=0.0,
        method="quadrature",
        samples_or_evals=evals[0],
    )


def montecarlo_moments(p: Problem, beta: float, samples: int,
                       seed: int) -> MonteCarloMoments:
    """Self-normalized importance sampling from the conjugate proposal.

    Draws ``theta`` from the Dirichlet with parameters ``m + alpha`` and
    weights each draw by ``exp(beta * f . theta)``; ``ln Z`` follows from
    the mean weight times the closed-form conjugate normalizer.  Fixed
    batch partitioning and a single seeded generator make repeated calls
    bit-identical.
    """
    if samples < MIN_SAMPLES:
        raise ValueError(f"need at least {MIN_SAMPLES} samples, got {samples}")
    if not math.isfinite(beta):
        raise ValueError(f"beta must be finite, got {beta!r}")
    f = p.labels_array()
    al = np.asarray(p.data.counts, dtype=float) + np.asarray(
        p.prior.pseudo_counts, dtype=float
    )
    c = float(np.max(beta * f))
    rng = np.random.default_rng(seed)
    k = p.k
    sw = 0.0
    sw2 = 0.0
    swt = np.zeros(k)
    sw2t = np.zeros(k)
    sw2t2 = np.zeros(k)
    left = samples
    while left > 0:
        nb = min(_BATCH, left)
        theta = rng.dirichlet(al, size=nb)
        w = np.exp(beta * (theta @ f) - c)
        sw += float(w.sum())
        sw2 += float(np.dot(w, w))
        swt += w @ theta
        w2 = w * w
        sw2t += w2 @ theta
        sw2t2 += w2 @ (theta * theta)
        left -= nb
    means = swt / sw
    # Delta-method standard errors of the self-normalized estimator.
    var_terms = np.maximum(sw2t2 - 2.0 * means * sw2t + means**2 * sw2, 0.0)
    mean_se = np.sqrt(var_terms) / sw
    w_mean = sw / samples
    w_var = max(sw2 / samples - w_mean**2, 0.0) * samples / max(samples - 1, 1)
    log_se = math.sqrt(w_var / samples) / w_mean
    ln_b = float(gammaln(al).sum() - gammaln(al.sum()))
    ess = sw * sw / sw2 if sw2 > 0.0 else 0.0
    estimate = OracleEstimate(
        log_value=ln_b + c + math.log(w_mean),
        std_error=log_se,
        method="montecarlo",
        samples_or_evals=samples,
        seed=seed,
    )
    return MonteCarloMoments(
        estimate=estimate,
        means=tuple(float(x) for x in means),
        mean_std_errors=tuple(float(x) for x in mean_se),
        ess=float(ess),
        low_ess=bool(ess < LOW_ESS),
    )
