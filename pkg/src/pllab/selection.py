"""Arm-selection probabilities by adaptive quadrature, with a Monte-Carlo oracle.

For a loss vector lambda and i.i.d. perturbations with CDF F and density f,
the probability that arm i attains the perturbed argmin is

    phi_i = integral  f(z + gap_i) * prod_{j != i} F(z + gap_j)  dz,

where gap = lambda - min(lambda).  The own-coordinate derivative phi_i' is
the same integral with f replaced by f'.  Both integrands are only piecewise
smooth (f has kinks), so the real line is split at every shifted kink before
handing each piece to QUADPACK.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad

from .distributions import PerturbationDistribution
from .errors import DomainError, ToleranceNotMet

__all__ = [
    "SelectionProbe",
    "phi_quadrature",
    "phi_monte_carlo",
    "stability_envelope_scan",
    "counterexample_scan",
]

_TAIL_CUT = 50.0


@dataclass(frozen=True)
class SelectionProbe:
    """Quadrature result for one loss vector.

    ``rank[i]`` is the 1-based rank of lambda_i in nondecreasing order (ties
    broken by index), ``ratio_1 = -phi'/phi`` and ``ratio_32 = -phi'/phi^1.5``
    are the stability ratios, and ``quad_error`` bounds the absolute
    quadrature error of any single component.
    """

    lam: np.ndarray
    lambda_gap: np.ndarray
    rank: np.ndarray
    phi: np.ndarray
    phi_prime: np.ndarray
    quad_error: float

    @property
    def ratio_1(self):
        return -self.phi_prime / self.phi

    @property
    def ratio_32(self):
        return -self.phi_prime / self.phi**1.5


def _ranks(lam):
    order = np.argsort(lam, kind="stable")
    rank = np.empty(len(lam), dtype=int)
    rank[order] = np.arange(1, len(lam) + 1)
    return rank


def _breakpoints(dist, gap, i):
    """Sorted split points for the z-integral of component i."""
    pts = set()
    for k in dist.kinks:
        pts.update(k - g for g in gap)
    lo, hi = dist.support
    if lo != -math.inf:
        pts.add(lo - gap[i])  # density support edge of the f factor
    cut = max(_TAIL_CUT, 10.0 * float(np.max(gap)))
    pts.update((-cut, cut))
    return sorted(pts)


def _piecewise_integral(fn, edges, left_open, right_open, epsabs):
    total = 0.0
    err = 0.0
    segments = []
    if left_open:
        segments.append((-np.inf, edges[0]))
    segments.extend(zip(edges[:-1], edges[1:]))
    if right_open:
        segments.append((edges[-1], np.inf))
    with warnings.catch_warnings():
        # heavy polynomial tails trip QUADPACK's slow-convergence heuristic;
        # the returned error estimate is checked against tol by the callers
        warnings.simplefilter("ignore", IntegrationWarning)
        for a, b in segments:
            if a == b:
                continue
            val, e = quad(fn, a, b, epsabs=epsabs, epsrel=1e-11, limit=200)
            total += val
            err += e
    return total, err


def _component_integrals(dist, gap, i, tol, need_prime=True):
    """(phi_i, phi'_i, error bound) for one component."""
    lo, hi = dist.support
    gap_i = gap[i]
    others = np.delete(np.arange(len(gap)), i)
    gap_others = gap[others]

    def weight(z):
        vals = np.asarray(dist.cdf(z + gap_others), dtype=float)
        m = vals.min()
        if m <= 0.0:
            return 0.0
        if m < 1e-12:
            return math.exp(float(np.sum(np.log(vals))))
        return float(np.prod(vals))

    def f_integrand(z):
        return float(dist.pdf(z + gap_i)) * weight(z)

    def fp_integrand(z):
        return float(dist.pdf_prime(z + gap_i)) * weight(z)

    edges = _breakpoints(dist, gap, i)
    # restrict to where the f factor is supported
    z_lo = lo - gap_i if lo != -math.inf else -math.inf
    z_hi = hi - gap_i if hi != math.inf else math.inf
    edges = [e for e in edges if (z_lo == -math.inf or e > z_lo) and (z_hi == math.inf or e < z_hi)]
    if z_lo != -math.inf:
        edges = [z_lo, *edges]
    if z_hi != math.inf:
        edges = [*edges, z_hi]
    left_open = z_lo == -math.inf
    right_open = z_hi == math.inf
    epsabs = tol / (4.0 * (len(edges) + 1))

    phi, e1 = _piecewise_integral(f_integrand, edges, left_open, right_open, epsabs)
    if not need_prime:
        return phi, math.nan, e1
    phi_p, e2 = _piecewise_integral(fp_integrand, edges, left_open, right_open, epsabs)
    # density jumps put point masses into the distributional derivative of f
    for loc, jump in dist.density_jumps():
        phi_p += jump * weight(loc - gap_i)
    return phi, phi_p, max(e1, e2)


def phi_quadrature(lam, dist: PerturbationDistribution, tol: float = 1e-8) -> SelectionProbe:
    """Selection probabilities and own-loss derivatives for every arm.

    Raises ToleranceNotMet when the accumulated QUADPACK error estimate of
    any component exceeds ``tol``.
    """
    lam = np.asarray(lam, dtype=float)
    if lam.ndim != 1 or len(lam) < 2:
        raise DomainError("need a loss vector of length K >= 2")
    if not np.all(np.isfinite(lam)):
        raise DomainError("loss vector must be finite")
    if not 0.0 < tol <= 1e-4:
        raise DomainError("tol must lie in (0, 1e-4]")

    gap = lam - lam.min()
    K = len(lam)
    phi = np.empty(K)
    phi_prime = np.empty(K)
    worst = 0.0
    for i in range(K):
        phi[i], phi_prime[i], err = _component_integrals(dist, gap, i, tol)
        worst = max(worst, err)
    if worst > tol:
        raise ToleranceNotMet(worst, tol)
    return SelectionProbe(
        lam=lam,
        lambda_gap=gap,
        rank=_ranks(lam),
        phi=phi,
        phi_prime=phi_prime,
        quad_error=worst,
    )


def phi_values(lam, dist, tol: float = 1e-9):
    """Selection probabilities only (no derivatives): the cheap evaluation path."""
    lam = np.asarray(lam, dtype=float)
    gap = lam - lam.min()
    out = np.empty(len(lam))
    for i in range(len(lam)):
        out[i], _, err = _component_integrals(dist, gap, i, tol, need_prime=False)
        if err > tol:
            raise ToleranceNotMet(err, tol)
    return out


def phi_monte_carlo(lam, dist, n, rng, chunk=200_000):
    """Empirical argmin frequencies over n i.i.d. perturbation vectors.

    Returns (phi_hat, ci_halfwidth) with 95% normal-approximation intervals;
    argmin ties go to the lowest index.
    """
    lam = np.asarray(lam, dtype=float)
    if n < 10_000:
        raise DomainError("need n >= 1e4 for a meaningful oracle")
    K = len(lam)
    counts = np.zeros(K, dtype=np.int64)
    remaining = int(n)
    while remaining > 0:
        m = min(chunk, remaining)
        r = dist.sample_array((m, K), rng)
        wins = np.argmin(lam[None, :] - r, axis=1)
        counts += np.bincount(wins, minlength=K)
        remaining -= m
    phat = counts / float(n)
    ci = 1.96 * np.sqrt(phat * (1.0 - phat) / float(n))
    return phat, ci


def stability_envelope_scan(dist, K, lambda_of_c, c_grid, tol=1e-8):
    """Stability-ratio scan against the rank and gap bound branches.

    Requires an unbounded hybrid-type law whose left tail is at least two
    orders lighter than the right (tail_left >= tail_right + 2 > 3); the scan
    reports -phi'/phi next to rank^(-1/alpha) and 1/gap so the implied
    constant can be read off empirically.
    """
    alpha = dist.tail_index_right
    beta = dist.tail_index_left
    if dist.support != (-math.inf, math.inf):
        raise DomainError("scan requires a law supported on the whole real line")
    if not alpha > 1.0:
        raise DomainError(f"right tail index must exceed 1, got {alpha}")
    if not beta >= alpha + 2.0:
        raise DomainError(
            f"left tail index {beta} violates the requirement beta >= alpha + 2 = {alpha + 2}"
        )
    rows = []
    running_max = 0.0
    for c in c_grid:
        lam = np.asarray(lambda_of_c(c), dtype=float)
        if len(lam) != K:
            raise DomainError("lambda family must produce vectors of length K")
        probe = phi_quadrature(lam, dist, tol)
        for i in range(K):
            gap_i = probe.lambda_gap[i]
            bound_rank = probe.rank[i] ** (-1.0 / alpha) if math.isfinite(alpha) else 1.0
            bound_gap = 1.0 / gap_i if gap_i > 0.0 else math.inf
            ratio = float(probe.ratio_1[i])
            envelope = min(bound_rank, bound_gap)
            running_max = max(running_max, ratio / envelope)
            rows.append(
                {
                    "c": float(c),
                    "i": i + 1,
                    "sigma_i": int(probe.rank[i]),
                    "lambda_gap": float(gap_i),
                    "ratio_1": ratio,
                    "bound_rank": float(bound_rank),
                    "bound_gap": float(bound_gap),
                    "empirical_constant": running_max,
                    "quad_error": probe.quad_error,
                }
            )
    return rows


def counterexample_scan(dist, K, c_grid, tol=1e-8):
    """Stability ratios at lambda = (0, c, ..., c) over a grid of c.

    For K >= 3 the grid must start at 2*sqrt(K) (the regime where the
    linear-growth lower bound applies); K = 2 may scan from 0.
    """
    if K < 2:
        raise DomainError("need K >= 2")
    c_grid = np.asarray(list(c_grid), dtype=float)
    if K >= 3 and c_grid.min() < 2.0 * math.sqrt(K) - 1e-12:
        raise DomainError(f"for K >= 3 the grid must start at 2 sqrt(K) = {2*math.sqrt(K):.4f}")
    rows = []
    for c in c_grid:
        lam = np.concatenate([[0.0], np.full(K - 1, c)])
        probe = phi_quadrature(lam, dist, tol)
        for i in range(K):
            rows.append(
                {
                    "c": float(c),
                    "i": i + 1,
                    "sigma_i": int(probe.rank[i]),
                    "phi": float(probe.phi[i]),
                    "phi_prime": float(probe.phi_prime[i]),
                    "ratio_1": float(probe.ratio_1[i]),
                    "ratio_32": float(probe.ratio_32[i]),
                    "quad_error": probe.quad_error,
                }
            )
    return rows
