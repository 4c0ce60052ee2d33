"""Perturbation laws with exact CDF / density / density-derivative / quantile.

Every distribution here is a univariate law used as an i.i.d. perturbation
source for perturbed-leader policies.  The closed forms matter: the selection
quadrature integrates f, f' and F directly, so each concrete class implements
them exactly rather than through scipy.stats wrappers.

Conventions
-----------
* ``pdf_prime`` returns the right-hand derivative at non-differentiable
  points (two-sided laws typically have a kink at 0); the kink locations are
  exposed via ``kinks`` and ``pdf_prime_flagged``.
* ``tail_index_right`` / ``tail_index_left`` give the polynomial decay order
  of each tail; exponential or absent tails are reported as ``math.inf``.
* All evaluators accept scalars or numpy arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

__all__ = [
    "PerturbationDistribution",
    "SymmetricPareto",
    "LaplacePareto",
    "AsymmetricPareto",
    "Frechet",
    "ParetoLomax",
    "GeneralizedPareto",
    "Gumbel",
    "Laplace",
    "Hybrid",
    "Truncated",
    "parse_dist",
    "GridSpec",
    "McSpec",
    "AssumptionReport",
    "check_assumptions",
]

_TINY_U = 0.5 / 2.0**53  # remap for the measure-zero event rng.random() == 0


def _scalarize(x, out):
    if np.isscalar(x) or getattr(x, "ndim", 1) == 0:
        return float(out)
    return out


class PerturbationDistribution:
    """Base class: an evaluable and sampleable law on (a subset of) the reals."""

    support: tuple[float, float] = (-math.inf, math.inf)
    tail_index_right: float = math.inf
    tail_index_left: float = math.inf
    kinks: tuple[float, ...] = ()

    def cdf(self, x):
        raise NotImplementedError

    def sf(self, x):
        """Survival function 1 - F(x); overridden where the subtraction cancels."""
        return 1.0 - self.cdf(x) if np.isscalar(x) else 1.0 - np.asarray(self.cdf(x))

    def pdf(self, x):
        raise NotImplementedError

    def pdf_prime(self, x):
        raise NotImplementedError

    def quantile(self, u):
        """Inverse CDF for u in (0, 1); validates its domain."""
        u_arr = np.asarray(u, dtype=float)
        if np.any(u_arr <= 0.0) or np.any(u_arr >= 1.0):
            raise DomainError(f"quantile level must lie in (0, 1), got {u!r}")
        return _scalarize(u, self._quantile(u_arr))

    def _quantile(self, u):
        raise NotImplementedError

    def pdf_prime_flagged(self, x):
        """(right-hand derivative of f at x, True iff x is a kink point)."""
        at_kink = bool(np.any([np.isclose(x, k, rtol=0.0, atol=0.0) for k in self.kinks]))
        return self.pdf_prime(x), at_kink

    def density_jumps(self):
        """((location, f(loc+) - f(loc-)), ...) where the density is discontinuous.

        Jumps make the distributional derivative of f carry point masses; the
        selection quadrature needs them to differentiate phi correctly.
        """
        return ()

    # -- sampling (inverse transform; determinism comes from the caller's rng)

    def sample(self, rng):
        return float(self.sample_array((), rng))

    def sample_vector(self, k, rng):
        return self.sample_array(k, rng)

    def sample_array(self, shape, rng):
        u = rng.random(shape)
        u = np.where(u == 0.0, _TINY_U, u)
        return self._quantile(u)

    def mean(self):
        """E[X] by quadrature; concrete classes override when closed-form."""
        from scipy.integrate import quad

        if min(self.tail_index_left, self.tail_index_right) <= 1.0:
            return math.nan
        lo, hi = self.support
        pts = sorted(set(self.kinks) | {lo, hi} - {-math.inf, math.inf})
        edges = [lo, *pts, hi]
        total = 0.0
        for a, b in zip(edges[:-1], edges[1:]):
            if a == b:
                continue
            total += quad(lambda z: z * self.pdf(z), a, b, limit=200)[0]
        return total

    def __repr__(self):
        return f"{type(self).__name__}()"


@dataclass(frozen=True, repr=False)
class SymmetricPareto(PerturbationDistribution):
    """Two-sided polynomial law  f(x) = a / (2 (|x|+1)^(a+1)),  shape a > 0.

    The canonical heavy-tailed symmetric perturbation; shape 2 is the default
    used throughout the counterexample scans.
    """

    a: float = 2.0
    kinks = (0.0,)

    def __post_init__(self):
        if self.a <= 0:
            raise DomainError("shape must be positive")
        object.__setattr__(self, "tail_index_right", float(self.a))
        object.__setattr__(self, "tail_index_left", float(self.a))

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(
            x_arr < 0.0,
            0.5 * (1.0 - neg) ** (-self.a),
            1.0 - 0.5 * (1.0 + pos) ** (-self.a),
        )
        return _scalarize(x, out)

    def sf(self, x):
        x_arr = np.asarray(x, dtype=float)
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(
            x_arr < 0.0,
            1.0 - 0.5 * (1.0 - neg) ** (-self.a),
            0.5 * (1.0 + pos) ** (-self.a),
        )
        return _scalarize(x, out)

    def pdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        out = 0.5 * self.a * (1.0 + np.abs(x_arr)) ** (-self.a - 1.0)
        return _scalarize(x, out)

    def pdf_prime(self, x):
        x_arr = np.asarray(x, dtype=float)
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        c = 0.5 * self.a * (self.a + 1.0)
        out = np.where(
            x_arr < 0.0,
            c * (1.0 - neg) ** (-self.a - 2.0),
            -c * (1.0 + pos) ** (-self.a - 2.0),
        )
        return _scalarize(x, out)

    def _quantile(self, u):
        lo = np.minimum(u, 0.5)
        hi = np.maximum(u, 0.5)
        return np.where(
            u < 0.5,
            1.0 - (2.0 * lo) ** (-1.0 / self.a),
            (2.0 * (1.0 - hi)) ** (-1.0 / self.a) - 1.0,
        )

    def mean(self):
        return 0.0 if self.a > 1.0 else math.nan

    def __repr__(self):
        return f"SymmetricPareto(a={self.a:g})"


@dataclass(frozen=True, repr=False)
class LaplacePareto(PerturbationDistribution):
    """Exponential left half e^(2x), polynomial right half 1/(x+1)^3.

    Tail indices (right, left) = (2, inf): a glued Gumbel-type/heavy-tail
    law with mean 1/4.
    """

    kinks = (0.0,)
    tail_index_right = 2.0
    tail_index_left = math.inf

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(
            x_arr < 0.0,
            0.5 * np.exp(2.0 * neg),
            1.0 - 0.5 * (1.0 + pos) ** -2.0,
        )
        return _scalarize(x, out)

    def sf(self, x):
        x_arr = np.asarray(x, dtype=float)
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(
            x_arr < 0.0,
            1.0 - 0.5 * np.exp(2.0 * neg),
            0.5 * (1.0 + pos) ** -2.0,
        )
        return _scalarize(x, out)

    def pdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(x_arr < 0.0, np.exp(2.0 * neg), (1.0 + pos) ** -3.0)
        return _scalarize(x, out)

    def pdf_prime(self, x):
        x_arr = np.asarray(x, dtype=float)
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(x_arr < 0.0, 2.0 * np.exp(2.0 * neg), -3.0 * (1.0 + pos) ** -4.0)
        return _scalarize(x, out)

    def _quantile(self, u):
        lo = np.minimum(u, 0.5)
        hi = np.maximum(u, 0.5)
        return np.where(
            u < 0.5,
            0.5 * np.log(2.0 * lo),
            (2.0 * (1.0 - hi)) ** -0.5 - 1.0,
        )

    def mean(self):
        return 0.25

    def __repr__(self):
        return "LaplacePareto()"


@dataclass(frozen=True, repr=False)
class AsymmetricPareto(PerturbationDistribution):
    """Lomax right half (index alpha), generalized-Pareto left half (index beta).

    The left scale is beta/alpha so the density is continuous at 0; with
    (alpha, beta) = (2, 3) this is the classic asymmetric-Pareto example
    whose f/F ratio increases on the negative axis.
    """

    alpha: float = 2.0
    beta: float = 3.0
    kinks = (0.0,)

    def __post_init__(self):
        if self.alpha <= 0 or self.beta <= 0:
            raise DomainError("tail indices must be positive")
        object.__setattr__(self, "tail_index_right", float(self.alpha))
        object.__setattr__(self, "tail_index_left", float(self.beta))

    @property
    def left_scale(self):
        return self.beta / self.alpha

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        s = self.left_scale
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(
            x_arr < 0.0,
            0.5 * (s / (s - neg)) ** self.beta,
            1.0 - 0.5 * (1.0 + pos) ** (-self.alpha),
        )
        return _scalarize(x, out)

    def sf(self, x):
        x_arr = np.asarray(x, dtype=float)
        s = self.left_scale
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(
            x_arr < 0.0,
            1.0 - 0.5 * (s / (s - neg)) ** self.beta,
            0.5 * (1.0 + pos) ** (-self.alpha),
        )
        return _scalarize(x, out)

    def pdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        s = self.left_scale
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(
            x_arr < 0.0,
            0.5 * self.beta * s**self.beta * (s - neg) ** (-self.beta - 1.0),
            0.5 * self.alpha * (1.0 + pos) ** (-self.alpha - 1.0),
        )
        return _scalarize(x, out)

    def pdf_prime(self, x):
        x_arr = np.asarray(x, dtype=float)
        s = self.left_scale
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(
            x_arr < 0.0,
            0.5 * self.beta * (self.beta + 1.0) * s**self.beta * (s - neg) ** (-self.beta - 2.0),
            -0.5 * self.alpha * (self.alpha + 1.0) * (1.0 + pos) ** (-self.alpha - 2.0),
        )
        return _scalarize(x, out)

    def _quantile(self, u):
        s = self.left_scale
        lo = np.minimum(u, 0.5)
        hi = np.maximum(u, 0.5)
        return np.where(
            u < 0.5,
            s * (1.0 - (2.0 * lo) ** (-1.0 / self.beta)),
            (2.0 * (1.0 - hi)) ** (-1.0 / self.alpha) - 1.0,
        )

    def __repr__(self):
        return f"AsymmetricPareto({self.alpha:g},{self.beta:g})"


@dataclass(frozen=True, repr=False)
class Frechet(PerturbationDistribution):
    """Standard Frechet law on (0, inf): F(x) = exp(-x^-alpha)."""

    alpha: float = 2.0
    support = (0.0, math.inf)
    kinks = (0.0,)
    tail_index_left = math.inf

    def __post_init__(self):
        if self.alpha <= 0:
            raise DomainError("shape must be positive")
        object.__setattr__(self, "tail_index_right", float(self.alpha))

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 1e-12)
        with np.errstate(over="ignore", under="ignore"):
            out = np.where(x_arr > 0.0, np.exp(-(pos ** (-self.alpha))), 0.0)
        return _scalarize(x, out)

    def sf(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 1e-12)
        with np.errstate(over="ignore", under="ignore"):
            out = np.where(x_arr > 0.0, -np.expm1(-(pos ** (-self.alpha))), 1.0)
        return _scalarize(x, out)

    def pdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 1e-12)
        a = self.alpha
        with np.errstate(over="ignore", under="ignore"):
            out = np.where(
                x_arr > 0.0, a * pos ** (-a - 1.0) * np.exp(-(pos ** -a)), 0.0
            )
        return _scalarize(x, out)

    def pdf_prime(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 1e-12)
        a = self.alpha
        with np.errstate(over="ignore", under="ignore"):
            out = np.where(
                x_arr > 0.0,
                a * np.exp(-(pos ** -a)) * (a * pos ** (-2 * a - 2.0) - (a + 1.0) * pos ** (-a - 2.0)),
                0.0,
            )
        return _scalarize(x, out)

    def _quantile(self, u):
        return (-np.log(u)) ** (-1.0 / self.alpha)

    def __repr__(self):
        return f"Frechet({self.alpha:g})"


@dataclass(frozen=True, repr=False)
class ParetoLomax(PerturbationDistribution):
    """Lomax (shifted Pareto) law on (0, inf): 1 - F(x) = (x+1)^-alpha."""

    alpha: float = 2.0
    support = (0.0, math.inf)
    kinks = (0.0,)
    tail_index_left = math.inf

    def __post_init__(self):
        if self.alpha <= 0:
            raise DomainError("shape must be positive")
        object.__setattr__(self, "tail_index_right", float(self.alpha))

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(x_arr > 0.0, 1.0 - (1.0 + pos) ** (-self.alpha), 0.0)
        return _scalarize(x, out)

    def sf(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(x_arr > 0.0, (1.0 + pos) ** (-self.alpha), 1.0)
        return _scalarize(x, out)

    def pdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(x_arr > 0.0, self.alpha * (1.0 + pos) ** (-self.alpha - 1.0), 0.0)
        return _scalarize(x, out)

    def pdf_prime(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 0.0)
        a = self.alpha
        out = np.where(x_arr > 0.0, -a * (a + 1.0) * (1.0 + pos) ** (-a - 2.0), 0.0)
        return _scalarize(x, out)

    def _quantile(self, u):
        return (1.0 - u) ** (-1.0 / self.alpha) - 1.0

    def density_jumps(self):
        return ((0.0, self.alpha),)

    def __repr__(self):
        return f"ParetoLomax({self.alpha:g})"


@dataclass(frozen=True, repr=False)
class GeneralizedPareto(PerturbationDistribution):
    """Generalized Pareto on (0, inf): 1 - F(x) = (scale/(scale+x))^beta."""

    beta: float = 3.0
    scale: float = 1.0
    support = (0.0, math.inf)
    kinks = (0.0,)
    tail_index_left = math.inf

    def __post_init__(self):
        if self.beta <= 0 or self.scale <= 0:
            raise DomainError("shape and scale must be positive")
        object.__setattr__(self, "tail_index_right", float(self.beta))

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 0.0)
        s = self.scale
        out = np.where(x_arr > 0.0, 1.0 - (s / (s + pos)) ** self.beta, 0.0)
        return _scalarize(x, out)

    def sf(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 0.0)
        s = self.scale
        out = np.where(x_arr > 0.0, (s / (s + pos)) ** self.beta, 1.0)
        return _scalarize(x, out)

    def pdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 0.0)
        s, b = self.scale, self.beta
        out = np.where(x_arr > 0.0, b * s**b * (s + pos) ** (-b - 1.0), 0.0)
        return _scalarize(x, out)

    def pdf_prime(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 0.0)
        s, b = self.scale, self.beta
        out = np.where(x_arr > 0.0, -b * (b + 1.0) * s**b * (s + pos) ** (-b - 2.0), 0.0)
        return _scalarize(x, out)

    def _quantile(self, u):
        return self.scale * ((1.0 - u) ** (-1.0 / self.beta) - 1.0)

    def density_jumps(self):
        return ((0.0, self.beta / self.scale),)

    def __repr__(self):
        return f"GeneralizedPareto({self.beta:g},scale={self.scale:g})"


@dataclass(frozen=True, repr=False)
class Gumbel(PerturbationDistribution):
    """Standard Gumbel law; selection probabilities reduce to the softmax."""

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", under="ignore"):
            out = np.exp(-np.exp(-x_arr))
        return _scalarize(x, out)

    def sf(self, x):
        x_arr = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", under="ignore"):
            out = -np.expm1(-np.exp(-x_arr))
        return _scalarize(x, out)

    def pdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", under="ignore"):
            out = np.exp(-x_arr - np.exp(-x_arr))
        return _scalarize(x, out)

    def pdf_prime(self, x):
        x_arr = np.asarray(x, dtype=float)
        with np.errstate(over="ignore", under="ignore"):
            e = np.exp(-x_arr)
            out = np.exp(-x_arr - e) * (e - 1.0)
        return _scalarize(x, out)

    def _quantile(self, u):
        return -np.log(-np.log(u))

    def mean(self):
        return float(np.euler_gamma)


@dataclass(frozen=True, repr=False)
class Laplace(PerturbationDistribution):
    """Double-exponential law with the given rate."""

    rate: float = 1.0
    kinks = (0.0,)

    def __post_init__(self):
        if self.rate <= 0:
            raise DomainError("rate must be positive")

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        b = self.rate
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(x_arr < 0.0, 0.5 * np.exp(b * neg), 1.0 - 0.5 * np.exp(-b * pos))
        return _scalarize(x, out)

    def sf(self, x):
        x_arr = np.asarray(x, dtype=float)
        b = self.rate
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(x_arr < 0.0, 1.0 - 0.5 * np.exp(b * neg), 0.5 * np.exp(-b * pos))
        return _scalarize(x, out)

    def pdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        b = self.rate
        return _scalarize(x, 0.5 * b * np.exp(-b * np.abs(x_arr)))

    def pdf_prime(self, x):
        x_arr = np.asarray(x, dtype=float)
        b = self.rate
        out = np.where(x_arr < 0.0, 1.0, -1.0) * 0.5 * b * b * np.exp(-b * np.abs(x_arr))
        return _scalarize(x, out)

    def _quantile(self, u):
        b = self.rate
        lo = np.minimum(u, 0.5)
        hi = np.maximum(u, 0.5)
        return np.where(u < 0.5, np.log(2.0 * lo) / b, -np.log(2.0 * (1.0 - hi)) / b)

    def mean(self):
        return 0.0

    def __repr__(self):
        return f"Laplace(rate={self.rate:g})"


@dataclass(frozen=True, repr=False)
class Hybrid(PerturbationDistribution):
    """Two nonnegative laws glued at 0 with half mass on each side.

    F(x) = 1/2 + F_right(x)/2 for x >= 0 and 1/2 - F_left(-x)/2 for x < 0,
    so F(0) = 1/2 exactly.  The hybrid's left tail index is the right tail
    index of the ``left`` component.
    """

    right: PerturbationDistribution
    left: PerturbationDistribution

    def __post_init__(self):
        for side, d in (("right", self.right), ("left", self.left)):
            if d.support[0] < 0.0:
                raise DomainError(f"{side} component must be supported on [0, inf)")
        object.__setattr__(self, "tail_index_right", self.right.tail_index_right)
        object.__setattr__(self, "tail_index_left", self.left.tail_index_right)
        ks = {0.0}
        ks.update(k for k in self.right.kinks if k > 0.0)
        ks.update(-k for k in self.left.kinks if k > 0.0)
        object.__setattr__(self, "kinks", tuple(sorted(ks)))

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(
            x_arr < 0.0,
            0.5 - 0.5 * np.asarray(self.left.cdf(-neg), dtype=float),
            0.5 + 0.5 * np.asarray(self.right.cdf(pos), dtype=float),
        )
        return _scalarize(x, out)

    def sf(self, x):
        x_arr = np.asarray(x, dtype=float)
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(
            x_arr < 0.0,
            0.5 + 0.5 * np.asarray(self.left.cdf(-neg), dtype=float),
            0.5 * np.asarray(self.right.sf(pos), dtype=float),
        )
        return _scalarize(x, out)

    def pdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(
            x_arr < 0.0,
            0.5 * np.asarray(self.left.pdf(-neg), dtype=float),
            0.5 * np.asarray(self.right.pdf(pos), dtype=float),
        )
        return _scalarize(x, out)

    def pdf_prime(self, x):
        x_arr = np.asarray(x, dtype=float)
        neg = np.minimum(x_arr, 0.0)
        pos = np.maximum(x_arr, 0.0)
        out = np.where(
            x_arr < 0.0,
            -0.5 * np.asarray(self.left.pdf_prime(-neg), dtype=float),
            0.5 * np.asarray(self.right.pdf_prime(pos), dtype=float),
        )
        return _scalarize(x, out)

    def _quantile(self, u):
        lo = np.clip(1.0 - 2.0 * np.minimum(u, 0.5), _TINY_U, 1.0 - _TINY_U)
        hi = np.clip(2.0 * np.maximum(u, 0.5) - 1.0, _TINY_U, 1.0 - _TINY_U)
        return np.where(
            u < 0.5,
            -np.asarray(self.left._quantile(lo), dtype=float),
            np.asarray(self.right._quantile(hi), dtype=float),
        )

    def density_jumps(self):
        # one-sided limits at the glue point, probed just inside each half
        right_limit = float(self.right.pdf(1e-9))
        left_limit = float(self.left.pdf(1e-9))
        jumps = []
        glue = 0.5 * (right_limit - left_limit)
        if abs(glue) > 1e-300:
            jumps.append((0.0, glue))
        for loc, j in self.right.density_jumps():
            if loc > 0.0:
                jumps.append((loc, 0.5 * j))
        for loc, j in self.left.density_jumps():
            if loc > 0.0:
                jumps.append((-loc, -0.5 * j))
        return tuple(jumps)

    def __repr__(self):
        return f"Hybrid(right={self.right!r}, left={self.left!r})"


@dataclass(frozen=True, repr=False)
class Truncated(PerturbationDistribution):
    """Tail-equivalent law conditioned above 1 and shifted back to (0, inf).

    F*(x) = (F(x+1) - F(1)) / (1 - F(1)) for x > 0 and 0 otherwise, which
    keeps the right tail order while producing a nonnegative law with
    bounded hazard near the origin.
    """

    inner: PerturbationDistribution
    support = (0.0, math.inf)
    tail_index_left = math.inf

    def __post_init__(self):
        object.__setattr__(self, "tail_index_right", self.inner.tail_index_right)
        f1 = float(self.inner.cdf(1.0))
        if not f1 < 1.0:
            raise DomainError("inner law has no mass above 1")
        object.__setattr__(self, "_f1", f1)
        ks = {0.0}
        ks.update(k - 1.0 for k in self.inner.kinks if k > 1.0)
        object.__setattr__(self, "kinks", tuple(sorted(ks)))

    def cdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 0.0)
        inner_cdf = np.asarray(self.inner.cdf(pos + 1.0), dtype=float)
        out = np.where(x_arr > 0.0, (inner_cdf - self._f1) / (1.0 - self._f1), 0.0)
        return _scalarize(x, out)

    def sf(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 0.0)
        inner_sf = np.asarray(self.inner.sf(pos + 1.0), dtype=float)
        out = np.where(x_arr > 0.0, inner_sf / (1.0 - self._f1), 1.0)
        return _scalarize(x, out)

    def pdf(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 0.0)
        inner_pdf = np.asarray(self.inner.pdf(pos + 1.0), dtype=float)
        out = np.where(x_arr > 0.0, inner_pdf / (1.0 - self._f1), 0.0)
        return _scalarize(x, out)

    def pdf_prime(self, x):
        x_arr = np.asarray(x, dtype=float)
        pos = np.maximum(x_arr, 0.0)
        inner_pp = np.asarray(self.inner.pdf_prime(pos + 1.0), dtype=float)
        out = np.where(x_arr > 0.0, inner_pp / (1.0 - self._f1), 0.0)
        return _scalarize(x, out)

    def _quantile(self, u):
        return np.asarray(
            self.inner._quantile(self._f1 + u * (1.0 - self._f1)), dtype=float
        ) - 1.0

    def density_jumps(self):
        scale = 1.0 - self._f1
        jumps = [(0.0, float(self.inner.pdf(1.0)) / scale)]
        for loc, j in self.inner.density_jumps():
            if loc > 1.0:
                jumps.append((loc - 1.0, j / scale))
        return tuple(jumps)

    def __repr__(self):
        return f"Truncated({self.inner!r})"


# ---------------------------------------------------------------------------
# distribution-spec mini-language
# ---------------------------------------------------------------------------

def parse_dist(spec: str) -> PerturbationDistribution:
    """Parse a distribution spec string.

    Grammar (case-insensitive):
      ``lp``                      Laplace-Pareto
      ``splareto[:a=A | :A]``     symmetric Pareto, default shape 2
      ``asp:A,B``                 asymmetric Pareto with tail indices (A, B)
      ``frechet:A`` ``pareto:A``  Frechet / Lomax with shape A
      ``gpd:B[,S]``               generalized Pareto, shape B, scale S (default 1)
      ``gumbel`` ``laplace[:R]``  Gumbel / double exponential with rate R
      ``hybrid:right=<spec>,left=<spec>``
      ``trunc(<spec>)``
    """
    s = spec.strip()
    low = s.lower()
    if low.startswith("trunc(") and low.endswith(")"):
        return Truncated(parse_dist(s[6:-1]))
    if low.startswith("hybrid:"):
        body = s[len("hybrid:"):]
        if not body.lower().startswith("right="):
            raise DomainError(f"hybrid spec must read hybrid:right=...,left=... got {spec!r}")
        marker = body.lower().find(",left=")
        if marker < 0:
            raise DomainError(f"hybrid spec missing ,left= in {spec!r}")
        right = parse_dist(body[len("right="):marker])
        left = parse_dist(body[marker + len(",left="):])
        return Hybrid(right=right, left=left)

    head, _, rest = low.partition(":")
    if head == "lp":
        return LaplacePareto()
    if head == "gumbel":
        return Gumbel()
    if head == "laplace":
        return Laplace(rate=float(rest)) if rest else Laplace()
    if head == "splareto":
        if not rest:
            return SymmetricPareto()
        if rest.startswith("a="):
            rest = rest[2:]
        return SymmetricPareto(a=float(rest))
    if head == "asp":
        a, _, b = rest.partition(",")
        return AsymmetricPareto(alpha=float(a), beta=float(b))
    if head == "frechet":
        return Frechet(alpha=float(rest))
    if head == "pareto":
        return ParetoLomax(alpha=float(rest))
    if head == "gpd":
        b, _, sc = rest.partition(",")
        return GeneralizedPareto(beta=float(b), scale=float(sc) if sc else 1.0)
    raise DomainError(f"unknown distribution spec {spec!r}")


# ---------------------------------------------------------------------------
# assumption checker
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSpec:
    """Geometric evaluation grid for the tail diagnostics."""

    x_min: float = 1e-3
    x_max: float = 1e3
    n: int = 2000

    def __post_init__(self):
        if self.x_max < 1e3:
            raise DomainError("grid must reach at least 1e3 for tail diagnostics")

    def points(self):
        return np.geomspace(self.x_min, self.x_max, self.n)


@dataclass(frozen=True)
class McSpec:
    """Monte-Carlo design for the block-maximum diagnostics."""

    block_sizes: tuple[int, ...] = (8, 32, 128, 512)
    n_blocks: int = 20000
    seed: int = 0


@dataclass
class AssumptionReport:
    """Numerical diagnostics for the five regularity conditions.

    Estimates are suprema/limits over the recorded grid or Monte-Carlo
    design; a diverging statistic is reported as +inf together with a
    ``NonFiniteEstimate`` flag (a finding, not a failure).
    """

    hazard_sup: float
    ff_monotone: bool
    ff_first_violation: float | None
    f_unimodal_from: float
    block_max_mu: float
    block_max_mu_ci: float
    block_max_ml: float
    block_max_ml_ci: float
    a_k_fit: tuple[float, float]
    neg_logderiv_sup: float
    von_mises_limit: float
    grid_points: int
    mc_block_sizes: tuple[int, ...]
    mc_blocks: int
    flags: set = field(default_factory=set)
    notes: list = field(default_factory=list)

    def rows(self):
        """(assumption, statistic, value, grid_or_mc, notes) rows for CSV export."""
        g = f"grid:{self.grid_points}"
        m = f"mc:{self.mc_blocks}x{list(self.mc_block_sizes)}"
        viol = "" if self.ff_first_violation is None else f"first violation at x={self.ff_first_violation:.6g}"
        return [
            ("bounded_hazard", "sup f/(1-F)", self.hazard_sup, g,
             "diverging" if "hazard" in self.flags else ""),
            ("monotone_f_over_F", "f/F nonincreasing", float(self.ff_monotone), g, viol),
            ("unimodal_density", "f decreasing beyond x0", self.f_unimodal_from, g, ""),
            ("block_maxima", "E[max_k X / a_k] <= M_u", self.block_max_mu, m,
             f"ci_halfwidth={self.block_max_mu_ci:.3g}"),
            ("block_maxima", "E[a_k / max_k X] <= M_l", self.block_max_ml, m,
             f"ci_halfwidth={self.block_max_ml_ci:.3g}"),
            ("block_maxima", "a_k k^(-1/alpha) in [A_l, A_u]",
             self.a_k_fit[1], m, f"A_l={self.a_k_fit[0]:.6g}"),
            ("bounded_log_derivative", "sup -f'/f", self.neg_logderiv_sup, g,
             "diverging" if "neg_logderiv" in self.flags else ""),
            ("von_mises", "x f/(1-F) at grid end", self.von_mises_limit, g,
             "diverging" if "von_mises" in self.flags else ""),
        ]


def _tail_trend_diverging(x, values):
    """Heuristic: statistic keeps growing through the last decade of the grid."""
    finite = np.isfinite(values)
    if not np.any(finite):
        return True
    x, values = x[finite], values[finite]
    tail = values[x >= x[-1] / 10.0]
    mid = values[(x >= x[-1] / 100.0) & (x < x[-1] / 10.0)]
    if len(tail) == 0 or len(mid) == 0:
        return False
    return float(tail[-1]) >= 0.98 * float(np.max(tail)) and float(tail[-1]) > 1.5 * float(np.max(mid))


def check_assumptions(dist, grid: GridSpec | None = None, mc: McSpec | None = None):
    """Evaluate the five regularity diagnostics for ``dist``.

    Block maxima are normalized by a_k = quantile(1 - 1/k); for two-sided
    laws the reciprocal statistic conditions on a positive block maximum
    (the complementary event has probability 2^-k) and says so in notes.
    """
    grid = grid or GridSpec()
    mc = mc or McSpec()
    flags: set = set()
    notes: list = []

    lo, hi = dist.support
    xs_right = grid.points()
    if lo == -math.inf:
        xs = np.concatenate([-xs_right[::-1], [0.0], xs_right])
    else:
        xs = np.concatenate([[max(lo, 0.0)], xs_right]) if lo == 0.0 else xs_right
    xs = xs[(xs > lo) & (xs < hi)]

    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        f = np.asarray(dist.pdf(xs), dtype=float)
        F = np.asarray(dist.cdf(xs), dtype=float)
        S = np.asarray(dist.sf(xs), dtype=float)
        fp = np.asarray(dist.pdf_prime(xs), dtype=float)

        # Assumption: bounded hazard rate on the (right) support.  Points where
        # both f and 1-F underflow to zero carry no information and are dropped;
        # 1-F = 0 with f > 0 is a genuine blowup.
        right = xs > 0.0 if lo == -math.inf else np.ones_like(xs, dtype=bool)
        informative = right & ((S > 0.0) | (f > 0.0))
        hazard = f[informative] / S[informative]
        finite = np.isfinite(hazard)
        hazard_sup = float(np.max(hazard[finite])) if finite.any() else math.inf
        if not finite.all() or _tail_trend_diverging(xs[informative][finite], hazard[finite]):
            flags.add("hazard")
            flags.add("NonFiniteEstimate")
            hazard_sup = math.inf

        # Assumption: f/F nonincreasing over the whole support
        ratio = f / F
        ok = np.isfinite(ratio)
        diffs = np.diff(ratio[ok])
        viol = np.nonzero(diffs > 1e-12 * np.maximum(1.0, np.abs(ratio[ok][:-1])))[0]
        ff_monotone = len(viol) == 0
        ff_first = None if ff_monotone else float(xs[ok][viol[0]])

        # Assumption: f eventually decreasing (report the onset point)
        pos = xs > 0.0
        increasing = np.nonzero(fp[pos] > 1e-15)[0]
        f_unimodal_from = 0.0 if len(increasing) == 0 else float(xs[pos][increasing[-1]])

        # Assumption: normalized block maxima (Monte Carlo)
        rng = np.random.default_rng(np.random.SeedSequence((mc.seed, 0xB10C)))
        mu_est, mu_ci, ml_est, ml_ci, fits = [], [], [], [], []
        alpha = dist.tail_index_right
        for k in mc.block_sizes:
            a_k = float(dist.quantile(1.0 - 1.0 / k))
            if a_k <= 0.0:
                notes.append(f"k={k}: a_k <= 0, block statistic skipped")
                continue
            block_max = dist.sample_array((mc.n_blocks, k), rng).max(axis=1)
            norm = block_max / a_k
            mu_est.append(float(np.mean(norm)))
            mu_ci.append(1.96 * float(np.std(norm)) / math.sqrt(mc.n_blocks))
            pos_mask = norm > 0.0
            if not np.all(pos_mask):
                notes.append(
                    f"k={k}: reciprocal conditioned on positive maximum "
                    f"({int(np.sum(~pos_mask))} of {mc.n_blocks} blocks dropped)"
                )
            rec = 1.0 / norm[pos_mask]
            ml_est.append(float(np.mean(rec)))
            ml_ci.append(1.96 * float(np.std(rec)) / math.sqrt(len(rec)))
            if math.isfinite(alpha):
                fits.append(a_k * k ** (-1.0 / alpha))
        block_max_mu = max(mu_est) if mu_est else math.nan
        block_max_mu_ci = max(mu_ci) if mu_ci else math.nan
        block_max_ml = max(ml_est) if ml_est else math.nan
        block_max_ml_ci = max(ml_ci) if ml_ci else math.nan
        if fits:
            a_k_fit = (float(min(fits)), float(max(fits)))
        else:
            a_k_fit = (math.nan, math.nan)
            notes.append("right tail index is inf: a_k k^(-1/alpha) fit not applicable")

        # Assumption: -f'/f bounded almost everywhere (skip kink points)
        near_kink = np.zeros_like(xs, dtype=bool)
        for kk in dist.kinks:
            near_kink |= np.isclose(xs, kk, rtol=0.0, atol=1e-12)
        nl = -fp[~near_kink] / f[~near_kink]
        nl_finite = np.isfinite(nl)
        nl_sup = float(np.max(nl[nl_finite])) if nl_finite.any() else math.inf
        if _tail_trend_diverging(xs[~near_kink], nl):
            flags.add("neg_logderiv")
            flags.add("NonFiniteEstimate")
            nl_sup = math.inf

        # von Mises ratio at the last informative grid point
        vm_x = xs[informative][finite]
        vm_curve = vm_x * hazard[finite]
        vm = float(vm_curve[-1]) if len(vm_curve) else math.inf
        if _tail_trend_diverging(vm_x, vm_curve) or not math.isfinite(vm):
            flags.add("von_mises")
            flags.add("NonFiniteEstimate")
            vm = math.inf

    return AssumptionReport(
        hazard_sup=hazard_sup,
        ff_monotone=bool(ff_monotone),
        ff_first_violation=ff_first,
        f_unimodal_from=f_unimodal_from,
        block_max_mu=block_max_mu,
        block_max_mu_ci=block_max_mu_ci,
        block_max_ml=block_max_ml,
        block_max_ml_ci=block_max_ml_ci,
        a_k_fit=a_k_fit,
        neg_logderiv_sup=nl_sup,
        von_mises_limit=float(vm),
        grid_points=len(xs),
        mc_block_sizes=tuple(mc.block_sizes),
        mc_blocks=mc.n_blocks,
        flags=flags,
        notes=notes,
    )
