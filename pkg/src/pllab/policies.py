"""Executable bandit learners sharing one interface.

FTPL draws a fresh perturbation vector each round and plays the perturbed
argmin; its importance weight 1/w is estimated by geometric resampling
(count redraws until the played arm wins again, capped).  FTRL solves the
regularized simplex problem exactly each round and can reuse the solved
probabilities for the importance-weighted update.

Learning-rate schedule is m / sqrt(t) throughout.  The Tsallis parameter
``tsallis_beta`` and a distribution's left tail index are unrelated
quantities; the names keep them apart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, SolverDiverged

__all__ = [
    "PolicyState",
    "Shannon",
    "Tsallis",
    "ftpl_select",
    "geometric_resample",
    "ftpl_update",
    "ftrl_select",
    "ftrl_update",
    "tsallis_weights",
    "shannon_weights",
    "kkt_residual",
    "FtplPolicy",
    "FtrlPolicy",
    "parse_policy",
]


@dataclass
class PolicyState:
    """Mutable per-run learner state.

    ``resample_cap`` of None means the dynamic cap ceil(2 K sqrt(t)), which
    bounds per-round work; the cap bias of the resampling estimator is
    (1-w)^M / w and is negligible for arms with w >~ 1/sqrt(t).
    """

    m: float
    lhat: np.ndarray
    rng: np.random.Generator
    t: int = 1
    resample_cap: int | None = None
    last_w: np.ndarray | None = None

    @property
    def k(self):
        return len(self.lhat)

    @property
    def eta(self):
        return self.m / math.sqrt(self.t)

    def cap(self):
        if self.resample_cap is not None:
            return self.resample_cap
        return int(math.ceil(2.0 * self.k * math.sqrt(self.t)))

    @classmethod
    def fresh(cls, k, m, rng, resample_cap=None):
        if m <= 0:
            raise DomainError("learning-rate scale m must be positive")
        return cls(m=m, lhat=np.zeros(k), rng=rng, resample_cap=resample_cap)


# ---------------------------------------------------------------------------
# FTPL
# ---------------------------------------------------------------------------

def ftpl_select(state: PolicyState, dist) -> int:
    """Play argmin_i lhat_i - r_i / eta_t with fresh perturbations r ~ dist^K."""
    r = dist.sample_array(state.k, state.rng)
    return int(np.argmin(state.lhat - r / state.eta))


def geometric_resample(state: PolicyState, dist, chosen: int) -> int:
    """Redraw perturbation vectors until ``chosen`` wins again; return the count.

    The count includes the successful trial and is capped at M = state.cap().
    Conditionally on (t, lhat) the uncapped count is geometric with mean
    1/w_chosen.
    """
    cap = max(1, state.cap())
    lhat, eta, k = state.lhat, state.eta, state.k
    drawn = 0
    block = 16
    while drawn < cap:
        b = min(block, cap - drawn)
        r = dist.sample_array((b, k), state.rng)
        wins = np.argmin(lhat[None, :] - r / eta, axis=1) == chosen
        hit = int(np.argmax(wins)) if wins.any() else -1
        if hit >= 0:
            return drawn + hit + 1
        drawn += b
        block = min(block * 4, 4096)
    return cap


def ftpl_update(state: PolicyState, arm: int, loss: float, west: int) -> PolicyState:
    """Importance-weighted update lhat_arm += loss * west; advance the round."""
    if not 0.0 <= loss <= 1.0:
        raise DomainError("losses must lie in [0, 1]")
    state.lhat[arm] += loss * west
    state.t += 1
    return state


# ---------------------------------------------------------------------------
# FTRL
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Shannon:
    """Negative-entropy regularizer sum p log p (softmax weights)."""


@dataclass(frozen=True)
class Tsallis:
    """Regularizer -(1/(1-beta)) sum p_i^beta with tsallis_beta in (0, 1)."""

    tsallis_beta: float = 0.5

    def __post_init__(self):
        if not 0.0 < self.tsallis_beta < 1.0:
            raise DomainError("tsallis_beta must lie in (0, 1)")


def shannon_weights(q):
    """Softmax of -q in log-sum-exp form (q = eta * lhat)."""
    z = -np.asarray(q, dtype=float)
    z -= z.max()
    w = np.exp(z)
    return w / w.sum()


def tsallis_weights(q, beta, residual_tol=1e-10, max_expand=200):
    """Exact minimizer of <q, p> - (1/(1-beta)) sum p^beta on the simplex.

    Stationarity gives p_i = [((1-beta)/beta) (q_i - c)]^(-1/(1-beta)) for a
    scalar c < min q fixed by normalization; the normalization defect is
    strictly monotone in c, so a bracketed root-find cannot miss.  Returns
    (p, c).
    """
    q = np.asarray(q, dtype=float)
    k = len(q)
    ratio = (1.0 - beta) / beta
    expo = -1.0 / (1.0 - beta)

    def weights(c):
        return (ratio * (q - c)) ** expo

    def defect(c):
        return weights(c).sum() - 1.0

    q_min = float(q.min())
    hi = q_min - 1.0 / ratio          # the closest arm alone already has mass 1
    lo = q_min - 1.01 * k ** (1.0 - beta) / ratio  # total mass < 1 by construction
    expand = 0
    while defect(lo) >= 0.0:
        lo = q_min - 2.0 * (q_min - lo)
        expand += 1
        if expand > max_expand:
            raise SolverDiverged("bracket expansion exceeded budget")
    c = brentq(defect, lo, hi, xtol=1e-15, rtol=8.9e-16, maxiter=200)
    p = weights(c)
    if abs(p.sum() - 1.0) > residual_tol:
        raise SolverDiverged(f"normalization residual {abs(p.sum()-1.0):.2e}")
    return p / p.sum(), float(c)


def ftrl_select(state: PolicyState, regularizer):
    """Solve for the exact simplex weights, sample an arm, return (arm, p)."""
    q = state.eta * state.lhat
    if isinstance(regularizer, Shannon):
        p = shannon_weights(q)
    elif isinstance(regularizer, Tsallis):
        p, _ = tsallis_weights(q, regularizer.tsallis_beta)
    else:
        raise DomainError(f"unknown regularizer {regularizer!r}")
    u = state.rng.random()
    arm = int(np.searchsorted(np.cumsum(p), u, side="right"))
    arm = min(arm, state.k - 1)
    state.last_w = p
    return arm, p


def ftrl_update(state: PolicyState, arm: int, loss: float, p) -> PolicyState:
    """Exact importance-weighted update lhat_arm += loss / p_arm."""
    if not 0.0 <= loss <= 1.0:
        raise DomainError("losses must lie in [0, 1]")
    state.lhat[arm] += loss / p[arm]
    state.t += 1
    return state


def kkt_residual(q, p, beta):
    """max_i |q_i + V'(p_i) - c| for the Tsallis regularizer (c = median shift)."""
    q = np.asarray(q, dtype=float)
    grad = -(beta / (1.0 - beta)) * np.asarray(p, dtype=float) ** (beta - 1.0)
    stat = q + grad
    return float(np.max(np.abs(stat - np.median(stat))))


# ---------------------------------------------------------------------------
# uniform policy wrappers for the experiment harness
# ---------------------------------------------------------------------------

@dataclass
class FtplPolicy:
    dist: object
    m: float
    resample_cap: int | None = None

    def fresh_state(self, k, rng):
        return PolicyState.fresh(k, self.m, rng, self.resample_cap)

    def play(self, state):
        return ftpl_select(state, self.dist)

    def observe(self, state, arm, loss):
        west = geometric_resample(state, self.dist, arm)
        ftpl_update(state, arm, loss, west)

    def cap_description(self):
        if self.resample_cap is not None:
            return str(self.resample_cap)
        return "ceil(2*K*sqrt(t))"


@dataclass
class FtrlPolicy:
    regularizer: object
    m: float

    def fresh_state(self, k, rng):
        return PolicyState.fresh(k, self.m, rng)

    def play(self, state):
        arm, _ = ftrl_select(state, self.regularizer)
        return arm

    def observe(self, state, arm, loss):
        ftrl_update(state, arm, loss, state.last_w)

    def cap_description(self):
        return "exact-w"


def parse_policy(spec: str):
    """Parse a policy spec like ``ftpl:lp:m=0.23`` or ``ftrl:tsallis:beta=0.5:m=0.23``.

    Trailing ``key=value`` tokens are policy parameters (``m``, ``cap``,
    ``beta``); for FTPL everything between the head and those tokens is a
    distribution spec (which may itself contain colons).
    """
    from .distributions import parse_dist

    tokens = spec.strip().split(":")
    head = tokens[0].lower()
    params = {}
    body = tokens[1:]
    while body and "=" in body[-1]:
        key, _, val = body[-1].partition("=")
        if key.lower() not in {"m", "cap", "beta"}:
            break
        params[key.lower()] = val
        body = body[:-1]
    if "m" not in params:
        raise DomainError(f"policy spec {spec!r} must set m=<scale>")
    m = float(params["m"])

    if head == "ftpl":
        if not body:
            raise DomainError(f"ftpl spec {spec!r} needs a distribution")
        cap = int(params["cap"]) if "cap" in params else None
        dist_spec = ":".join(body)
        return FtplPolicy(dist=parse_dist(dist_spec), m=m, resample_cap=cap)
    if head == "ftrl":
        if not body:
            raise DomainError(f"ftrl spec {spec!r} needs a regularizer")
        reg_name = body[0].lower()
        if reg_name == "shannon":
            reg = Shannon()
        elif reg_name == "tsallis":
            reg = Tsallis(tsallis_beta=float(params.get("beta", 0.5)))
        else:
            raise DomainError(f"unknown regularizer {reg_name!r}")
        return FtrlPolicy(regularizer=reg, m=m)
    raise DomainError(f"unknown policy head {head!r}")
