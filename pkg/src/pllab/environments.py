"""Loss generators and regret accounting for stochastic and adversarial runs."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ScheduleExhausted

__all__ = [
    "StochasticBernoulli",
    "FixedSchedule",
    "SwitchingAdversary",
    "next_loss",
    "checkpoint_grid",
    "regret",
    "parse_environment",
]


@dataclass(frozen=True)
class StochasticBernoulli:
    """I.i.d. Bernoulli losses with mean vector mu in [0,1]^K."""

    mu: tuple

    def __post_init__(self):
        mu = np.asarray(self.mu, dtype=float)
        if mu.ndim != 1 or len(mu) < 1 or np.any(mu < 0.0) or np.any(mu > 1.0):
            raise DomainError("mu must be a vector in [0,1]^K")
        object.__setattr__(self, "mu", tuple(float(v) for v in mu))

    @property
    def k(self):
        return len(self.mu)

    @property
    def i_star(self):
        return int(np.argmin(self.mu))

    @property
    def gaps(self):
        mu = np.asarray(self.mu)
        return mu - mu.min()

    @property
    def min_gap(self):
        g = np.sort(self.gaps)
        return float(g[1]) if len(g) > 1 else 0.0

    @property
    def stochastic(self):
        return True


@dataclass(frozen=True)
class FixedSchedule:
    """Deterministic loss matrix of shape (T, K); querying beyond T raises."""

    losses: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.losses, dtype=float)
        if arr.ndim != 2 or np.any(arr < 0.0) or np.any(arr > 1.0):
            raise DomainError("schedule must be a (T, K) matrix with entries in [0,1]")
        object.__setattr__(self, "losses", arr)

    @property
    def k(self):
        return self.losses.shape[1]

    @property
    def horizon(self):
        return self.losses.shape[0]

    @property
    def stochastic(self):
        return False


@dataclass(frozen=True)
class SwitchingAdversary:
    """Bernoulli losses whose mean alternates between mu1 and mu2 per phase."""

    phase: int
    mu1: tuple
    mu2: tuple

    def __post_init__(self):
        if self.phase < 1:
            raise DomainError("phase length must be >= 1")
        for name in ("mu1", "mu2"):
            v = np.asarray(getattr(self, name), dtype=float)
            if np.any(v < 0.0) or np.any(v > 1.0):
                raise DomainError(f"{name} must lie in [0,1]^K")
            object.__setattr__(self, name, tuple(float(x) for x in v))
        if len(self.mu1) != len(self.mu2):
            raise DomainError("mu1 and mu2 must have the same length")

    @property
    def k(self):
        return len(self.mu1)

    def mean_at(self, t):
        return self.mu1 if ((t - 1) // self.phase) % 2 == 0 else self.mu2

    @property
    def stochastic(self):
        return False


def next_loss(model, t, rng):
    """Loss vector for round t >= 1."""
    if t < 1:
        raise DomainError("rounds are 1-based")
    if isinstance(model, StochasticBernoulli):
        return (rng.random(model.k) < np.asarray(model.mu)).astype(float)
    if isinstance(model, FixedSchedule):
        if t > model.horizon:
            raise ScheduleExhausted(f"schedule has {model.horizon} rounds, asked for {t}")
        return model.losses[t - 1].copy()
    if isinstance(model, SwitchingAdversary):
        return (rng.random(model.k) < np.asarray(model.mean_at(t))).astype(float)
    raise DomainError(f"unknown loss model {model!r}")


def checkpoint_grid(horizon, ratio=1.25):
    """Geometric round grid {ceil(ratio^k)} clipped to the horizon."""
    pts = []
    v = 1.0
    while True:
        t = int(math.ceil(v))
        if t >= horizon:
            break
        if not pts or t > pts[-1]:
            pts.append(t)
        v *= ratio
    pts.append(int(horizon))
    return np.asarray(pts, dtype=int)


def regret(arms, losses, model, checkpoints=None):
    """Regret curve from a played trace.

    ``arms`` is the played-arm index per round and ``losses`` the full (T, K)
    loss matrix of the trace.  Stochastic models score pseudo-regret (sum of
    suboptimality gaps of the played arms); other models score realized
    regret against the best fixed arm in hindsight.  Returns
    (checkpoints, curve, final).
    """
    arms = np.asarray(arms, dtype=int)
    losses = np.asarray(losses, dtype=float)
    T = len(arms)
    if losses.shape[0] != T:
        raise DomainError("trace length mismatch")
    if checkpoints is None:
        checkpoints = checkpoint_grid(T)
    checkpoints = np.asarray(checkpoints, dtype=int)

    if getattr(model, "stochastic", False):
        cum = np.cumsum(model.gaps[arms])
    else:
        played = np.cumsum(losses[np.arange(T), arms])
        per_arm = np.cumsum(losses, axis=0)
        cum = played - per_arm.min(axis=1)
    curve = cum[checkpoints - 1]
    return checkpoints, curve, float(cum[-1])


def parse_environment(spec: str):
    """Parse an environment spec.

    ``bern:0.1,0.3,0.3``  Bernoulli with the given means
    ``sched:file.csv``    fixed schedule loaded from a CSV loss matrix
    ``switch:phase=1000,mu1=0.1|0.9,mu2=0.9|0.1``  alternating Bernoulli
    """
    s = spec.strip()
    head, _, rest = s.partition(":")
    head = head.lower()
    if head == "bern":
        mu = tuple(float(v) for v in rest.split(","))
        return StochasticBernoulli(mu=mu)
    if head == "sched":
        mat = np.loadtxt(rest, delimiter=",", ndmin=2)
        return FixedSchedule(losses=mat)
    if head == "switch":
        fields = dict(item.split("=", 1) for item in rest.split(","))
        return SwitchingAdversary(
            phase=int(fields["phase"]),
            mu1=tuple(float(v) for v in fields["mu1"].split("|")),
            mu2=tuple(float(v) for v in fields["mu2"].split("|")),
        )
    raise DomainError(f"unknown environment spec {spec!r}")
