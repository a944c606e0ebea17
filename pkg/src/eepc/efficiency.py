"""Packet-success functions, protocols and the cross-layer efficiency metric.

The metric for user i is

    eta_i = R * q(1 - Phi) / (b + p_i * q(1 - Phi) / f)

i.e. net goodput over expected consumed power; q(1-Phi)/f is the expected
number of transmission attempts per slot.  Both the numerator and the
attempt rate come from the queueing module in cancellation-free form, so
eta stays strictly positive (and strictly quasi-concave) even deep in the
low-SINR tail where f underflows the naive expressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Union

import numpy as np

from .channel import as_profile, sinr
from .errors import ConfigurationError, DomainError
from .queueing import (
    AarSpec,
    aar_arrival_rate,
    aar_rate_arr,
    attempt_rate,
    delivery_attempt_arr,
    delivery_rate,
    packet_loss,
    packet_loss_arr,
)

if TYPE_CHECKING:
    from .game import GameConfig


class ExpThreshold:
    """Success probability f(gamma) = exp(-c / gamma), with f(0) = 0 by limit.

    c > 0 plays the role of a spectral-efficiency threshold; the inflection
    point is gamma_plus = c / 2.
    """

    def __init__(self, c: float = 1.0):
        if not (c > 0 and math.isfinite(c)):
            raise ConfigurationError(f"c must be positive and finite, got {c}")
        self.c = float(c)
        self.gamma_plus = self.c / 2.0
        _check_sigmoidal(self, self.gamma_plus)

    def __call__(self, gamma):
        if isinstance(gamma, np.ndarray):
            out = np.zeros_like(gamma, dtype=float)
            pos = gamma > 0
            out[pos] = np.exp(-self.c / gamma[pos])
            return out
        if gamma <= 0:
            return 0.0
        return math.exp(-self.c / gamma)

    def deriv(self, gamma: float) -> float:
        if gamma <= 0:
            return 0.0
        return self.c / gamma**2 * math.exp(-self.c / gamma)

    def __repr__(self):
        return f"ExpThreshold(c={self.c!r})"


class PacketLength:
    """Success probability f(gamma) = (1 - exp(-gamma))^M for M-symbol packets.

    Concave everywhere for M = 1 (gamma_plus = 0); for M >= 2 the
    inflection point is located by bisection on the second difference.
    """

    def __init__(self, m: int = 80):
        if not (isinstance(m, (int, np.integer)) and m >= 1):
            raise ConfigurationError(f"packet length M must be an integer >= 1, got {m!r}")
        self.m = int(m)
        self.gamma_plus = 0.0 if self.m == 1 else _bisect_inflection(self)
        _check_sigmoidal(self, self.gamma_plus)

    def __call__(self, gamma):
        if isinstance(gamma, np.ndarray):
            out = np.zeros_like(gamma, dtype=float)
            pos = gamma > 0
            out[pos] = (-np.expm1(-gamma[pos])) ** self.m
            return out
        if gamma <= 0:
            return 0.0
        return (-math.expm1(-gamma)) ** self.m

    def deriv(self, gamma: float) -> float:
        if gamma <= 0:
            return 0.0 if self.m > 1 else 1.0
        return self.m * (-math.expm1(-gamma)) ** (self.m - 1) * math.exp(-gamma)

    def __repr__(self):
        return f"PacketLength(m={self.m!r})"


EfficiencyFunction = Union[ExpThreshold, PacketLength]


def _second_difference(fn, gamma, h):
    return fn(gamma + h) - 2.0 * fn(gamma) + fn(gamma - h)


def _bisect_inflection(fn, lo=1e-6, hi=1.0):
    """Root of the second difference: convex below, concave above."""
    h = 1e-5
    while _second_difference(fn, hi, h * hi) > 0:
        hi *= 2.0
        if hi > 1e9:
            raise ConfigurationError("no concave region found; not sigmoidal")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if _second_difference(fn, mid, h * mid) > 0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * hi:
            break
    return 0.5 * (lo + hi)


def _check_sigmoidal(fn, gamma_plus):
    """Construction-time scan: increasing, f(0)=0, convex-then-concave."""
    if fn(0.0) != 0.0:
        raise ConfigurationError("efficiency function must satisfy f(0) = 0")
    scale = max(gamma_plus, 1.0)
    grid = np.concatenate([np.linspace(scale * 1e-3, scale * 0.9, 25),
                           np.linspace(scale * 1.1, scale * 40, 25)])
    vals = fn(grid)
    if np.any(np.diff(vals) < 0):
        raise ConfigurationError("efficiency function must be increasing")
    if fn(scale * 1e6) < 0.99:
        raise ConfigurationError("efficiency function must approach 1")
    for g in grid:
        d2 = _second_difference(fn, g, 1e-4 * g)
        if g < 0.98 * gamma_plus and d2 < -1e-12:
            raise ConfigurationError(f"expected convexity below the inflection point at gamma={g}")
        if g > 1.02 * gamma_plus and d2 > 1e-12:
            raise ConfigurationError(f"expected concavity above the inflection point at gamma={g}")


@dataclass(frozen=True)
class EnergyModel:
    """Affine power model P_total = p + b, plus the gross rate and power cap."""

    b: float = 1000.0       # fixed consumption, mW
    rate: float = 1.0       # gross data rate R, bit/s
    p_max: float = 1000.0   # radiated power cap, mW

    def __post_init__(self):
        if self.b < 0 or not math.isfinite(self.b):
            raise ConfigurationError(f"b must be >= 0, got {self.b}")
        if not (self.rate > 0):
            raise ConfigurationError(f"rate must be > 0, got {self.rate}")
        if not (self.p_max > 0):
            raise ConfigurationError(f"p_max must be > 0, got {self.p_max}")


@dataclass(frozen=True)
class CarProtocol:
    """Constant arrival rate q, with QoS loss bound epsilon."""

    q: float
    epsilon: float = 1.0

    def __post_init__(self):
        if not (0 < self.q <= 1):
            raise ConfigurationError(f"CAR requires q in (0, 1], got q={self.q}")
        if not (0 < self.epsilon <= 1):
            raise ConfigurationError(f"epsilon must be in (0, 1], got {self.epsilon}")


@dataclass(frozen=True)
class AarProtocol:
    """Adaptive arrival rate driven by the rate-control map in ``spec``."""

    spec: AarSpec = AarSpec()


ProtocolConfig = Union[CarProtocol, AarProtocol]


def arrival_rate(protocol: ProtocolConfig, f_val: float, k: int) -> float:
    """Operating packet arrival rate at success probability ``f_val``."""
    if isinstance(protocol, CarProtocol):
        return protocol.q
    return aar_arrival_rate(f_val, k, protocol.spec).q


def ee_from_sinr(p_i: float, gamma: float, cfg: "GameConfig") -> float:
    """Energy efficiency of one user given its own power and SINR."""
    b = cfg.energy.b
    if p_i == 0.0:
        if b == 0.0:
            raise DomainError("energy efficiency is undefined at p_i=0 with b=0")
        return 0.0
    f = cfg.efficiency(gamma)
    if f == 0.0:
        return 0.0  # goodput vanishes faster than the attempt cost
    k = cfg.queue.k
    q = arrival_rate(cfg.protocol, f, k)
    delivered = delivery_rate(q, f, k)
    return cfg.energy.rate * delivered / (b + p_i * attempt_rate(q, f, k))


def energy_efficiency(profile, i: int, cfg: "GameConfig") -> float:
    """Cross-layer energy efficiency of user i (bit/s per mW)."""
    p = as_profile(profile, cfg.channel.n)
    return ee_from_sinr(p[i], sinr(p, cfg.channel, i), cfg)


def payoff_from_sinr(p_i: float, gamma: float, cfg: "GameConfig") -> float:
    """Game payoff: eta, except under CAR when the loss bound is violated,
    where it drops to the robustness term theta = R q (1-Phi) / (b + P_max)."""
    prot = cfg.protocol
    if isinstance(prot, AarProtocol):
        return ee_from_sinr(p_i, gamma, cfg)
    if p_i == 0.0:
        return 0.0  # both branches vanish in the zero-power limit
    f = cfg.efficiency(gamma)
    k = cfg.queue.k
    phi = packet_loss(prot.q, f, k) if f > 0.0 else 1.0
    if phi <= prot.epsilon:
        return ee_from_sinr(p_i, gamma, cfg)
    delivered = delivery_rate(prot.q, f, k) if f > 0.0 else 0.0
    return cfg.energy.rate * delivered / (cfg.energy.b + cfg.energy.p_max)


def payoff(profile, i: int, cfg: "GameConfig") -> float:
    """Payoff of user i at the given power profile."""
    p = as_profile(profile, cfg.channel.n)
    return payoff_from_sinr(p[i], sinr(p, cfg.channel, i), cfg)


def expected_total_power(profile, i: int, cfg: "GameConfig") -> float:
    """Average consumed power b + p_i q(1-Phi)/f of user i, in mW."""
    p = as_profile(profile, cfg.channel.n)
    if p[i] == 0.0:
        return cfg.energy.b
    f = cfg.efficiency(sinr(p, cfg.channel, i))
    if f == 0.0:
        return cfg.energy.b + p[i]  # saturated queue: one attempt every slot
    q = arrival_rate(cfg.protocol, f, cfg.queue.k)
    return cfg.energy.b + p[i] * attempt_rate(q, f, cfg.queue.k)


# ---------------------------------------------------------------------------
# Vectorized evaluation over power/SINR grids (the solvers' hot path).


def ee_and_payoff_arr(p, gamma, cfg: "GameConfig"):
    """(eta, payoff) arrays for elementwise (power, SINR) pairs.

    Zero power and underflowed f get their limit value 0 in both outputs;
    the scalar entry points own the error semantics.
    """
    p = np.asarray(p, dtype=float)
    gamma = np.asarray(gamma, dtype=float)
    f = cfg.efficiency(gamma)
    k = cfg.queue.k
    b = cfg.energy.b
    rate = cfg.energy.rate
    eta = np.zeros_like(p)
    live = (p > 0.0) & (f > 0.0)
    fl = f[live]
    prot = cfg.protocol
    if isinstance(prot, CarProtocol):
        q = prot.q
    else:
        q, _ = aar_rate_arr(fl, k, prot.spec)
    delivered, attempts = delivery_attempt_arr(q, fl, k)
    eta[live] = rate * delivered / (b + p[live] * attempts)
    if isinstance(prot, AarProtocol):
        return eta, eta.copy()
    if prot.epsilon >= 1.0:
        return eta, eta.copy()
    u = eta.copy()
    phi = packet_loss_arr(q, fl, k)
    bad = phi > prot.epsilon
    theta = rate * delivered / (b + cfg.energy.p_max)
    ul = u[live]
    ul[bad] = theta[bad]
    u[live] = ul
    # dead gridpoints with p>0 have phi=1: theta=0 there already
    return eta, u


def payoff_profiles_arr(profiles, cfg: "GameConfig") -> np.ndarray:
    """Sum payoff for a batch of power profiles, shape (M, N) -> (M,)."""
    pr = np.asarray(profiles, dtype=float)
    if pr.ndim != 2 or pr.shape[1] != cfg.channel.n:
        raise ConfigurationError(f"profiles must have shape (M, {cfg.channel.n})")
    gains = cfg.channel.gains
    received = pr @ gains
    total = np.zeros(pr.shape[0])
    for i in range(cfg.channel.n):
        direct = pr[:, i] * gains[i, i]
        gam = np.zeros(pr.shape[0])
        pos = direct > 0
        gam[pos] = direct[pos] / (cfg.channel.noise_variance + received[pos, i] - direct[pos])
        _, u = ee_and_payoff_arr(pr[:, i], gam, cfg)
        total += u
    return total
