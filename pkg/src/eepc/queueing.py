"""Closed forms for the finite-buffer Bernoulli queue.

Per slot, a packet arrives with probability q and the head-of-line packet
departs with probability f (the radio success probability).  The buffer
holds K packets; a packet is lost when it arrives to a full buffer on a
slot whose transmission also fails.  The stationary occupancy is geometric
in the load ratio omega = q(1-f) / ((1-q)f), which we treat as an extended
real: omega = +inf is a first-class value so that q = 1 (the always-full
regime) is exact rather than a limit hack.

Branch choices below avoid the two failure modes of the naive formulas:
omega**K overflows for omega > 1, and 1 - (1-f)*Pi loses all precision
when f is tiny.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .errors import ConfigurationError, DomainError

_INF = math.inf


@dataclass(frozen=True)
class QueueParams:
    """Buffer size K (packets)."""

    k: int

    def __post_init__(self):
        if not (isinstance(self.k, (int, np.integer)) and self.k >= 1):
            raise ConfigurationError(f"buffer size must be an integer >= 1, got {self.k!r}")
        object.__setattr__(self, "k", int(self.k))


class AarRate(NamedTuple):
    """An adaptive arrival rate, with a flag marking the q=1 clamp."""

    q: float
    clamped: bool


@dataclass(frozen=True)
class AarSpec:
    """Rate-control map for the adaptive protocol: q = g(loss) with
    g(phi) = kappa / sqrt(phi), so g^{-1}(q) = (kappa/q)^2.

    A custom ``g_inverse`` (decreasing and convex on (0, 1]) may be
    supplied instead; it is sanity-checked by finite differences at
    construction.
    """

    kappa: float = 0.1
    g_inverse: Callable[[float], float] | None = None

    def __post_init__(self):
        if not (0 < self.kappa <= 1):
            raise ConfigurationError(f"kappa must be in (0, 1], got {self.kappa}")
        if self.g_inverse is not None:
            qs = np.linspace(0.05, 1.0, 40)
            vals = np.array([self.g_inverse(q) for q in qs])
            d1 = np.diff(vals)
            d2 = np.diff(d1)
            if np.any(d1 > 1e-12):
                raise ConfigurationError("g_inverse must be decreasing on (0, 1]")
            if np.any(d2 < -1e-12):
                raise ConfigurationError("g_inverse must be convex on (0, 1]")

    def loss_of_rate(self, q: float) -> float:
        """g^{-1}(q): the packet loss that induces arrival rate q."""
        if self.g_inverse is not None:
            return float(self.g_inverse(q))
        return (self.kappa / q) ** 2

    def rate_of_loss(self, phi: float) -> float:
        """g(phi) for the default kappa/sqrt(phi) map."""
        if self.g_inverse is not None:
            raise ConfigurationError("rate_of_loss is only available for the kappa form")
        return self.kappa / math.sqrt(phi)


def load_ratio(q: float, f: float) -> float:
    """Queue load ratio omega = q(1-f) / ((1-q)f), as an extended real.

    Returns 0 when the queue drains surely (q=0 or f=1) and +inf when it
    fills surely (q=1 with f<1, or f=0 with q>0).  The doubly degenerate
    point q=1, f=0 has no meaningful value.
    """
    if not (0 <= q <= 1 and 0 <= f <= 1):
        raise ConfigurationError(f"q and f must lie in [0,1], got q={q}, f={f}")
    if q == 1.0 and f == 0.0:
        raise DomainError("load ratio is undefined at q=1, f=0")
    if q == 0.0 or f == 1.0:
        return 0.0
    if q == 1.0:
        return _INF
    den = (1.0 - q) * f
    if den == 0.0:
        # f is zero or denormal-underflowed; arrivals always outpace service
        return _INF
    return q * (1.0 - f) / den


def full_buffer_prob(omega: float, k: int) -> float:
    """Stationary probability Pi that the K-slot buffer is full:
    omega^K / (1 + omega + ... + omega^K), in overflow-safe branches."""
    if omega < 0:
        raise ConfigurationError(f"load ratio must be >= 0, got {omega}")
    if omega == 0.0:
        return 0.0
    if math.isinf(omega):
        return 1.0
    if omega == 1.0:
        return 1.0 / (k + 1)
    u = math.log(omega)
    if omega < 1.0:
        # omega^K * (1-omega) / (1 - omega^(K+1))
        return math.exp(k * u) * math.expm1(u) / math.expm1((k + 1) * u)
    # 1 / sum_{j=0..K} omega^(-j) = (1 - 1/omega) / (1 - omega^-(K+1))
    return math.expm1(-u) / math.expm1(-(k + 1) * u)


def not_full_prob(omega: float, k: int) -> float:
    """1 - Pi computed without cancellation (needed when Pi is within an
    ulp of 1)."""
    if omega < 0:
        raise ConfigurationError(f"load ratio must be >= 0, got {omega}")
    if omega == 0.0:
        return 1.0
    if math.isinf(omega):
        return 0.0
    if omega == 1.0:
        return k / (k + 1.0)
    if omega < 1.0:
        u = math.log(omega)
        # (1 - omega^K) / (1 - omega^(K+1))
        return math.expm1(k * u) / math.expm1((k + 1) * u)
    v = -math.log(omega)  # log of r = 1/omega
    return (1.0 / omega) * math.expm1(k * v) / math.expm1((k + 1) * v)


def packet_loss(q: float, f: float, k: int) -> float:
    """Overall loss probability Phi = (1-f) * Pi(omega(q,f), K).

    Well defined at f = 0 for q < 1 (everything is lost); the q=1, f=0
    corner propagates the load-ratio error.
    """
    return (1.0 - f) * full_buffer_prob(load_ratio(q, f), k)


def delivery_rate(q: float, f: float, k: int) -> float:
    """Net packets delivered per slot, q * (1 - Phi), computed as
    q * ((1 - Pi) + f * Pi) so it stays positive when f is tiny."""
    if q == 0.0:
        return 0.0
    if f == 0.0:
        return 0.0
    omega = load_ratio(q, f)
    return q * (not_full_prob(omega, k) + f * full_buffer_prob(omega, k))


def attempt_rate(q: float, f: float, k: int) -> float:
    """Transmission attempts per slot, q * (1 - Phi) / f.

    The ratio (1 - Pi)/f is evaluated in a cancellation-free form for
    omega > 1 so the f -> 0 limit (a saturated queue transmitting every
    slot) comes out as exactly 1 - no radio success means no idle slots.
    """
    if q == 0.0:
        return 0.0
    if f == 1.0:
        return q
    if f == 0.0:
        return 1.0
    omega = load_ratio(q, f)
    pi = full_buffer_prob(omega, k)
    if omega <= 1.0:
        # here f >= q(1-f)/(1-q) is bounded away from underflow
        return q * (not_full_prob(omega, k) / f + pi)
    # (1-Pi)/f = (1-q)/(q(1-f)) * (1 - r^K)/(1 - r^(K+1)),  r = 1/omega
    if math.isinf(omega):
        ratio = (1.0 - q) / (q * (1.0 - f))
    else:
        v = -math.log(omega)
        ratio = (1.0 - q) / (q * (1.0 - f)) * math.expm1(k * v) / math.expm1((k + 1) * v)
    return q * (ratio + pi)


def loss_large_k(q: float, f: float) -> float:
    """Infinite-buffer limit of the loss: 1 - f/q when arrivals outpace
    service (q > f), otherwise 0."""
    if not (0 <= q <= 1):
        raise ConfigurationError(f"q must lie in [0,1], got {q}")
    if not (0 < f <= 1):
        raise DomainError(f"f must lie in (0,1], got {f}")
    if q > f:
        return 1.0 - f / q
    return 0.0


def aar_rate_large_k(f: float, kappa: float) -> AarRate:
    """Infinite-buffer adaptive rate q = f * (1 + sqrt(1 + 4 (kappa/f)^2)) / 2,
    clamped to 1 (flagged) when the formula exceeds a probability."""
    if not (0 < f <= 1):
        raise DomainError(f"f must lie in (0,1], got {f}")
    if not (0 <= kappa <= 1):
        raise ConfigurationError(f"kappa must lie in [0,1], got {kappa}")
    q = f * (1.0 + math.sqrt(1.0 + 4.0 * (kappa / f) ** 2)) / 2.0
    if q > 1.0:
        return AarRate(1.0, True)
    return AarRate(q, False)


def aar_arrival_rate(f: float, k: int, spec: AarSpec, tol: float = 1e-10) -> AarRate:
    """Operating arrival rate of the adaptive protocol at a given success
    probability: the unique root of F(q) = Phi(q, f, K) - g^{-1}(q).

    F is strictly increasing, so plain bisection on [1e-9, 1] suffices.
    When F(1) < 0 the rate-control curve lies above every attainable loss
    and the rate is clamped to 1 (flagged).

    Args:
        f: radio success probability, in (0, 1].
        k: buffer size.
        spec: the rate-control map.
        tol: residual tolerance |Phi - g^{-1}(q)| at the returned point.
    """
    if not (0 < f <= 1):
        raise DomainError(f"AAR fixed point requires f in (0,1], got f={f}")
    if tol <= 0:
        raise ConfigurationError("tol must be > 0")

    def resid(q):
        return packet_loss(q, f, k) - spec.loss_of_rate(q)

    hi = 1.0
    if resid(hi) < 0.0:
        return AarRate(1.0, True)
    lo = 1e-9
    if resid(lo) >= 0.0:
        return AarRate(lo, False)
    # bisect down to a machine-tight bracket (F is strictly increasing)
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if resid(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    q = 0.5 * (lo + hi)
    if abs(resid(q)) >= tol:
        raise DomainError(f"AAR fixed point residual {resid(q):.3e} exceeds tol={tol}")
    return AarRate(q, False)


# ---------------------------------------------------------------------------
# Vectorized counterparts (used by the grid solvers; same branch logic).


def full_buffer_prob_arr(omega: np.ndarray, k: int) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    out = np.empty_like(omega)
    zero = omega == 0.0
    inf = np.isinf(omega)
    one = omega == 1.0
    lo = (omega < 1.0) & ~zero
    hi = (omega > 1.0) & ~inf
    out[zero] = 0.0
    out[inf] = 1.0
    out[one] = 1.0 / (k + 1)
    if np.any(lo):
        u = np.log(omega[lo])
        out[lo] = np.exp(k * u) * np.expm1(u) / np.expm1((k + 1) * u)
    if np.any(hi):
        u = np.log(omega[hi])
        out[hi] = np.expm1(-u) / np.expm1(-(k + 1) * u)
    return out


def not_full_prob_arr(omega: np.ndarray, k: int) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    out = np.empty_like(omega)
    zero = omega == 0.0
    inf = np.isinf(omega)
    one = omega == 1.0
    lo = (omega < 1.0) & ~zero
    hi = (omega > 1.0) & ~inf
    out[zero] = 1.0
    out[inf] = 0.0
    out[one] = k / (k + 1.0)
    if np.any(lo):
        u = np.log(omega[lo])
        out[lo] = np.expm1(k * u) / np.expm1((k + 1) * u)
    if np.any(hi):
        v = -np.log(omega[hi])
        out[hi] = (1.0 / omega[hi]) * np.expm1(k * v) / np.expm1((k + 1) * v)
    return out


def _load_ratio_arr(q, f: np.ndarray) -> np.ndarray:
    """Elementwise load ratio; q may be a scalar or an array matching f.
    Assumes 0 < q <= 1 has been validated; f entries may be 0 or 1."""
    q = np.asarray(q, dtype=float)
    f = np.asarray(f, dtype=float)
    q, f = np.broadcast_arrays(q, f)
    num = q * (1.0 - f)
    den = (1.0 - q) * f
    out = np.full(f.shape, _INF)
    ok = den > 0.0
    with np.errstate(over="ignore"):  # denormal den: the true ratio is ~inf
        out[ok] = num[ok] / den[ok]
    out[num == 0.0] = 0.0
    return out


def delivery_attempt_arr(q, f: np.ndarray, k: int):
    """Vectorized (delivery_rate, attempt_rate).  Entries with f == 0 get
    the saturated-queue limits (delivery 0, one attempt per slot)."""
    q = np.asarray(q, dtype=float)
    f = np.asarray(f, dtype=float)
    q, f = np.broadcast_arrays(q, f)
    omega = _load_ratio_arr(q, f)
    pi = full_buffer_prob_arr(omega, k)
    vac = not_full_prob_arr(omega, k)
    delivery = q * (vac + f * pi)
    delivery[f == 0.0] = 0.0

    attempts = np.empty_like(delivery)
    lo = (omega <= 1.0) & (f > 0.0)
    attempts[lo] = q[lo] * (vac[lo] / f[lo] + pi[lo])
    hi = (omega > 1.0) & (f > 0.0)
    if np.any(hi):
        qh, fh, oh = q[hi], f[hi], omega[hi]
        ratio = (1.0 - qh) / (qh * (1.0 - fh))
        finite = np.isfinite(oh)
        if np.any(finite):
            v = -np.log(oh[finite])
            ratio[finite] *= np.expm1(k * v) / np.expm1((k + 1) * v)
        attempts[hi] = qh * (ratio + pi[hi])
    attempts[f == 0.0] = 1.0
    attempts[q == 0.0] = 0.0
    return delivery, attempts


def packet_loss_arr(q, f: np.ndarray, k: int) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    f = np.asarray(f, dtype=float)
    q, f = np.broadcast_arrays(q, f)
    phi = (1.0 - f) * full_buffer_prob_arr(_load_ratio_arr(q, f), k)
    return np.where((f == 0.0) & (q > 0.0), 1.0, phi)


def aar_rate_arr(f: np.ndarray, k: int, spec: AarSpec, iters: int = 80):
    """Vectorized AAR fixed point by bisection; f entries must be > 0.

    Returns (q, clamped) arrays.
    """
    f = np.asarray(f, dtype=float)
    if np.any(f <= 0):
        raise DomainError("AAR fixed point requires f > 0 elementwise")

    def resid(qv):
        ginv = np.array([spec.loss_of_rate(x) for x in np.atleast_1d(qv)]).reshape(qv.shape) \
            if spec.g_inverse is not None else (spec.kappa / qv) ** 2
        return packet_loss_arr(qv, f, k) - ginv

    hi = np.ones_like(f)
    clamped = resid(hi) < 0.0
    lo = np.full_like(f, 1e-9)
    lo_arr, hi_arr = lo.copy(), hi.copy()
    for _ in range(iters):
        mid = 0.5 * (lo_arr + hi_arr)
        neg = resid(mid) < 0.0
        lo_arr = np.where(neg, mid, lo_arr)
        hi_arr = np.where(neg, hi_arr, mid)
    q = 0.5 * (lo_arr + hi_arr)
    return np.where(clamped, 1.0, q), clamped
