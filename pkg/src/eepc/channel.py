"""Interference-channel gains, SINR computation and block-fading sampling.

Conventions: a power profile is a plain 1-D float array of radiated powers
in mW, one entry per transmitter.  In the gain matrix, row j / column i is
the (dimensionless) power gain of the link from transmitter j to receiver
i, so the direct gains sit on the diagonal.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError


@dataclass(frozen=True)
class ChannelMatrix:
    """N x N link power gains plus the receiver noise variance (mW)."""

    gains: np.ndarray
    noise_variance: float

    def __post_init__(self):
        g = np.array(self.gains, dtype=float)
        if g.ndim != 2 or g.shape[0] != g.shape[1] or g.shape[0] < 1:
            raise ConfigurationError(f"gains must be a square matrix, got shape {g.shape}")
        if np.any(g < 0) or not np.all(np.isfinite(g)):
            raise ConfigurationError("all link gains must be finite and >= 0")
        if np.any(np.diag(g) <= 0):
            raise ConfigurationError("all direct gains g_ii must be > 0")
        if not (self.noise_variance > 0):
            raise ConfigurationError(f"noise variance must be > 0, got {self.noise_variance}")
        g.flags.writeable = False
        object.__setattr__(self, "gains", g)
        object.__setattr__(self, "noise_variance", float(self.noise_variance))

    @property
    def n(self) -> int:
        return self.gains.shape[0]


def as_profile(powers, n=None) -> np.ndarray:
    """Validate and return a power profile as a 1-D float array."""
    p = np.asarray(powers, dtype=float)
    if p.ndim != 1:
        raise ConfigurationError(f"power profile must be 1-D, got shape {p.shape}")
    if n is not None and p.shape[0] != n:
        raise ConfigurationError(f"power profile has {p.shape[0]} entries, channel has {n} users")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ConfigurationError("powers must be finite and >= 0")
    return p


def interference(others, channel: ChannelMatrix, i: int) -> float:
    """Noise-plus-interference at receiver i: sigma^2 + sum_{j != i} p_j g_ji.

    ``others`` is the reduced profile p_{-i} (length N-1, original user
    order with entry i removed).
    """
    n = channel.n
    p = np.asarray(others, dtype=float)
    if p.shape != (n - 1,):
        raise ConfigurationError(f"reduced profile must have length {n - 1}, got {p.shape}")
    cross = np.delete(channel.gains[:, i], i)
    return channel.noise_variance + float(p @ cross)


def sinr_slope(others, channel: ChannelMatrix, i: int) -> float:
    """Slope of user i's SINR in its own power: g_ii / (sigma^2 + interference).

    This is the quantity a transmitter can infer from one SINR feedback
    (gamma_i = p_i * slope); it is constant in p_i.
    """
    return channel.gains[i, i] / interference(others, channel, i)


def sinr(profile, channel: ChannelMatrix, i: int) -> float:
    """SINR of user i under the given power profile."""
    p = as_profile(profile, channel.n)
    if not 0 <= i < channel.n:
        raise ConfigurationError(f"user index {i} out of range for n={channel.n}")
    if p[i] == 0.0:
        return 0.0
    return p[i] * sinr_slope(np.delete(p, i), channel, i)


def sinr_all(profile, channel: ChannelMatrix) -> np.ndarray:
    """SINR of every user; same as [sinr(p, ch, i) for i in range(n)]."""
    p = as_profile(profile, channel.n)
    received = p @ channel.gains          # total received power per receiver
    direct = p * np.diag(channel.gains)
    return direct / (channel.noise_variance + received - direct)


def symmetric_gains(n: int, direct: float, cross: float) -> np.ndarray:
    """Gain matrix with a common direct gain and a common cross gain."""
    g = np.full((n, n), float(cross))
    np.fill_diagonal(g, float(direct))
    return g


def sample_rayleigh_channel(mean_gains, noise_variance, seed) -> ChannelMatrix:
    """Draw one block-fading realization of the channel.

    Rayleigh-faded amplitudes give exponentially distributed power gains;
    each entry is drawn independently with the requested mean.  A mean of
    zero yields a gain of exactly zero.  The same seed always yields the
    same matrix.
    """
    m = np.asarray(mean_gains, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ConfigurationError(f"mean_gains must be square, got shape {m.shape}")
    if np.any(m < 0):
        raise ConfigurationError("mean gains must be >= 0")
    if np.any(np.diag(m) <= 0):
        raise ConfigurationError("diagonal mean gains must be > 0")
    rng = np.random.default_rng(seed)
    draws = rng.exponential(scale=np.where(m > 0, m, 1.0))
    gains = np.where(m > 0, draws, 0.0)
    # an exponential draw of exactly 0 would violate the g_ii > 0 invariant
    tiny = np.finfo(float).tiny
    np.fill_diagonal(gains, np.maximum(np.diag(gains), tiny))
    return ChannelMatrix(gains=gains, noise_variance=noise_variance)
