"""Best-response dynamics to the unique Nash equilibrium.

Each user maximizes its own efficiency metric in its own power, given one
SINR feedback: the update works through the constant slope
Gamma_i = gamma_i / p_i, so only gamma at the current power is needed.
The 1-D maximization is a coarse grid pass (the metric is ~0 and flat near
zero power, which defeats plain ternary search) followed by golden-section
refinement inside the bracketing cell; quasi-concavity of the metric makes
the bracket valid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np

from .channel import ChannelMatrix, as_profile, sinr_slope
from .efficiency import (
    CarProtocol,
    EfficiencyFunction,
    EnergyModel,
    ProtocolConfig,
    ee_and_payoff_arr,
    ee_from_sinr,
    payoff,
    payoff_from_sinr,
)
from .errors import (
    BoundaryPointError,
    ConfigurationError,
    DomainError,
    NumericalError,
    ProtocolMismatchError,
)
from .queueing import QueueParams, delivery_rate, packet_loss

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class SolverParams:
    """Tolerances of the best-response machinery.

    ``delta`` is the sweep-to-sweep convergence tolerance in mW; when left
    unset it resolves to 1e-4 * P_max.  ``br_refine_tol`` is relative to
    P_max and bounds the golden-section bracket.
    """

    delta: float | None = None
    max_rounds: int = 10_000
    br_grid: int = 512
    br_refine_tol: float = 1e-9

    def __post_init__(self):
        if self.delta is not None and not (self.delta > 0):
            raise ConfigurationError(f"delta must be > 0, got {self.delta}")
        if self.max_rounds < 1:
            raise ConfigurationError(f"max_rounds must be >= 1, got {self.max_rounds}")
        if self.br_grid < 64:
            raise ConfigurationError(f"br_grid must be >= 64, got {self.br_grid}")
        if not (0 < self.br_refine_tol < 1):
            raise ConfigurationError(f"br_refine_tol must be in (0,1), got {self.br_refine_tol}")


@dataclass(frozen=True)
class GameConfig:
    """One full game instance; immutable, safe to share across workers."""

    channel: ChannelMatrix
    energy: EnergyModel
    efficiency: EfficiencyFunction
    protocol: ProtocolConfig
    queue: QueueParams
    solver: SolverParams = field(default_factory=SolverParams)

    def __post_init__(self):
        if self.solver.delta is None:
            object.__setattr__(self, "solver", replace(self.solver, delta=1e-4 * self.energy.p_max))

    @property
    def n(self) -> int:
        return self.channel.n

    @property
    def p_max(self) -> float:
        return self.energy.p_max


@dataclass
class NEResult:
    """Outcome of one best-response-dynamics run."""

    final_profile: np.ndarray
    payoffs: np.ndarray
    rounds_used: int
    converged: bool
    trajectory: np.ndarray          # (rounds_used + 1, n), row 0 = start
    qos_infeasible: np.ndarray      # per-user flag; all False under AAR


class NashCheck(NamedTuple):
    is_nash: bool
    worst_user: int
    worst_power: float
    worst_gain: float               # best relative unilateral improvement found


class QosPower(NamedTuple):
    power: float
    feasible: bool


def _loss_at(p, slope, cfg) -> float:
    """CAR packet loss as a function of own power; 1 at the f=0 limit."""
    f = cfg.efficiency(p * slope)
    if f == 0.0:
        return 1.0
    return packet_loss(cfg.protocol.q, f, cfg.queue.k)


def _qos_min_power_slope(slope: float, cfg: GameConfig) -> QosPower:
    """Smallest power with loss <= epsilon; loss is decreasing in power."""
    eps = cfg.protocol.epsilon
    p_max = cfg.p_max
    if _loss_at(p_max, slope, cfg) > eps:
        return QosPower(p_max, False)
    if _loss_at(0.0, slope, cfg) <= eps:
        return QosPower(0.0, True)
    lo, hi = 0.0, p_max
    while hi - lo > 1e-10 * p_max:
        mid = 0.5 * (lo + hi)
        if _loss_at(mid, slope, cfg) <= eps:
            hi = mid
        else:
            lo = mid
    return QosPower(hi, True)


def qos_min_power(i: int, others, cfg: GameConfig) -> QosPower:
    """Minimum power for user i to meet the CAR loss bound, given the
    reduced profile of the other users.  (P_max, infeasible) if even full
    power cannot meet it."""
    if not isinstance(cfg.protocol, CarProtocol):
        raise ProtocolMismatchError("the QoS power floor applies to the CAR protocol only")
    return _qos_min_power_slope(sinr_slope(others, cfg.channel, i), cfg)


def _maximize_ee_slope(slope: float, cfg: GameConfig) -> float:
    """Unconstrained argmax of eta(p) over [0, P_max] for a fixed SINR slope."""
    p_max = cfg.p_max
    grid = np.linspace(0.0, p_max, cfg.solver.br_grid)
    eta, _ = ee_and_payoff_arr(grid, grid * slope, cfg)
    k = int(np.argmax(eta))
    if eta[k] == 0.0:
        return 0.0  # metric underflows on the whole range: stay silent
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, grid.size - 1)]
    tol = cfg.solver.br_refine_tol * p_max

    def val(p):
        return ee_from_sinr(p, p * slope, cfg)

    x1 = b - _INV_PHI * (b - a)
    x2 = a + _INV_PHI * (b - a)
    f1, f2 = val(x1), val(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _INV_PHI * (b - a)
            f2 = val(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _INV_PHI * (b - a)
            f1 = val(x1)
    return 0.5 * (a + b)


def best_response(i: int, others, cfg: GameConfig) -> float:
    """Payoff-maximizing power of user i against the reduced profile
    ``others``: the efficiency argmax, floored at the QoS power under CAR
    and capped at P_max."""
    slope = sinr_slope(others, cfg.channel, i)
    p_star = _maximize_ee_slope(slope, cfg)
    if isinstance(cfg.protocol, CarProtocol) and cfg.protocol.epsilon < 1.0:
        p_plus = _qos_min_power_slope(slope, cfg).power
        p_star = max(p_star, p_plus)
    return min(p_star, cfg.p_max)


def run_dynamics(cfg: GameConfig, initial=None, order: Sequence[int] | None = None) -> NEResult:
    """Sequential best-response dynamics (one updater at a time).

    Users update in ``order`` (default 0..N-1) within each sweep, each one
    responding to the most recent profile.  Stops when the largest power
    change over a sweep drops below the solver tolerance delta.
    """
    n = cfg.n
    if initial is None:
        p = np.full(n, cfg.p_max)
    else:
        p = as_profile(initial, n).copy()
        if np.any(p > cfg.p_max):
            raise ConfigurationError("initial profile exceeds P_max")
    if order is None:
        order = range(n)
    else:
        if sorted(order) != list(range(n)):
            raise ConfigurationError(f"order must be a permutation of 0..{n - 1}")
    delta = cfg.solver.delta
    trajectory = [p.copy()]
    converged = False
    rounds = 0
    for rounds in range(1, cfg.solver.max_rounds + 1):
        prev = p.copy()
        for i in order:
            p[i] = best_response(i, np.delete(p, i), cfg)
        if not np.all(np.isfinite(p)):
            raise NumericalError("best response produced a non-finite power", profile=p.copy())
        trajectory.append(p.copy())
        if float(np.max(np.abs(p - prev))) < delta:
            converged = True
            break
    payoffs = np.array([payoff(p, i, cfg) for i in range(n)])
    if not np.all(np.isfinite(payoffs)):
        raise NumericalError("non-finite payoff at the converged profile", profile=p.copy())
    if isinstance(cfg.protocol, CarProtocol):
        infeasible = np.array(
            [not qos_min_power(i, np.delete(p, i), cfg).feasible for i in range(n)]
        )
    else:
        infeasible = np.zeros(n, dtype=bool)
    return NEResult(
        final_profile=p,
        payoffs=payoffs,
        rounds_used=rounds,
        converged=converged,
        trajectory=np.array(trajectory),
        qos_infeasible=infeasible,
    )


def verify_nash(profile, cfg: GameConfig, dev_grid: int = 4096, slack: float = 1e-4) -> NashCheck:
    """Grid check of the equilibrium inequalities: no unilateral deviation
    on a dev_grid-point power scan may improve any user's payoff by more
    than ``slack`` (relative)."""
    if dev_grid < 1000:
        raise ConfigurationError(f"dev_grid must be >= 1000, got {dev_grid}")
    p = as_profile(profile, cfg.n)
    worst = NashCheck(True, -1, math.nan, 0.0)
    grid = np.linspace(0.0, cfg.p_max, dev_grid)
    for i in range(cfg.n):
        slope = sinr_slope(np.delete(p, i), cfg.channel, i)
        _, u = ee_and_payoff_arr(grid, grid * slope, cfg)
        u_cur = payoff_from_sinr(p[i], p[i] * slope, cfg)
        k = int(np.argmax(u))
        if u_cur > 0.0:
            gain = (u[k] - u_cur) / u_cur
        else:
            gain = math.inf if u[k] > 0.0 else 0.0
        if gain > worst.worst_gain:
            worst = NashCheck(True, i, float(grid[k]), float(gain))
    return NashCheck(worst.worst_gain <= slack, worst.worst_user, worst.worst_power, worst.worst_gain)


def foc_residual(profile, i: int, cfg: GameConfig) -> float:
    """Normalized first-order condition at an interior power point.

    Writing 1/eta = A + B with A = p/(R f) and B = b/(R q (1-Phi)), the
    residual is -(A_hat + C * B_hat), where A_hat = (f - f' gamma)/f^2,
    C = R g_ii / (sigma^2 + interference), and B_hat = dB/dgamma by central
    difference.  It vanishes at the unconstrained best response, is
    positive where the payoff increases and negative where it decreases.
    """
    if not isinstance(cfg.protocol, CarProtocol):
        raise ProtocolMismatchError("the closed-form FOC is stated for the CAR protocol")
    p = as_profile(profile, cfg.n)
    if not 0.0 < p[i] < cfg.p_max:
        raise BoundaryPointError(f"p_i={p[i]} is on the boundary; the interior FOC does not apply")
    slope = sinr_slope(np.delete(p, i), cfg.channel, i)
    gamma = p[i] * slope
    f = cfg.efficiency(gamma)
    if f == 0.0:
        raise DomainError("SINR too small: success probability underflows, FOC is meaningless")
    fp = cfg.efficiency.deriv(gamma)
    a_hat = (f - fp * gamma) / f**2
    c = cfg.energy.rate * slope
    q, k, b, rate = cfg.protocol.q, cfg.queue.k, cfg.energy.b, cfg.energy.rate

    def big_b(g):
        return b / (rate * delivery_rate(q, cfg.efficiency(g), k))

    h = 1e-6 * gamma
    b_hat = (big_b(gamma + h) - big_b(gamma - h)) / (2.0 * h)
    return -(a_hat + c * b_hat)
