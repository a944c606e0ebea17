"""Centralized sum-payoff maximization and the price of anarchy."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .efficiency import payoff, payoff_profiles_arr
from .errors import CapabilityError, ConfigurationError, NumericalError
from .game import GameConfig, run_dynamics

_CHUNK = 200_000  # max profiles evaluated per vectorized batch


@dataclass
class PoaReport:
    ne_profile: np.ndarray
    ne_sum_payoff: float
    opt_profile: np.ndarray
    opt_sum_payoff: float
    poa: float
    grid_per_dim: int


def sum_payoff(profile, cfg: GameConfig) -> float:
    return sum(payoff(profile, i, cfg) for i in range(cfg.n))


def _grid_argmax(cfg, axes):
    """Best profile over the Cartesian product of the per-user axes,
    evaluated in bounded-size batches.  Ties resolve to the profile that
    comes first lexicographically."""
    n = len(axes)
    best_val = -np.inf
    best_prof = None
    dims = [len(a) for a in axes]
    rows_per = max(1, _CHUNK // max(dims[-1], 1))
    outer = itertools.product(*[range(d) for d in dims[:-1]])
    buf = []
    for idx in outer:
        buf.append(idx)
        if len(buf) < rows_per:
            continue
        best_val, best_prof = _eval_chunk(cfg, axes, buf, best_val, best_prof)
        buf = []
    if buf:
        best_val, best_prof = _eval_chunk(cfg, axes, buf, best_val, best_prof)
    return best_prof, float(best_val)


def _eval_chunk(cfg, axes, outer_idx, best_val, best_prof):
    last = axes[-1]
    m = len(outer_idx) * last.size
    profiles = np.empty((m, len(axes)))
    for j, idx in enumerate(outer_idx):
        rows = slice(j * last.size, (j + 1) * last.size)
        for d, k in enumerate(idx):
            profiles[rows, d] = axes[d][k]
        profiles[rows, len(axes) - 1] = last
    vals = payoff_profiles_arr(profiles, cfg)
    k = int(np.argmax(vals))
    if vals[k] > best_val:
        return float(vals[k]), profiles[k].copy()
    return best_val, best_prof


def social_optimum(cfg: GameConfig, grid_per_dim: int = 200, refine_rounds: int = 3,
                   include=()) -> tuple[np.ndarray, float]:
    """Best sum payoff by exhaustive grid search plus local refinement.

    Each refinement round shrinks every axis to one tenth of its range,
    centered on the incumbent.  Profiles in ``include`` join the candidate
    set exactly (used to make PoA >= 1 exact, not approximate).
    Deterministic.  Exhaustive search is guarded to N <= 4; use
    coordinate_ascent_optimum for larger games.
    """
    n = cfg.n
    if n > 4:
        raise CapabilityError(
            f"exhaustive grid search over {n} users is out of reach; "
            "use coordinate_ascent_optimum (heuristic) instead")
    if grid_per_dim < 64:
        raise ConfigurationError(f"grid_per_dim must be >= 64, got {grid_per_dim}")
    best_prof, best_val = None, -np.inf
    for cand in include:
        v = sum_payoff(cand, cfg)
        if v > best_val:
            best_prof, best_val = np.asarray(cand, dtype=float).copy(), float(v)
    lo = np.zeros(n)
    hi = np.full(n, cfg.p_max)
    for _ in range(refine_rounds + 1):
        axes = [np.linspace(lo[d], hi[d], grid_per_dim) for d in range(n)]
        prof, val = _grid_argmax(cfg, axes)
        if val > best_val:
            best_prof, best_val = prof, val
        span = (hi - lo) / 10.0
        lo = np.clip(best_prof - span / 2.0, 0.0, cfg.p_max)
        hi = np.clip(best_prof + span / 2.0, 0.0, cfg.p_max)
    return best_prof, best_val


def coordinate_ascent_optimum(cfg: GameConfig, grid_per_dim: int = 200, sweeps: int = 200,
                              start=None) -> tuple[np.ndarray, float]:
    """Heuristic fallback for N > 4: cyclic one-axis grid improvement.

    Returns a local optimum of the sum payoff; unlike social_optimum it
    carries no global guarantee.
    """
    n = cfg.n
    p = np.full(n, cfg.p_max / 2.0) if start is None else np.asarray(start, dtype=float).copy()
    grid = np.linspace(0.0, cfg.p_max, grid_per_dim)
    val = sum_payoff(p, cfg)
    for _ in range(sweeps):
        improved = False
        for d in range(n):
            profiles = np.repeat(p[None, :], grid.size, axis=0)
            profiles[:, d] = grid
            vals = payoff_profiles_arr(profiles, cfg)
            k = int(np.argmax(vals))
            if vals[k] > val:
                p[d] = grid[k]
                val = float(vals[k])
                improved = True
        if not improved:
            break
    return p, val


def price_of_anarchy(cfg: GameConfig, grid_per_dim: int = 200, refine_rounds: int = 3,
                     initial=None) -> PoaReport:
    """Centralized optimum over equilibrium sum payoff, Nash profile included
    in the optimum's candidate set so the ratio is >= 1 exactly."""
    ne = run_dynamics(cfg, initial=initial)
    if not ne.converged:
        raise NumericalError(
            f"dynamics did not converge within {ne.rounds_used} sweeps",
            profile=ne.final_profile)
    ne_sum = float(np.sum(ne.payoffs))
    opt_prof, opt_sum = social_optimum(cfg, grid_per_dim, refine_rounds,
                                       include=[ne.final_profile])
    return PoaReport(
        ne_profile=ne.final_profile,
        ne_sum_payoff=ne_sum,
        opt_profile=opt_prof,
        opt_sum_payoff=opt_sum,
        poa=opt_sum / ne_sum,
        grid_per_dim=grid_per_dim,
    )
