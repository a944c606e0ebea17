"""Batch experiment drivers: efficiency curves, arrival-rate sweeps, price
of anarchy, buffer sweeps and energy-saving comparisons.

All drivers are deterministic: a fading trial t of an experiment seeded
with s uses the sub-seed SeedSequence(s, spawn_key=(t,)), so trials are
order-independent, parallelizable, and each one can be re-run alone.
Outputs are ResultTables whose CSV form is byte-stable for a fixed config
and seed; non-convergent trials are counted in the metadata block, never
silently dropped.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, is_dataclass, replace
from functools import partial

import numpy as np

from .channel import ChannelMatrix, sample_rayleigh_channel, sinr, symmetric_gains
from .efficiency import (
    AarProtocol,
    CarProtocol,
    energy_efficiency,
    expected_total_power,
    payoff,
)
from .errors import ConfigurationError, NumericalError
from .game import GameConfig, NEResult, best_response, run_dynamics
from .queueing import AarSpec, QueueParams, packet_loss
from .social import price_of_anarchy

SWEEPABLE = ("q", "b", "K", "N", "epsilon", "kappa", "cross_gain")


@dataclass(frozen=True)
class SweepSpec:
    """One experiment: sweep ``param`` over ``values`` on top of ``base``.

    trials > 1 turns on block fading: the base channel's gains are then
    read as mean power gains and resampled per trial.
    """

    param: str
    values: tuple
    base: GameConfig
    trials: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.param not in SWEEPABLE:
            raise ConfigurationError(f"unknown sweep parameter {self.param!r}; choose from {SWEEPABLE}")
        if len(self.values) == 0:
            raise ConfigurationError("sweep value list must be non-empty")
        if self.trials < 1:
            raise ConfigurationError(f"trials must be >= 1, got {self.trials}")
        object.__setattr__(self, "values", tuple(float(v) if self.param != "N" else int(v)
                                                 for v in self.values))

    @property
    def fading(self) -> bool:
        return self.trials > 1


def set_param(cfg: GameConfig, param: str, value) -> GameConfig:
    """Return a copy of ``cfg`` with one swept parameter replaced."""
    if param == "q":
        if not isinstance(cfg.protocol, CarProtocol):
            raise ConfigurationError("sweeping q requires the CAR protocol")
        return replace(cfg, protocol=replace(cfg.protocol, q=float(value)))
    if param == "epsilon":
        if not isinstance(cfg.protocol, CarProtocol):
            raise ConfigurationError("sweeping epsilon requires the CAR protocol")
        return replace(cfg, protocol=replace(cfg.protocol, epsilon=float(value)))
    if param == "b":
        return replace(cfg, energy=replace(cfg.energy, b=float(value)))
    if param == "K":
        return replace(cfg, queue=QueueParams(int(value)))
    if param == "kappa":
        if not isinstance(cfg.protocol, AarProtocol):
            raise ConfigurationError("sweeping kappa requires the AAR protocol")
        return replace(cfg, protocol=AarProtocol(AarSpec(kappa=float(value))))
    if param in ("N", "cross_gain"):
        g = cfg.channel.gains
        if cfg.n > 1 and not _is_symmetric_gain(g):
            raise ConfigurationError(f"sweeping {param} requires a symmetric base channel")
        diag = g[0, 0]
        cross = g[0, 1] if cfg.n > 1 else 0.0
        if param == "N":
            new = symmetric_gains(int(value), diag, cross)
        else:
            new = symmetric_gains(cfg.n, diag, float(value))
        return replace(cfg, channel=ChannelMatrix(new, cfg.channel.noise_variance))
    raise ConfigurationError(f"unknown sweep parameter {param!r}")


def _is_symmetric_gain(g) -> bool:
    diag = np.diag(g)
    off = g[~np.eye(g.shape[0], dtype=bool)]
    return np.all(diag == diag[0]) and (off.size == 0 or np.all(off == off[0]))


def trial_seed(seed: int, trial: int) -> np.random.SeedSequence:
    """Derived per-trial seed: SeedSequence(seed, spawn_key=(trial,))."""
    return np.random.SeedSequence(seed, spawn_key=(trial,))


def trial_channel(base: GameConfig, seed: int, trial: int) -> ChannelMatrix:
    """Fading realization for one trial; base gains act as the means."""
    return sample_rayleigh_channel(base.channel.gains, base.channel.noise_variance,
                                   trial_seed(seed, trial))


def config_digest(cfg: GameConfig) -> str:
    """Short stable hash of a config, for output provenance."""
    return hashlib.sha256(_canon(cfg).encode()).hexdigest()[:16]


def _canon(obj) -> str:
    if is_dataclass(obj) and not isinstance(obj, type):
        inner = ",".join(f"{f.name}={_canon(getattr(obj, f.name))}" for f in fields(obj))
        return f"{type(obj).__name__}({inner})"
    if isinstance(obj, np.ndarray):
        return repr(obj.tolist())
    if isinstance(obj, float):
        return repr(obj)
    if callable(obj):
        return repr(obj)
    return repr(obj)


def _num(x):
    if isinstance(x, (np.floating, float)):
        return float(x)
    if isinstance(x, (np.integer, int)):
        return int(x)
    return x


class ResultTable:
    """Column-named rows plus a metadata block, serializable to CSV/JSON.

    CSV layout: '# key = value' comment lines, a header row, then data
    rows.  Floats are written in shortest round-trip form, so identical
    inputs give byte-identical files.
    """

    def __init__(self, columns, rows, metadata=None):
        self.columns = list(columns)
        self.rows = [tuple(_num(x) for x in r) for r in rows]
        self.metadata = {k: _num(v) for k, v in (metadata or {}).items()}

    def column(self, name) -> list:
        j = self.columns.index(name)
        return [r[j] for r in self.rows]

    def to_csv(self) -> str:
        out = io.StringIO()
        for key, val in self.metadata.items():
            out.write(f"# {key} = {val}\n")
        out.write(",".join(self.columns) + "\n")
        for r in self.rows:
            out.write(",".join(repr(x) if isinstance(x, float) else str(x) for x in r) + "\n")
        return out.getvalue()

    def to_json(self) -> str:
        return json.dumps(
            {"metadata": {k: str(v) for k, v in self.metadata.items()},
             "columns": self.columns, "rows": [list(r) for r in self.rows]},
            indent=1)

    def write(self, path, fmt="csv"):
        text = self.to_csv() if fmt == "csv" else self.to_json()
        with open(path, "w", newline="") as fh:
            fh.write(text)


def _meta(cfg: GameConfig, seed=None, trials=None, nonconvergent=None, **extra):
    md = {"config": config_digest(cfg)}
    if seed is not None:
        md["seed"] = seed
        md["trial_seed_rule"] = "SeedSequence(seed, spawn_key=(trial,))"
    if trials is not None:
        md["trials"] = trials
    if nonconvergent is not None:
        md["nonconvergent"] = nonconvergent
    md.update(extra)
    return md


def _map_trials(fn, trials: int, jobs: int = 1) -> list:
    """Evaluate fn(trial) for trial = 0..trials-1, optionally in a process
    pool; results are merged by trial index either way.  For jobs > 1,
    ``fn`` must be a picklable callable (a partial of a module-level
    worker)."""
    if jobs <= 1 or trials == 1:
        return [fn(t) for t in range(trials)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, range(trials)))


# ---------------------------------------------------------------------------
# Figure-family drivers.


def ee_curve(cfg: GameConfig, i: int = 0, grid: int = 1000, others=None) -> ResultTable:
    """Efficiency of user i against its own power, the others held fixed.

    With b = 0 the metric is undefined at exactly zero power, so the grid
    then starts one step above zero.
    """
    if grid < 100:
        raise ConfigurationError(f"grid must be >= 100, got {grid}")
    if cfg.n == 1:
        others = np.array([])
    elif others is None:
        raise ConfigurationError("a fixed reduced profile `others` is required when n > 1")
    powers = np.linspace(0.0, cfg.p_max, grid + 1)
    if cfg.energy.b == 0.0:
        powers = powers[1:]
    rows = []
    for p_i in powers:
        prof = np.insert(np.asarray(others, dtype=float), i, p_i)
        rows.append((p_i, energy_efficiency(prof, i, cfg)))
    best = max(range(len(rows)), key=lambda j: rows[j][1])
    md = _meta(cfg, argmax_mw=rows[best][0], argmax_ee=rows[best][1])
    return ResultTable(["p_mw", "ee"], rows, md)


def _dynamics_trial(cfg: GameConfig, seed: int, fading: bool, t: int) -> NEResult:
    c = replace(cfg, channel=trial_channel(cfg, seed, t)) if fading else cfg
    return run_dynamics(c)


def run_sweep(spec: SweepSpec, jobs: int = 1) -> ResultTable:
    """Generic sweep: equilibrium summary per swept value.

    Static channels report the NE profile and payoffs; fading experiments
    report per-trial means.  Columns: value, mean power and payoff per
    user, sum payoff.
    """
    base = spec.base
    n_max = max(int(v) for v in spec.values) if spec.param == "N" else spec.base.n
    bad = 0
    rows = []
    for value in spec.values:
        cfg = set_param(base, spec.param, value)
        results = _map_trials(partial(_dynamics_trial, cfg, spec.seed, spec.fading),
                              spec.trials, jobs)
        ok = [r for r in results if r.converged]
        bad += len(results) - len(ok)
        if not ok:
            rows.append((value,) + (math.nan,) * (2 * n_max + 1))
            continue
        powers = np.mean([r.final_profile for r in ok], axis=0)
        pays = np.mean([r.payoffs for r in ok], axis=0)
        pad = (math.nan,) * (n_max - cfg.n)
        rows.append((value, *powers, *pad, *pays, *pad, float(np.sum(pays))))
    cols = (["value"]
            + [f"p{i + 1}_mw" for i in range(n_max)]
            + [f"u{i + 1}" for i in range(n_max)]
            + ["sum_payoff"])
    md = _meta(base, seed=spec.seed, trials=spec.trials, nonconvergent=bad, param=spec.param)
    return ResultTable(cols, rows, md)


def _gain_trial(base: GameConfig, values, seed: int, fading: bool, t: int) -> list:
    ch = trial_channel(base, seed, t) if fading else base.channel
    ref = run_dynamics(replace(set_param(base, "q", 1.0), channel=ch))
    gains = []
    for q in values:
        res = run_dynamics(replace(set_param(base, "q", q), channel=ch))
        if not (ref.converged and res.converged):
            gains.append(math.nan)
        else:
            gains.append(10.0 * math.log10(ref.final_profile[0] / res.final_profile[0]))
    return gains


def power_gain_vs_q(spec: SweepSpec, jobs: int = 1) -> ResultTable:
    """Radiated-power gain of the cross-layer equilibrium over the q -> 1
    baseline: 10 log10(p1_NE[q=1] / p1_NE[q]) per swept q, averaged over
    fading trials.  The baseline uses the exact q = 1 branch of the metric.
    """
    if spec.param != "q":
        raise ConfigurationError("power_gain_vs_q sweeps q")
    base = spec.base
    if not isinstance(base.protocol, CarProtocol):
        raise ConfigurationError("power_gain_vs_q requires the CAR protocol")
    per_trial = np.array(_map_trials(
        partial(_gain_trial, base, spec.values, spec.seed, spec.fading), spec.trials, jobs))
    keep = ~np.isnan(per_trial).any(axis=1)
    bad = int((~keep).sum())
    good = per_trial[keep]
    rows = [(q, float(np.mean(good[:, j])) if good.size else math.nan)
            for j, q in enumerate(spec.values)]
    md = _meta(base, seed=spec.seed, trials=spec.trials, nonconvergent=bad)
    return ResultTable(["q", "gain_db"], rows, md)


def poa_vs_q(spec: SweepSpec, grid_per_dim: int = 200, refine_rounds: int = 3) -> ResultTable:
    """Price of anarchy against the arrival rate, on the static base channel.

    Also reports the equilibrium success probability f(gamma_NE) of user 0,
    which locates the PoA jump (it occurs once q >= f(gamma_NE)).
    """
    if spec.param != "q":
        raise ConfigurationError("poa_vs_q sweeps q")
    rows = []
    for q in spec.values:
        cfg = set_param(spec.base, "q", q)
        rep = price_of_anarchy(cfg, grid_per_dim, refine_rounds)
        f_ne = cfg.efficiency(sinr(rep.ne_profile, cfg.channel, 0))
        rows.append((q, rep.poa, rep.ne_sum_payoff, rep.opt_sum_payoff, f_ne,
                     rep.ne_profile[0]))
    md = _meta(spec.base, grid_per_dim=grid_per_dim, refine_rounds=refine_rounds)
    return ResultTable(["q", "poa", "ne_sum", "opt_sum", "f_gamma_ne", "p1_ne_mw"], rows, md)


def _poa_trial(base: GameConfig, seed: int, grid_per_dim: int, refine_rounds: int, t: int):
    cfg = replace(base, channel=trial_channel(base, seed, t))
    try:
        rep = price_of_anarchy(cfg, grid_per_dim, refine_rounds)
    except NumericalError:
        return (t, f"{seed}.{t}", math.nan)
    return (t, f"{seed}.{t}", rep.poa)


def poa_samples(spec: SweepSpec, grid_per_dim: int = 200, refine_rounds: int = 3,
                jobs: int = 1) -> ResultTable:
    """Per-trial PoA over fading realizations (one row per trial; the
    trial_seed column is the seed.trial pair fed to the derivation rule)."""
    rows = _map_trials(
        partial(_poa_trial, spec.base, spec.seed, grid_per_dim, refine_rounds),
        spec.trials, jobs)
    bad = sum(1 for r in rows if math.isnan(r[2]))
    md = _meta(spec.base, seed=spec.seed, trials=spec.trials, nonconvergent=bad,
               grid_per_dim=grid_per_dim)
    return ResultTable(["trial", "trial_seed", "poa"], rows, md)


_CDF_QUANTILES = tuple(np.round(np.arange(0.05, 1.0, 0.05), 2))


def poa_cdf(spec: SweepSpec, grid_per_dim: int = 200, refine_rounds: int = 3,
            quantiles=_CDF_QUANTILES, jobs: int = 1) -> ResultTable:
    """Empirical PoA distribution over fading trials, at standard quantiles."""
    samples = poa_samples(spec, grid_per_dim, refine_rounds, jobs)
    vals = np.array([v for v in samples.column("poa") if not math.isnan(v)])
    rows = [(float(s), float(np.quantile(vals, s))) for s in quantiles]
    md = dict(samples.metadata)
    return ResultTable(["quantile", "poa"], rows, md)


def sum_payoff_vs_q(spec: SweepSpec, n_values=None) -> ResultTable:
    """Equilibrium sum payoff against q, per network size.

    Static channel per the base config; when ``n_values`` is given the
    base (symmetric) channel is rebuilt for each size.  The metadata
    reports the sum-payoff-maximizing q per N.
    """
    if spec.param != "q":
        raise ConfigurationError("sum_payoff_vs_q sweeps q")
    sizes = [spec.base.n] if n_values is None else list(n_values)
    rows = []
    best = {}
    bad = 0
    for n in sizes:
        cfg_n = set_param(spec.base, "N", n) if n != spec.base.n else spec.base
        sums = []
        for q in spec.values:
            res = run_dynamics(set_param(cfg_n, "q", q))
            if not res.converged:
                bad += 1
                sums.append(math.nan)
            else:
                sums.append(float(np.sum(res.payoffs)))
            rows.append((n, q, sums[-1]))
        j = int(np.nanargmax(sums))
        best[n] = spec.values[j]
    md = _meta(spec.base, nonconvergent=bad,
               best_q_per_n=";".join(f"{n}:{best[n]}" for n in sizes))
    return ResultTable(["n", "q", "sum_payoff"], rows, md)


def _energy_trial(cfg_b: GameConfig, seed: int, fading: bool, t: int):
    ch = trial_channel(cfg_b, seed, t) if fading else cfg_b.channel
    cfg = replace(cfg_b, channel=ch)
    prop = run_dynamics(cfg)
    ref = run_dynamics(set_param(cfg, "q", 1.0))
    if not (prop.converged and ref.converged):
        return (math.nan, math.nan)
    e_prop = np.mean([expected_total_power(prop.final_profile, i, cfg) for i in range(cfg.n)])
    e_base = np.mean([expected_total_power(ref.final_profile, i, cfg) for i in range(cfg.n)])
    return (e_prop, e_base)


def energy_vs_b_against_full_buffer(spec: SweepSpec, jobs: int = 1) -> ResultTable:
    """Mean consumed power at equilibrium, proposed versus the q -> 1
    baseline of the queue-blind design, as the fixed cost b sweeps.

    The baseline profile comes from dynamics under the exact q = 1 payoff;
    its consumed power is then evaluated under the true q.  Saving is
    relative between the two mean powers.
    """
    if spec.param != "b":
        raise ConfigurationError("energy_vs_b_against_full_buffer sweeps b")
    base = spec.base
    if not isinstance(base.protocol, CarProtocol):
        raise ConfigurationError("the full-buffer comparison requires the CAR protocol")
    rows = []
    bad = 0
    for b in spec.values:
        cfg_b = set_param(base, "b", b)
        res = np.array(_map_trials(
            partial(_energy_trial, cfg_b, spec.seed, spec.fading), spec.trials, jobs))
        ok = res[~np.isnan(res).any(axis=1)]
        bad += res.shape[0] - ok.shape[0]
        e_prop, e_base = float(np.mean(ok[:, 0])), float(np.mean(ok[:, 1]))
        rows.append((b, e_prop, e_base, 1.0 - e_prop / e_base))
    md = _meta(base, seed=spec.seed, trials=spec.trials, nonconvergent=bad)
    return ResultTable(["b_mw", "power_proposed_mw", "power_baseline_mw", "saving"], rows, md)


def energy_vs_b_against_sinr_target(spec: SweepSpec, target_sinr: float) -> ResultTable:
    """Single-user comparison against SINR-target power minimization.

    The baseline transmits at the smallest power meeting the target; the
    proposed policy maximizes the efficiency metric, raised to the target
    power if its optimum falls below (so both meet the constraint).  Energy
    is per delivered bit (the reciprocal of the metric), and the saving is
    its relative reduction.
    """
    if spec.param != "b":
        raise ConfigurationError("energy_vs_b_against_sinr_target sweeps b")
    base = spec.base
    if base.n != 1:
        raise ConfigurationError("the SINR-target comparison is a single-user experiment")
    if target_sinr <= 0:
        raise ConfigurationError("target_sinr must be > 0 (linear ratio)")
    ch = base.channel
    p_target = ch.noise_variance * target_sinr / ch.gains[0, 0]
    clamped_to_pmax = p_target > base.p_max
    rows = []
    for b in spec.values:
        cfg = set_param(base, "b", b)
        p_prop = best_response(0, np.array([]), cfg)
        p_prop = min(max(p_prop, p_target), cfg.p_max)
        p_base = min(p_target, cfg.p_max)
        e_prop = 1.0 / energy_efficiency(np.array([p_prop]), 0, cfg)
        e_base = 1.0 / energy_efficiency(np.array([p_base]), 0, cfg)
        rows.append((b, p_base, p_prop, e_base, e_prop, 1.0 - e_prop / e_base))
    md = _meta(base, target_sinr=target_sinr, target_power_mw=p_target,
               target_above_pmax=clamped_to_pmax)
    return ResultTable(["b_mw", "p_baseline_mw", "p_proposed_mw",
                        "energy_per_bit_baseline", "energy_per_bit_proposed", "saving"],
                       rows, md)


def _qos_trial(cfg_e: GameConfig, seed: int, fading: bool, t: int):
    cfg = replace(cfg_e, channel=trial_channel(cfg_e, seed, t)) if fading else cfg_e
    res = run_dynamics(cfg)
    if not res.converged:
        return None
    met = 0
    for i in range(cfg.n):
        f = cfg.efficiency(sinr(res.final_profile, cfg.channel, i))
        phi = packet_loss(cfg.protocol.q, f, cfg.queue.k) if f > 0 else 1.0
        met += phi <= cfg.protocol.epsilon
    return (met, cfg.n)


def qos_feasibility(spec: SweepSpec, jobs: int = 1) -> ResultTable:
    """Probability (over fading and users) that the equilibrium loss meets
    the bound, per swept epsilon."""
    if spec.param != "epsilon":
        raise ConfigurationError("qos_feasibility sweeps epsilon")
    base = spec.base
    if not isinstance(base.protocol, CarProtocol):
        raise ConfigurationError("the QoS constraint applies to the CAR protocol")
    rows = []
    bad = 0
    for eps in spec.values:
        cfg_e = set_param(base, "epsilon", eps)
        outcomes = _map_trials(partial(_qos_trial, cfg_e, spec.seed, spec.fading),
                               spec.trials, jobs)
        ok = [r for r in outcomes if r is not None]
        bad += len(outcomes) - len(ok)
        met = sum(r[0] for r in ok)
        tot = sum(r[1] for r in ok)
        rows.append((eps, 10.0 * math.log10(eps), met / tot if tot else math.nan))
    md = _meta(base, seed=spec.seed, trials=spec.trials, nonconvergent=bad)
    return ResultTable(["epsilon", "epsilon_db", "prob_met"], rows, md)


def aar_sum_payoff_vs_k(spec: SweepSpec) -> ResultTable:
    """Adaptive-protocol equilibrium sum payoff against the buffer size,
    on the static base channel."""
    if spec.param != "K":
        raise ConfigurationError("aar_sum_payoff_vs_k sweeps K")
    if not isinstance(spec.base.protocol, AarProtocol):
        raise ConfigurationError("aar_sum_payoff_vs_k requires the AAR protocol")
    rows = []
    bad = 0
    for k in spec.values:
        res = run_dynamics(set_param(spec.base, "K", k))
        if not res.converged:
            bad += 1
            rows.append((int(k), math.nan))
        else:
            rows.append((int(k), float(np.sum(res.payoffs))))
    md = _meta(spec.base, nonconvergent=bad)
    return ResultTable(["k", "sum_payoff"], rows, md)


def _aar_gain_trial(cfg_g: GameConfig, seed: int, fading: bool, t: int) -> float:
    blind = replace(cfg_g, protocol=CarProtocol(q=1.0))
    if fading:
        ch = trial_channel(cfg_g, seed, t)
        cfg_t, blind_t = replace(cfg_g, channel=ch), replace(blind, channel=ch)
    else:
        cfg_t, blind_t = cfg_g, blind
    prop = run_dynamics(cfg_t)
    ref = run_dynamics(blind_t)
    if not (prop.converged and ref.converged):
        return math.nan
    u_prop = np.sum(prop.payoffs)
    u_ref = sum(energy_efficiency(ref.final_profile, i, cfg_t) for i in range(cfg_t.n))
    return 100.0 * (u_prop - u_ref) / u_ref


def aar_gain_vs_crossgain(spec: SweepSpec, jobs: int = 1) -> ResultTable:
    """Efficiency gain of the adaptive cross-layer equilibrium over the
    queue-blind (q = 1) equilibrium, against the mean cross gain.

    Both profiles are evaluated under the adaptive metric; the gain may go
    negative in the mid-interference range and is reported either way.
    """
    if spec.param != "cross_gain":
        raise ConfigurationError("aar_gain_vs_crossgain sweeps cross_gain")
    base = spec.base
    if not isinstance(base.protocol, AarProtocol):
        raise ConfigurationError("aar_gain_vs_crossgain requires the AAR protocol")
    rows = []
    bad = 0
    for g in spec.values:
        cfg_g = set_param(base, "cross_gain", g)
        gains = np.array(_map_trials(partial(_aar_gain_trial, cfg_g, spec.seed, spec.fading),
                                     spec.trials, jobs))
        ok = gains[~np.isnan(gains)]
        bad += gains.size - ok.size
        rows.append((g, float(np.mean(ok))))
    md = _meta(base, seed=spec.seed, trials=spec.trials, nonconvergent=bad)
    return ResultTable(["cross_gain", "gain_pct"], rows, md)


def trajectory_table(result: NEResult, cfg: GameConfig) -> ResultTable:
    """Per-sweep dynamics dump: round, powers, payoffs, max power change."""
    n = cfg.n
    rows = []
    prev = None
    for t, prof in enumerate(result.trajectory):
        pays = [payoff(prof, i, cfg) for i in range(n)]
        delta = math.nan if prev is None else float(np.max(np.abs(prof - prev)))
        rows.append((t, *prof, *pays, delta))
        prev = prof
    cols = (["round"] + [f"p{i + 1}_mw" for i in range(n)]
            + [f"u{i + 1}" for i in range(n)] + ["delta_mw"])
    md = _meta(cfg, converged=result.converged, rounds=result.rounds_used)
    return ResultTable(cols, rows, md)
