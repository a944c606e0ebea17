"""Command-line front end: TOML config parsing and subcommand dispatch.

Exit codes: 0 success, 2 config error (the message names the offending
key), 3 non-convergence under --strict, 64 usage error.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace

import numpy as np

try:
    import tomllib as _toml
except ModuleNotFoundError:  # Python 3.10
    import tomli as _toml

from . import experiments
from .channel import ChannelMatrix
from .efficiency import AarProtocol, CarProtocol, EnergyModel, ExpThreshold, PacketLength
from .errors import ConfigurationError, EepcError
from .experiments import ResultTable, SweepSpec
from .game import GameConfig, SolverParams, run_dynamics
from .queueing import AarSpec, QueueParams, aar_arrival_rate, aar_rate_large_k, loss_large_k
from .social import price_of_anarchy

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_USAGE = 64


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _need(table: dict, key: str, path: str):
    if key not in table:
        raise ConfigurationError(f"{path}{key}: required key is missing")
    return table[key]


def _scoped(path: str):
    """Re-raise module validation errors with the config key path prefixed."""
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if exc_type is not None and issubclass(exc_type, ConfigurationError):
                raise ConfigurationError(f"{path}: {exc}") from None
            return False
    return _Ctx()


def load_config(path: str) -> dict:
    """Parse and validate an experiment config file.

    Returns a dict with keys: game (GameConfig), fading (bool),
    sweep (SweepSpec | None), output (dict).
    """
    try:
        with open(path, "rb") as fh:
            raw = _toml.load(fh)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}")
    except _toml.TOMLDecodeError as exc:
        raise ConfigurationError(f"{path}: TOML syntax error: {exc}")

    n = int(_need(raw, "n", ""))
    gains = np.asarray(_need(raw, "gains", ""), dtype=float)
    if gains.size == n * n:
        gains = gains.reshape(n, n)
    with _scoped("gains"):
        channel = ChannelMatrix(gains, float(_need(raw, "sigma2_mw", "")))

    with _scoped("energy"):
        energy = EnergyModel(
            b=float(_need(raw, "b_mw", "")),
            rate=float(raw.get("rate_r", 1.0)),
            p_max=float(_need(raw, "pmax_mw", "")),
        )

    eff_tbl = raw.get("efficiency", {"kind": "exp_threshold", "c": 1.0})
    kind = eff_tbl.get("kind", "exp_threshold")
    with _scoped("efficiency"):
        if kind == "exp_threshold":
            efficiency = ExpThreshold(c=float(eff_tbl.get("c", 1.0)))
        elif kind == "packet_length":
            efficiency = PacketLength(m=int(eff_tbl.get("m", 80)))
        else:
            raise ConfigurationError(f"kind: unknown efficiency kind {kind!r}")

    prot_tbl = _need(raw, "protocol", "")
    if "car" in prot_tbl and "aar" in prot_tbl:
        raise ConfigurationError("protocol: specify exactly one of car/aar, got both")
    if "car" in prot_tbl:
        car = prot_tbl["car"]
        with _scoped("protocol.car"):
            protocol = CarProtocol(q=float(_need(car, "q", "protocol.car.")),
                                   epsilon=float(car.get("epsilon", 1.0)))
    elif "aar" in prot_tbl:
        with _scoped("protocol.aar"):
            protocol = AarProtocol(AarSpec(kappa=float(prot_tbl["aar"].get("kappa", 0.1))))
    else:
        raise ConfigurationError("protocol: specify one of car/aar")

    with _scoped("buffer_k"):
        queue = QueueParams(int(_need(raw, "buffer_k", "")))

    sol = raw.get("solver", {})
    with _scoped("solver"):
        solver = SolverParams(
            delta=float(sol["delta"]) if "delta" in sol else None,
            max_rounds=int(sol.get("max_rounds", 10_000)),
            br_grid=int(sol.get("br_grid", 512)),
            br_refine_tol=float(sol.get("br_refine_tol", 1e-9)),
        )

    with _scoped("game"):
        game = GameConfig(channel=channel, energy=energy, efficiency=efficiency,
                          protocol=protocol, queue=queue, solver=solver)

    sweep = None
    if "sweep" in raw:
        sw = raw["sweep"]
        with _scoped("sweep"):
            sweep = SweepSpec(
                param=_need(sw, "param", "sweep."),
                values=tuple(_need(sw, "values", "sweep.")),
                base=game,
                trials=int(sw.get("trials", 1)),
                seed=int(sw.get("seed", 0)),
            )

    return {
        "game": game,
        "fading": bool(raw.get("fading", False)),
        "sweep": sweep,
        "output": dict(raw.get("output", {})),
    }


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("EEPC_SEED")
    return int(env) if env else 0


def _game_for_run(conf, args):
    """Static game instance; fading configs get one sampled realization."""
    game = conf["game"]
    if conf["fading"]:
        ch = experiments.trial_channel(game, _resolve_seed(args), 0)
        game = replace(game, channel=ch)
    return game


def _emit(table: ResultTable, args, conf):
    fmt = args.format or conf["output"].get("format", "csv")
    out = args.out or conf["output"].get("path")
    if out:
        table.write(out, fmt)
        print(f"wrote {out}")
    else:
        sys.stdout.write(table.to_csv() if fmt == "csv" else table.to_json())


def _add_common(p, config_required=True):
    p.add_argument("--config", required=config_required, help="TOML experiment config")
    p.add_argument("--seed", type=int, default=None,
                   help="experiment seed (default: $EEPC_SEED or 0)")
    p.add_argument("--out", default=None, help="output file path")
    p.add_argument("--format", choices=("csv", "json"), default=None)
    p.add_argument("--jobs", type=int, default=1, help="max parallel trial workers")
    p.add_argument("--strict", action="store_true",
                   help="exit 3 if any dynamics run fails to converge")


def build_parser() -> _Parser:
    ap = _Parser(prog="eepc", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    for name, hlp in [
        ("ee-curve", "efficiency against own power, other powers fixed"),
        ("dynamics", "run best-response dynamics, write the trajectory"),
        ("ne", "converged equilibrium profile and payoffs"),
        ("poa", "price of anarchy on the configured static channel"),
        ("poa-cdf", "PoA distribution over fading trials"),
        ("sweep", "generic equilibrium sweep per the config's sweep block"),
        ("validate", "parse and echo the resolved config without running"),
    ]:
        p = sub.add_parser(name, help=hlp)
        _add_common(p)
        if name == "ee-curve":
            p.add_argument("--user", type=int, default=0)
            p.add_argument("--grid", type=int, default=1000)
            p.add_argument("--others", default=None,
                           help="comma-separated fixed powers of the other users (mW)")

    p = sub.add_parser("aar-rate", help="adaptive arrival-rate fixed point")
    p.add_argument("--f", type=float, required=True, help="success probability")
    p.add_argument("--k", type=int, required=True, help="buffer size")
    p.add_argument("--kappa", type=float, default=0.1)
    p.add_argument("--tol", type=float, default=1e-10)

    p = sub.add_parser("limits", help="large-buffer closed forms")
    p.add_argument("--f", type=float, required=True)
    p.add_argument("--q", type=float, default=None, help="report the large-K loss at this q")
    p.add_argument("--kappa", type=float, default=None,
                   help="report the large-K adaptive rate at this kappa")
    return ap


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        return _dispatch(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EepcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


def _dispatch(args) -> int:
    cmd = args.command

    if cmd == "aar-rate":
        res = aar_arrival_rate(args.f, args.k, AarSpec(kappa=args.kappa), tol=args.tol)
        print(f"q = {res.q!r}" + ("  (clamped to 1)" if res.clamped else ""))
        return EXIT_OK

    if cmd == "limits":
        if args.q is None and args.kappa is None:
            raise ConfigurationError("limits: give --q and/or --kappa")
        if args.q is not None:
            print(f"loss_large_k = {loss_large_k(args.q, args.f)!r}")
        if args.kappa is not None:
            res = aar_rate_large_k(args.f, args.kappa)
            print(f"aar_rate_large_k = {res.q!r}" + ("  (clamped to 1)" if res.clamped else ""))
        return EXIT_OK

    conf = load_config(args.config)

    if cmd == "validate":
        game = conf["game"]
        print(f"n = {game.n}")
        print(f"gains =\n{game.channel.gains}")
        print(f"sigma2_mw = {game.channel.noise_variance!r}")
        print(f"energy = {game.energy}")
        print(f"efficiency = {game.efficiency}")
        print(f"protocol = {game.protocol}")
        print(f"buffer_k = {game.queue.k}")
        print(f"solver = {game.solver}")
        print(f"fading = {conf['fading']}")
        if conf["sweep"]:
            s = conf["sweep"]
            print(f"sweep = {s.param} over {list(s.values)}, trials={s.trials}, seed={s.seed}")
        print("config ok")
        return EXIT_OK

    if cmd == "ee-curve":
        game = _game_for_run(conf, args)
        others = None
        if args.others is not None:
            others = np.array([float(x) for x in args.others.split(",")])
        table = experiments.ee_curve(game, i=args.user, grid=args.grid, others=others)
        _emit(table, args, conf)
        print(f"argmax: {table.metadata['argmax_mw']!r} mW")
        return EXIT_OK

    if cmd in ("dynamics", "ne"):
        game = _game_for_run(conf, args)
        result = run_dynamics(game)
        table = experiments.trajectory_table(result, game)
        _emit(table, args, conf)
        if cmd == "ne":
            print(f"converged = {result.converged} in {result.rounds_used} sweeps")
            print("profile_mw =", [repr(float(x)) for x in result.final_profile])
            print("payoffs =", [repr(float(x)) for x in result.payoffs])
        if args.strict and not result.converged:
            print("dynamics did not converge", file=sys.stderr)
            return EXIT_NONCONVERGED
        return EXIT_OK

    if cmd == "poa":
        game = _game_for_run(conf, args)
        rep = price_of_anarchy(game)
        table = ResultTable(
            ["poa", "ne_sum", "opt_sum"] + [f"p{i+1}_ne_mw" for i in range(game.n)],
            [(rep.poa, rep.ne_sum_payoff, rep.opt_sum_payoff, *rep.ne_profile)],
            {"config": experiments.config_digest(game), "grid_per_dim": rep.grid_per_dim})
        _emit(table, args, conf)
        print(f"poa = {rep.poa!r}")
        return EXIT_OK

    if cmd == "poa-cdf":
        sweep = conf["sweep"]
        trials = sweep.trials if sweep else 200
        if args.seed is not None:
            seed = args.seed
        elif sweep is not None:
            seed = sweep.seed
        else:
            seed = _resolve_seed(args)
        spec = SweepSpec(param="q", values=(1.0,), base=conf["game"],
                         trials=max(trials, 2), seed=seed)
        table = experiments.poa_cdf(spec, jobs=args.jobs)
        _emit(table, args, conf)
        if args.strict and int(table.metadata.get("nonconvergent", 0)) > 0:
            return EXIT_NONCONVERGED
        return EXIT_OK

    if cmd == "sweep":
        if conf["sweep"] is None:
            raise ConfigurationError("sweep: config has no [sweep] block")
        spec = conf["sweep"]
        if args.seed is not None or os.environ.get("EEPC_SEED"):
            spec = replace(spec, seed=_resolve_seed(args))
        table = experiments.run_sweep(spec, jobs=args.jobs)
        _emit(table, args, conf)
        if args.strict and int(table.metadata.get("nonconvergent", 0)) > 0:
            return EXIT_NONCONVERGED
        return EXIT_OK

    raise UsageError(f"unknown command {cmd!r}")


def console_entry():
    sys.exit(main())


if __name__ == "__main__":
    console_entry()
