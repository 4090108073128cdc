"""Command-line front end.

Subcommands map one-to-one onto the experiment recipes: ``converge``,
``sweep-power``, ``sweep-users``, ``sweep-elements`` and ``decompose``.
A JSON config file supplies defaults; every flag overrides it. Exit
codes: 0 success, 1 config error, 2 numerical degeneracy killed every
cell.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace

import jsonschema

from .config import SystemConfig, dbm_to_mw, db_to_linear
from .harness import (
    DESIGNS,
    SCHEMES,
    ExperimentSpec,
    Sweep,
    convergence_config,
    emit_csv,
    emit_json,
    run_decomposition,
    run_experiment,
    summarize,
)
from .relays import RelayConfig

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "properties": {
        "system": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "k": {"type": "integer", "minimum": 1},
                "n": {"type": "integer", "minimum": 1},
                "p_max_dbm": {"type": "number"},
                "n0_dbm": {"type": "number"},
                "c0_db": {"type": "number"},
                "d0": {"type": "number", "exclusiveMinimum": 0},
                "rho": {"type": "number", "exclusiveMinimum": 0},
                "d_bs_ris": {"type": "number", "exclusiveMinimum": 0},
                "d_ris_user": {
                    "anyOf": [
                        {"type": "number", "exclusiveMinimum": 0},
                        {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
                    ]
                },
                "eps_rel": {"type": "number", "exclusiveMinimum": 0},
                "eps_null": {"type": "number", "exclusiveMinimum": 0},
                "max_iter": {"type": "integer", "minimum": 1},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "trials": {"type": "integer", "minimum": 0},
        "workers": {"type": "integer", "minimum": 1},
        "designs": {"type": "array", "items": {"enum": list(DESIGNS)}},
        "bs_schemes": {"type": "array", "items": {"enum": list(SCHEMES)}},
        "p_relay_dbm": {"type": "number"},
    },
}


class ConfigError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; remap to the config-error code
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def load_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file is not valid JSON: {exc}")
    try:
        jsonschema.validate(raw, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config file rejected: {exc.message}")
    return raw


def system_config_from(raw: dict, **overrides) -> SystemConfig:
    sysraw = dict(raw.get("system", {}))
    kwargs = {}
    if "k" in sysraw:
        kwargs["K"] = sysraw.pop("k")
    if "n" in sysraw:
        kwargs["N"] = sysraw.pop("n")
    if "p_max_dbm" in sysraw:
        kwargs["p_max"] = dbm_to_mw(sysraw.pop("p_max_dbm"))
    if "n0_dbm" in sysraw:
        kwargs["n0"] = dbm_to_mw(sysraw.pop("n0_dbm"))
    if "c0_db" in sysraw:
        kwargs["c0"] = db_to_linear(sysraw.pop("c0_db"))
    if "d_ris_user" in sysraw:
        d = sysraw.pop("d_ris_user")
        kwargs["d_ris_user"] = tuple(d) if isinstance(d, list) else d
    kwargs.update(sysraw)  # d0, rho, d_bs_ris, eps_rel, eps_null, max_iter, seed
    kwargs.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return SystemConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc))


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="JSON config file; flags override it")
    sub.add_argument("--seed", type=int, help="root RNG seed")
    sub.add_argument("--trials", type=int, help="Monte-Carlo trials")
    sub.add_argument("--workers", type=int, help="parallel worker processes")
    sub.add_argument("--json", action="store_true", help="emit JSON instead of CSV")
    sub.add_argument("--out", required=True, help="output file path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="bdris", description=__doc__)
    subs = parser.add_subparsers(dest="command", required=True)

    conv = subs.add_parser("converge", parents=[], help="nulling convergence traces")
    conv.add_argument("--k", type=int, default=8)
    conv.add_argument("--n", type=int, default=144)
    conv.add_argument("--init", choices=("rand", "mrt"), default="rand")
    _add_common(conv)

    power = subs.add_parser("sweep-power", help="sum rate vs transmit power")
    power.add_argument("--pmax-dbm", type=float, nargs="+", required=True)
    power.add_argument("--designs", nargs="+", choices=DESIGNS)
    power.add_argument("--schemes", nargs="+", choices=SCHEMES)
    power.add_argument("--k", type=int)
    power.add_argument("--n", type=int)
    _add_common(power)

    users = subs.add_parser("sweep-users", help="sum rate vs number of users")
    users.add_argument("--k", type=int, nargs="+", required=True)
    users.add_argument("--n-rule", default="5K", help="'5K' or 'fixed:<N>'")
    users.add_argument("--designs", nargs="+", choices=DESIGNS)
    users.add_argument("--schemes", nargs="+", choices=SCHEMES)
    _add_common(users)

    elems = subs.add_parser("sweep-elements", help="sum rate vs surface size")
    elems.add_argument("--n", type=int, nargs="+", required=True)
    elems.add_argument("--designs", nargs="+", choices=DESIGNS)
    elems.add_argument("--schemes", nargs="+", choices=SCHEMES)
    elems.add_argument("--k", type=int)
    _add_common(elems)

    dec = subs.add_parser("decompose", help="signal/interference power split")
    dec.add_argument("--k", type=int)
    dec.add_argument("--n", type=int)
    _add_common(dec)
    return parser


def _spec_from_args(args, raw: dict) -> tuple[ExperimentSpec, int]:
    workers = args.workers or raw.get("workers", 1)
    trials = args.trials if args.trials is not None else raw.get("trials", 100)
    relay = RelayConfig(p_relay=dbm_to_mw(raw["p_relay_dbm"])) if "p_relay_dbm" in raw \
        else RelayConfig()

    if args.command == "converge":
        base = convergence_config(k=args.k, n=args.n)
        cfg_file = system_config_from(raw)
        base = replace(
            base,
            seed=args.seed if args.seed is not None else raw.get("system", {}).get("seed", base.seed),
            eps_rel=cfg_file.eps_rel if "eps_rel" in raw.get("system", {}) else base.eps_rel,
            eps_null=cfg_file.eps_null if "eps_null" in raw.get("system", {}) else base.eps_null,
            max_iter=cfg_file.max_iter if "max_iter" in raw.get("system", {}) else base.max_iter,
        )
        null_design = "bdris-null-rand" if args.init == "rand" else "bdris-null-mrt-init"
        spec = ExperimentSpec(base=base, sweep=Sweep("convergence"),
                              designs=(null_design, "dris-null"), trials=trials, relay=relay)
        return spec, workers

    overrides = {"seed": args.seed}
    if getattr(args, "k", None) is not None and args.command != "sweep-users":
        overrides["K"] = args.k
    if getattr(args, "n", None) is not None and args.command != "sweep-elements":
        overrides["N"] = args.n
    base = system_config_from(raw, **overrides)

    designs = tuple(getattr(args, "designs", None) or raw.get("designs", ())) or None
    schemes = tuple(getattr(args, "schemes", None) or raw.get("bs_schemes", ())) or ("UP",)

    if args.command == "sweep-power":
        sweep = Sweep("power", tuple(args.pmax_dbm))
        designs = designs or ("bdris-mrt", "bdris-null-mrt-init")
    elif args.command == "sweep-users":
        sweep = Sweep("users", tuple(args.k), n_rule=args.n_rule)
        designs = designs or ("bdris-mrt",)
    elif args.command == "sweep-elements":
        sweep = Sweep("elements", tuple(args.n))
        designs = designs or ("bdris-null-rand", "dris-null")
    else:
        raise ConfigError(f"unhandled command {args.command}")
    try:
        spec = ExperimentSpec(base=base, sweep=sweep, designs=designs,
                              bs_schemes=schemes, trials=trials, relay=relay)
    except ValueError as exc:
        raise ConfigError(str(exc))
    return spec, workers


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        raw = load_config(args.config)
        if args.command == "decompose":
            trials = args.trials if args.trials is not None else raw.get("trials", 100)
            cfg = system_config_from(raw, seed=args.seed, K=getattr(args, "k", None),
                                     N=getattr(args, "n", None))
            res = run_decomposition(cfg, trials=trials)
        else:
            spec, workers = _spec_from_args(args, raw)
            res = run_experiment(spec, workers=workers)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    emit = emit_json if args.json else emit_csv
    try:
        emit(res, args.out)
    except OSError as exc:
        print(f"cannot write {args.out}: {exc}", file=sys.stderr)
        return 1

    flagged = [r for r in res.rows if getattr(r, "stop_reason", "").startswith("error:")]
    ok = len(res.rows) - len(flagged)
    print(f"wrote {args.out}: {ok} rows, {len(flagged)} flagged, {len(res.skips)} cells skipped")
    for skip in res.skips:
        print(f"  skipped {skip.design} x {skip.bs_scheme}: {skip.reason}")
    if res.kind == "sweep" and ok:
        for agg in summarize(res):
            print(
                f"  {agg.design:>20s} {agg.bs_scheme:>3s} @ {agg.sweep_value:8.3f}: "
                f"rate mean {agg.sum_rate_mean:9.4f} [{agg.sum_rate_min:9.4f}, {agg.sum_rate_max:9.4f}]"
            )
    if res.rows and not ok:
        print("every cell hit a numerical degeneracy", file=sys.stderr)
        return 2
    return 0


def entrypoint() -> None:
    sys.exit(main())
