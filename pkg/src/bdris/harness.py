"""Monte-Carlo experiment engine: design/BS-scheme matrix over trials and
sweep points, deterministic parallel execution, CSV/JSON persistence.

Within one trial every design sees the identical channel draw, so the
comparisons are paired. All randomness derives from (seed, point, trial)
spawn keys, which makes the output independent of worker count.
"""

from __future__ import annotations

import csv
import dataclasses
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import metrics, precoding, relays, scattering
from .channel import ChannelSet, draw_channel_set, rng_stream, unit_variance_view
from .config import SystemConfig
from .errors import DegenerateInputError, SingularityError

DESIGNS = (
    "bdris-mrt",
    "bdris-null-rand",
    "bdris-null-mrt-init",
    "dris-null",
    "bdris-maxF",
    "bdris-maxl2",
    "bs-zf",
    "bs-mrt",
    "nmimo-zf",
    "nmimo-mrt",
)
SCHEMES = ("UP", "RM", "ZF", "WF")
SWEEP_KINDS = ("power", "users", "elements", "convergence")

# Designs that bundle their own base-station processing; the requested
# scheme matrix does not apply to them.
_BUNDLED_SCHEME = {
    "bs-zf": "ZF",
    "bs-mrt": "MRT",
    "nmimo-zf": "UP",
    "nmimo-mrt": "ZF",
}
_NULL_DESIGNS = {"bdris-null-rand", "bdris-null-mrt-init", "dris-null"}
_RELAY_DESIGNS = {"nmimo-zf", "nmimo-mrt"}

_SK_CHANNEL, _SK_DESIGN = 1, 2


@dataclass(frozen=True)
class Sweep:
    kind: str
    values: tuple[float, ...] = ()
    n_rule: str = "5K"  # users sweep: '5K' or 'fixed:<N>'

    def __post_init__(self) -> None:
        if self.kind not in SWEEP_KINDS:
            raise ValueError(f"unknown sweep kind {self.kind!r}")
        if self.kind != "convergence" and not self.values:
            raise ValueError("sweep needs at least one point")
        if self.kind == "users":
            _resolve_n_rule(self.n_rule, 1)  # validate the rule string


def _resolve_n_rule(rule: str, k: int) -> int:
    if rule == "5K":
        return 5 * k
    if rule.startswith("fixed:"):
        return int(rule.split(":", 1)[1])
    raise ValueError(f"unknown n-rule {rule!r} (use '5K' or 'fixed:<N>')")


@dataclass(frozen=True)
class ExperimentSpec:
    base: SystemConfig
    sweep: Sweep
    designs: tuple[str, ...]
    bs_schemes: tuple[str, ...] = ("UP",)
    trials: int = 100
    relay: relays.RelayConfig = field(default_factory=relays.RelayConfig)

    def __post_init__(self) -> None:
        if not self.designs:
            raise ValueError("at least one design is required")
        for d in self.designs:
            if d not in DESIGNS:
                raise ValueError(f"unknown design {d!r}")
        if not self.bs_schemes:
            raise ValueError("at least one base-station scheme is required")
        for s in self.bs_schemes:
            if s not in SCHEMES:
                raise ValueError(f"unknown base-station scheme {s!r}")
        if self.trials < 0:
            raise ValueError("trials must be nonnegative")
        if self.sweep.kind == "convergence":
            bad = [d for d in self.designs if d not in _NULL_DESIGNS]
            if bad:
                raise ValueError(f"convergence runs support nulling designs only, got {bad}")


@dataclass(frozen=True)
class SweepRow:
    design: str
    bs_scheme: str
    sweep_param: str
    sweep_value: float
    trial: int
    sum_rate: float
    sinr_db: tuple[float, ...]
    null_residual: float
    iterations: int
    stop_reason: str
    wall_time_ms: float


@dataclass(frozen=True)
class TraceRow:
    design: str
    trial: int
    iteration: int
    residual: float
    delta: float | None


@dataclass(frozen=True)
class DecompRow:
    design: str
    variant: str  # 'relaxed' | 'projected'
    trial: int
    signal_power: float
    interference_power: float
    frob_power: float


@dataclass(frozen=True)
class Skip:
    design: str
    bs_scheme: str
    reason: str


@dataclass
class SweepResult:
    kind: str  # 'sweep' | 'convergence' | 'decomposition'
    sweep_param: str
    rows: list
    skips: list[Skip]
    k_max: int

    def ok_rows(self):
        return [r for r in self.rows if not getattr(r, "stop_reason", "").startswith("error:")]


def _design_rng(cfg: SystemConfig, point: int, trial: int, design: str) -> np.random.Generator:
    return rng_stream(cfg.seed, _SK_DESIGN, point, trial, DESIGNS.index(design))


def _compute_design(design: str, cs: ChannelSet, cs_unit: ChannelSet,
                    cfg: SystemConfig, rng: np.random.Generator):
    """Scattering matrix (or unnormalized relay matrix) for one design.

    Nulling loops run on the unit-variance channel view: the iterates are
    scale invariant and the absolute norm threshold then measures the
    normalized residual rather than the pathloss scale.
    """
    trace = None
    if design == "bdris-mrt":
        theta = scattering.mrt_scattering(cs).theta
    elif design == "bdris-null-rand":
        theta0 = scattering.random_init(cfg.N, rng)
        sm, trace = scattering.ao_interference_nulling(cs_unit, theta0, cfg)
        theta = sm.theta
    elif design == "bdris-null-mrt-init":
        theta0 = scattering.mrt_scattering(cs_unit).theta
        sm, trace = scattering.ao_interference_nulling(cs_unit, theta0, cfg)
        theta = sm.theta
    elif design == "dris-null":
        theta0 = scattering.random_init(cfg.N, rng)
        sm, trace = scattering.dris_nulling(cs_unit, theta0, cfg)
        theta = sm.theta
    elif design == "bdris-maxF":
        theta = scattering.maxF_scattering(cs).theta
    elif design == "bdris-maxl2":
        theta = scattering.maxl2_scattering(cs).theta
    elif design in ("bs-zf", "bs-mrt"):
        theta = np.eye(cfg.N, dtype=complex)
    elif design in _RELAY_DESIGNS:
        rc = relays.RelayConfig(mode="zf" if design == "nmimo-zf" else "mrt")
        theta = relays.relay_matrix_unnormalized(cs, rc)
    else:
        raise ValueError(f"unknown design {design!r}")
    return theta, trace


def _bs_precoder(scheme: str, cs: ChannelSet, theta: np.ndarray,
                 e: np.ndarray, cfg: SystemConfig) -> precoding.Precoder:
    if scheme == "UP":
        return precoding.uniform_power(cfg.K, cfg.p_max)
    if scheme == "ZF":
        return precoding.zf_precoder(e, cfg.p_max)
    if scheme == "WF":
        return precoding.water_filling(np.abs(np.diag(e)) ** 2, cfg.p_max, cfg.n0)
    if scheme == "RM":
        prec, _ = precoding._optimize_power_for_channel(e, cfg.p_max, cfg.n0)
        return prec
    if scheme == "MRT":
        return precoding.bs_mrt_precoder(e, cfg.p_max)
    raise ValueError(f"unknown scheme {scheme!r}")


def _evaluate_cell(design: str, scheme: str, cs: ChannelSet, theta: np.ndarray,
                   trace, cfg: SystemConfig, relay: relays.RelayConfig,
                   sweep_param: str, value: float, trial: int) -> SweepRow:
    start = time.perf_counter()
    if design in _RELAY_DESIGNS:
        rc = replace(relay, mode="zf" if design == "nmimo-zf" else "mrt")
        e_un = cs.H @ theta @ cs.W
        prec = _bs_precoder(scheme, cs, theta, e_un, cfg)
        f = relays.nmimo_relay_matrix(cs, rc, prec)
        eff = f
        e = cs.H @ f @ cs.W
    else:
        eff = theta
        e = cs.H @ theta @ cs.W
        prec = _bs_precoder(scheme, cs, theta, e, cfg)
    gam = metrics.sinr_per_user(cs, eff, prec, cfg.n0)
    rate = metrics.sum_rate(gam)
    resid = metrics.nulling_residual(cs, eff)
    elapsed = (time.perf_counter() - start) * 1e3
    with np.errstate(divide="ignore"):
        sinr_db = tuple(float(v) for v in 10.0 * np.log10(gam))
    return SweepRow(
        design=design,
        bs_scheme=scheme,
        sweep_param=sweep_param,
        sweep_value=float(value),
        trial=trial,
        sum_rate=rate,
        sinr_db=sinr_db,
        null_residual=resid,
        iterations=trace.iterations if trace is not None else 0,
        stop_reason=trace.stop_reason if trace is not None else "",
        wall_time_ms=elapsed,
    )


def _error_row(design, scheme, sweep_param, value, trial, k, exc) -> SweepRow:
    return SweepRow(
        design=design, bs_scheme=scheme, sweep_param=sweep_param,
        sweep_value=float(value), trial=trial, sum_rate=float("nan"),
        sinr_db=tuple([float("nan")] * k), null_residual=float("nan"),
        iterations=0, stop_reason=f"error:{type(exc).__name__}", wall_time_ms=0.0,
    )


def _plan_cells(spec: ExperimentSpec):
    """(design, scheme) cells to run, plus the skip log for the rest."""
    cells = []
    skips = []
    for design in spec.designs:
        if design in _BUNDLED_SCHEME:
            canonical = _BUNDLED_SCHEME[design]
            cells.append((design, canonical))
            for scheme in spec.bs_schemes:
                if scheme != canonical:
                    skips.append(Skip(design, scheme,
                                      f"design pairs with {canonical} at the base station"))
            continue
        for scheme in spec.bs_schemes:
            if scheme == "WF" and design not in _NULL_DESIGNS:
                skips.append(Skip(design, scheme,
                                  "water-filling applies to interference-nulling designs only"))
                continue
            cells.append((design, scheme))
    return cells, skips


def _point_configs(spec: ExperimentSpec):
    """Per sweep point: (value, config, channel is shared across points?)."""
    base = spec.base
    kind = spec.sweep.kind
    if kind == "power":
        # the channel and the designs do not depend on p_max
        return [(v, replace(base, p_max=10.0 ** (v / 10.0))) for v in spec.sweep.values]
    if kind == "users":
        return [
            (k, replace(base, K=int(k), N=_resolve_n_rule(spec.sweep.n_rule, int(k))))
            for k in spec.sweep.values
        ]
    if kind == "elements":
        return [(n, replace(base, N=int(n))) for n in spec.sweep.values]
    return [(0.0, base)]


def _run_trial_sweep(spec: ExperimentSpec, trial: int) -> list[SweepRow]:
    cells, _ = _plan_cells(spec)
    points = _point_configs(spec)
    sweep_param = {"power": "pmax_dbm", "users": "users", "elements": "elements"}[spec.sweep.kind]
    shared_channel = spec.sweep.kind == "power"
    rows: list[SweepRow] = []

    def channel_for(point_idx: int, cfg: SystemConfig):
        key_point = 0 if shared_channel else point_idx
        rng = rng_stream(cfg.seed, _SK_CHANNEL, key_point, trial)
        cs = draw_channel_set(cfg, rng)
        return cs, unit_variance_view(cs, cfg)

    if shared_channel:
        cfg0 = points[0][1]
        cs, cs_unit = channel_for(0, cfg0)
        designed = {}
        for design in dict.fromkeys(d for d, _ in cells):
            rng = _design_rng(cfg0, 0, trial, design)
            try:
                designed[design] = _compute_design(design, cs, cs_unit, cfg0, rng)
            except (DegenerateInputError, SingularityError) as exc:
                designed[design] = exc
        for value, cfg in points:
            for design, scheme in cells:
                got = designed[design]
                if isinstance(got, Exception):
                    rows.append(_error_row(design, scheme, sweep_param, value, trial, cfg.K, got))
                    continue
                theta, trace = got
                try:
                    rows.append(_evaluate_cell(design, scheme, cs, theta, trace, cfg,
                                               spec.relay, sweep_param, value, trial))
                except (DegenerateInputError, SingularityError) as exc:
                    rows.append(_error_row(design, scheme, sweep_param, value, trial, cfg.K, exc))
        return rows

    for point_idx, (value, cfg) in enumerate(points):
        cs, cs_unit = channel_for(point_idx, cfg)
        for design, scheme in cells:
            rng = _design_rng(cfg, point_idx, trial, design)
            try:
                theta, trace = _compute_design(design, cs, cs_unit, cfg, rng)
                rows.append(_evaluate_cell(design, scheme, cs, theta, trace, cfg,
                                           spec.relay, sweep_param, value, trial))
            except (DegenerateInputError, SingularityError) as exc:
                rows.append(_error_row(design, scheme, sweep_param, value, trial, cfg.K, exc))
    return rows


def _run_trial_convergence(spec: ExperimentSpec, trial: int) -> list[TraceRow]:
    cfg = spec.base
    rng = rng_stream(cfg.seed, _SK_CHANNEL, 0, trial)
    cs = draw_channel_set(cfg, rng)
    cs_unit = unit_variance_view(cs, cfg)
    rows: list[TraceRow] = []
    for design in spec.designs:
        if design == "bdris-null-mrt-init":
            theta0 = scattering.mrt_scattering(cs_unit).theta
        else:
            theta0 = scattering.random_init(cfg.N, _design_rng(cfg, 0, trial, design))
        run = scattering.dris_nulling if design == "dris-null" else scattering.ao_interference_nulling
        _, trace = run(cs_unit, theta0, cfg)
        rows.append(TraceRow(design, trial, 0, float(trace.residuals[0]), None))
        for i in range(1, trace.iterations + 1):
            rows.append(TraceRow(design, trial, i,
                                 float(trace.residuals[i]), float(trace.deltas[i - 1])))
    return rows


def _run_trial(spec: ExperimentSpec, trial: int):
    if spec.sweep.kind == "convergence":
        return _run_trial_convergence(spec, trial)
    return _run_trial_sweep(spec, trial)


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> SweepResult:
    """Execute the full design x scheme x point x trial matrix.

    Deterministic for a fixed seed regardless of worker count; trials are
    independent work items merged by a canonical sort.
    """
    _, skips = _plan_cells(spec)
    if spec.sweep.kind == "convergence":
        kind, sweep_param, k_max = "convergence", "convergence", spec.base.K
    else:
        kind = "sweep"
        sweep_param = {"power": "pmax_dbm", "users": "users", "elements": "elements"}[spec.sweep.kind]
        k_max = max(cfg.K for _, cfg in _point_configs(spec))

    rows: list = []
    if spec.trials > 0:
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                for chunk in pool.map(_run_trial, [spec] * spec.trials, range(spec.trials)):
                    rows.extend(chunk)
        else:
            for trial in range(spec.trials):
                rows.extend(_run_trial(spec, trial))
    rows.sort(key=_row_sort_key)
    return SweepResult(kind=kind, sweep_param=sweep_param, rows=rows,
                       skips=skips if kind == "sweep" else [], k_max=k_max)


def run_decomposition(cfg: SystemConfig, trials: int = 100) -> SweepResult:
    """Signal/interference/total power split for the relaxed and projected
    MRT and total-power designs, unit per-stream powers."""
    rows: list[DecompRow] = []
    for trial in range(trials):
        rng = rng_stream(cfg.seed, _SK_CHANNEL, 0, trial)
        cs = draw_channel_set(cfg, rng)
        ones = np.ones(cfg.K)
        variants = {
            ("mrt", "relaxed"): scattering.mrt_relaxed(cs),
            ("mrt", "projected"): scattering.mrt_scattering(cs).theta,
            ("maxF", "relaxed"): scattering.maxF_relaxed(cs),
            ("maxF", "projected"): scattering.maxF_scattering(cs).theta,
        }
        for (design, variant), theta in variants.items():
            split = metrics.power_decomposition(cs, theta, ones)
            rows.append(DecompRow(design, variant, trial, split.signal_power_sum,
                                  split.interference_power_sum, split.frob_power))
    rows.sort(key=lambda r: (r.design, r.variant, r.trial))
    return SweepResult(kind="decomposition", sweep_param="decomposition",
                       rows=rows, skips=[], k_max=cfg.K)


def _row_sort_key(row):
    if isinstance(row, SweepRow):
        return (row.design, row.bs_scheme, row.sweep_value, row.trial)
    if isinstance(row, TraceRow):
        return (row.design, row.trial, row.iteration)
    return (row.design, row.variant, row.trial)


def _fmt(x: float) -> str:
    return "%.17e" % x


def csv_header(res: SweepResult) -> list[str]:
    if res.kind == "convergence":
        return ["design", "trial", "iteration", "residual", "delta"]
    if res.kind == "decomposition":
        return ["design", "variant", "trial", "signal_power", "interference_power", "frob_power"]
    return (
        ["design", "bs_scheme", "sweep_param", "sweep_value", "trial",
         "sum_rate_bpshz", "null_residual", "iterations", "stop_reason"]
        + [f"sinr_db_{i + 1}" for i in range(res.k_max)]
    )


def _csv_record(res: SweepResult, row) -> list[str]:
    if res.kind == "convergence":
        return [row.design, str(row.trial), str(row.iteration), _fmt(row.residual),
                "" if row.delta is None else _fmt(row.delta)]
    if res.kind == "decomposition":
        return [row.design, row.variant, str(row.trial), _fmt(row.signal_power),
                _fmt(row.interference_power), _fmt(row.frob_power)]
    sinr = [_fmt(v) for v in row.sinr_db] + [""] * (res.k_max - len(row.sinr_db))
    return ([row.design, row.bs_scheme, row.sweep_param, _fmt(row.sweep_value),
             str(row.trial), _fmt(row.sum_rate), _fmt(row.null_residual),
             str(row.iterations), row.stop_reason] + sinr)


def emit_csv(res: SweepResult, path) -> None:
    """Write the result with its fixed schema; rows in canonical order."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(csv_header(res))
        for row in res.rows:
            writer.writerow(_csv_record(res, row))


def emit_json(res: SweepResult, path) -> None:
    """JSON mirror of the CSV content (same fields, native numbers)."""
    header = csv_header(res)
    payload = {
        "kind": res.kind,
        "sweep_param": res.sweep_param,
        "rows": [dict(zip(header, _json_record(res, row))) for row in res.rows],
        "skips": [dataclasses.asdict(s) for s in res.skips],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=1)
        fh.write("\n")


def _json_record(res: SweepResult, row):
    if res.kind == "convergence":
        return [row.design, row.trial, row.iteration, row.residual, row.delta]
    if res.kind == "decomposition":
        return [row.design, row.variant, row.trial, row.signal_power,
                row.interference_power, row.frob_power]
    sinr = list(row.sinr_db) + [None] * (res.k_max - len(row.sinr_db))
    return ([row.design, row.bs_scheme, row.sweep_param, row.sweep_value, row.trial,
             row.sum_rate, row.null_residual, row.iterations, row.stop_reason] + sinr)


@dataclass(frozen=True)
class Aggregate:
    design: str
    bs_scheme: str
    sweep_value: float
    n_trials: int
    sum_rate_mean: float
    sum_rate_min: float
    sum_rate_max: float
    null_residual_mean: float
    null_residual_min: float
    null_residual_max: float


def summarize(res: SweepResult):
    """Per-cell mean/min/max over trials.

    Sweep results aggregate (design, scheme, value); convergence results
    aggregate the residual per (design, iteration), which is exactly the
    band plotted around the mean convergence curve.
    """
    if not res.rows:
        raise ValueError("cannot summarize an empty result")
    if res.kind == "convergence":
        groups: dict = {}
        for row in res.rows:
            groups.setdefault((row.design, row.iteration), []).append(row.residual)
        return [
            {"design": d, "iteration": i, "n_trials": len(v),
             "residual_mean": float(np.mean(v)), "residual_min": float(np.min(v)),
             "residual_max": float(np.max(v))}
            for (d, i), v in sorted(groups.items())
        ]
    if res.kind == "decomposition":
        groups = {}
        for row in res.rows:
            groups.setdefault((row.design, row.variant), []).append(
                (row.signal_power, row.interference_power, row.frob_power))
        out = []
        for (d, var), vals in sorted(groups.items()):
            arr = np.asarray(vals)
            out.append({"design": d, "variant": var, "n_trials": len(vals),
                        "signal_mean": float(arr[:, 0].mean()),
                        "interference_mean": float(arr[:, 1].mean()),
                        "frob_mean": float(arr[:, 2].mean())})
        return out
    groups = {}
    for row in res.ok_rows():
        groups.setdefault((row.design, row.bs_scheme, row.sweep_value), []).append(row)
    out = []
    for (d, s, v), rws in sorted(groups.items()):
        rates = np.array([r.sum_rate for r in rws])
        resid = np.array([r.null_residual for r in rws])
        out.append(Aggregate(
            design=d, bs_scheme=s, sweep_value=v, n_trials=len(rws),
            sum_rate_mean=float(rates.mean()), sum_rate_min=float(rates.min()),
            sum_rate_max=float(rates.max()), null_residual_mean=float(resid.mean()),
            null_residual_min=float(resid.min()), null_residual_max=float(resid.max()),
        ))
    return out


def convergence_config(k: int = 8, n: int = 144, *, seed: int = 1234,
                       eps_rel: float = 1e-6, eps_null: float = 1e-10,
                       max_iter: int = 10_000) -> SystemConfig:
    """Unit-variance setup for convergence studies: the residual traces
    then measure the fading directions only, with no pathloss scale."""
    return SystemConfig(K=k, N=n, c0=1.0, d_bs_ris=1.0, d_ris_user=1.0, d0=1.0,
                        seed=seed, eps_rel=eps_rel, eps_null=eps_null, max_iter=max_iter)
