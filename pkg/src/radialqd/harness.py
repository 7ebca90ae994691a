"""Scenario configuration, seeded Monte Carlo execution and result emission."""

from __future__ import annotations

import csv
import json
import math
import os
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np
from scipy import stats

from .geometry import Domain, SensorPlacement, build_origin_grid, distances, exposed_mask, max_radius
from .observation import ObservationFrame, ObservationModel
from .rules import (INF, RULE_KINDS, SequentialDetector, TrialRecord, discovery_counts, make_instant,
                    make_oracle, make_rp, run_average_delay)
from .state_model import PriorParams, RadiusPath, sample_change_point

TRUTH_STREAM, OBS_STREAM = 0, 2
FLOAT_KEYS = ("rho", "rho1", "p_inf", "alpha", "unit_length", "fs", "beta", "propagation_speed",
              "sigma2", "gamma2", "theta", "d0")
INT_KEYS = ("trials", "seed", "clusters", "truth_M", "max_slots")
SWEEP_PARAMS = ("alpha", "rho1", "snr", "fs", "M")
CSV_COLUMNS = ("scenario", "procedure", "sweep_param", "sweep_value", "trials", "pfa", "pfa_ci_lo",
               "pfa_ci_hi", "add", "add_ci_lo", "add_ci_hi", "fdr", "fdr_ci_lo", "fdr_ci_hi", "mean_stop")
RECORD_COLUMNS = ("trial", "cluster", "procedure", "sweep_value", "alpha", "t", "T", "origin_x", "origin_y",
                  "deadline", "capped")


class ConfigError(ValueError):
    pass


def fs_to_rho(fs: float, beta: float) -> float:
    """Geometric onset parameter for an exponential onset time of mean ``beta`` seconds sampled at ``fs`` Hz."""
    return -math.expm1(-1.0 / (beta * fs))


@dataclass
class ProcedureConfig:
    name: str
    rule: str = "rp"
    M_detector: int = 1
    mismatch_increment: int = 1
    origins: Optional[str] = None  # instant only: free | grid | true
    gamma2: Optional[float] = None
    rho1: Optional[float] = None

    def __post_init__(self):
        if self.rule not in RULE_KINDS:
            raise ConfigError(f"procedures.{self.name}.rule: unknown rule {self.rule!r}")
        if self.M_detector < 1:
            raise ConfigError(f"procedures.{self.name}.M_detector: must be >= 1")
        if self.mismatch_increment < 1:
            raise ConfigError(f"procedures.{self.name}.mismatch_increment: must be >= 1")
        if self.origins not in (None, "free", "grid", "true"):
            raise ConfigError(f"procedures.{self.name}.origins: expected free|grid|true")


@dataclass
class SweepConfig:
    param: str
    values: list

    def __post_init__(self):
        if self.param not in SWEEP_PARAMS:
            raise ConfigError(f"sweep.param: expected one of {SWEEP_PARAMS}, got {self.param!r}")
        if not self.values or not all(math.isfinite(float(v)) for v in self.values):
            raise ConfigError("sweep.values: need a non-empty list of finite numbers")


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    domain: Domain = field(default_factory=lambda: Domain.square(10.0))
    sensor_policy: str = "per-slot-resample"
    L: int = 100
    sensor_locations: Optional[list] = None
    true_origin: str = "uniform"
    truth_M: int = 1
    rho: float = 0.02
    rho1: float = 0.25
    p_inf: float = 0.0
    model: ObservationModel = field(default_factory=ObservationModel)
    procedures: list = field(default_factory=list)
    alpha: float = 0.01
    trials: int = 2000
    seed: int = 0
    sweep: Optional[SweepConfig] = None
    clusters: int = 1
    deadline: float = INF
    unit_length: float = 1.0
    fs: Optional[float] = None
    beta: Optional[float] = None
    propagation_speed: float = 3.0e8
    max_slots: Optional[int] = None

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials: must be >= 1")
        if self.L < 0:
            raise ConfigError("L: must be >= 0")
        if self.clusters < 1:
            raise ConfigError("clusters: must be >= 1")
        if self.true_origin not in ("uniform", "grid"):
            raise ConfigError("true_origin: expected uniform|grid")
        if not 0 < self.alpha < 1:
            raise ConfigError("alpha: must lie in (0,1)")
        if not self.procedures:
            raise ConfigError("procedures: need at least one procedure")
        if len({p.name for p in self.procedures}) != len(self.procedures):
            raise ConfigError("procedures: names must be unique")
        if self.sweep is not None and self.sweep.param == "alpha":
            if not all(0 < a < 1 for a in self.sweep.values):
                raise ConfigError("sweep.values: alpha values must lie in (0,1)")
        if self.sweep is not None and self.sweep.param == "fs" and self.beta is None:
            raise ConfigError("beta: required for an fs sweep")
        if not (self.deadline > 0):
            raise ConfigError("deadline: must be positive")
        try:
            PriorParams(self.rho, self.rho1, self.p_inf)
        except ValueError as exc:
            raise ConfigError(f"prior: {exc}") from None

    # serialisation --------------------------------------------------------

    @classmethod
    def from_dict(cls, raw: dict) -> "ScenarioConfig":
        raw = dict(raw)
        kw: dict[str, Any] = {}
        for key in FLOAT_KEYS + INT_KEYS:
            if raw.get(key) is not None:
                try:
                    raw[key] = float(raw[key]) if key in FLOAT_KEYS else int(raw[key])
                except (TypeError, ValueError):
                    raise ConfigError(f"{key}: expected a number, got {raw[key]!r}") from None
        try:
            dom = raw.pop("domain", None)
            if dom is not None:
                kind = dom.get("kind", "rectangle")
                if kind == "rectangle":
                    kw["domain"] = Domain.rectangle(*dom["bounds"])
                else:
                    kw["domain"] = Domain.disk(dom["radius"], dom.get("center", (0.0, 0.0)))
            sensors = raw.pop("sensors", {}) or {}
            if "policy" in sensors:
                kw["sensor_policy"] = sensors["policy"]
            if "L" in sensors:
                kw["L"] = int(sensors["L"])
            if sensors.get("locations") is not None:
                kw["sensor_locations"] = sensors["locations"]
            mkeys = {k: raw.pop(k) for k in ("sigma2", "gamma2", "theta", "d0", "clamp") if k in raw}
            family = raw.pop("model", "flat")
            kw["model"] = ObservationModel(family="attenuating" if family == "attenuating" else family, **mkeys)
            kw["procedures"] = [ProcedureConfig(**p) for p in raw.pop("procedures", [])]
            sw = raw.pop("sweep", None)
            if sw:
                kw["sweep"] = SweepConfig(sw["param"], [float(v) for v in sw["values"]])
            dl = raw.pop("deadline", None)
            kw["deadline"] = INF if dl is None else float(dl)
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"config: malformed entry ({exc})") from None
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"config: {exc}") from None
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(raw) - known
        if unknown:
            raise ConfigError(f"config: unknown keys {sorted(unknown)}")
        kw.update(raw)
        return cls(**kw)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        text = Path(path).read_text()
        if str(path).endswith((".yaml", ".yml")):
            import yaml
            raw = yaml.safe_load(text)
        else:
            raw = json.loads(text)
        if not isinstance(raw, dict):
            raise ConfigError("config: top level must be a mapping")
        return cls.from_dict(raw)


@dataclass
class Resolved:
    """Scenario with one sweep value applied."""

    config: ScenarioConfig
    sweep_param: str
    sweep_value: float
    params: PriorParams
    model: ObservationModel
    unit_length: float
    alphas: tuple
    procedures: list
    max_slots: int


def resolve(cfg: ScenarioConfig, value: Optional[float] = None) -> Resolved:
    rho, rho1 = cfg.rho, cfg.rho1
    model = cfg.model
    unit = cfg.unit_length
    fs = cfg.fs
    alphas = (cfg.alpha,)
    procs = list(cfg.procedures)
    param = cfg.sweep.param if cfg.sweep else "alpha"
    if value is None:
        value = cfg.alpha if param == "alpha" else None
    if param == "alpha" and cfg.sweep:
        alphas = tuple(sorted({float(v) for v in cfg.sweep.values}, reverse=True))
    elif param == "rho1":
        rho1 = float(value)
    elif param == "snr":
        model = model.with_gamma2(model.sigma2 * 10 ** (float(value) / 10))
    elif param == "fs":
        fs = float(value)
    elif param == "M":
        procs = [replace(p, M_detector=int(value)) if p.rule in ("rp", "rp-mismatched", "t-star") else p
                 for p in procs]
    if fs is not None:
        unit = cfg.propagation_speed / fs
        if cfg.beta is not None:
            rho = fs_to_rho(fs, cfg.beta)
    params = PriorParams(rho, rho1, cfg.p_inf)
    if cfg.max_slots is not None:
        cap = int(cfg.max_slots)
    else:
        span = max_radius(cfg.domain, [cfg.domain.centroid], unit) * 2
        cap = int(math.ceil(10 * span / rho1 + 50 / rho))
    return Resolved(cfg, param, float(value) if value is not None else math.nan, params, model, unit,
                    alphas, procs, cap)


def sweep_values(cfg: ScenarioConfig) -> list:
    if cfg.sweep is None or cfg.sweep.param == "alpha":
        return [None]
    return list(cfg.sweep.values)


# trial simulation ------------------------------------------------------

def _rng(seed: int, *key) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


class _FilterFactory:
    def __init__(self, res: Resolved):
        self.res = res
        self._cache: dict = {}

    def build(self, proc: ProcedureConfig, true_origin):
        res, cfg = self.res, self.res.config
        params = res.params
        if proc.rho1 is not None:
            params = PriorParams(params.rho, proc.rho1, params.p_inf)
        model = res.model if proc.gamma2 is None else res.model.with_gamma2(proc.gamma2)
        if proc.rule == "oracle":
            return make_oracle(true_origin, cfg.domain, params, model, res.unit_length)
        if proc.rule == "instant-oracle" or (proc.rule == "instant" and proc.origins == "true"):
            return make_instant(cfg.domain, params, model, np.reshape(true_origin, (1, 2)), res.unit_length)
        key = (proc.name,)
        if key not in self._cache:
            if proc.rule == "instant":
                mode = proc.origins or ("free" if model.distance_free else "grid")
                grid = None if mode == "free" else build_origin_grid(cfg.domain, proc.M_detector)
                self._cache[key] = make_instant(cfg.domain, params, model, grid, res.unit_length)
            else:
                inc = proc.mismatch_increment if proc.rule == "rp-mismatched" else 1
                self._cache[key] = make_rp(cfg.domain, proc.M_detector, params, model, res.unit_length, inc)
        return self._cache[key]


def simulate_trial(res: Resolved, trial: int, factory: Optional[_FilterFactory] = None) -> list:
    """All clusters of one Monte Carlo run; every procedure sees the same frames."""
    cfg = res.config
    factory = factory or _FilterFactory(res)
    stop_alpha = min(res.alphas)
    out = []
    for k in range(cfg.clusters):
        truth_rng = _rng(cfg.seed, trial, k, TRUTH_STREAM)
        t = sample_change_point(res.params, truth_rng)
        if cfg.true_origin == "uniform":
            origin = cfg.domain.sample_uniform(truth_rng, 1)[0]
        else:
            grid = build_origin_grid(cfg.domain, cfg.truth_M).points
            origin = grid[int(truth_rng.integers(len(grid)))]
        path = RadiusPath(t, res.params.rho1, max_radius(cfg.domain, [origin], res.unit_length), truth_rng)
        placement = SensorPlacement(cfg.domain, cfg.L, cfg.sensor_policy, cfg.seed, key=(trial, k),
                                    locations=cfg.sensor_locations)
        obs_rng = _rng(cfg.seed, trial, k, OBS_STREAM)
        dets = [SequentialDetector(p.name, factory.build(p, origin), stop_alpha, p.rule == "t-star", k)
                for p in res.procedures]
        n = 0
        while any(d.active for d in dets) and n < res.max_slots and n + 1 < cfg.deadline:
            n += 1
            locs = placement.snapshot(n).locations
            d = distances(locs, origin)[0]
            x = res.model.sample(d, exposed_mask(d / res.unit_length, path(n)), obs_rng)
            frame = ObservationFrame(n, locs, x)
            for det in dets:
                if det.active:
                    det.observe(frame)
        for proc, det in zip(res.procedures, dets):
            capped = det.active and n >= res.max_slots
            for a in res.alphas:
                T = det.stop_time(a)
                out.append(TrialRecord(k, t, (float(origin[0]), float(origin[1])), T, cfg.deadline,
                                       capped and T is None, proc.name, a, trial, res.sweep_value))
    return out


def _run_chunk(args):
    res, trials = args
    factory = _FilterFactory(res)
    recs = []
    for i in trials:
        recs.extend(simulate_trial(res, i, factory))
    return recs


# aggregation -----------------------------------------------------------

@dataclass
class ResultRow:
    scenario: str
    procedure: str
    sweep_param: str
    sweep_value: float
    trials: int
    pfa: float
    pfa_ci_lo: float
    pfa_ci_hi: float
    add: float
    add_ci_lo: float
    add_ci_hi: float
    fdr: Optional[float] = None
    fdr_ci_lo: Optional[float] = None
    fdr_ci_hi: Optional[float] = None
    mean_stop: Optional[float] = None
    capped: int = 0


def clopper_pearson(k: int, n: int, level: float = 0.95) -> tuple[float, float]:
    a = 1 - level
    lo = 0.0 if k == 0 else float(stats.beta.ppf(a / 2, k, n - k + 1))
    hi = 1.0 if k == n else float(stats.beta.ppf(1 - a / 2, k + 1, n - k))
    return lo, hi


def one_sided_lower(k: int, n: int, level: float = 0.95) -> float:
    """One-sided Clopper-Pearson lower confidence bound."""
    return 0.0 if k == 0 else float(stats.beta.ppf(1 - level, k, n - k + 1))


def t_interval(x: Sequence[float], level: float = 0.95) -> tuple[float, float, float]:
    x = np.asarray(x, dtype=float)
    if len(x) == 0:
        return math.nan, math.nan, math.nan
    m = float(x.mean())
    if len(x) < 2:
        return m, math.nan, math.nan
    half = float(stats.t.ppf(0.5 + level / 2, len(x) - 1) * x.std(ddof=1) / math.sqrt(len(x)))
    return m, m - half, m + half


def aggregate(records: Sequence[TrialRecord], scenario: str, sweep_param: str,
              parallel: bool) -> list[ResultRow]:
    groups: dict = defaultdict(list)
    for r in records:
        sv = r.alpha if sweep_param == "alpha" else r.sweep_value
        groups[(r.procedure, sv)].append(r)
    rows = []
    for (proc, sv), recs in groups.items():
        recs = sorted(recs, key=lambda r: (r.trial, r.cluster))
        by_trial: dict = defaultdict(list)
        for r in recs:
            by_trial[r.trial].append(r)
        k_fa = sum(r.false_alarm for r in recs)
        lo, hi = clopper_pearson(k_fa, len(recs))
        if parallel:
            add_samples = [run_average_delay(v) for v in by_trial.values()]
        else:
            add_samples = [r.delay for r in recs if r.delay is not None]
        add, add_lo, add_hi = t_interval(add_samples)
        fdr = fdr_lo = fdr_hi = None
        if parallel:
            fdp = []
            for v in by_trial.values():
                V, R = discovery_counts(v)
                fdp.append(V / max(R, 1))
            fdr, fdr_lo, fdr_hi = t_interval(fdp)
            fdr_lo, fdr_hi = max(fdr_lo, 0.0), min(fdr_hi, 1.0)
        stops = [r.T for r in recs if r.declared]
        rows.append(ResultRow(scenario, proc, sweep_param, float(sv), len(by_trial), k_fa / len(recs), lo, hi,
                              add, add_lo, add_hi, fdr, fdr_lo, fdr_hi,
                              float(np.mean(stops)) if stops else None, sum(r.capped for r in recs)))
    return rows


@dataclass
class ScenarioResult:
    rows: list
    records: list


def run_scenario(cfg: ScenarioConfig, workers: int = 1, keep_records: bool = False,
                 chunk_size: int = 50) -> ScenarioResult:
    rows, all_records = [], []
    for value in sweep_values(cfg):
        res = resolve(cfg, value)
        chunks = [(res, range(lo, min(lo + chunk_size, cfg.trials))) for lo in range(0, cfg.trials, chunk_size)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                parts = list(pool.map(_run_chunk, chunks))
        else:
            parts = [_run_chunk(c) for c in chunks]
        records = [r for part in parts for r in part]
        order = {p.name: i for i, p in enumerate(res.procedures)}
        block = aggregate(records, cfg.name, res.sweep_param, cfg.clusters > 1)
        block.sort(key=lambda r: (order[r.procedure], -r.sweep_value if res.sweep_param == "alpha" else 0))
        rows.extend(block)
        if keep_records:
            all_records.extend(records)
    return ScenarioResult(rows, all_records)


# emission --------------------------------------------------------------

def _fmt(v) -> str:
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    if isinstance(v, float):
        return repr(round(v, 12))
    return str(v)


def write_csv(rows: Sequence[ResultRow], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in rows:
            d = asdict(r)
            w.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    return path


def write_plot_data(rows: Sequence[ResultRow], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("scenario", "procedure", "sweep_param", "sweep_value", "metric", "value", "ci_lo", "ci_hi"))
        for r in rows:
            for metric in ("pfa", "add", "fdr"):
                val = getattr(r, metric)
                if val is None:
                    continue
                w.writerow([r.scenario, r.procedure, r.sweep_param, _fmt(r.sweep_value), metric, _fmt(val),
                            _fmt(getattr(r, metric + "_ci_lo")), _fmt(getattr(r, metric + "_ci_hi"))])
    return path


def format_table(rows: Sequence[ResultRow], metric: str = "pfa") -> str:
    procs = list(dict.fromkeys(r.procedure for r in rows))
    values = list(dict.fromkeys(r.sweep_value for r in rows))
    if not rows:
        return ""
    param = rows[0].sweep_param
    width = max(len(p) for p in procs) + 2
    head = " " * width + "".join(f"{param}={v:<10g}" for v in values)
    lines = [f"{metric.upper()} ({rows[0].scenario})", head]
    cell = {(r.procedure, r.sweep_value): getattr(r, metric) for r in rows}
    for p in procs:
        parts = []
        for v in values:
            x = cell.get((p, v))
            parts.append(f"{'' if x is None else f'{x:.4f}':<{len(param) + 11}}")
        lines.append(f"{p:<{width}}" + "".join(parts))
    return "\n".join(lines)


def write_records(records: Sequence[TrialRecord], path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(RECORD_COLUMNS)
        for r in sorted(records, key=lambda r: (r.trial, r.cluster, r.procedure, r.sweep_value, -r.alpha)):
            w.writerow([r.trial, r.cluster, r.procedure, _fmt(r.sweep_value), _fmt(r.alpha), _fmt(r.t), _fmt(r.T),
                        _fmt(r.origin[0]), _fmt(r.origin[1]), _fmt(r.deadline), int(r.capped)])
    return path


def read_records(path) -> list[TrialRecord]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            def num(s, typ=float):
                return None if s == "" else typ(float(s))
            out.append(TrialRecord(int(row["cluster"]), num(row["t"], int), (float(row["origin_x"]), float(row["origin_y"])),
                                   num(row["T"], int), float(row["deadline"]), bool(int(row["capped"])),
                                   row["procedure"], float(row["alpha"]), int(row["trial"]),
                                   float(row["sweep_value"]) if row["sweep_value"] else math.nan))
    return out


def emit(rows: Sequence[ResultRow], out_dir, formats: Sequence[str] = ("csv",), stem: str = "results") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not os.access(out, os.W_OK):
        raise PermissionError(f"output directory {out} is not writable")
    written = []
    for fmt in formats:
        if fmt == "csv":
            written.append(write_csv(rows, out / f"{stem}.csv"))
        elif fmt == "plot-data":
            written.append(write_plot_data(rows, out / f"{stem}_plot.csv"))
        elif fmt == "table-text":
            metrics = ["pfa", "add"] + (["fdr"] if any(r.fdr is not None for r in rows) else [])
            p = out / f"{stem}.txt"
            p.write_text("\n\n".join(format_table(rows, m) for m in metrics) + "\n")
            written.append(p)
        else:
            raise ValueError(f"unknown output format {fmt!r}")
    return written
