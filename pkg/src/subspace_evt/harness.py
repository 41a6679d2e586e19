"""Config-driven Monte Carlo runner for null, tail, power and robustness studies.

Every replicate draws its noise from ``Seed(cell_master, replicate).generator(NOISE)``
and each grid cell regenerates its signal from its own cell seed, so results
do not depend on how replicates are split across worker processes.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import itertools
import json
import logging
import math
import os
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
from scipy.stats import norm

from .debias import DebiasInput, calibration_from_singular_values, debias_singular_values
from .errors import InvalidInputError
from .evt import aligned_distance, calibrate, gumbel_pdf, gumbel_quantile, ks_distance_to_gumbel, normalizing_sequences
from .generate import (
    ALTERNATIVE,
    NULL_FRAME,
    SIGNAL,
    NoiseSpec,
    Seed,
    SignalSpec,
    complement_frame,
    generate_noise,
    generate_signal,
    interpolate_to_distance,
    make_alternative_rowflip,
    random_frame,
)
from .linalg import truncated_svd
from .testing import frobenius_from_frames

log = logging.getLogger(__name__)

EXPERIMENT_KINDS = ("null_distribution", "tail_table", "power_rowflip", "power_phase", "robustness_t", "sbm_blocks")
NULL_KINDS = ("null_distribution", "tail_table", "robustness_t", "sbm_blocks")
SR_KINDS = ("power", "sqrt_log", "sqrt_rn_log", "linear", "value")
DEFAULT_SEED = 20240917
FAILURE_BUDGET = 0.01
_REPEAT_STRIDE = 1024


def package_version() -> str:
    try:
        from importlib.metadata import version

        return version("artifact")
    except Exception:
        return "0+unknown"


@dataclass
class ExperimentConfig:
    """One Monte Carlo study.

    ``signal`` holds defaults for every grid cell (``n``, ``m`` or
    ``m_ratio``, the ``s_r`` rule ``sr_kind``/``sr_exp``/``sr_coef``, the
    spread ``s_ratio = s_1 / s_r``); ``sweep`` is a list of grids, each
    mapping a parameter name to its values, whose Cartesian products are
    concatenated into cells. Cell parameters override ``signal`` entries.
    """

    name: str
    experiment_kind: str
    signal: dict[str, Any]
    noise: dict[str, Any]
    r: int
    alpha: float
    replicates: int
    sweep: list[dict[str, list]]
    master_seed: int = DEFAULT_SEED
    workers: int = 1
    repeats: int = 1
    refresh_signal: bool = False
    scale: float = 1.0

    def __post_init__(self):
        if self.experiment_kind not in EXPERIMENT_KINDS:
            raise InvalidInputError(f"unknown experiment_kind {self.experiment_kind!r}; expected one of {EXPERIMENT_KINDS}")
        if not self.sweep or any(not g or any(len(v) == 0 for v in g.values()) for g in self.sweep):
            raise InvalidInputError("sweep grids must be non-empty")
        if int(self.replicates) < 2:
            raise InvalidInputError("replicates must be at least 2")
        if not 0 < self.alpha < 1:
            raise InvalidInputError("alpha must lie in (0, 1)")
        if int(self.workers) < 1 or int(self.repeats) < 1 or int(self.r) < 1:
            raise InvalidInputError("workers, repeats and r must be positive")
        if not 0 <= int(self.master_seed) < 2**64:
            raise InvalidInputError("master_seed must be an unsigned 64-bit integer")
        NoiseSpec.from_dict(self.noise)

    def cells(self) -> list[dict[str, Any]]:
        out = []
        for grid in self.sweep:
            keys = list(grid)
            for combo in itertools.product(*(grid[k] for k in keys)):
                out.append(dict(zip(keys, combo)))
        return out

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        extra = set(d) - known
        if extra:
            raise InvalidInputError(f"unknown config fields: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def digest(self) -> str:
        """Hash of everything that affects results (worker count excluded)."""
        d = self.to_dict()
        d.pop("workers")
        return hashlib.sha256(json.dumps(d, sort_keys=True).encode()).hexdigest()[:16]

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def scaled(self, scale: float) -> "ExperimentConfig":
        """Multiply every dimension and the replicate count by ``scale``."""
        if not scale > 0:
            raise InvalidInputError("scale must be positive")
        if scale == 1:
            return self.replace()

        def dim(n):
            return max(2 * self.r + 2, 8, 2 * round(n * scale / 2))

        signal = dict(self.signal)
        for key in ("n", "m"):
            if key in signal:
                signal[key] = dim(signal[key])
        sweep = [{k: ([dim(v) for v in vals] if k in ("n", "m") else list(vals)) for k, vals in g.items()} for g in self.sweep]
        # row-discrepancy counts shrink with n; 1 stays 1
        for g in sweep:
            if "xi" in g:
                cap = min(g.get("n", [signal.get("n", 2)])) - 1
                g["xi"] = sorted({1 if v == 1 else min(cap, max(1, round(v * scale))) for v in g["xi"]})
        if "xi" in signal and signal["xi"] != 1:
            signal["xi"] = min(signal.get("n", 2) - 1, max(1, round(signal["xi"] * scale)))
        reps = max(2, round(self.replicates * scale))
        return self.replace(signal=signal, sweep=sweep, replicates=reps, scale=self.scale * scale)


def signal_strength(kind: str, n: int, r: int, sigma: float = 1.0, exponent: float | None = None, coef: float = 1.0) -> float:
    """``s_r`` from a growth rule: n^e, sqrt(n) log^e n, sqrt(rn) log^e n or n."""
    L = math.log(n)
    if kind == "power":
        base = n**exponent
    elif kind == "sqrt_log":
        base = math.sqrt(n) * L**exponent
    elif kind == "sqrt_rn_log":
        base = math.sqrt(r * n) * L**exponent
    elif kind == "linear":
        base = float(n)
    else:
        raise InvalidInputError(f"unknown signal-strength rule {kind!r}; expected one of {SR_KINDS}")
    return coef * sigma * base


def sbm_parameters(strength: str, n: int) -> tuple[float, float]:
    """Within/between block probabilities for the strong, medium and weak regimes."""
    L = math.log(n)
    table = {"strong": L / math.sqrt(n), "medium": math.sqrt(L / n), "weak": 1 / math.sqrt(n)}
    if strength not in table:
        raise InvalidInputError(f"unknown SBM strength {strength!r}")
    p = table[strength]
    return p, p / L


@dataclass
class Cell:
    """Fully resolved grid cell."""

    params: dict[str, Any]
    n: int
    m: int
    r: int
    s: np.ndarray
    noise: NoiseSpec

    @property
    def sigma(self) -> float:
        if self.noise.kind in ("iid_gaussian", "student_t"):
            return self.noise.sigma
        return float(math.sqrt(np.mean(self.noise.column_variances(self.m))))


def resolve_cell(cfg: ExperimentConfig, params: dict[str, Any]) -> Cell:
    p = {**cfg.signal, **params}
    n = int(p["n"])
    r = int(p.get("r", cfg.r))
    noise_d = dict(cfg.noise)
    if "nu" in p:
        noise_d.update(kind="student_t", nu=float(p["nu"]))
    if "family" in p:
        pp, qq = sbm_parameters(p.get("strength", "strong"), n)
        noise_d = {"kind": f"sbm_{p['family']}", "p": pp, "q": qq}
    noise = NoiseSpec.from_dict(noise_d)
    if cfg.experiment_kind == "sbm_blocks":
        return Cell(params, n, n, 2, np.array([n * (noise.p + noise.q) / 2, n * (noise.p - noise.q) / 2]), noise)
    m = n if cfg.experiment_kind == "power_rowflip" else int(p.get("m", round(p.get("m_ratio", 1.0) * n)))
    sigma = noise.sigma if noise.kind in ("iid_gaussian", "student_t") else 1.0
    if p.get("sr_kind", "power") == "value":
        s_r = float(p["sr_value"])
    else:
        s_r = signal_strength(p.get("sr_kind", "power"), n, r, sigma, p.get("sr_exp"), p.get("sr_coef", 1.0))
    s = np.linspace(p.get("s_ratio", 3.0) * s_r, s_r, r) if r > 1 else np.array([s_r])
    return Cell(params, n, m, r, s, noise)


# -- per-cell context and replicate kernels ---------------------------------


@dataclass
class _Context:
    kind: str
    cell: Cell
    M: np.ndarray | None = None
    U0: np.ndarray | None = None
    V0: np.ndarray | None = None
    oracle: Any = None
    extra: dict[str, Any] = field(default_factory=dict)
    unreachable: str | None = None


def _cell_seed(cfg: ExperimentConfig, index: int, repeat: int) -> Seed:
    return Seed(int(cfg.master_seed)).child(index * _REPEAT_STRIDE + repeat)


def _build_context(cfg: ExperimentConfig, index: int, repeat: int, seed: Seed | None = None) -> _Context:
    cell = resolve_cell(cfg, cfg.cells()[index])
    seed = seed or _cell_seed(cfg, index, repeat)
    kind = cfg.experiment_kind
    ctx = _Context(kind, cell)
    if kind in NULL_KINDS:
        if kind == "sbm_blocks":
            spec = SignalSpec(cell.n, cell.n, 2, factor_mode="sbm_two_block", p=cell.noise.p, q=cell.noise.q)
            D = cell.noise.column_variances(cell.m, row_block=0)
        else:
            spec = SignalSpec(cell.n, cell.m, cell.r, tuple(cell.s))
            D = cell.noise.column_variances(cell.m)
            D = float(D[0]) if np.all(D == D[0]) else D
        ctx.M, triple = generate_signal(spec, seed)
        ctx.U0, ctx.V0 = triple.U, triple.V
        ctx.oracle = calibrate(triple.s, cell.n, triple.V, D)
    elif kind == "power_rowflip":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            u0, u1 = make_alternative_rowflip(cell.n, int(cell.params.get("xi", cfg.signal.get("xi", 1))))
        v = np.full(cell.n, 1 / math.sqrt(cell.n))
        ctx.M = cell.s[0] * np.outer(u1, v)
        ctx.U0, ctx.V0 = u0[:, None], v[:, None]
        ctx.extra["d_n"] = 2 / math.sqrt(cell.n)
    elif kind == "power_phase":
        U0 = random_frame(cell.n, cell.r, seed.generator(NULL_FRAME))
        W = complement_frame(U0, seed.generator(ALTERNATIVE))
        a_tilde = normalizing_sequences(2 * cell.sigma**2 / cell.s[-1] ** 2, 1, cell.n)[0]
        target = float(cell.params.get("d_factor", 0.0)) * a_tilde
        ctx.extra.update(a_tilde_n=a_tilde, d_target=target)
        try:
            U1, t = interpolate_to_distance(U0, W, target)
        except InvalidInputError as exc:
            ctx.unreachable = str(exc)
            return ctx
        V = random_frame(cell.m, cell.r, seed.generator(SIGNAL))
        ctx.M = (U1 * cell.s) @ V.T
        ctx.U0 = U0
        ctx.extra.update(t=t, d_n=float(np.max(np.linalg.norm(U0 - U1, axis=1))))
    return ctx


def _replicate(ctx: _Context, seed: Seed, cfg: ExperimentConfig, index: int) -> dict[str, float]:
    cell = ctx.cell
    if cfg.refresh_signal and ctx.kind in NULL_KINDS:
        ctx = _build_context(cfg, index, 0, seed.replicate(seed.replicate_index))
    Mhat = ctx.M + generate_noise(cell.noise, cell.n, cell.m, seed)
    r = ctx.U0.shape[1]
    trip = truncated_svd(Mhat, r, check_gap=False)
    dist = aligned_distance(trip.U, ctx.U0)
    out: dict[str, float] = {}
    if ctx.kind in NULL_KINDS:
        out["T_oracle"] = ctx.oracle.standardize(dist)
        if ctx.kind == "sbm_blocks":
            return out
        out["T_uncorrected"] = calibration_from_singular_values(trip.s, cell.sigma, cell.n).standardize(dist)
    stilde = debias_singular_values(DebiasInput(trip.s, cell.n, cell.m, cell.sigma))
    out["T_plugin"] = calibration_from_singular_values(stilde, cell.sigma, cell.n).standardize(dist)
    if ctx.kind == "power_rowflip":
        out["T_frob"] = frobenius_from_frames(trip.U, trip.V, ctx.U0, ctx.V0, stilde[-1], cell.sigma)
    return out


_CACHE: dict[tuple, _Context] = {}


def _run_chunk(payload: tuple) -> tuple[int, int, list, float]:
    cfg_dict, index, repeat, start, stop = payload
    t0 = time.perf_counter()
    cfg = ExperimentConfig.from_dict(cfg_dict)
    key = (cfg.digest(), index, repeat)
    ctx = _CACHE.get(key)
    if ctx is None:
        _CACHE.clear()
        ctx = _CACHE[key] = _build_context(cfg, index, repeat)
    cell_seed = _cell_seed(cfg, index, repeat)
    rows = []
    for i in range(start, stop):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                rows.append((i, _replicate(ctx, cell_seed.replicate(i), cfg, index)))
        except Exception as exc:  # recorded, not fatal
            rows.append((i, f"{type(exc).__name__}: {exc}"))
    return index, repeat, rows, time.perf_counter() - t0


# -- results ------------------------------------------------------------------


@dataclass
class CellResult:
    index: int
    params: dict[str, Any]
    samples: dict[str, np.ndarray]
    metrics: dict[str, Any]
    failures: list[tuple[int, int, str]]
    valid: bool
    wall_time: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    cells: list[CellResult]
    metadata: dict[str, Any]

    def cell(self, **params) -> CellResult:
        for c in self.cells:
            if all(c.params.get(k) == v for k, v in params.items()):
                return c
        raise KeyError(params)


def _mc_se(p: float, n: int) -> float:
    return math.sqrt(p * (1 - p) / n) if n > 0 else float("nan")


def _summarize(cfg: ExperimentConfig, ctx: _Context, per_repeat: list[dict[str, np.ndarray]]) -> dict[str, Any]:
    crit = gumbel_quantile(1 - cfg.alpha)
    metrics: dict[str, Any] = {}
    names = list(per_repeat[0])
    for name in names:
        xs = [rep[name][np.isfinite(rep[name])] for rep in per_repeat]
        pooled = np.concatenate(xs)
        k = pooled.size
        if name == "T_frob":
            rate = float(np.mean(pooled >= norm.ppf(1 - cfg.alpha))) if k else float("nan")
        else:
            rate = float(np.mean(pooled >= crit)) if k else float("nan")
        key = name[2:]
        metrics[f"reject_{key}"] = rate
        metrics[f"se_{key}"] = _mc_se(rate, k)
        if ctx.kind in NULL_KINDS and k >= 2:
            metrics[f"ks_{key}"] = ks_distance_to_gumbel(pooled)
            metrics[f"mean_{key}"] = float(np.mean(pooled))
            q = gumbel_quantile([0.1, 0.2, 0.8, 0.9])
            # average of per-repeat estimates over repeats that produced samples
            live = [x for x in xs if x.size]
            metrics[f"upper90_{key}"] = float(np.mean([np.mean(x >= q[3]) for x in live]))
            metrics[f"lower10_{key}"] = float(np.mean([np.mean(x <= q[0]) for x in live]))
            metrics[f"mid60_{key}"] = float(np.mean([np.mean((x >= q[1]) & (x <= q[2])) for x in live]))
    for k, v in ctx.extra.items():
        metrics[k] = float(v)
    if ctx.kind in ("power_phase",) and "d_n" in ctx.extra:
        metrics["d_over_a"] = ctx.extra["d_n"] / ctx.extra["a_tilde_n"]
    if ctx.kind == "power_rowflip":
        metrics["a_tilde_n"] = normalizing_sequences(2 * ctx.cell.sigma**2 / ctx.cell.s[-1] ** 2, 1, ctx.cell.n)[0]
    metrics["s_r"] = float(ctx.cell.s[-1])
    metrics["n"] = ctx.cell.n
    metrics["m"] = ctx.cell.m
    return metrics


def run_experiment(cfg: ExperimentConfig, workers: int | None = None) -> ExperimentResult:
    """Run every cell; the result is independent of the worker count."""
    workers = int(workers or cfg.workers)
    cells = cfg.cells()
    cfg_dict = cfg.to_dict()
    reps = int(cfg.replicates)
    chunk = max(1, math.ceil(reps / (4 * workers))) if workers > 1 else reps
    tasks = [
        (cfg_dict, i, k, a, min(a + chunk, reps))
        for i in range(len(cells))
        for k in range(cfg.repeats)
        for a in range(0, reps, chunk)
    ]
    t0 = time.perf_counter()
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outputs = list(pool.map(_run_chunk, tasks))
    else:
        outputs = [_run_chunk(t) for t in tasks]
    total_wall = time.perf_counter() - t0

    grouped: dict[tuple[int, int], list] = {}
    times = [0.0] * len(cells)
    for index, repeat, rows, dt in outputs:
        grouped.setdefault((index, repeat), []).extend(rows)
        times[index] += dt
    results = []
    for i, params in enumerate(cells):
        ctx = _build_context(cfg, i, 0)
        if ctx.unreachable:
            results.append(CellResult(i, params, {}, {"note": "unreachable"}, [], False, times[i]))
            continue
        per_repeat, failures = [], []
        # statistic names from any repeat; a fully failed repeat contributes NaNs
        names = next((list(v) for k in range(cfg.repeats) for _, v in grouped[(i, k)] if isinstance(v, dict)), [])
        for k in range(cfg.repeats):
            rows = sorted(grouped[(i, k)], key=lambda row: row[0])
            arrays = {name: np.full(reps, np.nan) for name in names}
            for j, v in rows:
                if isinstance(v, dict):
                    for name in names:
                        arrays[name][j] = v[name]
                else:
                    failures.append((k, j, v))
            per_repeat.append(arrays)
        if not per_repeat[0]:
            results.append(CellResult(i, params, {}, {"note": "all replicates failed"}, failures, False, times[i]))
            continue
        metrics = _summarize(cfg, ctx, per_repeat)
        samples = {name: np.concatenate([rep[name] for rep in per_repeat]) for name in per_repeat[0]}
        valid = len(failures) <= FAILURE_BUDGET * reps * cfg.repeats
        results.append(CellResult(i, params, samples, metrics, failures, valid, times[i]))
        log.info("cell %d %s: %s", i, params, {k: metrics[k] for k in list(metrics)[:4]})
    meta = {
        "config_hash": cfg.digest(),
        "master_seed": int(cfg.master_seed),
        "version": package_version(),
        "workers": workers,
        "wall_time": total_wall,
        "repeats": cfg.repeats,
        "signal_refreshed_between_repeats": cfg.repeats > 1,
        "signal_refreshed_per_replicate": bool(cfg.refresh_signal),
    }
    return ExperimentResult(cfg, results, meta)


# -- output -------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _write_rows(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _ordered_union(dicts) -> list[str]:
    keys: list[str] = []
    for d in dicts:
        for k in d:
            if k not in keys:
                keys.append(k)
    return keys


def histogram_table(x: np.ndarray, bins: int = 40) -> list[tuple[float, float, int, float, float]]:
    x = x[np.isfinite(x)]
    counts, edges = np.histogram(x, bins=bins)
    width = np.diff(edges)
    density = counts / (x.size * width)
    mid = (edges[:-1] + edges[1:]) / 2
    return list(zip(edges[:-1], edges[1:], counts, density, gumbel_pdf(mid)))


def qq_table(x: np.ndarray) -> list[tuple[float, float]]:
    x = np.sort(x[np.isfinite(x)])
    k = x.size
    return list(zip(x, gumbel_quantile((np.arange(1, k + 1) - 0.5) / k)))


def emit_outputs(res: ExperimentResult, directory) -> Path:
    """Write ``<directory>/<name>/{results.csv, samples.csv, summary.json, plots/*.csv}``."""
    root = Path(directory) / res.config.name
    plots = root / "plots"
    plots.mkdir(parents=True, exist_ok=True)
    pkeys = _ordered_union(c.params for c in res.cells)
    mkeys = _ordered_union(c.metrics for c in res.cells)
    _write_rows(
        root / "results.csv",
        ["cell", *pkeys, *mkeys, "replicates", "failures", "valid"],
        (
            [c.index, *(c.params.get(k, "") for k in pkeys), *(c.metrics.get(k, "") for k in mkeys),
             res.config.replicates * res.config.repeats, len(c.failures), c.valid]
            for c in res.cells
        ),
    )
    if res.config.experiment_kind in NULL_KINDS:
        names = _ordered_union(c.samples for c in res.cells)
        reps = res.config.replicates

        def sample_rows():
            for c in res.cells:
                total = len(next(iter(c.samples.values()))) if c.samples else 0
                for j in range(total):
                    yield [c.index, j // reps, j % reps, *(c.samples[n][j] if n in c.samples else "" for n in names)]

        _write_rows(root / "samples.csv", ["cell", "repeat", "replicate", *names], sample_rows())
        for c in res.cells:
            for name, x in c.samples.items():
                if np.isfinite(x).sum() < 2:
                    continue
                tag = f"cell{c.index}_{name[2:]}"
                _write_rows(plots / f"hist_{tag}.csv", ["bin_left", "bin_right", "count", "density", "gumbel_density"], histogram_table(x))
                _write_rows(plots / f"qq_{tag}.csv", ["empirical", "gumbel"], qq_table(x))
    else:
        rates = [k for k in mkeys if k.startswith(("reject_", "se_", "d_"))]
        _write_rows(
            plots / "contour.csv",
            [*pkeys, *rates],
            ([*(c.params.get(k, "") for k in pkeys), *(c.metrics.get(k, "") for k in rates)] for c in res.cells),
        )
    summary = {
        "name": res.config.name,
        "config": res.config.to_dict(),
        **res.metadata,
        "cells": [
            {"cell": c.index, "params": c.params, "valid": c.valid, "failures": len(c.failures),
             "failure_examples": [f[2] for f in c.failures[:3]], "wall_time": c.wall_time}
            for c in res.cells
        ],
    }
    (root / "summary.json").write_text(json.dumps(summary, indent=2, default=_fmt))
    return root


# -- presets --------------------------------------------------------------------


def builtin_experiments(scale: float = 1.0) -> list[ExperimentConfig]:
    gauss = {"kind": "iid_gaussian", "sigma": 1.0}
    presets = [
        ExperimentConfig(
            "fig1_null", "null_distribution",
            {"n": 1000, "m_ratio": 1.2, "sr_kind": "sqrt_rn_log", "sr_exp": 1.01, "sr_coef": 0.25, "s_ratio": 4.0},
            gauss, r=5, alpha=0.05, replicates=1800, sweep=[{"n": [1000]}],
        ),
        ExperimentConfig(
            "table1_tails", "tail_table",
            {"m_ratio": 1.2, "sr_kind": "power", "s_ratio": 3.0},
            gauss, r=5, alpha=0.1, replicates=1000, repeats=5,
            sweep=[{"n": [100, 800, 1600], "sr_exp": [0.5, 0.625, 0.75, 0.875, 1.0]}],
        ),
        ExperimentConfig(
            "table2_power", "power_rowflip", {"xi": 1},
            gauss, r=1, alpha=0.05, replicates=2000,
            sweep=[
                {"n": [20, 100, 400], "sr_kind": ["sqrt_log"], "sr_exp": [2 / 3]},
                {"n": [20, 100, 400], "sr_kind": ["power"], "sr_exp": [0.8]},
            ],
        ),
        ExperimentConfig(
            "fig2_contour", "power_rowflip", {"n": 400, "sr_kind": "power"},
            gauss, r=1, alpha=0.05, replicates=500,
            sweep=[{"sr_exp": [0.55, 0.6, 0.65, 0.7, 0.75, 0.8], "xi": [1, 50, 100, 200, 300, 350, 399]}],
        ),
        ExperimentConfig(
            "fig3_phase", "power_phase", {"m_ratio": 1.2, "s_ratio": 3.0},
            gauss, r=10, alpha=0.05, replicates=400,
            sweep=[
                {"n": [200, 400, 800], "sr_kind": ["sqrt_log"], "sr_exp": [2 / 3], "sr_coef": [1.2],
                 "d_factor": [0.0, 0.03, 0.1, 0.3, 1.0, 2.0, 3.0, 5.0, 10.0, 30.0]},
                {"n": [200, 400, 800], "sr_kind": ["linear"],
                 "d_factor": [0.0, 0.03, 0.1, 0.3, 1.0, 2.0, 3.0, 5.0, 10.0, 30.0]},
            ],
        ),
        ExperimentConfig(
            "fig4_student_t", "robustness_t",
            {"n": 2500, "m": 3000, "sr_kind": "linear", "s_ratio": 3.0},
            {"kind": "student_t", "sigma": 1.0, "nu": 10.0}, r=5, alpha=0.05, replicates=1800,
            sweep=[{"nu": [10.0, 5.0, 4.0]}],
        ),
        ExperimentConfig(
            "appF_sbm", "sbm_blocks", {"n": 1000},
            {"kind": "sbm_bernoulli", "p": 0.5, "q": 0.1}, r=2, alpha=0.05, replicates=1800,
            sweep=[{"family": ["bernoulli", "poisson", "gaussian"], "strength": ["strong", "medium", "weak"]}],
        ),
    ]
    return [p.scaled(scale) if scale != 1 else p for p in presets]


def preset(name: str, scale: float = 1.0) -> ExperimentConfig:
    table = {c.name: c for c in builtin_experiments(scale)}
    if name not in table:
        raise InvalidInputError(f"unknown preset {name!r}; available: {', '.join(table)}")
    return table[name]


def default_workers() -> int:
    return max(1, min(4, os.cpu_count() or 1))
