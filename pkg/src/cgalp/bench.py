"""Experiment harness: instances, cached references, CSV traces, rate fits.

Every run writes one CSV per solver plus a JSON summary.  Floats are
written with ``repr`` so identical configurations give byte-identical
files; wall-clock columns are opt-in for the same reason.

Reference solutions are obtained by running the solvers themselves for
``ref_iters`` iterations and are cached as ``.npz`` files under
``$CGALP_BENCH_CACHE`` (default ``<out>/.refcache``).
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from typing import NamedTuple, Optional

import numpy as np

from .gfb import feasibility, gfb_bregman_criterion, objective_Q, run_gfb
from .linalg import norm
from .problems import gen_matcomp_instance, gen_projection_instance, matcomp_problem
from .schedule import ParameterSchedule
from .solver import lagrangian, run, CompositeProblem

CACHE_ENV = "CGALP_BENCH_CACHE"
B_DEFAULT = 1.0 / 3.0 - 0.01

CGALP_COLUMNS = ("k", "gamma_k", "beta_k", "feas_gap", "erg_feas_gap", "lagrangian_gap",
                 "erg_lagrangian_gap", "mu_norm")
GFB_COLUMNS = ("k", "bregman_criterion", "feas_nuc", "feas_l1")


class CacheMissError(RuntimeError):
    """A reference is needed, not cached, and reference runs are disabled."""


def default_delta(b) -> float:
    """Smoothing exponent used when none is given: 1/2 for ``b = 0``, else just above ``2b``."""
    return 0.5 if b == 0 else 2.0 * b + 0.01


def default_rho(b, c=1.0) -> float:
    """Penalty just above the coupling threshold ``2^(2-b)/c``."""
    return 2.0 ** (2.0 - b) / c + 1.0


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment.

    ``ref`` holds the schedule ``(a, b, delta, rho, c)`` of the CGALP
    reference run; ``None`` means the run's own schedule, except for the
    projection experiment, which by default shares one reference computed
    with ``(0, 1/3 - 0.01)`` (see :func:`reference_schedule`).
    """

    experiment: str = "projection"
    N: int = 32
    density: float = 0.8
    a: float = 0.0
    b: float = 0.0
    delta: Optional[float] = None
    rho: Optional[float] = None
    c: float = 1.0
    iters: int = 10_000
    ref_iters: int = 100_000
    seed: int = 0
    out: str = "bench-out"
    solvers: tuple = ("cgalp", "gfb")
    ref: Optional[tuple] = None
    stride: int = 1
    record_time: bool = False
    allow_ref: bool = True
    name: Optional[str] = None

    def __post_init__(self):
        if self.experiment not in ("projection", "matcomp"):
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if not 0.0 < self.density <= 1.0:
            raise ValueError("density must lie in (0, 1]")
        if self.iters < 1 or self.stride < 1:
            raise ValueError("iters and stride must be positive")
        if self.iters > self.ref_iters:
            raise ValueError("iters must not exceed ref_iters")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.experiment == "matcomp" and self.N < 5:
            raise ValueError("N must be at least 5")
        bad = set(self.solvers) - {"cgalp", "gfb"}
        if bad or not self.solvers:
            raise ValueError(f"unknown solvers {sorted(bad)}")
        object.__setattr__(self, "solvers", tuple(self.solvers))
        if self.ref is not None:
            object.__setattr__(self, "ref", tuple(float(v) for v in self.ref))

    @property
    def schedule(self) -> ParameterSchedule:
        d = default_delta(self.b) if self.delta is None else self.delta
        r = default_rho(self.b, self.c) if self.rho is None else self.rho
        return ParameterSchedule(a=self.a, b=self.b, delta=d, rho=r, c=self.c)

    @property
    def stem(self) -> str:
        if self.name:
            return self.name
        s = self.schedule
        return f"{self.experiment}_a{s.a:g}_b{s.b:.4g}_seed{self.seed}"


def reference_schedule(cfg: ExperimentConfig) -> ParameterSchedule:
    if cfg.ref is not None:
        return ParameterSchedule(*cfg.ref)
    if cfg.experiment == "projection":
        return ParameterSchedule(a=0.0, b=B_DEFAULT, delta=default_delta(B_DEFAULT),
                                 rho=default_rho(B_DEFAULT), c=1.0)
    return cfg.schedule


# ---------------------------------------------------------------- rate fits

class RateFit(NamedTuple):
    slope: float
    intercept: float
    r_squared: float
    k_range: tuple
    n_points: int
    n_excluded: int


def fit_rate(ks, values, k_lo, k_hi) -> RateFit:
    """Least-squares line through ``(log k, log value)`` for ``k_lo <= k <= k_hi``.

    Rows with a nonpositive or non-finite value are dropped and counted.
    """
    ks = np.asarray(ks, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    if ks.shape != values.shape:
        raise ValueError("ks and values differ in length")
    sel = (ks >= k_lo) & (ks <= k_hi) & (ks > 0)
    ok = sel & np.isfinite(values) & (values > 0)
    n = int(ok.sum())
    if n < 10:
        raise ValueError(f"only {n} usable points in [{k_lo}, {k_hi}]")
    x = np.log(ks[ok])
    y = np.log(values[ok])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), min(1.0, max(0.0, r2)),
                   (int(k_lo), int(k_hi)), n, int(sel.sum()) - n)


def decade_medians(ks, values, centers=(100, 1000, 10_000)) -> list:
    """Median of ``values`` over ``[c/sqrt(10), c*sqrt(10)]`` for each center ``c``.

    Windows are clipped to the recorded range; an empty window gives ``nan``.
    """
    ks = np.asarray(ks, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    r = math.sqrt(10.0)
    out = []
    for c in centers:
        sel = (ks >= c / r) & (ks <= c * r)
        out.append(float(np.median(values[sel])) if sel.any() else math.nan)
    return out


def read_csv(path) -> dict:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = {h: np.array([float(r[i]) for r in body]) for i, h in enumerate(header)}
    return cols


def fit_rate_csv(path, column, k_lo, k_hi) -> RateFit:
    cols = read_csv(path)
    if column not in cols:
        raise KeyError(f"no column {column!r} in {path}; have {list(cols)}")
    return fit_rate(cols["k"], cols[column], k_lo, k_hi)


def default_fit_range(iters):
    return max(10, iters // 100), iters


# ------------------------------------------------------------- reference cache

def cache_dir(cfg: ExperimentConfig) -> str:
    return os.environ.get(CACHE_ENV) or os.path.join(cfg.out, ".refcache")


def _cache_key(cfg: ExperimentConfig, solver, ref_iters) -> str:
    payload = {"experiment": cfg.experiment, "seed": int(cfg.seed), "solver": solver,
               "ref_iters": int(ref_iters)}
    if cfg.experiment == "matcomp":
        payload.update(N=cfg.N, density=cfg.density)
    if solver == "cgalp":
        payload["schedule"] = reference_schedule(cfg).as_dict()
    blob = json.dumps(payload, sort_keys=True).encode()
    return f"{cfg.experiment}-{solver}-{hashlib.sha256(blob).hexdigest()[:16]}"


def _atomic_savez(path, **arrays):
    d = os.path.dirname(path)
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp.npz")
    try:
        with os.fdopen(fd, "wb") as fh:
            np.savez(fh, **arrays)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _cached(cfg, solver, ref_iters, compute):
    path = os.path.join(cache_dir(cfg), _cache_key(cfg, solver, ref_iters) + ".npz")
    if os.path.exists(path):
        with np.load(path) as z:
            return {k: z[k] for k in z.files}
    if not cfg.allow_ref:
        raise CacheMissError(f"no cached {solver} reference at {path} and reference runs "
                             f"are disabled")
    arrays = compute()
    _atomic_savez(path, **arrays)
    return arrays


# ------------------------------------------------------------------ problems

def build_problem(cfg: ExperimentConfig):
    if cfg.experiment == "projection":
        return gen_projection_instance(cfg.seed).problem, None
    inst = gen_matcomp_instance(cfg.N, cfg.density, cfg.seed)
    return matcomp_problem(inst.data), inst


def cgalp_reference(cfg: ExperimentConfig, ref_iters=None) -> dict:
    """``x*`` (last iterate) and ``mu*`` after ``ref_iters`` reference iterations."""
    ref_iters = cfg.ref_iters if ref_iters is None else ref_iters

    def compute():
        p, _ = build_problem(cfg)
        r = run(p, reference_schedule(cfg), max_iters=ref_iters)
        return {"x": r.state.x, "mu": r.state.mu}

    return _cached(cfg, "cgalp", ref_iters, compute)


def gfb_reference(cfg: ExperimentConfig, ref_iters=None) -> dict:
    ref_iters = cfg.ref_iters if ref_iters is None else ref_iters

    def compute():
        inst = gen_matcomp_instance(cfg.N, cfg.density, cfg.seed)
        st = run_gfb(inst.data, ref_iters)
        return {"Z": st.Z, "W": st.W, "U": st.U}

    return _cached(cfg, "gfb", ref_iters, compute)


# ------------------------------------------------------------------- traces

def _fmt(v) -> str:
    return repr(int(v)) if isinstance(v, (int, np.integer)) else repr(float(v))


class _CsvSink:
    def __init__(self, path, columns):
        self.path = path
        self.fh = open(path, "w", newline="")
        self.fh.write(",".join(columns) + "\n")

    def row(self, values):
        self.fh.write(",".join(_fmt(v) for v in values) + "\n")

    def close(self):
        self.fh.close()


def trace_cgalp(p: CompositeProblem, s: ParameterSchedule, iters, x_star, mu_star,
                csv_path=None, stride=1, record_time=False):
    """Run CGALP and record one row per ``stride`` iterations.

    Row ``k`` describes ``x_k``, ``mu_k`` and the ergodic averages over
    ``i = 0..k``.  Every iterate is checked for membership in ``C``.
    Returns a dict of columns (all rows, regardless of ``stride``).
    """
    L_star = lagrangian(p, x_star, mu_star)
    if not np.isfinite(L_star):
        raise ValueError("reference point lies outside C")
    cols = ("k", "gamma_k", "beta_k", "feas_gap", "erg_feas_gap", "lagrangian_gap",
            "erg_lagrangian_gap", "mu_norm") + (("wall_time_s",) if record_time else ())
    out = {c: np.empty(iters) for c in cols}
    sink = _CsvSink(csv_path, cols) if csv_path else None
    prev = {"st": None}
    t0 = time.perf_counter()

    def cb(st, tr):
        old = prev["st"]
        k = tr.k
        x_k = old.x if old is not None else x0
        mu_k = old.mu if old is not None else mu0
        row = (k, s.gamma(k), s.beta(k),
               norm(p.A(x_k) - p.b),
               norm(p.A(st.x_erg_feas) - p.b),
               lagrangian(p, x_k, mu_star) - L_star,
               lagrangian(p, st.x_erg_opt, mu_star) - L_star,
               norm(mu_k))
        if record_time:
            row = row + (time.perf_counter() - t0,)
        for c, v in zip(cols, row):
            out[c][k] = v
        if sink is not None and k % stride == 0:
            sink.row(row)
        prev["st"] = st
        return False

    x0 = np.array(p.h.a_feasible_point, dtype=np.float64)
    mu0 = np.zeros(p.A.out_shape)
    try:
        res = run(p, s, x0=x0, mu0=mu0, max_iters=iters, callback=cb, check_membership=True)
    finally:
        if sink is not None:
            sink.close()
    out["k"] = out["k"].astype(np.int64)
    out["_final"] = res.state
    return out


def trace_gfb(data, iters, W_star, Z_star, csv_path=None, stride=1, record_time=False):
    """Run GFB and record the Bregman criterion of ``U_erg`` at ``k = 1..iters``."""
    if not np.isfinite(objective_Q(data, W_star)):
        fn, fl = feasibility(data, W_star)
        raise ValueError(f"GFB reference W* is outside the balls (excess {fn:.3g}, {fl:.3g}); "
                         f"the reference run is too short, increase ref_iters")
    cols = GFB_COLUMNS + (("wall_time_s",) if record_time else ())
    out = {c: np.empty(iters) for c in cols}
    sink = _CsvSink(csv_path, cols) if csv_path else None
    t0 = time.perf_counter()

    def cb(st):
        fn, fl = feasibility(data, st.U_erg)
        row = (st.k, gfb_bregman_criterion(data, st.U_erg, W_star, Z_star), fn, fl)
        if record_time:
            row = row + (time.perf_counter() - t0,)
        for c, v in zip(cols, row):
            out[c][st.k - 1] = v
        if sink is not None and st.k % stride == 0:
            sink.row(row)
        return False

    try:
        final = run_gfb(data, iters, callback=cb)
    finally:
        if sink is not None:
            sink.close()
    out["k"] = out["k"].astype(np.int64)
    out["_final"] = final
    return out


# --------------------------------------------------------------- experiments

def running_max_growth(values, k_from) -> float:
    """Relative growth of ``max(values[:k])`` between ``k = k_from`` and the end."""
    rm = np.maximum.accumulate(np.asarray(values, dtype=np.float64))
    if rm[k_from - 1] == 0:
        return math.inf if rm[-1] > 0 else 0.0
    return float(rm[-1] / rm[k_from - 1] - 1.0)


def _fit_dict(ks, vals, lo, hi):
    try:
        return fit_rate(ks, vals, lo, hi)._asdict()
    except ValueError as exc:
        return {"error": str(exc)}


def run_experiment(cfg: ExperimentConfig) -> dict:
    """Compute or load references, run, write CSV(s) and the summary JSON.

    Returns the summary plus, under ``"traces"``, the in-memory columns.
    """
    os.makedirs(cfg.out, exist_ok=True)
    p, inst = build_problem(cfg)
    s = cfg.schedule
    lo, hi = default_fit_range(cfg.iters)
    summary = {"config": {k: v for k, v in asdict(cfg).items()
                          if k not in ("out", "record_time", "allow_ref")},
               "schedule": s.as_dict(), "fit_range": [lo, hi], "files": {}}
    traces = {}
    if "cgalp" in cfg.solvers:
        ref = cgalp_reference(cfg)
        path = os.path.join(cfg.out, f"{cfg.stem}-cgalp.csv")
        tr = trace_cgalp(p, s, cfg.iters, ref["x"], ref["mu"], path, cfg.stride,
                         cfg.record_time)
        traces["cgalp"] = tr
        ks = tr["k"]
        summary["files"]["cgalp"] = os.path.basename(path)
        summary["cgalp"] = {
            "reference_schedule": reference_schedule(cfg).as_dict(),
            "reference_lagrangian": lagrangian(p, ref["x"], ref["mu"]),
            "erg_lagrangian_fit": _fit_dict(ks, tr["erg_lagrangian_gap"], lo, hi),
            "erg_feas_fit": _fit_dict(ks, tr["erg_feas_gap"], lo, hi),
            "final_feas_gap": float(tr["feas_gap"][-1]),
            "final_erg_lagrangian_gap": float(tr["erg_lagrangian_gap"][-1]),
            "mu_running_max_growth_last_decade": running_max_growth(
                tr["mu_norm"], max(1, cfg.iters // 10)),
            "membership_checked": True,
        }
    if cfg.experiment == "matcomp" and "gfb" in cfg.solvers:
        ref = gfb_reference(cfg)
        path = os.path.join(cfg.out, f"{cfg.stem}-gfb.csv")
        tr = trace_gfb(inst.data, cfg.iters, ref["W"], ref["Z"], path, cfg.stride,
                       cfg.record_time)
        traces["gfb"] = tr
        summary["files"]["gfb"] = os.path.basename(path)
        summary["gfb"] = {
            "bregman_fit": _fit_dict(tr["k"], tr["bregman_criterion"], lo, hi),
            "final_bregman_criterion": float(tr["bregman_criterion"][-1]),
        }
    with open(os.path.join(cfg.out, f"{cfg.stem}-summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")
    summary["traces"] = traces
    return summary


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, tuple):
        return list(o)
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _run_quiet(cfg):
    out = run_experiment(cfg)
    out.pop("traces", None)
    return out


def run_many(configs, workers=None) -> list:
    """Run independent configs on a process pool; results keep input order.

    References shared between configs are computed once per process and
    published atomically, so concurrent writers at worst duplicate work.
    """
    configs = list(configs)
    if workers == 1 or len(configs) <= 1:
        return [_run_quiet(c) for c in configs]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_run_quiet, configs))
