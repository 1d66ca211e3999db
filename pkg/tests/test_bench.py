import glob
import json
import os

import numpy as np
import pytest

from cgalp import bench
from cgalp.bench import (CACHE_ENV, CacheMissError, ExperimentConfig, cgalp_reference,
                         decade_medians, fit_rate, fit_rate_csv, read_csv, run_experiment,
                         run_many, running_max_growth)
from cgalp.gfb import objective_Q
from cgalp.solver import lagrangian, run

KS = np.arange(1, 100_001)


def test_fit_exact_power_laws():
    f = fit_rate(KS, 7.0 / KS, 10, 100_000)
    assert f.slope == pytest.approx(-1.0, abs=1e-6)
    assert f.intercept == pytest.approx(np.log(7.0), abs=1e-6)
    assert f.r_squared == pytest.approx(1.0)
    assert fit_rate(KS, 3.0 / np.sqrt(KS), 10, 100_000).slope == pytest.approx(-0.5, abs=1e-6)


def test_fit_log_decay():
    vals = 1.0 / np.log(KS + 2)
    # direct evaluation of the curve's log-log secant on the window
    secant = (np.log(vals[-1]) - np.log(vals[999])) / (np.log(KS[-1]) - np.log(KS[999]))
    f = fit_rate(KS, vals, 1000, 100_000)
    assert -0.2 < f.slope < 0
    assert f.slope == pytest.approx(secant, abs=0.02)
    assert f.k_range == (1000, 100_000)


def test_fit_excludes_nonpositive_and_needs_ten_points():
    vals = 1.0 / KS[:50].astype(float)
    vals[[3, 7, 20]] = [0.0, -1.0, np.nan]
    f = fit_rate(KS[:50], vals, 1, 50)
    assert f.n_points == 47 and f.n_excluded == 3
    assert f.slope == pytest.approx(-1.0, abs=1e-12)
    with pytest.raises(ValueError):
        fit_rate(KS[:9], 1.0 / KS[:9], 1, 9)
    with pytest.raises(ValueError):
        fit_rate(KS[:50], -np.ones(50), 1, 50)


def test_decade_medians_and_growth():
    ks = np.arange(1, 20_001)
    m = decade_medians(ks, 1.0 / ks)
    assert m[0] > m[1] > m[2]
    assert m[1] == pytest.approx(1.0 / np.median(ks[(ks >= 1000 / np.sqrt(10))
                                                   & (ks <= 1000 * np.sqrt(10))]), rel=1e-2)
    assert running_max_growth([1.0, 2.0, 1.5, 2.02], 2) == pytest.approx(0.01)
    assert running_max_growth([3.0, 1.0, 1.0], 1) == 0.0


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(density=0.0)
    with pytest.raises(ValueError):
        ExperimentConfig(iters=10, ref_iters=5)
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="other")
    with pytest.raises(ValueError):
        ExperimentConfig(seed=2 ** 64)
    with pytest.raises(ValueError):
        ExperimentConfig(experiment="matcomp", N=4)
    s = ExperimentConfig(b=0.2).schedule
    assert s.delta == pytest.approx(0.41) and s.rho == pytest.approx(2 ** 1.8 + 1)


def small(out, **kw):
    base = dict(experiment="projection", a=0, b=0.0, iters=2000, ref_iters=3000, seed=1,
                out=str(out))
    base.update(kw)
    return ExperimentConfig(**base)


def test_outputs_written(tmp_path):
    s = run_experiment(small(tmp_path))
    csv_path = tmp_path / s["files"]["cgalp"]
    cols = read_csv(csv_path)
    assert list(cols) == list(bench.CGALP_COLUMNS)
    assert cols["k"][0] == 0 and cols["k"][-1] == 1999 and len(cols["k"]) == 2000
    with open(tmp_path / "projection_a0_b0_seed1-summary.json") as fh:
        js = json.load(fh)
    assert js["cgalp"]["erg_lagrangian_fit"]["k_range"] == [20, 2000]
    f = fit_rate_csv(csv_path, "erg_lagrangian_gap", 20, 2000)
    assert f.slope == pytest.approx(js["cgalp"]["erg_lagrangian_fit"]["slope"], rel=1e-12)
    with pytest.raises(KeyError):
        fit_rate_csv(csv_path, "missing", 20, 2000)


def test_stride_and_record_time(tmp_path):
    s = run_experiment(small(tmp_path, stride=100, record_time=True))
    cols = read_csv(tmp_path / s["files"]["cgalp"])
    assert np.array_equal(cols["k"], np.arange(0, 2000, 100))
    assert np.all(np.diff(cols["wall_time_s"]) >= 0)


@pytest.mark.parametrize("kind", ["projection", "matcomp"])
def test_byte_identical_reruns(tmp_path, monkeypatch, kind):
    monkeypatch.delenv(CACHE_ENV, raising=False)
    kw = dict(experiment=kind, N=10, iters=300, ref_iters=400)
    blobs = []
    for d in ("one", "two"):
        s = run_experiment(small(tmp_path / d, **kw))
        blobs.append({name: (tmp_path / d / f).read_bytes() for name, f in s["files"].items()})
        blobs[-1]["summary"] = (tmp_path / d / f"{s['files']['cgalp'][:-10]}-summary.json").read_bytes()
    assert blobs[0] == blobs[1]
    assert set(blobs[0]) >= {"cgalp", "summary"}


def test_cache_miss_and_env(tmp_path, monkeypatch):
    monkeypatch.setenv(CACHE_ENV, str(tmp_path / "cache"))
    with pytest.raises(CacheMissError):
        run_experiment(small(tmp_path / "out", allow_ref=False))
    run_experiment(small(tmp_path / "out"))
    files = os.listdir(tmp_path / "cache")
    assert len(files) == 1 and files[0].endswith(".npz")
    assert not os.path.exists(tmp_path / "out" / ".refcache")
    # a cached reference is reused without recomputation
    monkeypatch.setattr(bench, "run", lambda *a, **k: pytest.fail("recomputed"))
    cgalp_reference(small(tmp_path / "out", allow_ref=False))


def test_cache_write_is_atomic(tmp_path):
    path = tmp_path / "c" / "ref.npz"

    class Boom(Exception):
        pass

    class Bad:
        def __array__(self, *a, **k):
            raise Boom()

    with pytest.raises(Boom):
        bench._atomic_savez(str(path), x=Bad())
    assert os.listdir(tmp_path / "c") == []
    bench._atomic_savez(str(path), x=np.arange(3))
    assert os.listdir(tmp_path / "c") == ["ref.npz"]


def test_run_many_matches_serial(tmp_path):
    cfgs = [small(tmp_path / "p", seed=s, iters=500, ref_iters=500) for s in (2, 3)]
    par = run_many(cfgs, workers=2)
    ser = run_many([small(tmp_path / "s", seed=s, iters=500, ref_iters=500) for s in (2, 3)],
                   workers=1)
    for a, b in zip(par, ser):
        assert a["cgalp"] == b["cgalp"]
    assert not glob.glob(str(tmp_path / "p" / ".refcache" / "*.tmp*"))


@pytest.mark.parametrize("b", [0.0, bench.B_DEFAULT])
def test_reference_refinement(bench_dir, projection_runs, b):
    # gap at k = 10^4 against refs from ref_iters and 2 * ref_iters differ by < 10%
    a = 0
    cfg = ExperimentConfig(experiment="projection", a=a, b=b, iters=100_000,
                           ref_iters=100_000, seed=0, out=bench_dir)
    p, _ = bench.build_problem(cfg)
    xbar = run(p, cfg.schedule, max_iters=10_000).state.x_erg_opt
    gaps = []
    for n in (100_000, 200_000):
        ref = cgalp_reference(cfg, ref_iters=n)
        gaps.append(lagrangian(p, xbar, ref["mu"]) - lagrangian(p, ref["x"], ref["mu"]))
    assert abs(gaps[1] - gaps[0]) < 0.1 * abs(gaps[0])


def test_cgalp_gfb_objective_consistency(matcomp_run):
    cfg = ExperimentConfig(**{k: v for k, v in matcomp_run["config"].items()
                              if k in ExperimentConfig.__dataclass_fields__})
    p, inst = bench.build_problem(cfg)
    phi_cgalp = p.objective(matcomp_run["traces"]["cgalp"]["_final"].x_erg_opt)
    phi_gfb = objective_Q(inst.data, matcomp_run["traces"]["gfb"]["_final"].U_erg)
    assert phi_cgalp == pytest.approx(phi_gfb, rel=1e-2)
