"""The numbered acceptance criteria, each at its stated tolerance.

Run alone with ``pytest tests/test_acceptance.py``; the terminal summary
lists one PASS/FAIL line per criterion.
"""
import json
import math
import subprocess
import sys
import time

import numpy as np
import pytest

from carbon_sched.bench import BenchmarkSpec, run_retrospective, strategy_summary, table_from_json
from carbon_sched.carbon import FREE_TRANSFER, TransferCostModel
from carbon_sched.oracle import oracle_fts, oracle_par
from carbon_sched.strategies import (
    StrategyConfig,
    dp_optimal_fts,
    flexible_start,
    flexible_start_fts,
    no_strategy,
    pause_and_resume,
    static_start_fts,
)
from carbon_sched.synth import WORKLOAD_PROFILES, DiurnalModel, bundled_profile, gen_energy, gen_intensity, preset_regions
from carbon_sched.timegrid import RegionSet

from .conftest import T0, config, energy, random_instance, series

HOURS = (0, 6, 12, 18, 24)


def _close(a, b, rel=1e-9):
    return math.isclose(a, b, rel_tol=rel, abs_tol=1e-12)


# ---------------------------------------------------------------------------- 1

@pytest.mark.acceptance(1, "FtS equals exhaustive oracle at zero transfer cost (1000 instances, 1e-9, < 60 s)")
def test_oracle_equivalence_zero_transfer():
    rng = np.random.default_rng(1)
    t0 = time.perf_counter()
    for i in range(1000):
        e, regs, cfg = random_instance(rng, max_regions=3, max_slots=12, max_extra=4)
        ss = static_start_fts(e, regs, cfg)[1].total_g
        fs = flexible_start_fts(e, regs, cfg)[1].total_g
        assert _close(ss, oracle_fts(e, regs, cfg).total_g), f"instance {i}: ssFtS"
        assert _close(fs, oracle_fts(e, regs, cfg, flexible=True).total_g), f"instance {i}: fsFtS"
    elapsed = time.perf_counter() - t0
    assert elapsed < 60, f"took {elapsed:.1f}s"


# ---------------------------------------------------------------------------- 2

@pytest.mark.acceptance(2, "exact optimum equals oracle with nonzero transfer cost (500 instances, both modes)")
def test_dp_equals_oracle():
    rng = np.random.default_rng(2)
    for i in range(500):
        gb = float(rng.uniform(0.5, 50.0))
        mode = ("in_training", "upstream")[i % 2]
        e, regs, cfg = random_instance(rng, max_regions=3, max_slots=10, max_extra=0, dataset_gb=gb, mode=mode)
        dp = dp_optimal_fts(e, regs, cfg)[1].total_g
        assert _close(dp, oracle_fts(e, regs, cfg).total_g), f"instance {i} ({mode})"


# ---------------------------------------------------------------------------- 3

@pytest.mark.acceptance(3, "PaR greedy equals subset oracle under uniform energy (200 traces, windows <= 18 steps)")
def test_par_equals_oracle():
    rng = np.random.default_rng(3)
    for i in range(200):
        L = 1 + i % 18
        # coarse integer values make ties common, which is where pairing matters
        values = rng.integers(0, 12, L).astype(float) if i % 2 else rng.uniform(0, 500, L)
        s = series("A", values)
        for W in range(1, L + 1):
            e = energy(np.full(W, float(rng.uniform(0.01, 1.0))))
            cfg = config(extra_steps=L - W)
            assert _close(pause_and_resume(e, s, cfg)[1].total_g, oracle_par(e, s, cfg).total_g), (i, W)


# ------------------------------------------------------------------ 4, 5, 6 data

def _realistic_instances(n, seed):
    """Random cells on the preset regions: workload, start, reference, checking time, transfer mode."""
    rng = np.random.default_rng(seed)
    region_sets = [preset_regions(seed=s, days=3) for s in range(3)]
    for _ in range(n):
        regs = region_sets[int(rng.integers(len(region_sets)))]
        workload = list(WORKLOAD_PROFILES)[int(rng.integers(4))]
        start = regs.grid.timestamp(int(rng.integers(0, 288)))
        ref = regs.ids[int(rng.integers(len(regs)))]
        checking = (15, 30, 60, 120)[int(rng.integers(4))]
        mode = ("in_training", "upstream")[int(rng.integers(2))]
        gb = float(rng.choice([0.0, 0.320, 2.0, 50.0]))
        yield gen_energy(workload, start=start), regs, start, ref, checking, mode, TransferCostModel(dataset_gb=gb)


def _cfg(start, hours, checking, ref, mode, model):
    return StrategyConfig(start, hours, checking, ref, mode, model)


# ---------------------------------------------------------------------------- 4

@pytest.mark.acceptance(4, "dominance: FS<=None, fsFtS(free)<=FS, ssFtS<=None, window monotonicity")
def test_dominance():
    for e, regs, start, ref, checking, mode, model in _realistic_instances(120, seed=4):
        single = regs.subset([ref])
        none = no_strategy(e, regs, start, ref)[1].total_g
        fs_by_h = [flexible_start(e, single, _cfg(start, h, checking, ref, mode, model))[1].total_g for h in HOURS]
        fts_by_h = [flexible_start_fts(e, regs, _cfg(start, h, checking, ref, mode, model))[1].total_g for h in HOURS]
        free_by_h = [flexible_start_fts(e, regs, _cfg(start, h, checking, ref, mode, FREE_TRANSFER))[1].total_g
                     for h in HOURS]
        ss = static_start_fts(e, regs, _cfg(start, 0, checking, ref, "in_training", model))[1].total_g
        assert all(f <= none for f in fs_by_h)
        assert all(a <= b for a, b in zip(free_by_h, fs_by_h))
        assert ss <= none
        assert all(b <= a for a, b in zip(fs_by_h, fs_by_h[1:]))
        assert all(b <= a for a, b in zip(fts_by_h, fts_by_h[1:]))
    # adversarial small instances with heavy transfer costs
    rng = np.random.default_rng(44)
    for _ in range(500):
        e, regs, cfg = random_instance(rng, dataset_gb=float(rng.uniform(0, 100)), mode="in_training")
        assert static_start_fts(e, regs, cfg)[1].total_g <= no_strategy(e, regs, T0, cfg.reference_region)[1].total_g


# ---------------------------------------------------------------------------- 5

@pytest.mark.acceptance(5, "timing: ssFtS never delays or stretches; FS delay <= window")
def test_timing_contract():
    for e, regs, start, ref, checking, mode, model in _realistic_instances(120, seed=5):
        _, ss = static_start_fts(e, regs, _cfg(start, 0, checking, ref, mode, model))
        assert ss.start_delay.total_seconds() == 0 and ss.duration == e.duration
        _, ss_h = static_start_fts(e, regs, _cfg(start, 24, checking, ref, mode, model))
        assert ss_h.start_delay.total_seconds() == 0 and ss_h.duration == e.duration
        for h in HOURS[1:]:
            _, fs = flexible_start(e, regs.subset([ref]), _cfg(start, h, checking, ref, mode, model))
            assert fs.start_delay.total_seconds() <= h * 3600
            assert fs.duration == fs.start_delay + e.duration


# ---------------------------------------------------------------------------- 6

@pytest.mark.acceptance(6, "degeneracy: single region collapses FtS to None/FS; constant intensity gives 0.0%")
def test_degeneracy():
    for e, regs, start, ref, checking, mode, model in _realistic_instances(80, seed=6):
        single = regs.subset([ref])
        for h in (0, 12, 24):
            cfg = _cfg(start, h, checking, ref, mode, model)
            assert static_start_fts(e, single, cfg) == no_strategy(e, single, start, ref)
            assert flexible_start_fts(e, single, cfg) == flexible_start(e, single, cfg)

    flat = RegionSet(gen_intensity(DiurnalModel(321.5, 0.0), 40, region_id=name) for name in ("P", "Q", "R"))
    for model in (TransferCostModel(), FREE_TRANSFER):
        spec = BenchmarkSpec(months=(1,), days_per_month=3, transfer_model=model)
        table = run_retrospective(spec, flat, workers=1)
        bad = [(r.key, r.reduction) for r in table.rows if r.reduction != 0.0]
        assert not bad, bad[:5]


# ---------------------------------------------------------------------------- 7, 9

@pytest.fixture(scope="module")
def paper_grid_runs(tmp_path_factory):
    """Two independent CLI runs of the full paper grid on the seed-7 presets."""
    runs = []
    for name in ("first", "second"):
        out = tmp_path_factory.mktemp(name)
        t0 = time.perf_counter()
        proc = subprocess.run([sys.executable, "-m", "carbon_sched", "bench", "--paper-grid", "--seed", "7",
                               "--out-dir", str(out)], capture_output=True, text=True)
        runs.append((out, time.perf_counter() - t0, proc))
    return runs


@pytest.mark.slow
@pytest.mark.acceptance(7, "paper grid ordering fsFtS > PaR, fsFtS > FS, ssFtS > 0 (< 10 min)")
def test_directional_reproduction(paper_grid_runs):
    out, elapsed, proc = paper_grid_runs[0]
    assert proc.returncode == 0, proc.stderr
    table = table_from_json((out / "results.json").read_text())
    assert len(table.rows) == 4 * (3 + 2 * 2) * 16
    assert {r.cells for r in table.rows} == {72 * 7}
    s = {k: v["reduction"] for k, v in strategy_summary(table).items()}
    print("mean reductions:", json.dumps({k: round(100 * v, 2) for k, v in s.items()}))
    assert s["fsFtS"] > s["PaR"]
    assert s["fsFtS"] > s["FS"]
    assert s["ssFtS"] > 0
    assert elapsed < 600, f"sweep took {elapsed:.0f}s"


@pytest.mark.slow
@pytest.mark.acceptance(9, "bench --paper-grid --seed 7 twice gives byte-identical reports")
def test_determinism(paper_grid_runs):
    (a, _, pa), (b, _, pb) = paper_grid_runs
    assert pa.returncode == pb.returncode == 0
    for name in ("results.csv", "results.json", "results.md"):
        assert (a / name).read_bytes() == (b / name).read_bytes(), name


# ---------------------------------------------------------------------------- 8

@pytest.mark.acceptance(8, "constants embedded exactly (transfer model, bundled profile totals)")
def test_constants_exact():
    m = TransferCostModel()
    assert m.kwh_per_gb == 0.023 and m.dataset_gb == 0.320 and m.checkpoint_gb == 0.0
    expected = {"IF": (4.25, 0.825), "SVM": (2.5, 0.493), "AE": (3.5, 0.615), "HF-SCA": (16.0, 3.310)}
    assert WORKLOAD_PROFILES == expected
    for name, (hours, kwh) in expected.items():
        b = bundled_profile(name)
        assert math.fsum(b.samples) == kwh, name
        assert b.total_kwh == kwh, name
        assert b.duration.total_seconds() == hours * 3600, name
