import dataclasses

import numpy as np
import pytest

from carbon_sched.bench import (
    REPORT_HEADER,
    BenchmarkSpec,
    ResultRow,
    ResultTable,
    emit_report,
    row_keys,
    run_retrospective,
    strategy_summary,
    table_from_json,
    write_plan_traces,
    write_reports,
)
from carbon_sched.strategies import StrategyConfig, flexible_start_fts, no_strategy, static_start_fts
from carbon_sched.synth import DiurnalModel, gen_energy, gen_intensity
from carbon_sched.timegrid import CoverageError, RegionSet

from .conftest import T0

SMALL = dict(months=(1,), days_per_month=2, hours_set=(6, 12), checking_set=(30, 60))


def _antiphase(days=20):
    return RegionSet([gen_intensity(DiurnalModel(300.0, 150.0, 0.0), days, region_id="A"),
                      gen_intensity(DiurnalModel(300.0, 150.0, 12.0), days, region_id="B")])


def test_days_and_start_times():
    spec = BenchmarkSpec()
    assert spec.days == [1, 6, 11, 16, 21, 26]
    assert len(spec.start_times()) == 72 and spec.start_times()[0] == T0
    assert BenchmarkSpec(days_per_month=1).days == [1]


def test_spec_validation_and_round_trip():
    with pytest.raises(ValueError):
        BenchmarkSpec(workloads=("nope",))
    with pytest.raises(ValueError):
        BenchmarkSpec(strategies=("magic",))
    with pytest.raises(ValueError):
        BenchmarkSpec.from_dict({"surprise": 1})
    spec = BenchmarkSpec(hours_set=(12, 6), strategies=("fsfts", "none"))
    assert spec.hours_set == (6, 12) and spec.strategies == ("none", "fsfts")
    assert BenchmarkSpec.from_dict(spec.to_dict()) == spec


def test_constant_intensity_gives_zero_reduction():
    regs = RegionSet([gen_intensity(DiurnalModel(333.0, 0.0), 40, region_id="X")])
    table = run_retrospective(BenchmarkSpec(**SMALL), regs, workers=1)
    assert table.rows and all(r.reduction == 0.0 for r in table.rows)
    assert all("0.0" == line.split(",")[6] for line in emit_report(table).splitlines()[1:])


def test_antiphase_regions_reward_fts():
    spec = BenchmarkSpec(workloads=("IF",), strategies=("none", "ssfts"), **SMALL)
    table = run_retrospective(spec, _antiphase(), workers=1)
    for r in table.select(strategy="ssFtS"):
        assert r.reduction > 0
        assert r.mean_delay_h == 0.0 and r.mean_duration_h == 4.25


def test_single_cell_equals_direct_call():
    regs = _antiphase()
    spec = BenchmarkSpec(workloads=("AE",), strategies=("none", "ssfts", "fsfts"), months=(1,), days_per_month=1,
                         hours_set=(6,), checking_set=(30,), transfer_modes=("in_training",), regions=("B",))
    table = run_retrospective(spec, regs, workers=1)
    e = gen_energy("AE")
    cfg = StrategyConfig(T0, 6, 30, "B", "in_training")
    base = no_strategy(e, regs, T0, "B")[1].total_g
    ss = static_start_fts(e, regs, cfg)[1]
    fs = flexible_start_fts(e, regs, cfg)[1]
    assert table.row("AE", "NoStrategy", "none", 6, 30).mean_g == base
    row = table.row("AE", "ssFtS", "in_training", 6, 30)
    assert (row.cells, row.mean_g, row.reduction) == (1, ss.total_g, (base - ss.total_g) / base)
    assert row.mean_region_switches == ss.region_switches
    row = table.row("AE", "fsFtS", "in_training", 6, 30)
    assert row.mean_g == fs.total_g and row.mean_delay_h == fs.start_delay.total_seconds() / 3600


def test_parallel_equals_serial():
    spec = BenchmarkSpec(workloads=("SVM", "IF"), **SMALL)
    regs = _antiphase()
    assert run_retrospective(spec, regs, workers=1) == run_retrospective(spec, regs, workers=2)


def test_every_combination_once():
    spec = BenchmarkSpec(**SMALL)
    table = run_retrospective(spec, _antiphase(), workers=1)
    keys = [r.key for r in table.rows]
    assert len(keys) == len(set(keys)) == len(list(row_keys(spec)))
    assert len(keys) == 4 * (3 + 2 * 2) * 2 * 2
    assert {r.cells for r in table.rows} == {2 * 2}


def test_fsfts_beats_fs_per_row_at_zero_cost():
    from carbon_sched.carbon import FREE_TRANSFER

    spec = BenchmarkSpec(transfer_model=FREE_TRANSFER, **SMALL)
    table = run_retrospective(spec, _antiphase(), workers=1)
    for r in table.select(strategy="fsFtS"):
        assert r.reduction >= table.row(r.workload, "FS", "none", r.hours, r.checking).reduction


def test_coverage_error_names_the_cell():
    regs = _antiphase(days=2)
    with pytest.raises(CoverageError, match="workload=IF start=2021-01-16"):
        run_retrospective(BenchmarkSpec(workloads=("IF",), **SMALL), regs, workers=1)


def _row(**kw):
    base = dict(workload="IF", strategy="FS", transfer_mode="none", hours=6, checking=15, cells=1,
                reduction=0.146, mean_g=1.0, mean_baseline_g=1.2, mean_region_switches=0.0,
                mean_dataset_transfers=0.0, mean_duration_h=4.25, std_duration_h=0.0,
                mean_delay_h=0.0, std_delay_h=0.0)
    base.update(kw)
    return ResultRow(**base)


def test_report_formatting():
    t = ResultTable((_row(),))
    assert emit_report(t, "csv").splitlines()[1].split(",")[6] == "14.6"
    assert "| 14.6 |" in emit_report(t, "markdown")
    assert emit_report(ResultTable(), "csv") == ",".join(REPORT_HEADER) + "\n"
    assert emit_report(ResultTable(), "markdown").count("\n") == 2
    with pytest.raises(ValueError):
        emit_report(t, "xml")


def test_report_row_order_is_canonical():
    rows = (_row(strategy="fsFtS", transfer_mode="in_training"), _row(strategy="fsFtS", transfer_mode="upstream"),
            _row(strategy="FS", hours=12), _row(strategy="FS"))
    lines = emit_report(ResultTable(rows)).splitlines()[1:]
    assert [tuple(l.split(",")[1:4]) for l in lines] == [
        ("FS", "none", "6"), ("FS", "none", "12"), ("fsFtS", "upstream", "6"), ("fsFtS", "in_training", "6")]


def test_json_round_trip():
    table = run_retrospective(BenchmarkSpec(workloads=("SVM",), **SMALL), _antiphase(), workers=1)
    back = table_from_json(emit_report(table, "json"))
    assert back == table


def test_write_reports_and_traces(tmp_path):
    spec = BenchmarkSpec(workloads=("SVM",), **SMALL)
    table = run_retrospective(spec, _antiphase(), workers=1, keep_plans=True)
    paths = write_reports(table, tmp_path)
    assert sorted(p.name for p in paths) == ["results.csv", "results.json", "results.md"]
    write_plan_traces(table, tmp_path / "plans.csv")
    lines = (tmp_path / "plans.csv").read_text().splitlines()
    assert lines[0].startswith("workload,strategy") and len(lines) > len(table.rows)
    summary = strategy_summary(table)
    assert set(summary) == {"NoStrategy", "FS", "PaR", "ssFtS", "fsFtS"}
    assert summary["NoStrategy"]["mean_dilation_h"] == 0.0


def test_fs_window_monotone_per_row():
    spec = BenchmarkSpec(strategies=("none", "fs", "fsfts"), months=(1,), days_per_month=3,
                         hours_set=(6, 12, 18, 24), checking_set=(60,))
    table = run_retrospective(spec, _antiphase(days=40), workers=1)
    for w in spec.workloads:
        for label, mode in (("FS", "none"), ("fsFtS", "upstream"), ("fsFtS", "in_training")):
            red = [table.row(w, label, mode, h, 60).reduction for h in spec.hours_set]
            assert red == sorted(red)
