from datetime import datetime, timezone

import numpy as np
import pytest

from carbon_sched.carbon import TransferCostModel
from carbon_sched.strategies import StrategyConfig
from carbon_sched.timegrid import EnergySeries, IntensitySeries, RegionSet, TimeGrid

T0 = datetime(2021, 1, 1, tzinfo=timezone.utc)


def energy(values, start=T0):
    return EnergySeries(TimeGrid(start, len(values)), np.asarray(values, dtype=float))


def series(region, values, start=T0):
    return IntensitySeries(region, TimeGrid(start, len(values)), np.asarray(values, dtype=float))


def regionset(**by_region):
    return RegionSet(series(r, v) for r, v in by_region.items())


def steps_to_hours(n):
    return n * 5 / 60


def config(extra_steps=0, checking_steps=1, ref=None, mode="in_training", dataset_gb=0.0, **kw):
    return StrategyConfig(T0, steps_to_hours(extra_steps), 5 * checking_steps, ref, mode,
                          TransferCostModel(dataset_gb=dataset_gb, **kw))


def random_instance(rng, max_regions=3, max_slots=12, max_extra=4, dataset_gb=0.0, mode=None,
                    uniform=False):
    """Small random FtS instance: (energy, regions, config)."""
    R = int(rng.integers(1, max_regions + 1))
    size = int(rng.integers(1, 4))
    k = int(rng.integers(1, max_slots + 1))
    W = int(rng.integers((k - 1) * size + 1, k * size + 1))
    extra = int(rng.integers(0, max_extra + 1))
    n = W + extra
    e = np.full(W, rng.uniform(0.01, 1.0)) if uniform else rng.uniform(0.0, 1.0, W)
    regs = RegionSet(series(f"R{i}", rng.uniform(0, 500, n)) for i in range(R))
    ref = f"R{int(rng.integers(0, R))}"
    mode = mode or ("in_training" if rng.random() < 0.5 else "upstream")
    cfg = StrategyConfig(T0, steps_to_hours(extra), 5 * size, ref, mode, TransferCostModel(dataset_gb=dataset_gb))
    return energy(e), regs, cfg


@pytest.fixture
def rng():
    return np.random.default_rng(20211)


# -- acceptance reporting: one PASS/FAIL line per numbered criterion -----------

_criteria: dict[int, list] = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or report.when not in ("setup", "call"):
        return
    number, title = mark.args
    entry = _criteria.setdefault(number, [title, True, ""])
    if report.failed:
        entry[1] = False
        entry[2] = report.longrepr.reprcrash.message if hasattr(report.longrepr, "reprcrash") else "error"
    elif report.when == "call" and report.skipped:
        entry[1] = None


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_criteria):
        title, ok, why = _criteria[number]
        status = {True: "PASS", False: "FAIL", None: "SKIP"}[ok]
        line = f"criterion {number}: {status}  {title}"
        if why:
            line += f"  ({why.splitlines()[0][:160]})"
        terminalreporter.write_line(line)
