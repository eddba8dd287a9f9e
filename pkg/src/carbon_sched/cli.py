"""Command-line entry point: ``carbon-sched {simulate,bench,gen,convert}``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import BenchmarkSpec, run_retrospective, strategy_summary, write_plan_traces, write_reports
from .carbon import TransferCostModel
from .strategies import IN_TRAINING, UPSTREAM, StrategyConfig, run_strategy
from .synth import PRESETS, DiurnalModel, gen_energy, gen_intensity, preset_regions, preset_seed
from .timegrid import (
    TraceError,
    format_timestamp,
    load_region_dir,
    parse_energy_csv,
    parse_moer_csv,
    parse_timestamp,
    to_moer_csv,
)

USAGE_ERROR = 1
DATA_ERROR = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _load_regions(args):
    if args.regions:
        return load_region_dir(args.regions, unit=args.unit)
    return preset_regions(args.seed)


def _load_energy(spec: str, step_minutes: int):
    if spec.startswith("profile:"):
        try:
            return gen_energy(spec.split(":", 1)[1], step_minutes=step_minutes)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    path = Path(spec)
    if not path.is_file():
        raise UsageError(f"energy file {spec!r} not found")
    return parse_energy_csv(path.read_text())


def cmd_simulate(args) -> int:
    regions = _load_regions(args)
    energy = _load_energy(args.energy, regions.grid.step_minutes)
    start = parse_timestamp(args.start) if args.start else regions.grid.start_utc
    ref = args.reference or regions.ids[0]
    if ref not in regions:
        raise UsageError(f"reference region {ref!r} not among {list(regions.ids)}")
    try:
        config = StrategyConfig(
            nominal_start=start,
            window_extra_hours=args.window_hours,
            checking_time_minutes=args.checking_min,
            reference_region=ref,
            transfer_mode=UPSTREAM if args.mode == "upstream" else IN_TRAINING,
            transfer_model=TransferCostModel(dataset_gb=args.dataset_gb),
        )
        config.extra_steps(regions.grid.step_minutes)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    plan, outcome = run_strategy(args.strategy, energy, regions, config)
    grid = regions.grid
    if args.out == "json":
        doc = {
            "reference_region": ref,
            "nominal_start": format_timestamp(start),
            "chosen_start": format_timestamp(plan.chosen_start),
            "region_path": list(plan.region_path),
            "segments": [{"start": format_timestamp(grid.timestamp(s.grid_start)),
                          "end": format_timestamp(grid.timestamp(s.grid_stop)),
                          "region": s.region, "offset_start": s.offset_start, "offset_stop": s.offset_stop}
                         for s in plan.segments],
            "transfers": [{"at": format_timestamp(grid.timestamp(t.grid_index)), "from": t.from_region,
                           "to": t.to_region, "emissions_g": t.emissions_g} for t in plan.transfers],
            "outcome": outcome.to_dict(),
        }
        print(json.dumps(doc, indent=2))
    else:
        o = outcome
        print(f"total_g        {o.total_g:.6f}")
        print(f"operational_g  {o.operational_g:.6f}")
        print(f"transfer_g     {o.transfer_g:.6f}")
        print(f"chosen_start   {format_timestamp(plan.chosen_start)}")
        print(f"region_path    {' -> '.join(plan.region_path)}")
        print(f"switches       {o.region_switches}")
        print(f"transfers      {o.dataset_transfers}")
        print(f"start_delay    {o.start_delay}")
        print(f"duration       {o.duration}")
        print(f"completion     {format_timestamp(o.completion)}")
    return 0


def cmd_bench(args) -> int:
    data = {}
    if args.spec:
        try:
            raw = json.loads(Path(args.spec).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read spec {args.spec}: {exc}") from None
        data = raw.pop("data", {}) or {}
        try:
            spec = BenchmarkSpec.from_dict(raw)
        except (TypeError, ValueError) as exc:
            raise UsageError(str(exc)) from None
    else:
        spec = BenchmarkSpec()
    if data.get("regions_dir") and not args.regions:
        args.regions = data["regions_dir"]
        args.unit = data.get("unit", args.unit)
    if "seed" in data and args.seed is None:
        args.seed = data["seed"]
    if args.seed is None:
        args.seed = 0
    regions = _load_regions(args)
    table = run_retrospective(spec, regions, keep_plans=args.traces)
    paths = write_reports(table, args.out_dir)
    if args.traces:
        traces = Path(args.out_dir) / "plans.csv"
        write_plan_traces(table, traces)
        paths.append(traces)
    print(f"{len(table.rows)} rows")
    for p in paths:
        print(f"wrote {p}")
    for label, s in strategy_summary(table).items():
        print(f"{label:<10} reduction {100 * s['reduction']:5.1f}%  dilation {s['mean_dilation_h']:6.2f}h")
    return 0


def cmd_gen(args) -> int:
    start = parse_timestamp(args.start)
    if args.preset:
        names = sorted(PRESETS) if args.preset == "all" else [args.preset]
        if any(n not in PRESETS for n in names):
            raise UsageError(f"unknown preset {args.preset!r}; known: {sorted(PRESETS)} or 'all'")
        if args.preset == "all":
            out_dir = Path(args.out or ".")
            out_dir.mkdir(parents=True, exist_ok=True)
        for i, name in enumerate(sorted(PRESETS)):
            if name not in names:
                continue
            m = PRESETS[name]
            model = DiurnalModel(m.base, m.amplitude, m.phase_hours, m.noise_sigma, preset_seed(args.seed, i))
            series = gen_intensity(model, args.days, args.step, region_id=name, start=start)
            target = (out_dir / f"{name}.csv") if args.preset == "all" else args.out
            _emit(to_moer_csv(series), target)
        return 0
    if args.base is None:
        raise UsageError("gen needs --preset or --base")
    try:
        model = DiurnalModel(args.base, args.amp, args.phase, args.noise, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    series = gen_intensity(model, args.days, args.step, region_id=args.region, start=start)
    _emit(to_moer_csv(series), args.out)
    return 0


def cmd_convert(args) -> int:
    path = Path(args.input)
    if not path.is_file():
        raise UsageError(f"input file {args.input!r} not found")
    series = parse_moer_csv(path.read_text(), unit=args.unit, region_id=args.region or path.stem)
    _emit(to_moer_csv(series), args.out)
    return 0


def _emit(text: str, target) -> None:
    if target in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(target).write_text(text)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="carbon-sched", description="Carbon-aware scheduling simulator")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def data_flags(sp):
        sp.add_argument("--regions", help="directory of per-region MOER CSVs (default: synthetic presets)")
        sp.add_argument("--unit", choices=["g_per_kwh", "lbs_per_mwh"], default="g_per_kwh")

    s = sub.add_parser("simulate", help="run one strategy on one start time")
    s.add_argument("--strategy", required=True, choices=["none", "fs", "par", "ssfts", "fsfts", "dpfts"])
    s.add_argument("--energy", required=True, help="energy CSV or profile:NAME")
    data_flags(s)
    s.add_argument("--seed", type=int, default=0, help="seed for synthetic presets")
    s.add_argument("--start", help="nominal start, ISO-8601 UTC (default: first grid instant)")
    s.add_argument("--reference", help="reference/launch region (default: first region id)")
    s.add_argument("--window-hours", type=float, default=0.0)
    s.add_argument("--checking-min", type=int, default=15)
    s.add_argument("--mode", choices=["upstream", "intraining"], default="intraining")
    s.add_argument("--dataset-gb", type=float, default=0.320)
    s.add_argument("--out", choices=["text", "json"], default="text")
    s.set_defaults(func=cmd_simulate)

    b = sub.add_parser("bench", help="retrospective benchmark sweep")
    g = b.add_mutually_exclusive_group(required=True)
    g.add_argument("--spec", help="benchmark spec (JSON)")
    g.add_argument("--paper-grid", action="store_true",
                   help="hours {6,12,18,24} x checking {15,30,60,120}, 6 days/month for a year")
    data_flags(b)
    b.add_argument("--seed", type=int, default=None, help="seed for synthetic presets (default 0)")
    b.add_argument("--out-dir", default="bench-out")
    b.add_argument("--traces", action="store_true", help="also write per-cell plan segments to plans.csv")
    b.set_defaults(func=cmd_bench)

    gn = sub.add_parser("gen", help="write a synthetic MOER CSV")
    gn.add_argument("--preset", help=f"one of {sorted(PRESETS)} or 'all' (then --out is a directory)")
    gn.add_argument("--base", type=float)
    gn.add_argument("--amp", type=float, default=0.0)
    gn.add_argument("--phase", type=float, default=0.0)
    gn.add_argument("--noise", type=float, default=0.0)
    gn.add_argument("--seed", type=int, default=0)
    gn.add_argument("--days", type=int, default=365)
    gn.add_argument("--step", type=int, default=5)
    gn.add_argument("--start", default="2021-01-01T00:00:00Z")
    gn.add_argument("--region", default="R")
    gn.add_argument("--out", help="output file (default stdout)")
    gn.set_defaults(func=cmd_gen)

    c = sub.add_parser("convert", help="convert a MOER CSV to g/kWh and check grid regularity")
    c.add_argument("input")
    c.add_argument("--unit", choices=["g_per_kwh", "lbs_per_mwh"], default="lbs_per_mwh")
    c.add_argument("--region")
    c.add_argument("--out", help="output file (default stdout)")
    c.set_defaults(func=cmd_convert)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"carbon-sched: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except TraceError as exc:
        print(f"carbon-sched: data error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except ValueError as exc:
        parser.print_usage(sys.stderr)
        print(f"carbon-sched: error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
