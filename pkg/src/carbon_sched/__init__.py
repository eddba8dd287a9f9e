"""Carbon-aware scheduling strategies evaluated over marginal-emission traces."""
from .bench import BenchmarkSpec, ResultTable, emit_report, run_retrospective
from .carbon import (
    TransferCostModel,
    operational_emissions,
    transfer_emissions,
    transfer_energy,
)
from .oracle import OracleLimitError, OracleLimits, oracle_fts, oracle_par
from .strategies import (
    EmissionOutcome,
    ExecutionPlan,
    StrategyConfig,
    apply_transfer_mode,
    dp_optimal_fts,
    flexible_start,
    flexible_start_fts,
    no_strategy,
    pause_and_resume,
    static_start_fts,
)
from .synth import DiurnalModel, gen_energy, gen_intensity, preset_regions
from .timegrid import (
    CoverageError,
    EnergySeries,
    IntensitySeries,
    RegionSet,
    SlotPartition,
    TimeGrid,
    TraceError,
    align,
    parse_energy_csv,
    parse_moer_csv,
    slot_partition,
)

__version__ = "0.1.0"
