"""Identify radial feeder topology and line resistances from probing data.

The pipeline has three stages: simulate (or ingest) inverter probing data,
estimate the grid resistance matrix seen at the probed buses, and rebuild
the feeder tree (or its reduced equivalent) from the level-set structure
of that matrix.
"""

from .errors import (
    AmbiguousIntersection,
    AssumptionViolated,
    ConfigError,
    CycleDetected,
    Disconnected,
    DuplicateNode,
    EmptyPartition,
    FeederFormatError,
    GridProbeError,
    InconsistentLevelSets,
    InconsistentMeteredSets,
    LabelMismatch,
    LeafNotProbed,
    MissingRoot,
    NonpositiveImpedance,
    NonpositiveRmin,
    RankDeficientProbing,
    UnknownNode,
    UnknownProbingBus,
)
from .feeder import (
    FeederGraph,
    LevelSetFamily,
    ResistanceMatrix,
    build_feeder,
    effective_resistance,
    level_sets,
    metered_level_sets,
    reactance_matrix,
    resistance_matrix,
)
from .reduction import ReducedGrid, identifiable_junctions, reduce_grid
from .probing import (
    NoiseModel,
    ProbingPlan,
    ProbingRecord,
    ResistanceEstimate,
    design_plan,
    estimate_resistances,
    noise_bound,
    simulate_probing,
)
from .grouping import (
    ColumnGrouping,
    LevelGroup,
    assemble_families,
    group_column_exact,
    group_column_noisy,
    grouping_diagnostics,
)
from .recovery import (
    GraphComparison,
    RecoveryReport,
    compare_graphs,
    recover_full,
    recover_partial,
)
from .fileio import (
    load_config,
    load_feeder,
    load_record,
    save_feeder,
    save_record,
    save_report,
)
from .experiments import (
    ExperimentConfig,
    ExperimentResult,
    run_experiment,
    write_results,
)

__version__ = "0.1.0"

__all__ = [
    "AmbiguousIntersection",
    "AssumptionViolated",
    "ColumnGrouping",
    "ConfigError",
    "CycleDetected",
    "Disconnected",
    "DuplicateNode",
    "EmptyPartition",
    "ExperimentConfig",
    "ExperimentResult",
    "FeederFormatError",
    "FeederGraph",
    "GraphComparison",
    "GridProbeError",
    "InconsistentLevelSets",
    "InconsistentMeteredSets",
    "LabelMismatch",
    "LeafNotProbed",
    "LevelGroup",
    "LevelSetFamily",
    "MissingRoot",
    "NoiseModel",
    "NonpositiveImpedance",
    "NonpositiveRmin",
    "ProbingPlan",
    "ProbingRecord",
    "RankDeficientProbing",
    "RecoveryReport",
    "ReducedGrid",
    "ResistanceEstimate",
    "ResistanceMatrix",
    "UnknownNode",
    "UnknownProbingBus",
    "assemble_families",
    "build_feeder",
    "compare_graphs",
    "design_plan",
    "effective_resistance",
    "estimate_resistances",
    "group_column_exact",
    "group_column_noisy",
    "grouping_diagnostics",
    "identifiable_junctions",
    "level_sets",
    "load_config",
    "load_feeder",
    "load_record",
    "metered_level_sets",
    "noise_bound",
    "reactance_matrix",
    "recover_full",
    "recover_partial",
    "reduce_grid",
    "resistance_matrix",
    "run_experiment",
    "save_feeder",
    "save_record",
    "save_report",
    "simulate_probing",
    "write_results",
]
