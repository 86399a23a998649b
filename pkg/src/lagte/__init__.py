"""Time delay estimation for directed influence between time series.

The package estimates how long a disturbance in a source series takes to
reach a target series.  The estimate is the lag that maximizes effective
transfer entropy between the symbol-encoded pair, and its uncertainty is
quantified by refitting the lag on Markov bootstrap resamples of both
series.
"""

from lagte.bootstrap import MarkovModel, fit_markov, sample_bootstrap_series
from lagte.core import (
    DataError,
    InvalidArgumentError,
    LagSample,
    LagTEError,
    ParseError,
    PipelineConfig,
    SpeedSeries,
)
from lagte.entropy import (
    LagTEProfile,
    best_lag,
    effective_transfer_entropy,
    shannon_entropy,
    transfer_entropy,
)
from lagte.estimator import (
    EstimateDetails,
    GridSearchResult,
    estimate_delay,
    functionals,
    grid_search,
    lemma1_interval,
)
from lagte.network import (
    HopEstimate,
    PathReport,
    RoadNetworkInput,
    analyze_paths,
    emit_report,
    extract_incident_window,
    load_path_spec,
    load_speed_csv,
    read_report_json,
)
from lagte.preprocess import (
    Decomposition,
    SymbolSeries,
    decompose,
    encode,
    encode_fixed,
    normalize,
)
from lagte.simulate import BatchReport, SimSpec, generate_pair, run_batch

__version__ = "0.1.0"

__all__ = [
    "BatchReport",
    "DataError",
    "Decomposition",
    "EstimateDetails",
    "GridSearchResult",
    "HopEstimate",
    "InvalidArgumentError",
    "LagSample",
    "LagTEError",
    "LagTEProfile",
    "MarkovModel",
    "ParseError",
    "PathReport",
    "PipelineConfig",
    "RoadNetworkInput",
    "SimSpec",
    "SpeedSeries",
    "SymbolSeries",
    "analyze_paths",
    "best_lag",
    "decompose",
    "effective_transfer_entropy",
    "emit_report",
    "encode",
    "encode_fixed",
    "estimate_delay",
    "extract_incident_window",
    "fit_markov",
    "functionals",
    "generate_pair",
    "grid_search",
    "lemma1_interval",
    "load_path_spec",
    "load_speed_csv",
    "normalize",
    "read_report_json",
    "run_batch",
    "sample_bootstrap_series",
    "shannon_entropy",
    "transfer_entropy",
]
