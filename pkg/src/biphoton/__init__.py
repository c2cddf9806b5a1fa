"""Two-photon cascade simulator and entanglement analysis toolkit.

Core chain: model the emitted polarisation state (cascade), sample detector
click streams (events), histogram coincidences into degrees of correlation
(coincidence), reconstruct the density matrix from twelve settings
(tomography), and evaluate the six entanglement tests (metrics). The
pipeline module wires the stages; cli and service are the front ends.
"""

from .cascade import (
    DetectionConfig,
    DotParams,
    dot_state,
    emitted_state,
    expected_autocorr_dip,
    simulate_events,
    xx_autocorrelation_sim,
)
from .coincidence import (
    CoincidenceHistogram,
    NormalizedPeak,
    SettingCorrelation,
    autocorrelation_peak,
    correlate_stream,
    correlation_vs_delay,
    degree_of_correlation,
    histogram,
    normalize,
)
from .config import RunConfig, config_hash, load_preset, resolve_config
from .errors import BiphotonError, DataError, EventParseError, NumericError, UsageError
from .events import Channel, EventStream, parse_events, write_events
from .metrics import (
    METRIC_FUNCTIONS,
    TestTable,
    average_linear_correlation,
    concurrence,
    fidelity_phi_plus,
    hwp_scan,
    largest_eigen,
    peres_min_eig,
    run_all_tests,
    table_from_tomography,
    tangle,
)
from .pipeline import (
    PipelineResult,
    correlate_events,
    run_pipeline,
    simulate_run,
    tomography_input_from_report,
)
from .polarization import (
    ANALYSIS_BASES,
    BASIS_LABELS,
    AnalysisBasis,
    DensityMatrix,
    MeasurementSetting,
    bell_phi,
    bloch,
    born_correlation,
    correlation_matrix,
    hwp_rotate,
    joint_probabilities,
    make_pol,
    partial_trace,
    partial_transpose,
    projector,
    tensor,
)
from .tomography import (
    TomographyEntry,
    TomographyInput,
    TomographyResult,
    input_from_state,
    measurement_set,
    project_physical,
    reconstruct,
    reconstruct_linear,
)

__version__ = "0.1.0"
