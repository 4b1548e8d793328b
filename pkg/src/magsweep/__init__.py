"""Desk-scale toolkit for UAV magnetic landmine surveys.

Simulates dual-magnetometer drone surveys over buried dipole sources,
removes motor interference with wavelet-domain two-sensor cancellation
(WAIC-UP), detects anomalies with trajectory-matrix PCA plus a one-class
SVM (RUDE), localizes detections with HDBSCAN, and benchmarks the whole
pipeline against low-pass filtering and hard thresholding.
"""

from .scenario import (
    M19_MOMENT,
    FlightPath,
    MineSource,
    Motor,
    MotorComponent,
    MotorComponentKind,
    Scenario,
    SurveyRecord,
    dipole_field,
    fixed_corner_scenario,
    generate_random_scenario,
    motor_field,
    read_survey_csv,
    serpentine_path,
    simulate,
    write_survey_csv,
)
from .dsp import WaveletSpectrum, cwt, default_scales, icwt, lowpass
from .waicup import (
    GainProfile,
    clean_channel_pair,
    clean_vector,
    estimate_gain,
    reconstruct,
)
from .rude import (
    ConfidenceSeries,
    ReducedPoints,
    TrajectoryMatrix,
    build_trajectory,
    confidence,
    ocsvm_fit_predict,
    pca2,
)
from .localize import (
    ConfusionCounts,
    DetectionCluster,
    detect_positions,
    hard_threshold_detector,
    hdbscan,
    score_detections,
)
from .metrics import (
    MetricsReport,
    f1,
    pearson,
    precision,
    recall,
    threat_score,
)
from .bench import (
    BenchmarkResult,
    Cleaner,
    Detector,
    MethodCombo,
    run_benchmark1,
    run_benchmark2,
)

__version__ = "0.1.0"
