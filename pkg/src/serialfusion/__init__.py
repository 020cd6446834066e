"""Serial fusion of biometric matchers: calibration, ROC prediction, validation."""

__version__ = "0.1.0"

from .cascade import (
    CascadeModel,
    PredictedRoc,
    StageConfig,
    calibrate,
    enumerate_chains,
    heuristic_order,
    predict_roc,
    rank_chains,
)
from .error_model import (
    ErrorBand,
    ErrorParams,
    Sign,
    band,
    corrected_roc,
    delta_roc,
    estimate_params,
    perturb_point,
)
from .roc import (
    CalibrationWarning,
    OperationalPoint,
    PointKind,
    RocCurve,
    auc,
    build_roc,
    eer,
    far_at,
    frr_at,
    zero_far_point,
    zero_frr_point,
)
from .scores import (
    CorrelationMatrix,
    MatchedScoreTable,
    ScoreSet,
    SynthSpec,
    column_score_set,
    correlation_matrix,
    parse_score_table,
    split_table,
    synth_generate,
)
from .sim import Decision, compare_rocs, decide_stage, empirical_roc, run_cascade
