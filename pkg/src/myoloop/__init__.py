"""myoloop: a hardware-free myoelectric pattern-recognition training loop.

Feature extraction from multichannel EMG, discriminant-subspace fitting, the
rest-anchored spatial classifier, the session/recalibration protocol, a
target-acquisition assessment with its four metrics, seeded synthetic EMG
with a simulated user, and a streaming gateway for live clients.
"""
from .classifier import AxisSet, Decision, build_axes, classify, decision_stream
from .flt import (
    CursorConfig,
    FltConfig,
    TargetSpec,
    Trial,
    TrialRecord,
    adjudicate,
    block_metrics,
    completion_rate,
    overshoot,
    path_efficiency,
    sample_targets,
    throughput,
)
from .session import (
    ExplorationLog,
    ManualClock,
    Phase,
    ProtocolStage,
    Session,
    normalized_training_time,
    plan_session,
)
from .signal import (
    EmgSample,
    EmgStream,
    EmgWindow,
    FeatureConfig,
    FeatureVector,
    extract_features,
    feature_matrix,
    read_emg_file,
    window_stream,
    write_emg_file,
)
from .subspace import (
    CalibrationSet,
    SubspaceModel,
    fit_lda,
    load_model,
    project,
    reviewer_coords,
    save_model,
)
from .synth import AgentPolicy, ClassProfile, gen_signal, run_agent, run_sweep, separability_sweep

__version__ = "0.1.0"
