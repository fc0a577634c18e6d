"""Social embeddedness of bug reporters and its link to report validity."""

__version__ = "0.1.0"

from .classify import Dataset, ThresholdModel, TrainedModels  # noqa: E402
from .evaluation import EvalConfig, EvaluationReport, build_dataset, evaluate_pipeline  # noqa: E402
from .events import (  # noqa: E402
    BugRecord,
    ChangeEvent,
    Vocabulary,
    assemble_bug_records,
    corpus_stats,
    parse_event_stream,
    read_events,
)
from .metrics import FEATURES, NodeMetrics, feature_vector  # noqa: E402
from .netbuild import WindowIndex, build_network, following_window, preceding_window  # noqa: E402
from .stats import hypothesis_suite, wmw_test  # noqa: E402
from .synth import SynthConfig, generate_community  # noqa: E402

__all__ = [
    "BugRecord", "ChangeEvent", "Dataset", "EvalConfig", "EvaluationReport", "FEATURES", "NodeMetrics",
    "SynthConfig", "ThresholdModel", "TrainedModels", "Vocabulary", "WindowIndex", "assemble_bug_records",
    "build_dataset", "build_network", "corpus_stats", "evaluate_pipeline", "feature_vector", "following_window",
    "generate_community", "hypothesis_suite", "parse_event_stream", "preceding_window", "read_events", "wmw_test",
]
