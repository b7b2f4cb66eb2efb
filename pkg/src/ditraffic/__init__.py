"""Directed-information learning of event-driven machine-type traffic."""

from .datagen import Coupling, DeviceProfile, GeneratorConfig, generate, paper_scenario_config
from .di import (
    EntropyCounter,
    PairwiseDiResult,
    di_matrix,
    entropy,
    entropy_eval_count,
    full_di_oracle,
    pairwise_di,
    pairwise_di_from_joint,
    stated_entropy_eval_count,
)
from .predictor import (
    EvaluationReport,
    PredictorModel,
    evaluate,
    load_model,
    predict,
    save_model,
    train,
)
from .prob import VariableSelector, estimate_joint, marginalize
from .types import (
    ActivityTrace,
    CausalityEntry,
    CausalitySet,
    ConfigError,
    DatasetError,
    DiMatrix,
    EventDataset,
    JointDistribution,
    ModelFormatError,
    Prediction,
    align_events,
    pad_trace,
    validate_dataset,
)

__version__ = "0.1.0"
