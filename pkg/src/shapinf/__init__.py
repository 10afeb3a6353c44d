"""Shapley-value influence of categorical features on a classification response.

The pipeline: load a categorical dataset, train a classifier, build a
coalition game per instance (pinned features vs. uniform marginalization),
take Shapley values, and average them over the subsample matching a query.
See the README for the CLI and file formats.
"""

from ._kernels import active_backend
from .classifiers import (
    Classifier,
    ConstantClassifier,
    FeatureBlindClassifier,
    ForestParams,
    FrequencyTableClassifier,
    RandomForest,
    oob_accuracy,
    train_forest,
    train_frequency,
)
from .data import (
    Dataset,
    FeatureSchema,
    Subsample,
    load_dataset,
    load_schema,
    observed_domains,
    subsample,
    write_dataset,
    write_schema,
)
from .datta import DattaResult, datta_influence
from .errors import (
    CapacityError,
    DataFormatError,
    EmptySubsampleError,
    QueryError,
    SchemaError,
    ShapinfError,
    SizeLimitError,
    UnseenAssignmentError,
)
from .game import (
    ClassEvaluator,
    CoalitionGame,
    ComputeSettings,
    DenseGame,
    GameRestriction,
    baseline,
)
from .influence import (
    InfluenceEngine,
    InfluenceQuery,
    InfluenceResult,
    ScenarioReport,
    influence,
)
from .shapley import (
    ShapleyVector,
    balanced_contribution_gap,
    shapley,
    shapley_oracle,
)
from .simlab import (
    SimSpec,
    generate,
    generate_sim1,
    generate_sim2,
    generate_sim3,
    run_experiment,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "Classifier",
    "ClassEvaluator",
    "CoalitionGame",
    "ComputeSettings",
    "ConstantClassifier",
    "DataFormatError",
    "Dataset",
    "DattaResult",
    "DenseGame",
    "EmptySubsampleError",
    "FeatureBlindClassifier",
    "FeatureSchema",
    "ForestParams",
    "FrequencyTableClassifier",
    "GameRestriction",
    "InfluenceEngine",
    "InfluenceQuery",
    "InfluenceResult",
    "QueryError",
    "RandomForest",
    "ScenarioReport",
    "SchemaError",
    "ShapinfError",
    "ShapleyVector",
    "SimSpec",
    "SizeLimitError",
    "Subsample",
    "UnseenAssignmentError",
    "active_backend",
    "balanced_contribution_gap",
    "baseline",
    "datta_influence",
    "generate",
    "generate_sim1",
    "generate_sim2",
    "generate_sim3",
    "influence",
    "load_dataset",
    "load_schema",
    "oob_accuracy",
    "observed_domains",
    "run_experiment",
    "shapley",
    "shapley_oracle",
    "subsample",
    "train_forest",
    "train_frequency",
    "write_dataset",
    "write_schema",
]
