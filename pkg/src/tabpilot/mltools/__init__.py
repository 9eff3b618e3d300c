"""Native tool library: cleaning, feature engineering, model selection."""

from .base import (
    ExpressionParseError,
    FittedState,
    ModelError,
    SelectionResult,
    ToolResult,
)
from .cleaning import (
    convert_data_types,
    detect_and_handle_outliers_iqr,
    detect_and_handle_outliers_zscore,
    fill_missing_values,
    format_datetime,
    remove_columns_with_missing_data,
    remove_duplicates,
)
from .expressions import derive_column
from .features import (
    correlation_feature_selection,
    create_feature_combinations,
    create_polynomial_features,
    frequency_encode,
    label_encode,
    one_hot_encode,
    perform_pca,
    perform_rfe,
    scale_features,
    target_encode,
    variance_feature_selection,
)
from .models import (
    FittedModel,
    ModelReport,
    predict,
    train_and_validation_and_select_the_best_model,
)
from .pipeline import (
    PipelineProgram,
    PipelineStep,
    PipelineValidationError,
    run_pipeline,
)

TOOL_NAMES = [
    "fill_missing_values",
    "remove_columns_with_missing_data",
    "detect_and_handle_outliers_zscore",
    "detect_and_handle_outliers_iqr",
    "remove_duplicates",
    "convert_data_types",
    "format_datetime",
    "one_hot_encode",
    "label_encode",
    "frequency_encode",
    "target_encode",
    "correlation_feature_selection",
    "variance_feature_selection",
    "scale_features",
    "perform_pca",
    "perform_rfe",
    "create_polynomial_features",
    "create_feature_combinations",
    "train_and_validation_and_select_the_best_model",
]
