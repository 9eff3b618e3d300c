"""Iterative debugging-and-testing development loop."""

from .errors import (
    ErrorClass,
    ErrorRecord,
    ExecutionResult,
    classify_error,
    jaccard,
    normalize_message,
    similar_history,
)
from .loop import (
    DebugTrace,
    DeveloperBackend,
    LoopOutcome,
    develop,
    evaluate_retry_rule,
    rule_based_debug,
)
from .sandbox import CodeArtifact, SandboxSpawnFailure, execute_artifact
