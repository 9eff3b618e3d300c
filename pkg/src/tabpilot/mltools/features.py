"""Feature-engineering tools: encoders, selectors, scalers, PCA, RFE."""

from __future__ import annotations

import numpy as np

from ..tabular import DType, Table
from .base import (
    FittedState,
    SelectionResult,
    ToolResult,
    ensure_columns,
    ensure_numeric,
    natural_sort_key,
    pearson,
    population_mean,
    population_std,
    population_variance,
    render_value,
)


def _fit_or_reuse(tool: str, fitted: FittedState | None, fit) -> dict:
    if fitted is not None:
        if fitted.tool != tool:
            raise ValueError(
                f"fitted state belongs to {fitted.tool!r}, expected {tool!r}"
            )
        return fitted.params
    return fit()


def _sorted_categories(values: list) -> list:
    return sorted(set(values), key=natural_sort_key)


def one_hot_encode(table: Table, columns, fitted: FittedState | None = None) -> ToolResult:
    columns = ensure_columns(table, columns)

    def fit() -> dict:
        per_column = {}
        for name in columns:
            present = [v for v in table.column(name) if v is not None]
            per_column[name] = {
                "dtype": table.dtype(name).value,
                "categories": _sorted_categories(present),
            }
        return {"columns": per_column}

    params = _fit_or_reuse("one_hot_encode", fitted, fit)
    out_columns = []
    lines = []
    for name, dtype, cells in table.columns():
        spec = params["columns"].get(name)
        if spec is None:
            out_columns.append((name, dtype, cells))
            continue
        categories = spec["categories"]
        source_dtype = DType(spec["dtype"])
        for category in categories:
            indicator_name = f"{name}_{render_value(category, source_dtype)}"
            indicator = [1 if v == category else 0 for v in cells]
            out_columns.append((indicator_name, DType.Integer, indicator))
        lines.append(f"{name} -> {len(categories)} indicator columns")
    for name in columns:
        if name not in params["columns"]:
            raise KeyError(name)
    return ToolResult(
        table=Table(out_columns),
        report="one_hot_encode: " + "; ".join(lines),
        fitted=FittedState("one_hot_encode", params),
    )


def label_encode(table: Table, columns, fitted: FittedState | None = None) -> ToolResult:
    columns = ensure_columns(table, columns)

    def fit() -> dict:
        per_column = {}
        for name in columns:
            present = [v for v in table.column(name) if v is not None]
            cats = _sorted_categories(present)
            per_column[name] = {"categories": cats}
        return {"columns": per_column}

    params = _fit_or_reuse("label_encode", fitted, fit)
    out = table
    lines = []
    for name in columns:
        if name not in params["columns"]:
            raise KeyError(name)
        mapping = {v: i for i, v in enumerate(params["columns"][name]["categories"])}
        encoded = [mapping.get(v, -1) if v is not None else -1
                   for v in table.column(name)]
        out = out.with_column(name, DType.Integer, encoded)
        lines.append(f"{name}: {len(mapping)} categories")
    return ToolResult(
        table=out,
        report="label_encode: " + "; ".join(lines),
        fitted=FittedState("label_encode", params),
    )


def frequency_encode(table: Table, columns, fitted: FittedState | None = None) -> ToolResult:
    columns = ensure_columns(table, columns)

    def fit() -> dict:
        per_column = {}
        for name in columns:
            counts: dict = {}
            for v in table.column(name):
                if v is not None:
                    counts[v] = counts.get(v, 0) + 1
            per_column[name] = {"counts": counts}
        return {"columns": per_column, "n_rows": table.n_rows}

    params = _fit_or_reuse("frequency_encode", fitted, fit)
    n = params["n_rows"]
    out = table
    lines = []
    for name in columns:
        if name not in params["columns"]:
            raise KeyError(name)
        counts = params["columns"][name]["counts"]
        encoded = [counts.get(v, 0) / n if v is not None else 0.0
                   for v in table.column(name)]
        out = out.with_column(name, DType.Float, [float(e) for e in encoded])
        lines.append(f"{name}: {len(counts)} categories over {n} fit rows")
    return ToolResult(
        table=out,
        report="frequency_encode: " + "; ".join(lines),
        fitted=FittedState("frequency_encode", params),
    )


def target_encode(table: Table, columns, target: str, m: float = 0.0,
                  fitted: FittedState | None = None) -> ToolResult:
    columns = ensure_columns(table, columns)

    def fit() -> dict:
        if not table.has_column(target):
            raise KeyError(target)
        if not table.is_numeric(target):
            raise ValueError(
                f"target {target!r} is {table.dtype(target).value}, expected numeric"
            )
        target_cells = table.column(target)
        present_targets = [float(v) for v in target_cells if v is not None]
        if not present_targets:
            raise ValueError(f"target {target!r} has no present values")
        global_mean = population_mean(present_targets)
        per_column = {}
        for name in columns:
            stats: dict = {}
            for v, t in zip(table.column(name), target_cells):
                if v is None or t is None:
                    continue
                count, total = stats.get(v, (0, 0.0))
                stats[v] = (count + 1, total + float(t))
            per_column[name] = {
                "stats": {v: [c, s] for v, (c, s) in stats.items()},
            }
        return {"columns": per_column, "global_mean": global_mean, "m": float(m)}

    params = _fit_or_reuse("target_encode", fitted, fit)
    global_mean = params["global_mean"]
    smoothing = params["m"]
    out = table
    lines = []
    for name in columns:
        if name not in params["columns"]:
            raise KeyError(name)
        stats = params["columns"][name]["stats"]
        encoded = []
        for v in table.column(name):
            if v is None or v not in stats:
                encoded.append(global_mean)
                continue
            count, total = stats[v]
            encoded.append(
                (total + smoothing * global_mean) / (count + smoothing)
            )
        out = out.with_column(name, DType.Float, [float(e) for e in encoded])
        lines.append(f"{name}: {len(stats)} categories (m={smoothing})")
    return ToolResult(
        table=out,
        report=f"target_encode vs {target}: " + "; ".join(lines),
        fitted=FittedState("target_encode", params),
    )


def correlation_feature_selection(table: Table, target: str,
                                  threshold: float) -> SelectionResult:
    if not table.has_column(target):
        raise KeyError(target)
    if not table.is_numeric(target):
        raise ValueError(f"target {target!r} must be numeric")
    candidates = [n for n in table.names if n != target and table.is_numeric(n)]
    target_cells = table.column(target)

    scores: dict[str, float] = {}
    warnings = []
    for name in candidates:
        pairs = [
            (float(x), float(y))
            for x, y in zip(table.column(name), target_cells)
            if x is not None and y is not None
        ]
        if not pairs:
            scores[name] = 0.0
            warnings.append(f"{name}: no complete pairs (warning)")
            continue
        xs = [p[0] for p in pairs]
        ys = [p[1] for p in pairs]
        if population_variance(xs) == 0.0:
            scores[name] = 0.0
            warnings.append(f"{name}: zero variance, r reported as 0 (warning)")
            continue
        scores[name] = pearson(xs, ys)

    selected = [n for n in candidates if abs(scores[n]) >= threshold]
    lines = [f"{name}: r={scores[name]:.6f}" for name in candidates]
    report = (
        f"correlation_feature_selection vs {target} (|r| >= {threshold}): "
        f"selected [{', '.join(selected)}]; " + "; ".join(lines + warnings)
    )
    return SelectionResult(selected=selected, report=report, scores=scores)


def variance_feature_selection(table: Table, columns,
                               threshold: float = 0.0) -> SelectionResult:
    columns = ensure_columns(table, columns)
    ensure_numeric(table, columns)
    scores: dict[str, float] = {}
    for name in columns:
        present = table.numeric_values(name)
        scores[name] = population_variance(present) if present else 0.0
    selected = [n for n in columns if scores[n] > threshold]
    lines = [f"{name}: var={scores[name]:.6f}" for name in columns]
    report = (
        f"variance_feature_selection (var > {threshold}): "
        f"selected [{', '.join(selected)}]; " + "; ".join(lines)
    )
    return SelectionResult(selected=selected, report=report, scores=scores)


def scale_features(table: Table, columns, method: str = "standard",
                   fitted: FittedState | None = None) -> ToolResult:
    columns = ensure_columns(table, columns)
    ensure_numeric(table, columns)
    if method not in ("standard", "minmax"):
        raise ValueError(f"unknown scaling method {method!r}")

    def fit() -> dict:
        per_column = {}
        for name in columns:
            present = table.numeric_values(name)
            if not present:
                raise ValueError(f"column {name!r} has no present values to scale")
            if method == "standard":
                per_column[name] = {
                    "mean": population_mean(present),
                    "std": population_std(present),
                }
            else:
                per_column[name] = {"min": min(present), "max": max(present)}
        return {"method": method, "columns": per_column}

    params = _fit_or_reuse("scale_features", fitted, fit)
    fitted_method = params["method"]
    out = table
    lines = []
    for name in columns:
        if name not in params["columns"]:
            raise KeyError(name)
        stats = params["columns"][name]
        cells = table.column(name)
        if fitted_method == "standard":
            spread = stats["std"]
            origin = stats["mean"]
        else:
            spread = stats["max"] - stats["min"]
            origin = stats["min"]
        if spread == 0.0:
            scaled = [None if v is None else 0.0 for v in cells]
            lines.append(f"{name}: constant column, all 0.0 (warning)")
        else:
            scaled = [None if v is None else (float(v) - origin) / spread
                      for v in cells]
            lines.append(f"{name}: {fitted_method}")
        out = out.with_column(name, DType.Float, scaled)
    return ToolResult(
        table=out,
        report="scale_features: " + "; ".join(lines),
        fitted=FittedState("scale_features", params),
    )


def perform_pca(table: Table, columns, n_components: int,
                fitted: FittedState | None = None) -> ToolResult:
    columns = ensure_columns(table, columns)
    ensure_numeric(table, columns)
    if not 1 <= n_components <= len(columns):
        raise ValueError(
            f"n_components must be within [1, {len(columns)}], got {n_components}"
        )
    if len(columns) > table.n_rows:
        raise ValueError("PCA requires at least as many rows as columns")
    for name in columns:
        if table.missing_count(name):
            raise ValueError(f"column {name!r} has missing cells")

    matrix = np.array([[float(v) for v in table.column(n)] for n in columns]).T

    def fit() -> dict:
        means = matrix.mean(axis=0)
        centered = matrix - means
        cov = centered.T @ centered / matrix.shape[0]
        eigenvalues, eigenvectors = np.linalg.eigh(cov)
        order = np.argsort(eigenvalues)[::-1]
        eigenvalues = np.clip(eigenvalues[order], 0.0, None)
        axes = eigenvectors[:, order]
        # orient every axis so its largest-magnitude loading is positive
        for k in range(axes.shape[1]):
            pivot = int(np.argmax(np.abs(axes[:, k])))
            if axes[pivot, k] < 0:
                axes[:, k] = -axes[:, k]
        total = float(eigenvalues.sum())
        ratios = [float(v) / total if total > 0 else 0.0 for v in eigenvalues]
        return {
            "columns": list(columns),
            "means": [float(v) for v in means],
            "axes": [[float(v) for v in axes[:, k]] for k in range(n_components)],
            "explained_variance": [float(v) for v in eigenvalues[:n_components]],
            "explained_variance_ratio": ratios[:n_components],
        }

    params = _fit_or_reuse("perform_pca", fitted, fit)
    if params["columns"] != list(columns):
        raise ValueError("fitted PCA state was built for different columns")
    means = np.array(params["means"])
    axes = np.array(params["axes"]).T  # shape (p, k)
    projected = (matrix - means) @ axes

    out_columns = []
    inserted = False
    source = set(columns)
    for name, dtype, cells in table.columns():
        if name in source:
            if not inserted:
                for k in range(projected.shape[1]):
                    out_columns.append(
                        (f"pca_{k + 1}", DType.Float, [float(v) for v in projected[:, k]])
                    )
                inserted = True
            continue
        out_columns.append((name, dtype, cells))
    ratios = ", ".join(f"{r:.6f}" for r in params["explained_variance_ratio"])
    return ToolResult(
        table=Table(out_columns),
        report=f"perform_pca: {projected.shape[1]} components from "
               f"[{', '.join(columns)}]; explained variance ratios [{ratios}]",
        fitted=FittedState("perform_pca", params),
    )


def _standardize_matrix(matrix: np.ndarray) -> np.ndarray:
    means = matrix.mean(axis=0)
    stds = matrix.std(axis=0)
    stds[stds == 0.0] = 1.0
    return (matrix - means) / stds


def _least_squares_coefs(features: np.ndarray, target: np.ndarray) -> np.ndarray:
    design = np.hstack([np.ones((features.shape[0], 1)), features])
    coefs, *_ = np.linalg.lstsq(design, target, rcond=None)
    return coefs[1:]


def _logistic_coefs(features: np.ndarray, target: np.ndarray,
                    iterations: int = 400, lr: float = 0.5) -> np.ndarray:
    design = np.hstack([np.ones((features.shape[0], 1)), features])
    weights = np.zeros(design.shape[1])
    n = design.shape[0]
    for _ in range(iterations):
        z = design @ weights
        probs = 1.0 / (1.0 + np.exp(-np.clip(z, -30, 30)))
        gradient = design.T @ (probs - target) / n
        weights -= lr * gradient
    return weights[1:]


def perform_rfe(table: Table, target: str, columns,
                n_features_to_select: int) -> SelectionResult:
    columns = ensure_columns(table, columns)
    ensure_numeric(table, columns)
    if not table.has_column(target):
        raise KeyError(target)
    if not table.is_numeric(target):
        raise ValueError(f"target {target!r} must be numeric")
    if not 1 <= n_features_to_select <= len(columns):
        raise ValueError(
            f"n_features_to_select must be within [1, {len(columns)}]"
        )
    for name in list(columns) + [target]:
        if table.missing_count(name):
            raise ValueError(f"column {name!r} has missing cells")

    target_values = np.array([float(v) for v in table.column(target)])
    distinct = set(target_values.tolist())
    if len(distinct) < 2:
        raise ValueError(f"target {target!r} is degenerate (single value)")
    binary = distinct <= {0.0, 1.0}

    remaining = list(columns)
    eliminated = []
    while len(remaining) > n_features_to_select:
        matrix = np.array(
            [[float(v) for v in table.column(n)] for n in remaining]
        ).T
        standardized = _standardize_matrix(matrix)
        if binary:
            coefs = _logistic_coefs(standardized, target_values)
        else:
            coefs = _least_squares_coefs(standardized, target_values)
        magnitudes = np.abs(coefs)
        weakest = magnitudes.min()
        # tie-break: among equally weak columns drop the later one first
        # (equality up to float noise from the solver)
        tolerance = 1e-9 * max(1.0, float(weakest))
        drop_index = max(
            i for i, v in enumerate(magnitudes) if v <= weakest + tolerance
        )
        eliminated.append(remaining.pop(drop_index))

    report = (
        f"perform_rfe vs {target}: selected [{', '.join(remaining)}]; "
        f"eliminated order [{', '.join(eliminated)}]"
    )
    return SelectionResult(selected=remaining, report=report)


def create_polynomial_features(table: Table, columns, degree: int = 2,
                               interactions: bool = True) -> ToolResult:
    columns = ensure_columns(table, columns)
    ensure_numeric(table, columns)
    if degree < 2:
        raise ValueError(f"degree must be >= 2, got {degree}")

    ordered = [n for n in table.names if n in set(columns)]
    out = table
    created = []
    for name in ordered:
        cells = table.column(name)
        for power in range(2, degree + 1):
            new_name = f"{name}^{power}"
            values = [None if v is None else v ** power for v in cells]
            dtype = table.dtype(name)
            if dtype is DType.Integer:
                out = out.with_column(new_name, DType.Integer, values)
            else:
                out = out.with_column(
                    new_name, DType.Float,
                    [None if v is None else float(v) for v in values],
                )
            created.append(new_name)
    if interactions:
        for i, a in enumerate(ordered):
            for b in ordered[i + 1:]:
                new_name = f"{a}*{b}"
                values = [
                    None if (x is None or y is None) else x * y
                    for x, y in zip(table.column(a), table.column(b))
                ]
                if table.dtype(a) is DType.Integer and table.dtype(b) is DType.Integer:
                    out = out.with_column(new_name, DType.Integer, values)
                else:
                    out = out.with_column(
                        new_name, DType.Float,
                        [None if v is None else float(v) for v in values],
                    )
                created.append(new_name)
    return ToolResult(
        table=out,
        report=f"create_polynomial_features: added [{', '.join(created) or 'none'}] "
               f"(degree={degree}, interactions={interactions})",
    )


def create_feature_combinations(table: Table, columns,
                                combination_type: str) -> ToolResult:
    columns = ensure_columns(table, columns)
    if combination_type not in ("product", "concat"):
        raise ValueError(f"unknown combination_type {combination_type!r}")
    if combination_type == "product":
        ensure_numeric(table, columns)

    ordered = [n for n in table.names if n in set(columns)]
    out = table
    created = []
    for i, a in enumerate(ordered):
        for b in ordered[i + 1:]:
            xs = table.column(a)
            ys = table.column(b)
            if combination_type == "product":
                new_name = f"{a}*{b}"
                values = [
                    None if (x is None or y is None) else x * y
                    for x, y in zip(xs, ys)
                ]
                if table.dtype(a) is DType.Integer and table.dtype(b) is DType.Integer:
                    out = out.with_column(new_name, DType.Integer, values)
                else:
                    out = out.with_column(
                        new_name, DType.Float,
                        [None if v is None else float(v) for v in values],
                    )
            else:
                new_name = f"{a}_{b}"
                da, db = table.dtype(a), table.dtype(b)
                values = [
                    None if (x is None or y is None)
                    else f"{render_value(x, da)}_{render_value(y, db)}"
                    for x, y in zip(xs, ys)
                ]
                out = out.with_column(new_name, DType.Text, values)
            created.append(new_name)
    return ToolResult(
        table=out,
        report=f"create_feature_combinations ({combination_type}): "
               f"added [{', '.join(created) or 'none'}]",
    )
