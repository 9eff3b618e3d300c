"""Developer: compile the plan into an executable artifact.

The offline backend inspects the workspace and emits either a generated
analysis script (the two exploratory phases) or a native tool pipeline
(cleaning, feature engineering, modeling).  The model-backed variant asks
for code blocks and runs the three-step locate/correct/merge repair chain.
"""

from __future__ import annotations

import re
from pathlib import Path

from ..devloop.errors import ErrorRecord
from ..devloop.loop import DebugTrace, evaluate_retry_rule, rule_based_debug
from ..devloop.sandbox import CodeArtifact
from ..mltools.pipeline import PipelineProgram, PipelineStep
from ..tabular import Table, read_csv
from .base import CompetitionInfo, fill_prompt, load_prompt
from . import strategy

STATS_MARKER = "== statistics =="


def _literal(value) -> str:
    return repr(value)


PRE_EDA_TEMPLATE = """\
from tabpilot.mltools.base import population_mean, population_std, quantile
from tabpilot.tabular import read_csv

train = read_csv("train.csv")
test = read_csv("test.csv")

print("{marker}")
print(f"train shape: ({{train.n_rows}}, {{train.n_columns}})")
print(f"test shape: ({{test.n_rows}}, {{test.n_columns}})")
print("missing cells per train column:")
for name in train.names:
    print(f"  {{name}}: {{train.missing_count(name)}}")
print("missing cells per test column:")
for name in test.names:
    print(f"  {{name}}: {{test.missing_count(name)}}")

numeric = {numeric_columns}
print("{marker}")
print("numeric feature summaries (train):")
for name in numeric:
    values = train.numeric_values(name)
    if not values:
        continue
    print(f"  {{name}}: mean {{population_mean(values):.6f}} "
          f"std {{population_std(values):.6f}} "
          f"min {{min(values):.6f}} q1 {{quantile(values, 0.25):.6f}} "
          f"median {{quantile(values, 0.5):.6f}} "
          f"q3 {{quantile(values, 0.75):.6f}} max {{max(values):.6f}}")

categorical = {categorical_columns}
print("{marker}")
print("categorical frequencies (train):")
for name in categorical:
    counts = {{}}
    for value in train.column(name):
        if value is not None:
            counts[value] = counts.get(value, 0) + 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], str(kv[0])))
    for value, count in ranked[:8]:
        print(f"  {{name}} = {{value}}: {{count}}")

print("{marker}")
print("findings:")
for name in train.names:
    missing = train.missing_count(name)
    if missing:
        print(f"  {{name}} has {{missing}} missing cells")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path
    images = Path("pre_eda/images")
    images.mkdir(parents=True, exist_ok=True)
    for name in numeric[:4]:
        values = train.numeric_values(name)
        if not values:
            continue
        plt.figure(figsize=(6, 3))
        plt.hist(values, bins=30)
        plt.title(f"{{name}} distribution")
        plt.tight_layout()
        plt.savefig(images / f"histogram_{{name.lower()}}.png")
        plt.close()
    for name in categorical[:4]:
        counts = {{}}
        for value in train.column(name):
            if value is not None:
                counts[str(value)] = counts.get(str(value), 0) + 1
        if not counts or len(counts) > 20:
            continue
        plt.figure(figsize=(6, 3))
        keys = sorted(counts)
        plt.bar(keys, [counts[k] for k in keys])
        plt.title(f"{{name}} frequencies")
        plt.tight_layout()
        plt.savefig(images / f"bar_{{name.lower()}}.png")
        plt.close()
except ImportError:
    print("plot generation skipped: matplotlib unavailable")
"""

DEEP_EDA_TEMPLATE = """\
from tabpilot.mltools.base import pearson, population_mean, population_std, quantile
from tabpilot.tabular import read_csv

train = read_csv("cleaned_train.csv")
target = {target}

print("{marker}")
print("cleaned numeric feature summaries:")
numeric = {numeric_columns}
for name in numeric:
    values = train.numeric_values(name)
    if not values:
        continue
    print(f"  {{name}}: mean {{population_mean(values):.6f}} "
          f"std {{population_std(values):.6f}} min {{min(values):.6f}} "
          f"q1 {{quantile(values, 0.25):.6f}} median {{quantile(values, 0.5):.6f}} "
          f"q3 {{quantile(values, 0.75):.6f}} max {{max(values):.6f}}")

print("{marker}")
print(f"mean {{target}} per category:")
categorical = {categorical_columns}
target_cells = train.column(target)
for name in categorical:
    groups = {{}}
    for value, outcome in zip(train.column(name), target_cells):
        if value is None or outcome is None:
            continue
        count, total = groups.get(value, (0, 0.0))
        groups[value] = (count + 1, total + float(outcome))
    for value in sorted(groups, key=str):
        count, total = groups[value]
        print(f"  {{name}} = {{value}}: {{total / count:.6f}}")

print("{marker}")
print("correlation matrix:")
corr_columns = {corr_columns}
cells = {{name: train.column(name) for name in corr_columns}}
for a in corr_columns:
    row = []
    for b in corr_columns:
        pairs = [(float(x), float(y)) for x, y in zip(cells[a], cells[b])
                 if x is not None and y is not None]
        value = pearson([p[0] for p in pairs], [p[1] for p in pairs])
        row.append(f"{{value:+.6f}}")
    print(f"  {{a}}: {{' '.join(row)}}")

print("{marker}")
print("insights:")
for name in corr_columns:
    if name == target:
        continue
    pairs = [(float(x), float(y)) for x, y in zip(cells[name], target_cells)
             if x is not None and y is not None]
    value = pearson([p[0] for p in pairs], [p[1] for p in pairs])
    print(f"  correlation of {{name}} with {{target}}: {{value:.6f}}")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    from pathlib import Path
    images = Path("deep_eda/images")
    images.mkdir(parents=True, exist_ok=True)
    for name in numeric[:4]:
        values = train.numeric_values(name)
        if not values:
            continue
        plt.figure(figsize=(6, 3))
        plt.hist(values, bins=30)
        plt.title(f"{{name}} after cleaning")
        plt.tight_layout()
        plt.savefig(images / f"cleaned_{{name.lower()}}.png")
        plt.close()
except ImportError:
    print("plot generation skipped: matplotlib unavailable")
"""


def _numeric_and_categorical(table: Table, info: CompetitionInfo):
    ids = set(info.id_columns())
    numeric = [n for n in table.names
               if table.is_numeric(n) and n not in ids and n != info.target_variable]
    categorical = [
        n for n in table.names
        if not table.is_numeric(n) and n not in ids
        and len(set(v for v in table.column(n) if v is not None)) <= 12
    ]
    return numeric, categorical


def generate_pre_eda_script(workspace: Path, info: CompetitionInfo) -> str:
    train = read_csv(workspace / "train.csv")
    numeric, categorical = _numeric_and_categorical(train, info)
    return PRE_EDA_TEMPLATE.format(
        marker=STATS_MARKER,
        numeric_columns=_literal(numeric),
        categorical_columns=_literal(categorical),
    )


def generate_deep_eda_script(workspace: Path, info: CompetitionInfo) -> str:
    train = read_csv(workspace / "cleaned_train.csv")
    numeric, categorical = _numeric_and_categorical(train, info)
    target = info.target_variable
    corr = [n for n in numeric if n not in set(info.id_columns())]
    if train.has_column(target) and train.is_numeric(target):
        corr = corr + [target]
    return DEEP_EDA_TEMPLATE.format(
        marker=STATS_MARKER,
        target=_literal(target),
        numeric_columns=_literal(numeric),
        categorical_columns=_literal(categorical),
        corr_columns=_literal(corr),
    )


def build_cleaning_pipeline(workspace: Path, info: CompetitionInfo) -> PipelineProgram:
    train = read_csv(workspace / "train.csv")
    test = read_csv(workspace / "test.csv")
    profile = strategy.cleaning_profile(train, test, info)
    steps: list[PipelineStep] = []
    for key, table in (("train", train), ("test", test)):
        drop = [c for c in profile.drop_columns if table.has_column(c)]
        if drop:
            steps.append(PipelineStep(
                tool="remove_columns_with_missing_data",
                params={"columns": drop}, inputs=[key], output=key,
            ))
        if profile.fill_numeric[key]:
            steps.append(PipelineStep(
                tool="fill_missing_values",
                params={"columns": profile.fill_numeric[key], "method": "median"},
                inputs=[key], output=key,
            ))
        if profile.fill_categorical[key]:
            steps.append(PipelineStep(
                tool="fill_missing_values",
                params={"columns": profile.fill_categorical[key], "method": "mode"},
                inputs=[key], output=key,
            ))
        if profile.clip_columns[key]:
            steps.append(PipelineStep(
                tool="detect_and_handle_outliers_iqr",
                params={"columns": profile.clip_columns[key],
                        "factor": 1.5, "method": "clip"},
                inputs=[key], output=key,
            ))
    if profile.dedupe_train:
        steps.append(PipelineStep(
            tool="remove_duplicates", params={"keep": "first"},
            inputs=["train"], output="train",
        ))
    return PipelineProgram(
        inputs={"train": "train.csv", "test": "test.csv"},
        outputs={"train": "cleaned_train.csv", "test": "cleaned_test.csv"},
        steps=steps,
    )


def build_feature_pipeline(workspace: Path, info: CompetitionInfo) -> PipelineProgram:
    train = read_csv(workspace / "cleaned_train.csv")
    profile = strategy.feature_profile(train, info)
    steps: list[PipelineStep] = []
    for key in ("train", "test"):
        for name, expression in profile.derivations:
            steps.append(PipelineStep(
                tool="derive_column",
                params={"new_name": name, "expression": expression},
                inputs=[key], output=key,
            ))
    if profile.one_hot_columns:
        steps.append(PipelineStep(
            tool="one_hot_encode", params={"columns": profile.one_hot_columns},
            inputs=["train"], output="train", fit="onehot",
        ))
        steps.append(PipelineStep(
            tool="one_hot_encode", params={"columns": profile.one_hot_columns},
            inputs=["test"], output="test", apply="onehot",
        ))
    if profile.drop_text_columns:
        for key in ("train", "test"):
            steps.append(PipelineStep(
                tool="remove_columns_with_missing_data",
                params={"columns": profile.drop_text_columns},
                inputs=[key], output=key,
            ))
    if profile.scale_columns:
        steps.append(PipelineStep(
            tool="scale_features",
            params={"columns": profile.scale_columns, "method": "standard"},
            inputs=["train"], output="train", fit="scaler",
        ))
        steps.append(PipelineStep(
            tool="scale_features",
            params={"columns": profile.scale_columns, "method": "standard"},
            inputs=["test"], output="test", apply="scaler",
        ))
    return PipelineProgram(
        inputs={"train": "cleaned_train.csv", "test": "cleaned_test.csv"},
        outputs={"train": "processed_train.csv", "test": "processed_test.csv"},
        steps=steps,
    )


def build_model_pipeline(workspace: Path, info: CompetitionInfo,
                         seed: int) -> PipelineProgram:
    train = read_csv(workspace / "processed_train.csv")
    profile = strategy.model_profile(train, info)
    params = {
        "target": profile.target,
        "task_type": profile.task_type,
        "candidates": profile.candidates,
        "grids": profile.grids,
        "cv_folds": profile.cv_folds,
        "metric": profile.metric,
        "seed": seed,
        "feature_columns": profile.feature_columns,
    }
    if profile.id_column:
        params["id_column"] = profile.id_column
    return PipelineProgram(
        inputs={"train": "processed_train.csv", "test": "processed_test.csv"},
        outputs={"submission": "submission.csv"},
        steps=[PipelineStep(
            tool="train_and_validation_and_select_the_best_model",
            params=params, inputs=["train", "test"], output="submission",
        )],
    )


class DeterministicDeveloper:
    """Workspace-driven artifact compiler implementing the loop backend."""

    def __init__(self, phase_key: str, workspace: Path, info: CompetitionInfo,
                 seed: int = 0):
        self.phase_key = phase_key
        self.workspace = Path(workspace)
        self.info = info
        self.seed = seed

    def generate(self, regenerated: bool) -> CodeArtifact:
        if self.phase_key == "pre_eda":
            return CodeArtifact("script",
                                generate_pre_eda_script(self.workspace, self.info),
                                self.phase_key)
        if self.phase_key == "deep_eda":
            return CodeArtifact("script",
                                generate_deep_eda_script(self.workspace, self.info),
                                self.phase_key)
        if self.phase_key == "data_cleaning":
            return CodeArtifact("pipeline",
                                build_cleaning_pipeline(self.workspace, self.info),
                                self.phase_key)
        if self.phase_key == "feature_engineering":
            return CodeArtifact("pipeline",
                                build_feature_pipeline(self.workspace, self.info),
                                self.phase_key)
        if self.phase_key == "model_build_validate_predict":
            return CodeArtifact("pipeline",
                                build_model_pipeline(self.workspace, self.info,
                                                     self.seed),
                                self.phase_key)
        raise ValueError(f"no artifact strategy for phase {self.phase_key!r}")

    def debug(self, code: CodeArtifact, error: ErrorRecord):
        return rule_based_debug(code, error)

    def debug_test_failures(self, code: CodeArtifact, failures: list[str]):
        # recompile from current workspace facts; the failed checks name the gap
        rebuilt = self.generate(regenerated=False)
        return rebuilt, DebugTrace(
            located="unit-test failures: " + "; ".join(failures[:3]),
            correction="recompiled the artifact from current workspace state",
            changed=True,
        )

    def evaluate_retry(self, history: list[ErrorRecord], threshold: int) -> bool:
        return evaluate_retry_rule(history, threshold)


_CODE_BLOCK_RE = re.compile(r"```(?:python)?\n(.*?)```", re.DOTALL)


def extract_script(text: str) -> str:
    blocks = _CODE_BLOCK_RE.findall(text)
    if not blocks:
        raise ValueError("model reply contains no code block")
    return "\n\n".join(block.strip() + "\n" for block in blocks)


class ModelBackedDeveloper:
    """Chat-driven developer; repairs run locate -> correct -> merge."""

    def __init__(self, phase_key: str, complete, plan_text: str,
                 info: CompetitionInfo, history_text: str = "",
                 retry_fallback=evaluate_retry_rule):
        self.phase_key = phase_key
        self.complete = complete
        self.plan_text = plan_text
        self.info = info
        self.history_text = history_text
        self.retry_fallback = retry_fallback
        self._system = load_prompt("developer_system")

    def generate(self, regenerated: bool) -> CodeArtifact:
        prompt = fill_prompt(
            load_prompt("developer_task"),
            phase_name=self.phase_key,
            background_info=self.info.to_markdown(),
            state_info=self.history_text,
            plan=self.plan_text,
            regenerated=(
                "This is a fresh regeneration; the previous artifact looped on "
                "similar errors." if regenerated else ""
            ),
        )
        return CodeArtifact("script", extract_script(self.complete(self._system, prompt)),
                            self.phase_key)

    def debug(self, code: CodeArtifact, error: ErrorRecord):
        located = self.complete(self._system, fill_prompt(
            load_prompt("developer_debug_locate"),
            code=code.rendered(), error=error.message,
        ))
        corrected = self.complete(self._system, fill_prompt(
            load_prompt("developer_debug_correct"),
            code=code.rendered(), error=error.message, located=located,
        ))
        merged = self.complete(self._system, fill_prompt(
            load_prompt("developer_debug_merge"),
            code=code.rendered(), corrected=corrected,
        ))
        try:
            body = extract_script(merged)
        except ValueError:
            return code, DebugTrace(located=located.strip()[:200],
                                    correction="merge reply had no code block; kept prior artifact",
                                    changed=False)
        return (CodeArtifact("script", body, self.phase_key),
                DebugTrace(located=located.strip()[:200],
                           correction=corrected.strip()[:200], changed=True))

    def debug_test_failures(self, code: CodeArtifact, failures: list[str]):
        prompt = fill_prompt(
            load_prompt("developer_debug_correct"),
            code=code.rendered(),
            error="unit-test failures:\n" + "\n".join(failures),
            located="the artifact ran but its outputs failed the phase checks",
        )
        reply = self.complete(self._system, prompt)
        try:
            body = extract_script(reply)
        except ValueError:
            return code, DebugTrace(located="unit-test failures",
                                    correction="reply had no code block; kept prior artifact",
                                    changed=False)
        return (CodeArtifact("script", body, self.phase_key),
                DebugTrace(located="unit-test failures",
                           correction="regenerated script from failure list",
                           changed=True))

    def evaluate_retry(self, history: list[ErrorRecord], threshold: int) -> bool:
        prompt = fill_prompt(
            load_prompt("developer_evaluate_retry"),
            errors="\n".join(f"- {r.normalized}" for r in history[-threshold:]),
        )
        reply = self.complete(self._system, prompt).strip().lower()
        if reply.startswith("yes"):
            return True
        if reply.startswith("no"):
            return False
        return self.retry_fallback(history, threshold)
