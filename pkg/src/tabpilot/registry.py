"""Tool memory: schema store, lexical retrieval and parameter validation.

Tool specs ship as JSON documents under ``toolspecs/``; a mapping file binds
each tool to the workflow phase it serves.  Retrieval is tf-idf cosine over
the concatenated schema text, which keeps queries deterministic and fully
offline.  An embedding-backed index can be slotted in behind the same
interface by passing a custom ``vectorizer`` to :func:`index_tools`.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path


class RegistryError(Exception):
    pass


class UnknownTool(RegistryError):
    pass


class DuplicateToolName(RegistryError):
    pass


@dataclass
class ToolParam:
    name: str
    type: str
    description: str
    enum: list[str] | None = None
    default: object = None
    has_default: bool = False
    required: bool = False


@dataclass
class ToolSpec:
    name: str
    description: str
    applicable_situations: str
    parameters: list[ToolParam]
    result: str
    notes: list[str]
    phase: str  # dc | fe | mbvp
    internal: bool = False

    @classmethod
    def from_json(cls, payload: dict) -> ToolSpec:
        params = []
        required = set(payload.get("required", []))
        for name, spec in payload.get("parameters", {}).items():
            params.append(ToolParam(
                name=name,
                type=spec.get("type", "string"),
                description=spec.get("description", ""),
                enum=spec.get("enum"),
                default=spec.get("default"),
                has_default="default" in spec,
                required=name in required,
            ))
        spec = cls(
            name=payload["name"],
            description=payload["description"],
            applicable_situations=payload.get("applicable_situations", ""),
            parameters=params,
            result=payload.get("result", ""),
            notes=list(payload.get("notes", [])),
            phase=payload.get("phase", "dc"),
            internal=bool(payload.get("internal", False)),
        )
        spec.validate()
        return spec

    def validate(self) -> None:
        for param in self.parameters:
            if param.required and param.has_default:
                raise RegistryError(
                    f"{self.name}: required parameter {param.name!r} has a default"
                )
            if param.enum is not None and param.has_default and param.default is not None:
                if param.default not in param.enum:
                    raise RegistryError(
                        f"{self.name}: default {param.default!r} outside enum for "
                        f"{param.name!r}"
                    )

    def param(self, name: str) -> ToolParam | None:
        for param in self.parameters:
            if param.name == name:
                return param
        return None

    def document_text(self) -> str:
        parts = [self.name.replace("_", " "), self.description,
                 self.applicable_situations, self.result]
        for param in self.parameters:
            parts.append(param.name.replace("_", " "))
            parts.append(param.description)
            if param.enum:
                parts.extend(str(v) for v in param.enum)
        parts.extend(self.notes)
        return " ".join(parts)

    def to_json_payload(self) -> dict:
        parameters = {}
        for param in self.parameters:
            entry: dict = {"type": param.type, "description": param.description}
            if param.enum is not None:
                entry["enum"] = param.enum
            if param.has_default:
                entry["default"] = param.default
            parameters[param.name] = entry
        return {
            "name": self.name,
            "description": self.description,
            "applicable_situations": self.applicable_situations,
            "parameters": parameters,
            "required": [p.name for p in self.parameters if p.required],
            "result": self.result,
            "notes": self.notes,
            "phase": self.phase,
        }


_WORD_RE = re.compile(r"[a-z0-9]+")


def _tokenize(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


@dataclass
class RetrievalIndex:
    vectors: dict[str, dict[str, float]]
    idf: dict[str, float]

    def query_vector(self, text: str) -> dict[str, float]:
        counts: dict[str, int] = {}
        for token in _tokenize(text):
            counts[token] = counts.get(token, 0) + 1
        return {
            token: count * self.idf[token]
            for token, count in counts.items()
            if token in self.idf
        }


def _cosine(a: dict[str, float], b: dict[str, float]) -> float:
    if not a or not b:
        return 0.0
    dot = sum(weight * b.get(token, 0.0) for token, weight in a.items())
    norm_a = math.sqrt(sum(w * w for w in a.values()))
    norm_b = math.sqrt(sum(w * w for w in b.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def index_tools(specs: list[ToolSpec], vectorizer=None) -> RetrievalIndex:
    names = [spec.name for spec in specs]
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise DuplicateToolName(f"duplicate tool names: {dupes}")
    documents = {spec.name: _tokenize(spec.document_text()) for spec in specs}
    df: dict[str, int] = {}
    for tokens in documents.values():
        for token in set(tokens):
            df[token] = df.get(token, 0) + 1
    n_docs = len(documents)
    idf = {
        token: math.log((1 + n_docs) / (1 + count)) + 1.0
        for token, count in df.items()
    }
    vectors = {}
    for name, tokens in documents.items():
        counts: dict[str, int] = {}
        for token in tokens:
            counts[token] = counts.get(token, 0) + 1
        vectors[name] = {t: c * idf[t] for t, c in counts.items()}
    return RetrievalIndex(vectors=vectors, idf=idf)


class ToolRegistry:
    """All shipped tool specs plus the retrieval index over them."""

    def __init__(self, specs: list[ToolSpec], phase_map: dict[str, list[str]]):
        self._specs: dict[str, ToolSpec] = {}
        for spec in specs:
            if spec.name in self._specs:
                raise DuplicateToolName(spec.name)
            self._specs[spec.name] = spec
        self.phase_map = phase_map
        listed = {name for names in phase_map.values() for name in names}
        for name in listed:
            if name not in self._specs:
                raise RegistryError(f"phase map references unknown tool {name!r}")
        self._index = index_tools(self.specs())

    @classmethod
    def load(cls, directory: str | Path | None = None) -> ToolRegistry:
        if directory is None:
            root = resources.files("tabpilot").joinpath("toolspecs")
        else:
            root = Path(directory)
        specs = []
        phase_map: dict[str, list[str]] = {}
        for entry in sorted(root.iterdir(), key=lambda p: p.name):
            if not entry.name.endswith(".json"):
                continue
            payload = json.loads(entry.read_text(encoding="utf-8"))
            if entry.name == "phase_map.json":
                phase_map = payload
            else:
                specs.append(ToolSpec.from_json(payload))
        if not phase_map:
            raise RegistryError("phase_map.json not found next to tool specs")
        return cls(specs, phase_map)

    def specs(self, include_internal: bool = False) -> list[ToolSpec]:
        return [
            spec for spec in self._specs.values()
            if include_internal or not spec.internal
        ]

    def names(self, include_internal: bool = False) -> list[str]:
        return [spec.name for spec in self.specs(include_internal)]

    def has_tool(self, name: str, include_internal: bool = True) -> bool:
        spec = self._specs.get(name)
        if spec is None:
            return False
        return include_internal or not spec.internal

    def get(self, name: str) -> ToolSpec:
        spec = self._specs.get(name)
        if spec is None:
            raise UnknownTool(name)
        return spec

    def tools_for_phase(self, phase: str) -> list[str]:
        return list(self.phase_map.get(phase, []))

    def retrieve(self, query: str, phase: str | None = None, k: int = 5) -> list[ToolSpec]:
        if k < 1:
            raise ValueError("k must be >= 1")
        candidates = self.names()
        if phase is not None:
            allowed = set(self.tools_for_phase(phase))
            candidates = [n for n in candidates if n in allowed]
        query_vec = self._index.query_vector(query)
        scored = sorted(
            candidates,
            key=lambda name: (-_cosine(query_vec, self._index.vectors[name]), name),
        )
        return [self._specs[name] for name in scored[:k]]

    def get_schema(self, name: str, rendering: str = "json") -> str:
        spec = self.get(name)
        if rendering == "json":
            return json.dumps(spec.to_json_payload(), indent=2)
        if rendering == "markdown":
            return render_markdown_schema(spec)
        raise ValueError(f"unknown rendering {rendering!r}")

    def validate_params(self, tool: str, params: dict) -> None:
        """Check a parameter mapping against the tool schema."""
        spec = self.get(tool)
        known = {p.name for p in spec.parameters}
        unknown = sorted(set(params) - (known - {"data"}))
        if unknown:
            raise RegistryError(f"{tool}: unknown parameters {unknown}")
        for param in spec.parameters:
            if param.name == "data":
                continue
            if param.required and param.name not in params:
                raise RegistryError(f"{tool}: missing required parameter {param.name!r}")
            if param.enum is not None and param.name in params:
                if params[param.name] not in param.enum:
                    raise RegistryError(
                        f"{tool}: {param.name!r} must be one of {param.enum}, "
                        f"got {params[param.name]!r}"
                    )


def render_markdown_schema(spec: ToolSpec) -> str:
    lines = [f"Description: {spec.description}", ""]
    lines.append(f"Applicable Situations: {spec.applicable_situations}")
    lines.append("")
    lines.append("Parameters:")
    for param in spec.parameters:
        lines.append(f"- **{param.name}:**")
        lines.append(f"  - **Type:** `{param.type}`")
        lines.append(f"  - **Description:** {param.description}")
        if param.enum is not None:
            lines.append(f"  - **Enum:** `{' | '.join(str(v) for v in param.enum)}`")
        if param.has_default:
            rendered = "None" if param.default is None else str(param.default)
            lines.append(f"  - **Default:** `{rendered}`")
    required = ", ".join(p.name for p in spec.parameters if p.required)
    lines.append("")
    lines.append(f"Required: `{required}`")
    lines.append("")
    lines.append(f"Result: {spec.result}")
    lines.append("")
    lines.append("Notes:")
    for note in spec.notes:
        lines.append(f"- {note}")
    return "\n".join(lines) + "\n"
