"""Row-wise arithmetic expressions for derived columns.

Grammar (lowest to highest precedence):

    comparison :=  sum (("==" | "!=" | "<=" | ">=" | "<" | ">") sum)?
    sum        :=  term (("+" | "-") term)*
    term       :=  unary (("*" | "/") unary)*
    unary      :=  "-" unary | atom
    atom       :=  NUMBER | IDENT | "(" comparison ")"

Identifiers reference numeric columns.  Comparisons evaluate to 0/1 so
indicator and ordinal-bin columns can be derived without a separate tool.
Any missing operand makes the row's result missing; division by zero also
yields missing and is counted as a warning.
"""

from __future__ import annotations

import re

from ..tabular import DType, Table
from .base import ExpressionParseError, ToolResult

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+\.\d*|\.\d+|\d+)|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>==|!=|<=|>=|[+\-*/()<>]))"
)

_COMPARISONS = {
    "==": lambda a, b: 1 if a == b else 0,
    "!=": lambda a, b: 1 if a != b else 0,
    "<=": lambda a, b: 1 if a <= b else 0,
    ">=": lambda a, b: 1 if a >= b else 0,
    "<": lambda a, b: 1 if a < b else 0,
    ">": lambda a, b: 1 if a > b else 0,
}


def tokenize(expression: str) -> list[tuple[str, str]]:
    tokens = []
    pos = 0
    while pos < len(expression):
        match = _TOKEN_RE.match(expression, pos)
        if match is None:
            remainder = expression[pos:].strip()
            if not remainder:
                break
            raise ExpressionParseError(
                f"unexpected character {remainder[0]!r} in expression"
            )
        if match.group("number") is not None:
            tokens.append(("number", match.group("number")))
        elif match.group("ident") is not None:
            tokens.append(("ident", match.group("ident")))
        else:
            tokens.append(("op", match.group("op")))
        pos = match.end()
    if not tokens:
        raise ExpressionParseError("empty expression")
    return tokens


class _Parser:
    def __init__(self, tokens: list[tuple[str, str]]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> tuple[str, str] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple[str, str]:
        token = self.peek()
        if token is None:
            raise ExpressionParseError("unexpected end of expression")
        self.pos += 1
        return token

    def parse(self):
        node = self.comparison()
        if self.peek() is not None:
            raise ExpressionParseError(
                f"trailing tokens starting at {self.peek()[1]!r}"
            )
        return node

    def comparison(self):
        left = self.sum()
        token = self.peek()
        if token is not None and token[0] == "op" and token[1] in _COMPARISONS:
            op = self.take()[1]
            right = self.sum()
            return ("cmp", op, left, right)
        return left

    def sum(self):
        node = self.term()
        while True:
            token = self.peek()
            if token is not None and token[0] == "op" and token[1] in ("+", "-"):
                op = self.take()[1]
                node = ("bin", op, node, self.term())
            else:
                return node

    def term(self):
        node = self.unary()
        while True:
            token = self.peek()
            if token is not None and token[0] == "op" and token[1] in ("*", "/"):
                op = self.take()[1]
                node = ("bin", op, node, self.unary())
            else:
                return node

    def unary(self):
        token = self.peek()
        if token is not None and token == ("op", "-"):
            self.take()
            return ("neg", self.unary())
        return self.atom()

    def atom(self):
        kind, text = self.take()
        if kind == "number":
            return ("num", float(text) if "." in text else int(text))
        if kind == "ident":
            return ("col", text)
        if (kind, text) == ("op", "("):
            node = self.comparison()
            closing = self.take()
            if closing != ("op", ")"):
                raise ExpressionParseError("expected closing parenthesis")
            return node
        raise ExpressionParseError(f"unexpected token {text!r}")


def parse_expression(expression: str):
    return _Parser(tokenize(expression)).parse()


def referenced_columns(node) -> list[str]:
    if node[0] == "col":
        return [node[1]]
    if node[0] == "num":
        return []
    if node[0] == "neg":
        return referenced_columns(node[1])
    names = referenced_columns(node[2]) + referenced_columns(node[3])
    seen: list[str] = []
    for name in names:
        if name not in seen:
            seen.append(name)
    return seen


class _DivisionByZero(Exception):
    pass


def _evaluate(node, row: dict):
    kind = node[0]
    if kind == "num":
        return node[1]
    if kind == "col":
        return row[node[1]]
    if kind == "neg":
        value = _evaluate(node[1], row)
        return None if value is None else -value
    _, op, left_node, right_node = node
    left = _evaluate(left_node, row)
    right = _evaluate(right_node, row)
    if left is None or right is None:
        return None
    if kind == "cmp":
        return _COMPARISONS[op](left, right)
    if op == "+":
        return left + right
    if op == "-":
        return left - right
    if op == "*":
        return left * right
    if right == 0:
        raise _DivisionByZero
    return left / right


def derive_column(table: Table, new_name: str, expression: str) -> ToolResult:
    tree = parse_expression(expression)
    names = referenced_columns(tree)
    for name in names:
        if not table.has_column(name):
            raise KeyError(name)
        if not table.is_numeric(name):
            raise ValueError(
                f"column {name!r} is {table.dtype(name).value}, expected numeric"
            )

    columns = {name: table.column(name) for name in names}
    cells = []
    zero_divisions = 0
    for i in range(table.n_rows):
        row = {name: columns[name][i] for name in names}
        try:
            cells.append(_evaluate(tree, row))
        except _DivisionByZero:
            zero_divisions += 1
            cells.append(None)

    present = [v for v in cells if v is not None]
    if present and all(isinstance(v, int) for v in present):
        dtype = DType.Integer
    else:
        dtype = DType.Float
        cells = [None if v is None else float(v) for v in cells]

    out = table.with_column(new_name, dtype, cells)
    warning = f"; {zero_divisions} divisions by zero -> missing (warning)" if zero_divisions else ""
    return ToolResult(
        table=out,
        report=f"derive_column: {new_name} = {expression}{warning}",
    )
