"""Propositional formula engine.

Formulas are expression trees over constraint ids. A small DSL covers
parsing and printing: ids match ``[a-z][a-z0-9_]*``, literals are ``true``
and ``false``, operators are ``!``, ``&``, ``|``, ``->``, ``<->`` with
precedence ``!`` > ``&`` > ``|`` > ``->`` > ``<->`` (``->`` and ``<->``
associate to the right), parentheses group, whitespace is insignificant.
``&`` and ``|`` chains parse to a single n-ary node, so printing and
re-parsing a tree reproduces it structurally.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Literal

Verdict = Literal["sat", "unsat"]

MAX_TRUTH_TABLE_VARS = 20


class FormulaError(ValueError):
    """Base class for formula engine errors."""


class FormulaSyntaxError(FormulaError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class MissingVariableError(FormulaError):
    def __init__(self, name: str):
        super().__init__(f"assignment is missing variable {name!r}")
        self.name = name


class Formula:
    """Marker base class for formula nodes."""

    __slots__ = ()


@dataclass(frozen=True)
class Lit(Formula):
    value: bool


@dataclass(frozen=True)
class Var(Formula):
    name: str


@dataclass(frozen=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True)
class And(Formula):
    children: tuple[Formula, ...]

    def __post_init__(self) -> None:
        if len(self.children) < 2:
            raise FormulaError("And requires at least 2 children")


@dataclass(frozen=True)
class Or(Formula):
    children: tuple[Formula, ...]

    def __post_init__(self) -> None:
        if len(self.children) < 2:
            raise FormulaError("Or requires at least 2 children")


@dataclass(frozen=True)
class Implies(Formula):
    lhs: Formula
    rhs: Formula


@dataclass(frozen=True)
class Iff(Formula):
    lhs: Formula
    rhs: Formula


def conjunction(names: Iterable[str]) -> Formula:
    """Conjunction of variables; Lit(True) for zero names, Var for one."""
    parts = [Var(n) for n in names]
    if not parts:
        return Lit(True)
    if len(parts) == 1:
        return parts[0]
    return And(tuple(parts))


def variables(formula: Formula) -> set[str]:
    found: set[str] = set()
    stack = [formula]
    while stack:
        node = stack.pop()
        if isinstance(node, Var):
            found.add(node.name)
        elif isinstance(node, Not):
            stack.append(node.child)
        elif isinstance(node, (And, Or)):
            stack.extend(node.children)
        elif isinstance(node, (Implies, Iff)):
            stack.extend((node.lhs, node.rhs))
    return found


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<id>[a-z][a-z0-9_]*)|(?P<op><->|->|!|&|\||\(|\)))"
)


def _tokenize(text: str) -> Iterator[tuple[str, str, int]]:
    pos = 0
    while pos < len(text):
        match = _TOKEN_RE.match(text, pos)
        if match is None:
            stripped = text[pos:].lstrip()
            if not stripped:
                break
            at = len(text) - len(stripped)
            raise FormulaSyntaxError(f"unknown token {stripped[0]!r}", at)
        if match.group("id") is not None:
            word = match.group("id")
            kind = "lit" if word in ("true", "false") else "id"
            yield kind, word, match.start("id")
        else:
            yield "op", match.group("op"), match.start("op")
        pos = match.end()


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = list(_tokenize(text))
        self.index = 0

    def peek(self) -> tuple[str, str, int] | None:
        if self.index < len(self.tokens):
            return self.tokens[self.index]
        return None

    def take(self) -> tuple[str, str, int]:
        token = self.peek()
        if token is None:
            raise FormulaSyntaxError("unexpected end of input", len(self.text))
        self.index += 1
        return token

    def expect_op(self, op: str) -> None:
        token = self.take()
        if token[0] != "op" or token[1] != op:
            raise FormulaSyntaxError(f"expected {op!r}, found {token[1]!r}", token[2])

    def at_op(self, op: str) -> bool:
        token = self.peek()
        return token is not None and token[0] == "op" and token[1] == op

    def parse(self) -> Formula:
        if not self.tokens:
            raise FormulaSyntaxError("empty formula", 0)
        node = self.parse_iff()
        token = self.peek()
        if token is not None:
            raise FormulaSyntaxError(f"unexpected token {token[1]!r}", token[2])
        return node

    def parse_iff(self) -> Formula:
        lhs = self.parse_implies()
        if self.at_op("<->"):
            self.take()
            return Iff(lhs, self.parse_iff())
        return lhs

    def parse_implies(self) -> Formula:
        lhs = self.parse_or()
        if self.at_op("->"):
            self.take()
            return Implies(lhs, self.parse_implies())
        return lhs

    def parse_or(self) -> Formula:
        parts = [self.parse_and()]
        while self.at_op("|"):
            self.take()
            parts.append(self.parse_and())
        if len(parts) == 1:
            return parts[0]
        return Or(tuple(parts))

    def parse_and(self) -> Formula:
        parts = [self.parse_unary()]
        while self.at_op("&"):
            self.take()
            parts.append(self.parse_unary())
        if len(parts) == 1:
            return parts[0]
        return And(tuple(parts))

    def parse_unary(self) -> Formula:
        if self.at_op("!"):
            self.take()
            return Not(self.parse_unary())
        return self.parse_atom()

    def parse_atom(self) -> Formula:
        token = self.take()
        kind, value, position = token
        if kind == "lit":
            return Lit(value == "true")
        if kind == "id":
            return Var(value)
        if value == "(":
            node = self.parse_iff()
            self.expect_op(")")
            return node
        raise FormulaSyntaxError(f"unexpected token {value!r}", position)


def parse_formula(text: str) -> Formula:
    return _Parser(text).parse()


_PRECEDENCE = {Lit: 5, Var: 5, Not: 4, And: 3, Or: 2, Implies: 1, Iff: 0}


def _precedence(node: Formula) -> int:
    return _PRECEDENCE[type(node)]


def _wrap(node: Formula, text: str, minimum: int, same_type: type | None = None) -> str:
    # Same-operator children keep explicit parens so n-ary nesting survives
    # a print/parse round trip.
    if _precedence(node) < minimum or (same_type is not None and isinstance(node, same_type)):
        return f"({text})"
    return text


def format_formula(formula: Formula) -> str:
    if isinstance(formula, Lit):
        return "true" if formula.value else "false"
    if isinstance(formula, Var):
        return formula.name
    if isinstance(formula, Not):
        inner = format_formula(formula.child)
        return "!" + _wrap(formula.child, inner, 4)
    if isinstance(formula, And):
        parts = [
            _wrap(child, format_formula(child), 3, And) for child in formula.children
        ]
        return " & ".join(parts)
    if isinstance(formula, Or):
        parts = [
            _wrap(child, format_formula(child), 2, Or) for child in formula.children
        ]
        return " | ".join(parts)
    if isinstance(formula, Implies):
        lhs = _wrap(formula.lhs, format_formula(formula.lhs), 2)
        rhs = _wrap(formula.rhs, format_formula(formula.rhs), 1)
        return f"{lhs} -> {rhs}"
    if isinstance(formula, Iff):
        lhs = _wrap(formula.lhs, format_formula(formula.lhs), 1)
        rhs = _wrap(formula.rhs, format_formula(formula.rhs), 0)
        return f"{lhs} <-> {rhs}"
    raise FormulaError(f"unknown formula node {formula!r}")


def _eval(formula: Formula, assignment: dict[str, bool]) -> bool:
    if isinstance(formula, Lit):
        return formula.value
    if isinstance(formula, Var):
        try:
            return assignment[formula.name]
        except KeyError:
            raise MissingVariableError(formula.name) from None
    if isinstance(formula, Not):
        return not _eval(formula.child, assignment)
    if isinstance(formula, And):
        return all(_eval(child, assignment) for child in formula.children)
    if isinstance(formula, Or):
        return any(_eval(child, assignment) for child in formula.children)
    if isinstance(formula, Implies):
        return (not _eval(formula.lhs, assignment)) or _eval(formula.rhs, assignment)
    if isinstance(formula, Iff):
        return _eval(formula.lhs, assignment) == _eval(formula.rhs, assignment)
    raise FormulaError(f"unknown formula node {formula!r}")


def evaluate_formula(formula: Formula, assignment: dict[str, bool]) -> Verdict:
    """Standard boolean semantics: sat iff the formula is true."""
    return "sat" if _eval(formula, assignment) else "unsat"


def strict_conjunction_verdict(formula: Formula, assignment: dict[str, bool]) -> Verdict:
    """Solver-protocol semantics: every variable starts asserted True, then
    the actual value is asserted, so any false value is contradictory and the
    verdict is unsat regardless of formula shape.

    Equals evaluate_formula on pure conjunctions.
    """
    for name in sorted(variables(formula)):
        if name not in assignment:
            raise MissingVariableError(name)
    if any(not value for value in assignment.values()):
        return "unsat"
    return evaluate_formula(formula, assignment)


def truth_table_satisfiable(formula: Formula) -> bool:
    names = sorted(variables(formula))
    if len(names) > MAX_TRUTH_TABLE_VARS:
        raise FormulaError(
            f"too many variables for truth-table enumeration: {len(names)} > {MAX_TRUTH_TABLE_VARS}"
        )
    for values in itertools.product((False, True), repeat=len(names)):
        if _eval(formula, dict(zip(names, values))):
            return True
    return False


def _sexpr(formula: Formula) -> str:
    if isinstance(formula, Lit):
        return "true" if formula.value else "false"
    if isinstance(formula, Var):
        return formula.name
    if isinstance(formula, Not):
        return f"(not {_sexpr(formula.child)})"
    if isinstance(formula, And):
        return "(and " + " ".join(_sexpr(child) for child in formula.children) + ")"
    if isinstance(formula, Or):
        return "(or " + " ".join(_sexpr(child) for child in formula.children) + ")"
    if isinstance(formula, Implies):
        return f"(=> {_sexpr(formula.lhs)} {_sexpr(formula.rhs)})"
    if isinstance(formula, Iff):
        return f"(= {_sexpr(formula.lhs)} {_sexpr(formula.rhs)})"
    raise FormulaError(f"unknown formula node {formula!r}")


def emit_solver_text(formula: Formula, assignment: dict[str, bool]) -> str:
    """Deterministic SMT-LIB2 script asserting the formula and the assignment.

    Declarations cover the union of formula variables and assignment keys,
    sorted lexicographically; assignment asserts follow in the same order;
    `\\n` separators, no trailing whitespace.
    """
    for name in sorted(variables(formula)):
        if name not in assignment:
            raise MissingVariableError(name)
    names = sorted(variables(formula) | set(assignment))
    lines = [f"(declare-const {name} Bool)" for name in names]
    lines.append(f"(assert {_sexpr(formula)})")
    for name in sorted(assignment):
        value = "true" if assignment[name] else "false"
        lines.append(f"(assert (= {name} {value}))")
    lines.append("(check-sat)")
    return "\n".join(lines)
