"""Tiny arithmetic language for stage-indexed parameter sequences.

Expressions are real-valued in one variable ``j`` (the stage index) with
decimal literals, + - * / ^, unary minus, parentheses, and the functions
min(x, y), max(x, y), pow(x, y).  ``^`` is right-associative and binds
tighter than unary minus, so ``-2^2`` is ``-(2^2)`` and ``2^3^2`` is
``2^(3^2)``.  Whitespace is insignificant.

Parse errors carry the byte offset and the set of expected tokens.
Evaluation is deterministic and never returns NaN or infinity: division by
zero and domain violations raise EvalError naming the stage index and the
offending subexpression.

On top of expressions sit sequence rules (``SeqRule``): a constant, an
explicit list with a repeat-last or error tail policy, an expression, or a
base rule overridden on the indices where a predicate expression is nonzero.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Union

from .errors import ConfigError, EvalError, ParameterError, ParseError

# --- abstract syntax ---------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    pass


@dataclass(frozen=True)
class Unary:
    operand: "SeqExpr"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "SeqExpr"
    right: "SeqExpr"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple["SeqExpr", ...]


SeqExpr = Union[Num, Var, Unary, Binary, Call]

_FUNCTIONS = {"min": 2, "max": 2, "pow": 2}

# --- lexer -------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>\d+(?:\.\d+)?(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # "number" | "ident" | one of + - * / ^ ( ) , | "end"
    text: str
    offset: int


def _lex(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            stripped = source[pos:].lstrip()
            if not stripped:
                break
            offset = len(source) - len(stripped)
            raise ParseError(
                f"unexpected character {stripped[0]!r}",
                offset=offset,
                expected=("number", "identifier", "operator"),
            )
        if m.group("number") is not None:
            tokens.append(_Token("number", m.group("number"), m.start("number")))
        elif m.group("ident") is not None:
            tokens.append(_Token("ident", m.group("ident"), m.start("ident")))
        else:
            tokens.append(_Token(m.group("op"), m.group("op"), m.start("op")))
        pos = m.end()
    tokens.append(_Token("end", "", len(source)))
    return tokens


# --- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, source: str):
        self.source = source
        self.tokens = _lex(source)
        self.pos = 0

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def advance(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect(self, kind: str) -> _Token:
        tok = self.peek()
        if tok.kind != kind:
            raise ParseError(
                f"got {tok.text!r}" if tok.kind != "end" else "unexpected end of input",
                offset=tok.offset,
                expected=(kind,),
            )
        return self.advance()

    def parse(self) -> SeqExpr:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(
                f"trailing input {tok.text!r}",
                offset=tok.offset,
                expected=("+", "-", "*", "/", "^", "end"),
            )
        return node

    def expr(self) -> SeqExpr:
        node = self.term()
        while self.peek().kind in ("+", "-"):
            op = self.advance().kind
            node = Binary(op, node, self.term())
        return node

    def term(self) -> SeqExpr:
        node = self.unary()
        while self.peek().kind in ("*", "/"):
            op = self.advance().kind
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> SeqExpr:
        if self.peek().kind == "-":
            self.advance()
            return Unary(self.unary())
        return self.power()

    def power(self) -> SeqExpr:
        node = self.atom()
        if self.peek().kind == "^":
            self.advance()
            # right-associative; the exponent may start with unary minus
            return Binary("^", node, self.unary())
        return node

    def atom(self) -> SeqExpr:
        tok = self.peek()
        if tok.kind == "number":
            self.advance()
            return Num(float(tok.text))
        if tok.kind == "ident":
            self.advance()
            if tok.text == "j":
                return Var()
            if tok.text not in _FUNCTIONS:
                raise ParseError(
                    f"unknown identifier {tok.text!r}",
                    offset=tok.offset,
                    expected=("j", *sorted(_FUNCTIONS)),
                )
            self.expect("(")
            args = [self.expr()]
            while self.peek().kind == ",":
                self.advance()
                args.append(self.expr())
            self.expect(")")
            if len(args) != _FUNCTIONS[tok.text]:
                raise ParseError(
                    f"{tok.text} takes {_FUNCTIONS[tok.text]} arguments, got {len(args)}",
                    offset=tok.offset,
                    expected=(f"{_FUNCTIONS[tok.text]} arguments",),
                )
            return Call(tok.text, tuple(args))
        if tok.kind == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise ParseError(
            f"got {tok.text!r}" if tok.kind != "end" else "unexpected end of input",
            offset=tok.offset,
            expected=("number", "j", "function", "(", "-"),
        )


def parse(source: str) -> SeqExpr:
    return _Parser(source).parse()


def to_source(expr: SeqExpr) -> str:
    """Fully parenthesized rendering; parse(to_source(e)) == e."""
    if isinstance(expr, Num):
        return repr(expr.value)
    if isinstance(expr, Var):
        return "j"
    if isinstance(expr, Unary):
        return f"(-{to_source(expr.operand)})"
    if isinstance(expr, Binary):
        return f"({to_source(expr.left)} {expr.op} {to_source(expr.right)})"
    return f"{expr.name}({', '.join(to_source(a) for a in expr.args)})"


# --- evaluation --------------------------------------------------------------


def _check_finite(x: float, expr: SeqExpr, j: int) -> float:
    if isinstance(x, complex) or not math.isfinite(x):
        raise EvalError(f"non-finite value at j={j} in {to_source(expr)}")
    return x


def evaluate(expr: SeqExpr, j: int) -> float:
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, Var):
        return float(j)
    if isinstance(expr, Unary):
        return -evaluate(expr.operand, j)
    if isinstance(expr, Binary):
        left = evaluate(expr.left, j)
        right = evaluate(expr.right, j)
        try:
            if expr.op == "+":
                out = left + right
            elif expr.op == "-":
                out = left - right
            elif expr.op == "*":
                out = left * right
            elif expr.op == "/":
                out = left / right
            else:
                out = left**right
        except ZeroDivisionError:
            raise EvalError(f"division by zero at j={j} in {to_source(expr)}") from None
        except OverflowError:
            raise EvalError(f"overflow at j={j} in {to_source(expr)}") from None
        return _check_finite(out, expr, j)
    left = evaluate(expr.args[0], j)
    right = evaluate(expr.args[1], j)
    if expr.name == "min":
        return min(left, right)
    if expr.name == "max":
        return max(left, right)
    try:
        out = left**right
    except (ZeroDivisionError, OverflowError):
        raise EvalError(f"domain error at j={j} in {to_source(expr)}") from None
    return _check_finite(out, expr, j)


# --- sequence rules ----------------------------------------------------------


@dataclass(frozen=True)
class ConstantRule:
    value: float


@dataclass(frozen=True)
class ListRule:
    values: tuple[float, ...]
    then_repeat_last: bool

    def __post_init__(self) -> None:
        if not self.values:
            raise ParameterError("list rule needs at least one value")


@dataclass(frozen=True)
class ExprRule:
    source: str
    expr: SeqExpr


@dataclass(frozen=True)
class OverrideRule:
    base: "SeqRule"
    where: ExprRule
    override: "SeqRule"


SeqRule = Union[ConstantRule, ListRule, ExprRule, OverrideRule]


def expr_rule(source: str) -> ExprRule:
    return ExprRule(source, parse(source))


def evaluate_rule(rule: SeqRule, j: int) -> float:
    if j < 1:
        raise ParameterError(f"stage index must be at least 1, got {j}")
    if isinstance(rule, ConstantRule):
        return rule.value
    if isinstance(rule, ListRule):
        if j <= len(rule.values):
            return rule.values[j - 1]
        if rule.then_repeat_last:
            return rule.values[-1]
        raise EvalError(f"list rule of length {len(rule.values)} exhausted at j={j}")
    if isinstance(rule, ExprRule):
        return evaluate(rule.expr, j)
    if evaluate(rule.where.expr, j) != 0.0:
        return evaluate_rule(rule.override, j)
    return evaluate_rule(rule.base, j)


def rule_from_config(value) -> SeqRule:
    """Build a rule from its configuration form.

    Numbers are constants, strings are expressions, and the two structured
    forms are {"list": [...], "then": "repeat-last"|"error"} and
    {"base": rule, "where": expression, "override": rule}.
    """
    if isinstance(value, bool):
        raise ConfigError(f"invalid rule {value!r}")
    if isinstance(value, (int, float)):
        return ConstantRule(float(value))
    if isinstance(value, str):
        return expr_rule(value)
    if isinstance(value, dict):
        if set(value) == {"list", "then"}:
            values = value["list"]
            if not isinstance(values, list) or not all(
                isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
            ):
                raise ConfigError("list rule values must be numbers")
            if value["then"] not in ("repeat-last", "error"):
                raise ConfigError('list rule "then" must be "repeat-last" or "error"')
            return ListRule(tuple(float(v) for v in values), value["then"] == "repeat-last")
        if set(value) == {"base", "where", "override"}:
            if not isinstance(value["where"], str):
                raise ConfigError('override rule "where" must be an expression string')
            return OverrideRule(
                rule_from_config(value["base"]),
                expr_rule(value["where"]),
                rule_from_config(value["override"]),
            )
        raise ConfigError(
            "rule objects need exactly the keys {list, then} or {base, where, override}; "
            f"got {sorted(value)}"
        )
    raise ConfigError(f"invalid rule {value!r}")


def rule_to_config(rule: SeqRule):
    """Inverse of rule_from_config, for canonical descriptors."""
    if isinstance(rule, ConstantRule):
        return rule.value
    if isinstance(rule, ListRule):
        return {
            "list": list(rule.values),
            "then": "repeat-last" if rule.then_repeat_last else "error",
        }
    if isinstance(rule, ExprRule):
        return rule.source
    return {
        "base": rule_to_config(rule.base),
        "where": rule.where.source,
        "override": rule_to_config(rule.override),
    }
