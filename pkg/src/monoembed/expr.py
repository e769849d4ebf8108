"""Textual scalar maps: parsing, printing, compilation and sign probing.

Grammar (binding tightness, loosest first):

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := '-' unary | power
    power   := atom ('^' unary)?          # right associative
    atom    := NUMBER | VAR | FUNC '(' expr ')' | '(' expr ')'

so '^' binds tighter than unary minus: -x1^2 is -(x1^2), and 2^-3 works
because the exponent is parsed as a unary production.  Variables are x1,
x2, ... (1-based); functions are exp, ln, sqrt.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .program import OP_ADD, OP_DIV, OP_EXP, OP_LN, OP_MUL, OP_NEG, OP_POW, \
    OP_SQRT, OP_SUB, ProgramBuilder, Program

FUNCTIONS = ("exp", "ln", "sqrt")

_FUNC_OPS = {"exp": OP_EXP, "ln": OP_LN, "sqrt": OP_SQRT}
_BIN_OPS = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV, "^": OP_POW}


class ParseError(ValueError):
    """Syntax or naming error with the byte offset of the offending token."""

    def __init__(self, message: str, position: int, text: str = ""):
        self.position = position
        self.text = text
        caret = ""
        if text:
            caret = f"\n  {text}\n  {' ' * position}^"
        super().__init__(f"{message} (at offset {position}){caret}")


# ---------------------------------------------------------------------------
# AST


@dataclass(frozen=True)
class Node:
    span: tuple[int, int]


@dataclass(frozen=True)
class Num(Node):
    value: float


@dataclass(frozen=True)
class Var(Node):
    index: int  # zero-based


@dataclass(frozen=True)
class Neg(Node):
    operand: "Node"


@dataclass(frozen=True)
class Call(Node):
    func: str
    operand: "Node"


@dataclass(frozen=True)
class BinOp(Node):
    op: str
    left: "Node"
    right: "Node"


def same_tree(a: Node, b: Node) -> bool:
    """Structural equality ignoring source spans."""
    if type(a) is not type(b):
        return False
    if isinstance(a, Num):
        return a.value == b.value
    if isinstance(a, Var):
        return a.index == b.index
    if isinstance(a, Neg):
        return same_tree(a.operand, b.operand)
    if isinstance(a, Call):
        return a.func == b.func and same_tree(a.operand, b.operand)
    if isinstance(a, BinOp):
        return a.op == b.op and same_tree(a.left, b.left) and same_tree(a.right, b.right)
    raise TypeError(f"unknown node {a!r}")


# ---------------------------------------------------------------------------
# Tokenizer

_TOKEN_RE = re.compile(
    r"\s*(?:"
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^()])"
    r")"
)


@dataclass(frozen=True)
class _Token:
    kind: str  # 'num' | 'name' | 'op' | 'end'
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    n = len(text)
    while pos < n:
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if m is None or m.lastgroup is None:
            raise ParseError(f"unexpected character {text[pos]!r}", pos, text)
        tokens.append(_Token(m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    tokens.append(_Token("end", "", n))
    return tokens


_VAR_RE = re.compile(r"^x([1-9][0-9]*)$")


class _Parser:
    def __init__(self, text: str, arity: int | None):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.arity = arity
        self.max_var = 0  # highest 1-based index seen

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def advance(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, op: str) -> _Token:
        tok = self.peek()
        if tok.kind != "op" or tok.text != op:
            what = f"'{tok.text}'" if tok.kind != "end" else "end of input"
            raise ParseError(f"expected '{op}', found {what}", tok.pos, self.text)
        return self.advance()

    def parse(self) -> Node:
        node = self.expr()
        tok = self.peek()
        if tok.kind != "end":
            raise ParseError(f"unexpected trailing input '{tok.text}'", tok.pos, self.text)
        return node

    def expr(self) -> Node:
        node = self.term()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in ("+", "-"):
                self.advance()
                rhs = self.term()
                node = BinOp((node.span[0], rhs.span[1]), tok.text, node, rhs)
            else:
                return node

    def term(self) -> Node:
        node = self.unary()
        while True:
            tok = self.peek()
            if tok.kind == "op" and tok.text in ("*", "/"):
                self.advance()
                rhs = self.unary()
                node = BinOp((node.span[0], rhs.span[1]), tok.text, node, rhs)
            else:
                return node

    def unary(self) -> Node:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.advance()
            operand = self.unary()
            return Neg((tok.pos, operand.span[1]), operand)
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        tok = self.peek()
        if tok.kind == "op" and tok.text == "^":
            self.advance()
            # exponent may start with a unary minus; '^' stays right associative
            exponent = self.unary()
            return BinOp((base.span[0], exponent.span[1]), "^", base, exponent)
        return base

    def atom(self) -> Node:
        tok = self.peek()
        if tok.kind == "num":
            self.advance()
            return Num((tok.pos, tok.pos + len(tok.text)), float(tok.text))
        if tok.kind == "name":
            self.advance()
            m = _VAR_RE.match(tok.text)
            if m:
                index = int(m.group(1))
                if self.arity is not None and index > self.arity:
                    raise ParseError(
                        f"unknown variable {tok.text} (arity {self.arity})",
                        tok.pos, self.text)
                self.max_var = max(self.max_var, index)
                return Var((tok.pos, tok.pos + len(tok.text)), index - 1)
            if tok.text in FUNCTIONS:
                self.expect_op("(")
                inner = self.expr()
                close = self.expect_op(")")
                return Call((tok.pos, close.pos + 1), tok.text, inner)
            raise ParseError(f"unknown identifier {tok.text!r}", tok.pos, self.text)
        if tok.kind == "op" and tok.text == "(":
            self.advance()
            inner = self.expr()
            self.expect_op(")")
            return inner
        what = f"'{tok.text}'" if tok.kind != "end" else "end of input"
        raise ParseError(f"expected a value, found {what}", tok.pos, self.text)


def parse(text: str, arity: int | None = None) -> Node:
    """Parse an expression; with ``arity`` given, reject out-of-range variables."""
    return _Parser(text, arity).parse()


def max_variable(node: Node) -> int:
    """Highest 1-based variable index used (0 for constant expressions)."""
    if isinstance(node, Num):
        return 0
    if isinstance(node, Var):
        return node.index + 1
    if isinstance(node, (Neg, Call)):
        return max_variable(node.operand)
    return max(max_variable(node.left), max_variable(node.right))


# ---------------------------------------------------------------------------
# Printing (canonical, minimal parentheses; reparses to the same tree)

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}


def _fmt_number(v: float) -> str:
    if v == int(v) and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def to_text(node: Node) -> str:
    """Render with minimal parentheses; ``parse(to_text(t))`` equals ``t``."""

    def prec_of(n: Node) -> int:
        if isinstance(n, (Var, Call)):
            return 5
        if isinstance(n, Num):
            return 5 if n.value >= 0 else _PRECEDENCE["neg"]
        if isinstance(n, Neg):
            return _PRECEDENCE["neg"]
        return _PRECEDENCE[n.op]

    def render(n: Node, min_prec: int) -> str:
        if isinstance(n, Num):
            s = _fmt_number(n.value)
        elif isinstance(n, Var):
            s = f"x{n.index + 1}"
        elif isinstance(n, Call):
            s = f"{n.func}({render(n.operand, 0)})"
        elif isinstance(n, Neg):
            s = f"-{render(n.operand, _PRECEDENCE['neg'])}"
        else:
            assert isinstance(n, BinOp)
            p = _PRECEDENCE[n.op]
            if n.op == "^":
                # left operand must be an atom; the exponent may be unary
                s = f"{render(n.left, p + 1)}^{render(n.right, _PRECEDENCE['neg'])}"
            else:
                s = f"{render(n.left, p)} {n.op} {render(n.right, p + 1)}"
        return f"({s})" if prec_of(n) < min_prec else s

    return render(node, 0)


# ---------------------------------------------------------------------------
# Compilation and evaluation


def compile_node(node: Node, arity: int, text: str | None = None) -> Program:
    used = max_variable(node)
    if used > arity:
        raise ValueError(f"expression uses x{used} but arity is {arity}")
    builder = ProgramBuilder(arity)

    def emit(n: Node) -> None:
        if isinstance(n, Num):
            builder.const(n.value, n.span)
        elif isinstance(n, Var):
            builder.var(n.index, n.span)
        elif isinstance(n, Neg):
            emit(n.operand)
            builder.op(OP_NEG, n.span)
        elif isinstance(n, Call):
            emit(n.operand)
            builder.op(_FUNC_OPS[n.func], n.span)
        else:
            emit(n.left)
            emit(n.right)
            builder.op(_BIN_OPS[n.op], n.span)

    emit(node)
    return builder.finish(text)


def compile_text(text: str, arity: int) -> Program:
    """Parse and compile in one step, pinning the map arity."""
    return compile_node(parse(text, arity), arity, text)


# ---------------------------------------------------------------------------
# Monotonicity inference


@dataclass(frozen=True)
class ArgProbe:
    """Finite-increment sign counts for one argument position."""

    increases: int
    decreases: int
    ties: int
    witness: tuple | None  # (point, bumped point) exhibiting a decrease


@dataclass(frozen=True)
class InferenceReport:
    pattern: tuple[int, ...]
    probes: tuple[ArgProbe, ...]
    constant_args: tuple[int, ...]  # zero-based positions that never moved


class AmbiguousMonotonicityError(ValueError):
    def __init__(self, index: int, probe: ArgProbe):
        self.index = index
        self.probe = probe
        wit = probe.witness
        super().__init__(
            f"argument {index + 1} is not one-signed: "
            f"{probe.increases} increases vs {probe.decreases} decreases; "
            f"decrease witness {wit}")


def infer_pattern(evaluate: Callable, arity: int, region: tuple[float, float],
                  samples: int = 200, seed: int = 0) -> InferenceReport:
    """Probe each argument with positive bumps on random base points.

    ``evaluate`` maps a length-``arity`` sequence to a float and may raise
    :class:`monoembed.program.EvaluationError` (such draws are discarded).
    Arguments whose bumps never change the value are reported constant and
    assigned +1.  Arguments with both strict increases and decreases raise
    :class:`AmbiguousMonotonicityError`.
    """
    lo, hi = float(region[0]), float(region[1])
    if not lo < hi:
        raise ValueError("region must satisfy lo < hi")
    rng = np.random.default_rng(seed)
    from .program import EvaluationError

    signs = []
    probes = []
    constant = []
    for j in range(arity):
        inc = dec = tie = 0
        witness = None
        drawn = 0
        attempts = 0
        while drawn < samples and attempts < 20 * samples:
            attempts += 1
            base = lo + (hi - lo) * rng.random(arity)
            room = hi - base[j]
            if room <= 0.0:
                continue
            bump = room * rng.random()
            if bump == 0.0:
                continue
            other = base.copy()
            other[j] = base[j] + bump
            try:
                f0 = evaluate(base)
                f1 = evaluate(other)
            except EvaluationError:
                continue
            drawn += 1
            if f1 > f0:
                inc += 1
            elif f1 < f0:
                dec += 1
                if witness is None:
                    witness = (tuple(base), tuple(other))
            else:
                tie += 1
        if drawn < samples:
            raise ValueError(
                f"could not draw {samples} valid probes for argument {j + 1}; "
                "the map keeps failing on the probe region")
        probe = ArgProbe(inc, dec, tie, witness)
        probes.append(probe)
        if inc and dec:
            raise AmbiguousMonotonicityError(j, probe)
        if inc:
            signs.append(1)
        elif dec:
            signs.append(-1)
        else:
            signs.append(1)  # constant argument: compatible with either sign
            constant.append(j)
    return InferenceReport(tuple(signs), tuple(probes), tuple(constant))
