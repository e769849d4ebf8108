"""Compact stack programs for scalar map evaluation.

A map F: R^k -> R is stored in postfix form: parallel opcode/operand arrays
plus a constant pool.  Both evaluation engines (the compiled kernel and the
pure-Python fallback) execute the same representation, which keeps their
semantics aligned and makes programs cheap to ship across process boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

# Opcodes.  Binary ops pop two values (left pushed first), unary ops pop one.
OP_CONST = 0   # push consts[arg]
OP_VAR = 1     # push x[arg]
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_POW = 6
OP_NEG = 7
OP_EXP = 8
OP_LN = 9
OP_SQRT = 10

_BINARY = (OP_ADD, OP_SUB, OP_MUL, OP_DIV, OP_POW)
_UNARY = (OP_NEG, OP_EXP, OP_LN, OP_SQRT)

# Error codes shared with the kernels.
ERR_NONE = 0
ERR_DIV_ZERO = 1
ERR_LOG_DOMAIN = 2
ERR_SQRT_DOMAIN = 3
ERR_POW_DOMAIN = 4
ERR_OVERFLOW = 5
ERR_DOMAIN_EXIT = 6

ERROR_MESSAGES = {
    ERR_DIV_ZERO: "division by zero",
    ERR_LOG_DOMAIN: "ln of a non-positive value",
    ERR_SQRT_DOMAIN: "sqrt of a negative value",
    ERR_POW_DOMAIN: "invalid power (negative base with non-integer exponent, "
                    "or zero base with negative exponent)",
    ERR_OVERFLOW: "overflow to a non-finite value",
    ERR_DOMAIN_EXIT: "iterate left the declared domain",
}

MAX_STACK = 128


class EvaluationError(ValueError):
    """Raised when a program hits a domain error or overflows.

    Attributes carry enough context to point at the failing input: the
    offending point, the error code, the index of the failing instruction
    and, when known, the source span of the subexpression that produced it.
    """

    def __init__(self, code: int, point=None, op_index: int = -1,
                 span=None, step: int = -1):
        self.code = code
        self.point = None if point is None else tuple(float(v) for v in point)
        self.op_index = op_index
        self.span = span
        self.step = step
        parts = [ERROR_MESSAGES.get(code, f"evaluation error {code}")]
        if span is not None:
            parts.append(f"at source offset {span[0]}..{span[1]}")
        if step >= 0:
            parts.append(f"at iteration step {step}")
        if self.point is not None:
            parts.append(f"for input {self.point}")
        super().__init__(", ".join(parts))


@dataclass(frozen=True)
class Program:
    """A validated postfix program of arity ``arity``.

    ``spans`` optionally maps each instruction back to a half-open source
    text range for error reporting; builders that do not originate from text
    leave it as None.
    """

    arity: int
    ops: np.ndarray
    args: np.ndarray
    consts: np.ndarray
    max_stack: int
    spans: tuple | None = None
    text: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "ops", np.ascontiguousarray(self.ops, dtype=np.int32))
        object.__setattr__(self, "args", np.ascontiguousarray(self.args, dtype=np.int32))
        object.__setattr__(self, "consts", np.ascontiguousarray(self.consts, dtype=np.float64))
        _validate(self)

    def span_of(self, op_index: int):
        if self.spans is None or not (0 <= op_index < len(self.spans)):
            return None
        return self.spans[op_index]

    def __reduce__(self):
        return (_rebuild_program,
                (self.arity, self.ops, self.args, self.consts,
                 self.max_stack, self.spans, self.text))


def _rebuild_program(arity, ops, args, consts, max_stack, spans, text):
    return Program(arity, ops, args, consts, max_stack, spans, text)


def _validate(prog: Program) -> None:
    if prog.arity < 0:
        raise ValueError("arity must be nonnegative")
    if prog.ops.shape != prog.args.shape:
        raise ValueError("ops and args must be parallel arrays")
    depth = 0
    max_depth = 0
    for op, arg in zip(prog.ops, prog.args):
        if op == OP_CONST:
            if not 0 <= arg < len(prog.consts):
                raise ValueError(f"constant index {arg} out of range")
            depth += 1
        elif op == OP_VAR:
            if not 0 <= arg < prog.arity:
                raise ValueError(f"variable index {arg} out of range for arity {prog.arity}")
            depth += 1
        elif op in _BINARY:
            if depth < 2:
                raise ValueError("stack underflow in program")
            depth -= 1
        elif op in _UNARY:
            if depth < 1:
                raise ValueError("stack underflow in program")
        else:
            raise ValueError(f"unknown opcode {op}")
        max_depth = max(max_depth, depth)
    if depth != 1:
        raise ValueError("program must leave exactly one value on the stack")
    if max_depth != prog.max_stack:
        raise ValueError(f"declared max_stack {prog.max_stack} != computed {max_depth}")
    if max_depth > MAX_STACK:
        raise ValueError(f"program too deep ({max_depth} > {MAX_STACK})")


class ProgramBuilder:
    """Incremental postfix assembler used by the parser and the builtin models."""

    def __init__(self, arity: int):
        self.arity = arity
        self._ops: list[int] = []
        self._args: list[int] = []
        self._consts: list[float] = []
        self._spans: list = []
        self._depth = 0
        self._max_depth = 0

    def _emit(self, op: int, arg: int, span, delta: int) -> None:
        self._ops.append(op)
        self._args.append(arg)
        self._spans.append(span)
        self._depth += delta
        if self._depth < 1:
            raise ValueError("stack underflow while building program")
        self._max_depth = max(self._max_depth, self._depth)

    def const(self, value: float, span=None) -> None:
        value = float(value)
        try:
            idx = self._consts.index(value)
        except ValueError:
            idx = len(self._consts)
            self._consts.append(value)
        self._emit(OP_CONST, idx, span, +1)

    def var(self, index: int, span=None) -> None:
        if not 0 <= index < self.arity:
            raise ValueError(f"variable index {index} out of range for arity {self.arity}")
        self._emit(OP_VAR, index, span, +1)

    def op(self, opcode: int, span=None) -> None:
        if opcode in _BINARY:
            self._emit(opcode, 0, span, -1)
        elif opcode in _UNARY:
            self._emit(opcode, 0, span, 0)
        else:
            raise ValueError(f"not an operator opcode: {opcode}")

    def finish(self, text: str | None = None) -> Program:
        spans = tuple(self._spans) if any(s is not None for s in self._spans) else None
        return Program(
            arity=self.arity,
            ops=np.array(self._ops, dtype=np.int32),
            args=np.array(self._args, dtype=np.int32),
            consts=np.array(self._consts, dtype=np.float64),
            max_stack=self._max_depth,
            spans=spans,
            text=text,
        )
