"""Tests for the postfix program representation in :mod:`monoembed.program`."""

from __future__ import annotations

import math
import pickle

import numpy as np
import pytest

from monoembed import kernels
from monoembed.program import (
    ERR_DIV_ZERO,
    ERR_LOG_DOMAIN,
    ERR_OVERFLOW,
    ERR_POW_DOMAIN,
    ERR_SQRT_DOMAIN,
    MAX_STACK,
    OP_ADD,
    OP_CONST,
    OP_DIV,
    OP_EXP,
    OP_LN,
    OP_MUL,
    OP_NEG,
    OP_POW,
    OP_SQRT,
    OP_SUB,
    OP_VAR,
    EvaluationError,
    Program,
    ProgramBuilder,
)


def build(arity, emit):
    b = ProgramBuilder(arity)
    emit(b)
    return b.finish()


def run(prog, point):
    """Evaluate through the active kernel, raising on error codes."""
    v, err, op = kernels.eval_one(prog.ops, prog.args, prog.consts, point)
    if err:
        raise EvaluationError(err, point, op, prog.span_of(op))
    return float(v)


# ---------------------------------------------------------------------------
# builder and evaluation
# ---------------------------------------------------------------------------


def test_basic_arithmetic_ops():
    cases = [
        (lambda b: (b.var(0), b.var(1), b.op(OP_ADD)), (2.0, 3.0), 5.0),
        (lambda b: (b.var(0), b.var(1), b.op(OP_SUB)), (2.0, 3.0), -1.0),
        (lambda b: (b.var(0), b.var(1), b.op(OP_MUL)), (2.0, 3.0), 6.0),
        (lambda b: (b.var(0), b.var(1), b.op(OP_DIV)), (3.0, 2.0), 1.5),
        (lambda b: (b.var(0), b.var(1), b.op(OP_POW)), (2.0, 10.0), 1024.0),
        (lambda b: (b.var(0), b.op(OP_NEG)), (2.5, 0.0), -2.5),
    ]
    for emit, point, expected in cases:
        prog = build(2, emit)
        assert run(prog, point) == expected


def test_unary_functions_match_math():
    prog_exp = build(1, lambda b: (b.var(0), b.op(OP_EXP)))
    prog_ln = build(1, lambda b: (b.var(0), b.op(OP_LN)))
    prog_sqrt = build(1, lambda b: (b.var(0), b.op(OP_SQRT)))
    for x in (0.125, 0.5, 1.0, 2.75, 17.0):
        assert run(prog_exp, (x,)) == math.exp(x)
        assert run(prog_ln, (x,)) == math.log(x)
        assert run(prog_sqrt, (x,)) == math.sqrt(x)


def test_const_pool_deduplicates():
    prog = build(1, lambda b: (b.const(2.0), b.const(2.0), b.op(OP_ADD),
                               b.var(0), b.op(OP_MUL)))
    assert len(prog.consts) == 1
    assert run(prog, (3.0,)) == 12.0


def test_builder_rejects_bad_pieces():
    b = ProgramBuilder(2)
    with pytest.raises(ValueError):
        b.var(2)
    with pytest.raises(ValueError):
        b.op(OP_CONST)
    b2 = ProgramBuilder(1)
    b2.var(0)
    with pytest.raises(ValueError):
        b2.op(OP_ADD)  # needs two operands


# ---------------------------------------------------------------------------
# validation of directly constructed programs
# ---------------------------------------------------------------------------


def make_program(arity=1, ops=(OP_VAR,), args=(0,), consts=(), max_stack=1):
    return Program(
        arity=arity,
        ops=np.array(ops, dtype=np.int32),
        args=np.array(args, dtype=np.int32),
        consts=np.array(consts, dtype=np.float64),
        max_stack=max_stack,
    )


def test_validation_errors():
    with pytest.raises(ValueError, match="arity"):
        make_program(arity=-1)
    with pytest.raises(ValueError, match="parallel"):
        make_program(ops=(OP_VAR, OP_NEG), args=(0,))
    with pytest.raises(ValueError, match="constant index"):
        make_program(ops=(OP_CONST,), args=(0,))
    with pytest.raises(ValueError, match="variable index"):
        make_program(ops=(OP_VAR,), args=(3,))
    with pytest.raises(ValueError, match="underflow"):
        make_program(ops=(OP_VAR, OP_ADD), args=(0, 0))
    with pytest.raises(ValueError, match="unknown opcode"):
        make_program(ops=(99,), args=(0,))
    with pytest.raises(ValueError, match="exactly one value"):
        make_program(ops=(OP_VAR, OP_VAR), args=(0, 0), max_stack=2)
    with pytest.raises(ValueError, match="max_stack"):
        make_program(ops=(OP_VAR,), args=(0,), max_stack=2)


def test_stack_depth_limit():
    b = ProgramBuilder(0)
    for _ in range(MAX_STACK + 1):
        b.const(1.0)
    for _ in range(MAX_STACK):
        b.op(OP_ADD)
    with pytest.raises(ValueError, match="too deep"):
        b.finish()


# ---------------------------------------------------------------------------
# evaluation errors
# ---------------------------------------------------------------------------


def test_error_codes():
    cases = [
        (lambda b: (b.const(1.0), b.var(0), b.op(OP_DIV)), (0.0,), ERR_DIV_ZERO),
        (lambda b: (b.var(0), b.op(OP_LN)), (0.0,), ERR_LOG_DOMAIN),
        (lambda b: (b.var(0), b.op(OP_LN)), (-1.0,), ERR_LOG_DOMAIN),
        (lambda b: (b.var(0), b.op(OP_SQRT)), (-4.0,), ERR_SQRT_DOMAIN),
        (lambda b: (b.var(0), b.const(0.5), b.op(OP_POW)), (-2.0,), ERR_POW_DOMAIN),
        (lambda b: (b.const(0.0), b.var(0), b.op(OP_POW)), (-1.0,), ERR_POW_DOMAIN),
        (lambda b: (b.var(0), b.op(OP_EXP)), (1e9,), ERR_OVERFLOW),
        (lambda b: (b.var(0), b.var(0), b.op(OP_MUL)), (1e200,), ERR_OVERFLOW),
    ]
    for emit, point, code in cases:
        prog = build(1, emit)
        with pytest.raises(EvaluationError) as exc:
            run(prog, point)
        assert exc.value.code == code
        assert exc.value.point == point


def test_negative_base_integer_exponent_is_fine():
    prog = build(1, lambda b: (b.var(0), b.const(3.0), b.op(OP_POW)))
    assert run(prog, (-2.0,)) == -8.0


def test_error_message_content():
    err = EvaluationError(ERR_LOG_DOMAIN, point=(np.float64(1.5), 2.0),
                          span=(4, 11), step=7)
    text = str(err)
    assert "ln of a non-positive value" in text
    assert "at source offset 4..11" in text
    assert "at iteration step 7" in text
    assert "(1.5, 2.0)" in text
    # Points are coerced to plain floats so reprs stay clean.
    assert "np.float64" not in text
    assert err.point == (1.5, 2.0)
    assert all(type(v) is float for v in err.point)


# ---------------------------------------------------------------------------
# shipping programs across processes
# ---------------------------------------------------------------------------


def test_pickle_round_trip():
    b = ProgramBuilder(2)
    b.var(0)
    b.const(0.5, span=(3, 6))
    b.var(1, span=(9, 11))
    b.op(OP_SUB, span=(3, 11))
    b.op(OP_EXP, span=(0, 12))
    b.op(OP_MUL, span=(0, 12))
    b.const(1.0)
    b.op(OP_ADD)
    prog = b.finish(text="x1*exp(0.5 - x2) + 1")
    clone = pickle.loads(pickle.dumps(prog))
    assert clone.arity == prog.arity
    assert clone.text == prog.text
    assert clone.spans == prog.spans
    assert np.array_equal(clone.ops, prog.ops)
    assert np.array_equal(clone.consts, prog.consts)
    point = (1.25, 0.75)
    assert run(clone, point) == run(prog, point)


def test_span_of():
    b = ProgramBuilder(1)
    b.var(0, span=(0, 2))
    b.op(OP_LN, span=(0, 6))
    prog = b.finish()
    assert prog.span_of(1) == (0, 6)
    assert prog.span_of(99) is None
    unspanned = build(1, lambda b2: (b2.var(0),))
    assert unspanned.span_of(0) is None
