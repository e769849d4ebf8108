"""Tests for expression parsing, printing and sign probing."""

from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from monoembed.expr import (
    AmbiguousMonotonicityError,
    BinOp,
    Call,
    Neg,
    Num,
    ParseError,
    Var,
    compile_text,
    infer_pattern,
    max_variable,
    parse,
    same_tree,
    to_text,
)
from monoembed import kernels
from monoembed.program import ERR_DIV_ZERO, ERR_LOG_DOMAIN, EvaluationError


def run(prog, point):
    """Evaluate through the active kernel, raising on error codes."""
    v, err, op = kernels.eval_one(prog.ops, prog.args, prog.consts, point)
    if err:
        raise EvaluationError(err, point, op, prog.span_of(op))
    return float(v)


def evaluate(text, point, arity=None):
    k = arity if arity is not None else max(len(point), 1)
    prog = compile_text(text, k)
    padded = tuple(point) + (0.0,) * (k - len(point))
    return run(prog, padded)


# ---------------------------------------------------------------------------
# grammar
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "text, point, expected",
    [
        ("1-2-3", (), -4.0),                 # '-' associates left
        ("6/3/2", (), 1.0),                  # '/' associates left
        ("2*3+4*5", (), 26.0),               # '*' binds tighter than '+'
        ("2^3^2", (), 512.0),                # '^' associates right
        ("-x1^2", (3.0,), -9.0),             # '^' binds tighter than unary '-'
        ("2^-3", (), 0.125),                 # unary minus allowed in exponents
        ("--2", (), 2.0),                    # stacked unary minus
        ("-2^2", (), -4.0),
        ("(1+2)*3", (), 9.0),
        ("2e2 + .5", (), 200.5),
        ("x1*exp(0.5 - x2) + 1", (1.0, 3.0), math.exp(-2.5) + 1.0),
    ],
)
def test_parse_and_evaluate(text, point, expected):
    arity = max(len(point), 1)
    assert evaluate(text, point, arity) == expected


@pytest.mark.parametrize(
    "text, position",
    [
        ("x1 ++ 2", 4),          # second '+' starts an empty operand
        ("1 + foo", 4),          # unknown identifier
        ("1 + x0", 4),           # x0 is not a variable name
        ("exp 2", 4),            # function call needs parentheses
        ("(1 + 2", 6),           # unclosed parenthesis
        ("1 + 2)", 5),           # trailing input
        ("", 0),                 # empty input
        ("1 + {2}", 4),          # unexpected character
    ],
)
def test_parse_errors_carry_position(text, position):
    with pytest.raises(ParseError) as exc:
        parse(text)
    assert exc.value.position == position
    msg = str(exc.value)
    assert f"(at offset {position})" in msg
    if text:
        assert text in msg  # the caret context echoes the source


def test_arity_bound_rejects_high_variables():
    with pytest.raises(ParseError, match="unknown variable x3"):
        parse("x1 + x3", arity=2)
    # Without a declared arity the variable is accepted.
    assert max_variable(parse("x1 + x3")) == 3


def test_compile_text_pins_arity():
    prog = compile_text("x1 + x2", 4)
    assert prog.arity == 4
    assert run(prog, (1.0, 2.0, 9.0, 9.0)) == 3.0
    with pytest.raises(ParseError):
        compile_text("x5", 4)


# ---------------------------------------------------------------------------
# printing round trip
# ---------------------------------------------------------------------------


@pytest.mark.parametrize(
    "text",
    [
        "x1",
        "-x1^2",
        "2^-3",
        "2^3^2",
        "1 - (2 - 3)",
        "(x1 + x2)/(1 + x3)",
        "x1*exp(0.5 - x2) + 1",
        "sqrt(x1)*ln(x2 + 1)",
        "-(x1 + x2)",
        "1/(2*x1)",
        "(1 + 2)^(3 + 4)",
    ],
)
def test_round_trip_examples(text):
    tree = parse(text)
    printed = to_text(tree)
    assert same_tree(parse(printed), tree)


def number_nodes():
    return st.floats(min_value=0.0, max_value=1e6, allow_nan=False).map(
        lambda v: Num((0, 0), v))


def var_nodes():
    return st.integers(min_value=0, max_value=3).map(lambda i: Var((0, 0), i))


def trees():
    return st.recursive(
        st.one_of(number_nodes(), var_nodes()),
        lambda children: st.one_of(
            children.map(lambda n: Neg((0, 0), n)),
            st.tuples(st.sampled_from(("exp", "ln", "sqrt")), children).map(
                lambda t: Call((0, 0), t[0], t[1])),
            st.tuples(st.sampled_from(("+", "-", "*", "/", "^")),
                      children, children).map(
                lambda t: BinOp((0, 0), t[0], t[1], t[2])),
        ),
        max_leaves=12,
    )


@given(trees())
def test_round_trip_random_trees(tree):
    assert same_tree(parse(to_text(tree)), tree)


def test_number_formatting():
    assert to_text(parse("2.0 + x1")) == "2 + x1"
    assert to_text(parse("0.5*x1")) == "0.5 * x1"


# ---------------------------------------------------------------------------
# evaluation errors point back at the source
# ---------------------------------------------------------------------------


def test_domain_error_carries_span():
    text = "1 + ln(x1 - 2)"
    prog = compile_text(text, 1)
    with pytest.raises(EvaluationError) as exc:
        run(prog, (1.0,))
    err = exc.value
    assert err.code == ERR_LOG_DOMAIN
    lo, hi = err.span
    assert text[lo:hi] == "ln(x1 - 2)"
    assert "source offset" in str(err)


def test_division_by_zero_span():
    text = "1/x1"
    prog = compile_text(text, 1)
    with pytest.raises(EvaluationError) as exc:
        run(prog, (0.0,))
    assert exc.value.code == ERR_DIV_ZERO
    lo, hi = exc.value.span
    assert text[lo:hi] == "1/x1"


# ---------------------------------------------------------------------------
# differential check against direct arithmetic
# ---------------------------------------------------------------------------


def test_compiled_matches_direct_arithmetic():
    text = "(1 + 3*x1 + 6*x2 + x3)/(1 + 2*x1 + 4*x2 + 30*x3)"
    prog = compile_text(text, 3)

    def direct(p):
        num = 1.0 + 3.0 * p[0] + 6.0 * p[1] + 1.0 * p[2]
        den = 1.0 + 2.0 * p[0] + 4.0 * p[1] + 30.0 * p[2]
        return num / den

    rng = np.random.default_rng(7)
    for _ in range(1000):
        p = tuple(rng.uniform(0.0, 10.0, 3))
        got = run(prog, p)
        want = direct(p)
        assert got == pytest.approx(want, rel=1e-14, abs=0.0)


# ---------------------------------------------------------------------------
# monotonicity inference
# ---------------------------------------------------------------------------


def probe_program(text, arity):
    prog = compile_text(text, arity)
    return lambda p: run(prog, tuple(p))


def test_infer_pattern_rational_example():
    f = probe_program("(1 + 3*x1 + 6*x2 + x3)/(1 + 2*x1 + 4*x2 + 30*x3)", 3)
    report = infer_pattern(f, 3, (0.0, 10.0))
    assert report.pattern == (1, 1, -1)
    assert report.constant_args == ()
    assert all(p.decreases == 0 for p in report.probes[:2])
    assert report.probes[2].increases == 0


def test_infer_pattern_reports_constant_arguments():
    f = probe_program("x1", 2)
    report = infer_pattern(f, 2, (0.0, 1.0))
    assert report.pattern == (1, 1)
    assert report.constant_args == (1,)
    probe = report.probes[1]
    assert probe.increases == 0 and probe.decreases == 0 and probe.ties > 0


def test_infer_pattern_rejects_mixed_signs():
    f = probe_program("x1*x1 - x1", 1)
    with pytest.raises(AmbiguousMonotonicityError) as exc:
        infer_pattern(f, 1, (0.0, 2.0))
    err = exc.value
    assert err.index == 0
    assert err.probe.increases > 0 and err.probe.decreases > 0
    assert err.probe.witness is not None
    base, bumped = err.probe.witness
    assert f(bumped) < f(base)


def test_infer_pattern_discards_failing_draws():
    # ln(x1 - 1) fails on part of the region; probing still succeeds.
    f = probe_program("ln(x1 - 1)", 1)
    report = infer_pattern(f, 1, (0.0, 4.0), samples=50)
    assert report.pattern == (1,)


def test_infer_pattern_gives_up_when_map_always_fails():
    f = probe_program("ln(-1 - x1)", 1)
    with pytest.raises(ValueError, match="keeps failing"):
        infer_pattern(f, 1, (0.0, 1.0), samples=10)


def test_infer_pattern_region_validation():
    f = probe_program("x1", 1)
    with pytest.raises(ValueError, match="lo < hi"):
        infer_pattern(f, 1, (1.0, 1.0))
