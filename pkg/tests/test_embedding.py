"""Tests for domains, paired states and the coupled extension map."""

from __future__ import annotations

import math

import numpy as np
import pytest

from monoembed.embedding import (
    SRC_COPY_FIRST,
    SRC_COPY_SECOND,
    SRC_F_FIRST,
    SRC_F_SECOND,
    Domain,
    EmbeddedMap,
    MapSpec,
    PairedPoint,
    build_wiring,
    corner_pair,
    corner_point,
    corner_point_swapped,
    verify_pattern,
)
from monoembed.expr import compile_text
from monoembed.order import leq_pairs, pair_pattern
from monoembed.program import EvaluationError


def ricker_spec(r=0.5, h=1.0, delay=1):
    arity = delay + 1
    text = f"x1*exp({r} - x{arity}) + {h}"
    return MapSpec(arity=arity, pattern=(1,) * delay + (-1,),
                   domain=Domain.orthant(), program=compile_text(text, arity))


def digit_spec(arity, pattern):
    """A map whose value identifies its inputs: sum of args in base 10."""
    weights = [10.0 ** (arity - 1 - i) for i in range(arity)]

    def func(p):
        return sum(w * v for w, v in zip(weights, p))

    return MapSpec(arity=arity, pattern=pattern,
                   domain=Domain(-math.inf, math.inf), func=func)


# ---------------------------------------------------------------------------
# Domain
# ---------------------------------------------------------------------------


def test_domain_validation_and_membership():
    d = Domain(0.0, 2.0)
    assert d.contains_scalar(0.0) and d.contains_scalar(2.0)
    assert not d.contains_scalar(2.5)
    assert d.contains((0.5, 1.5)) and not d.contains((0.5, 3.0))
    with pytest.raises(ValueError):
        Domain(1.0, 1.0)
    with pytest.raises(ValueError):
        Domain(2.0, 1.0)


def test_domain_constructors():
    assert Domain.orthant() == Domain(0.0, math.inf)
    assert not Domain.orthant().is_box
    assert Domain.box(0, 10).is_box
    with pytest.raises(ValueError):
        Domain.box(0.0, math.inf)


# ---------------------------------------------------------------------------
# PairedPoint
# ---------------------------------------------------------------------------


def test_paired_point_basics():
    p = PairedPoint((1, 2), (3, 4))
    assert p.first == (1.0, 2.0) and p.second == (3.0, 4.0)
    assert p.k == 2
    assert p.concat() == (1.0, 2.0, 3.0, 4.0)
    assert p.swapped() == PairedPoint((3.0, 4.0), (1.0, 2.0))
    assert p.swapped().swapped() == p
    assert PairedPoint.from_concat(p.concat()) == p
    assert PairedPoint.diagonal((5, 6)) == PairedPoint((5.0, 6.0), (5.0, 6.0))


def test_paired_point_validation():
    with pytest.raises(ValueError):
        PairedPoint((1.0,), (1.0, 2.0))
    with pytest.raises(ValueError):
        PairedPoint.from_concat((1.0, 2.0, 3.0))


# ---------------------------------------------------------------------------
# corner points
# ---------------------------------------------------------------------------


def test_corner_point_examples():
    assert corner_point(7.0, 9.0, (1, 1, -1)) == (7.0, 7.0, 9.0)
    assert corner_point(7.0, 9.0, (-1, 1, 1, -1)) == (9.0, 7.0, 7.0, 9.0)
    assert corner_point_swapped(7.0, 9.0, (1, 1, -1)) == (9.0, 9.0, 7.0)
    pair = corner_pair(7.0, 9.0, (1, 1, -1))
    assert pair.first == (7.0, 7.0, 9.0)
    assert pair.second == (9.0, 9.0, 7.0)
    assert pair.swapped() == corner_pair(9.0, 7.0, (1, 1, -1))


def test_corner_pair_is_ordered_when_x_below_y():
    pat = (1, -1, 1)
    pair = corner_pair(2.0, 5.0, pat)
    assert leq_pairs(pair.concat(), pair.swapped().concat(), pat)


# ---------------------------------------------------------------------------
# MapSpec
# ---------------------------------------------------------------------------


def test_map_spec_validation():
    prog = compile_text("x1 + x2", 2)
    with pytest.raises(ValueError, match="pattern length"):
        MapSpec(arity=2, pattern=(1,), program=prog)
    with pytest.raises(ValueError, match="program or a callable"):
        MapSpec(arity=2, pattern=(1, 1))
    with pytest.raises(ValueError, match="arity mismatch"):
        MapSpec(arity=3, pattern=(1, 1, 1), program=prog)


def test_map_spec_call_checks_arity():
    spec = ricker_spec()
    with pytest.raises(ValueError, match="expected 2 arguments"):
        spec((1.0, 2.0, 3.0))


def test_map_spec_evaluates_program():
    spec = ricker_spec(r=0.5, h=1.0, delay=1)
    assert spec((1.0, 3.0)) == math.exp(-2.5) + 1.0


def test_map_spec_step_shifts_window():
    spec = ricker_spec(r=0.5, h=1.0, delay=1)
    assert spec.step((1.0, 3.0)) == (math.exp(-2.5) + 1.0, 1.0)
    spec3 = ricker_spec(r=0.5, h=1.0, delay=2)
    out = spec3.step((1.0, 2.0, 3.0))
    assert out == (spec3((1.0, 2.0, 3.0)), 1.0, 2.0)


def test_func_backed_spec_normalizes_failures():
    spec = MapSpec(arity=1, pattern=(1,), func=lambda p: math.log(p[0]),
                   domain=Domain(-math.inf, math.inf))
    assert spec((1.0,)) == 0.0
    with pytest.raises(EvaluationError):
        spec((-1.0,))
    inf_spec = MapSpec(arity=1, pattern=(1,), func=lambda p: math.inf)
    with pytest.raises(EvaluationError) as exc:
        inf_spec((1.0,))
    assert exc.value.code == 5


def test_eval_many_matches_scalar_calls():
    spec = ricker_spec()
    X = np.array([[1.0, 3.0], [2.0, 2.0], [0.5, 0.1]])
    vals = spec.eval_many(X)
    for row, v in zip(X, vals):
        # the vectorised path may differ from the scalar path by an ulp
        assert v == pytest.approx(spec(tuple(row)), rel=1e-14)
    with pytest.raises(ValueError, match=r"\(n, arity\)"):
        spec.eval_many(np.zeros((3, 5)))


def test_eval_many_strict_and_lenient():
    prog = compile_text("ln(x1)", 1)
    spec = MapSpec(arity=1, pattern=(1,), program=prog,
                   domain=Domain(-math.inf, math.inf))
    X = np.array([[1.0], [-1.0], [math.e]])
    out = spec.eval_many(X, strict=False)
    assert out[0] == 0.0 and math.isnan(out[1]) and out[2] == 1.0
    with pytest.raises(EvaluationError) as exc:
        spec.eval_many(X, strict=True)
    assert exc.value.point == (-1.0,)


# ---------------------------------------------------------------------------
# wiring of the coupled extension
# ---------------------------------------------------------------------------


def test_wiring_mixed_two_arg():
    w = build_wiring((1, -1))
    assert list(w.kinds) == [SRC_F_FIRST, SRC_COPY_SECOND,
                             SRC_F_SECOND, SRC_COPY_FIRST]
    assert list(w.indices) == [0, 0, 0, 0]
    assert list(w.pair_signs) == [1, -1, -1, 1]


def test_wiring_decreasing_leading_arg():
    w = build_wiring((-1, -1, 1))
    assert list(w.kinds) == [SRC_F_SECOND, SRC_COPY_FIRST, SRC_COPY_SECOND,
                             SRC_F_FIRST, SRC_COPY_SECOND, SRC_COPY_FIRST]
    assert list(w.indices) == [0, 0, 1, 0, 0, 1]


def test_extension_routes_arguments_mixed_two_arg():
    # F(a, b) = 10a + b makes each output slot identifiable.
    spec = digit_spec(2, (1, -1))
    G = spec.extension()
    out = G(PairedPoint((1.0, 2.0), (3.0, 4.0)))
    assert out.first == (12.0, 3.0)
    assert out.second == (34.0, 1.0)


def test_extension_routes_arguments_three_arg():
    spec = digit_spec(3, (-1, -1, 1))
    G = spec.extension()
    out = G(PairedPoint((1.0, 2.0, 3.0), (4.0, 5.0, 6.0)))
    assert out.first == (456.0, 1.0, 5.0)
    assert out.second == (123.0, 4.0, 2.0)


def test_extension_dimension_check():
    G = ricker_spec().extension()
    with pytest.raises(ValueError, match="wrong dimension"):
        G(PairedPoint((1.0, 2.0, 3.0), (1.0, 2.0, 3.0)))


def test_extension_diagonal_equals_vector_map():
    rng = np.random.default_rng(3)
    for spec in (ricker_spec(0.5, 1.0, 1), ricker_spec(0.8, 1.0, 2),
                 digit_spec(3, (1, -1, 1))):
        G = spec.extension()
        for _ in range(50):
            X = tuple(rng.uniform(0.1, 5.0, spec.arity))
            out = G(PairedPoint.diagonal(X))
            step = spec.step(X)
            assert out.first == step  # exact: same evaluations, pure copies
            assert out.second == step


def test_extension_swap_symmetry():
    rng = np.random.default_rng(4)
    for spec in (ricker_spec(0.5, 1.0, 2), digit_spec(4, (1, -1, -1, 1))):
        G = spec.extension()
        for _ in range(50):
            x = tuple(rng.uniform(0.1, 5.0, spec.arity))
            u = tuple(rng.uniform(0.1, 5.0, spec.arity))
            p = PairedPoint(x, u)
            assert G(p.swapped()) == G(p).swapped()


def test_extension_preserves_pair_order():
    spec = ricker_spec(0.5, 1.0, 1)
    G = spec.extension()
    lam = pair_pattern(spec.pattern)
    rng = np.random.default_rng(5)
    for _ in range(200):
        base = rng.uniform(0.0, 6.0, 4)
        room = np.where(np.array(lam) > 0, 6.0 - base, base)
        bumped = base + np.array(lam) * room * rng.uniform(size=4)
        xi = PairedPoint.from_concat(base)
        eta = PairedPoint.from_concat(bumped)
        assert leq_pairs(xi.concat(), eta.concat(), spec.pattern)
        assert leq_pairs(G(xi).concat(), G(eta).concat(), spec.pattern)


# ---------------------------------------------------------------------------
# pattern verification
# ---------------------------------------------------------------------------


def test_verify_pattern_accepts_correct_declaration():
    report = verify_pattern(ricker_spec(0.5, 1.0, 1), (0.0, 10.0), samples=2000)
    assert report.ok
    assert report.checked == 2000
    assert report.skipped == 0
    assert report.violations == ()


def test_verify_pattern_catches_wrong_declaration():
    spec = MapSpec(arity=1, pattern=(-1,), program=compile_text("x1", 1))
    report = verify_pattern(spec, (0.0, 1.0), samples=200)
    assert not report.ok
    v = report.violations[0]
    assert v.f_upper < v.f_lower
    assert len(report.violations) <= 10


def test_verify_pattern_counts_failed_draws():
    spec = MapSpec(arity=1, pattern=(1,), program=compile_text("ln(x1 - 1)", 1),
                   domain=Domain(-math.inf, math.inf))
    report = verify_pattern(spec, (0.0, 4.0), samples=500)
    assert report.ok
    assert report.skipped > 0
    assert report.checked + report.skipped == 500


def test_verify_pattern_region_validation():
    with pytest.raises(ValueError, match="lo < hi"):
        verify_pattern(ricker_spec(), (2.0, 2.0))
