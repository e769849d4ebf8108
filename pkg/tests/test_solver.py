"""Tests for fixed-pair enumeration and trapping-box search."""

from __future__ import annotations

import math

import numpy as np
import pytest

from monoembed.embedding import Domain, MapSpec, PairedPoint, corner_pair
from monoembed.expr import compile_text
from monoembed.models import RationalModel, RickerModel, ricker_equilibrium
from monoembed.program import EvaluationError
from monoembed.solver import (
    BoxCheck,
    FixedPair,
    SolverConfig,
    TrappingBox,
    damped_newton,
    diagonal_fixed_point,
    enumerate_fixed_pairs,
    find_trapping_box,
    reduced_residual,
    verify_trapping_box,
)

# Independently computed reference values (bisection on the defining
# equations at 1e-12 residual).
RICKER_EQ_R05_H1 = 1.5436268955915373
RICKER_EQ_R08_H1 = 1.6931227618799878
PSEUDO_R08_H1 = (1.0120023702967154, 5.234582038829967)


def ricker_spec(r, h, delay=1):
    return RickerModel(r=r, h=h, delay=delay).map_spec()


def rational_ii_spec():
    return RationalModel((1, 3, 6, 1), (1, 2, 4, 30)).map_spec()


# ---------------------------------------------------------------------------
# reduced residual and Newton refinement
# ---------------------------------------------------------------------------


def test_reduced_residual_vanishes_at_equilibrium():
    spec = ricker_spec(0.5, 1.0)
    r1, r2 = reduced_residual(spec, RICKER_EQ_R05_H1, RICKER_EQ_R05_H1)
    assert abs(r1) <= 1e-12 and abs(r2) <= 1e-12


def test_reduced_residual_vanishes_at_pseudo_pair():
    # (1/12, 13/12) solves the corner equations of this rational map exactly.
    spec = rational_ii_spec()
    r1, r2 = reduced_residual(spec, 1.0 / 12.0, 13.0 / 12.0)
    assert abs(r1) <= 1e-12 and abs(r2) <= 1e-12
    g1, g2 = reduced_residual(spec, 1.0 / 3.0, 1.0 / 3.0)
    assert abs(g1) <= 1e-15 and abs(g2) <= 1e-15


def test_damped_newton_solves_smooth_system():
    def fun(v):
        return np.array([v[0] ** 2 + v[1] - 3.0, v[0] + v[1] - 2.0])

    v, norm, ok = damped_newton(fun, np.array([2.0, 1.0]), 1e-12)
    assert ok and norm <= 1e-12
    assert v[0] == pytest.approx((1.0 + math.sqrt(5.0)) / 2.0, abs=1e-10)
    assert v[1] == pytest.approx(2.0 - (1.0 + math.sqrt(5.0)) / 2.0, abs=1e-10)


def test_damped_newton_reports_singular_jacobian():
    def fun(v):
        s = v[0] + v[1]
        return np.array([s - 1.0, s - 1.0])

    v, norm, ok = damped_newton(fun, np.array([0.0, 0.0]), 1e-12)
    assert not ok


def test_damped_newton_survives_failing_start():
    def fun(v):
        raise EvaluationError(2, tuple(v))

    v, norm, ok = damped_newton(fun, np.array([1.0, 1.0]), 1e-12)
    assert not ok and math.isinf(norm)


# ---------------------------------------------------------------------------
# fixed-pair enumeration
# ---------------------------------------------------------------------------


def test_enumerate_rational_finds_genuine_and_pseudo():
    pairs = enumerate_fixed_pairs(rational_ii_spec(), (0.0, 2.0, 0.0, 2.0))
    assert len(pairs) == 3
    assert [p.genuine for p in pairs] == [False, True, False]
    lo, mid, hi = pairs
    assert lo.x == pytest.approx(1.0 / 12.0, abs=1e-9)
    assert lo.y == pytest.approx(13.0 / 12.0, abs=1e-9)
    assert mid.x == pytest.approx(1.0 / 3.0, abs=1e-9)
    assert mid.y == pytest.approx(1.0 / 3.0, abs=1e-9)
    # the transposed couple survives deduplication as its own point
    assert hi.x == pytest.approx(lo.y, abs=1e-9)
    assert hi.y == pytest.approx(lo.x, abs=1e-9)
    assert all(p.residual_norm <= 1e-10 for p in pairs)


def test_enumerate_contracting_map_sees_only_equilibrium():
    pairs = enumerate_fixed_pairs(ricker_spec(0.5, 1.0), (0.0, 10.0, 0.0, 10.0))
    assert len(pairs) == 1
    assert pairs[0].genuine
    assert pairs[0].x == pytest.approx(RICKER_EQ_R05_H1, abs=1e-9)


def test_enumerate_above_onset_sees_pseudo_couple():
    pairs = enumerate_fixed_pairs(ricker_spec(0.8, 1.0), (0.0, 10.0, 0.0, 10.0))
    pseudo = [p for p in pairs if not p.genuine]
    genuine = [p for p in pairs if p.genuine]
    assert len(genuine) == 1 and len(pseudo) == 2
    assert genuine[0].x == pytest.approx(RICKER_EQ_R08_H1, abs=1e-9)
    low = min(pseudo, key=lambda p: p.x)
    assert low.x == pytest.approx(PSEUDO_R08_H1[0], abs=1e-8)
    assert low.y == pytest.approx(PSEUDO_R08_H1[1], abs=1e-8)


def test_enumerate_results_are_sorted():
    pairs = enumerate_fixed_pairs(rational_ii_spec(), (0.0, 2.0, 0.0, 2.0))
    assert pairs == sorted(pairs, key=lambda p: (p.x, p.y))


def test_enumerate_region_validation():
    with pytest.raises(ValueError, match="rectangle"):
        enumerate_fixed_pairs(ricker_spec(0.5, 1.0), (0.0, 0.0, 0.0, 1.0))


def test_fixed_pair_corner_uses_pattern():
    pair = FixedPair(1.0, 2.0, False, 0.0)
    corner = pair.corner((1, -1, 1))
    assert corner.first == (1.0, 2.0, 1.0)
    assert corner.second == (2.0, 1.0, 2.0)


# ---------------------------------------------------------------------------
# trapping-box verification
# ---------------------------------------------------------------------------


def test_verify_box_accepts_wide_corners():
    spec = ricker_spec(0.5, 1.0, delay=2)
    # scalar checks: 1*e^{0.5-3}+1 ~ 1.082 >= 1 and 3*e^{0.5-1}+1 ~ 2.82 <= 3
    box = corner_pair(1.0, 3.0, spec.pattern)
    check = verify_trapping_box(spec, box, box.swapped())
    assert check.ok and check.reason == ""


def test_verify_box_rejects_tight_upper_corner():
    spec = ricker_spec(0.5, 1.0, delay=2)
    # 2.5*e^{0.5-1}+1 ~ 2.516 > 2.5: the upper corner fails to deflate
    box = corner_pair(1.0, 2.5, spec.pattern)
    check = verify_trapping_box(spec, box, box.swapped())
    assert not check.ok
    assert check.reason == "Q is not deflationary (G(Q) <= Q fails)"


def test_verify_box_rejects_unordered_corners():
    spec = ricker_spec(0.5, 1.0, delay=2)
    box = corner_pair(3.0, 1.0, spec.pattern)  # x > y: P above Q
    check = verify_trapping_box(spec, box, box.swapped())
    assert not check.ok
    assert check.reason == "P and Q are not ordered"


def test_verify_box_accepts_degenerate_fixed_point():
    # F(x) = 0.5 x + 1 has the exactly representable equilibrium 2.
    spec = MapSpec(arity=1, pattern=(1,), program=compile_text("0.5*x1 + 1", 1))
    p = PairedPoint.diagonal((2.0,))
    assert verify_trapping_box(spec, p, p).ok


def test_verify_box_matches_scalar_inequalities():
    r, h = 0.5, 1.0
    spec = ricker_spec(r, h, delay=2)
    rng = np.random.default_rng(11)
    agreements = 0
    for _ in range(200):
        a, b = sorted(rng.uniform(0.01, 6.0, 2))
        box = corner_pair(a, b, spec.pattern)
        got = verify_trapping_box(spec, box, box.swapped()).ok
        want = (a <= a * math.exp(r - b) + h) and (b * math.exp(r - a) + h <= b)
        assert got == want
        agreements += got
    assert 0 < agreements < 200  # both outcomes exercised


# ---------------------------------------------------------------------------
# diagonal fixed points
# ---------------------------------------------------------------------------


def test_diagonal_fixed_point_ricker():
    root = diagonal_fixed_point(ricker_spec(0.5, 1.0), 1e-9, 20.0)
    assert root == pytest.approx(RICKER_EQ_R05_H1, abs=1e-9)


def test_diagonal_fixed_point_absent():
    spec = MapSpec(arity=1, pattern=(1,), program=compile_text("x1 + 1", 1))
    assert diagonal_fixed_point(spec, 0.0, 10.0) is None


# ---------------------------------------------------------------------------
# trapping-box search
# ---------------------------------------------------------------------------


def test_find_box_brackets_start_and_verifies():
    spec = ricker_spec(0.5, 1.0, delay=2)
    x0 = (2.0, 2.0, 2.0)
    box = find_trapping_box(spec, x0)
    assert box is not None
    assert box.a <= 1.0 and box.b >= 3.0
    assert box.a <= min(x0) and max(x0) <= box.b
    assert verify_trapping_box(spec, box.P, box.Q).ok


def test_find_box_uses_extreme_corners_of_a_box_domain():
    # F maps [0,5]^2 into [1, 3.5], so the domain corners trap everything.
    spec = MapSpec(arity=2, pattern=(1, -1), domain=Domain.box(0.0, 5.0),
                   program=compile_text("2 + 0.3*x1 - 0.2*x2", 2))
    box = find_trapping_box(spec, (1.0, 1.0))
    assert box is not None
    assert box.a == 0.0 and box.b == 5.0
    assert verify_trapping_box(spec, box.P, box.Q).ok


def test_find_box_gives_up_without_corners():
    # Far above the pseudo-pair onset no corner pair can trap the orbit.
    spec = ricker_spec(5.0, 1.0, delay=2)
    assert find_trapping_box(spec, (2.0, 2.0, 2.0)) is None


def test_find_box_near_stability_boundary():
    # Near the onset the workable lower-corner window is too narrow for the
    # halving ladder; the linear second pass must find it.
    spec = ricker_spec(1.465, 2.207, delay=1)
    eq = ricker_equilibrium(1.465, 2.207)
    box = find_trapping_box(spec, (eq, eq))
    assert box is not None
    assert verify_trapping_box(spec, box.P, box.Q).ok
    # and from a generic nearby start as well
    box2 = find_trapping_box(spec, (3.0, 3.0))
    assert box2 is not None
    assert verify_trapping_box(spec, box2.P, box2.Q).ok


def test_trapping_box_defaults():
    p = PairedPoint.diagonal((2.0,))
    box = TrappingBox(p, p)
    assert box.a is None and box.b is None
    assert isinstance(verify_trapping_box(
        MapSpec(arity=1, pattern=(1,), program=compile_text("0.5*x1 + 1", 1)),
        box.P, box.Q), BoxCheck)
