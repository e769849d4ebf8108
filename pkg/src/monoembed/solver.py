"""Fixed pairs of the coupled extension and trapping boxes around orbits.

Every fixed point of the coupled extension G is a pair of two-level corner
points, so the 2k-dimensional fixed-point problem collapses to two scalar
unknowns (x, y): the residual

    R(x, y) = (F(C(x, y)) - x,  F(C(y, x)) - y)

vanishes exactly at fixed points, where C is :func:`corner_point`.  Pairs
with x = y are genuine equilibria of the original recursion; pairs with
x != y ("pseudo" pairs) are artifacts of the coupling that obstruct the
squeeze argument and always show up in transposed couples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .embedding import (SRC_COPY_FIRST, SRC_F_FIRST, SRC_F_SECOND,
                        EmbeddedMap, MapSpec, PairedPoint, build_wiring,
                        corner_pair, corner_point, corner_point_swapped)
from .order import leq_pairs
from .program import EvaluationError


@dataclass(frozen=True)
class SolverConfig:
    """Numeric knobs for enumeration and refinement."""

    grid: int = 64                 # scan cells per axis
    root_tol: float = 1e-10        # residual max-norm accepted as a root
    dedup_tol: float = 1e-7        # max-norm clustering radius
    genuine_tol: float = 1e-8      # |x - y| below this means genuine
    newton_max_iter: int = 100
    fd_scale: float = 1e-7         # central-difference step, relative floor
    tangency_tol: float = 1e-3     # absorb off-diagonal roots this close
                                   # (relative) to a genuine pair


@dataclass(frozen=True)
class FixedPair:
    """One fixed point of the extension in reduced (x, y) coordinates."""

    x: float
    y: float
    genuine: bool
    residual_norm: float

    def corner(self, pattern) -> PairedPoint:
        return corner_pair(self.x, self.y, pattern)


def reduced_residual(spec: MapSpec, x: float, y: float) -> tuple[float, float]:
    """Residual of the corner-pair fixed-point equations at (x, y)."""
    fp = spec(corner_point(x, y, spec.pattern))
    ft = spec(corner_point_swapped(x, y, spec.pattern))
    return (fp - x, ft - y)


def _residual_vec(spec: MapSpec, v: np.ndarray) -> np.ndarray:
    r1, r2 = reduced_residual(spec, float(v[0]), float(v[1]))
    return np.array([r1, r2], dtype=np.float64)


def damped_newton(fun, v0: np.ndarray, root_tol: float,
                  max_iter: int = 100, fd_scale: float = 1e-7):
    """Damped Newton iteration with a central-difference Jacobian.

    ``fun`` maps an n-vector to an n-vector of residuals.  The step is
    halved while the residual norm fails to decrease.  Returns (v, norm,
    converged); evaluation errors simply mark the start as failed.
    """
    v = np.asarray(v0, dtype=np.float64).copy()
    n = len(v)
    try:
        r = fun(v)
    except EvaluationError:
        return v, math.inf, False
    norm = float(np.max(np.abs(r)))
    for _ in range(max_iter):
        if norm <= root_tol:
            return v, norm, True
        jac = np.empty((n, n), dtype=np.float64)
        try:
            for j in range(n):
                h = max(fd_scale, fd_scale * abs(v[j]))
                vp = v.copy(); vp[j] += h
                vm = v.copy(); vm[j] -= h
                jac[:, j] = (fun(vp) - fun(vm)) / (2.0 * h)
        except EvaluationError:
            return v, norm, False
        try:
            step = np.linalg.solve(jac, r)
        except np.linalg.LinAlgError:
            return v, norm, False
        if not np.isfinite(step).all():
            return v, norm, False
        alpha = 1.0
        while alpha >= 2.0 ** -24:
            cand = v - alpha * step
            try:
                rc = fun(cand)
            except EvaluationError:
                alpha *= 0.5
                continue
            cn = float(np.max(np.abs(rc)))
            if cn < norm or cn <= root_tol:
                v, r, norm = cand, rc, cn
                break
            alpha *= 0.5
        else:
            return v, norm, norm <= root_tol
    return v, norm, norm <= root_tol


def enumerate_fixed_pairs(spec: MapSpec, region: tuple[float, float, float, float],
                          config: SolverConfig = SolverConfig()) -> list[FixedPair]:
    """Find fixed pairs of the extension with (x, y) in a scan rectangle.

    The reduced residual is evaluated on a (grid+1)^2 lattice; cells where
    both components change sign, plus local minima of the residual norm,
    seed damped Newton refinement.  Results are deduplicated (transposed
    couples are distinct points and both survive) and sorted by (x, y).
    """
    x_lo, x_hi, y_lo, y_hi = (float(t) for t in region)
    if not (x_lo < x_hi and y_lo < y_hi):
        raise ValueError("region must be a nondegenerate rectangle")
    g = config.grid
    xs = np.linspace(x_lo, x_hi, g + 1)
    ys = np.linspace(y_lo, y_hi, g + 1)
    XX, YY = np.meshgrid(xs, ys, indexing="ij")
    flat_x = XX.ravel()
    flat_y = YY.ravel()

    k = spec.arity
    tau = np.asarray(spec.pattern)
    pts = np.empty((flat_x.size, k), dtype=np.float64)
    pts_t = np.empty_like(pts)
    for i, s in enumerate(tau):
        pts[:, i] = flat_x if s == 1 else flat_y
        pts_t[:, i] = flat_y if s == 1 else flat_x
    r1 = (spec.eval_many(pts, strict=False) - flat_x).reshape(XX.shape)
    r2 = (spec.eval_many(pts_t, strict=False) - flat_y).reshape(XX.shape)

    rnorm = np.hypot(r1, r2)
    seeds: list[tuple[float, float]] = []

    def signs_mixed(block: np.ndarray) -> bool:
        finite = block[np.isfinite(block)]
        return finite.size == 4 and finite.min() <= 0.0 <= finite.max()

    for i in range(g):
        for j in range(g):
            b1 = r1[i:i + 2, j:j + 2]
            b2 = r2[i:i + 2, j:j + 2]
            if signs_mixed(b1) and signs_mixed(b2):
                seeds.append((0.5 * (xs[i] + xs[i + 1]), 0.5 * (ys[j] + ys[j + 1])))
    with np.errstate(invalid="ignore"):
        interior = rnorm[1:-1, 1:-1]
        is_min = np.ones_like(interior, dtype=bool)
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                if di == dj == 0:
                    continue
                nb = rnorm[1 + di:g + di, 1 + dj:g + dj]
                is_min &= ~(nb < interior)
        is_min &= np.isfinite(interior)
    for i, j in zip(*np.nonzero(is_min)):
        seeds.append((float(xs[i + 1]), float(ys[j + 1])))

    cell = max((x_hi - x_lo) / g, (y_hi - y_lo) / g)
    found: list[FixedPair] = []
    fun = lambda v: _residual_vec(spec, v)
    for sx, sy in seeds:
        v, norm, ok = damped_newton(fun, np.array([sx, sy]), config.root_tol,
                                    config.newton_max_iter, config.fd_scale)
        if not ok or norm > config.root_tol:
            continue
        # Polish to the best attainable residual before classifying: at a
        # tangency of the off-diagonal system the first pass can stop on a
        # ghost splitting whose residual is already below tolerance, and
        # polishing collapses such double roots back onto the diagonal
        # while leaving simple roots in place.
        v2, norm2, _ = damped_newton(fun, v, 0.0, 60, config.fd_scale)
        if norm2 <= norm:
            v, norm = v2, norm2
        x, y = float(v[0]), float(v[1])
        if not (x_lo - cell <= x <= x_hi + cell and y_lo - cell <= y <= y_hi + cell):
            continue
        if not (spec.domain.contains_scalar(x) and spec.domain.contains_scalar(y)):
            continue
        dup = False
        for p in found:
            if max(abs(p.x - x), abs(p.y - y)) <= config.dedup_tol:
                dup = True
                break
        if not dup:
            found.append(FixedPair(x, y, abs(x - y) <= config.genuine_tol, norm))
    # When the off-diagonal system is tangent to zero at the equilibrium
    # (the bifurcation boundary itself), floating point admits a cloud of
    # exact off-diagonal roots around it.  Such candidates carry no
    # information beyond the equilibrium, so they are absorbed; the radius
    # bounds how close to the boundary a splitting can still be resolved.
    genuine = [p for p in found if p.genuine]
    if genuine:
        def _tangent_artifact(p: FixedPair) -> bool:
            return any(max(abs(p.x - g.x), abs(p.y - g.y))
                       <= config.tangency_tol * max(1.0, abs(g.x), abs(g.y))
                       for g in genuine)
        found = [p for p in found if p.genuine or not _tangent_artifact(p)]
    found.sort(key=lambda p: (p.x, p.y))
    return found


# ---------------------------------------------------------------------------
# Trapping boxes


@dataclass(frozen=True)
class TrappingBox:
    """A verified pair P <= G(P), G(Q) <= Q in the product order."""

    P: PairedPoint
    Q: PairedPoint
    a: float | None = None  # scalar corners when built from corner points
    b: float | None = None


@dataclass(frozen=True)
class BoxCheck:
    ok: bool
    reason: str = ""


def verify_trapping_box(spec: MapSpec, P: PairedPoint, Q: PairedPoint) -> BoxCheck:
    """Check the inflation/deflation inequalities defining a trapping box."""
    ext = EmbeddedMap(spec)
    tau = spec.pattern
    if not leq_pairs(P.concat(), Q.concat(), tau):
        return BoxCheck(False, "P and Q are not ordered")
    try:
        GP = ext(P)
        GQ = ext(Q)
    except EvaluationError as exc:
        return BoxCheck(False, f"evaluation failed: {exc}")
    if not leq_pairs(P.concat(), GP.concat(), tau):
        return BoxCheck(False, "P is not inflationary (P <= G(P) fails)")
    if not leq_pairs(GQ.concat(), Q.concat(), tau):
        return BoxCheck(False, "Q is not deflationary (G(Q) <= Q fails)")
    return BoxCheck(True)


def diagonal_fixed_point(spec: MapSpec, lo: float, hi: float,
                         scan: int = 256) -> float | None:
    """Locate a root of F(s, ..., s) = s by scan plus bisection."""

    def g(s: float) -> float:
        return spec((s,) * spec.arity) - s

    ss = np.linspace(lo, hi, scan + 1)
    prev_s, prev_g = None, None
    for s in ss:
        try:
            val = g(float(s))
        except EvaluationError:
            prev_s, prev_g = None, None
            continue
        if val == 0.0:
            return float(s)
        if prev_g is not None and (prev_g < 0) != (val < 0):
            a, b = prev_s, float(s)
            fa = prev_g
            for _ in range(200):
                m = 0.5 * (a + b)
                fm = g(m)
                if fm == 0.0 or (b - a) < 1e-14 * max(1.0, abs(m)):
                    return m
                if (fa < 0) != (fm < 0):
                    b = m
                else:
                    a, fa = m, fm
            return 0.5 * (a + b)
        prev_s, prev_g = float(s), val
    return None


def find_trapping_box(spec: MapSpec, x0, max_steps: int = 40,
                      max_candidates: int = 200) -> TrappingBox | None:
    """Search scalar corners (a, b) for a trapping box containing x0.

    On a box domain the extreme corners are tried first (they always work
    when F maps the box into itself).  Otherwise a descends by halving from
    min(x0, equilibrium)/2 and b ascends by doubling from 2 max(x0,
    equilibrium); lattice points are visited in increasing total expansion
    order and each candidate is verified.  A second pass descends a
    linearly instead, because near a stability boundary the workable range
    of lower corners becomes too narrow (ratio close to 1) for a geometric
    ladder to hit.  ``max_candidates`` caps each walk (workable corners
    show up within the first few expansion levels, so a long walk only
    ever burns time on hopeless states).  Returns None when the budget is
    exhausted, which certification reports as an inconclusive stage.
    """
    x0 = tuple(float(v) for v in x0)
    tau = spec.pattern
    dom = spec.domain
    k = spec.arity
    wiring = build_wiring(tau)
    kinds = tuple(int(v) for v in wiring.kinds)
    indices = tuple(int(v) for v in wiring.indices)
    lam = tuple(int(v) for v in wiring.pair_signs)

    def wire(fx: float, fu: float, state: tuple) -> list:
        out = [0.0] * (2 * k)
        for j in range(2 * k):
            kind = kinds[j]
            if kind == SRC_F_FIRST:
                out[j] = fx
            elif kind == SRC_F_SECOND:
                out[j] = fu
            elif kind == SRC_COPY_FIRST:
                out[j] = state[indices[j]]
            else:
                out[j] = state[k + indices[j]]
        return out

    def leq_lam(u, v) -> bool:
        for s, ui, vi in zip(lam, u, v):
            if (ui - vi if s > 0 else vi - ui) > 0.0:
                return False
        return True

    def candidate(a: float, b: float) -> TrappingBox | None:
        # inlined verify_trapping_box on corner pairs: Q is P transposed, so
        # the two F evaluations are shared between G(P) and G(Q)
        cp = tuple(a if s == 1 else b for s in tau)
        ct = tuple(b if s == 1 else a for s in tau)
        pstate, qstate = cp + ct, ct + cp
        if not leq_lam(pstate, qstate):
            return None
        try:
            fa = spec(cp)
            fb = spec(ct)
        except EvaluationError:
            return None
        if not leq_lam(pstate, wire(fa, fb, pstate)):
            return None
        if not leq_lam(wire(fb, fa, qstate), qstate):
            return None
        return TrappingBox(PairedPoint(cp, ct), PairedPoint(ct, cp), a, b)

    if dom.is_box:
        box = candidate(dom.lo, dom.hi)
        if box is not None and dom.lo <= min(x0) and max(x0) <= dom.hi:
            return box

    hi_ref = dom.hi if dom.is_box else 16.0 * max(max(x0), 1.0)
    eq = diagonal_fixed_point(spec, max(dom.lo, 1e-12), hi_ref)
    pivot_lo = min(min(x0), eq) if eq is not None else min(x0)
    pivot_hi = max(max(x0), eq) if eq is not None else max(x0)

    a0 = max(pivot_lo / 2.0, dom.lo)
    b0 = 2.0 * pivot_hi
    if dom.is_box:
        b0 = min(b0, dom.hi)
    if not a0 < b0:
        a0 = dom.lo
        b0 = pivot_hi if pivot_hi > a0 else a0 + 1.0

    ladder_a = [a0]
    for _ in range(max_steps):
        nxt = max(ladder_a[-1] / 2.0, dom.lo)
        if nxt == ladder_a[-1]:
            break
        ladder_a.append(nxt)
    ladder_b = [b0]
    for _ in range(max_steps):
        nxt = min(ladder_b[-1] * 2.0, dom.hi)
        if nxt == ladder_b[-1]:
            break
        ladder_b.append(nxt)

    mn, mx = min(x0), max(x0)

    def walk(la: list, lb: list) -> TrappingBox | None:
        tried = 0
        for total in range(len(la) + len(lb) - 1):
            for ia in range(min(total, len(la) - 1), -1, -1):
                ib = total - ia
                if ib >= len(lb):
                    continue
                a, b = la[ia], lb[ib]
                if not (a < b and a <= mn and mx <= b):
                    continue
                box = candidate(a, b)
                if box is not None:
                    return box
                tried += 1
                if tried >= max_candidates:
                    return None
        return None

    box = walk(ladder_a, ladder_b)
    if box is not None:
        return box
    lin_a = [pivot_lo * (1.0 - j / 24.0) for j in range(24)]
    return walk([a for a in lin_a if a > dom.lo], ladder_b)
