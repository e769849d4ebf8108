"""Cycle analysis for periodically forced delay systems.

A periodic system cycles through maps F_0, ..., F_{p-1} that share arity
and monotonicity pattern.  Fixed points of the full-period composition of
the coupled extensions classify the system's cycles: diagonal fixed points
are genuine cycles of the scalar recursion, off-diagonal ones are pseudo
cycles introduced by the embedding, and their absence supports certifying
a globally attracting cycle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dynamics import (DynamicsConfig, Status, Verdict, VerdictKind,
                       _squeeze_core, certify_global_attractor,
                       sample_log_uniform)
from .embedding import EmbeddedMap, MapSpec, PairedPoint, corner_pair
from .program import EvaluationError
from .solver import (SolverConfig, TrappingBox, damped_newton,
                     verify_trapping_box)


@dataclass(frozen=True)
class PeriodicSystem:
    """A sequence of maps applied cyclically, one per time step."""

    maps: tuple[MapSpec, ...]

    def __post_init__(self):
        maps = tuple(self.maps)
        object.__setattr__(self, "maps", maps)
        if not maps:
            raise ValueError("a periodic system needs at least one map")
        k = maps[0].arity
        tau = tuple(maps[0].pattern)
        for m in maps[1:]:
            if m.arity != k or tuple(m.pattern) != tau:
                raise ValueError("all maps must share arity and pattern")

    @property
    def period(self) -> int:
        """Declared period; minimality is the caller's claim."""
        return len(self.maps)

    @property
    def arity(self) -> int:
        return self.maps[0].arity

    @property
    def pattern(self):
        return self.maps[0].pattern

    def step_scalar(self, X, n: int) -> tuple[float, ...]:
        """Advance the scalar delay state one step at time index n."""
        return self.maps[n % self.period].step(X)


def compose_phi(system: PeriodicSystem, i: int = 0, j: int | None = None):
    """The composition of coupled extensions for phases i..j (inclusive).

    Returns a callable on PairedPoint.  The full-period composition (the
    default) is the monodromy map whose fixed points classify cycles.
    Evaluation failures are re-raised with the failing phase recorded in
    the error's step index.
    """
    if j is None:
        j = system.period - 1
    if not 0 <= i <= j < system.period:
        raise ValueError("need 0 <= i <= j < period")
    stages = [EmbeddedMap(m) for m in system.maps[i:j + 1]]

    def phi(point: PairedPoint) -> PairedPoint:
        for stage, ext in enumerate(stages, start=i):
            try:
                point = ext(point)
            except EvaluationError as exc:
                raise EvaluationError(exc.code, exc.point, exc.op_index,
                                      exc.span, step=stage) from None
        return point

    return phi


@dataclass(frozen=True)
class CycleRecord:
    """One cycle of the coupled extension, stored at its minimal length.

    ``points[j]`` is the paired state at phase j; applying the coupled
    extensions G_0, ..., G_{q-1} cyclically maps each point to the next.
    Genuine cycles lie on the diagonal and are cycles of the underlying
    scalar recursion; pseudo cycles are embedding artifacts.
    """

    points: tuple[PairedPoint, ...]
    q: int
    genuine: bool
    residual: float

    def scalar_values(self) -> tuple[float, ...]:
        """Newest scalar coordinate at each phase (first half)."""
        return tuple(p.first[0] for p in self.points)

    def transposed(self) -> "CycleRecord":
        return CycleRecord(tuple(p.swapped() for p in self.points),
                           self.q, self.genuine, self.residual)


def _unroll(system: PeriodicSystem, point: PairedPoint) -> list[PairedPoint]:
    orbit = [point]
    for m in system.maps[:-1]:
        orbit.append(EmbeddedMap(m)(orbit[-1]))
    return orbit


def _state_dist(a: PairedPoint, b: PairedPoint) -> float:
    return max(abs(u - v) for u, v in zip(a.concat(), b.concat()))


def _minimal_q(orbit: list[PairedPoint], tol: float) -> int:
    p = len(orbit)
    for q in range(1, p + 1):
        if p % q:
            continue
        if all(_state_dist(orbit[j], orbit[(j + q) % p]) <= tol
               for j in range(p)):
            return q
    return p


def _cycles_match(a: list[PairedPoint], b: list[PairedPoint],
                  tol: float) -> bool:
    if len(a) != len(b):
        return False
    n = len(a)
    for shift in range(n):
        if all(_state_dist(a[j], b[(j + shift) % n]) <= tol
               for j in range(n)):
            return True
    return False


def find_cycles(system: PeriodicSystem,
                region: tuple[float, float],
                starts: int = 200, seed: int = 0,
                config: SolverConfig = SolverConfig()) -> list[CycleRecord]:
    """Multistart root search for cycles of the full-period composition.

    Random starts are drawn log-uniformly from ``region`` per coordinate
    (both halves), plus diagonal starts so genuine cycles are always
    seeded.  Each converged fixed point of the monodromy map is unrolled
    over one period, reduced to its minimal length, and deduplicated up
    to cyclic rotation.  A pseudo cycle's transposed twin is a fixed
    point by symmetry, so the result list is closed under transposition.
    Records are sorted genuine-first, then by scalar values.
    """
    lo, hi = float(region[0]), float(region[1])
    if not lo < hi:
        raise ValueError("region must be a nondegenerate interval")
    k = system.arity
    p = system.period
    phi = compose_phi(system)
    dom = system.maps[0].domain

    def residual(v: np.ndarray) -> np.ndarray:
        pt = PairedPoint(v[:k], v[k:])
        out = phi(pt)
        return np.asarray(out.concat()) - v

    rng = np.random.default_rng(seed)
    n_diag = max(starts // 4, 8)
    seeds: list[np.ndarray] = []
    for _ in range(starts):
        seeds.append(sample_log_uniform(rng, lo, hi, 2 * k))
    for _ in range(n_diag):
        half = sample_log_uniform(rng, lo, hi, k)
        seeds.append(np.concatenate([half, half]))

    margin = 0.05 * (hi - lo)
    found: list[list[PairedPoint]] = []
    residuals: list[float] = []
    failed = 0
    for s in seeds:
        v, norm, ok = damped_newton(residual, s, config.root_tol,
                                    config.newton_max_iter, config.fd_scale)
        if not ok or norm > config.root_tol:
            failed += 1
            continue
        if not all(lo - margin <= c <= hi + margin for c in v):
            continue
        if not all(dom.contains_scalar(float(c)) for c in v):
            continue
        pt = PairedPoint(v[:k], v[k:])
        try:
            orbit = _unroll(system, pt)
        except EvaluationError:
            continue
        if any(_cycles_match(orbit, fo, config.dedup_tol) for fo in found):
            continue
        found.append(orbit)
        residuals.append(norm)

    # Close the list under transposition: the twin of a fixed point is a
    # fixed point by the swap symmetry of the extension, but multistart
    # may have missed its basin.
    for orbit, norm in list(zip(found, residuals)):
        twin = [pt.swapped() for pt in orbit]
        if not any(_cycles_match(twin, fo, config.dedup_tol) for fo in found):
            found.append(twin)
            residuals.append(norm)

    records: list[CycleRecord] = []
    for orbit, norm in zip(found, residuals):
        q = _minimal_q(orbit, config.dedup_tol)
        genuine = all(max(abs(a - b) for a, b in zip(pt.first, pt.second))
                      <= config.genuine_tol for pt in orbit)
        records.append(CycleRecord(tuple(orbit[:q]), q, genuine, norm))
    records.sort(key=lambda r: (not r.genuine, r.scalar_values()))
    return records


def find_periodic_trapping_box(system: PeriodicSystem, x0,
                               pivot: tuple[float, float] | None = None,
                               max_steps: int = 40) -> TrappingBox | None:
    """Search scalar corners (a, b) trapping x0 under the phase maps.

    Same expanding ladder as the autonomous search.  A candidate box is
    accepted when the inflation/deflation inequalities hold for each
    phase individually, or failing that, for the full-period composition
    (the weaker condition that still makes the period-to-period envelopes
    nested, which is what the squeeze relies on).
    """
    x0 = tuple(float(v) for v in x0)
    tau = system.pattern
    dom = system.maps[0].domain
    lam = list(tau) + [-s for s in tau]
    phi = compose_phi(system)

    def composed_ok(P: PairedPoint, Q: PairedPoint) -> bool:
        try:
            phiP = phi(P).concat()
            phiQ = phi(Q).concat()
        except EvaluationError:
            return False
        Pc, Qc = P.concat(), Q.concat()
        return (all(s * (gp - p) >= 0 for s, p, gp in zip(lam, Pc, phiP))
                and all(s * (q - gq) >= 0 for s, q, gq in zip(lam, Qc, phiQ)))

    def candidate(a: float, b: float) -> TrappingBox | None:
        P = corner_pair(a, b, tau)
        Q = P.swapped()
        if all(verify_trapping_box(m, P, Q).ok for m in system.maps):
            return TrappingBox(P, Q, a, b)
        if composed_ok(P, Q):
            return TrappingBox(P, Q, a, b)
        return None

    if dom.is_box:
        box = candidate(dom.lo, dom.hi)
        if box is not None and dom.lo <= min(x0) and max(x0) <= dom.hi:
            return box

    pivot_lo = min(x0) if pivot is None else min(min(x0), pivot[0])
    pivot_hi = max(x0) if pivot is None else max(max(x0), pivot[1])

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

    for total in range(len(ladder_a) + len(ladder_b) - 1):
        for ia in range(min(total, len(ladder_a) - 1), -1, -1):
            ib = total - ia
            if ib >= len(ladder_b):
                continue
            a, b = ladder_a[ia], ladder_b[ib]
            if not (a < b and a <= min(x0) and max(x0) <= b):
                continue
            box = candidate(a, b)
            if box is not None:
                return box
    return None


def certify_periodic_attractor(system: PeriodicSystem,
                               region: tuple[float, float],
                               config: DynamicsConfig = DynamicsConfig(),
                               starts: int = 200) -> Verdict:
    """Certify a globally attracting cycle for a periodic system.

    Pipeline: cycle search first (any pseudo cycle ends certification);
    with exactly one genuine cycle, sampled initial states are burnt in
    over whole periods, boxed by a trapping pair valid for every phase,
    and squeezed through the full-period composition.  Certified means
    every sample converged to the genuine cycle's phase-0 state.

    A single-map system is the autonomous problem, which is delegated
    unchanged.
    """
    if system.period == 1:
        m = system.maps[0]
        lo, hi = float(region[0]), float(region[1])
        return certify_global_attractor(m, (lo, hi, lo, hi), config)

    k = system.arity
    p = system.period
    records = find_cycles(system, region, starts=starts, seed=config.seed,
                          config=config.solver)
    pseudo = [r for r in records if not r.genuine]
    genuine = [r for r in records if r.genuine]
    if pseudo:
        return Verdict(VerdictKind.PSEUDO_FOUND, tuple(records),
                       reason=f"{len(pseudo)} pseudo cycle(s) in region",
                       stage="cycles")
    if len(genuine) != 1:
        return Verdict(VerdictKind.INCONCLUSIVE, tuple(records),
                       reason=f"expected one genuine cycle, found {len(genuine)}",
                       stage="cycles")
    cycle = genuine[0]
    anchor = tuple(cycle.points[0].first)
    cyc_vals = [c for pt in cycle.points for c in pt.first]
    pivot = (min(cyc_vals), max(cyc_vals))

    rng = np.random.default_rng(config.seed)
    lo, hi = float(region[0]), float(region[1])
    for i in range(config.samples):
        x0 = tuple(sample_log_uniform(rng, lo, hi, k))
        state = x0
        box = None
        # box attempts back off exponentially (in whole periods) so a
        # system without usable boxes fails fast instead of re-running
        # the ladder search after every period
        attempts = {0}
        t = 1
        while t <= config.burn_in:
            attempts.add(t)
            t *= 2
        try:
            n = 0
            for t in sorted(attempts):
                while n < t * p:
                    state = system.step_scalar(state, n)
                    n += 1
                box = find_periodic_trapping_box(system, state, pivot)
                if box is not None:
                    break
        except EvaluationError as exc:
            return Verdict(VerdictKind.INCONCLUSIVE, tuple(records),
                           reason=f"orbit evaluation failed for sample {i}: {exc}",
                           stage="trapping-box", samples_run=i,
                           diagnostics={"x0": x0})
        if box is None:
            return Verdict(VerdictKind.INCONCLUSIVE, tuple(records),
                           reason=f"no trapping box for sample {i}",
                           stage="trapping-box", samples_run=i,
                           diagnostics={"x0": x0})
        budget = config.squeeze_budget(k)
        try:
            report = _squeeze_core(list(system.maps), box, state,
                                   config.tol, budget)
        except EvaluationError as exc:
            return Verdict(VerdictKind.INCONCLUSIVE, tuple(records),
                           reason=f"squeeze evaluation failed for sample {i}: {exc}",
                           stage="squeeze", samples_run=i,
                           diagnostics={"x0": x0})
        if report.status is not Status.CONVERGED:
            return Verdict(VerdictKind.INCONCLUSIVE, tuple(records),
                           reason=f"squeeze {report.status.value} for sample {i}",
                           stage="squeeze", samples_run=i,
                           diagnostics={"x0": x0, "report": report})
        if max(abs(a - b) for a, b in zip(report.point, anchor)) > config.match_tol:
            return Verdict(VerdictKind.INCONCLUSIVE, tuple(records),
                           reason=f"sample {i} converged away from the cycle",
                           stage="match", samples_run=i,
                           diagnostics={"x0": x0, "point": report.point})
    return Verdict(VerdictKind.CERTIFIED, tuple(records), attractor=anchor,
                   reason=f"all {config.samples} samples converged to the cycle",
                   stage="squeeze", samples_run=config.samples)
