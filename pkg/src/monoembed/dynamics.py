"""Orbit iteration, monotone envelope squeezing and attractor certification.

The squeeze argument: given a trapping box P <= G(P), G(Q) <= Q and a start
X0 with P <= (X0, X0) <= Q in the product order, the envelope iterates
G^n(P) ascend, G^n(Q) descend, and the diagonal orbit stays sandwiched
between them at every step.  When the envelope diameter collapses the orbit
has nowhere to go but the common limit; when the envelopes stall at two
distinct corner limits the orbit is trapped between a transposed pair.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .embedding import Domain, EmbeddedMap, MapSpec, PairedPoint
from .order import leq, leq_pairs
from .program import ERR_NONE, EvaluationError
from .solver import (FixedPair, SolverConfig, TrappingBox, enumerate_fixed_pairs,
                     find_trapping_box, verify_trapping_box)


class Status(enum.Enum):
    CONVERGED = "converged"
    TRAPPED = "trapped"
    BUDGET_EXHAUSTED = "budget-exhausted"
    TWO_CYCLE = "two-cycle"


class InvariantViolation(RuntimeError):
    """An order property that should hold exactly failed at runtime."""

    def __init__(self, what: str, iteration: int, coordinate: int):
        self.what = what
        self.iteration = iteration
        self.coordinate = coordinate
        super().__init__(f"{what} violated at iteration {iteration}, "
                         f"coordinate {coordinate}")


@dataclass(frozen=True)
class ConvergenceReport:
    status: Status
    iterations: int
    final_envelope_diameter: float
    point: tuple[float, ...] | None = None       # CONVERGED: the common limit
    lower: tuple[float, ...] | None = None       # TRAPPED: stalled lower half
    upper: tuple[float, ...] | None = None       # TRAPPED: stalled upper half
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DynamicsConfig:
    tol: float = 1e-10
    orbit_max_iter: int = 10 ** 6
    squeeze_max_iter: int | None = None  # None: 10^6, or 10^5 once k >= 4
    match_tol: float = 1e-8              # agreement across certification runs
    burn_in: int = 512                   # orbit steps allowed before boxing
    samples: int = 100
    seed: int = 0
    solver: SolverConfig = field(default_factory=SolverConfig)

    def squeeze_budget(self, k: int) -> int:
        if self.squeeze_max_iter is not None:
            return self.squeeze_max_iter
        return 10 ** 5 if k >= 4 else 10 ** 6


# ---------------------------------------------------------------------------
# Orbits


def iterate_orbit(spec: MapSpec, x0, steps: int) -> np.ndarray:
    """Iterate the scalar recursion; returns the next ``steps`` values.

    ``x0`` is the seed window, newest value first.  Raises
    :class:`EvaluationError` (with the failing step) on overflow, domain
    errors, or an iterate leaving the declared domain.
    """
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (spec.arity,):
        raise ValueError(f"x0 must have length {spec.arity}")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    if spec.program is not None:
        vals, err, err_op, err_step = kernels.orbit(
            spec.program.ops, spec.program.args, spec.program.consts,
            x0, steps, spec.domain.lo, spec.domain.hi)
        if err != ERR_NONE:
            raise EvaluationError(err, x0, err_op,
                                  spec.program.span_of(err_op), err_step)
        return vals
    window = list(map(float, x0))
    out = np.empty(steps, dtype=np.float64)
    for step in range(steps):
        try:
            v = spec(window)
        except EvaluationError as exc:
            raise EvaluationError(exc.code, exc.point, exc.op_index,
                                  exc.span, step) from None
        if not spec.domain.contains_scalar(v):
            raise EvaluationError(6, window, step=step)
        out[step] = v
        window.insert(0, v)
        window.pop()
    return out


# ---------------------------------------------------------------------------
# Squeeze iteration


def _prepare_programs(specs: list[MapSpec]):
    """Concatenate phase programs for the kernel (shared constant pool)."""
    ops = np.concatenate([s.program.ops for s in specs])
    offsets = np.zeros(len(specs) + 1, dtype=np.int32)
    consts_parts = []
    args_parts = []
    c_off = 0
    for i, s in enumerate(specs):
        offsets[i + 1] = offsets[i] + len(s.program.ops)
        args = s.program.args.copy()
        is_const = s.program.ops == 0  # OP_CONST
        args[is_const] += c_off
        args_parts.append(args)
        consts_parts.append(s.program.consts)
        c_off += len(s.program.consts)
    return ops, np.concatenate(args_parts), np.concatenate(consts_parts), offsets


_SQUEEZE_ERRORS = {
    kernels.SQ_MONOTONE_VIOLATION: "envelope monotonicity",
    kernels.SQ_SANDWICH_VIOLATION: "orbit sandwich",
}


def _squeeze_core(specs: list[MapSpec], box: TrappingBox, x0,
                  tol: float, max_iter: int) -> ConvergenceReport:
    """Run the envelope iteration for a (possibly periodic) map sequence."""
    k = specs[0].arity
    wiring = specs[0].wiring()
    x0 = tuple(float(v) for v in x0)
    if len(x0) != k:
        raise ValueError(f"x0 must have length {k}")
    diag = PairedPoint.diagonal(x0)
    if not (leq_pairs(box.P.concat(), diag.concat(), specs[0].pattern)
            and leq_pairs(diag.concat(), box.Q.concat(), specs[0].pattern)):
        raise ValueError("x0 is not sandwiched between the box corners")

    if all(s.program is not None for s in specs):
        ops, args, consts, offsets = _prepare_programs(specs)
        dom = specs[0].domain
        (status, iters, diam, P, Q, M,
         err, err_op, bad) = kernels.squeeze(
            ops, args, consts, offsets, k,
            wiring.kinds, wiring.indices, wiring.pair_signs,
            np.array(box.P.concat()), np.array(box.Q.concat()),
            np.array(x0), tol, max_iter, dom.lo, dom.hi)
        if status == kernels.SQ_EVAL_ERROR:
            raise EvaluationError(err, None, err_op, step=iters)
        if status in _SQUEEZE_ERRORS:
            raise InvariantViolation(_SQUEEZE_ERRORS[status], iters, bad)
        P = PairedPoint.from_concat(P)
        Q = PairedPoint.from_concat(Q)
        mid = tuple(float(v) for v in M)
        if status == kernels.SQ_CONVERGED:
            return ConvergenceReport(Status.CONVERGED, iters, diam, point=mid)
        if status == kernels.SQ_TRAPPED:
            return ConvergenceReport(Status.TRAPPED, iters, diam,
                                     lower=P.first, upper=P.second,
                                     diagnostics={"orbit_state": mid})
        return ConvergenceReport(Status.BUDGET_EXHAUSTED, iters, diam,
                                 diagnostics={"orbit_state": mid})

    # reference path for callable-backed maps (also exercised in tests)
    exts = [EmbeddedMap(s) for s in specs]
    lam = wiring.pair_signs
    P = list(box.P.concat())
    Q = list(box.Q.concat())
    M = list(x0)
    twok = 2 * k

    def diameter() -> float:
        return max(abs(Q[j] - P[j]) for j in range(twok))

    diam = diameter()
    if diam <= tol:
        return ConvergenceReport(Status.CONVERGED, 0, diam, point=tuple(M))
    for it in range(1, max_iter + 1):
        prevP, prevQ = P[:], Q[:]
        for ext, spec in zip(exts, specs):
            newP = ext(PairedPoint(P[:k], P[k:])).concat()
            newQ = ext(PairedPoint(Q[:k], Q[k:])).concat()
            fm = spec(M)
            M = [fm] + M[:-1]
            P, Q = list(newP), list(newQ)
            for j in range(twok):
                m = M[j % k]
                if lam[j] * (m - P[j]) < 0 or lam[j] * (Q[j] - m) < 0:
                    raise InvariantViolation("orbit sandwich", it, j)
        for j in range(twok):
            if lam[j] * (P[j] - prevP[j]) < 0 or lam[j] * (prevQ[j] - Q[j]) < 0:
                raise InvariantViolation("envelope monotonicity", it, j)
        diam = diameter()
        if diam <= tol:
            return ConvergenceReport(Status.CONVERGED, it, diam, point=tuple(M))
        if P == prevP and Q == prevQ:
            return ConvergenceReport(Status.TRAPPED, it, diam,
                                     lower=tuple(P[:k]), upper=tuple(P[k:]),
                                     diagnostics={"orbit_state": tuple(M)})
    return ConvergenceReport(Status.BUDGET_EXHAUSTED, max_iter, diam,
                             diagnostics={"orbit_state": tuple(M)})


def squeeze_iterate(spec: MapSpec, box: TrappingBox, x0,
                    tol: float = 1e-10,
                    max_iter: int | None = None) -> ConvergenceReport:
    """Squeeze the orbit of ``x0`` between the envelopes of a trapping box."""
    if max_iter is None:
        max_iter = DynamicsConfig().squeeze_budget(spec.arity)
    return _squeeze_core([spec], box, x0, tol, max_iter)


def squeeze_trajectory(spec: MapSpec, box: TrappingBox, x0, steps: int):
    """First ``steps`` envelope states alongside the orbit (for CSV output).

    Returns (orbit_values, envelopes) where envelopes has one 2k row per
    step: the ascending envelope's halves bracket the orbit window.
    """
    k = spec.arity
    ext = EmbeddedMap(spec)
    P = box.P
    M = tuple(float(v) for v in x0)
    vals = np.empty(steps, dtype=np.float64)
    env = np.empty((steps, 2 * k), dtype=np.float64)
    for i in range(steps):
        P = ext(P)
        fm = spec(M)
        M = (fm,) + M[:-1]
        vals[i] = fm
        env[i] = P.concat()
    return vals, env


# ---------------------------------------------------------------------------
# Antitone variant (order-reversing maps, e.g. scalar decreasing recursions)


def squeeze_iterate_antitone(spec: MapSpec, lower, upper, x0=None,
                             tol: float = 1e-10,
                             max_iter: int = 10 ** 6,
                             order=None) -> ConvergenceReport:
    """Corner iteration for a map whose vector step reverses an order.

    ``order`` is the sign pattern of the order being reversed (defaults to
    the standard componentwise order, the right choice for a decreasing
    scalar map).  Tracks the even/odd subsequences of both corner orbits
    (the second iterate of an order-reversing map preserves order, so each
    subsequence is monotone).  All four collapsing to one point certifies
    convergence; per-corner collapse to two distinct points reports a
    trapped band; a persistent even/odd split reports a two-cycle as its
    own status, since the squeeze hypothesis fails there.
    """
    k = spec.arity
    order = (1,) * k if order is None else tuple(order)
    lower = (lower,) * k if np.isscalar(lower) else tuple(map(float, lower))
    upper = (upper,) * k if np.isscalar(upper) else tuple(map(float, upper))
    if x0 is None:
        x0 = tuple(0.5 * (a + b) for a, b in zip(lower, upper))
    x0 = (x0,) * k if np.isscalar(x0) else tuple(map(float, x0))
    if not (leq(lower, x0, order) and leq(x0, upper, order)):
        raise ValueError("x0 is not between the corners in the given order")

    hist_p = [lower, spec.step(lower)]
    hist_q = [upper, spec.step(upper)]
    mid = x0

    def spread() -> float:
        pts = (hist_p[-1], hist_p[-2], hist_q[-1], hist_q[-2])
        return max(max(p[j] for p in pts) - min(p[j] for p in pts)
                   for j in range(k))

    for it in range(2, max_iter + 1):
        hist_p.append(spec.step(hist_p[-1]))
        hist_q.append(spec.step(hist_q[-1]))
        mid = spec.step(mid)
        if len(hist_p) > 3:
            hist_p.pop(0)
            hist_q.pop(0)
        # hist_* now holds iterates it-2 .. it
        d = spread()
        if d <= tol:
            return ConvergenceReport(Status.CONVERGED, it, d, point=mid)
        p_stall = hist_p[-1] == hist_p[-3]
        q_stall = hist_q[-1] == hist_q[-3]
        if p_stall and q_stall:
            p_even, p_odd = hist_p[-1], hist_p[-2]
            q_even, q_odd = hist_q[-1], hist_q[-2]
            split_p = max(abs(a - b) for a, b in zip(p_even, p_odd))
            split_q = max(abs(a - b) for a, b in zip(q_even, q_odd))
            if split_p > tol or split_q > tol:
                return ConvergenceReport(
                    Status.TWO_CYCLE, it, d,
                    diagnostics={"corner_lower_even_odd": (p_even, p_odd),
                                 "corner_upper_even_odd": (q_even, q_odd)})
            gap = max(abs(a - b) for a, b in zip(p_even, q_even))
            if gap <= tol:
                return ConvergenceReport(Status.CONVERGED, it, gap, point=mid)
            return ConvergenceReport(Status.TRAPPED, it, gap,
                                     lower=p_even, upper=q_even,
                                     diagnostics={"orbit_state": mid})
    return ConvergenceReport(Status.BUDGET_EXHAUSTED, max_iter, spread(),
                             diagnostics={"orbit_state": mid})


# ---------------------------------------------------------------------------
# Certification pipeline


class VerdictKind(enum.Enum):
    CERTIFIED = "certified"
    PSEUDO_FOUND = "pseudo-found"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    pairs: tuple[FixedPair, ...] = ()
    attractor: tuple[float, ...] | None = None
    reason: str = ""
    stage: str = ""
    samples_run: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def pseudo_pairs(self) -> tuple[FixedPair, ...]:
        return tuple(p for p in self.pairs if not p.genuine)

    @property
    def exit_code(self) -> int:
        return {VerdictKind.CERTIFIED: 0,
                VerdictKind.PSEUDO_FOUND: 2,
                VerdictKind.INCONCLUSIVE: 3}[self.kind]


def sample_log_uniform(rng: np.random.Generator, lo: float, hi: float,
                       size) -> np.ndarray:
    """Log-uniform draws; a zero lower bound is floored at hi * 1e-4."""
    lo_eff = max(lo, hi * 1e-4)
    return np.exp(rng.uniform(math.log(lo_eff), math.log(hi), size))


def certify_global_attractor(spec: MapSpec,
                             region: tuple[float, float, float, float],
                             config: DynamicsConfig = DynamicsConfig()) -> Verdict:
    """Decide between a certified attractor, pseudo pairs, or no answer.

    Stage 1 enumerates fixed pairs of the extension over the scan region;
    any pseudo pair short-circuits (exit code 2 territory).  Stage 2 draws
    log-uniform initial windows, boxes each one (allowing a bounded orbit
    burn-in first, which cannot change the limit set), and squeezes; success
    means every run converged to the unique genuine pair.
    """
    pairs = tuple(enumerate_fixed_pairs(spec, region, config.solver))
    pseudo = tuple(p for p in pairs if not p.genuine)
    if pseudo:
        return Verdict(VerdictKind.PSEUDO_FOUND, pairs,
                       reason=f"{len(pseudo)} pseudo fixed pair(s) in region",
                       stage="enumerate")
    genuine = tuple(p for p in pairs if p.genuine)
    if len(genuine) != 1:
        return Verdict(VerdictKind.INCONCLUSIVE, pairs,
                       reason=f"expected exactly one genuine pair, found {len(genuine)}",
                       stage="enumerate")
    target = genuine[0]
    target_point = tuple((target.x,) * spec.arity)

    rng = np.random.default_rng(config.seed)
    x_lo, x_hi, y_lo, y_hi = region
    lo, hi = min(x_lo, y_lo), max(x_hi, y_hi)
    tol = config.tol
    budget = config.squeeze_budget(spec.arity)
    for i in range(config.samples):
        x0 = tuple(sample_log_uniform(rng, lo, hi, spec.arity))
        state = x0
        box = find_trapping_box(spec, state)
        steps_used = 0
        next_check = 1  # box searches back off exponentially along the orbit
        while box is None and steps_used < config.burn_in:
            goal = min(next_check, config.burn_in)
            while steps_used < goal:
                try:
                    state = spec.step(state)
                except EvaluationError as exc:
                    return Verdict(VerdictKind.INCONCLUSIVE, pairs,
                                   reason=f"orbit evaluation failed: {exc}",
                                   stage="trapping-box", samples_run=i)
                steps_used += 1
            box = find_trapping_box(spec, state)
            next_check *= 2
        if box is None:
            return Verdict(VerdictKind.INCONCLUSIVE, pairs,
                           reason=f"no trapping box for sample {i} "
                                  f"(after {steps_used} burn-in steps)",
                           stage="trapping-box", samples_run=i,
                           diagnostics={"x0": x0})
        report = _squeeze_core([spec], box, state, tol, budget)
        if report.status is not Status.CONVERGED:
            return Verdict(VerdictKind.INCONCLUSIVE, pairs,
                           reason=f"squeeze {report.status.value} for sample {i}",
                           stage="squeeze", samples_run=i,
                           diagnostics={"x0": x0, "report": report})
        err = max(abs(a - b) for a, b in zip(report.point, target_point))
        if err > config.match_tol:
            return Verdict(VerdictKind.INCONCLUSIVE, pairs,
                           reason=f"sample {i} converged {err:.2e} away from "
                                  "the genuine pair",
                           stage="match", samples_run=i)
    return Verdict(VerdictKind.CERTIFIED, pairs, attractor=target_point,
                   reason="all sampled orbits squeezed onto the genuine pair",
                   stage="done", samples_run=config.samples)
