"""Monotone embedding of a mixed-monotonicity delay map.

A scalar recursion x_{n+1} = F(x_n, ..., x_{n-k+1}) with a one-signed
(coordinatewise monotone) right-hand side induces the vector map

    T(X) = (F(X), x_1, ..., x_{k-1})        on V^k.

T itself is rarely order preserving, but the coupled extension G on pairs
(X, U) in V^k x V^k is: each argument slot of F is fed from X when F is
increasing there and from U when decreasing, and the shift slots copy from
whichever half keeps signs aligned.  G preserves the product order from
:func:`monoembed.order.pair_pattern` and restricts to (T, T) on the diagonal,
so order-based trapping arguments on G yield convergence statements for T.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .order import Pattern, make_pattern, pair_pattern
from .program import ERR_NONE, EvaluationError, Program

# Wiring source kinds: where each output coordinate of G comes from.
SRC_F_FIRST = 0    # F applied to the first half
SRC_F_SECOND = 1   # F applied to the second half
SRC_COPY_FIRST = 2     # copy a coordinate of the first half
SRC_COPY_SECOND = 3    # copy a coordinate of the second half


@dataclass(frozen=True)
class Domain:
    """Per-coordinate scalar interval, shared by all k coordinates."""

    lo: float = 0.0
    hi: float = math.inf

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError("domain requires lo < hi")

    @classmethod
    def orthant(cls) -> "Domain":
        return cls(0.0, math.inf)

    @classmethod
    def box(cls, lo: float, hi: float) -> "Domain":
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError("box bounds must be finite")
        return cls(float(lo), float(hi))

    @property
    def is_box(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def contains_scalar(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    def contains(self, point: Sequence[float]) -> bool:
        return all(self.lo <= v <= self.hi for v in point)


@dataclass(frozen=True)
class PairedPoint:
    """A point of the doubled space V^k x V^k."""

    first: tuple[float, ...]
    second: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "first", tuple(float(v) for v in self.first))
        object.__setattr__(self, "second", tuple(float(v) for v in self.second))
        if len(self.first) != len(self.second):
            raise ValueError("paired halves must have equal length")

    @property
    def k(self) -> int:
        return len(self.first)

    def concat(self) -> tuple[float, ...]:
        return self.first + self.second

    def swapped(self) -> "PairedPoint":
        return PairedPoint(self.second, self.first)

    @classmethod
    def diagonal(cls, x: Sequence[float]) -> "PairedPoint":
        t = tuple(float(v) for v in x)
        return cls(t, t)

    @classmethod
    def from_concat(cls, xi: Sequence[float]) -> "PairedPoint":
        xi = tuple(float(v) for v in xi)
        if len(xi) % 2:
            raise ValueError("concatenated state must have even length")
        k = len(xi) // 2
        return cls(xi[:k], xi[k:])


def _call_func(func, point: tuple) -> float:
    """Call a user-supplied evaluator, normalising failures to EvaluationError."""
    try:
        return float(func(point))
    except OverflowError:
        raise EvaluationError(5, point) from None
    except ZeroDivisionError:
        raise EvaluationError(1, point) from None
    except EvaluationError:
        raise
    except ValueError:
        raise EvaluationError(2, point) from None


@dataclass(frozen=True)
class MapSpec:
    """A scalar map F: V^k -> V with a declared monotonicity pattern.

    Evaluation goes through ``program`` (engine-executed) when present,
    otherwise through the plain callable ``func``.  Builtin model families
    provide both so tests can cross-check the two routes.
    """

    arity: int
    pattern: Pattern
    domain: Domain = field(default_factory=Domain.orthant)
    program: Program | None = None
    func: Callable | None = None
    name: str = "map"
    params: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "pattern", make_pattern(self.pattern))
        if len(self.pattern) != self.arity:
            raise ValueError("pattern length must equal arity")
        if self.program is None and self.func is None:
            raise ValueError("need a program or a callable")
        if self.program is not None and self.program.arity != self.arity:
            raise ValueError("program arity mismatch")

    # -- scalar evaluation ------------------------------------------------

    def __call__(self, point: Sequence[float]) -> float:
        if len(point) != self.arity:
            raise ValueError(f"expected {self.arity} arguments, got {len(point)}")
        if self.program is not None:
            v, err, err_op = kernels.eval_one(
                self.program.ops, self.program.args, self.program.consts, point)
            if err != ERR_NONE:
                raise EvaluationError(err, point, err_op, self.program.span_of(err_op))
            return float(v)
        v = _call_func(self.func, tuple(point))
        if not math.isfinite(v):
            raise EvaluationError(5, point)
        return v

    def eval_many(self, X: np.ndarray, strict: bool = True) -> np.ndarray:
        """Vectorised evaluation on rows of X; NaN rows allowed when not strict."""
        X = np.ascontiguousarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.arity:
            raise ValueError("X must be (n, arity)")
        if self.program is not None:
            vals, err, err_op, row = kernels.eval_many(
                self.program.ops, self.program.args, self.program.consts,
                X, 1 if strict else 0)
            if err != ERR_NONE:
                raise EvaluationError(err, X[row], err_op,
                                      self.program.span_of(err_op))
            return vals
        out = np.empty(len(X), dtype=np.float64)
        for i, row in enumerate(X):
            try:
                out[i] = _call_func(self.func, tuple(row))
            except EvaluationError:
                if strict:
                    raise
                out[i] = np.nan
        if strict and not np.isfinite(out).all():
            bad = int(np.argmax(~np.isfinite(out)))
            raise EvaluationError(5, X[bad])
        return out

    # -- induced maps ------------------------------------------------------

    def step(self, X: Sequence[float]) -> tuple[float, ...]:
        """The vector map T: newest value first, then the shifted window."""
        x = tuple(float(v) for v in X)
        return (self(x),) + x[:-1]

    def wiring(self) -> "Wiring":
        return build_wiring(self.pattern)

    def extension(self) -> "EmbeddedMap":
        return EmbeddedMap(self)


@dataclass(frozen=True)
class Wiring:
    """Source table for the coupled extension map on 2k coordinates."""

    pattern: Pattern
    kinds: np.ndarray   # int32, length 2k, SRC_* codes
    indices: np.ndarray  # int32, copy source position within a half
    pair_signs: np.ndarray  # int32, the product-order sign vector

    @property
    def k(self) -> int:
        return len(self.pattern)


def build_wiring(pattern: Sequence[int]) -> Wiring:
    """Construct the extension wiring for one monotonicity pattern.

    Output slot 1 holds F of the first half when the first argument is
    increasing, else F of the second half; slot k+1 holds the other F.
    Shift slot i+1 copies coordinate i from its own half when consecutive
    signs agree and from the opposite half when they differ.
    """
    tau = make_pattern(pattern)
    k = len(tau)
    kinds = np.zeros(2 * k, dtype=np.int32)
    indices = np.zeros(2 * k, dtype=np.int32)
    if tau[0] == 1:
        kinds[0], kinds[k] = SRC_F_FIRST, SRC_F_SECOND
    else:
        kinds[0], kinds[k] = SRC_F_SECOND, SRC_F_FIRST
    for i in range(1, k):
        same = tau[i - 1] * tau[i] == 1
        kinds[i] = SRC_COPY_FIRST if same else SRC_COPY_SECOND
        kinds[k + i] = SRC_COPY_SECOND if same else SRC_COPY_FIRST
        indices[i] = i - 1
        indices[k + i] = i - 1
    signs = np.array(pair_pattern(tau), dtype=np.int32)
    return Wiring(tau, kinds, indices, signs)


class EmbeddedMap:
    """The coupled extension G of a one-signed map, acting on paired states."""

    def __init__(self, spec: MapSpec):
        self.spec = spec
        self.wiring = build_wiring(spec.pattern)

    @property
    def k(self) -> int:
        return self.spec.arity

    def __call__(self, point: PairedPoint) -> PairedPoint:
        if point.k != self.k:
            raise ValueError("paired point has wrong dimension")
        state = point.concat()
        fx = self.spec(point.first)
        fu = self.spec(point.second)
        k = self.k
        out = [0.0] * (2 * k)
        for j in range(2 * k):
            kind = int(self.wiring.kinds[j])
            if kind == SRC_F_FIRST:
                out[j] = fx
            elif kind == SRC_F_SECOND:
                out[j] = fu
            elif kind == SRC_COPY_FIRST:
                out[j] = state[int(self.wiring.indices[j])]
            else:
                out[j] = state[k + int(self.wiring.indices[j])]
        return PairedPoint(out[:k], out[k:])


def corner_point(x: float, y: float, pattern: Sequence[int]) -> tuple[float, ...]:
    """The two-level corner: x in increasing slots, y in decreasing slots."""
    return tuple(float(x) if s == 1 else float(y) for s in make_pattern(pattern))


def corner_point_swapped(x: float, y: float, pattern: Sequence[int]) -> tuple[float, ...]:
    """The transposed corner: roles of x and y exchanged."""
    return corner_point(y, x, pattern)


def corner_pair(x: float, y: float, pattern: Sequence[int]) -> PairedPoint:
    return PairedPoint(corner_point(x, y, pattern),
                       corner_point_swapped(x, y, pattern))


@dataclass(frozen=True)
class PatternViolation:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    f_lower: float
    f_upper: float


@dataclass(frozen=True)
class PatternReport:
    checked: int
    violations: tuple[PatternViolation, ...]
    skipped: int  # draws discarded because evaluation failed

    @property
    def ok(self) -> bool:
        return not self.violations


def verify_pattern(spec: MapSpec, region: tuple[float, float],
                   samples: int = 1000, seed: int = 0,
                   max_violations: int = 10) -> PatternReport:
    """Sample ordered argument pairs and test that F respects its pattern.

    Pairs are built as a base point plus a nonnegative perturbation aligned
    with the pattern, so base <= bumped in the pattern order; F must then
    satisfy F(base) <= F(bumped).  Comparisons are exact (no tolerance).
    """
    lo, hi = float(region[0]), float(region[1])
    if not lo < hi:
        raise ValueError("region must satisfy lo < hi")
    rng = np.random.default_rng(seed)
    k = spec.arity
    tau = np.array(spec.pattern, dtype=np.float64)

    base = lo + (hi - lo) * rng.random((samples, k))
    room = np.where(tau > 0, hi - base, base - lo)
    bumped = base + tau * (room * rng.random((samples, k)))

    f_base = spec.eval_many(base, strict=False)
    f_bumped = spec.eval_many(bumped, strict=False)
    valid = np.isfinite(f_base) & np.isfinite(f_bumped)
    bad = valid & (f_bumped < f_base)
    violations = []
    for idx in np.nonzero(bad)[0][:max_violations]:
        violations.append(PatternViolation(
            tuple(base[idx]), tuple(bumped[idx]),
            float(f_base[idx]), float(f_bumped[idx])))
    return PatternReport(int(valid.sum()), tuple(violations),
                         int((~valid).sum()))
