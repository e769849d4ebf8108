"""Built-in reference models with closed-form analysis.

Two families are provided:

* a delayed recruitment map with constant stocking,
  ``x[n+1] = x[n] * exp(r - x[n-delay]) + h``, together with its stability
  thresholds in the stocking/growth parameter plane, and
* a rational map whose numerator and denominator are affine in the delayed
  states, ``F(X) = (1 + sum a_i x_i) / (1 + sum b_i x_i)``, together with
  sign classification of its arguments and the closed-form pseudo-pair
  analysis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DynamicsConfig, Verdict, VerdictKind, certify_global_attractor
from .embedding import Domain, MapSpec
from .order import Pattern, make_pattern
from .program import OP_ADD, OP_DIV, OP_EXP, OP_MUL, OP_SUB, Program, ProgramBuilder
from .solver import FixedPair, reduced_residual


# ---------------------------------------------------------------------------
# Stocked delayed recruitment model


@dataclass(frozen=True)
class RickerModel:
    """``x[n+1] = x[n] * exp(r - x[n-delay]) + h`` with r, h > 0.

    ``delay`` counts how far back the feedback term reaches, so the system
    order (and map arity) is ``delay + 1``.  The map is increasing in every
    argument except the delayed one; ``delay = 0`` collapses both roles onto
    one argument and is supported only by the threshold/boundary analysis,
    not by the embedding pipeline.
    """

    r: float
    h: float
    delay: int = 1

    def __post_init__(self):
        if not self.r > 0:
            raise ValueError("growth rate r must be positive")
        if not self.h >= 0:
            raise ValueError("stocking constant h must be nonnegative")
        if self.delay < 0 or self.delay != int(self.delay):
            raise ValueError("delay must be a nonnegative integer")

    @property
    def arity(self) -> int:
        return self.delay + 1

    @property
    def pattern(self) -> Pattern:
        if self.delay == 0:
            raise ValueError("delay-0 model is not one-signed per argument")
        return make_pattern([1] * self.delay + [-1])

    def program(self) -> Program:
        # x1 * exp(r - x_arity) + h
        b = ProgramBuilder(self.arity)
        b.var(0)
        b.const(self.r)
        b.var(self.arity - 1)
        b.op(OP_SUB)
        b.op(OP_EXP)
        b.op(OP_MUL)
        b.const(self.h)
        b.op(OP_ADD)
        return b.finish()

    def func(self, X) -> float:
        return X[0] * math.exp(self.r - X[-1]) + self.h

    def map_spec(self) -> MapSpec:
        return MapSpec(arity=self.arity, pattern=self.pattern,
                       domain=Domain.orthant(), program=self.program(),
                       func=self.func, name="ricker",
                       params=(("r", self.r), ("h", self.h), ("delay", self.delay)))

    def equilibrium(self) -> float:
        return ricker_equilibrium(self.r, self.h)

    def thresholds(self) -> tuple[float, float, float]:
        return ricker_thresholds(self.h)


def ricker_equilibrium(r: float, h: float) -> float:
    """The unique positive root above ``h`` of ``x = x*exp(r - x) + h``.

    Safeguarded Newton iteration inside the bracket [h, 2h + e^r + 1]
    (the upper end makes the residual provably positive), refined to
    about 1e-12 relative accuracy.
    """
    if r <= 0:
        raise ValueError("r must be positive")
    if h < 0:
        raise ValueError("h must be nonnegative")
    if h == 0:
        return float(r)

    def g(x: float) -> float:
        return x - x * math.exp(r - x) - h

    lo, hi = h, 2.0 * h + math.exp(r) + 1.0
    x = 0.5 * (lo + hi)
    for _ in range(200):
        gx = g(x)
        if gx < 0:
            lo = x
        elif gx > 0:
            hi = x
        else:
            return x
        e = math.exp(r - x)
        dg = 1.0 - e * (1.0 - x)
        if dg != 0:
            xn = x - gx / dg
            if not lo < xn < hi:
                xn = 0.5 * (lo + hi)
        else:
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-13 * max(1.0, abs(x)):
            return xn
        x = xn
    return x


def ricker_thresholds(h: float) -> tuple[float, float, float]:
    """Closed-form stability thresholds (r0, r1, r_inf) for stocking h.

    r0 bounds the undelayed model, r1 the one-step delay, and r_inf is the
    pseudo-pair onset valid for every delay; r_inf <= r1 <= r0, and the
    h -> 0 limits are (2, 1, 0).
    """
    if h < 0:
        raise ValueError("h must be nonnegative")
    if h == 0:
        return (2.0, 1.0, 0.0)
    xstar = 1.0 + 0.5 * h + 0.5 * math.sqrt(h * h + 4.0)
    r0 = xstar + math.log1p(-h / xstar)
    r1 = h + 1.0 - math.log1p(h)
    s = math.sqrt(h * (h + 4.0))
    rinf = 0.5 * (h + s) + math.log1p(-2.0 * h / (h + s))
    return (r0, r1, rinf)


def _ricker_spectral_radius(r: float, h: float, delay: int) -> float:
    """Spectral radius of the linearisation around the positive equilibrium.

    The characteristic polynomial is t^(k+1) - (1 - h/x)t^k + (x - h) with
    x the equilibrium and k the delay; delay 0 degenerates to a scalar
    multiplier (the two argument roles merge).
    """
    x = ricker_equilibrium(r, h)
    c = 1.0 - h / x
    d = x - h
    if delay == 0:
        return abs(c - d)
    coeffs = np.zeros(delay + 2, dtype=np.float64)
    coeffs[0] = 1.0
    coeffs[1] = -c
    coeffs[-1] = d
    roots = np.roots(coeffs)
    return float(np.max(np.abs(roots)))


def ricker_local_boundary(h: float, delay: int, scan: int = 256) -> float | None:
    """Smallest r at which the equilibrium loses local stability.

    Scans r for the first spectral-radius crossing of 1, then bisects.
    Returns None when no crossing exists in the scanned range (the scan
    extends past the undelayed threshold, above which every delay is
    unstable).
    """
    if h < 0:
        raise ValueError("h must be nonnegative")
    if delay < 0:
        raise ValueError("delay must be nonnegative")
    r0 = ricker_thresholds(h)[0] if h > 0 else 2.0
    r_hi = r0 + 0.5
    rs = np.linspace(1e-4, r_hi, scan)
    prev_r = None
    for r in rs:
        rho = _ricker_spectral_radius(float(r), h, delay)
        if rho >= 1.0:
            if prev_r is None:
                return None  # already unstable at the smallest scanned r
            lo, hi = prev_r, float(r)
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if _ricker_spectral_radius(mid, h, delay) >= 1.0:
                    hi = mid
                else:
                    lo = mid
            return 0.5 * (lo + hi)
        prev_r = float(r)
    return None


def ricker_delay2_margin(h: float, x: float) -> float:
    """Stability margin of the two-delay linearisation at equilibrium x.

    This is the binding Jury quantity ``x*(1 - (x-h)^2) - (x-h)^2``:
    positive iff the equilibrium is locally stable for delay 2, zero on
    the boundary curve.
    """
    d = x - h
    return x - x * d * d - d * d


def ricker_certify(model: RickerModel,
                   region: tuple[float, float, float, float] | None = None,
                   config: DynamicsConfig = DynamicsConfig()) -> Verdict:
    """Certification gated on the closed-form onset threshold.

    Strictly below the onset the generic sampling pipeline runs and is
    expected to certify the equilibrium for any delay.  At or above the
    onset certification is impossible, so only the fixed-pair enumeration
    is run: pseudo pairs found past the bifurcation give the pseudo
    verdict, and a scan that misses them stays inconclusive.
    """
    from .solver import enumerate_fixed_pairs

    spec = model.map_spec()
    if region is None:
        xbar = model.equilibrium()
        hi = max(10.0, 4.0 * xbar)
        region = (0.0, hi, 0.0, hi)
    rinf = ricker_thresholds(model.h)[2]
    if model.r < rinf:
        return certify_global_attractor(spec, region, config)
    pairs = enumerate_fixed_pairs(spec, region, config.solver)
    if any(not p.genuine for p in pairs):
        return Verdict(VerdictKind.PSEUDO_FOUND, tuple(pairs),
                       reason="pseudo pairs exist past the onset threshold",
                       stage="enumerate")
    return Verdict(VerdictKind.INCONCLUSIVE, tuple(pairs),
                   reason=f"r={model.r} is not below the onset threshold "
                          f"{rinf:.12g}; sampled evidence alone is not "
                          "accepted there",
                   stage="threshold")


def ricker_pseudo_onset(h: float, delay: int = 1,
                        r_lo: float | None = None, r_hi: float | None = None,
                        grid: int = 128, steps: int = 14) -> float:
    """Numerically detected pseudo-pair onset: bisection on r over a
    fine fixed-pair scan.  Used to cross-check the closed form."""
    from .solver import SolverConfig, enumerate_fixed_pairs

    r0, _, rinf = ricker_thresholds(h)
    if r_lo is None:
        r_lo = max(rinf - 0.2, 0.01)
    if r_hi is None:
        r_hi = rinf + 0.2

    def has_pseudo(r: float) -> bool:
        model = RickerModel(r, h, delay)
        xbar = model.equilibrium()
        hi = max(6.0, 3.0 * xbar)
        if r < h:
            # absorbing bound for the second pair component: the pair
            # equations force y = h/(1 - exp(r - x)) with x >= h
            hi = max(hi, 1.25 * h / -math.expm1(r - h))
        pairs = enumerate_fixed_pairs(model.map_spec(), (0.0, hi, 0.0, hi),
                                      SolverConfig(grid=grid))
        return any(not p.genuine for p in pairs)

    lo, hi = r_lo, r_hi
    if has_pseudo(lo) or not has_pseudo(hi):
        raise ValueError("onset is not bracketed by the given range")
    for _ in range(steps):
        mid = 0.5 * (lo + hi)
        if has_pseudo(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# ---------------------------------------------------------------------------
# Rational family


@dataclass(frozen=True)
class RationalModel:
    """``F(X) = (1 + sum a_i x_i) / (1 + sum b_i x_i)`` on the orthant.

    Index 0 is the constant term of both affine forms and is fixed at 1;
    the remaining coefficients are nonnegative with at least one positive
    denominator coefficient.
    """

    a: tuple[float, ...]
    b: tuple[float, ...]

    def __post_init__(self):
        a = tuple(float(v) for v in self.a)
        b = tuple(float(v) for v in self.b)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        if len(a) != len(b) or len(a) < 2:
            raise ValueError("coefficient sequences must share a length >= 2")
        if a[0] != 1.0 or b[0] != 1.0:
            raise ValueError("constant coefficients must equal 1")
        if any(v < 0 for v in a + b):
            raise ValueError("coefficients must be nonnegative")
        if sum(b[1:]) == 0:
            raise ValueError("denominator must depend on the state "
                             "(the purely linear case is unsupported)")

    @property
    def arity(self) -> int:
        return len(self.a) - 1

    @property
    def A(self) -> float:
        return sum(self.a[1:])

    @property
    def B(self) -> float:
        return sum(self.b[1:])

    def func(self, X) -> float:
        num = 1.0 + sum(c * v for c, v in zip(self.a[1:], X))
        den = 1.0 + sum(c * v for c, v in zip(self.b[1:], X))
        return num / den

    def program(self) -> Program:
        b = ProgramBuilder(self.arity)

        def affine(coeffs) -> None:
            b.const(1.0)
            for i, c in enumerate(coeffs[1:]):
                if c == 0.0:
                    continue
                b.const(c)
                b.var(i)
                b.op(OP_MUL)
                b.op(OP_ADD)

        affine(self.a)
        affine(self.b)
        b.op(OP_DIV)
        return b.finish()

    def equilibrium(self) -> float:
        return rational_equilibrium(self)

    def map_spec(self) -> MapSpec:
        cls = rational_classify(self)
        if cls.pattern is None:
            raise ValueError(f"arguments are not one-signed: {cls.witness}")
        return MapSpec(arity=self.arity, pattern=cls.pattern,
                       domain=Domain.orthant(), program=self.program(),
                       func=self.func, name="rational",
                       params=(("a", self.a), ("b", self.b)))


def rational_equilibrium(model: RationalModel) -> float:
    """Unique positive equilibrium (1 + A*y)/(1 + B*y) = y in closed form."""
    A, B = model.A, model.B
    return (A - 1.0 + math.sqrt((A - 1.0) ** 2 + 4.0 * B)) / (2.0 * B)


@dataclass(frozen=True)
class MixedSignWitness:
    """Argument whose cross-product signs disagree (not one-signed)."""

    argument: int           # 1-based argument index
    positive_against: int   # column j with a_i*b_j - b_i*a_j > 0
    negative_against: int   # column j with a_i*b_j - b_i*a_j < 0

    def __str__(self) -> str:
        return (f"argument {self.argument} increases against column "
                f"{self.positive_against} but decreases against column "
                f"{self.negative_against}")


@dataclass(frozen=True)
class SignClassification:
    pattern: Pattern | None
    witness: MixedSignWitness | None
    constant_args: tuple[int, ...]     # 1-based, all-zero cross products
    cross: np.ndarray                  # (k+1, k+1) antisymmetric sign matrix

    @property
    def ok(self) -> bool:
        return self.pattern is not None


def rational_classify(model: RationalModel) -> SignClassification:
    """Per-argument monotonicity from the cross products a_i*b_j - b_i*a_j.

    Argument i is increasing when its cross products against every column
    (including the constant column 0) are >= 0, decreasing when all are
    <= 0, and mixed otherwise.  Ties count as compatible with both signs;
    an all-zero row defaults to increasing and is reported as constant.
    """
    a = np.array(model.a)
    b = np.array(model.b)
    cross = a[:, None] * b[None, :] - b[:, None] * a[None, :]
    signs: list[int] = []
    constant: list[int] = []
    for i in range(1, model.arity + 1):
        row = cross[i]
        pos = int(np.argmax(row > 0)) if (row > 0).any() else -1
        neg = int(np.argmax(row < 0)) if (row < 0).any() else -1
        if pos >= 0 and neg >= 0:
            witness = MixedSignWitness(i, pos, neg)
            return SignClassification(None, witness, (), cross)
        if pos < 0 and neg < 0:
            constant.append(i)
            signs.append(1)
        else:
            signs.append(1 if neg < 0 else -1)
    return SignClassification(make_pattern(signs), None, tuple(constant), cross)


@dataclass(frozen=True)
class RationalAnalysis:
    """Derived quantities and fixed-point case for a rational model."""

    model: RationalModel
    pattern: Pattern
    equilibrium: float
    gamma0: tuple[int, ...]
    gamma1: tuple[int, ...]
    A0: float
    A1: float
    B0: float
    B1: float
    A_hat: float
    B_tilde: float
    delta: float
    beta: float | None
    B_star: float | None
    case: str                    # "monotone", "I.i", "I.ii", "I.iii", "II"
    unique: bool
    pseudo_pair: tuple[float, float] | None
    degenerate: bool = False     # B0 = 0 shortcut applied

    @property
    def k(self) -> int:
        return self.model.arity


def rational_analyze(model: RationalModel) -> RationalAnalysis:
    """Split the arguments by direction and decide the fixed-point case.

    With one direction absent the extension has a unique fixed point
    ("monotone" case).  Otherwise the split sums decide between the three
    unique sub-cases and the pseudo-pair case II, whose pair (t0, t1) is
    returned in closed form.
    """
    cls = rational_classify(model)
    if cls.pattern is None:
        raise ValueError(f"arguments are not one-signed: {cls.witness}")
    ybar = rational_equilibrium(model)
    gamma0 = tuple(i + 1 for i, s in enumerate(cls.pattern) if s == 1)
    gamma1 = tuple(i + 1 for i, s in enumerate(cls.pattern) if s == -1)
    A0 = sum(model.a[i] for i in gamma0)
    B0 = sum(model.b[i] for i in gamma0)
    A1 = sum(model.a[i] for i in gamma1)
    B1 = sum(model.b[i] for i in gamma1)
    A_hat = A0 - A1 - 1.0
    B_tilde = B0 - B1
    delta = A0 * B1 - A1 * B0
    beta = A_hat / (2.0 * B0) if B0 > 0 else None
    B_star = (B0 * (4.0 * B0 + 4.0 * A1 * A_hat + A_hat ** 2) / A_hat ** 2
              if B0 > 0 and A_hat > 0 else None)

    common = dict(model=model, pattern=cls.pattern, equilibrium=ybar,
                  gamma0=gamma0, gamma1=gamma1, A0=A0, A1=A1, B0=B0, B1=B1,
                  A_hat=A_hat, B_tilde=B_tilde, delta=delta,
                  beta=beta, B_star=B_star)

    if not gamma0 or not gamma1:
        return RationalAnalysis(case="monotone", unique=True,
                                pseudo_pair=None, **common)
    if B1 <= B0:
        return RationalAnalysis(case="I.i", unique=True,
                                pseudo_pair=None, **common)
    if A_hat <= 0:
        return RationalAnalysis(case="I.ii", unique=True,
                                pseudo_pair=None, **common)
    if B0 == 0:
        # The off-diagonal system degenerates to a linear equation with a
        # single root, so no pseudo pair can form; the threshold formula
        # itself is undefined here.
        return RationalAnalysis(case="I.iii", unique=True,
                                pseudo_pair=None, degenerate=True, **common)
    if B1 <= B_star:
        return RationalAnalysis(case="I.iii", unique=True,
                                pseudo_pair=None, **common)
    rad = (B_tilde * beta * beta + 2.0 * beta * A1 + 1.0) / B_tilde
    root = math.sqrt(rad)
    t0, t1 = beta - root, beta + root
    return RationalAnalysis(case="II", unique=False,
                            pseudo_pair=(t0, t1), **common)


@dataclass(frozen=True)
class FactsReport:
    """Pass/fail record of the split-sum inequalities."""

    checked: bool
    items: tuple[tuple[str, bool], ...] = ()
    skipped_reason: str = ""

    @property
    def all_pass(self) -> bool:
        return self.checked and all(ok for _, ok in self.items)


def rational_simple_facts(analysis: RationalAnalysis) -> FactsReport:
    """Check the four split-sum inequalities that the analysis relies on."""
    if not analysis.gamma0 or not analysis.gamma1:
        return FactsReport(False, skipped_reason="one direction is absent")
    if analysis.B0 * analysis.B1 == 0:
        return FactsReport(False, skipped_reason="a split denominator sum is zero")
    A, B = analysis.model.A, analysis.model.B
    items = (
        ("A0/B0 >= A/B >= A1/B1",
         analysis.A0 / analysis.B0 >= A / B >= analysis.A1 / analysis.B1),
        ("delta >= 0", analysis.delta >= 0),
        ("A0 >= B0 and A1 <= B1",
         analysis.A0 >= analysis.B0 and analysis.A1 <= analysis.B1),
        ("equilibrium > A1/B1",
         analysis.equilibrium > analysis.A1 / analysis.B1),
    )
    return FactsReport(True, items)


def rational_q2(analysis: RationalAnalysis, t: float) -> float:
    """The hyperbola branch bounding the trapping-parameter region."""
    if analysis.B1 == 0:
        raise ZeroDivisionError("no decreasing denominator mass")
    pole = analysis.A1 / analysis.B1
    if t == pole:
        raise ZeroDivisionError(f"t = {pole} is the pole of the branch")
    num = analysis.B0 * t * t + (1.0 - analysis.A0) * t - 1.0
    return num / (analysis.A1 - analysis.B1 * t)


def rational_fixed_pairs(model: RationalModel) -> tuple[FixedPair, ...]:
    """Closed-form fixed pairs (genuine plus case-II pseudo couple)."""
    analysis = rational_analyze(model)
    spec = model.map_spec()

    def mk(x: float, y: float) -> FixedPair:
        r1, r2 = reduced_residual(spec, x, y)
        return FixedPair(x, y, genuine=(x == y),
                         residual_norm=max(abs(r1), abs(r2)))

    ybar = analysis.equilibrium
    pairs = [mk(ybar, ybar)]
    if analysis.pseudo_pair is not None:
        t0, t1 = analysis.pseudo_pair
        pairs += [mk(t0, t1), mk(t1, t0)]
    return tuple(sorted(pairs, key=lambda p: (p.x, p.y)))


def rational_certify(model: RationalModel,
                     region: tuple[float, float, float, float] | None = None,
                     config: DynamicsConfig = DynamicsConfig()) -> Verdict:
    """Certification specialised with the closed-form case analysis.

    Case II returns the closed-form pseudo couple immediately; the unique
    cases run the generic sampling pipeline.
    """
    analysis = rational_analyze(model)
    if analysis.case == "II":
        return Verdict(VerdictKind.PSEUDO_FOUND,
                       rational_fixed_pairs(model),
                       reason="closed-form analysis yields a pseudo pair",
                       stage="analysis")
    spec = model.map_spec()
    if region is None:
        hi = 2.0 * max(3.0 * analysis.equilibrium,
                       2.0 * (analysis.beta or 0.0), 1.0)
        region = (0.0, hi, 0.0, hi)
    return certify_global_attractor(spec, region, config)
