"""Pure-Python evaluation kernels.

This module mirrors the compiled kernel in ``_native.pyx`` function for
function.  Scalar paths use math.* (the same libm the compiled kernel links
against), so results agree bit for bit on the same machine; the vectorised
grid path uses numpy and may differ from the scalar path by an ulp.

Every function returns error information through plain tuples instead of
raising, so the two backends stay interchangeable; wrappers in the package
turn codes into exceptions.
"""

from __future__ import annotations

import math

import numpy as np

from ..program import (
    ERR_DIV_ZERO,
    ERR_DOMAIN_EXIT,
    ERR_LOG_DOMAIN,
    ERR_NONE,
    ERR_OVERFLOW,
    ERR_POW_DOMAIN,
    ERR_SQRT_DOMAIN,
    OP_ADD,
    OP_CONST,
    OP_DIV,
    OP_EXP,
    OP_LN,
    OP_MUL,
    OP_NEG,
    OP_POW,
    OP_SUB,
    OP_SQRT,
    OP_VAR,
)

BACKEND_NAME = "python"

# squeeze() status codes, shared with the native kernel
SQ_CONVERGED = 0
SQ_TRAPPED = 1
SQ_BUDGET = 2
SQ_EVAL_ERROR = 3
SQ_MONOTONE_VIOLATION = 4
SQ_SANDWICH_VIOLATION = 5

_INT_POW_LIMIT = 9.007199254740992e15  # 2**53


def _eval_core(ops, args, consts, x, stack):
    """Execute one program; returns (value, err, err_op)."""
    sp = 0
    for i in range(len(ops)):
        op = ops[i]
        if op == OP_CONST:
            stack[sp] = float(consts[args[i]])
            sp += 1
        elif op == OP_VAR:
            # float() guards against numpy scalars, whose arithmetic warns
            # instead of raising on overflow
            stack[sp] = float(x[args[i]])
            sp += 1
        elif op == OP_ADD:
            sp -= 1
            v = stack[sp - 1] + stack[sp]
            if not math.isfinite(v):
                return 0.0, ERR_OVERFLOW, i
            stack[sp - 1] = v
        elif op == OP_SUB:
            sp -= 1
            v = stack[sp - 1] - stack[sp]
            if not math.isfinite(v):
                return 0.0, ERR_OVERFLOW, i
            stack[sp - 1] = v
        elif op == OP_MUL:
            sp -= 1
            v = stack[sp - 1] * stack[sp]
            if not math.isfinite(v):
                return 0.0, ERR_OVERFLOW, i
            stack[sp - 1] = v
        elif op == OP_DIV:
            sp -= 1
            b = stack[sp]
            if b == 0.0:
                return 0.0, ERR_DIV_ZERO, i
            v = stack[sp - 1] / b
            if not math.isfinite(v):
                return 0.0, ERR_OVERFLOW, i
            stack[sp - 1] = v
        elif op == OP_POW:
            sp -= 1
            a = stack[sp - 1]
            b = stack[sp]
            # b != b catches NaN exponents before floor() can choke on them
            if a < 0.0 and (b != b or b != math.floor(b) or abs(b) > _INT_POW_LIMIT):
                return 0.0, ERR_POW_DOMAIN, i
            if a == 0.0 and b < 0.0:
                return 0.0, ERR_POW_DOMAIN, i
            try:
                v = math.pow(a, b)
            except OverflowError:
                return 0.0, ERR_OVERFLOW, i
            if not math.isfinite(v):
                return 0.0, ERR_OVERFLOW, i
            stack[sp - 1] = v
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_EXP:
            try:
                v = math.exp(stack[sp - 1])
            except OverflowError:
                return 0.0, ERR_OVERFLOW, i
            if not math.isfinite(v):
                return 0.0, ERR_OVERFLOW, i
            stack[sp - 1] = v
        elif op == OP_LN:
            a = stack[sp - 1]
            if a <= 0.0:
                return 0.0, ERR_LOG_DOMAIN, i
            stack[sp - 1] = math.log(a)
        else:  # OP_SQRT
            a = stack[sp - 1]
            if a < 0.0:
                return 0.0, ERR_SQRT_DOMAIN, i
            stack[sp - 1] = math.sqrt(a)
    return stack[0], ERR_NONE, -1


def eval_one(ops, args, consts, x):
    """Evaluate a program at one point; returns (value, err, err_op)."""
    stack = [0.0] * 16
    if len(ops) > 16:
        stack = [0.0] * len(ops)
    return _eval_core(ops, args, consts, x, stack)


def eval_many(ops, args, consts, X, strict):
    """Evaluate a program on every row of X (n, arity).

    Returns (values, err, err_op, err_row).  In non-strict mode domain
    failures propagate as NaN and err stays 0; in strict mode the first
    failing row is located with the scalar path and reported.
    """
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    stack: list = [None] * max(16, len(ops))
    sp = 0
    with np.errstate(all="ignore"):
        for i in range(len(ops)):
            op = ops[i]
            if op == OP_CONST:
                stack[sp] = consts[args[i]]
                sp += 1
            elif op == OP_VAR:
                stack[sp] = X[:, args[i]]
                sp += 1
            elif op == OP_ADD:
                sp -= 1
                stack[sp - 1] = stack[sp - 1] + stack[sp]
            elif op == OP_SUB:
                sp -= 1
                stack[sp - 1] = stack[sp - 1] - stack[sp]
            elif op == OP_MUL:
                sp -= 1
                stack[sp - 1] = stack[sp - 1] * stack[sp]
            elif op == OP_DIV:
                sp -= 1
                stack[sp - 1] = np.divide(stack[sp - 1], stack[sp])
            elif op == OP_POW:
                sp -= 1
                stack[sp - 1] = np.power(stack[sp - 1], stack[sp])
            elif op == OP_NEG:
                stack[sp - 1] = np.negative(stack[sp - 1])
            elif op == OP_EXP:
                stack[sp - 1] = np.exp(stack[sp - 1])
            elif op == OP_LN:
                stack[sp - 1] = np.log(stack[sp - 1])
            else:  # OP_SQRT
                stack[sp - 1] = np.sqrt(stack[sp - 1])
    out = np.broadcast_to(np.asarray(stack[0], dtype=np.float64), (n,)).copy()
    if strict and not np.isfinite(out).all():
        return eval_many_rescan(ops, args, consts, X, out)
    return out, ERR_NONE, -1, -1


def eval_many_rescan(ops, args, consts, X, out):
    """Re-evaluate non-finite rows with the scalar path (strict cleanup)."""
    for row in np.nonzero(~np.isfinite(out))[0]:
        v, err, err_op = eval_one(ops, args, consts, X[row])
        if err != ERR_NONE:
            return out, err, err_op, int(row)
        out[row] = v
    return out, ERR_NONE, -1, -1


def orbit(ops, args, consts, x0, nsteps, lo, hi):
    """Iterate x_{n+1} = F(x_n, ..., x_{n-k+1}) for nsteps steps.

    Returns (values, err, err_op, err_step) where values[j] is iterate j+1.
    The rolling window starts from x0 (newest first).  Iterates outside
    [lo, hi] stop the orbit with ERR_DOMAIN_EXIT.
    """
    k = len(x0)
    window = list(map(float, x0))
    out = np.empty(nsteps, dtype=np.float64)
    stack = [0.0] * max(16, len(ops))
    for step in range(nsteps):
        v, err, err_op = _eval_core(ops, args, consts, window, stack)
        if err != ERR_NONE:
            return out[:step], err, err_op, step
        if not (lo <= v <= hi):
            return out[:step], ERR_DOMAIN_EXIT, -1, step
        out[step] = v
        window.insert(0, v)
        window.pop()
    return out, ERR_NONE, -1, -1


def _apply_wired(ops, args, consts, poff, phase, wkind, widx, state, out, k, stack):
    """One application of the coupled extension map to a 2k-state."""
    o0, o1 = poff[phase], poff[phase + 1]
    pops = ops[o0:o1]
    pargs = args[o0:o1]
    fx, err, err_op = _eval_core(pops, pargs, consts, state[:k], stack)
    if err != ERR_NONE:
        return err, err_op + o0
    fu, err, err_op = _eval_core(pops, pargs, consts, state[k:], stack)
    if err != ERR_NONE:
        return err, err_op + o0
    for j in range(2 * k):
        kind = wkind[j]
        if kind == 0:
            out[j] = fx
        elif kind == 1:
            out[j] = fu
        elif kind == 2:
            out[j] = state[widx[j]]
        else:
            out[j] = state[k + widx[j]]
    return ERR_NONE, -1


def squeeze(ops, args, consts, poff, k, wkind, widx, lam,
            P0, Q0, M0, tol, max_macro, lo, hi):
    """Monotone envelope iteration between a verified trapping pair.

    P0, Q0 are 2k-states with P0 <= Q0 in the product order encoded by the
    sign vector lam; M0 is the k-state of the tracked orbit.  One macro step
    applies every phase program once (in order) to P, Q and the orbit.

    Returns (status, iters, diam, P, Q, M, err, err_op, bad_coord).
    """
    p = len(poff) - 1
    twok = 2 * k
    P = [float(v) for v in P0]
    Q = [float(v) for v in Q0]
    M = [float(v) for v in M0]
    newP = [0.0] * twok
    newQ = [0.0] * twok
    stack = [0.0] * max(16, len(ops))

    def _pack(status, iters, err=ERR_NONE, err_op=-1, bad=-1):
        diam = max(abs(Q[j] - P[j]) for j in range(twok))
        return (status, iters, diam,
                np.array(P), np.array(Q), np.array(M), err, err_op, bad)

    diam = max(abs(Q[j] - P[j]) for j in range(twok))
    if diam <= tol:
        return _pack(SQ_CONVERGED, 0)

    for it in range(1, max_macro + 1):
        prevP = P[:]
        prevQ = Q[:]
        for phase in range(p):
            err, err_op = _apply_wired(ops, args, consts, poff, phase,
                                       wkind, widx, P, newP, k, stack)
            if err != ERR_NONE:
                return _pack(SQ_EVAL_ERROR, it, err, err_op)
            err, err_op = _apply_wired(ops, args, consts, poff, phase,
                                       wkind, widx, Q, newQ, k, stack)
            if err != ERR_NONE:
                return _pack(SQ_EVAL_ERROR, it, err, err_op)
            o0, o1 = poff[phase], poff[phase + 1]
            fm, err, err_op = _eval_core(ops[o0:o1], args[o0:o1], consts, M, stack)
            if err != ERR_NONE:
                return _pack(SQ_EVAL_ERROR, it, err, err_op + o0)
            M[1:] = M[:-1]
            M[0] = fm
            P, newP = newP, P
            Q, newQ = newQ, Q
            # sandwich: P <=_lam (M, M) <=_lam Q after every phase
            for j in range(twok):
                m = M[j % k]
                if lam[j] * (m - P[j]) < 0.0 or lam[j] * (Q[j] - m) < 0.0:
                    return _pack(SQ_SANDWICH_VIOLATION, it, bad=j)
        # envelope monotonicity per macro step
        for j in range(twok):
            if lam[j] * (P[j] - prevP[j]) < 0.0 or lam[j] * (prevQ[j] - Q[j]) < 0.0:
                return _pack(SQ_MONOTONE_VIOLATION, it, bad=j)
        diam = max(abs(Q[j] - P[j]) for j in range(twok))
        if diam <= tol:
            return _pack(SQ_CONVERGED, it)
        if P == prevP and Q == prevQ:
            return _pack(SQ_TRAPPED, it)
    return _pack(SQ_BUDGET, max_macro)
