# cython: boundscheck=False, wraparound=False, initializedcheck=False, cdivision=True
"""Compiled evaluation kernels.

Twin of ``_fallback.py``, function for function: same signatures, same
return tuples, same error and status codes.  Scalar arithmetic calls the
same libm functions the fallback reaches through ``math.*``, so scalar
results agree bit for bit on the same machine.  The grid path evaluates
rows with the scalar core instead of numpy ufuncs, so against the
fallback's vectorised path it may differ by an ulp, and rows that fail
always read NaN (the fallback can leave an inf behind on overflow).
"""

import numpy as np

from libc.math cimport exp, log, sqrt, pow, floor, fabs, isfinite
from libc.string cimport memcpy

from ..program import (
    ERR_DIV_ZERO,
    ERR_DOMAIN_EXIT,
    ERR_LOG_DOMAIN,
    ERR_NONE,
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
    OP_SUB,
    OP_SQRT,
    OP_VAR,
)

BACKEND_NAME = "native"

# squeeze() status codes, shared with the fallback kernel
SQ_CONVERGED = 0
SQ_TRAPPED = 1
SQ_BUDGET = 2
SQ_EVAL_ERROR = 3
SQ_MONOTONE_VIOLATION = 4
SQ_SANDWICH_VIOLATION = 5

# C copies of the shared opcode/error constants, initialised from the single
# source of truth in ``program`` so the two can never drift apart.
cdef int C_OP_CONST = OP_CONST
cdef int C_OP_VAR = OP_VAR
cdef int C_OP_ADD = OP_ADD
cdef int C_OP_SUB = OP_SUB
cdef int C_OP_MUL = OP_MUL
cdef int C_OP_DIV = OP_DIV
cdef int C_OP_POW = OP_POW
cdef int C_OP_NEG = OP_NEG
cdef int C_OP_EXP = OP_EXP
cdef int C_OP_LN = OP_LN

cdef int C_ERR_NONE = ERR_NONE
cdef int C_ERR_DIV_ZERO = ERR_DIV_ZERO
cdef int C_ERR_LOG_DOMAIN = ERR_LOG_DOMAIN
cdef int C_ERR_SQRT_DOMAIN = ERR_SQRT_DOMAIN
cdef int C_ERR_POW_DOMAIN = ERR_POW_DOMAIN
cdef int C_ERR_OVERFLOW = ERR_OVERFLOW
cdef int C_ERR_DOMAIN_EXIT = ERR_DOMAIN_EXIT

cdef int C_SQ_CONVERGED = 0
cdef int C_SQ_TRAPPED = 1
cdef int C_SQ_BUDGET = 2
cdef int C_SQ_EVAL_ERROR = 3
cdef int C_SQ_MONOTONE_VIOLATION = 4
cdef int C_SQ_SANDWICH_VIOLATION = 5

cdef double _INT_POW_LIMIT = 9.007199254740992e15  # 2**53


cdef int _eval_core(const int* ops, const int* args, Py_ssize_t n_ops,
                    const double* consts, const double* x,
                    double* stack, double* out, int* err_op) noexcept nogil:
    """Execute one program; writes the value to *out, returns the error code."""
    cdef Py_ssize_t i
    cdef int op, sp = 0
    cdef double a, b, v
    for i in range(n_ops):
        op = ops[i]
        if op == C_OP_CONST:
            stack[sp] = consts[args[i]]
            sp += 1
        elif op == C_OP_VAR:
            stack[sp] = x[args[i]]
            sp += 1
        elif op == C_OP_ADD:
            sp -= 1
            v = stack[sp - 1] + stack[sp]
            if not isfinite(v):
                out[0] = 0.0; err_op[0] = <int>i; return C_ERR_OVERFLOW
            stack[sp - 1] = v
        elif op == C_OP_SUB:
            sp -= 1
            v = stack[sp - 1] - stack[sp]
            if not isfinite(v):
                out[0] = 0.0; err_op[0] = <int>i; return C_ERR_OVERFLOW
            stack[sp - 1] = v
        elif op == C_OP_MUL:
            sp -= 1
            v = stack[sp - 1] * stack[sp]
            if not isfinite(v):
                out[0] = 0.0; err_op[0] = <int>i; return C_ERR_OVERFLOW
            stack[sp - 1] = v
        elif op == C_OP_DIV:
            sp -= 1
            b = stack[sp]
            if b == 0.0:
                out[0] = 0.0; err_op[0] = <int>i; return C_ERR_DIV_ZERO
            v = stack[sp - 1] / b
            if not isfinite(v):
                out[0] = 0.0; err_op[0] = <int>i; return C_ERR_OVERFLOW
            stack[sp - 1] = v
        elif op == C_OP_POW:
            sp -= 1
            a = stack[sp - 1]
            b = stack[sp]
            # b != b catches NaN exponents before floor() sees them
            if a < 0.0 and (b != b or b != floor(b) or fabs(b) > _INT_POW_LIMIT):
                out[0] = 0.0; err_op[0] = <int>i; return C_ERR_POW_DOMAIN
            if a == 0.0 and b < 0.0:
                out[0] = 0.0; err_op[0] = <int>i; return C_ERR_POW_DOMAIN
            v = pow(a, b)
            if not isfinite(v):
                out[0] = 0.0; err_op[0] = <int>i; return C_ERR_OVERFLOW
            stack[sp - 1] = v
        elif op == C_OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == C_OP_EXP:
            v = exp(stack[sp - 1])
            if not isfinite(v):
                out[0] = 0.0; err_op[0] = <int>i; return C_ERR_OVERFLOW
            stack[sp - 1] = v
        elif op == C_OP_LN:
            a = stack[sp - 1]
            if a <= 0.0:
                out[0] = 0.0; err_op[0] = <int>i; return C_ERR_LOG_DOMAIN
            stack[sp - 1] = log(a)
        else:  # OP_SQRT
            a = stack[sp - 1]
            if a < 0.0:
                out[0] = 0.0; err_op[0] = <int>i; return C_ERR_SQRT_DOMAIN
            stack[sp - 1] = sqrt(a)
    out[0] = stack[0]
    err_op[0] = -1
    return C_ERR_NONE


cdef inline const double* _dptr(const double[::1] v) noexcept nogil:
    return &v[0] if v.shape[0] > 0 else NULL


def eval_one(ops, args, consts, x):
    """Evaluate a program at one point; returns (value, err, err_op)."""
    cdef const int[::1] ops_v
    cdef const int[::1] args_v
    cdef const double[::1] consts_v
    cdef const double[::1] x_v
    try:
        # program arrays are already typed and contiguous in the common case
        ops_v = ops
        args_v = args
        consts_v = consts
    except (TypeError, ValueError):
        ops_v = np.ascontiguousarray(ops, dtype=np.int32)
        args_v = np.ascontiguousarray(args, dtype=np.int32)
        consts_v = np.ascontiguousarray(consts, dtype=np.float64)
    cdef double xbuf[128]
    cdef const double* xptr
    cdef Py_ssize_t i, nx
    if type(x) is tuple and len(<tuple> x) <= 128:
        nx = len(<tuple> x)
        for i in range(nx):
            xbuf[i] = <double> (<tuple> x)[i]
        xptr = xbuf
    else:
        x_v = np.ascontiguousarray(x, dtype=np.float64)
        xptr = _dptr(x_v)
    cdef double stack[128]
    cdef double v = 0.0
    cdef int err_op = -1
    cdef int err = _eval_core(&ops_v[0], &args_v[0], ops_v.shape[0],
                              _dptr(consts_v), xptr, stack, &v, &err_op)
    return v, err, err_op


def eval_many(ops, args, consts, X, strict):
    """Evaluate a program on every row of X (n, arity).

    Returns (values, err, err_op, err_row).  In non-strict mode failing rows
    read NaN and err stays 0; in strict mode the first failing row is
    reported.
    """
    cdef const int[::1] ops_v = np.ascontiguousarray(ops, dtype=np.int32)
    cdef const int[::1] args_v = np.ascontiguousarray(args, dtype=np.int32)
    cdef const double[::1] consts_v = np.ascontiguousarray(consts, dtype=np.float64)
    X_arr = np.ascontiguousarray(X, dtype=np.float64)
    cdef const double[:, ::1] Xv = X_arr
    cdef Py_ssize_t n = Xv.shape[0], arity = Xv.shape[1]
    out_arr = np.full(n, np.nan, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef const double* xrow = NULL
    cdef const double* cptr = _dptr(consts_v)
    cdef double stack[128]
    cdef double v = 0.0
    cdef int err = C_ERR_NONE, err_op = -1, is_strict = 1 if strict else 0
    cdef Py_ssize_t row = 0, bad_row = -1
    with nogil:
        if n > 0 and arity > 0:
            xrow = &Xv[0, 0]
        for row in range(n):
            err = _eval_core(&ops_v[0], &args_v[0], ops_v.shape[0],
                             cptr, xrow + row * arity, stack, &v, &err_op)
            if err == C_ERR_NONE:
                out[row] = v
            elif is_strict:
                bad_row = row
                break
    if bad_row >= 0:
        return out_arr, err, err_op, int(bad_row)
    return out_arr, C_ERR_NONE, -1, -1


def orbit(ops, args, consts, x0, nsteps, lo, hi):
    """Iterate x_{n+1} = F(x_n, ..., x_{n-k+1}) for nsteps steps.

    Returns (values, err, err_op, err_step) where values[j] is iterate j+1.
    The rolling window starts from x0 (newest first).  Iterates outside
    [lo, hi] stop the orbit with ERR_DOMAIN_EXIT.
    """
    cdef const int[::1] ops_v = np.ascontiguousarray(ops, dtype=np.int32)
    cdef const int[::1] args_v = np.ascontiguousarray(args, dtype=np.int32)
    cdef const double[::1] consts_v = np.ascontiguousarray(consts, dtype=np.float64)
    win_arr = np.array(x0, dtype=np.float64)
    cdef double[::1] win = win_arr
    cdef Py_ssize_t k = win.shape[0]
    cdef Py_ssize_t steps = nsteps
    out_arr = np.empty(steps, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef const double* cptr = _dptr(consts_v)
    cdef double stack[128]
    cdef double v = 0.0, c_lo = lo, c_hi = hi
    cdef int err = C_ERR_NONE, err_op = -1
    cdef Py_ssize_t step = 0, j, stop_step = -1
    cdef bint domain_exit = False
    with nogil:
        for step in range(steps):
            err = _eval_core(&ops_v[0], &args_v[0], ops_v.shape[0],
                             cptr, &win[0], stack, &v, &err_op)
            if err != C_ERR_NONE:
                stop_step = step
                break
            if not (c_lo <= v <= c_hi):
                domain_exit = True
                stop_step = step
                break
            out[step] = v
            for j in range(k - 1, 0, -1):
                win[j] = win[j - 1]
            win[0] = v
    if domain_exit:
        return out_arr[:stop_step], C_ERR_DOMAIN_EXIT, -1, int(stop_step)
    if stop_step >= 0:
        return out_arr[:stop_step], err, err_op, int(stop_step)
    return out_arr, C_ERR_NONE, -1, -1


cdef int _apply_wired(const int* ops, const int* args, const double* consts,
                      const int* poff, Py_ssize_t phase,
                      const int* wkind, const int* widx,
                      const double* state, double* out, Py_ssize_t k,
                      double* stack, int* err_op) noexcept nogil:
    """One application of the coupled extension map to a 2k-state."""
    cdef int o0 = poff[phase], o1 = poff[phase + 1]
    cdef double fx = 0.0, fu = 0.0
    cdef int err, eop = -1, kind
    cdef Py_ssize_t j
    err = _eval_core(ops + o0, args + o0, o1 - o0, consts, state, stack, &fx, &eop)
    if err != C_ERR_NONE:
        err_op[0] = eop + o0
        return err
    err = _eval_core(ops + o0, args + o0, o1 - o0, consts, state + k, stack, &fu, &eop)
    if err != C_ERR_NONE:
        err_op[0] = eop + o0
        return err
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
    return C_ERR_NONE


def squeeze(ops, args, consts, poff, k, wkind, widx, lam,
            P0, Q0, M0, tol, max_macro, lo, hi):
    """Monotone envelope iteration between a verified trapping pair.

    P0, Q0 are 2k-states with P0 <= Q0 in the product order encoded by the
    sign vector lam; M0 is the k-state of the tracked orbit.  One macro step
    applies every phase program once (in order) to P, Q and the orbit.

    Returns (status, iters, diam, P, Q, M, err, err_op, bad_coord).
    """
    cdef const int[::1] ops_v = np.ascontiguousarray(ops, dtype=np.int32)
    cdef const int[::1] args_v = np.ascontiguousarray(args, dtype=np.int32)
    cdef const double[::1] consts_v = np.ascontiguousarray(consts, dtype=np.float64)
    cdef const int[::1] poff_v = np.ascontiguousarray(poff, dtype=np.int32)
    cdef const int[::1] wkind_v = np.ascontiguousarray(wkind, dtype=np.int32)
    cdef const int[::1] widx_v = np.ascontiguousarray(widx, dtype=np.int32)
    cdef const int[::1] lam_v = np.ascontiguousarray(lam, dtype=np.int32)

    cdef Py_ssize_t ck = k
    cdef Py_ssize_t twok = 2 * ck
    cdef Py_ssize_t p = poff_v.shape[0] - 1

    # working buffers; the P/Q roles swap after each phase like the fallback's
    # list swap, so the final copy below reads from the current role pointers
    bufP = np.array(P0, dtype=np.float64)
    bufQ = np.array(Q0, dtype=np.float64)
    bufM = np.array(M0, dtype=np.float64)
    buf_newP = np.zeros(twok, dtype=np.float64)
    buf_newQ = np.zeros(twok, dtype=np.float64)
    buf_prevP = np.empty(twok, dtype=np.float64)
    buf_prevQ = np.empty(twok, dtype=np.float64)
    cdef double[::1] P_mv = bufP, Q_mv = bufQ, M_mv = bufM
    cdef double[::1] nP_mv = buf_newP, nQ_mv = buf_newQ
    cdef double[::1] pP_mv = buf_prevP, pQ_mv = buf_prevQ
    cdef double* P = &P_mv[0]
    cdef double* Q = &Q_mv[0]
    cdef double* M = &M_mv[0] if ck > 0 else NULL
    cdef double* newP = &nP_mv[0]
    cdef double* newQ = &nQ_mv[0]
    cdef double* prevP = &pP_mv[0]
    cdef double* prevQ = &pQ_mv[0]
    cdef double* tmp

    cdef const double* cptr = _dptr(consts_v)
    cdef double stack[128]
    cdef double c_tol = tol
    cdef long c_max = max_macro
    cdef double fm = 0.0, m, diam, d
    cdef long it = 0, iters = 0
    cdef Py_ssize_t phase, j
    cdef int o0, o1
    cdef int status = -1, err = C_ERR_NONE, err_op = -1, bad = -1
    cdef bint stop = False, same

    with nogil:
        diam = 0.0
        for j in range(twok):
            d = fabs(Q[j] - P[j])
            if d > diam:
                diam = d
        if diam <= c_tol:
            status = C_SQ_CONVERGED
            iters = 0
        else:
            for it in range(1, c_max + 1):
                memcpy(prevP, P, twok * sizeof(double))
                memcpy(prevQ, Q, twok * sizeof(double))
                for phase in range(p):
                    err = _apply_wired(&ops_v[0], &args_v[0], cptr, &poff_v[0],
                                       phase, &wkind_v[0], &widx_v[0],
                                       P, newP, ck, stack, &err_op)
                    if err != C_ERR_NONE:
                        status = C_SQ_EVAL_ERROR; iters = it; stop = True; break
                    err = _apply_wired(&ops_v[0], &args_v[0], cptr, &poff_v[0],
                                       phase, &wkind_v[0], &widx_v[0],
                                       Q, newQ, ck, stack, &err_op)
                    if err != C_ERR_NONE:
                        status = C_SQ_EVAL_ERROR; iters = it; stop = True; break
                    o0 = poff_v[phase]
                    o1 = poff_v[phase + 1]
                    err = _eval_core(&ops_v[0] + o0, &args_v[0] + o0, o1 - o0,
                                     cptr, M, stack, &fm, &err_op)
                    if err != C_ERR_NONE:
                        err_op += o0
                        status = C_SQ_EVAL_ERROR; iters = it; stop = True; break
                    for j in range(ck - 1, 0, -1):
                        M[j] = M[j - 1]
                    M[0] = fm
                    tmp = P; P = newP; newP = tmp
                    tmp = Q; Q = newQ; newQ = tmp
                    # sandwich: P <=_lam (M, M) <=_lam Q after every phase
                    for j in range(twok):
                        m = M[j % ck]
                        if lam_v[j] * (m - P[j]) < 0.0 or lam_v[j] * (Q[j] - m) < 0.0:
                            status = C_SQ_SANDWICH_VIOLATION
                            iters = it; bad = <int>j; stop = True
                            break
                    if stop:
                        break
                if stop:
                    break
                # envelope monotonicity per macro step
                for j in range(twok):
                    if (lam_v[j] * (P[j] - prevP[j]) < 0.0
                            or lam_v[j] * (prevQ[j] - Q[j]) < 0.0):
                        status = C_SQ_MONOTONE_VIOLATION
                        iters = it; bad = <int>j; stop = True
                        break
                if stop:
                    break
                diam = 0.0
                for j in range(twok):
                    d = fabs(Q[j] - P[j])
                    if d > diam:
                        diam = d
                if diam <= c_tol:
                    status = C_SQ_CONVERGED; iters = it; break
                same = True
                for j in range(twok):
                    if P[j] != prevP[j] or Q[j] != prevQ[j]:
                        same = False
                        break
                if same:
                    status = C_SQ_TRAPPED; iters = it; break
            if status == -1:
                status = C_SQ_BUDGET
                iters = c_max

    P_out = np.empty(twok, dtype=np.float64)
    Q_out = np.empty(twok, dtype=np.float64)
    M_out = np.empty(ck, dtype=np.float64)
    cdef double[::1] P_o = P_out, Q_o = Q_out, M_o = M_out
    diam = 0.0
    for j in range(twok):
        P_o[j] = P[j]
        Q_o[j] = Q[j]
        d = fabs(Q[j] - P[j])
        if d > diam:
            diam = d
    for j in range(ck):
        M_o[j] = M[j]
    return (int(status), int(iters), float(diam),
            P_out, Q_out, M_out, int(err), int(err_op), int(bad))
