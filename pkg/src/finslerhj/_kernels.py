"""Numba kernels for the Gauss-Seidel fast-sweeping solvers.

Hamiltonians enter the kernels as postfix opcode programs (see
``expressions``) over the scalar slot, a per-node data value and, for the
evolution family, the time.  Dual norms of upwind difference covectors are
evaluated per node from precomputed profiles: mode 0 is the quadratic form
sqrt(c^T B c), mode 1 the weighted power norm (q = 0 encodes max).
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .expressions import (OP_ABS, OP_ADD, OP_CONST, OP_COS, OP_D, OP_DIV,
                          OP_EXP, OP_MAX, OP_MIN, OP_MUL, OP_NEG, OP_SIN,
                          OP_SUB, OP_T, OP_TIME)

BIG = 1e30


@njit(cache=True)
def ham_eval(ops, args, consts, tval, dval, timeval, stack):
    sp = 0
    for k in range(ops.shape[0]):
        op = ops[k]
        if op == OP_CONST:
            stack[sp] = consts[args[k]]
            sp += 1
        elif op == OP_T:
            stack[sp] = tval
            sp += 1
        elif op == OP_D:
            stack[sp] = dval
            sp += 1
        elif op == OP_TIME:
            stack[sp] = timeval
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
            stack[sp - 1] = stack[sp - 1] / stack[sp]
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_COS:
            stack[sp - 1] = np.cos(stack[sp - 1])
        elif op == OP_SIN:
            stack[sp - 1] = np.sin(stack[sp - 1])
        elif op == OP_EXP:
            stack[sp - 1] = np.exp(stack[sp - 1])
        elif op == OP_ABS:
            stack[sp - 1] = abs(stack[sp - 1])
        elif op == OP_MIN:
            sp -= 1
            stack[sp - 1] = min(stack[sp - 1], stack[sp])
        else:  # OP_MAX
            sp -= 1
            stack[sp - 1] = max(stack[sp - 1], stack[sp])
    return stack[0]


@njit(cache=True, inline="always")
def _dual2(mode, b11, b12, b22, w1, w2, q, cx, cy):
    if mode == 0:
        return np.sqrt(b11 * cx * cx + 2.0 * b12 * cx * cy + b22 * cy * cy)
    if q == 0.0:
        return max(w1 * cx, w2 * cy)
    if q == 1.0:
        return w1 * cx + w2 * cy
    return (w1 * cx ** q + w2 * cy ** q) ** (1.0 / q)


@njit(cache=True)
def sweep_stationary(u, D, ops, args, consts, mode, B11, B12, B22, W1, W2, q,
                     h1, h2, lo0, hi0, nbis, si, sj):
    """One Gauss-Seidel sweep in ordering (si, sj); returns (max increase,
    bracket_ok).  Each node solves v + H(x, P(v)) = 0 by bisection and keeps
    the larger of root and current value (monotone Perron update)."""
    n1, n2 = u.shape
    stack = np.empty(32)
    maxchg = 0.0
    ok = True
    i = 0 if si > 0 else n1 - 1
    while 0 <= i < n1:
        j = 0 if sj > 0 else n2 - 1
        while 0 <= j < n2:
            uL = u[i - 1, j] if i > 0 else BIG
            uR = u[i + 1, j] if i < n1 - 1 else BIG
            uD = u[i, j - 1] if j > 0 else BIG
            uU = u[i, j + 1] if j < n2 - 1 else BIG
            dval = D[i, j]
            b11 = B11[i, j]
            b12 = B12[i, j]
            b22 = B22[i, j]
            w1 = W1[i, j]
            w2 = W2[i, j]
            lo = lo0
            hi = hi0
            # bracket sanity: g(lo) <= 0 <= g(hi)
            cx = max(max(lo - uL, lo - uR), 0.0) / h1
            cy = max(max(lo - uD, lo - uU), 0.0) / h2
            p = _dual2(mode, b11, b12, b22, w1, w2, q, cx, cy)
            glo = lo + ham_eval(ops, args, consts, p, dval, 0.0, stack)
            cx = max(max(hi - uL, hi - uR), 0.0) / h1
            cy = max(max(hi - uD, hi - uU), 0.0) / h2
            p = _dual2(mode, b11, b12, b22, w1, w2, q, cx, cy)
            ghi = hi + ham_eval(ops, args, consts, p, dval, 0.0, stack)
            if glo > 0.0 or ghi < 0.0:
                ok = False
            for _ in range(nbis):
                mid = 0.5 * (lo + hi)
                cx = max(max(mid - uL, mid - uR), 0.0) / h1
                cy = max(max(mid - uD, mid - uU), 0.0) / h2
                p = _dual2(mode, b11, b12, b22, w1, w2, q, cx, cy)
                g = mid + ham_eval(ops, args, consts, p, dval, 0.0, stack)
                if g > 0.0:
                    hi = mid
                else:
                    lo = mid
            v = 0.5 * (lo + hi)
            if v > u[i, j]:
                chg = v - u[i, j]
                if chg > maxchg:
                    maxchg = chg
                u[i, j] = v
            j += sj
        i += si
    return maxchg, ok


@njit(cache=True)
def sweep_unit_gradient(u, updatable, mode, B11, B12, B22, W1, W2, q,
                        h1, h2, nbis, si, sj):
    """Sweep for the boundary problem: per node solve P(v) = 1 with frozen
    seeds, keeping the smaller value (descent from above).  Returns
    (max decrease, ok)."""
    n1, n2 = u.shape
    maxchg = 0.0
    ok = True
    i = 0 if si > 0 else n1 - 1
    while 0 <= i < n1:
        j = 0 if sj > 0 else n2 - 1
        while 0 <= j < n2:
            if not updatable[i, j]:
                j += sj
                continue
            uL = u[i - 1, j] if i > 0 else BIG
            uR = u[i + 1, j] if i < n1 - 1 else BIG
            uD = u[i, j - 1] if j > 0 else BIG
            uU = u[i, j + 1] if j < n2 - 1 else BIG
            m = min(min(uL, uR), min(uD, uU))
            if m >= 0.5 * BIG:
                j += sj
                continue
            b11 = B11[i, j]
            b12 = B12[i, j]
            b22 = B22[i, j]
            w1 = W1[i, j]
            w2 = W2[i, j]
            lo = m
            hi = m + h1 + h2
            expanded = True
            while True:
                cx = max(max(hi - uL, hi - uR), 0.0) / h1
                cy = max(max(hi - uD, hi - uU), 0.0) / h2
                if _dual2(mode, b11, b12, b22, w1, w2, q, cx, cy) >= 1.0:
                    break
                if hi - m > 0.25 * BIG:
                    expanded = False
                    break
                hi = m + 2.0 * (hi - m)
            if not expanded:
                ok = False
                j += sj
                continue
            for _ in range(nbis):
                mid = 0.5 * (lo + hi)
                cx = max(max(mid - uL, mid - uR), 0.0) / h1
                cy = max(max(mid - uD, mid - uU), 0.0) / h2
                if _dual2(mode, b11, b12, b22, w1, w2, q, cx, cy) >= 1.0:
                    hi = mid
                else:
                    lo = mid
            v = 0.5 * (lo + hi)
            if v < u[i, j]:
                chg = u[i, j] - v
                if chg > maxchg:
                    maxchg = chg
                u[i, j] = v
            j += sj
        i += si
    return maxchg, ok


def dual_profile_arrays(nf, grid):
    """Split a dual profile into the fixed kernel argument set."""
    prof = nf.dual_profile(grid.points())
    n1, n2 = grid.resolution
    zero = np.zeros((n1, n2))
    if prof is None:
        from .errors import InputError
        raise InputError(f"norm field kind {nf.kind!r} provides no closed-form "
                         "dual profile; the sweeping solvers require one")
    if prof[0] == "quad":
        B = np.ascontiguousarray(prof[1])
        return (0, np.ascontiguousarray(B[..., 0, 0]),
                np.ascontiguousarray(B[..., 0, 1]),
                np.ascontiguousarray(B[..., 1, 1]), zero, zero, 0.0)
    _, w, q = prof
    w = np.ascontiguousarray(w)
    return (1, zero, zero, zero, np.ascontiguousarray(w[..., 0]),
            np.ascontiguousarray(w[..., 1]), float(q))


def dual_of_covector_field(nf, grid, cx, cy):
    """Vectorised dual norm of per-node covectors (cx, cy) >= 0."""
    mode, b11, b12, b22, w1, w2, q = dual_profile_arrays(nf, grid)
    if mode == 0:
        return np.sqrt(b11 * cx * cx + 2.0 * b12 * cx * cy + b22 * cy * cy)
    if q == 0.0:
        return np.maximum(w1 * cx, w2 * cy)
    return (w1 * cx ** q + w2 * cy ** q) ** (1.0 / q)
