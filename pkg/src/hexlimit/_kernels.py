"""Bulk integer kernels over arrays of lattice points.

Each kernel has a numba-compiled version and a pure-numpy (or pure-Python
loop) fallback.  Set ``HEXLIMIT_NO_NUMBA=1`` to force the fallbacks.  All
inputs are int64; callers guarantee magnitudes below 2**60.
"""

from __future__ import annotations

import os

import numpy as np

try:  # pragma: no cover - exercised implicitly
    import numba

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False

USE_NUMBA = _HAVE_NUMBA and os.environ.get("HEXLIMIT_NO_NUMBA", "") not in ("1", "true", "yes")

# status bits of the parity formula
NO_UNIQUE_MAX = 1
SHIFT_UNRESOLVED = 2
COLOR_UNRESOLVED = 4

INT_LIMIT_BITS = 60


# ------------------------------------------------------------------ valuations

def _val2_capped_numpy(z: np.ndarray, cap: int) -> np.ndarray:
    z = np.asarray(z, dtype=np.int64)
    low = z & -z
    out = np.full(z.shape, cap, dtype=np.int64)
    nz = low != 0
    # low is a power of two below 2**62, exactly representable in float64
    out[nz] = np.minimum(np.log2(np.abs(low[nz]).astype(np.float64)).astype(np.int64), cap)
    return out


def _val2_capped_loop(z, cap):
    out = np.empty(z.shape[0], dtype=np.int64)
    for i in range(z.shape[0]):
        v = z[i]
        if v == 0:
            out[i] = cap
            continue
        k = 0
        while (v & 1) == 0 and k < cap:
            v >>= 1
            k += 1
        out[i] = k
    return out


# ------------------------------------------------------------------ parity formula

def _formula_numpy(t1, t2, t3, depth):
    t = np.stack([t1, t2, t3]).astype(np.int64)
    nu = np.stack([_val2_capped_numpy(row, depth) for row in t])
    order = np.argsort(-nu, axis=0, kind="stable")
    j = order[0]
    idx = np.arange(t.shape[1])
    top = nu[j, idx]
    second = nu[order[1], idx]
    status = np.zeros(t.shape[1], dtype=np.int64)
    status[top == second] |= NO_UNIQUE_MAX
    tj1 = t[(j + 1) % 3, idx]
    tj2 = t[(j + 2) % 3, idx]
    shift_nu = top  # t_{j+1} + t_{j+2} = -t_j
    color_nu = _val2_capped_numpy(tj2 - tj1, depth)
    status[shift_nu >= depth - 1] |= SHIFT_UNRESOLVED
    status[color_nu >= depth - 1] |= COLOR_UNRESOLVED
    safe_shift = np.minimum(shift_nu, 62)
    safe_color = np.minimum(color_nu, 62)
    shift = (tj2 >> safe_shift) & 1
    color = (tj2 >> safe_color) & 1
    return j.astype(np.int64), shift.astype(np.int64), color.astype(np.int64), status


def _formula_loop(t1, t2, t3, depth):
    n = t1.shape[0]
    jj = np.empty(n, dtype=np.int64)
    shift = np.empty(n, dtype=np.int64)
    color = np.empty(n, dtype=np.int64)
    status = np.zeros(n, dtype=np.int64)
    nu = np.empty(3, dtype=np.int64)
    tt = np.empty(3, dtype=np.int64)
    for i in range(n):
        tt[0] = t1[i]
        tt[1] = t2[i]
        tt[2] = t3[i]
        for a in range(3):
            v = tt[a]
            if v == 0:
                nu[a] = depth
            else:
                k = 0
                while (v & 1) == 0 and k < depth:
                    v >>= 1
                    k += 1
                nu[a] = k
        j = 0
        for a in range(1, 3):
            if nu[a] > nu[j]:
                j = a
        s = 0
        for a in range(3):
            if a != j and nu[a] == nu[j]:
                s |= NO_UNIQUE_MAX
        tj1 = tt[(j + 1) % 3]
        tj2 = tt[(j + 2) % 3]
        diff = tj2 - tj1
        if diff == 0:
            cnu = depth
        else:
            cnu = 0
            v = diff
            while (v & 1) == 0 and cnu < depth:
                v >>= 1
                cnu += 1
        snu = nu[j]
        if snu >= depth - 1:
            s |= SHIFT_UNRESOLVED
        if cnu >= depth - 1:
            s |= COLOR_UNRESOLVED
        jj[i] = j
        shift[i] = (tj2 >> min(snu, 62)) & 1
        color[i] = (tj2 >> min(cnu, 62)) & 1
        status[i] = s
    return jj, shift, color, status


# ------------------------------------------------------------------ parity union-find

def _uf_solve_loop(n_nodes, a, b, rel):
    """Union-find where each constraint says value[a] xor value[b] == rel.

    Returns (root, parity-to-root, index of first contradicting constraint or -1).
    """
    parent = np.arange(n_nodes, dtype=np.int64)
    par = np.zeros(n_nodes, dtype=np.int64)
    rank = np.zeros(n_nodes, dtype=np.int64)
    conflict = -1
    for e in range(a.shape[0]):
        # find with path compression, tracking parity
        x = a[e]
        px = 0
        while parent[x] != x:
            px ^= par[x]
            x = parent[x]
        rx = x
        x = a[e]
        acc = px
        while parent[x] != x:
            nxt = parent[x]
            old = par[x]
            parent[x] = rx
            par[x] = acc
            acc ^= old
            x = nxt
        y = b[e]
        py = 0
        while parent[y] != y:
            py ^= par[y]
            y = parent[y]
        ry = y
        y = b[e]
        acc = py
        while parent[y] != y:
            nxt = parent[y]
            old = par[y]
            parent[y] = ry
            par[y] = acc
            acc ^= old
            y = nxt
        if rx == ry:
            if (px ^ py) != rel[e] and conflict < 0:
                conflict = e
            continue
        if rank[rx] < rank[ry]:
            rx, ry = ry, rx
        parent[ry] = rx
        par[ry] = px ^ py ^ rel[e]
        if rank[rx] == rank[ry]:
            rank[rx] += 1
    root = np.empty(n_nodes, dtype=np.int64)
    parity = np.empty(n_nodes, dtype=np.int64)
    for i in range(n_nodes):
        x = i
        p = 0
        while parent[x] != x:
            p ^= par[x]
            x = parent[x]
        root[i] = x
        parity[i] = p
    return root, parity, conflict


if USE_NUMBA:
    _val2_impl = numba.njit(cache=True)(_val2_capped_loop)
    _formula_impl = numba.njit(cache=True)(_formula_loop)
    _uf_impl = numba.njit(cache=True)(_uf_solve_loop)
else:
    _val2_impl = _val2_capped_numpy
    _formula_impl = _formula_numpy
    _uf_impl = _uf_solve_loop


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"


def val2_capped(z, cap: int) -> np.ndarray:
    """2-adic valuation of each entry, with zero and anything >= cap mapped to cap."""
    z = np.ascontiguousarray(z, dtype=np.int64).ravel()
    return _val2_impl(z, np.int64(cap))


def parity_formula(t1, t2, t3, depth: int):
    """Vectorised parity formula on triple coordinates of x - c_K.

    Returns (j, shift_bit, color_bit, status) with j the 0-based index of the
    component of largest 2-adic content.
    """
    args = [np.ascontiguousarray(t, dtype=np.int64).ravel() for t in (t1, t2, t3)]
    return _formula_impl(args[0], args[1], args[2], np.int64(depth))


def uf_solve(n_nodes: int, a, b, rel):
    a = np.ascontiguousarray(a, dtype=np.int64)
    b = np.ascontiguousarray(b, dtype=np.int64)
    rel = np.ascontiguousarray(rel, dtype=np.int64)
    return _uf_impl(np.int64(n_nodes), a, b, rel)


def check_magnitude(*arrays, limit_bits: int = INT_LIMIT_BITS) -> None:
    """Reject inputs that could overflow int64 arithmetic downstream."""
    bound = 1 << limit_bits
    for arr in arrays:
        arr = np.asarray(arr)
        if arr.size and int(np.abs(arr).max()) >= bound:
            raise OverflowError(f"coordinates exceed 2**{limit_bits}; lower the depth K")
