"""Pure-numpy kernel backend.

Reference implementations of the hot per-path loops. The compiled backend
in _kernels_cy mirrors these signatures exactly; _backend picks one at
import time. All inputs are 1-d float64 arrays sorted by event time.

Conventions: `jumps` are the path increments h(x_i) in time order, so the
left limit before event i is the cumulative sum of jumps[:i]. `pos` is the
sorted insertion index of a new event (0 <= pos <= m).
"""

import numpy as np

from .registry import _SMOOTH_DERIV, _SMOOTH_VALUE


def backend_name():
    return "python"


def _phi(code, a, b, c, y):
    return _SMOOTH_VALUE[code](y, a, b, c)


def _dphi(code, a, b, c, y):
    return _SMOOTH_DERIV[code](y, a, b, c)


def _left_limits(jumps):
    return np.cumsum(jumps) - jumps


def stoch_value(jumps, code, a, b, c):
    """V = sum_i phi(Y_{i-}) * jump_i."""
    if len(jumps) == 0:
        return 0.0
    ym = _left_limits(jumps)
    return float(np.dot(_phi(code, a, b, c, ym), jumps))


def stoch_inserted_value(jumps, pos, dj, code, a, b, c):
    """V of the path with an extra jump dj inserted at sorted position pos."""
    m = len(jumps)
    ym = _left_limits(jumps) if m else np.empty(0)
    yb = float(np.sum(jumps[:pos]))
    acc = float(np.dot(_phi(code, a, b, c, ym[:pos]), jumps[:pos])) if pos else 0.0
    acc += _phi(code, a, b, c, yb) * dj
    if pos < m:
        acc += float(np.dot(_phi(code, a, b, c, ym[pos:] + dj), jumps[pos:]))
    return acc


def stoch_inserted_deriv(jumps, pos, dj, code, a, b, c):
    """d/d(dj) of stoch_inserted_value: phi(Y_{pos-}) + suffix phi' terms."""
    m = len(jumps)
    yb = float(np.sum(jumps[:pos]))
    acc = _phi(code, a, b, c, yb)
    if pos < m:
        ym = _left_limits(jumps)
        acc += float(np.dot(_dphi(code, a, b, c, ym[pos:] + dj), jumps[pos:]))
    return float(acc)


def stoch_gamma_coeffs(jumps, code, a, b, c):
    """Per-atom A_i = phi(Y_{i-}) + sum_{j>i} phi'(Y_{j-}) jump_j, shape (m,)."""
    m = len(jumps)
    if m == 0:
        return np.empty(0)
    ym = _left_limits(jumps)
    s = _dphi(code, a, b, c, ym) * jumps
    # suffix sums: suf[i] = sum_{j > i} s[j]
    suf = np.cumsum(s[::-1])[::-1]
    suf = np.concatenate([suf[1:], [0.0]])
    return _phi(code, a, b, c, ym) + suf


def sup_value(incs, h0):
    """sup of the piecewise-constant path started at h0 with increments incs."""
    if len(incs) == 0:
        return float(h0)
    h = h0 + np.cumsum(incs)
    return float(max(h0, h.max()))


def sup_insert_parts(incs, h0, pos):
    """(P, S): sup strictly before position pos, sup from pos on (base path).

    After inserting a jump dj at pos the new sup is max(P, S + dj).
    """
    m = len(incs)
    h = h0 + np.cumsum(incs) if m else np.empty(0)
    p = float(max(h0, h[:pos].max())) if pos > 0 else float(h0)
    s = float(h[pos - 1]) if pos > 0 else float(h0)
    if pos < m:
        s = float(max(s, h[pos:].max()))
    return p, s


def sup_atom_indicators(incs, h0, atom_mask):
    """1{sup_{s>=t_e} H >= sup_{s<t_e} H} at each event flagged in atom_mask."""
    m = len(incs)
    if m == 0:
        return np.empty(0)
    h = h0 + np.cumsum(incs)
    pm = np.maximum.accumulate(np.concatenate([[h0], h]))[:-1]
    sm = np.maximum.accumulate(h[::-1])[::-1]
    ind = (sm >= pm).astype(float)
    return ind[np.asarray(atom_mask, dtype=bool)]


def triangular_value(j1, j2, z1, z2, z3):
    """Terminal state of the triangular system driven by jump streams j1, j2.

    Z1 = z1 + Y1, Z2 = z2 + Int 2 Z1_- dY1 + Y2, Z3 = z3 + Int Z1_- dY1 + 2 Y2.
    """
    y2 = float(np.sum(j2)) if len(j2) else 0.0
    if len(j1) == 0:
        return np.array([z1, z2 + y2, z3 + 2.0 * y2], dtype=float)
    y1m = z1 + _left_limits(j1)
    i1 = float(np.dot(y1m, j1))
    y1 = float(np.sum(j1))
    return np.array([z1 + y1, z2 + 2.0 * i1 + y2, z3 + i1 + 2.0 * y2])


def triangular_gamma(j1, j2, z1):
    """Closed-form carre du champ of the triangular system's terminal state.

    Sum over first-driver jumps of dj^2 u u^T with u = (1, 2c, c),
    c = z1 + Y1_T - dj, plus (sum of second-driver jump squares) v v^T
    with v = (0, 1, 2).
    """
    g = np.zeros((3, 3))
    if len(j1):
        w = j1 * j1
        cvec = z1 + float(np.sum(j1)) - j1
        sw = float(np.sum(w))
        swc = float(np.dot(w, cvec))
        swc2 = float(np.dot(w, cvec * cvec))
        g[0, 0] = sw
        g[0, 1] = g[1, 0] = 2.0 * swc
        g[0, 2] = g[2, 0] = swc
        g[1, 1] = 4.0 * swc2
        g[1, 2] = g[2, 1] = 2.0 * swc2
        g[2, 2] = swc2
    w2 = float(np.sum(j2 * j2)) if len(j2) else 0.0
    g[1, 1] += w2
    g[1, 2] += 2.0 * w2
    g[2, 1] += 2.0 * w2
    g[2, 2] += 4.0 * w2
    return g
