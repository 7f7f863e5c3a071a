"""Compiled event loop.

Mirrors the reference loop in ``network`` operation for operation so both
engines make the same channel choices from the same random input.
"""
import math

import numpy as np
from numba import njit

KIND_BS = 0
KIND_PBS = 1
KIND_WAVEPLATE = 2
KIND_PHASE = 3
DISCARD = 2

# DLM row layout: H clocks (ch0 c,s, ch1 c,s), V clocks, polarizations, x0, x1
_H, _V, _P, _X = 0, 4, 8, 12

# below this squared norm the sum of squares loses precision to underflow
TINY_SQ = 1e-280
TINY_NORM = 1e-140


@njit(cache=True, error_model="numpy", inline="always")
def _norm2(a, b):
    q = a * a + b * b
    if q < TINY_SQ:
        return math.hypot(a, b)
    return math.sqrt(q)


@njit(cache=True, error_model="numpy", inline="always")
def _pair_into(msg, i, a, b, norm):
    if norm == 0.0:
        msg[i] = 1.0
        msg[i + 1] = 0.0
    elif norm < TINY_NORM:
        msg[i] = a / norm
        msg[i + 1] = b / norm
    else:
        inv = 1.0 / norm
        msg[i] = a * inv
        msg[i + 1] = b * inv


@njit(cache=True, error_model="numpy", inline="always")
def _assemble(w0, w1, w2, w3, msg):
    s0 = _norm2(w0, w1)
    s1 = _norm2(w2, w3)
    s2 = _norm2(s0, s1)
    _pair_into(msg, 0, w0, w1, s0)
    _pair_into(msg, 2, w2, w3, s1)
    _pair_into(msg, 4, s0, s1, s2)


@njit(cache=True, error_model="numpy", inline="always")
def _dlm_unit(kind, st, channel, msg, gamma, random_policy, r, acc, u):
    """Input, transformation and output stage of a BS/PBS; returns the channel."""
    st[_H + 2 * channel] = msg[0]
    st[_H + 2 * channel + 1] = msg[1]
    st[_V + 2 * channel] = msg[2]
    st[_V + 2 * channel + 1] = msg[3]
    st[_P + 2 * channel] = msg[4]
    st[_P + 2 * channel + 1] = msg[5]
    x0 = st[_X]
    x1 = st[_X + 1]
    if channel == 0:
        st[_X] = gamma * x0 + (1.0 - gamma)
        st[_X + 1] = gamma * x1
    else:
        st[_X] = gamma * x0
        st[_X + 1] = gamma * x1 + (1.0 - gamma)

    ch0 = st[_H]
    sh0 = st[_H + 1]
    ch1 = st[_H + 2]
    sh1 = st[_H + 3]
    cv0 = st[_V]
    sv0 = st[_V + 1]
    cv1 = st[_V + 2]
    sv1 = st[_V + 3]
    r0 = math.sqrt(st[_X])
    r1 = math.sqrt(st[_X + 1])
    h0 = st[_P] * r0
    h1 = st[_P + 2] * r1
    v0 = st[_P + 1] * r0
    v1 = st[_P + 3] * r1

    if kind == KIND_BS:
        w0 = ch0 * h0 - sh1 * h1
        w1 = ch1 * h1 + sh0 * h0
        w2 = cv0 * v0 - sv1 * v1
        w3 = cv1 * v1 + sv0 * v0
        z0 = ch1 * h1 - sh0 * h0
        z1 = ch0 * h0 + sh1 * h1
        z2 = cv1 * v1 - sv0 * v0
        z3 = cv0 * v0 + sv1 * v1
    else:
        w0 = ch0 * h0
        w1 = sh0 * h0
        w2 = -sv1 * v1
        w3 = cv1 * v1
        z0 = ch1 * h1
        z1 = sh1 * h1
        z2 = -sv0 * v0
        z3 = cv0 * v0

    s2sq = w0 * w0 + w1 * w1 + w2 * w2 + w3 * w3
    if kind == KIND_BS:
        total = 2.0
    else:
        total = s2sq + (z0 * z0 + z1 * z1 + z2 * z2 + z3 * z3)

    if random_policy:
        k = 0 if s2sq > total * r else 1
    else:
        acc[u] += s2sq / total
        if acc[u] >= 0.5:
            acc[u] -= 1.0
            k = 0
        else:
            k = 1
    if k == 0:
        _assemble(w0, w1, w2, w3, msg)
    else:
        _assemble(z0, z1, z2, z3, msg)
    return k


@njit(cache=True, error_model="numpy", inline="always")
def _waveplate(p, msg):
    c = msg[4]
    s = msg[5]
    ahr = c * msg[0]
    ahi = c * msg[1]
    avr = s * msg[2]
    avi = s * msg[3]
    # b = m @ a with m = [[p0+ip1, p2+ip3], [p4+ip5, p6+ip7]]
    bhr = (p[0] * ahr - p[1] * ahi) + (p[2] * avr - p[3] * avi)
    bhi = (p[0] * ahi + p[1] * ahr) + (p[2] * avi + p[3] * avr)
    bvr = (p[4] * ahr - p[5] * ahi) + (p[6] * avr - p[7] * avi)
    bvi = (p[4] * ahi + p[5] * ahr) + (p[6] * avi + p[7] * avr)
    mh = _norm2(bhr, bhi)
    mv = _norm2(bvr, bvi)
    norm = _norm2(mh, mv)
    _pair_into(msg, 0, bhr, bhi, mh)
    _pair_into(msg, 2, bvr, bvi, mv)
    _pair_into(msg, 4, mh, mv, norm)


@njit(cache=True, error_model="numpy", inline="always")
def _phase(p, msg):
    c = p[0]
    s = p[1]
    a = msg[0]
    b = msg[1]
    msg[0] = c * a - s * b
    msg[1] = s * a + c * b
    a = msg[2]
    b = msg[3]
    msg[2] = c * a - s * b
    msg[3] = s * a + c * b


@njit(cache=True, error_model="numpy")
def run_kernel(kinds, params, nxt_unit, nxt_port, slot, src_unit, src_port,
               table, msg_idx, uniforms, gamma, random_policy, out):
    n_units = kinds.shape[0]
    st = np.zeros((n_units, 14))
    for u in range(n_units):
        for j in range(0, 12, 2):
            st[u, j] = 1.0
        st[u, _X] = 0.5
        st[u, _X + 1] = 0.5
    acc = np.zeros(n_units)
    msg = np.empty(6)
    n = out.shape[0]
    for l in range(n):
        for j in range(6):
            msg[j] = table[msg_idx[l], j]
        u = src_unit
        port = src_port
        while u >= 0:
            kind = kinds[u]
            if kind == KIND_BS or kind == KIND_PBS:
                r = uniforms[l, slot[u]] if random_policy else 0.0
                k = _dlm_unit(kind, st[u], port, msg, gamma, random_policy, r, acc, u)
            elif kind == KIND_WAVEPLATE:
                _waveplate(params[u], msg)
                k = 0
            else:
                _phase(params[u], msg)
                k = 0
            port = nxt_port[u, k]
            u = nxt_unit[u, k]
        out[l] = -1 - u
