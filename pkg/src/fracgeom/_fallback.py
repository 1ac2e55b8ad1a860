"""Pure numpy versions of the compiled per-line pair sums.

Lines are sorted by their number of crossings and processed in chunks of
padded arrays, so each chunk is a handful of dense numpy operations.
"""
from __future__ import annotations

import numpy as np

_CHUNK = 2_000_000


def _toggle_weights(t, ptr, start):
    k = len(start)
    cnt = np.diff(ptr)
    li = np.repeat(np.arange(k), cnt)
    pos = np.arange(len(t)) - ptr[li]
    before = start[li] ^ (pos % 2 == 1)
    return li, pos, np.where(before, -1.0, 1.0)


def _pad(li, pos, vals, k, width):
    out = np.zeros((k, max(width, 1)))
    out[li, pos] = vals
    return out


def _form(p, a, q, b, e):
    d = np.abs(p[:, :, None] - q[:, None, :])
    with np.errstate(divide="ignore"):
        f = np.where(d > 0, np.exp(e * np.log(np.where(d > 0, d, 1.0))), 0.0)
    return np.einsum("ki,kij,kj->k", a, f, b)


def _chunks(cnt, extra):
    """Row blocks of lines sorted by crossing count, sized to a memory budget."""
    order = np.argsort(cnt, kind="stable")
    k = len(cnt)
    i = 0
    while i < k:
        j = min(k, i + max(1, _CHUNK // (int(cnt[order[i]]) + extra + 1) ** 2))
        while j - i > 1 and (j - i) * (int(cnt[order[j - 1]]) + extra + 1) ** 2 > _CHUNK:
            j = i + max(1, (j - i) // 2)
        yield order[i:j]
        i = j


def perimeter_forms(t, ptr, start, w1, w2, s_values, with_nonlocal=True):
    t = np.asarray(t, dtype=float)
    ptr = np.asarray(ptr, dtype=np.int64)
    start = np.asarray(start, dtype=bool)
    w1 = np.asarray(w1, dtype=float)
    w2 = np.asarray(w2, dtype=float)
    s_values = np.atleast_1d(np.asarray(s_values, dtype=float))
    k, ns = len(start), len(s_values)
    loc = np.zeros((k, ns))
    non = np.zeros((k, ns))
    valid = np.isfinite(w1) & np.isfinite(w2) & (w2 > w1)
    li, pos, ew = _toggle_weights(t, ptr, start)
    cnt = np.diff(ptr)
    st1 = start ^ (np.bincount(li, weights=(t < w1[li]), minlength=k) % 2 == 1)
    st2 = start ^ (np.bincount(li, weights=(t < w2[li]), minlength=k) % 2 == 1)
    inside = (t > w1[li]) & (t < w2[li])
    # slot of each inside crossing inside the alpha list (slot 0 is w1)
    ins_cum = np.cumsum(inside)
    base = np.concatenate([[0], ins_cum])[ptr[:-1]]
    apos = ins_cum - base[li]
    na = np.bincount(li, weights=inside, minlength=k).astype(np.int64) + 2
    for rows in _chunks(np.where(valid, cnt, 0), 2):
        rows = rows[valid[rows]]
        if len(rows) == 0:
            continue
        r = len(rows)
        loc_idx = np.full(k, -1)
        loc_idx[rows] = np.arange(r)
        sel = loc_idx[li] >= 0
        lr = loc_idx[li[sel]]
        me = max(1, int(cnt[rows].max()))
        ma = int(na[rows].max())
        ep = _pad(lr, pos[sel], t[sel], r, me)
        ewp = _pad(lr, pos[sel], ew[sel], r, me)
        ap = np.zeros((r, ma))
        aw = np.zeros((r, ma))
        ap[:, 0] = w1[rows]
        aw[:, 0] = st1[rows]
        s2 = sel & inside
        lr2 = loc_idx[li[s2]]
        ap[lr2, apos[s2]] = t[s2]
        aw[lr2, apos[s2]] = ew[s2]
        last = na[rows] - 1
        ap[np.arange(r), last] = w2[rows]
        aw[np.arange(r), last] = -st2[rows].astype(float)
        # unused slots sit at w1 with weight 0
        gp = np.stack([w1[rows], w2[rows]], axis=1)
        gw = np.tile([1.0, -1.0], (r, 1))
        for si, s in enumerate(s_values):
            e = 1.0 - s
            c = 1.0 / (s * e)
            qaa = _form(ap, aw, ap, aw, e)
            qag = _form(ap, aw, gp, gw, e)
            loc[rows, si] = c * (qag - qaa)
            if with_nonlocal:
                qae = _form(ap, aw, ep, ewp, e)
                qeg = _form(ep, ewp, gp, gw, e)
                non[rows, si] = c * (-2 * qae - 2 * qag + 2 * qaa + qeg)
    return loc, non


def interaction_forms(ta, pa, sa, tb, pb, sb, s):
    ta, tb = np.asarray(ta, float), np.asarray(tb, float)
    pa, pb = np.asarray(pa, np.int64), np.asarray(pb, np.int64)
    sa, sb = np.asarray(sa, bool), np.asarray(sb, bool)
    k = len(sa)
    out = np.zeros(k)
    la, posa, wa = _toggle_weights(ta, pa, sa)
    lb, posb, wb = _toggle_weights(tb, pb, sb)
    ca, cb = np.diff(pa), np.diff(pb)
    both = (ca > 0) & (cb > 0)
    e = 1.0 - s
    for rows in _chunks(np.where(both, np.maximum(ca, cb), 0), 0):
        rows = rows[both[rows]]
        if len(rows) == 0:
            continue
        r = len(rows)
        idx = np.full(k, -1)
        idx[rows] = np.arange(r)
        sa_ = idx[la] >= 0
        sb_ = idx[lb] >= 0
        ma, mb = int(ca[rows].max()), int(cb[rows].max())
        xa = _pad(idx[la[sa_]], posa[sa_], ta[sa_], r, ma)
        xwa = _pad(idx[la[sa_]], posa[sa_], wa[sa_], r, ma)
        xb = _pad(idx[lb[sb_]], posb[sb_], tb[sb_], r, mb)
        xwb = _pad(idx[lb[sb_]], posb[sb_], wb[sb_], r, mb)
        out[rows] = _form(xa, xwa, xb, xwb, e) / (s * e)
    return out
