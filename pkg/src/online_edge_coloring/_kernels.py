"""Compiled inner loops: RNG, dependent rounding, and whole-trial drivers.

Everything here is numba-jitted and operates on flat numpy arrays.  The
public modules wrap these kernels with validation and friendlier types.

The random source is an explicit xoshiro256** state (a uint64[4] array)
seeded via splitmix64, so every kernel is a pure function of its seed and
trials can be replayed or farmed out to workers without shared state.
"""

import numpy as np
from numba import njit

# Weights closer than this to 0 or 1 are snapped during rounding.
SNAP_EPS = 1e-9

# A color is overloaded when its fractional load exceeds 1 by more than this.
GATE_EPS = 1e-9


# ---------------------------------------------------------------------------
# RNG: splitmix64 seeding + xoshiro256**
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _splitmix64(z):
    z = z + np.uint64(0x9E3779B97F4A7C15)
    t = z
    t = (t ^ (t >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
    t = (t ^ (t >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
    return z, t ^ (t >> np.uint64(31))


@njit(cache=True)
def seed_state(seed):
    """Expand a 64-bit seed into a fresh xoshiro256** state vector."""
    state = np.empty(4, dtype=np.uint64)
    z = np.uint64(seed)
    for i in range(4):
        z, w = _splitmix64(z)
        state[i] = w
    return state


@njit(cache=True, inline="always")
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True, inline="always")
def next_u64(state):
    result = _rotl(state[1] * np.uint64(5), 7) * np.uint64(9)
    t = state[1] << np.uint64(17)
    state[2] ^= state[0]
    state[3] ^= state[1]
    state[1] ^= state[2]
    state[0] ^= state[3]
    state[2] ^= t
    state[3] = _rotl(state[3], 45)
    return result


@njit(cache=True, inline="always")
def rand_unit(state):
    """Uniform double in [0, 1) with 53 random bits."""
    return (next_u64(state) >> np.uint64(11)) * (1.0 / 9007199254740992.0)


@njit(cache=True, inline="always")
def rand_below(state, n):
    """Uniform integer in [0, n).  Unbiased via rejection on the tail."""
    nn = np.uint64(n)
    threshold = (np.uint64(0) - nn) % nn  # 2**64 mod n
    while True:
        r = next_u64(state)
        if r >= threshold:
            return np.int64(r % nn)


# ---------------------------------------------------------------------------
# Dependent rounding (pipage on paths and cycles)
#
# The fractional support is a doubly indexed incidence structure: each live
# edge can be removed from its row and column lists in O(1) by swapping
# with the last live slot.  A walk grows a simple path; when neither end
# extends it is maximal, and a revisit of an on-stack node closes a cycle.
# Every perturbation rounds at least one run edge away, after which the
# stack is truncated to its surviving prefix and the walk continues, so
# path segments are not rebuilt from scratch.
#
# When an edge settles at weight 1, its row and column become saturated
# and any live siblings carry only snap-scale residue.  Those siblings
# are flushed to 0 *after* the perturbation run finishes (flushing midway
# could kill an edge the run still references); the prefix scan treats
# flushed stack edges like any other dead edge.
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _detach(e, e_row, e_col, rptr, cptr, row_elist, col_elist,
            e_rowpos, e_colpos, row_live, col_live, e_live):
    """Remove a live edge from both incidence lists."""
    e_live[e] = 0
    r = e_row[e]
    p = e_rowpos[e]
    last = rptr[r] + row_live[r] - 1
    o = row_elist[last]
    row_elist[p] = o
    e_rowpos[o] = p
    row_live[r] -= 1

    c = e_col[e]
    p = e_colpos[e]
    last = cptr[c] + col_live[c] - 1
    o = col_elist[last]
    col_elist[p] = o
    e_colpos[o] = p
    col_live[c] -= 1


@njit(cache=True, inline="always")
def _flush_saturated(e, e_row, e_col, e_w, rptr, cptr, row_elist,
                     col_elist, e_rowpos, e_colpos, row_live, col_live,
                     e_live):
    """Drop residual siblings of an edge that settled at 1."""
    r = e_row[e]
    while row_live[r] > 0:
        s = row_elist[rptr[r]]
        e_w[s] = 0.0
        _detach(s, e_row, e_col, rptr, cptr, row_elist, col_elist,
                e_rowpos, e_colpos, row_live, col_live, e_live)
    c = e_col[e]
    while col_live[c] > 0:
        s = col_elist[cptr[c]]
        e_w[s] = 0.0
        _detach(s, e_row, e_col, rptr, cptr, row_elist, col_elist,
                e_rowpos, e_colpos, row_live, col_live, e_live)


@njit(cache=True, inline="always")
def _next_live(node, nrows, avoid, rptr, cptr, row_elist, col_elist,
               row_live, col_live):
    """A live edge at `node` other than `avoid`, or -1 if none exists."""
    if node < nrows:
        base = rptr[node]
        live = row_live[node]
        if live == 0:
            return np.int64(-1)
        e = row_elist[base]
        if e != avoid:
            return np.int64(e)
        if live >= 2:
            return np.int64(row_elist[base + 1])
        return np.int64(-1)
    c = node - nrows
    base = cptr[c]
    live = col_live[c]
    if live == 0:
        return np.int64(-1)
    e = col_elist[base]
    if e != avoid:
        return np.int64(e)
    if live >= 2:
        return np.int64(col_elist[base + 1])
    return np.int64(-1)


@njit(cache=True, inline="always")
def _perturb(lo_idx, hi_idx, stk_edges, ones_buf, e_w, e_row, e_col, rptr,
             cptr, row_elist, col_elist, e_rowpos, e_colpos, row_live,
             col_live, e_live, match_row, state):
    """One pipage step on the edge run stk_edges[lo_idx:hi_idx].

    Consecutive edges share a node, so alternating index classes receive
    opposite perturbations.  With headroom alpha one way and beta the
    other, the +alpha move on the even class happens with probability
    beta / (alpha + beta); every marginal is preserved exactly.

    Edges that settle at 1 are recorded in ones_buf.  Returns the settle
    count and the lowest run index whose edge was detached (hi_idx if
    none was).  Sibling flushing is the caller's job.
    """
    alpha = 2.0
    beta = 2.0
    for i in range(lo_idx, hi_idx):
        w = e_w[stk_edges[i]]
        if ((i - lo_idx) & 1) == 0:
            if 1.0 - w < alpha:
                alpha = 1.0 - w
            if w < beta:
                beta = w
        else:
            if w < alpha:
                alpha = w
            if 1.0 - w < beta:
                beta = 1.0 - w
    if rand_unit(state) * (alpha + beta) < beta:
        step = alpha
    else:
        step = -beta
    n_ones = np.int64(0)
    first_dead = hi_idx
    for i in range(lo_idx, hi_idx):
        e = stk_edges[i]
        if ((i - lo_idx) & 1) == 0:
            w = e_w[e] + step
        else:
            w = e_w[e] - step
        if w <= SNAP_EPS:
            e_w[e] = 0.0
            _detach(e, e_row, e_col, rptr, cptr, row_elist, col_elist,
                    e_rowpos, e_colpos, row_live, col_live, e_live)
            if i < first_dead:
                first_dead = i
        elif w >= 1.0 - SNAP_EPS:
            e_w[e] = 1.0
            match_row[e_row[e]] = e_col[e]
            _detach(e, e_row, e_col, rptr, cptr, row_elist, col_elist,
                    e_rowpos, e_colpos, row_live, col_live, e_live)
            ones_buf[n_ones] = e
            n_ones += 1
            if i < first_dead:
                first_dead = i
        else:
            e_w[e] = w
    return n_ones, first_dead


@njit(cache=True)
def round_support(nrows, ncols, rptr, cptr, e_row, e_col, e_w,
                  row_elist, col_elist, e_rowpos, e_colpos,
                  row_live, col_live, e_live, match_row,
                  stk_nodes, stk_edges, ones_buf, stamp, stamp_pos,
                  wid0, state):
    """Round a live fractional support to an integral matching in place.

    match_row[r] receives the column of r's edge that rounds to 1, or
    stays untouched if none does.  Node stamp arrays carry walk ids
    strictly greater than wid0; pass the returned wid as the next call's
    wid0 to reuse the arrays without clearing them.

    Returns (next_wid, steps).
    """
    steps = np.int64(0)
    m = rptr[nrows]
    step_cap = 2 * m + 64
    wid = wid0
    for r0 in range(nrows):
        while row_live[r0] > 0 and steps < step_cap:
            wid += 1
            top = np.int64(0)
            stk_nodes[0] = r0
            stamp[r0] = wid
            stamp_pos[r0] = 0
            nedges = np.int64(0)
            enter = np.int64(-1)
            flipped = False
            while True:
                u = stk_nodes[top]
                e = _next_live(u, nrows, enter, rptr, cptr, row_elist,
                               col_elist, row_live, col_live)
                if e < 0:
                    if nedges == 0:
                        break
                    if not flipped:
                        # This end is stuck; reverse and grow the other.
                        i = np.int64(0)
                        j = top
                        while i < j:
                            a = stk_nodes[i]
                            stk_nodes[i] = stk_nodes[j]
                            stk_nodes[j] = a
                            i += 1
                            j -= 1
                        i = np.int64(0)
                        j = nedges - 1
                        while i < j:
                            a = stk_edges[i]
                            stk_edges[i] = stk_edges[j]
                            stk_edges[j] = a
                            i += 1
                            j -= 1
                        for i in range(top + 1):
                            stamp_pos[stk_nodes[i]] = i
                        flipped = True
                        enter = stk_edges[nedges - 1]
                        continue
                    # Maximal path: both endpoints are stuck.
                    n1, fd = _perturb(0, nedges, stk_edges, ones_buf, e_w,
                                      e_row, e_col, rptr, cptr, row_elist,
                                      col_elist, e_rowpos, e_colpos,
                                      row_live, col_live, e_live, match_row,
                                      state)
                    keep = fd
                else:
                    if e_row[e] == u:
                        v = nrows + np.int64(e_col[e])
                    else:
                        v = np.int64(e_row[e])
                    if stamp[v] != wid:
                        top += 1
                        stk_nodes[top] = v
                        stk_edges[nedges] = e
                        nedges += 1
                        stamp[v] = wid
                        stamp_pos[v] = top
                        enter = e
                        continue
                    # Closed a cycle through the stack suffix.
                    p = stamp_pos[v]
                    stk_edges[nedges] = e
                    n1, fd = _perturb(p, nedges + 1, stk_edges, ones_buf,
                                      e_w, e_row, e_col, rptr, cptr,
                                      row_elist, col_elist, e_rowpos,
                                      e_colpos, row_live, col_live, e_live,
                                      match_row, state)
                    # Everything below the first dead edge is untouched, so
                    # resume from there rather than from the cycle anchor.
                    keep = fd if fd < nedges else nedges
                steps += 1
                for ii in range(n1):
                    _flush_saturated(ones_buf[ii], e_row, e_col, e_w, rptr,
                                     cptr, row_elist, col_elist, e_rowpos,
                                     e_colpos, row_live, col_live, e_live)
                if steps >= step_cap:
                    break
                # Truncate the stack to its longest live prefix and keep
                # walking from there instead of rebuilding from scratch.
                # The perturbation itself cannot kill edges before `keep`,
                # so only sibling flushes force a prefix check.
                if n1 > 0:
                    for i in range(keep):
                        if e_live[stk_edges[i]] == 0:
                            keep = i
                            break
                for i in range(keep + 1, top + 1):
                    stamp[stk_nodes[i]] = 0
                top = keep
                nedges = keep
                if keep > 0:
                    enter = stk_edges[keep - 1]
                else:
                    enter = np.int64(-1)
                    if row_live[r0] == 0 and stk_nodes[0] == r0:
                        break
    return wid, steps


@njit(cache=True, inline="always")
def _settle_intake(m, e_row, e_col, e_w, rptr, cptr, row_elist, col_elist,
                   e_rowpos, e_colpos, row_live, col_live, e_live,
                   match_row):
    """Retire edges already within SNAP_EPS of an endpoint before walking."""
    for e in range(m):
        if e_live[e] == 0:
            continue
        w = e_w[e]
        if w <= SNAP_EPS:
            e_w[e] = 0.0
            _detach(e, e_row, e_col, rptr, cptr, row_elist, col_elist,
                    e_rowpos, e_colpos, row_live, col_live, e_live)
        elif w >= 1.0 - SNAP_EPS:
            e_w[e] = 1.0
            match_row[e_row[e]] = e_col[e]
            _detach(e, e_row, e_col, rptr, cptr, row_elist, col_elist,
                    e_rowpos, e_colpos, row_live, col_live, e_live)
            _flush_saturated(e, e_row, e_col, e_w, rptr, cptr, row_elist,
                             col_elist, e_rowpos, e_colpos, row_live,
                             col_live, e_live)


# ---------------------------------------------------------------------------
# One-shot and batched rounding entry points (library path)
# ---------------------------------------------------------------------------

@njit(cache=True)
def round_batch(nrows, ncols, rptr, e_row, e_col, w0, nsamples, seed):
    """Draw nsamples independent roundings of one fractional point.

    Returns (match, steps_total): match is (nsamples, nrows) matched
    columns with -1 for unmatched rows.  The incidence scaffolding is
    rebuilt from pristine copies for every sample.
    """
    m = e_row.shape[0]
    out = np.empty((nsamples, nrows), dtype=np.int64)
    state = seed_state(seed)

    cnt0 = np.zeros(ncols, dtype=np.int64)
    for i in range(m):
        cnt0[e_col[i]] += 1
    cptr = np.zeros(ncols + 1, dtype=np.int64)
    for c in range(ncols):
        cptr[c + 1] = cptr[c] + cnt0[c]
    col_elist0 = np.empty(m, dtype=np.int64)
    e_colpos0 = np.empty(m, dtype=np.int64)
    fill = np.zeros(ncols, dtype=np.int64)
    for e in range(m):
        c = e_col[e]
        p = cptr[c] + fill[c]
        col_elist0[p] = e
        e_colpos0[e] = p
        fill[c] += 1
    row_live0 = np.empty(nrows, dtype=np.int64)
    for r in range(nrows):
        row_live0[r] = rptr[r + 1] - rptr[r]

    e_w = np.empty(m, dtype=np.float64)
    row_elist = np.empty(m, dtype=np.int64)
    e_rowpos = np.empty(m, dtype=np.int64)
    col_elist = np.empty(m, dtype=np.int64)
    e_colpos = np.empty(m, dtype=np.int64)
    row_live = np.empty(nrows, dtype=np.int64)
    col_live = np.empty(ncols, dtype=np.int64)
    e_live = np.empty(m, dtype=np.uint8)
    match_row = np.empty(nrows, dtype=np.int64)
    nn = nrows + ncols
    stk_nodes = np.empty(nn + 2, dtype=np.int64)
    stk_edges = np.empty(nn + 2, dtype=np.int64)
    ones_buf = np.empty(nn + 2, dtype=np.int64)
    stamp = np.zeros(nn, dtype=np.int64)
    stamp_pos = np.zeros(nn, dtype=np.int64)
    wid = np.int64(0)
    steps_total = np.int64(0)

    for s in range(nsamples):
        e_w[:] = w0
        col_elist[:] = col_elist0
        e_colpos[:] = e_colpos0
        row_live[:] = row_live0
        col_live[:] = cnt0
        for e in range(m):
            row_elist[e] = e
            e_rowpos[e] = e
            e_live[e] = 1
        for r in range(nrows):
            match_row[r] = -1
        _settle_intake(m, e_row, e_col, e_w, rptr, cptr, row_elist,
                       col_elist, e_rowpos, e_colpos, row_live, col_live,
                       e_live, match_row)
        wid, steps = round_support(nrows, ncols, rptr, cptr, e_row, e_col,
                                   e_w, row_elist, col_elist, e_rowpos,
                                   e_colpos, row_live, col_live, e_live,
                                   match_row, stk_nodes, stk_edges,
                                   ones_buf, stamp, stamp_pos, wid, state)
        steps_total += steps
        out[s] = match_row
    return out, steps_total


@njit(cache=True)
def round_once(nrows, ncols, rptr, e_row, e_col, w0, seed):
    """Round one fractional point.  Returns (match_row, steps)."""
    out, steps = round_batch(nrows, ncols, rptr, e_row, e_col, w0, 1, seed)
    return out[0], steps


# ---------------------------------------------------------------------------
# Whole-trial driver for the matching-based online algorithm
#
# Per arrival the fractional support is huge (every neighbor spreads mass
# over its whole available palette), so the generic walk above would chase
# pointers across a working set far larger than cache.  Instead the trial
# driver consolidates mass with 4-cycle perturbations scheduled as linear
# sweeps over column-major data (phase A), which conserve every row and
# column sum exactly, and hands the small irreducible remainder to the
# generic walk (phase B).  Both phases apply the same +alpha/-beta rule,
# so the sampled matching keeps exact marginals.
# ---------------------------------------------------------------------------

_CTZ_TABLE = np.array([
    0, 1, 48, 2, 57, 49, 28, 3, 61, 58, 50, 42, 38, 29, 17, 4,
    62, 55, 59, 36, 53, 51, 43, 22, 45, 39, 33, 30, 24, 18, 12, 5,
    63, 47, 56, 27, 60, 41, 37, 16, 54, 35, 52, 21, 44, 32, 23, 11,
    46, 26, 40, 15, 34, 20, 31, 10, 25, 14, 19, 9, 13, 8, 7, 6,
], dtype=np.int64)

_DEBRUIJN = np.uint64(0x03F79D71B4CB0A89)


@njit(cache=True, inline="always")
def _ctz(x):
    """Index of the lowest set bit of a nonzero uint64."""
    lsb = x & (~x + np.uint64(1))
    return _CTZ_TABLE[(lsb * _DEBRUIJN) >> np.uint64(58)]


@njit(cache=True, inline="always")
def _kill_cell(r, c, cw, ncols, mask, w, cdeg):
    """Retire cell (r, c): clear its bit and zero its weight."""
    w[r * ncols + c] = 0.0
    mask[r * cw + (c >> 6)] &= ~(np.uint64(1) << np.uint64(c & 63))
    cdeg[c] -= 1


@njit(cache=True)
def _settle_row(r, c, cw, ncols, mask, w, cdeg, cptr, chead, col_rows,
                match_row):
    """Row r's mass all sits on color c: record the match and clean up.

    The row's other cells and the column's other cells hold only
    snap-scale residue by conservation, so both are flushed to zero.
    """
    match_row[r] = c
    base = r * cw
    wb = r * ncols
    for wi in range(cw):
        bits = mask[base + wi]
        while bits != np.uint64(0):
            cl = (wi << 6) + _ctz(bits)
            bits &= bits - np.uint64(1)
            w[wb + cl] = 0.0
            cdeg[cl] -= 1
        mask[base + wi] = np.uint64(0)
    wi_c = c >> 6
    bit_c = np.uint64(1) << np.uint64(c & 63)
    i = chead[c]
    end = cptr[c + 1]
    while i < end and cdeg[c] > 0:
        r2 = np.int64(col_rows[i])
        if (mask[r2 * cw + wi_c] & bit_c) != np.uint64(0):
            _kill_cell(r2, c, cw, ncols, mask, w, cdeg)
        i += 1


@njit(cache=True)
def _pair_chain(u, v, cw, ncols, mask, w, cdeg, cptr, chead, col_rows,
                match_row, state):
    """Consolidate rows u and v over their shared live columns.

    Walks the shared columns in ascending order carrying a straggler (the
    most recent column where both rows are still live) and applies one
    4-cycle perturbation per step.  Every step retires at least one cell,
    so afterwards at most one shared column remains live in both rows.

    Returns the number of columns that stopped being shared-live (0 means
    the pair had fewer than two shared columns to begin with).
    """
    mu = u * cw
    mv = v * cw
    wu = u * ncols
    wv = v * ncols
    cs = np.int64(-1)
    resolved = np.int64(0)
    for wi in range(cw):
        bits = mask[mu + wi] & mask[mv + wi]
        while bits != np.uint64(0):
            cn = (wi << 6) + _ctz(bits)
            bits &= bits - np.uint64(1)
            if cs < 0:
                cs = cn
                continue
            a_s = w[wu + cs]
            b_s = w[wv + cs]
            a_n = w[wu + cn]
            b_n = w[wv + cn]
            # Cycle u-cs-v-cn-u; classes: {(u,cs),(v,cn)} vs {(v,cs),(u,cn)}.
            alpha = 1.0 - a_s
            if b_s < alpha:
                alpha = b_s
            if 1.0 - b_n < alpha:
                alpha = 1.0 - b_n
            if a_n < alpha:
                alpha = a_n
            beta = a_s
            if 1.0 - b_s < beta:
                beta = 1.0 - b_s
            if b_n < beta:
                beta = b_n
            if 1.0 - a_n < beta:
                beta = 1.0 - a_n
            if rand_unit(state) * (alpha + beta) < beta:
                step = alpha
            else:
                step = -beta
            a_s += step
            b_s -= step
            b_n += step
            a_n -= step
            hi_u = np.int64(-1)
            hi_v = np.int64(-1)
            if a_s <= SNAP_EPS:
                _kill_cell(u, cs, cw, ncols, mask, w, cdeg)
            elif a_s >= 1.0 - SNAP_EPS:
                hi_u = cs
            else:
                w[wu + cs] = a_s
            if b_s <= SNAP_EPS:
                _kill_cell(v, cs, cw, ncols, mask, w, cdeg)
            elif b_s >= 1.0 - SNAP_EPS:
                hi_v = cs
            else:
                w[wv + cs] = b_s
            if a_n <= SNAP_EPS:
                _kill_cell(u, cn, cw, ncols, mask, w, cdeg)
            elif a_n >= 1.0 - SNAP_EPS:
                hi_u = cn
            else:
                w[wu + cn] = a_n
            if b_n <= SNAP_EPS:
                _kill_cell(v, cn, cw, ncols, mask, w, cdeg)
            elif b_n >= 1.0 - SNAP_EPS:
                hi_v = cn
            else:
                w[wv + cn] = b_n
            if hi_u >= 0:
                _settle_row(u, hi_u, cw, ncols, mask, w, cdeg, cptr, chead,
                            col_rows, match_row)
            if hi_v >= 0:
                _settle_row(v, hi_v, cw, ncols, mask, w, cdeg, cptr, chead,
                            col_rows, match_row)
            wbit_s = np.uint64(1) << np.uint64(cs & 63)
            cs_both = (mask[mu + (cs >> 6)] & wbit_s) != np.uint64(0) and \
                      (mask[mv + (cs >> 6)] & wbit_s) != np.uint64(0)
            wbit_n = np.uint64(1) << np.uint64(cn & 63)
            cn_both = (mask[mu + (cn >> 6)] & wbit_n) != np.uint64(0) and \
                      (mask[mv + (cn >> 6)] & wbit_n) != np.uint64(0)
            if not cs_both:
                resolved += 1
            if not cn_both:
                resolved += 1
            if hi_u >= 0 or hi_v >= 0:
                return resolved
            if cs_both:
                pass
            elif cn_both:
                cs = cn
            else:
                cs = np.int64(-1)
    return resolved


@njit(cache=True, nogil=True)
def run_matching_trial(num_offline, delta, q, aptr, anbr, seed, fail_cap):
    """Color one instance end to end with the sampled-matching rule.

    aptr/anbr hold the arrival lists in CSR form: edge i connects arrival
    t to offline node anbr[i] for aptr[t] <= i < aptr[t+1].

    Returns (edge_colors, fail_t, fail_c, fail_sum, n_fail_records,
    fail_arrivals, drift_fallbacks, unassigned, steps, error_arrival):
    edge_colors[i] is the palette index assigned to edge i (-1 only if the
    drift fallback found no legal color); the fail_* arrays record up to
    fail_cap overloaded (arrival, color, load) events; error_arrival >= 0
    flags an arrival that pushed some offline node past degree delta.
    """
    ncols = delta + q
    cw = (ncols + 63) >> 6
    num_arrivals = aptr.shape[0] - 1
    num_edges = anbr.shape[0]
    edge_colors = np.full(num_edges, -1, dtype=np.int64)

    # Per-offline-node available palette, swap-removable in O(1).
    avail_list = np.empty((num_offline, ncols), dtype=np.int32)
    avail_pos = np.empty((num_offline, ncols), dtype=np.int32)
    for v in range(num_offline):
        for c in range(ncols):
            avail_list[v, c] = c
            avail_pos[v, c] = c
    avail_len = np.full(num_offline, ncols, dtype=np.int64)

    fail_t = np.empty(fail_cap, dtype=np.int64)
    fail_c = np.empty(fail_cap, dtype=np.int64)
    fail_sum = np.empty(fail_cap, dtype=np.float64)
    n_fail_records = np.int64(0)
    fail_arrivals = np.int64(0)
    drift_fallbacks = np.int64(0)
    unassigned = np.int64(0)
    steps_total = np.int64(0)

    kmax = np.int64(0)
    for t in range(num_arrivals):
        k = aptr[t + 1] - aptr[t]
        if k > kmax:
            kmax = k
    mcap = kmax * ncols
    if mcap < 1:
        mcap = 1

    # Phase A arena: row-major weights, row bitmasks, per-column row lists.
    w = np.empty(kmax * ncols, dtype=np.float64)
    col_rows = np.empty(mcap, dtype=np.int32)
    mask = np.zeros(kmax * cw, dtype=np.uint64)
    cptr = np.empty(ncols + 1, dtype=np.int64)
    chead = np.empty(ncols, dtype=np.int64)
    cscan = np.empty(ncols, dtype=np.int64)
    cdeg = np.empty(ncols, dtype=np.int64)
    cfill = np.empty(ncols, dtype=np.int64)
    colsum = np.empty(ncols, dtype=np.float64)
    match_row = np.empty(kmax + 1, dtype=np.int64)
    w0 = np.empty(kmax + 1, dtype=np.float64)

    # Phase B arena: generic-walk structures for the remnant.
    e_row = np.empty(mcap, dtype=np.int64)
    e_col = np.empty(mcap, dtype=np.int64)
    e_w = np.empty(mcap, dtype=np.float64)
    row_elist = np.empty(mcap, dtype=np.int64)
    e_rowpos = np.empty(mcap, dtype=np.int64)
    col_elist = np.empty(mcap, dtype=np.int64)
    e_colpos = np.empty(mcap, dtype=np.int64)
    e_live = np.empty(mcap, dtype=np.uint8)
    rptr = np.empty(kmax + 1, dtype=np.int64)
    cptr_b = np.empty(ncols + 1, dtype=np.int64)
    row_live = np.empty(kmax + 1, dtype=np.int64)
    col_live = np.empty(ncols, dtype=np.int64)
    ccnt = np.empty(ncols, dtype=np.int64)
    nn = kmax + ncols
    stk_nodes = np.empty(nn + 2, dtype=np.int64)
    stk_edges = np.empty(nn + 2, dtype=np.int64)
    ones_buf = np.empty(nn + 2, dtype=np.int64)
    stamp = np.zeros(nn, dtype=np.int64)
    stamp_pos = np.zeros(nn, dtype=np.int64)
    sibling_taken = np.zeros(ncols, dtype=np.uint8)
    wid = np.int64(0)

    state = seed_state(seed)

    for t in range(num_arrivals):
        lo = aptr[t]
        k = aptr[t + 1] - lo
        if k == 0:
            continue
        for j in range(k):
            if avail_len[anbr[lo + j]] <= q:
                # This endpoint already holds delta colored edges.
                return (edge_colors, fail_t, fail_c, fail_sum,
                        n_fail_records, fail_arrivals, drift_fallbacks,
                        unassigned, steps_total, t)

        for c in range(ncols):
            colsum[c] = 0.0
            ccnt[c] = 0
        m = np.int64(0)
        for j in range(k):
            v = anbr[lo + j]
            ln = avail_len[v]
            wgt = 1.0 / ln
            w0[j] = wgt
            m += ln
            for ii in range(ln):
                c = avail_list[v, ii]
                colsum[c] += wgt
                ccnt[c] += 1

        overloaded = False
        for c in range(ncols):
            if colsum[c] > 1.0 + GATE_EPS:
                overloaded = True
                if n_fail_records < fail_cap:
                    fail_t[n_fail_records] = t
                    fail_c[n_fail_records] = c
                    fail_sum[n_fail_records] = colsum[c]
                    n_fail_records += 1

        if overloaded:
            fail_arrivals += 1
            # Recovery rule: every sibling draws independently and
            # uniformly from its own available colors.
            for j in range(k):
                v = anbr[lo + j]
                ii = rand_below(state, avail_len[v])
                c = avail_list[v, ii]
                edge_colors[lo + j] = c
                last = avail_len[v] - 1
                o = avail_list[v, last]
                avail_list[v, ii] = o
                avail_pos[v, o] = np.int32(ii)
                avail_len[v] = last
            continue

        # Build the phase A structures.
        cptr[0] = 0
        for c in range(ncols):
            cptr[c + 1] = cptr[c] + ccnt[c]
            chead[c] = cptr[c]
            cdeg[c] = ccnt[c]
            cfill[c] = 0
        for j in range(k):
            v = anbr[lo + j]
            base = j * cw
            for wi in range(cw):
                mask[base + wi] = np.uint64(0)
            wgt = w0[j]
            wb = j * ncols
            for ii in range(avail_len[v]):
                c = avail_list[v, ii]
                col_rows[cptr[c] + cfill[c]] = j
                cfill[c] += 1
                w[wb + c] = wgt
                mask[base + (c >> 6)] |= np.uint64(1) << np.uint64(c & 63)
            match_row[j] = -1

        # Degree-saturated neighbors with one slot left take it outright.
        for j in range(k):
            if w0[j] >= 1.0 - SNAP_EPS and match_row[j] < 0:
                base = j * cw
                for wi in range(cw):
                    bits = mask[base + wi]
                    if bits != np.uint64(0):
                        c = (wi << 6) + _ctz(bits)
                        _settle_row(j, c, cw, ncols, mask, w, cdeg, cptr,
                                    chead, col_rows, match_row)
                        break

        # Phase A: drive each column toward a single live cell via 4-cycle
        # chains.  Sterile pairs advance both the head and the candidate
        # cursor so one unshareable row cannot poison a whole column, and
        # extra sweeps retry columns once settles elsewhere reopen them.
        for c in range(ncols):
            cscan[c] = cptr[c] + 1
        for _sweep in range(4):
            progress = False
            for c in range(ncols):
                if cdeg[c] < 2:
                    continue
                wi_c = c >> 6
                bit_c = np.uint64(1) << np.uint64(c & 63)
                guard = 2 * cdeg[c] + 8
                end = cptr[c + 1]
                sterile_run = np.int64(0)
                while cdeg[c] >= 2 and guard > 0 and sterile_run < 6:
                    guard -= 1
                    i1 = chead[c]
                    while (mask[np.int64(col_rows[i1]) * cw + wi_c]
                           & bit_c) == np.uint64(0):
                        i1 += 1
                    chead[c] = i1
                    # Dead entries never revive, so the candidate cursor
                    # only ever moves forward within the column segment.
                    scan = cscan[c]
                    if scan < i1 + 1:
                        scan = i1 + 1
                    while scan < end and \
                            (mask[np.int64(col_rows[scan]) * cw + wi_c]
                             & bit_c) == np.uint64(0):
                        scan += 1
                    cscan[c] = scan
                    if scan >= end:
                        break
                    i2 = scan
                    u = np.int64(col_rows[i1])
                    v = np.int64(col_rows[i2])
                    resolved = _pair_chain(u, v, cw, ncols, mask, w, cdeg,
                                           cptr, chead, col_rows, match_row,
                                           state)
                    steps_total += resolved
                    if resolved > 0:
                        progress = True
                        sterile_run = 0
                    else:
                        sterile_run += 1
                        cscan[c] = i2 + 1
                        # Rotate u out to the segment tail so the next
                        # iteration tries a disjoint pair.
                        i3 = end - 1
                        while (mask[np.int64(col_rows[i3]) * cw + wi_c]
                               & bit_c) == np.uint64(0):
                            i3 -= 1
                        if i3 <= i2:
                            break
                        col_rows[i1] = col_rows[i3]
                        col_rows[i3] = np.int32(u)
            if not progress:
                break

        # Phase B: hand the remnant to the generic walk.
        m2 = np.int64(0)
        for j in range(k):
            rptr[j] = m2
            if match_row[j] >= 0:
                continue
            base = j * cw
            wb = j * ncols
            for wi in range(cw):
                bits = mask[base + wi]
                while bits != np.uint64(0):
                    c = (wi << 6) + _ctz(bits)
                    bits &= bits - np.uint64(1)
                    e_row[m2] = j
                    e_col[m2] = c
                    e_w[m2] = w[wb + c]
                    m2 += 1
        rptr[k] = m2

        if m2 > 0:
            for c in range(ncols):
                ccnt[c] = 0
            for e in range(m2):
                ccnt[e_col[e]] += 1
            cptr_b[0] = 0
            for c in range(ncols):
                cptr_b[c + 1] = cptr_b[c] + ccnt[c]
                col_live[c] = ccnt[c]
                ccnt[c] = 0
            for e in range(m2):
                c = e_col[e]
                p = cptr_b[c] + ccnt[c]
                ccnt[c] += 1
                col_elist[p] = e
                e_colpos[e] = p
                row_elist[e] = e
                e_rowpos[e] = e
                e_live[e] = 1
            for j in range(k):
                row_live[j] = rptr[j + 1] - rptr[j]
            _settle_intake(m2, e_row, e_col, e_w, rptr, cptr_b, row_elist,
                           col_elist, e_rowpos, e_colpos, row_live,
                           col_live, e_live, match_row)
            wid, steps = round_support(k, ncols, rptr, cptr_b, e_row, e_col,
                                       e_w, row_elist, col_elist, e_rowpos,
                                       e_colpos, row_live, col_live, e_live,
                                       match_row, stk_nodes, stk_edges,
                                       ones_buf, stamp, stamp_pos, wid,
                                       state)
            steps_total += steps

        pending = np.int64(0)
        for j in range(k):
            c = match_row[j]
            if c < 0:
                pending += 1
                continue
            v = anbr[lo + j]
            edge_colors[lo + j] = c
            p = avail_pos[v, c]
            last = avail_len[v] - 1
            o = avail_list[v, last]
            avail_list[v, p] = o
            avail_pos[v, o] = p
            avail_len[v] = last

        if pending > 0:
            # Numerical-drift fallback: a saturated row came back
            # unmatched.  Give it a uniform available color no sibling
            # took this arrival; if none is free the edge stays -1.
            for j in range(k):
                c = match_row[j]
                if c >= 0:
                    sibling_taken[c] = 1
            for j in range(k):
                if match_row[j] >= 0:
                    continue
                drift_fallbacks += 1
                v = anbr[lo + j]
                nfree = np.int64(0)
                for ii in range(avail_len[v]):
                    if sibling_taken[avail_list[v, ii]] == 0:
                        nfree += 1
                if nfree == 0:
                    unassigned += 1
                    continue
                pick = rand_below(state, nfree)
                chosen = np.int64(-1)
                for ii in range(avail_len[v]):
                    c = avail_list[v, ii]
                    if sibling_taken[c] == 0:
                        if pick == 0:
                            chosen = c
                            break
                        pick -= 1
                sibling_taken[chosen] = 1
                edge_colors[lo + j] = chosen
                p = avail_pos[v, chosen]
                last = avail_len[v] - 1
                o = avail_list[v, last]
                avail_list[v, p] = o
                avail_pos[v, o] = p
                avail_len[v] = last
            for j in range(k):
                c = edge_colors[lo + j]
                if c >= 0:
                    sibling_taken[c] = 0

    return (edge_colors, fail_t, fail_c, fail_sum, n_fail_records,
            fail_arrivals, drift_fallbacks, unassigned, steps_total,
            np.int64(-1))


# ---------------------------------------------------------------------------
# Greedy baseline
# ---------------------------------------------------------------------------

@njit(cache=True, nogil=True)
def run_greedy_trial(num_offline, delta, aptr, anbr):
    """Greedy lowest-free-color run.  Returns (edge_colors, error_arrival).

    Each edge takes the smallest color unused at its offline endpoint and
    by its siblings in the same arrival; 2*delta - 1 colors always suffice.
    """
    cap = 2 * delta
    num_arrivals = aptr.shape[0] - 1
    num_edges = anbr.shape[0]
    edge_colors = np.full(num_edges, -1, dtype=np.int64)
    used = np.zeros((num_offline, cap), dtype=np.uint8)
    deg = np.zeros(num_offline, dtype=np.int64)
    arrival_used = np.zeros(cap, dtype=np.uint8)

    for t in range(num_arrivals):
        lo = aptr[t]
        k = aptr[t + 1] - lo
        for j in range(k):
            v = anbr[lo + j]
            if deg[v] >= delta:
                return edge_colors, t
            c = np.int64(-1)
            for cc in range(cap):
                if used[v, cc] == 0 and arrival_used[cc] == 0:
                    c = cc
                    break
            edge_colors[lo + j] = c
            used[v, c] = 1
            arrival_used[c] = 1
            deg[v] += 1
        for j in range(k):
            arrival_used[edge_colors[lo + j]] = 0
    return edge_colors, np.int64(-1)
