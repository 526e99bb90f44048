"""Numba kernels for the bulk detector path.

The Monte Carlo engine needs the noisy-decision error count of every trial
at every candidate pattern threshold.  The recursive detector is irregular
control flow, so it is compiled with numba rather than vectorized; the
per-trial semantics are pinned to noise.switched_rounds by a fuzz test.

Kernel-internal layout: an explicit post-order stack replays the recursion
(find longest candidate run, fire, recurse left/right, merge children with
the pivot).  Events per subtree are kept in per-frame buffers; merges
deduplicate, stable-sort by round, and drop conflicting later events.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(nogil=True, cache=True)
def _longest_candidate(d, lo, hi):
    """Longest run in d[lo:hi] that may indicate a switch.

    Runs of zeros starting the subsequence are expected and excluded.
    Returns (start, length, symbol); length 0 when no candidate exists.
    Leftmost run wins ties.
    """
    best_start = -1
    best_len = 0
    best_sym = 0
    pos = lo
    while pos < hi:
        sym = d[pos]
        end = pos
        while end < hi and d[end] == sym:
            end += 1
        if not (sym == 0 and pos == lo):
            if end - pos > best_len:
                best_start = pos
                best_len = end - pos
                best_sym = sym
        pos = end
    return best_start, best_len, best_sym


@njit(nogil=True, cache=True)
def _nearest_q_round(q_rounds, n_q, target):
    """q_r = 1 round closest to target (1-based); smaller round wins ties."""
    best = q_rounds[0]
    best_dist = abs(best - target)
    for k in range(1, n_q):
        r = q_rounds[k]
        dist = abs(r - target)
        if dist < best_dist:
            best = r
            best_dist = dist
    return best


@njit(nogil=True, cache=True)
def _detect_events(d, lo0, hi0, dl, q_rounds, n_q,
                   st_lo, st_hi, st_stage, st_mlo, st_mhi, st_r, st_s, st_parent, st_slot,
                   ev_r, ev_s, ev_n, child_r, child_s, child_n):
    """Replay the recursive detector on d[lo0:hi0]; events land in frame 0.

    Frames hold the recursion state; child event lists are buffered per
    frame (slot 0 = left subtree, slot 1 = right) and merged with the pivot
    event once both sides are done.  Returns the event count of frame 0.
    """
    top = 0
    st_lo[0] = lo0
    st_hi[0] = hi0
    st_stage[0] = 0
    st_parent[0] = -1
    st_slot[0] = 0
    n_frames = 1
    while top >= 0:
        f = top
        stage = st_stage[f]
        if stage == 0:
            start, length, sym = _longest_candidate(d, st_lo[f], st_hi[f])
            if length < dl + 1:
                ev_n[f] = 0
                # finished: hand empty result to parent
                p = st_parent[f]
                if p >= 0:
                    child_n[p, st_slot[f]] = 0
                top = p
                continue
            mlo = start - 1 if start > st_lo[f] else start
            mhi = start + length + 1
            if mhi > st_hi[f]:
                mhi = st_hi[f]
            st_mlo[f] = mlo
            st_mhi[f] = mhi
            st_r[f] = _nearest_q_round(q_rounds, n_q, mlo + 2)
            st_s[f] = sym
            st_stage[f] = 1
            # spawn left child on [lo, mlo)
            c = n_frames
            n_frames += 1
            st_lo[c] = st_lo[f]
            st_hi[c] = mlo
            st_stage[c] = 0
            st_parent[c] = f
            st_slot[c] = 0
            top = c
        elif stage == 1:
            st_stage[f] = 2
            c = n_frames
            n_frames += 1
            st_lo[c] = st_mhi[f]
            st_hi[c] = st_hi[f]
            st_stage[c] = 0
            st_parent[c] = f
            st_slot[c] = 1
            top = c
        else:
            # merge left + pivot + right: dedup, stable sort by round, then
            # drop any event that repeats the round or direction of the one
            # kept before it (earliest wins).
            m = 0
            for k in range(child_n[f, 0]):
                ev_r[f, m] = child_r[f, 0, k]
                ev_s[f, m] = child_s[f, 0, k]
                m += 1
            dup = False
            for k in range(m):
                if ev_r[f, k] == st_r[f] and ev_s[f, k] == st_s[f]:
                    dup = True
            if not dup:
                ev_r[f, m] = st_r[f]
                ev_s[f, m] = st_s[f]
                m += 1
            for k in range(child_n[f, 1]):
                r = child_r[f, 1, k]
                s = child_s[f, 1, k]
                dup = False
                for j in range(m):
                    if ev_r[f, j] == r and ev_s[f, j] == s:
                        dup = True
                if not dup:
                    ev_r[f, m] = r
                    ev_s[f, m] = s
                    m += 1
            # stable insertion sort by round
            for k in range(1, m):
                r = ev_r[f, k]
                s = ev_s[f, k]
                j = k - 1
                while j >= 0 and ev_r[f, j] > r:
                    ev_r[f, j + 1] = ev_r[f, j]
                    ev_s[f, j + 1] = ev_s[f, j]
                    j -= 1
                ev_r[f, j + 1] = r
                ev_s[f, j + 1] = s
            kept = 0
            for k in range(m):
                if kept > 0 and (ev_r[f, kept - 1] == ev_r[f, k] or ev_s[f, kept - 1] == ev_s[f, k]):
                    continue
                ev_r[f, kept] = ev_r[f, k]
                ev_s[f, kept] = ev_s[f, k]
                kept += 1
            ev_n[f] = kept
            p = st_parent[f]
            if p >= 0:
                slot = st_slot[f]
                for k in range(kept):
                    child_r[p, slot, k] = ev_r[f, k]
                    child_s[p, slot, k] = ev_s[f, k]
                child_n[p, slot] = kept
            top = p
    return ev_n[0]


@njit(nogil=True, cache=True)
def detector_error_grid(d_rows, q_rows, dls, out):
    """Noisy-decision error counts for each trial at each threshold.

    d_rows, q_rows: (trials, n) uint8.  dls: int64 thresholds, ascending.
    out: (trials, len(dls)) int16; out[t, k] = error count at dls[k].
    """
    trials, n = d_rows.shape
    n_dls = dls.shape[0]
    max_frames = 2 * n + 4
    st_lo = np.empty(max_frames, np.int64)
    st_hi = np.empty(max_frames, np.int64)
    st_stage = np.empty(max_frames, np.int64)
    st_mlo = np.empty(max_frames, np.int64)
    st_mhi = np.empty(max_frames, np.int64)
    st_r = np.empty(max_frames, np.int64)
    st_s = np.empty(max_frames, np.int64)
    st_parent = np.empty(max_frames, np.int64)
    st_slot = np.empty(max_frames, np.int64)
    ev_r = np.empty((max_frames, n + 2), np.int64)
    ev_s = np.empty((max_frames, n + 2), np.int64)
    ev_n = np.empty(max_frames, np.int64)
    child_r = np.empty((max_frames, 2, n + 2), np.int64)
    child_s = np.empty((max_frames, 2, n + 2), np.int64)
    child_n = np.empty((max_frames, 2), np.int64)
    q_rounds = np.empty(n, np.int64)
    for t in range(trials):
        d = d_rows[t]
        pop = 0
        for i in range(n):
            pop += d[i]
        n_q = 0
        for i in range(n):
            if q_rows[t, i] == 1:
                q_rounds[n_q] = i + 1
                n_q += 1
        # no q-ones: switches impossible at any threshold
        if n_q == 0:
            for k in range(n_dls):
                out[t, k] = pop
            continue
        # thresholds beyond the longest candidate run leave d unexplained
        _, root_len, _ = _longest_candidate(d, 0, n)
        for k in range(n_dls):
            dl = dls[k]
            if root_len < dl + 1:
                out[t, k] = pop
                continue
            n_ev = _detect_events(
                d, 0, n, dl, q_rounds, n_q,
                st_lo, st_hi, st_stage, st_mlo, st_mhi, st_r, st_s, st_parent, st_slot,
                ev_r, ev_s, ev_n, child_r, child_s, child_n,
            )
            errors = 0
            state = 0
            ei = 0
            for i in range(1, n + 1):
                if ei < n_ev and ev_r[0, ei] == i:
                    state = ev_s[0, ei]
                    errors += 1
                    ei += 1
                elif d[i - 1] != state:
                    errors += 1
            out[t, k] = errors
    return out
