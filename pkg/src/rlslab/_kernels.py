"""Compiled inner loops.

Draw order per activation is fixed everywhere: holding time, then source
(ball), then destination.  Each is one ``Generator.random()`` call.
"""

import numpy as np
from numba import njit

from .sampling import fenwick_add, fenwick_build, fenwick_find

N_MARKERS = 6


@njit(cache=True, nogil=True)
def _uniform_index(rng, k):
    i = int(rng.random() * k)
    if i >= k:
        i = k - 1
    return i


@njit(cache=True, nogil=True)
def _update_markers(markers, clock, n, m, mx, mn, an, lim96, lim8):
    # dn = n * discrepancy, an = n * overloaded balls; both exact integers
    dn = max(n * mx - m, m - n * mn)
    if np.isnan(markers[0]) and dn <= lim96:
        markers[0] = clock
    if np.isnan(markers[1]) and 2 * dn <= m:
        markers[1] = clock
    if np.isnan(markers[2]) and dn <= lim8:
        markers[2] = clock
    if np.isnan(markers[3]) and an <= n * n:
        markers[3] = clock
    if np.isnan(markers[4]) and dn <= n:
        markers[4] = clock
    if np.isnan(markers[5]) and dn < n:
        markers[5] = clock


@njit(cache=True, nogil=True)
def _excess(n, m, x):
    return n * x - m if n * x > m else 0


@njit(cache=True, nogil=True)
def rls_run(loads, rng, strict, stop, max_events, max_clock, clock0, lim96, lim8, markers):
    """Run anonymous RLS on ``loads`` (mutated) until marker ``stop`` is hit.

    ``lim96``/``lim8`` are n * 96 ln n and n * 8 ln n.  ``markers`` receives
    first-hitting clock times (NaN when not hit).  Returns
    ``(events, clock, truncated)``.
    """
    n = loads.shape[0]
    m = 0
    for i in range(n):
        m += loads[i]
    clock = clock0
    events = 0
    mx = loads.max()
    mn = loads.min()
    hist = np.zeros(m + 2, dtype=np.int64)
    an = 0
    for i in range(n):
        hist[loads[i]] += 1
        if n * loads[i] > m:
            an += n * loads[i] - m
    _update_markers(markers, clock, n, m, mx, mn, an, lim96, lim8)
    if not np.isnan(markers[stop]):
        return events, clock, False
    if m == 0:
        return events, clock, True
    tree = fenwick_build(loads)
    gap = 2 if strict else 1
    while True:
        if events >= max_events:
            return events, clock, True
        dt = -np.log1p(-rng.random()) / m
        if clock + dt > max_clock:
            return events, max_clock, True
        clock += dt
        events += 1
        src = fenwick_find(tree, _uniform_index(rng, m))
        dst = _uniform_index(rng, n)
        a = loads[src]
        b = loads[dst]
        if a < b + gap:
            continue
        loads[src] = a - 1
        loads[dst] = b + 1
        fenwick_add(tree, src, -1)
        fenwick_add(tree, dst, 1)
        hist[a] -= 1
        hist[a - 1] += 1
        hist[b] -= 1
        hist[b + 1] += 1
        while hist[mx] == 0:
            mx -= 1
        while hist[mn] == 0:
            mn += 1
        an += _excess(n, m, a - 1) - _excess(n, m, a)
        an += _excess(n, m, b + 1) - _excess(n, m, b)
        _update_markers(markers, clock, n, m, mx, mn, an, lim96, lim8)
        if not np.isnan(markers[stop]):
            return events, clock, False


# ---------------------------------------------------------------------------
# Coupled chains of sorted (non-increasing) load vectors.


@njit(cache=True, nogil=True)
def locate(a, ball):
    """(bin, slot) of ``ball`` when balls are numbered bin by bin."""
    for i in range(a.shape[0]):
        if ball < a[i]:
            return i, ball
        ball -= a[i]
    return -1, -1


@njit(cache=True, nogil=True)
def start_of(a, i):
    s = 0
    for j in range(i):
        s += a[j]
    return s


@njit(cache=True, nogil=True)
def pair_canon(a, b):
    """Relation of sorted ``b`` to sorted ``a``.

    Returns ``(status, i_l, i_r)``: status 0 if equal, 1 if ``b`` is ``a``
    after a destructive move from ``i_r`` to ``i_l`` (``i_l < i_r``), -1 if
    the two are not close.
    """
    p = -1
    q = -1
    for i in range(a.shape[0]):
        d = b[i] - a[i]
        if d == 0:
            continue
        if d == 1 and p < 0:
            p = i
        elif d == -1 and q < 0:
            q = i
        else:
            return -1, -1, -1
    if p < 0 and q < 0:
        return 0, -1, -1
    if p < 0 or q < 0 or p > q:
        return -1, -1, -1
    return 1, p, q


@njit(cache=True, nogil=True)
def map_ball(a, b, i_l, i_r, ball):
    """Id in ``b`` of the ball that has id ``ball`` in ``a``.

    The distinguished ball is the last one in ``a``'s bin ``i_r``; it sits
    last in ``b``'s bin ``i_l``.  Every other ball keeps bin and slot.
    """
    s, u = locate(a, ball)
    if s == i_r and u == a[i_r] - 1:
        return start_of(b, i_l) + a[i_l]
    return start_of(b, s) + u


@njit(cache=True, nogil=True)
def sorted_rls_move(a, src, dst, gap):
    """Apply the RLS rule src -> dst to sorted ``a`` keeping it sorted."""
    x = a[src]
    y = a[dst]
    if x < y + gap:
        return False
    if x == y + 1:
        # neutral: the sorted vector does not change
        return True
    n = a.shape[0]
    p = src
    while p + 1 < n and a[p + 1] == x:
        p += 1
    q = dst
    while q > 0 and a[q - 1] == y:
        q -= 1
    a[p] -= 1
    a[q] += 1
    return True


@njit(cache=True, nogil=True)
def sorted_destructive(a, src, dst):
    """Apply a destructive move to sorted ``a``; False if not destructive."""
    if src == dst or a[src] < 1:
        return False
    x = a[src]
    y = a[dst]
    if x > y + 1:
        return False
    if x == y + 1:
        return True
    n = a.shape[0]
    p = src
    while p + 1 < n and a[p + 1] == x:
        p += 1
    q = dst
    while q > 0 and a[q - 1] == y:
        q -= 1
    a[p] -= 1
    a[q] += 1
    return True


@njit(cache=True, nogil=True)
def chain_step(chain, k_len, ball0, dest, gap, balls, pre_x, pre_y, moved):
    """One shared activation for every member of a coupled chain.

    Member 0 activates ``ball0``; each later member activates the image of
    its predecessor's ball under the pair coupling; all share ``dest``.
    Returns -1 if every consecutive pair is still close, else the index of
    the first broken pair.
    """
    balls[0] = ball0
    for k in range(k_len - 1):
        st, i_l, i_r = pair_canon(chain[k], chain[k + 1])
        if st < 0:
            return k
        if st == 0:
            balls[k + 1] = balls[k]
        else:
            balls[k + 1] = map_ball(chain[k], chain[k + 1], i_l, i_r, balls[k])
    for k in range(k_len):
        s, _ = locate(chain[k], balls[k])
        pre_x[k] = chain[k][s]
        pre_y[k] = chain[k][dest]
        moved[k] = sorted_rls_move(chain[k], s, dest, gap)
    for k in range(k_len - 1):
        st, _, _ = pair_canon(chain[k], chain[k + 1])
        if st < 0:
            return k
    return -1


@njit(cache=True, nogil=True)
def dedupe(chain, k_len):
    """Drop members equal to their predecessor; returns the new length."""
    n = chain.shape[1]
    out = 1
    for k in range(1, k_len):
        same = True
        for i in range(n):
            if chain[k][i] != chain[out - 1][i]:
                same = False
                break
        if not same:
            if out != k:
                chain[out][:] = chain[k]
            out += 1
    return out


@njit(cache=True, nogil=True)
def _disc_n(a, m):
    n = a.shape[0]
    return max(n * a[0] - m, m - n * a[n - 1])


@njit(cache=True, nogil=True)
def _first_of(a, v):
    for i in range(a.shape[0]):
        if a[i] == v:
            return i
    return -1


@njit(cache=True, nogil=True)
def _last_of(a, v):
    for i in range(a.shape[0] - 1, -1, -1):
        if a[i] == v:
            return i
    return -1


# schedule kinds understood by dominance_run
SCHED_NONE = 0
SCHED_PILEUP = 1
SCHED_REVERT = 2
SCHED_RANDOM = 3
SCHED_SCRIPT = 4

# error codes
OK = 0
ERR_CLOSENESS = 1
ERR_NOT_DESTRUCTIVE = 2
ERR_CHAIN_FULL = 3


@njit(cache=True, nogil=True)
def _push_destructive(chain, k_len, src, dst):
    """Append last member + destructive move; returns new length or an error."""
    if k_len == chain.shape[0]:
        return -ERR_CHAIN_FULL
    chain[k_len][:] = chain[k_len - 1]
    if not sorted_destructive(chain[k_len], src, dst):
        return -ERR_NOT_DESTRUCTIVE
    st, _, _ = pair_canon(chain[k_len - 1], chain[k_len])
    if st < 0:
        return -ERR_CLOSENESS
    return k_len + 1


@njit(cache=True, nogil=True)
def dominance_run(init, rng, adv_rng, gap, steps, kind, every, prob, script,
                  max_chain, diag, pre_rows):
    """Couple plain RLS with an adversarial run through a chain of processes.

    Member 0 is the adversary-free process, the last member carries every
    destructive move so far, and consecutive members are kept close by the
    pair coupling.  On error ``diag`` (int64[6]) receives event, pair index,
    ball, dest, move src, move dst, and ``pre_rows`` the offending rows.

    Returns (error, events, disc_violations, pair_disc_violations,
    max_chain_len, adversary_moves).
    """
    n = init.shape[0]
    m = 0
    for i in range(n):
        m += init[i]
    chain = np.zeros((max_chain, n), dtype=np.int64)
    chain[0][:] = init
    prev = np.zeros((max_chain, n), dtype=np.int64)
    k_len = 1
    balls = np.zeros(max_chain, dtype=np.int64)
    pre_x = np.zeros(max_chain, dtype=np.int64)
    pre_y = np.zeros(max_chain, dtype=np.int64)
    moved = np.zeros(max_chain, dtype=np.bool_)
    disc_viol = 0
    pair_viol = 0
    longest = 1
    adv_moves = 0
    script_pos = 0
    e = -1
    # scripted moves tagged -1 act on the initial configuration
    while kind == SCHED_SCRIPT and script_pos < script.shape[0] and script[script_pos, 0] < 0:
        src = script[script_pos, 1]
        dst = script[script_pos, 2]
        script_pos += 1
        pre_rows[0][:] = chain[k_len - 1]
        res = _push_destructive(chain, k_len, src, dst)
        if res < 0:
            diag[0] = e
            diag[4] = src
            diag[5] = dst
            return -res, 0, disc_viol, pair_viol, longest, adv_moves
        k_len = dedupe(chain, res)
        adv_moves += 1
    if k_len > longest:
        longest = k_len
    for e in range(steps):
        # one shared holding time; its value is irrelevant to the comparison
        rng.random()
        ball = _uniform_index(rng, m)
        dest = _uniform_index(rng, n)
        prev[:k_len] = chain[:k_len]
        bad = chain_step(chain, k_len, ball, dest, gap, balls, pre_x, pre_y, moved)
        if bad >= 0:
            diag[0] = e
            diag[1] = bad
            diag[2] = balls[bad]
            diag[3] = dest
            pre_rows[0][:] = prev[bad]
            pre_rows[1][:] = prev[bad + 1]
            return ERR_CLOSENESS, e, disc_viol, pair_viol, longest, adv_moves
        # the adversary acts on the last member, the fully adversarial process
        n_moves = 0
        while True:
            last = chain[k_len - 1]
            src = -1
            dst = -1
            if kind == SCHED_PILEUP:
                if n_moves == 0 and n >= 2 and (e + 1) % every == 0:
                    # least loaded non-empty bin onto the most loaded one
                    src = n - 1
                    while last[src] == 0:
                        src -= 1
                    dst = 0
                    if src == 0:
                        src = -1
            elif kind == SCHED_REVERT:
                if n_moves == 0 and moved[k_len - 1] and pre_x[k_len - 1] != pre_y[k_len - 1] + 1:
                    src = _last_of(last, pre_y[k_len - 1] + 1)
                    dst = _first_of(last, pre_x[k_len - 1] - 1)
            elif kind == SCHED_RANDOM:
                if n >= 2 and adv_rng.random() < prob:
                    i = _uniform_index(adv_rng, n)
                    j = _uniform_index(adv_rng, n - 1)
                    if j >= i:
                        j += 1
                    if last[i] >= 1 and last[i] <= last[j] + 1:
                        src = i
                        dst = j
                    elif last[j] >= 1 and last[j] <= last[i] + 1:
                        src = j
                        dst = i
            elif kind == SCHED_SCRIPT:
                if script_pos < script.shape[0] and script[script_pos, 0] == e:
                    src = script[script_pos, 1]
                    dst = script[script_pos, 2]
                    script_pos += 1
            if src < 0:
                break
            pre_rows[0][:] = last
            res = _push_destructive(chain, k_len, src, dst)
            if res < 0:
                diag[0] = e
                diag[1] = k_len - 1
                diag[4] = src
                diag[5] = dst
                return -res, e, disc_viol, pair_viol, longest, adv_moves
            k_len = res
            adv_moves += 1
            n_moves += 1
        if k_len > longest:
            longest = k_len
        for k in range(k_len - 1):
            if _disc_n(chain[k], m) > _disc_n(chain[k + 1], m):
                pair_viol += 1
        if _disc_n(chain[0], m) > _disc_n(chain[k_len - 1], m):
            disc_viol += 1
        k_len = dedupe(chain, k_len)
    return OK, steps, disc_viol, pair_viol, longest, adv_moves


@njit(cache=True, nogil=True)
def rls_batch(init, rng, strict, stop, runs, max_events, lim96, lim8, times, truncated):
    """``runs`` independent replicates from ``init`` drawing on one stream.

    ``times[r]`` receives the hitting time of marker ``stop`` (NaN when the
    replicate hit ``max_events``).
    """
    n = init.shape[0]
    loads = np.empty(n, dtype=np.int64)
    markers = np.empty(N_MARKERS)
    for r in range(runs):
        loads[:] = init
        markers[:] = np.nan
        _, clock, trunc = rls_run(loads, rng, strict, stop, max_events, np.inf, 0.0, lim96, lim8, markers)
        truncated[r] = trunc
        times[r] = np.nan if trunc else clock


@njit(cache=True, nogil=True)
def two_choice_fill(n, m, rng):
    """Place m balls, each into the lesser loaded of two uniform bins (ties to the first)."""
    loads = np.zeros(n, dtype=np.int64)
    for _ in range(m):
        i = _uniform_index(rng, n)
        j = _uniform_index(rng, n)
        if loads[j] < loads[i]:
            i = j
        loads[i] += 1
    return loads
