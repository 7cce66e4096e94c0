"""q-graded fermionic sums and their quadratic forms.

Conventions: counts n are sparse maps (a, i) -> multiplicity with 1-based
node a and level i >= 0 (level-0 entries are admitted and contribute nothing
to any sum); weights lam are length-r tuples of nonnegative integers; mode
vectors m are r x k arrays m[a-1][i-1].  All sums are stored in the inverse-q
normalization: the exponent of u equals 2 * delta * Q(m, n).
"""

import itertools

from .coeffring import ULaurent, qbinom, _qbinom_raw, _mul_raw, _add_raw
from . import packed
from . import modeval


class OddParity(Exception):
    """Quadratic form failed to be an integer (signals a bug upstream)."""


def _nspec_items(n):
    """Sorted (a, i, count) triples with zero counts and level 0 dropped."""
    return sorted((a, i, c) for (a, i), c in n.items() if c and i >= 1)


def total_spin(data, lam, n, m):
    """q_{a,0} = ell_a + sum_j j * ((cbar m_j)_a - n_{a,j})."""
    r = data.rank
    k = len(m[0]) if m else 0
    out = []
    for a in range(r):
        s = lam[a]
        for j in range(1, k + 1):
            s += j * sum(data.cbar[a][b] * m[b][j - 1] for b in range(r))
        for (aa, j, c) in _nspec_items(n):
            if aa == a + 1:
                s -= j * c
        out.append(s)
    return tuple(out)


def vacancy(data, n, m, k):
    """p_{a,i} = sum_j min(i,j) * (n_{a,j} - (cbar m_j)_a), i = 1..k."""
    r = data.rank
    km = len(m[0]) if m else 0
    p = [[0] * k for _ in range(r)]
    for a in range(r):
        for i in range(1, k + 1):
            s = 0
            for (aa, j, c) in _nspec_items(n):
                if aa == a + 1:
                    s += min(i, j) * c
            for j in range(1, km + 1):
                s -= min(i, j) * sum(
                    data.cbar[a][b] * m[b][j - 1] for b in range(r)
                )
            p[a][i - 1] = s
    return tuple(tuple(row) for row in p)


def modified_vacancy(data, lam, n, m, k):
    """q_{a,i} = q_{a,0} + p_{a,i}."""
    q0 = total_spin(data, lam, n, m)
    p = vacancy(data, n, m, k)
    return tuple(
        tuple(q0[a] + p[a][i] for i in range(k)) for a in range(data.rank)
    )


def quadratic_form(data, m, n, k):
    """Q^(k)(m, n) = (1/2) sum t_a min(i,j) m_{a,i} ((cbar m_j)_a - 2 n_{a,j})."""
    r = data.rank
    twice = 0
    for a in range(r):
        for i in range(1, k + 1):
            mai = m[a][i - 1]
            if not mai:
                continue
            for j in range(1, k + 1):
                cm = sum(data.cbar[a][b] * m[b][j - 1] for b in range(r))
                twice += data.tvee[a] * min(i, j) * mai * cm
            for (aa, j, c) in _nspec_items(n):
                if aa == a + 1:
                    twice -= 2 * data.tvee[a] * min(i, j) * mai * c
    if twice % 2:
        raise OddParity("quadratic form is not an integer")
    return twice // 2


def aux_forms(data, n, k):
    """Auxiliary Lambda-quadratic forms of a (possibly extended) count vector.

    Returns a dict with:
      Lk   - sum over levels 1..k of min(i,j) n_i . Lambda n_j
      L    - same with all positive levels included
      Fhat - sum_{a,b,i>=0} Lambda_ab n_{a,i} (level-0 entries included)
      Lhat - sum over all levels i,j >= 0 (level-0 terms vanish)
    """
    r = data.rank
    items_pos = [(a, i, c) for (a, i), c in n.items() if c and i >= 1]
    fhat = sum(
        data.lam[a - 1][b] * c for (a, i), c in n.items() if c for b in range(r)
    )

    def lform(items):
        s = 0
        for (a1, i1, c1) in items:
            for (a2, i2, c2) in items:
                s += min(i1, i2) * c1 * c2 * data.lam[a1 - 1][a2 - 1]
        return s

    return {
        "Lk": lform([(a, i, c) for (a, i, c) in items_pos if i <= k]),
        "L": lform(items_pos),
        "Fhat": fhat,
        "Lhat": lform(items_pos),
    }


def solve_zero_weight(data, lam, n):
    """m-bar = inverse(cbar) @ (sum_i i*n_i - lam), when a nonnegative
    integer vector; otherwise None (the associated sums are zero)."""
    r = data.rank
    rhs = [-lam[a] for a in range(r)]
    for (a, i, c) in _nspec_items(n):
        rhs[a - 1] += i * c
    # exact solve via the integer adjugate: delta * cbar^{-1} has integer
    # entries delta * tvee^{-1}-scaled... use lam matrix: Lambda = delta T C^-1
    # so C^-1 = Lambda / (delta * tvee) row-wise
    mbar = []
    for a in range(r):
        num = sum(data.lam[a][b] * rhs[b] for b in range(r))
        den = data.delta * data.tvee[a]
        if num % den:
            return None
        mbar.append(num // den)
    if any(x < 0 for x in mbar):
        return None
    # paranoia: verify against cbar directly
    for a in range(r):
        assert sum(data.cbar[a][b] * mbar[b] for b in range(r)) == rhs[a]
    return tuple(mbar)


def _node_partitions(total, k):
    """All (m_1..m_k) >= 0 with sum i*m_i == total, ascending lex order."""
    out = []

    def rec(level, rem, pref):
        if level == k:
            if rem == 0:
                out.append(tuple(pref))
            return
        if level == k - 1:
            if rem % k == 0:
                out.append(tuple(pref + [rem // k]))
            return
        for v in range(rem // (level + 1) + 1):
            rec(level + 1, rem - v * (level + 1), pref + [v])

    rec(0, total, [])
    return out


def enumerate_modes(data, lam, n, k):
    """Stream every mode vector with zero total spin, in lexicographic order.

    Yields r x k tuples m with sum_i i*m[a][i-1] == mbar_a for every node.
    """
    mbar = solve_zero_weight(data, lam, n)
    if mbar is None:
        return
    per_node = [_node_partitions(mbar[a], k) for a in range(data.rank)]
    for combo in itertools.product(*per_node):
        yield tuple(combo)


def msum(data, lam, n, k, restricted):
    """The fermionic sum over zero-spin modes at cutoff k, as a ULaurent.

    restricted=True keeps only modes with all vacancy numbers p_{a,i} >= 0;
    restricted=False evaluates every mode (negative-argument Gaussian
    binomials supply the signs).  Exponent of u is 2*delta*Q(m, n).
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    mbar = solve_zero_weight(data, lam, n)
    if mbar is None:
        return ULaurent.zero()
    if restricted:
        raw = _msum_restricted_dp(data, lam, n, k, mbar)
    else:
        raw = _msum_chain_dp(data, lam, n, k, mbar)
    return ULaurent._raw(raw)


def msum_by_enumeration(data, lam, n, k, restricted):
    """Direct streamed evaluation over enumerate_modes (small-case oracle)."""
    total = {}
    dt = 2 * data.delta
    for m in enumerate_modes(data, lam, n, k):
        q = modified_vacancy(data, lam, n, m, k)
        if restricted and any(x < 0 for row in q for x in row):
            continue
        term = {dt * quadratic_form(data, m, n, k): 1}
        ok = True
        for a in range(data.rank):
            va = dt * data.tvee[a]
            for i in range(k):
                if m[a][i] or q[a][i] < 0:
                    qb = _qbinom_raw(m[a][i], q[a][i], va)
                    if not qb:
                        ok = False
                        break
                    term = _mul_raw(term, dict(qb))
            if not ok:
                break
        if ok:
            total = _add_raw(total, term)
    return ULaurent._raw(total)


def _level_data(data, n, k):
    """Per-level count summaries: N[a][s-1] = sum_j (j-s)^+ n_{a,j} and
    nu[a][s-1] = sum_{j>=s} n_{a,j}, for s = 1..k."""
    r = data.rank
    items = _nspec_items(n)
    nmat = [
        [sum(max(0, j - s) * c for (aa, j, c) in items if aa == a + 1)
         for s in range(1, k + 1)]
        for a in range(r)
    ]
    numat = [
        [sum(c for (aa, j, c) in items if aa == a + 1 and j >= s)
         for s in range(1, k + 1)]
        for a in range(r)
    ]
    return nmat, numat


def _msum_restricted_dp(data, lam, n, k, mbar):
    """Level-major dynamic program over column counts of the mode partitions.

    State after processing levels k..s+1: (sigma_{s+1}, P_{s+1}) where
    sigma_s[a] = sum_{i>=s} m_{a,i} and P_s[a] = sum_{s'>=s} sigma_{s'}[a].
    The modified vacancy at level s is q_s = lam + cbar @ P_{s+1} - N_{s+1},
    which depends only on the state, so states with any q_s < 0 are pruned
    before branching; at s = 1 the column sigma_1 is forced by the totals.
    """
    r = data.rank
    cbar = data.cbar
    tvee = data.tvee
    delta = data.delta
    nmat, numat = _level_data(data, n, k)
    ve = [2 * delta * tvee[a] for a in range(r)]
    zero = tuple([0] * r)
    states = {(zero, zero): {0: 1}}
    for s in range(k, 0, -1):
        new = {}
        for (sig1, p1), val in states.items():
            qs = [
                lam[a]
                + sum(cbar[a][b] * p1[b] for b in range(r))
                - nmat[a][s - 1]
                for a in range(r)
            ]
            if any(x < 0 for x in qs):
                continue
            rem = [mbar[a] - p1[a] for a in range(r)]
            if s == 1:
                if any(rem[a] < sig1[a] for a in range(r)):
                    continue
                choices = [tuple(rem)]
            else:
                hi = [rem[a] // s for a in range(r)]
                if any(hi[a] < sig1[a] for a in range(r)):
                    continue
                choices = itertools.product(
                    *[range(sig1[a], hi[a] + 1) for a in range(r)]
                )
            for sig in choices:
                fac = {0: 1}
                ok = True
                for a in range(r):
                    qb = _qbinom_raw(sig[a] - sig1[a], qs[a], ve[a])
                    if not qb:
                        ok = False
                        break
                    if qb != ((0, 1),):
                        fac = _mul_raw(fac, dict(qb))
                if not ok:
                    continue
                e = 0
                for a in range(r):
                    if sig[a]:
                        e += sig[a] * (
                            tvee[a]
                            * sum(cbar[a][b] * sig[b] for b in range(r))
                            - 2 * tvee[a] * numat[a][s - 1]
                        )
                e *= delta
                term = _mul_raw(val, {ee + e: c for ee, c in fac.items()})
                if not term:
                    continue
                key = (sig, tuple(p1[a] + sig[a] for a in range(r)))
                if key in new:
                    new[key] = _add_raw(new[key], term)
                else:
                    new[key] = term
        states = {key: v for key, v in new.items() if v}
    total = {}
    for (sig, p), val in states.items():
        if p == mbar:
            total = _add_raw(total, val)
    return total


def _column_partitions(total, k):
    """Nonincreasing (sigma_1..sigma_k) >= 0 with sum == total (the column
    counts of a partition of `total` into parts of size <= k)."""
    out = []

    def rec(rem, maxv, pref):
        depth = len(pref)
        if depth == k:
            if rem == 0:
                out.append(tuple(pref))
            return
        slots = k - depth
        for v in range(min(maxv, rem), -1, -1):
            if v * slots < rem:
                break
            rec(rem - v, v, pref + [v])

    rec(total, total, [])
    return out


# above this estimated triple count, the packed route is slower than the
# modular multipoint route (measured on the widest rank-4 instances)
_MODEVAL_THRESHOLD = 50000


def _msum_chain_dp(data, lam, n, k, mbar):
    """Node-major dynamic program for the unrestricted sum.

    With the totals mbar fixed, the sum factorizes over the (path-shaped)
    Dynkin diagram: the state at node a is the column-count vector sigma of
    its own mode partition, and the level-s binomial argument at node a needs
    only the suffix sums P_{s+1} of the two neighboring partitions.  Messages
    flow along the path.  Small instances carry polynomial values packed into
    big integers (see the packed module) with exact digit-overflow bounds and
    retry with a wider digit when a bound is at risk; large instances run the
    same contraction by exact modular multipoint evaluation (see modeval).
    """
    nmat, numat, nodes = _chain_tables(data, n, k, mbar)
    r = data.rank
    cost = sum(
        (len(nodes[a - 1]) if a > 0 else 1)
        * len(nodes[a])
        * (len(nodes[a + 1]) if a + 1 < r else 1)
        for a in range(r)
    )
    if cost > _MODEVAL_THRESHOLD:
        return modeval.chain_modular(data, lam, nmat, numat, nodes, k)
    bits = 64
    while True:
        try:
            return _chain_pass(data, lam, nmat, numat, nodes, k, bits)
        except packed.DigitOverflow as exc:
            bits = max(2 * bits, exc.needed_bits + 8)


def _chain_tables(data, n, k, mbar):
    """Level data plus the per-node partition tables shared by both chain
    backends: for each column-count vector sigma of a partition of mbar[a],
    the suffix sums P_{s+1}, the part multiplicities, the levels where they
    are nonzero, and the diagonal exponent contribution."""
    r = data.rank
    cbar = data.cbar
    tvee = data.tvee
    delta = data.delta
    nmat, numat = _level_data(data, n, k)
    nodes = []
    for a in range(r):
        table = []
        for sig in _column_partitions(mbar[a], k):
            # P_s = sum_{s'>=s} sigma_{s'}; store P_{s+1} for s = 1..k
            psuf = [0] * (k + 2)
            for s in range(k, 0, -1):
                psuf[s] = psuf[s + 1] + sig[s - 1]
            pnext = tuple(psuf[s + 1] for s in range(1, k + 1))
            mvec = tuple(
                sig[s - 1] - (sig[s] if s < k else 0) for s in range(1, k + 1)
            )
            active = tuple(s for s in range(k) if mvec[s])
            ediag = delta * sum(
                tvee[a] * cbar[a][a] * sig[s] * sig[s]
                - 2 * tvee[a] * sig[s] * numat[a][s]
                for s in range(k)
            )
            table.append((sig, pnext, mvec, active, ediag))
        nodes.append(table)
    return nmat, numat, nodes


def _chain_pass(data, lam, nmat, numat, nodes, k, bits):
    r = data.rank
    cbar = data.cbar
    tvee = data.tvee
    delta = data.delta
    ve = [2 * delta * tvee[a] for a in range(r)]
    ctx = packed.Context(bits)

    fac_cache = {}
    missing = object()

    def factor(a, xi, jact):
        """Packed binomial product at node a, partition xi, given the
        neighbor contributions jact (restricted to active levels)."""
        key = (a, xi, jact)
        hit = fac_cache.get(key, missing)
        if hit is not missing:
            return hit
        sig, pnext, mvec, active, _ = nodes[a][xi]
        f = {0: 1}
        for idx, s in enumerate(active):
            q = lam[a] + cbar[a][a] * pnext[s] + jact[idx] - nmat[a][s]
            qb = _qbinom_raw(mvec[s], q, ve[a])
            if not qb:
                f = None
                break
            f = _mul_raw(f, dict(qb))
        enc = ctx.encode(f) if f else None
        fac_cache[key] = enc
        return enc

    one = ctx.encode({0: 1})
    # virtual left neighbor: single empty partition, zero coupling
    msg = {(0, xi): one for xi in range(len(nodes[0]))}
    left_tables = [[(tuple([0] * k), tuple([0] * k), None, None, 0)]] + nodes

    for a in range(r):
        ltab = left_tables[a]
        cl = cbar[a][a - 1] if a > 0 else 0
        cr = cbar[a][a + 1] if a + 1 < r else 0
        rtab = nodes[a + 1] if a + 1 < r else [(tuple([0] * k),) * 2]
        new = {}
        # group left states by their contribution to the active levels,
        # folding the left-edge exponent into a shift of the packed value
        by_x = {}
        for (zi, xi), val in msg.items():
            by_x.setdefault(xi, []).append((zi, val))
        for xi, entries in by_x.items():
            sig_x, _, _, active, ediag = nodes[a][xi]
            groups = {}
            for zi, val in entries:
                sig_z, pnext_z = ltab[zi][0], ltab[zi][1]
                jleft = tuple(cl * pnext_z[s] for s in active)
                eshift = ediag + 2 * delta * tvee[a] * cl * sum(
                    sig_z[s] * sig_x[s] for s in range(k)
                )
                cur = groups.get(jleft)
                shifted = ctx.shift(val, eshift)
                groups[jleft] = shifted if cur is None else ctx.add(cur, shifted)
            for yi in range(len(rtab)):
                pnext_y = rtab[yi][1]
                acc = None
                for jleft, gval in groups.items():
                    jact = tuple(
                        jleft[idx] + cr * pnext_y[s]
                        for idx, s in enumerate(active)
                    )
                    fenc = factor(a, xi, jact)
                    if fenc is None:
                        continue
                    prod = ctx.mul(gval, fenc)
                    acc = prod if acc is None else ctx.add(acc, prod)
                if acc is None or ctx.is_zero(acc):
                    continue
                key = (xi, yi)
                old = new.get(key)
                new[key] = acc if old is None else ctx.add(old, acc)
        msg = {key: v for key, v in new.items() if not ctx.is_zero(v)}
        if not msg:
            return {}

    total = None
    for val in msg.values():
        total = val if total is None else ctx.add(total, val)
    return ctx.decode(total) if total is not None else {}


def unrestricted_cutoff(data, lam, n):
    """Cutoff that realizes the full (uncut) sums: parts above max(mbar)
    cannot occur, so k = max(1, max_a mbar_a) is exact."""
    mbar = solve_zero_weight(data, lam, n)
    if mbar is None:
        return 1
    return max(1, max(mbar))


def recombination_counts(data, a, mlevel):
    """The three count vectors of the level-(mlevel) recombination identity
    at node a: d (split levels), s (doubled level), kvec (neighbor levels)."""
    d = {(a, mlevel - 1): 1, (a, mlevel + 1): 1}
    s = {(a, mlevel): 2}
    kvec = {(b, mlevel): mult for b, mult in data.neighbors(a)}
    return d, s, kvec


def check_thm13_identity(data, lam, a, mlevel):
    """Exact check of msum(lam, d) == msum(lam, s) - u^(-2 delta t_a m) *
    msum(lam, kvec) with each sum taken at its own exact cutoff."""
    d, s, kvec = recombination_counts(data, a, mlevel)
    vals = []
    for spec in (d, s, kvec):
        k = unrestricted_cutoff(data, lam, spec)
        vals.append(msum(data, lam, spec, k, restricted=True))
    shift = -2 * data.delta * data.tvee[a - 1] * mlevel
    return vals[0] == vals[1] - vals[2].shift(shift)


def c_mbar(data, m):
    """C_mbar = sum_a t_a * mbar_a with mbar_a = sum_i i*m_{a,i}."""
    return sum(
        data.tvee[a] * sum((i + 1) * m[a][i] for i in range(len(m[a])))
        for a in range(data.rank)
    )


def deg_h0(data, m, n, k):
    """Total degree of the prefactor rational function, from the explicit
    sum over pairs of multipartition parts, count factors, and neighbor
    factors with exponent max(t_a, t_b) per adjacent part pair."""
    parts = [
        [i for i in range(1, k + 1) for _ in range(m[a][i - 1])]
        for a in range(data.rank)
    ]
    total = 0
    for a in range(data.rank):
        ta = data.tvee[a]
        pa = parts[a]
        # ordered pairs of distinct parts within one node, counted once
        for x in range(len(pa)):
            for y in range(x + 1, len(pa)):
                total += 2 * ta * min(pa[x], pa[y])
        # count factors
        for (aa, j, c) in _nspec_items(n):
            if aa == a + 1:
                for i in pa:
                    total -= ta * min(i, j) * c
        # neighbor factors, each unordered edge once (a < b)
        for b in range(a + 1, data.rank):
            if data.cbar[a][b] < 0:
                kab = max(ta, data.tvee[b])
                for i in pa:
                    for j in parts[b]:
                        total -= kab * min(i, j)
    return total


def mode_to_multipartition(m):
    """Multipartition with m_{a,i} parts of size i per node, parts
    nonincreasing."""
    return tuple(
        tuple(
            i
            for i in range(len(row), 0, -1)
            for _ in range(row[i - 1])
        )
        for row in m
    )


def multipartition_to_mode(mu, k):
    """Inverse of mode_to_multipartition at cutoff k."""
    out = []
    for part_list in mu:
        row = [0] * k
        for i in part_list:
            if not 1 <= i <= k:
                raise ValueError(f"part size {i} outside 1..{k}")
            row[i - 1] += 1
        out.append(tuple(row))
    return tuple(out)
