"""Exact large-instance evaluation of the node-chain sum by modular points.

The chain dynamic program of the fermionic module is linear in its
polynomial values, so it commutes with evaluating everything at a point of
w = u^2 modulo a prime.  A structural pre-pass flattens the whole
contraction into per-stage index arrays and computes a sound interval
[lo, hi] (in powers of w) containing every exponent of the final result
together with a sound bound H on the sum of absolute values of its
coefficients.  Running the DP at hi - lo + 1 points per prime, for enough
primes that their product exceeds 2H, then interpolating and lifting with
balanced residues, reconstructs the exact polynomial.  All heavy work is
vectorized over flat pair arrays and the points axis.

Binomial factors with negative second argument are reduced to nonnegative
ones through qbinom(m, q, v) = (-1)^m v^(mq + m(m+1)/2) qbinom(m, -q-m-1, v),
so only binomials with nonnegative arguments are ever tabulated.
"""

import math

import numpy as np

from .coeffring import _qbinom_raw

_PRIME_CAP = 1 << 25  # keeps products below 2**50 and segment sums in int64


def _primes_desc():
    n = _PRIME_CAP - 1
    while n > 3:
        if n % 2 and all(n % d for d in range(3, int(n ** 0.5) + 1, 2)):
            yield n
        n -= 1


def chain_modular(data, lam, nmat, numat, nodes, k):
    """Exact unrestricted chain sum; returns a term dict exponent -> int."""
    plan = _Plan(data, lam, nmat, nodes, k)
    if plan.empty:
        return {}
    need = 2 * plan.height + 1
    primes = []
    mod_prod = 1
    for p in _primes_desc():
        primes.append(p)
        mod_prod *= p
        if mod_prod > need:
            break
    residues = [plan.eval_mod(p) for p in primes]
    return _lift(residues, primes, plan.flo)


class _Plan:
    """Flattened stages of one chain contraction, plus sound bounds.

    Stage arrays (all numpy, one set per node):
      member_row, member_shift, member_starts -- incoming value rows, their
        w-exponent shifts, and reduceat boundaries grouping them by
        (node state, left coupling);
      pair_g, pair_bins, pair_starts -- for every (group, right coupling)
        product: the group row, the tabulated binomial ids per level
        (0 = constant one; reflected binomials carry their sign and shift
        inside the table row), and reduceat boundaries grouping the pairs
        by output row.
    """

    def __init__(self, data, lam, nmat, nodes, k):
        r = data.rank
        cbar = data.cbar
        tvee = data.tvee
        delta = data.delta
        self.empty = False
        self.stages = []
        self.bin_keys = {(0, 0, 0): 0}  # (m, p', vh) -> id; id 0 is the unit
        bin_list = [(0, 0, 0)]
        self.wmin = 0
        self.wmax = 0

        # per-node tables as arrays (w-exponent units throughout)
        tabs = []
        for a in range(r):
            tab = nodes[a]
            sig = np.array([t[0] for t in tab], dtype=np.int64)
            pnext = np.array([t[1] for t in tab], dtype=np.int64)
            mvec = np.array([t[2] for t in tab], dtype=np.int64)
            ediag = np.array([t[4] for t in tab], dtype=np.int64)
            if (ediag & 1).any():
                raise AssertionError("odd diagonal exponent")
            baseq = lam[a] + cbar[a][a] * pnext - np.array(
                nmat[a], dtype=np.int64
            )
            tabs.append((sig, pnext, mvec, ediag >> 1, baseq))

        # incoming state: one shared row of value one feeding every x
        row_lo = np.zeros(1, dtype=np.int64)
        row_hi = np.zeros(1, dtype=np.int64)
        row_abs = np.ones(1, dtype=np.float64)
        x_count = len(nodes[0])
        mem_row = np.zeros(x_count, dtype=np.int64)
        mem_zi = np.zeros(x_count, dtype=np.int64)
        mem_xi = np.arange(x_count, dtype=np.int64)

        for a in range(r):
            sig, pnext, mvec, ediagh, baseq = tabs[a]
            zsig = tabs[a - 1][0] if a > 0 else np.zeros((1, k), dtype=np.int64)
            zpn = tabs[a - 1][1] if a > 0 else np.zeros((1, k), dtype=np.int64)
            ypn = tabs[a + 1][1] if a + 1 < r else np.zeros((1, k), dtype=np.int64)
            cl = cbar[a][a - 1] if a > 0 else 0
            cr = cbar[a][a + 1] if a + 1 < r else 0
            vh = delta * tvee[a]
            actmask = mvec != 0

            # membership: shift and grouping key (xi, masked left coupling)
            edge = np.einsum("ms,ms->m", zsig[mem_zi], sig[mem_xi])
            shift = ediagh[mem_xi] + delta * tvee[a] * cl * edge
            jl = cl * zpn[mem_zi] * actmask[mem_xi]
            gkey = np.column_stack([mem_xi, jl])
            guniq, ginv = np.unique(gkey, axis=0, return_inverse=True)
            order = np.argsort(ginv, kind="stable")
            mrow = mem_row[order]
            mshift = shift[order]
            ginv_s = ginv[order]
            gstarts = np.flatnonzero(
                np.r_[True, ginv_s[1:] != ginv_s[:-1]]
            )
            n_groups = len(guniq)
            g_xi = guniq[:, 0]
            g_jl = guniq[:, 1:]

            # group bounds
            mlo = row_lo[mrow] + mshift
            mhi = row_hi[mrow] + mshift
            g_lo = np.minimum.reduceat(mlo, gstarts)
            g_hi = np.maximum.reduceat(mhi, gstarts)
            g_abs = np.add.reduceat(row_abs[mrow], gstarts)

            # pairs: every group against every distinct right coupling of
            # its own activity pattern
            y_count = len(ypn)
            jr_full = cr * ypn  # (Y, k)
            pat_of_x = actmask
            pair_chunks = []
            rowmaps = []  # (xi array, y -> local out col, col base)
            n_out = 0
            out_lo, out_hi, out_abs = [], [], []
            pats, pinv = np.unique(pat_of_x[g_xi], axis=0, return_inverse=True)
            for pi in range(len(pats)):
                gsel = np.flatnonzero(pinv == pi)
                pat = pats[pi].astype(bool)
                jr_pat = jr_full * pat
                jru, yinv = np.unique(jr_pat, axis=0, return_inverse=True)
                n_jr = len(jru)
                pg = np.repeat(gsel, n_jr)
                pj = np.tile(np.arange(n_jr, dtype=np.int64), len(gsel))
                jact = g_jl[pg] + jru[pj]  # (P, k)
                q = baseq[g_xi[pg]] + jact
                m = mvec[g_xi[pg]]
                dead = ((m > 0) & (q < 0) & (-q <= m)).any(axis=1)
                live = ~dead
                pg, pj, q, m = pg[live], pj[live], q[live], m[live]
                if len(pg) == 0:
                    continue
                # binomial ids per level (id 0 when m == 0); reflected
                # binomials carry their sign and w-shift inside the table
                enc = np.where(m > 0, m * (1 << 41) + q + (1 << 40), 0)
                uenc, einv = np.unique(enc, return_inverse=True)
                ids = np.empty(len(uenc), dtype=np.int64)
                ulo = np.empty(len(uenc), dtype=np.int64)
                uhi = np.empty(len(uenc), dtype=np.int64)
                uabs = np.empty(len(uenc), dtype=np.float64)
                for i, code in enumerate(uenc):
                    code = int(code)
                    if code == 0:
                        ids[i] = 0
                        ulo[i] = uhi[i] = 0
                        uabs[i] = 1.0
                        continue
                    mm_ = code >> 41
                    qq = code % (1 << 41) - (1 << 40)
                    key = (mm_, qq, vh)
                    bid = self.bin_keys.get(key)
                    if bid is None:
                        bid = len(bin_list)
                        self.bin_keys[key] = bid
                        bin_list.append(key)
                    ids[i] = bid
                    if qq >= 0:
                        ulo[i] = 0
                        uhi[i] = vh * mm_ * qq
                        uabs[i] = float(math.comb(mm_ + qq, mm_))
                    else:
                        pp = -qq - mm_ - 1
                        refl = vh * (mm_ * qq + mm_ * (mm_ + 1) // 2)
                        ulo[i] = refl
                        uhi[i] = refl + vh * mm_ * pp
                        uabs[i] = float(math.comb(mm_ + pp, mm_))
                pbins = ids[einv].reshape(q.shape)
                p_lo = g_lo[pg] + ulo[einv].reshape(q.shape).sum(axis=1)
                p_hi = g_hi[pg] + uhi[einv].reshape(q.shape).sum(axis=1)
                fabs = uabs[einv].reshape(q.shape).prod(axis=1)
                p_abs = g_abs[pg] * fabs * 1.0000000001

                # output rows: one per (xi, right-coupling class)
                okey = g_xi[pg] * (n_jr + 1) + pj
                ouniq, oinv = np.unique(okey, return_inverse=True)
                oorder = np.argsort(oinv, kind="stable")
                pg, pj = pg[oorder], pj[oorder]
                pbins = pbins[oorder]
                p_lo, p_hi, p_abs = p_lo[oorder], p_hi[oorder], p_abs[oorder]
                oinv_s = oinv[oorder]
                ostarts = np.flatnonzero(np.r_[True, oinv_s[1:] != oinv_s[:-1]])
                out_lo.append(np.minimum.reduceat(p_lo, ostarts))
                out_hi.append(np.maximum.reduceat(p_hi, ostarts))
                out_abs.append(np.add.reduceat(p_abs, ostarts))
                pair_chunks.append((pg, pbins, ostarts, n_out))
                # map (xi, yi) -> global out row for the next stage
                o_xi = ouniq // (n_jr + 1)
                o_jr = ouniq % (n_jr + 1)
                colmap = {}
                for idx in range(len(ouniq)):
                    colmap[(int(o_xi[idx]), int(o_jr[idx]))] = n_out + idx
                rowmaps.append((colmap, yinv))
                n_out += len(ouniq)
            if n_out == 0:
                self.empty = True
                return

            # assemble the stage
            pair_g = np.concatenate([c[0] for c in pair_chunks])
            pair_bins = np.concatenate([c[1] for c in pair_chunks])
            # cluster unit factors in the trailing columns so the eval can
            # skip whole columns per chunk
            pair_bins = -np.sort(-pair_bins, axis=1)
            starts = []
            off = 0
            for c in pair_chunks:
                starts.append(c[2] + off)
                off += len(c[0])
            pair_starts = np.concatenate(starts)
            self.stages.append((mrow, mshift, gstarts, pair_g, pair_bins,
                                pair_starts))
            self.wmin = min(self.wmin, int(mshift.min()))
            self.wmax = max(self.wmax, int(mshift.max()))

            row_lo = np.concatenate(out_lo)
            row_hi = np.concatenate(out_hi)
            row_abs = np.concatenate(out_abs)

            # next stage membership: live (zi=xi, xi'=yi) pairs
            if a + 1 < r:
                x_next = len(nodes[a + 1])
                rows2, zi2, xi2 = [], [], []
                for colmap, yinv in rowmaps:
                    for (xx, jr), rid in colmap.items():
                        for yy in np.flatnonzero(yinv == jr):
                            rows2.append(rid)
                            zi2.append(xx)
                            xi2.append(int(yy))
                mem_row = np.array(rows2, dtype=np.int64)
                mem_zi = np.array(zi2, dtype=np.int64)
                mem_xi = np.array(xi2, dtype=np.int64)
                order = np.argsort(mem_xi, kind="stable")
                mem_row, mem_zi, mem_xi = (
                    mem_row[order], mem_zi[order], mem_xi[order]
                )

        self.bin_list = bin_list
        self.flo = int(row_lo.min())
        fhi = int(row_hi.max())
        self.npts = fhi - self.flo + 1
        self.height = int(row_abs.sum() * 1.001) + 1
        # binomial table exponent ranges (reflected ones reach below zero)
        for (m, q, vh) in bin_list:
            if q >= 0:
                self.wmax = max(self.wmax, vh * m * q)
            else:
                refl = vh * (m * q + m * (m + 1) // 2)
                self.wmin = min(self.wmin, refl)
                self.wmax = max(self.wmax, refl + vh * m * (-q - m - 1))

    def eval_mod(self, p):
        """One full contraction at self.npts points of w modulo p.

        Values are held in float64: with p < 2**25 and lazy Barrett
        reduction keeping every value in (-p, 2p), all products stay below
        2**52 and all segment sums below 2**53, so every float operation is
        exact integer arithmetic."""
        npts = self.npts
        pf = float(p)
        pinv = 1.0 / p

        def mm(x):
            # lazy Barrett: exact x mod p up to a multiple of p, in (-p, 2p)
            return x - np.floor(x * pinv) * pf

        def segsum(arr, starts):
            # segment sums over contiguous row ranges via prefix sums
            n = arr.shape[0]
            cs = np.empty((n + 1, arr.shape[1]), dtype=np.float64)
            cs[0] = 0.0
            np.cumsum(arr, axis=0, out=cs[1:])
            ends = np.empty(len(starts), dtype=np.int64)
            ends[:-1] = starts[1:]
            ends[-1] = n
            return cs[ends] - cs[starts]

        pts = np.arange(1, npts + 1, dtype=np.int64) % p
        # table of w^e for e in [wmin, wmax], one row per exponent
        lo, hi = self.wmin, self.wmax
        w_int = np.empty((hi - lo + 1, npts), dtype=np.int64)
        w_int[-lo] = np.ones(npts, dtype=np.int64)
        for e in range(-lo + 1, hi - lo + 1):
            w_int[e] = w_int[e - 1] * pts % p
        if lo < 0:
            inv = np.array([pow(int(x), -1, p) for x in pts], dtype=np.int64)
            for e in range(-lo - 1, -1, -1):
                w_int[e] = w_int[e + 1] * inv % p

        btab = np.empty((len(self.bin_list), npts), dtype=np.float64)
        btab[0] = 1.0
        for i, (m, q, vh) in enumerate(self.bin_list):
            if i == 0:
                continue
            acc = np.zeros(npts, dtype=np.int64)
            for e, c in _qbinom_raw(m, q, 2 * vh):
                acc += (c % p) * w_int[e // 2 - lo] % p
            btab[i] = acc % p
        w_table = w_int.astype(np.float64)
        del w_int

        # cache-resident pair chunks with preallocated scratch buffers
        chunk = max(1, (1 << 18) // npts)
        fbuf = np.empty((chunk, npts), dtype=np.float64)
        gbuf = np.empty((chunk, npts), dtype=np.float64)
        tbuf = np.empty((chunk, npts), dtype=np.float64)
        cbuf = np.empty((chunk + 1, npts), dtype=np.float64)

        def mulmod_into(f, other, t):
            # f <- f * other mod p (lazy range), all in place
            np.multiply(f, other, out=f)
            np.multiply(f, pinv, out=t)
            np.floor(t, out=t)
            t *= pf
            f -= t

        vals = np.ones((1, npts), dtype=np.float64)
        for (mrow, mshift, gstarts, pair_g, pair_bins,
             pair_starts) in self.stages:
            mv = mm(vals[mrow] * w_table[mshift - lo])
            g = mm(segsum(mv, gstarts))
            n_seg = len(pair_starts)
            n_pairs = len(pair_g)
            ncol = pair_bins.shape[1]
            vals = np.empty((n_seg, npts), dtype=np.float64)
            seg = 0
            while seg < n_seg:
                lo_p = int(pair_starts[seg])
                end = int(np.searchsorted(pair_starts, lo_p + chunk, "right"))
                end = max(end, seg + 1)
                hi_p = int(pair_starts[end]) if end < n_seg else n_pairs
                sl = slice(lo_p, hi_p)
                rows = hi_p - lo_p
                if rows > fbuf.shape[0]:  # single oversized segment
                    fbuf = np.empty((rows, npts), dtype=np.float64)
                    gbuf = np.empty((rows, npts), dtype=np.float64)
                    tbuf = np.empty((rows, npts), dtype=np.float64)
                    cbuf = np.empty((rows + 1, npts), dtype=np.float64)
                f = fbuf[:rows]
                t = tbuf[:rows]
                gr = gbuf[:rows]
                g.take(pair_g[sl], axis=0, out=f)
                for col in range(ncol):
                    bc = pair_bins[sl, col]
                    if bc.max() == 0:  # all unit factors in this chunk
                        continue
                    btab.take(bc, axis=0, out=gr)
                    mulmod_into(f, gr, t)
                cs = cbuf[: rows + 1]
                cs[0] = 0.0
                np.cumsum(f, axis=0, out=cs[1:])
                starts = pair_starts[seg:end] - lo_p
                ends = np.empty(end - seg, dtype=np.int64)
                ends[:-1] = starts[1:]
                ends[-1] = rows
                out = vals[seg:end]
                np.subtract(cs[ends], cs[starts], out=out)
                np.multiply(out, pinv, out=tbuf[: end - seg])
                np.floor(tbuf[: end - seg], out=tbuf[: end - seg])
                out -= tbuf[: end - seg] * pf
                seg = end
        total = vals.sum(axis=0)
        total = mm(total)
        total = np.where(total < 0, total + pf, total)
        total = np.where(total >= pf, total - pf, total)
        total = total.astype(np.int64)

        # shift the Laurent values to an ordinary polynomial and interpolate
        if self.flo:
            sh = np.array(
                [pow(int(x), -self.flo, p) for x in pts], dtype=np.int64
            )
            total = total * sh % p
        return _newton_coeffs(
            [int(x) for x in pts], [int(v) for v in total], p
        )


def _newton_coeffs(xs, ys, p):
    """Coefficients (ascending) of the interpolating polynomial mod p."""
    n = len(xs)
    d = list(ys)
    for j in range(1, n):
        for i in range(n - 1, j - 1, -1):
            d[i] = (d[i] - d[i - 1]) * pow(xs[i] - xs[i - j], -1, p) % p
    acc = [d[n - 1]]
    for i in range(n - 2, -1, -1):
        nxt = [0] * (len(acc) + 1)
        for deg, c in enumerate(acc):
            nxt[deg + 1] = (nxt[deg + 1] + c) % p
            nxt[deg] = (nxt[deg] - c * xs[i]) % p
        nxt[0] = (nxt[0] + d[i]) % p
        acc = nxt
    return [c % p for c in acc]


def _lift(residue_lists, primes, flo):
    """Combine per-prime coefficient residues; balanced lift to integers.

    Exponents are in powers of w = u^2; keys of the returned dict are
    doubled back to u-exponents."""
    n = max(len(rl) for rl in residue_lists)
    mod = 1
    combined = [0] * n
    for rl, p in zip(residue_lists, primes):
        if mod == 1:
            combined = list(rl) + [0] * (n - len(rl))
            mod = p
            continue
        inv = pow(mod % p, -1, p)
        for i in range(n):
            r = rl[i] if i < len(rl) else 0
            t = (r - combined[i]) % p * inv % p
            combined[i] = combined[i] + mod * t
        mod *= p
    half = mod // 2
    out = {}
    for i, c in enumerate(combined):
        c %= mod
        if c > half:
            c -= mod
        if c:
            out[2 * (flo + i)] = c
    return out
