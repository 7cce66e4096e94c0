"""Truncated skew-Laurent series in the inverse level-1 directions, the
constant-term/evaluation functional phi, and the cross-checks tying the
solved torus recurrence to the unrestricted graded sums.

A TruncatedSeries wraps a finite TorusElem body together with two kinds of
soundness data about the terms that were dropped:

  * per-node integer floors on the Q_{a,1}-exponent (the window): every
    dropped term lies strictly below the floor at some node, so the body is
    exact on the conjunctive region above all floors;
  * optional linear tail certificates: for a positive functional v on the
    level-1 exponents, every dropped term e satisfies v . e1 <= bound.

The window suffices for single-node comparisons.  For the constant-term
checks it is too weak: geometric tails lose exponent at their own node but
gain exponent at the neighbors, so coordinatewise floors of a cross-node
product need not improve as the truncation deepens.  A functional v that is
strictly negative on every tail step direction decreases along all tails at
once; once the tracked bound is negative, no dropped term can sit at
level-1 exponent zero and phi of the body is exact.
"""

from fractions import Fraction
from itertools import product as iproduct

from .coeffring import ULaurent, qbinom
from .fermionic import msum
from .torus import TorusElem
from . import qsystem

NEG_INF = float("-inf")


class WindowTooShallow(Exception):
    """The certified truncation does not cover the requested region."""


def _q1_part(data, e):
    r = data.rank
    return e[r:]


def _dot(v, e1):
    return sum(x * y for x, y in zip(v, e1))


class TruncatedSeries:
    __slots__ = ("body", "window", "certs")

    def __init__(self, body, window, certs=None):
        data = body.data
        r = data.rank
        window = tuple(window)
        if len(window) != r:
            raise ValueError("window must have one floor per node")
        terms = {}
        pruned = []
        for e, c in body.terms.items():
            if all(e[r + a] >= window[a] for a in range(r)):
                terms[e] = c
            else:
                pruned.append(e)
        self.body = TorusElem._raw(data, terms, body.commutative)
        self.window = window
        # certs is None for exact elements (no dropped terms at all),
        # otherwise a dict functional -> upper bound on v . e1 over drops
        if certs is not None and pruned:
            certs = {
                v: max(
                    [b] + [_dot(v, _q1_part(data, e)) for e in pruned]
                )
                for v, b in certs.items()
            }
        self.certs = certs

    @classmethod
    def exact(cls, elem):
        return cls(elem, (NEG_INF,) * elem.data.rank)

    def _max_exps(self):
        """Maximal Q_{a,1}-exponent of the body per node; -inf when zero."""
        data = self.body.data
        r = data.rank
        if not self.body.terms:
            return (NEG_INF,) * r
        return tuple(
            max(e[r + a] for e in self.body.terms) for a in range(r)
        )

    def kept_max(self, v):
        """Max of the functional v over the body; -inf when zero."""
        data = self.body.data
        if not self.body.terms:
            return NEG_INF
        return max(_dot(v, _q1_part(data, e)) for e in self.body.terms)

    def cert_bound(self, v):
        if self.certs is None:
            return NEG_INF
        if v not in self.certs:
            raise KeyError(f"no tail certificate for functional {v}")
        return self.certs[v]

    def _merge_certs(self, other, combine):
        if self.certs is None and other.certs is None:
            return None
        keys = set()
        if self.certs is not None:
            keys |= set(self.certs)
        if other.certs is not None:
            keys &= set(other.certs) if keys else set()
            if self.certs is None:
                keys = set(other.certs)
        return {v: combine(v) for v in keys}

    def __add__(self, other):
        other = _as_series(other)
        window = tuple(
            max(w1, w2) for w1, w2 in zip(self.window, other.window)
        )
        certs = self._merge_certs(
            other, lambda v: max(self.cert_bound(v), other.cert_bound(v))
        )
        return TruncatedSeries(self.body + other.body, window, certs)

    def __sub__(self, other):
        other = _as_series(other)
        window = tuple(
            max(w1, w2) for w1, w2 in zip(self.window, other.window)
        )
        certs = self._merge_certs(
            other, lambda v: max(self.cert_bound(v), other.cert_bound(v))
        )
        return TruncatedSeries(self.body - other.body, window, certs)

    def __mul__(self, other):
        other = _as_series(other)
        mf = self._max_exps()
        mg = other._max_exps()
        window = tuple(
            max(wf + eg, wg + ef)
            for wf, wg, ef, eg in zip(self.window, other.window, mf, mg)
        )

        def bound(v):
            df = self.cert_bound(v)
            dg = other.cert_bound(v)
            kf = self.kept_max(v)
            kg = other.kept_max(v)
            return max(df + max(kg, dg), dg + max(kf, df))

        certs = self._merge_certs(other, bound)
        return TruncatedSeries(self.body * other.body, window, certs)

    def scale(self, c):
        return TruncatedSeries(self.body.scale(c), self.window, self.certs)

    def pow(self, n):
        if n < 0:
            raise ValueError("negative series powers are not supported")
        out = TruncatedSeries.exact(TorusElem.one(self.body.data))
        for _ in range(n):
            out = out * self
        return out

    def window_eq(self, other):
        """Exact equality of the certified parts on the common window."""
        other = _as_series(other)
        data = self.body.data
        r = data.rank
        window = tuple(
            max(w1, w2) for w1, w2 in zip(self.window, other.window)
        )

        def certified(elem):
            return {
                e: c for e, c in elem.terms.items()
                if all(e[r + a] >= window[a] for a in range(r))
            }

        return certified(self.body) == certified(other.body)

    def __repr__(self):
        return f"TruncatedSeries({len(self.body.terms)} terms, {self.window})"


def _as_series(x):
    if isinstance(x, TruncatedSeries):
        return x
    return TruncatedSeries.exact(x)


def phi(f):
    """Constant term in the level-1 generators followed by evaluation of
    the level-0 generators at 1: the sum of the coefficients of all terms
    with zero exponent at every Q_{a,1}.  Sound when the window covers the
    origin or when some tail certificate is strictly negative."""
    f = _as_series(f)
    covered = all(w <= 0 for w in f.window)
    if not covered and f.certs is not None:
        covered = any(b < 0 for b in f.certs.values())
    if not covered:
        raise WindowTooShallow(
            f"window {f.window} and certificates do not cover 0"
        )
    data = f.body.data
    r = data.rank
    total = ULaurent.zero()
    for e, c in f.body.terms.items():
        if all(e[r + a] == 0 for a in range(r)):
            total = total + c
    return total


def _lead_split(elem, a):
    """The unique top Q_{a,1}-graded monomial L of elem and the step
    polynomial T = L^(-1) (L - elem); every term of T loses Q_{a,1}-degree."""
    data = elem.data
    r = data.rank
    d = max(e[r + a - 1] for e in elem.terms)
    top = {e: c for e, c in elem.terms.items() if e[r + a - 1] == d}
    if len(top) != 1:
        raise ValueError("top graded part is not a monomial")
    (e_top, c_top), = top.items()
    lead = TorusElem.monomial(data, e_top, c_top, elem.commutative)
    lead_inv = lead.monomial_inverse()
    return lead, lead_inv, lead_inv * (lead - elem), d


def tail_steps(elem, a):
    """Level-1 exponent steps of the geometric tail of elem^(-1) at node a."""
    data = elem.data
    _, _, t, _ = _lead_split(elem, a)
    return [_q1_part(data, e) for e in t.terms]


def series_inverse(elem, a, depth, functionals=()):
    """Inverse of an element whose top Q_{a,1}-graded part is a single
    invertible monomial, as a geometric series certified down to
    Q_{a,1}-exponent -depth at node a (exact at all other nodes).

    For each functional v in `functionals` that is nonpositive on every
    tail step, the dropped tail satisfies v . e1 <= bound and the bound is
    recorded as a tail certificate.
    """
    data = elem.data
    r = data.rank
    lead, lead_inv, t, d = _lead_split(elem, a)
    n_steps = max(0, depth - d)
    idx = r + a - 1

    def prune(p):
        # every step of t strictly lowers the node-a exponent, so terms
        # already below -depth only generate dropped terms from here on
        kept = {
            e: c for e, c in p.terms.items() if e[idx] >= -depth
        }
        return TorusElem._raw(data, kept, p.commutative)

    out = lead_inv
    power = lead_inv
    for _ in range(n_steps):
        power = prune(t * power)
        if not power.terms:
            break
        out = out + power
    window = tuple(
        -depth if b == a - 1 else NEG_INF for b in range(r)
    )
    certs = {}
    steps = [_q1_part(data, e) for e in t.terms]
    e1_linv = _q1_part(data, next(iter(lead_inv.terms)))
    for v in functionals:
        if not steps:
            certs[v] = NEG_INF
            continue
        # dropped terms fall more than depth - d below the lead at node a;
        # rho bounds the v-gain per unit of node-a descent
        rho = max(
            Fraction(_dot(v, s), -s[a - 1]) for s in steps
        )
        if rho >= 0:
            continue  # v does not decrease along this tail
        certs[v] = _dot(v, e1_linv) + rho * (depth - d + 1)
    return TruncatedSeries(out, window, certs)


def yhat_monomial(sol, a, i):
    """Y_{a,i} as an invertible monomial; valid while the level-i variables
    are seed monomials (i in {0, 1})."""
    data = sol.data
    out = TorusElem.one(data)
    for b in range(1, data.rank + 1):
        e = -data.cbar[b - 1][a - 1]
        if e >= 0:
            out = out * sol.q(b, i).pow(e)
        else:
            out = out * sol.q(b, i).monomial_inverse().pow(-e)
    return out


def zhat_series(sol, a, level, depth, functionals=()):
    """Z_{a,level} = Q_{a,level} Q_{a,level+1}^(-1) as a TruncatedSeries,
    for level >= 1 where the denominator is a genuine polynomial."""
    inv = series_inverse(sol.q(a, level + 1), a, depth, functionals)
    return _as_series(sol.q(a, level)) * inv


def verify_lemma47(sol, a, b_exp, depth):
    """Binomial summation identity at i = 0:
    sum_m [m + b; m]_{q_a} Y_{a,1}^m Z_{a,0}^b == Z_{a,0}^(-1) Z_{a,1}^(b+1),
    compared exactly on the certified window."""
    data = sol.data
    yhat = yhat_monomial(sol, a, 1)
    z0 = qsystem.zhat_monomial(sol, a, 0)
    z0_pow = z0.pow(b_exp)
    v_exp = 2 * data.delta * data.tvee[a - 1]
    m_max = (depth + b_exp) // 2 + 1
    lhs_body = TorusElem.zero(data)
    for m in range(m_max + 1):
        coeff = qbinom(m, b_exp, v_exp)
        lhs_body = lhs_body + (yhat.pow(m) * z0_pow).scale(coeff)
    # term m has node-a grade -2m - b_exp; dropped terms sit strictly below
    window = tuple(
        -2 * m_max - b_exp if b == a - 1 else NEG_INF
        for b in range(data.rank)
    )
    lhs = TruncatedSeries(lhs_body, window)
    z0_inv = z0.monomial_inverse()
    rhs = _as_series(z0_inv) * zhat_series(sol, a, 1, depth + b_exp + 2).pow(
        b_exp + 1
    )
    return lhs.window_eq(rhs)


def l_form(data, n, k):
    """L_k(n) = sum_{i,j<=k} min(i,j) n_i . Lambda n_j."""
    r = data.rank
    nmat = [[0] * r for _ in range(k + 1)]
    for (a, i), cnt in n.items():
        if 1 <= i <= k:
            nmat[i][a - 1] += cnt
    total = 0
    for i in range(1, k + 1):
        for j in range(1, k + 1):
            total += min(i, j) * sum(
                nmat[i][x] * data.lam[x][y] * nmat[j][y]
                for x in range(r) for y in range(r)
            )
    return total


def _level_counts(data, n, i):
    counts = [0] * data.rank
    for (a, j), cnt in n.items():
        if j == i:
            counts[a - 1] += cnt
    return counts


def pick_functional(data, step_lists, limit=9):
    """A positive integer functional v with v . s < 0 for every tail step
    of every series factor, if one exists in the search box."""
    steps = [s for steps in step_lists for s in steps]
    if not steps:
        return (1,) * data.rank
    for v in iproduct(range(1, limit + 1), repeat=data.rank):
        if all(_dot(v, s) < 0 for s in steps):
            return v
    return None


def _factors_level1(sol, lam_vec, n_counts, level, depth, v):
    """Factor list of the level-(k=1) product in initial data
    (Q_level, Q_level+1):

    u^(-sum_a Lambda_aa l_a - 2 sum_{a,b} Lambda_ab n_a)
      prod_a Z_{a,level}^(-1) prod_a Q_{a,level+1}^(n_a)
      prod_a Z_{a,level+1}^(l_a + 1),

    every block in ascending node order.  Requires level in {0, 1}: the
    leading Z-inverses are Laurent there."""
    data = sol.data
    r = data.rank
    exp = -sum(data.lam[a][a] * lam_vec[a] for a in range(r))
    exp -= 2 * sum(
        data.lam[a][b] * n_counts[a] for a in range(r) for b in range(r)
    )
    functionals = (v,) if v is not None else ()
    factors = [
        _as_series(TorusElem.one(data).scale(ULaurent.u_pow(exp)))
    ]
    for a in range(1, r + 1):
        if level == 0:
            z_inv = qsystem.zhat_monomial(sol, a, 0).monomial_inverse()
        else:
            # Z_{a,level}^(-1) = Q_{a,level+1} Q_{a,level}^(-1)
            z_inv = sol.q(a, level + 1) * sol.q(a, level).monomial_inverse()
        factors.append(_as_series(z_inv))
    for a in range(1, r + 1):
        if n_counts[a - 1]:
            factors.append(
                _as_series(sol.q(a, level + 1).pow(n_counts[a - 1]))
            )
    for a in range(1, r + 1):
        z = zhat_series(sol, a, level + 1, depth, functionals)
        factors.extend([z] * (lam_vec[a - 1] + 1))
    return factors


def _phi_product(data, factors, v):
    """phi of the ordered product of series factors.

    With a functional certificate v, partial products are pruned of body
    terms that cannot climb back to level-1 exponent zero given the maximal
    v-gain of the remaining factors; the final tracked bound must be
    strictly negative for the constant term to be certified."""
    r = data.rank
    if v is None:
        out = factors[0]
        for f in factors[1:]:
            out = out * f
        return phi(out)
    def flat(f):
        # soundness in this path rests on the certificate alone; clear the
        # window so its pruning cannot feed back into the tracked bound
        return TruncatedSeries(f.body, (NEG_INF,) * r, f.certs)

    gains = []
    for f in factors:
        gains.append(max(f.kept_max(v), f.cert_bound(v)))
    out = flat(factors[0])
    for i in range(1, len(factors)):
        out = out * flat(factors[i])
        rest = sum(g for g in gains[i + 1:])
        keep = {
            e: c for e, c in out.body.terms.items()
            if _dot(v, _q1_part(data, e)) + rest >= 0
        }
        out = TruncatedSeries(
            TorusElem._raw(data, keep, out.body.commutative),
            (NEG_INF,) * r,
            out.certs,
        )
    if out.cert_bound(v) >= 0:
        raise WindowTooShallow(
            f"tail certificate bound {out.cert_bound(v)} at functional {v}"
        )
    total = ULaurent.zero()
    for e, c in out.body.terms.items():
        if all(x == 0 for x in _q1_part(data, e)):
            total = total + c
    return total


def default_depth(lam_vec, n):
    top = max([cnt for cnt in n.values()], default=0)
    return 2 * (max(lam_vec, default=0) + top + 3)


def _phi_deepening(build, depth, attempts=12):
    """Evaluate build(depth), deepening the truncation until certified."""
    for _ in range(attempts):
        try:
            return build(depth)
        except WindowTooShallow:
            depth += 8
    raise WindowTooShallow(f"still uncertified at depth {depth}")


def verify_eq416_k1(data, lam_vec, n, depth=None, sol=None):
    """phi of the factorized level-1 product equals u^(L_1(n)) times the
    unrestricted graded sum at cutoff 1; n must be supported on level 1."""
    if any(i != 1 for (_, i) in n):
        raise ValueError("n must be supported on level 1")
    if depth is None:
        depth = default_depth(lam_vec, n)
    if sol is None:
        sol = qsystem.solve(data, 0, 2)
    n1 = _level_counts(data, n, 1)
    v = pick_functional(
        data, [tail_steps(sol.q(a, 2), a) for a in range(1, data.rank + 1)]
    )

    def build(d):
        factors = _factors_level1(sol, lam_vec, n1, 0, d, v)
        return _phi_product(data, factors, v)

    lhs = _phi_deepening(build, depth)
    rhs = msum(data, lam_vec, n, 1, restricted=False).shift(l_form(data, n, 1))
    return lhs == rhs


def verify_eq424_split(data, lam_vec, n, depth=None, sol=None):
    """The cutoff-2 generating function splits as the level-1 product at
    weight zero times the shifted level-1 product; phi of the split product
    equals u^(L_2(n)) times the unrestricted graded sum at cutoff 2."""
    if any(not 1 <= i <= 2 for (_, i) in n):
        raise ValueError("n must be supported on levels 1 and 2")
    if depth is None:
        depth = default_depth(lam_vec, n)
    if sol is None:
        sol = qsystem.solve(data, 0, 3)
    r = data.rank
    n1 = _level_counts(data, n, 1)
    n2 = _level_counts(data, n, 2)
    zero = (0,) * r
    v = pick_functional(
        data,
        [tail_steps(sol.q(a, 2), a) for a in range(1, r + 1)]
        + [tail_steps(sol.q(a, 3), a) for a in range(1, r + 1)],
    )

    def build(d):
        factors = _factors_level1(sol, zero, n1, 0, d, v)
        factors += _factors_level1(sol, lam_vec, n2, 1, d, v)
        return _phi_product(data, factors, v)

    lhs = _phi_deepening(build, depth)
    rhs = msum(data, lam_vec, n, 2, restricted=False).shift(l_form(data, n, 2))
    return lhs == rhs
