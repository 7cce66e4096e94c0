"""Exact arithmetic in the coefficient ring Z[u, u^-1].

The variable u is the square root of the deformation parameter nu, so that
nu = u^2 and q = u^(2*delta) for the relevant symmetrizer determinant delta.
Coefficients are arbitrary-precision integers; exponents are machine ints.
"""

from functools import lru_cache
from math import gcd

from gmpy2 import mpz


class NotDivisible(Exception):
    """Raised when an exact Laurent-polynomial quotient does not exist."""


_KRON_MIN_PAIRS = 256


def _mul_raw(f, g):
    if not f or not g:
        return {}
    if len(f) * len(g) >= _KRON_MIN_PAIRS:
        out = _mul_kronecker(f, g)
        if out is not None:
            return out
    out = {}
    for e1, c1 in f.items():
        for e2, c2 in g.items():
            e = e1 + e2
            c = out.get(e, 0) + c1 * c2
            if c:
                out[e] = c
            elif e in out:
                del out[e]
    return out


def _pack(cs, bits):
    acc = mpz(0)
    for c in reversed(cs):
        acc = (acc << bits) + c
    return acc


def _mul_kronecker(f, g):
    """Dense product via packing into big integers, or None when the
    exponent supports are too sparse for dense packing to pay off."""
    lo_f, lo_g = min(f), min(g)
    stride = 0
    for e in f:
        stride = gcd(stride, e - lo_f)
    for e in g:
        stride = gcd(stride, e - lo_g)
    stride = stride or 1
    nf = (max(f) - lo_f) // stride + 1
    ng = (max(g) - lo_g) // stride + 1
    if nf * ng > 16 * len(f) * len(g):
        return None
    bits = (
        max(abs(c) for c in f.values()).bit_length()
        + max(abs(c) for c in g.values()).bit_length()
        + min(len(f), len(g)).bit_length()
        + 2
    )
    fp = [0] * nf
    fm = [0] * nf
    for e, c in f.items():
        i = (e - lo_f) // stride
        if c > 0:
            fp[i] = c
        else:
            fm[i] = -c
    gp = [0] * ng
    gm = [0] * ng
    for e, c in g.items():
        i = (e - lo_g) // stride
        if c > 0:
            gp[i] = c
        else:
            gm[i] = -c
    pp, pm = _pack(fp, bits), _pack(fm, bits)
    qp, qm = _pack(gp, bits), _pack(gm, bits)
    pos = pp * qp + pm * qm
    neg = pp * qm + pm * qp
    mask = (mpz(1) << bits) - 1
    out = {}
    base = lo_f + lo_g
    n_out = nf + ng - 1
    for i in range(n_out):
        c = int(pos & mask) - int(neg & mask)
        pos >>= bits
        neg >>= bits
        if c:
            out[base + i * stride] = c
    return out


def _add_raw(f, g):
    out = dict(f)
    for e, c in g.items():
        s = out.get(e, 0) + c
        if s:
            out[e] = s
        elif e in out:
            del out[e]
    return out


def _div_raw(num, den):
    """Exact quotient of Laurent polynomials given as exponent->coeff dicts."""
    if not den:
        raise NotDivisible("division by zero")
    if not num:
        return {}
    num = dict(num)
    quot = {}
    e_den = max(den)
    c_den = den[e_den]
    # any exact quotient has all exponents >= min(num) - min(den): the lowest
    # terms of quotient and divisor multiply without cancellation
    e_lo = min(num) - min(den)
    while num:
        e_num = max(num)
        c_num = num[e_num]
        e = e_num - e_den
        if c_num % c_den != 0 or e < e_lo:
            raise NotDivisible("no exact quotient")
        c = c_num // c_den
        quot[e] = quot.get(e, 0) + c
        for ed, cd in den.items():
            ee = ed + e
            s = num.get(ee, 0) - cd * c
            if s:
                num[ee] = s
            elif ee in num:
                del num[ee]
    return quot


class ULaurent:
    """Sparse univariate Laurent polynomial in u over the integers."""

    __slots__ = ("terms",)

    def __init__(self, terms=None):
        if terms is None:
            terms = {}
        self.terms = {e: c for e, c in terms.items() if c}

    @classmethod
    def _raw(cls, terms):
        """Wrap an already-pruned dict without copying."""
        obj = cls.__new__(cls)
        obj.terms = terms
        return obj

    @classmethod
    def zero(cls):
        return cls._raw({})

    @classmethod
    def one(cls):
        return cls._raw({0: 1})

    @classmethod
    def const(cls, c):
        return cls._raw({0: c} if c else {})

    @classmethod
    def u_pow(cls, e, c=1):
        return cls._raw({e: c} if c else {})

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, ULaurent):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __add__(self, other):
        return ULaurent._raw(_add_raw(self.terms, other.terms))

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return ULaurent._raw({e: -c for e, c in self.terms.items()})

    def __mul__(self, other):
        return ULaurent._raw(_mul_raw(self.terms, other.terms))

    def shift(self, e):
        """Multiply by u^e."""
        if not e:
            return self
        return ULaurent._raw({ee + e: c for ee, c in self.terms.items()})

    def scale(self, c):
        if c == 0:
            return ULaurent.zero()
        return ULaurent._raw({e: cc * c for e, cc in self.terms.items()})

    def negate_exponents(self):
        """Substitute u -> u^-1."""
        return ULaurent._raw({-e: c for e, c in self.terms.items()})

    def eval_at_u1(self):
        """Sum of all coefficients (the u -> 1 specialization)."""
        return sum(self.terms.values())

    def min_exp(self):
        return min(self.terms)

    def max_exp(self):
        return max(self.terms)

    def sorted_terms(self):
        return sorted(self.terms.items())

    def __repr__(self):
        if not self.terms:
            return "ULaurent(0)"
        bits = []
        for e, c in self.sorted_terms():
            if e == 0:
                bits.append(str(c))
            else:
                cs = "" if c == 1 else ("-" if c == -1 else f"{c}*")
                bits.append(f"{cs}u^{e}")
        return "ULaurent(" + " + ".join(bits).replace("+ -", "- ") + ")"

    def to_json(self):
        return {"var": "u", "terms": [[e, str(c)] for e, c in self.sorted_terms()]}

    @classmethod
    def from_json(cls, obj):
        if obj.get("var") != "u":
            raise ValueError("expected a polynomial in u")
        return cls({int(e): int(c) for e, c in obj["terms"]})


def exact_div(num, den):
    """Exact quotient q with q*den == num; raises NotDivisible otherwise."""
    return ULaurent._raw(_div_raw(num.terms, den.terms))


@lru_cache(maxsize=None)
def _qbinom_raw(m, p, v_exp):
    if m == 0:
        return ((0, 1),)
    if 1 <= -p <= m:
        # some numerator factor is 1 - v^0 = 0
        return ()
    if p < 0:
        # reflect: [m+p; m] = (-1)^m v^(mp + m(m+1)/2) [(-p-1); m]
        base = _qbinom_raw(m, -p - m - 1, v_exp)
        shift = (m * p + m * (m + 1) // 2) * v_exp
        sign = -1 if m % 2 else 1
        return tuple((e + shift, sign * c) for e, c in base)
    # dense coefficients on the grid of v = u^v_exp: interleave each
    # numerator factor (1 - v^(p+j)) with the division by (1 - v^j), so
    # intermediate results stay Gaussian binomials of degree j*p
    arr = [1]
    for j in range(1, m + 1):
        step = p + j
        prod = arr + [0] * step
        for i in range(len(arr)):
            prod[i + step] -= arr[i]
        for i in range(j, len(prod)):
            prod[i] += prod[i - j]
        arr = prod[: (j * p) + 1]
    return tuple(
        (i * v_exp, c) for i, c in enumerate(arr) if c
    )


def qbinom(m, p, v_exp):
    """Gaussian binomial [m+p; m]_v with v = u^v_exp, as a finite product.

    Defined for any integer p by prod_{j=1..m} (1 - v^(p+j)) / (1 - v^j);
    vanishes exactly when 1 <= -p <= m, and equals 1 for m = 0.
    """
    if m < 0:
        raise ValueError("m must be nonnegative")
    if v_exp <= 0:
        raise ValueError("v_exp must be positive")
    return ULaurent(dict(_qbinom_raw(m, p, v_exp)))
