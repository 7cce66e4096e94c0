"""Sparse skew-Laurent arithmetic over the quantum torus of initial data.

Generators are ordered Q_{1,0}, ..., Q_{r,0}, Q_{1,1}, ..., Q_{r,1}; a term
with exponent vector e denotes the normally ordered product x_1^e_1 ... of
the generators in ascending index, times a ULaurent coefficient.  Abstractly
x_i x_j = nu^(Lt_ij) x_j x_i with nu = u^2 and Lt the antisymmetric pairing
matrix, so reordering a product of two normal forms costs the single scalar
nu^kappa(e, f) with kappa(e, f) = sum_{i>j} e_i Lt_ij f_j.
"""

from gmpy2 import mpz

from .coeffring import ULaurent, NotDivisible, exact_div

_PACKED_MIN_PAIRS = 64


class ContextMismatch(Exception):
    """Raised when combining torus elements over different seed data."""


def _order_key(e):
    """Graded lexicographic monomial order used for exact division."""
    return (sum(e), e)


class TorusElem:
    __slots__ = ("data", "terms", "commutative")

    def __init__(self, data, terms=None, commutative=False):
        self.data = data
        self.commutative = commutative
        self.terms = {}
        if terms:
            for e, c in terms.items():
                if c:
                    self.terms[tuple(e)] = c

    @classmethod
    def _raw(cls, data, terms, commutative=False):
        obj = cls.__new__(cls)
        obj.data = data
        obj.terms = terms
        obj.commutative = commutative
        return obj

    @classmethod
    def zero(cls, data, commutative=False):
        return cls._raw(data, {}, commutative)

    @classmethod
    def one(cls, data, commutative=False):
        return cls._raw(data, {(0,) * (2 * data.rank): ULaurent.one()},
                        commutative)

    @classmethod
    def monomial(cls, data, e, c=None, commutative=False):
        if c is None:
            c = ULaurent.one()
        e = tuple(e)
        if len(e) != 2 * data.rank:
            raise ValueError("exponent vector has wrong length")
        return cls._raw(data, {e: c} if c else {}, commutative)

    @classmethod
    def generator(cls, data, a, i):
        """The generator Q_{a,i} for 1 <= a <= r and i in {0, 1}."""
        r = data.rank
        if not (1 <= a <= r and i in (0, 1)):
            raise ValueError("generator index out of range")
        e = [0] * (2 * r)
        e[i * r + a - 1] = 1
        return cls.monomial(data, e)

    def _compat(self, other):
        if self.data is not other.data or self.commutative != other.commutative:
            if (self.data.type_id != other.data.type_id
                    or self.commutative != other.commutative):
                raise ContextMismatch("elements over different contexts")

    def is_zero(self):
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def __eq__(self, other):
        if not isinstance(other, TorusElem):
            return NotImplemented
        return (self.data.type_id == other.data.type_id
                and self.commutative == other.commutative
                and self.terms == other.terms)

    def __add__(self, other):
        self._compat(other)
        out = dict(self.terms)
        for e, c in other.terms.items():
            s = out.get(e)
            s = c if s is None else s + c
            if s:
                out[e] = s
            elif e in out:
                del out[e]
        return TorusElem._raw(self.data, out, self.commutative)

    def __neg__(self):
        return TorusElem._raw(
            self.data, {e: -c for e, c in self.terms.items()}, self.commutative
        )

    def __sub__(self, other):
        return self + (-other)

    def kappa(self, e, f):
        """Reordering exponent sum_{i>j} e_i Lt_ij f_j; only the block with
        i in the Q_1 range and j in the Q_0 range contributes."""
        r = self.data.rank
        lam = self.data.lam
        s = 0
        for a in range(r):
            ea = e[r + a]
            if ea:
                row = lam[a]
                s += ea * sum(row[b] * f[b] for b in range(r))
        return s

    def __mul__(self, other):
        self._compat(other)
        if (
            self.terms and other.terms
            and len(self.terms) * len(other.terms) >= _PACKED_MIN_PAIRS
        ):
            return self._mul_packed(other)
        out = {}
        commutative = self.commutative
        for e, ce in self.terms.items():
            for f, cf in other.terms.items():
                g = tuple(x + y for x, y in zip(e, f))
                c = ce * cf
                if not commutative:
                    kap = self.kappa(e, f)
                    if kap:
                        c = c.shift(2 * kap)
                s = out.get(g)
                s = c if s is None else s + c
                if s:
                    out[g] = s
                elif g in out:
                    del out[g]
        return TorusElem._raw(self.data, out, commutative)

    def _mul_packed(self, other):
        """Product via Kronecker packing of the coefficient polynomials:
        each coefficient is packed once into a big integer in balanced
        base-2^bits digits, every term pair is then a single integer
        multiply/shift/add, and each output coefficient unpacks once."""
        commutative = self.commutative

        def height(elem):
            return max(
                max(abs(c) for c in p.terms.values())
                for p in elem.terms.values()
            ).bit_length()

        def width(elem):
            return max(len(p.terms) for p in elem.terms.values())

        # headroom: one pairwise product plus sums over term pairs
        bits = (
            height(self) + height(other)
            + min(width(self), width(other)).bit_length()
            + min(len(self.terms), len(other.terms)).bit_length()
            + 2
        )

        def pack(elem):
            packed = {}
            for e, poly in elem.terms.items():
                lo = min(poly.terms)
                acc = mpz(0)
                for pe, pc in poly.terms.items():
                    acc += mpz(pc) << ((pe - lo) * bits)
                packed[e] = (acc, lo)
            return packed

        kappa = self.kappa
        acc = {}  # exponent vector -> [accumulated mpz, base u-exponent]
        for e, (xf, lof) in pack(self).items():
            for f, (xg, log_) in pack(other).items():
                g = tuple(x + y for x, y in zip(e, f))
                off = lof + log_
                if not commutative:
                    off += 2 * kappa(e, f)
                prod = xf * xg
                ent = acc.get(g)
                if ent is None:
                    acc[g] = [prod, off]
                elif off >= ent[1]:
                    ent[0] += prod << ((off - ent[1]) * bits)
                else:
                    ent[0] = (ent[0] << ((ent[1] - off) * bits)) + prod
                    ent[1] = off
        mask = (mpz(1) << bits) - 1
        half = mpz(1) << (bits - 1)
        full = mpz(1) << bits
        out = {}
        for g, (x, base) in acc.items():
            poly = {}
            i = 0
            while x:
                d = x & mask
                x >>= bits
                if d >= half:
                    d -= full
                    x += 1
                if d:
                    poly[base + i] = int(d)
                i += 1
            if poly:
                out[g] = ULaurent._raw(poly)
        return TorusElem._raw(self.data, out, commutative)

    def scale(self, c):
        """Multiply every coefficient by the ULaurent scalar c."""
        if not c:
            return TorusElem.zero(self.data, self.commutative)
        return TorusElem._raw(
            self.data, {e: ce * c for e, ce in self.terms.items()},
            self.commutative,
        )

    def nu_pow(self, e):
        """Multiply by the central scalar nu^e = u^(2e)."""
        return self.scale(ULaurent.u_pow(2 * e))

    def monomial_inverse(self):
        """Inverse of a single-term element with unit coefficient +-u^k."""
        if len(self.terms) != 1:
            raise NotDivisible("only monomials are invertible")
        (e, c), = self.terms.items()
        if len(c.terms) != 1:
            raise NotDivisible("coefficient is not a unit")
        (ce, cc), = c.terms.items()
        if cc not in (1, -1):
            raise NotDivisible("coefficient is not a unit")
        einv = tuple(-x for x in e)
        kap = 0 if self.commutative else self.kappa(einv, e)
        return TorusElem.monomial(
            self.data, einv, ULaurent.u_pow(-ce - 2 * kap, cc),
            self.commutative,
        )

    def pow(self, n):
        """Integer power; negative powers only for invertible monomials."""
        if n < 0:
            return self.monomial_inverse().pow(-n)
        out = TorusElem.one(self.data, self.commutative)
        for _ in range(n):
            out = out * self
        return out

    def leading(self):
        e = max(self.terms, key=_order_key)
        return e, self.terms[e]

    def min_monomial(self):
        return min(self.terms, key=_order_key)

    def classical_limit(self):
        """Commutative specialization: u -> 1 coefficients, trivial pairing."""
        out = {}
        for e, c in self.terms.items():
            v = c.eval_at_u1()
            s = out.get(e, 0) + v
            if s:
                out[e] = s
            elif e in out:
                del out[e]
        return TorusElem._raw(
            self.data,
            {e: ULaurent.const(c) for e, c in out.items()},
            commutative=True,
        )

    def sorted_terms(self):
        return sorted(self.terms.items(), key=lambda kv: _order_key(kv[0]))

    def to_json(self):
        r = self.data.rank
        gens = [f"Q{a+1}_0" for a in range(r)] + [f"Q{a+1}_1" for a in range(r)]
        return {
            "gens": gens,
            "terms": [
                {"e": list(e), "c": c.to_json()} for e, c in self.sorted_terms()
            ],
        }

    @classmethod
    def from_json(cls, data, obj):
        terms = {
            tuple(t["e"]): ULaurent.from_json(t["c"]) for t in obj["terms"]
        }
        return cls(data, terms)

    def __repr__(self):
        return f"TorusElem({len(self.terms)} terms)"


_DIV_CAP = 200000


def _exact_div(f, g, side):
    """Quotient h with h*g == f (side='right') or g*h == f (side='left'),
    by repeated leading-term elimination under graded lex order."""
    f._compat(g)
    if g.is_zero():
        raise NotDivisible("division by zero")
    if f.is_zero():
        return TorusElem.zero(f.data, f.commutative)
    e_g, c_g = g.leading()
    # any exact quotient's lowest monomial is min(f) - min(g)
    low = _order_key(tuple(
        x - y for x, y in zip(f.min_monomial(), g.min_monomial())
    ))
    rem = f
    quot = TorusElem.zero(f.data, f.commutative)
    steps = 0
    while rem:
        steps += 1
        if steps > _DIV_CAP:
            raise NotDivisible("elimination did not terminate")
        e_r, c_r = rem.leading()
        e_h = tuple(x - y for x, y in zip(e_r, e_g))
        if _order_key(e_h) < low:
            raise NotDivisible("remainder dropped below the quotient floor")
        if f.commutative:
            kap = 0
        elif side == "right":
            kap = f.kappa(e_h, e_g)
        else:
            kap = f.kappa(e_g, e_h)
        try:
            c_h = exact_div(c_r.shift(-2 * kap), c_g)
        except NotDivisible:
            raise NotDivisible("coefficient quotient does not exist")
        h_term = TorusElem.monomial(f.data, e_h, c_h, f.commutative)
        quot = quot + h_term
        if side == "right":
            rem = rem - h_term * g
        else:
            rem = rem - g * h_term
    return quot


def exact_div_right(f, g):
    """h with h * g == f, exactly."""
    return _exact_div(f, g, "right")


def exact_div_left(f, g):
    """h with g * h == f, exactly."""
    return _exact_div(f, g, "left")


def substitute_generators(f, images):
    """Apply the algebra map sending generator i to images[i].

    Images must be invertible monomials that reproduce the pairing of the
    original generators; otherwise the map is not a homomorphism.
    """
    n = 2 * f.data.rank
    if len(images) != n:
        raise ValueError("need one image per generator")
    for img in images:
        if len(img.terms) != 1:
            raise NonHomomorphicImages("images must be monomials")
        img.monomial_inverse()  # raises if not invertible
    # pairing preservation: x_j x_i == nu^Lt_ji x_i x_j for all i < j
    lt = f.data.lamtilde
    for i in range(n):
        for j in range(i + 1, n):
            lhs = images[j] * images[i]
            rhs = (images[i] * images[j]).nu_pow(lt[j][i])
            if lhs != rhs:
                raise NonHomomorphicImages(
                    f"images break the pairing at ({i}, {j})"
                )
    out = TorusElem.zero(f.data, f.commutative)
    for e, c in f.terms.items():
        term = TorusElem.one(f.data, f.commutative).scale(c)
        for i in range(n):
            if e[i]:
                term = term * images[i].pow(e[i])
        out = out + term
    return out


class NonHomomorphicImages(Exception):
    """Substitution images fail to be invertible or pairing-preserving."""
