"""Laurent polynomials packed into big integers for fast multiply-accumulate.

A polynomial with even exponents and bounded coefficients is stored as a
single integer in base 2**bits, one balanced digit per exponent slot, plus a
base exponent and an exact bound on the absolute value of any digit.  Ring
operations then ride on GMP big-integer arithmetic, which is far faster than
sparse dict convolution for the dense-ish values arising in the fermionic
dynamic programs.  Every operation propagates a sound digit bound; if a bound
ever approaches the digit size, DigitOverflow asks the caller to retry with
wider digits, so results are exact by construction.
"""

try:
    from gmpy2 import mpz
except ImportError:  # pragma: no cover - gmpy2 is expected, but optional
    def mpz(x):
        return x


class DigitOverflow(Exception):
    def __init__(self, needed_bits):
        super().__init__(f"digit bound needs {needed_bits} bits")
        self.needed_bits = needed_bits


class Context:
    """Fixed digit width; values are (payload, base_exponent, digit_bound)."""

    def __init__(self, bits):
        self.bits = bits
        self.limit = 1 << (bits - 2)  # headroom below the balanced range

    def _check(self, bound):
        if bound >= self.limit:
            raise DigitOverflow(int(bound).bit_length() + 2)

    def encode(self, terms):
        """Pack a dict {even exponent: coeff}; returns a packed value."""
        if not terms:
            return (mpz(0), 0, 0)
        base = min(terms)
        bits = self.bits
        x = mpz(0)
        bound = 0
        for e, c in terms.items():
            off = e - base
            assert off % 2 == 0, "exponents must share parity"
            x += mpz(c) << (bits * (off // 2))
            ac = abs(c)
            if ac > bound:
                bound = ac
        self._check(bound)
        return (x, base, bound)

    def is_zero(self, v):
        return not v[0]

    def shift(self, v, e):
        if not e:
            return v
        return (v[0], v[1] + e, v[2])

    def add(self, v, w):
        xv, bv, cv = v
        xw, bw, cw = w
        if not xv:
            return w
        if not xw:
            return v
        if bv > bw:
            xv <<= self.bits * ((bv - bw) // 2)
            bv = bw
        elif bw > bv:
            xw <<= self.bits * ((bw - bv) // 2)
        bound = cv + cw
        self._check(bound)
        return (xv + xw, bv, bound)

    def mul(self, v, w):
        """Product; the bound multiplies by the other operand's span count,
        so callers should keep one factor small (binomial factors here)."""
        xv, bv, cv = v
        xw, bw, cw = w
        if not xv or not xw:
            return (mpz(0), 0, 0)
        spans = min(self._span(v), self._span(w))
        bound = cv * cw * spans
        self._check(bound)
        return (xv * xw, bv + bw, bound)

    def _span(self, v):
        # number of occupied digit slots, bounded by total bit length
        return v[0].bit_length() // self.bits + 1

    def decode(self, v):
        """Unpack to a dict {exponent: coeff} using balanced digits."""
        x, base, _ = v
        neg = x < 0
        if neg:
            x = -x
        out = {}
        bits = self.bits
        mask = (1 << bits) - 1
        half = 1 << (bits - 1)
        slot = 0
        carry = 0
        while x or carry:
            d = int(x & mask) + carry
            x >>= bits
            if d >= half:
                d -= 1 << bits
                carry = 1
            else:
                carry = 0
            if d:
                out[base + 2 * slot] = -d if neg else d
            slot += 1
        return out
