"""Cartan and cluster-seed data for the four supported twisted affine types.

Convention: cbar[i][j] = alpha_j(alpha_i-dual), so the symmetrizer condition
reads t[a] * cbar[a][b] == t[b] * cbar[b][a].  Node labels are 1-based in the
public API; the long node of C_r is r, the short node of B_r is r, and F4/G2
follow the standard Bourbaki tables with node 1 long.
"""

from dataclasses import dataclass
from fractions import Fraction
from math import gcd


class UnsupportedType(Exception):
    """Raised for a family/rank combination outside the supported list."""


FAMILIES = ("A2_twist", "D2_twist", "E6_twist", "D4_triple")

# CLI identifiers: base diagram with its twist order
_TYPE_ALIASES = {
    "A2~2": "A2_twist",
    "D2~2": "D2_twist",
    "E6~2": "E6_twist",
    "D4~3": "D4_triple",
}


@dataclass(frozen=True)
class TwistedTypeId:
    family: str
    rank: int

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnsupportedType(f"unknown family {self.family!r}")
        r = self.rank
        ok = {
            "A2_twist": r >= 2,
            "D2_twist": r >= 2,
            "E6_twist": r == 4,
            "D4_triple": r == 2,
        }[self.family]
        if not ok:
            raise UnsupportedType(f"rank {r} invalid for {self.family}")

    @classmethod
    def parse(cls, type_str, rank):
        family = _TYPE_ALIASES.get(type_str, type_str)
        return cls(family, rank)

    @property
    def cli_name(self):
        return {v: k for k, v in _TYPE_ALIASES.items()}[self.family]


def _cbar_matrix(type_id):
    r = type_id.rank
    fam = type_id.family
    c = [[2 if i == j else 0 for j in range(r)] for i in range(r)]

    def edge(i, j, cij, cji):
        c[i][j] = cij
        c[j][i] = cji

    if fam == "A2_twist":  # finite part C_r; node r long
        for i in range(r - 2):
            edge(i, i + 1, -1, -1)
        edge(r - 2, r - 1, -2, -1)
    elif fam == "D2_twist":  # finite part B_r; node r short
        for i in range(r - 2):
            edge(i, i + 1, -1, -1)
        edge(r - 2, r - 1, -1, -2)
    elif fam == "E6_twist":  # finite part F4; nodes 1,2 long
        edge(0, 1, -1, -1)
        edge(1, 2, -1, -2)
        edge(2, 3, -1, -1)
    else:  # D4_triple, finite part G2; node 1 long
        edge(0, 1, -1, -3)
    return c


def _det_int(mat):
    """Integer determinant by fraction-free cofactor expansion."""
    n = len(mat)
    if n == 1:
        return mat[0][0]
    total = 0
    for j in range(n):
        if mat[0][j] == 0:
            continue
        minor = [row[:j] + row[j + 1:] for row in mat[1:]]
        total += (-1) ** j * mat[0][j] * _det_int(minor)
    return total


def _solve_symmetrizer(cbar):
    """Smallest positive integer vector t with t_a*C_ab == t_b*C_ba."""
    r = len(cbar)
    t = [Fraction(0)] * r
    t[0] = Fraction(1)
    # the Dynkin diagrams here are connected, so propagate along edges
    todo = [0]
    seen = {0}
    while todo:
        a = todo.pop()
        for b in range(r):
            if b in seen or cbar[a][b] == 0:
                continue
            t[b] = t[a] * cbar[a][b] / cbar[b][a]
            seen.add(b)
            todo.append(b)
    denom = 1
    for x in t:
        denom = denom * x.denominator // gcd(denom, x.denominator)
    ints = [int(x * denom) for x in t]
    g = 0
    for x in ints:
        g = gcd(g, x)
    ints = [x // g for x in ints]
    if min(ints) != 1:
        raise AssertionError("symmetrizer has no solution with minimum 1")
    return ints


def _inverse_times_det(mat, det):
    """Adjugate matrix (det * inverse) as exact integers."""
    n = len(mat)
    adj = [[0] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [
                [mat[a][b] for b in range(n) if b != j]
                for a in range(n) if a != i
            ]
            adj[j][i] = (-1) ** (i + j) * (_det_int(minor) if minor else 1)
    # sanity: mat @ adj == det * I
    for i in range(n):
        for j in range(n):
            s = sum(mat[i][k] * adj[k][j] for k in range(n))
            assert s == (det if i == j else 0)
    return adj


@dataclass(frozen=True)
class CartanData:
    type_id: TwistedTypeId
    cbar: tuple        # r x r, rows as tuples
    tvee: tuple        # length r
    kappa: int
    delta: int
    lam: tuple         # r x r symmetric, Lambda = delta * Tvee * inverse(cbar)
    lamtilde: tuple    # 2r x 2r block [[0, -Lambda], [Lambda, 0]]
    b: tuple           # 2r x 2r block [[0, -cbar], [cbar, 0]]

    @property
    def rank(self):
        return self.type_id.rank

    def neighbors(self, a):
        """Nodes b adjacent to a (1-based), with multiplicity |cbar[b][a]|."""
        r = self.rank
        if not 1 <= a <= r:
            raise ValueError(f"node {a} out of range 1..{r}")
        return [
            (b + 1, -self.cbar[b][a - 1])
            for b in range(r)
            if self.cbar[b][a - 1] < 0
        ]

    def to_json(self):
        return {
            "family": self.type_id.family,
            "rank": self.rank,
            "cbar": [list(row) for row in self.cbar],
            "tvee": list(self.tvee),
            "kappa": self.kappa,
            "delta": self.delta,
            "lambda": [list(row) for row in self.lam],
        }


def cartan_data(type_id):
    """Build the exact seed matrices for one twisted type; all checks hard."""
    cbar = _cbar_matrix(type_id)
    r = type_id.rank
    tvee = _solve_symmetrizer(cbar)
    kappa = 3 if type_id.family == "D4_triple" else 2
    if set(tvee) - {1, kappa} or min(tvee) != 1:
        raise AssertionError("symmetrizer entries must lie in {1, kappa}")
    delta = _det_int(cbar)
    if delta <= 0:
        raise AssertionError("determinant of cbar must be positive")
    adj = _inverse_times_det(cbar, delta)  # delta * inverse(cbar)
    lam = [[tvee[a] * adj[a][b] for b in range(r)] for a in range(r)]
    for a in range(r):
        for b in range(r):
            if lam[a][b] != lam[b][a]:
                raise AssertionError("Lambda is not symmetric")
    # Lambda * cbar == delta * diag(tvee)
    for a in range(r):
        for b in range(r):
            s = sum(lam[a][k] * cbar[k][b] for k in range(r))
            if s != (delta * tvee[a] if a == b else 0):
                raise AssertionError("Lambda * cbar != delta * Tvee")
    n2 = 2 * r
    lamtilde = [[0] * n2 for _ in range(n2)]
    bmat = [[0] * n2 for _ in range(n2)]
    for a in range(r):
        for b in range(r):
            lamtilde[a][r + b] = -lam[a][b]
            lamtilde[r + a][b] = lam[a][b]
            bmat[a][r + b] = -cbar[a][b]
            bmat[r + a][b] = cbar[a][b]
    # compatible pair: transpose(b) @ lamtilde == delta * diag(tvee, tvee)
    for i in range(n2):
        for j in range(n2):
            s = sum(bmat[k][i] * lamtilde[k][j] for k in range(n2))
            want = delta * tvee[i % r] if i == j else 0
            if s != want:
                raise AssertionError("compatible-pair identity failed")
    freeze = lambda m: tuple(tuple(row) for row in m)
    return CartanData(
        type_id=type_id,
        cbar=freeze(cbar),
        tvee=tuple(tvee),
        kappa=kappa,
        delta=delta,
        lam=freeze(lam),
        lamtilde=freeze(lamtilde),
        b=freeze(bmat),
    )
