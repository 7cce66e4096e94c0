import random

import pytest

from twistq.cartan import TwistedTypeId, cartan_data
from twistq.coeffring import ULaurent
from twistq import fermionic

TYPES = {
    "C2": ("A2~2", 2), "C3": ("A2~2", 3), "B2": ("D2~2", 2),
    "G2": ("D4~3", 2), "F4": ("E6~2", 4),
}


def data_for(name):
    t, r = TYPES[name]
    return cartan_data(TwistedTypeId.parse(t, r))


SMALL_CASES = [
    # (lam, n, k) instances small enough for the brute-force oracle
    ((0, 0), {}, 1),
    ((0, 0), {(1, 1): 2}, 1),
    ((0, 0), {(1, 1): 2}, 3),
    ((1, 0), {(1, 1): 1}, 2),
    ((0, 1), {(2, 1): 1}, 2),
    ((0, 0), {(1, 1): 1, (2, 1): 1}, 2),
    ((0, 0), {(1, 2): 1}, 2),
    ((1, 1), {(2, 1): 2}, 2),
    ((0, 0), {(2, 2): 1, (1, 1): 1}, 3),
]


@pytest.mark.parametrize("name", ["C2", "B2", "G2"])
@pytest.mark.parametrize("restricted", [True, False])
@pytest.mark.parametrize("case", SMALL_CASES)
def test_msum_matches_enumeration_oracle(name, restricted, case):
    data = data_for(name)
    lam, n, k = case
    got = fermionic.msum(data, lam, n, k, restricted=restricted)
    want = fermionic.msum_by_enumeration(data, lam, n, k, restricted=restricted)
    assert got == want


def test_msum_backend_dispatch_agrees(monkeypatch):
    # the packed big-integer and modular-evaluation chain backends must agree
    data = data_for("C3")
    lam, n, k = (0, 1, 0), {(1, 1): 1, (2, 2): 1}, 3
    default = fermionic.msum(data, lam, n, k, restricted=False)
    monkeypatch.setattr(fermionic, "_MODEVAL_THRESHOLD", 0)
    forced_modular = fermionic.msum(data, lam, n, k, restricted=False)
    monkeypatch.setattr(fermionic, "_MODEVAL_THRESHOLD", 10 ** 18)
    forced_packed = fermionic.msum(data, lam, n, k, restricted=False)
    assert default == forced_modular == forced_packed


def test_flagship_value():
    data = data_for("C2")
    val = fermionic.msum(data, (0, 0), {(1, 1): 2}, 1, restricted=True)
    assert val == ULaurent.u_pow(-8)  # q^(-2) with q = u^4


def test_zero_weight_solution():
    data = data_for("C2")
    assert fermionic.solve_zero_weight(data, (0, 0), {(1, 1): 2}) == (2, 1)
    # non-integral solution: sums are empty
    assert fermionic.solve_zero_weight(data, (0, 0), {(1, 1): 1}) is None
    assert fermionic.msum(
        data, (0, 0), {(1, 1): 1}, 2, restricted=True
    ) == ULaurent.zero()


def test_modified_vacancy_consistency():
    data = data_for("G2")
    m = ((1, 2), (0, 1))
    n = {(1, 1): 3, (2, 2): 1}
    lam = (1, 0)
    k = 2
    q0 = fermionic.total_spin(data, lam, n, m)
    p = fermionic.vacancy(data, n, m, k)
    q = fermionic.modified_vacancy(data, lam, n, m, k)
    for a in range(2):
        for i in range(k):
            assert q[a][i] == q0[a] + p[a][i]


def _random_admissible(data, rng, k=3):
    """Random (m, n) with zero total spin at lam = 0."""
    r = data.rank
    while True:
        m = tuple(
            tuple(rng.randrange(3) for _ in range(k)) for _ in range(r)
        )
        w = [
            sum(
                i * sum(data.cbar[a][b] * m[b][i - 1] for b in range(r))
                for i in range(1, k + 1)
            )
            for a in range(r)
        ]
        if any(x < 0 for x in w):
            continue
        n = {}
        ok = True
        for a in range(r):
            left = w[a]
            while left:
                i = rng.randint(1, min(left, k))
                n[(a + 1, i)] = n.get((a + 1, i), 0) + 1
                left -= i
        if ok:
            return m, n


@pytest.mark.parametrize("name", sorted(TYPES))
def test_quadratic_form_lambda_identity(name):
    # 2 delta Q(m, n) == sum_j (q_{j-1} - q_j) . Lambda (q_{j-1} - q_j) - L_k
    data = data_for(name)
    rng = random.Random(7)
    r = data.rank
    k = 3
    for _ in range(60):
        m, n = _random_admissible(data, rng, k)
        qf = fermionic.quadratic_form(data, m, n, k)
        q = fermionic.modified_vacancy(data, (0,) * r, n, m, k)
        cols = [tuple(q[a][i] for a in range(r)) for i in range(k)]
        cols = [(0,) * r] + cols  # q_0 = 0 by construction
        quad = 0
        for j in range(1, k + 1):
            d = [cols[j - 1][a] - cols[j][a] for a in range(r)]
            quad += sum(
                d[a] * data.lam[a][b] * d[b]
                for a in range(r) for b in range(r)
            )
        lk = fermionic.aux_forms(data, n, k)["Lk"]
        assert 2 * data.delta * qf == quad - lk


@pytest.mark.parametrize("name", sorted(TYPES))
def test_recombination_closed_forms(name):
    data = data_for(name)
    r = data.rank
    for a in range(1, r + 1):
        row = 2 * sum(data.lam[a - 1])
        laa = data.lam[a - 1][a - 1]
        dt = data.delta * data.tvee[a - 1]
        for m in range(1, 6):
            d, s, kvec = fermionic.recombination_counts(data, a, m)
            fd = fermionic.aux_forms(data, d, m)
            fs = fermionic.aux_forms(data, s, m)
            fk = fermionic.aux_forms(data, kvec, m)
            assert fd["Fhat"] == row
            assert fs["Fhat"] == row
            assert fk["Fhat"] == -dt + row
            assert fd["Lhat"] == (4 * m - 2) * laa
            assert fs["Lhat"] == 4 * m * laa
            assert fk["Lhat"] == -2 * m * dt + 4 * m * laa


@pytest.mark.parametrize("name", sorted(TYPES))
def test_deg_h0_identity(name):
    # deg h0 == -C_mbar + Q(m, n)
    data = data_for(name)
    rng = random.Random(11)
    k = 3
    for _ in range(60):
        m, n = _random_admissible(data, rng, k)
        try:
            qf = fermionic.quadratic_form(data, m, n, k)
        except fermionic.OddParity:
            continue
        assert fermionic.deg_h0(data, m, n, k) == -fermionic.c_mbar(
            data, m
        ) + qf


@pytest.mark.parametrize("name", ["C2", "B2", "G2"])
def test_thm13_identity_small(name):
    data = data_for(name)
    for a in (1, 2):
        for mlevel in (1, 2):
            for lam in ((0, 0), (1, 0), (0, 1)):
                assert fermionic.check_thm13_identity(data, lam, a, mlevel)


def test_restricted_coefficients_nonnegative():
    for name in ("C2", "G2"):
        data = data_for(name)
        for lam, n, k in SMALL_CASES:
            val = fermionic.msum(data, lam, n, k, restricted=True)
            assert all(c > 0 for c in val.terms.values())


def test_multipartition_roundtrip():
    m = ((2, 0, 1), (0, 3, 0))
    mu = fermionic.mode_to_multipartition(m)
    assert fermionic.multipartition_to_mode(mu, 3) == m
