import pytest

from twistq.cartan import TwistedTypeId, cartan_data
from twistq.coeffring import ULaurent
from twistq.torus import TorusElem
from twistq import ctbridge, qsystem

C2 = cartan_data(TwistedTypeId.parse("A2~2", 2))
G2 = cartan_data(TwistedTypeId.parse("D4~3", 2))


@pytest.fixture(scope="module")
def sols():
    return {
        "C2": qsystem.solve(C2, 0, 3),
        "G2": qsystem.solve(G2, 0, 3),
    }


@pytest.mark.parametrize("name", ["C2", "G2"])
@pytest.mark.parametrize("a", [1, 2])
@pytest.mark.parametrize("depth", [4, 8])
def test_window_soundness_deeper_truncation(sols, name, a, depth):
    # terms above the window of a product must match the same product
    # computed at depth + 4
    sol = sols[name]
    data = sol.data
    r = data.rank

    def product(d):
        z1 = ctbridge.zhat_series(sol, 1, 1, d)
        z2 = ctbridge.zhat_series(sol, 2, 1, d + 2)
        return z1 * z2 * z1

    shallow = product(depth)
    deep = product(depth + 4)
    w = shallow.window
    kept = {
        e: c for e, c in deep.body.terms.items()
        if all(e[r + b] >= w[b] for b in range(r))
    }
    shallow_kept = {
        e: c for e, c in shallow.body.terms.items()
        if all(e[r + b] >= w[b] for b in range(r))
    }
    assert kept == shallow_kept


def test_phi_is_linear_and_scalar_multiplicative(sols):
    sol = sols["C2"]
    f = ctbridge.zhat_series(sol, 1, 1, 6)
    g = ctbridge.zhat_series(sol, 2, 1, 6)
    c = ULaurent.u_pow(3, 2)
    assert ctbridge.phi(f + g) == ctbridge.phi(f) + ctbridge.phi(g)
    assert ctbridge.phi(f.scale(c)) == ctbridge.phi(f) * c
    assert ctbridge.phi(TruncatedSeries_one()) == ULaurent.one()


def TruncatedSeries_one():
    return ctbridge.TruncatedSeries.exact(TorusElem.one(C2))


def test_phi_requires_coverage():
    elem = TorusElem.generator(C2, 1, 1)
    shallow = ctbridge.TruncatedSeries(elem, (1, ctbridge.NEG_INF))
    with pytest.raises(ctbridge.WindowTooShallow):
        ctbridge.phi(shallow)


@pytest.mark.parametrize("name", ["C2", "G2"])
@pytest.mark.parametrize("a", [1, 2])
@pytest.mark.parametrize("b_exp", [0, 1, 2])
def test_binomial_summation_identity(sols, name, a, b_exp):
    assert ctbridge.verify_lemma47(sols[name], a, b_exp, depth=8)


def test_l_form_values():
    assert ctbridge.l_form(C2, {(1, 1): 2}, 1) == 8
    assert ctbridge.l_form(C2, {}, 1) == 0
    # level-2 counts enter with min(i, j) weights
    assert ctbridge.l_form(C2, {(1, 2): 1}, 2) == 2 * C2.lam[0][0]


@pytest.mark.parametrize("name", ["C2", "G2"])
def test_constant_term_trivial_cases(sols, name):
    data = sols[name].data
    # empty n, lam = 0: both sides 1
    assert ctbridge.verify_eq416_k1(data, (0, 0), {}, sol=sols[name])
    # lam = omega_a with one count at (a, 1): both sides 1
    for a in (1, 2):
        lam = tuple(1 if b == a else 0 for b in (1, 2))
        assert ctbridge.verify_eq416_k1(
            data, lam, {(a, 1): 1}, sol=sols[name]
        )


def test_constant_term_flagship(sols):
    assert ctbridge.verify_eq416_k1(C2, (0, 0), {(1, 1): 2}, sol=sols["C2"])


def test_split_constant_term_k2(sols):
    assert ctbridge.verify_eq424_split(C2, (0, 0), {(1, 2): 1}, sol=sols["C2"])
    # level-1-only support must reduce to the k=1 picture consistently
    assert ctbridge.verify_eq424_split(
        C2, (0, 0), {(1, 1): 1}, sol=sols["C2"]
    )


def test_functional_choice_kills_all_tails():
    sol = qsystem.solve(C2, 0, 2)
    steps = [ctbridge.tail_steps(sol.q(a, 2), a) for a in (1, 2)]
    v = ctbridge.pick_functional(C2, steps)
    assert v is not None
    for group in steps:
        for s in group:
            assert sum(x * y for x, y in zip(v, s)) < 0
