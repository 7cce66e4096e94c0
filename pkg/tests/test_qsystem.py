import json

import pytest

from twistq.cartan import TwistedTypeId, cartan_data
from twistq import qsystem

C2 = cartan_data(TwistedTypeId.parse("A2~2", 2))
G2 = cartan_data(TwistedTypeId.parse("D4~3", 2))


@pytest.fixture(scope="module")
def sols():
    return {
        "C2": qsystem.solve(C2, -2, 4),
        "G2": qsystem.solve(G2, -2, 4),
    }


@pytest.mark.parametrize("name", ["C2", "G2"])
def test_recurrence_resubstitution(sols, name):
    assert sols[name].check_all_entries()


@pytest.mark.parametrize("name", ["C2", "G2"])
def test_coefficients_are_nu_laurent(sols, name):
    assert sols[name].check_coefficient_ring()


@pytest.mark.parametrize("name", ["C2", "G2"])
def test_classical_limit(sols, name):
    assert qsystem.verify_classical(sols[name], 4)


@pytest.mark.parametrize("name", ["C2", "G2"])
def test_exchange_relations(sols, name):
    assert qsystem.verify_lemma45(sols[name])


@pytest.mark.parametrize("name", ["C2", "G2"])
def test_y_complement_factorization(sols, name):
    assert qsystem.verify_lemma46(sols[name])


@pytest.mark.parametrize("name", ["C2", "G2"])
def test_z_rearrangement(sols, name):
    assert qsystem.verify_lemma48(sols[name], b_max=3)


@pytest.mark.parametrize("name", ["C2", "G2"])
@pytest.mark.parametrize("shift", [1, 2])
def test_translation_invariance(sols, name, shift):
    assert qsystem.verify_translation(sols[name], shift, 2)


@pytest.mark.parametrize("name", ["C2", "G2"])
def test_cluster_commutation_on_motzkin_paths(sols, name):
    paths = qsystem.motzkin_paths(2, -1, 3, limit=6)
    assert len(paths) >= 5
    for p in paths:
        assert qsystem.is_motzkin(p)
        ok, failures = qsystem.verify_commutation(sols[name], p)
        assert ok, failures


def test_motzkin_path_generator_rejects_jumps():
    assert qsystem.is_motzkin((0, 0))
    assert qsystem.is_motzkin((0, 1))
    assert not qsystem.is_motzkin((0, 2))


def test_seed_entries_are_generators():
    sol = qsystem.QSolution(C2)
    for a in (1, 2):
        for i in (0, 1):
            assert len(sol.q(a, i).terms) == 1


def test_cache_roundtrip_and_validation(tmp_path):
    cache = str(tmp_path / "qcache")
    cold = qsystem.solve(C2, 0, 3, cache_dir=cache)
    warm = qsystem.solve(C2, 0, 3, cache_dir=cache)
    for a in (1, 2):
        for m in range(0, 4):
            assert cold.q(a, m) == warm.q(a, m)
    # corrupt one cached entry: loading must detect the broken recurrence
    victim = next((tmp_path / "qcache").rglob("Q_1_3.json"))
    obj = json.loads(victim.read_text())
    obj["terms"][0]["c"]["terms"][0][0] += 2
    victim.write_text(json.dumps(obj))
    with pytest.raises(ValueError):
        qsystem.solve(C2, 0, 3, cache_dir=cache)
