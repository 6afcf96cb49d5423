import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qurlab import mub
from qurlab import qcext as qx
from qurlab import quantum_core as qc

LOG3M1 = math.log2(3) - 1


def test_pairwise_family():
    fam = qx.pairwise_perm_family(4)
    assert len(fam) == 12
    assert np.array_equal(fam[0].forward(np.arange(4)), np.arange(4))  # a=1, b=0
    for q in (2, 4, 8, 16):
        assert qx.check_pairwise_independent(qx.pairwise_perm_family(q))
    with pytest.raises(ValueError):
        qx.pairwise_perm_family(6)


def test_non_pairwise_family_detected():
    fam = qx.pairwise_perm_family(4)
    assert not qx.check_pairwise_independent(fam[:4])


@pytest.mark.parametrize("d,count", [(2, 6), (4, 60)])
def test_full_mub_qcext_members(d, count):
    ens = qx.build_full_mub_qcext(d)
    assert len(ens) == count == (d + 1) * d * (d - 1)
    mubs = mub.build_exact_mubs(d.bit_length() - 1)
    perms = qx.pairwise_perm_family(d)
    for i, m in enumerate(ens.members):
        u = m.matrix()
        assert np.allclose(u @ u.conj().T, np.eye(d), atol=1e-10)
        p = mub.UnitarySpec(mubs.n_qubits, (mub.PermStage(perms[i % len(perms)], mubs.n_qubits),)).matrix()
        assert np.allclose(u, p @ mubs[i // len(perms)].matrix())
    with pytest.raises(ValueError):
        qx.build_full_mub_qcext(16)


def test_bitwise_counts():
    assert len(qx.build_bitwise_qcext(2, 1)) == 6
    assert len(qx.build_bitwise_qcext(2, 2)) == 108
    with pytest.raises(ValueError):
        qx.build_bitwise_qcext(3, 1)


def test_maximally_mixed_a_decoupled(rng):
    ens = qx.build_full_mub_qcext(4)
    rho_e = qc.random_density(4, rng)
    rep = qx.decoupling_eval(ens, np.kron(np.eye(4) / 4, rho_e), 2, 4)
    assert max(rep.distances) < 1e-9
    assert rep.passed


def test_maximally_entangled_bound_vacuous():
    ens = qx.build_full_mub_qcext(4)
    phi = qc.maximally_entangled(4)
    rep = qx.decoupling_eval(ens, phi, 4, 4)
    assert rep.entropies["h2"] == pytest.approx(-2.0)
    assert rep.avg > 1.0
    assert rep.bounds["h2_bound"] >= 1.0
    assert rep.passed


def test_decoupling_dimension_errors(rng):
    ens = qx.build_full_mub_qcext(4)
    with pytest.raises(ValueError):
        qx.decoupling_eval(ens, qc.haar_state(8, rng), 2, 4)
    with pytest.raises(ValueError):
        qx.decoupling_eval(ens, qc.haar_state(16, rng), 3, 4)


def test_relabeling_invariance(rng):
    # flipping the leading A1 bit and any A2 bit after a member leaves each distance unchanged
    ens = qx.build_full_mub_qcext(4)
    psi = qc.haar_state(16, rng)
    rho = np.outer(psi, psi.conj())
    flip = np.kron(np.array([[0, 1], [1, 0]]), np.array([[0, 1], [1, 0]]))
    for m in ens.members[:12]:
        u = m.matrix()
        assert qx.member_distance(flip @ u, rho, 2, 4) == pytest.approx(qx.member_distance(u, rho, 2, 4))


def test_convexity_spot_check(rng):
    ens = qx.build_full_mub_qcext(2)
    a, b = qc.random_density(4, rng), qc.random_density(4, rng)
    la = qx.decoupling_eval(ens, a, 2, 2).avg
    lb = qx.decoupling_eval(ens, b, 2, 2).avg
    lm = qx.decoupling_eval(ens, 0.3 * a + 0.7 * b, 2, 2).avg
    assert lm <= 0.3 * la + 0.7 * lb + 1e-12


def test_bound_formulas():
    assert qx.full_mub_bound(4, 2, 0.0) == pytest.approx(math.sqrt(2 / 5))
    xi = 1 / 2
    want = math.sqrt(2 ** ((1 - math.log2(3) + xi) * 2) * 2)
    assert qx.bitwise_bound(2, 2, 2, 0.0) == pytest.approx(want)
    assert qx.random_bound(16, 2, 1.0, 0.0, "loose") == pytest.approx(math.sqrt(2 * 2 / 16 / 2))
    assert qx.random_bound(16, 2, 1.0, 0.0, "full") == pytest.approx(math.sqrt(2 / 17 / 2))


def test_random_experiment_product_state_zero():
    # t=1 with rho_AE = pi_A (x) rho_E is exactly decoupled, realized via d_A1 = 1
    r = qx.random_qcext_experiment(4, 1, 2, 1, 3, np.random.default_rng(0))
    assert r["mean"] == pytest.approx(0.0, abs=1e-12)


def test_random_experiment_increases_with_a1():
    means = [qx.random_qcext_experiment(8, a1, 2, 4, 10, np.random.default_rng(4))["mean"] for a1 in (2, 4, 8)]
    assert means[0] < means[1] < means[2]


def test_minent_bounds():
    v = qx.minent_ur_bound("full_mub", hmin=1.0, eps=0.5, d_a=4)
    assert v == pytest.approx(math.log2(5) + 1 - math.log2(1 / (0.125**2)) - 1)
    with pytest.raises(ValueError):
        qx.minent_ur_bound("bitwise", hmin=5.0, eps=0.5, delta_p=0.1, n=2)
    v = qx.minent_ur_bound("bitwise", hmin=5.0, eps=0.9, delta_p=0.05, n=2)
    z = math.log2(2 / 0.0025 + 1)
    assert v == pytest.approx(2 * LOG3M1 + min(0, 5 - z) - math.log2(1 / (0.405 - 0.1) ** 2) - 2)
    with pytest.raises(ValueError):
        qx.minent_ur_bound("full_mub", hmin=1.0, eps=0.1, delta=0.01, d_a=4)
    with pytest.raises(ValueError):
        qx.minent_ur_bound("other", hmin=1.0, eps=0.5)


def test_vn_examples():
    phi = qc.maximally_entangled(2)
    r = qx.vn_uncertainty_check(phi, 1, 2)
    assert r["lhs"] == pytest.approx(0.0, abs=1e-9)
    assert r["rhs"] == pytest.approx(math.log2(3) - 2)
    r = qx.vn_uncertainty_check(np.kron(np.diag([1.0, 0.0]), np.eye(2) / 2), 1, 2)
    assert r["lhs"] == pytest.approx(2 / 3) and r["rhs"] == pytest.approx(LOG3M1)
    r = qx.vn_uncertainty_check(np.eye(4) / 4, 1, 2)
    assert r["lhs"] == pytest.approx(1.0) and r["pass"]
    with pytest.raises(ValueError):
        qx.vn_uncertainty_check(np.eye(4) / 4, 1, 2, d=3)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rank=st.integers(1, 4))
def test_vn_random_states(seed, rank):
    rho = qc.random_density(4, np.random.default_rng(seed), rank)
    assert qx.vn_uncertainty_check(rho, 1, 2)["pass"]


def test_qcreport_json(rng):
    rep = qx.decoupling_eval(qx.build_full_mub_qcext(2), qc.random_density(4, rng), 2, 2)
    assert '"avg"' in rep.to_json()
    assert rep.avg == pytest.approx(np.mean(rep.distances))
    assert all(0 <= x <= 2 for x in rep.distances)


def test_bitwise_vacuous_flag():
    ens = qx.build_bitwise_qcext(2, 1)
    ent = qc.maximally_entangled(2)  # H_min(A|E) = -1, below -(log 3 - 1)
    assert qx.decoupling_eval(ens, ent, 2, 2).vacuous
    prod = np.kron(np.diag([1.0, 0.0]), np.eye(2) / 2)
    rep = qx.decoupling_eval(ens, prod, 2, 2)
    assert rep.entropies["hmin"] == pytest.approx(0.0)
    assert not rep.vacuous
