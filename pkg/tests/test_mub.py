import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qurlab import gf, mub
from qurlab import quantum_core as qc
from qurlab.extractor import AffinePermutation


@pytest.mark.parametrize("lab", ["I", "H", "SH", "V2", "SHdg", "V2dg"])
def test_gates_unitary(lab):
    g = mub.GATES[lab]
    assert np.allclose(g @ g.conj().T, np.eye(2))


def test_qubit_bases_mutually_unbiased():
    # I, H and V2 give the three Pauli eigenbases
    for a, b in [("I", "H"), ("I", "V2"), ("H", "V2")]:
        ov = np.abs(mub.GATES[a] @ mub.GATES[b].conj().T)
        assert np.allclose(ov, 1 / math.sqrt(2))


def test_printed_third_basis_form_is_not_unitary():
    m = np.array([[1, 1j], [1j, -1]]) / math.sqrt(2)
    assert not np.allclose(m @ m.conj().T, np.eye(2))


def test_quadratic_form_table_matches_scalar():
    for n in (2, 3, 4):
        ctx = gf.make_field(n)
        for j in range(1 << n):
            u = [(j >> i) & 1 for i in range(n)]
            tab = mub.quadratic_form_table(n, mub.alpha_vector(ctx, u))
            for v in range(1 << n):
                bits = [(v >> i) & 1 for i in range(n)]
                assert tab[v] == mub.quadratic_form_T(ctx, u, bits)
    assert not tab.flags.writeable


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_exact_mubs_unbiased(n):
    ens = mub.build_exact_mubs(n)
    assert len(ens) == (1 << n) + 1
    mats = [m.matrix() for m in ens.members]
    for u in mats:
        assert np.allclose(u @ u.conj().T, np.eye(ens.dim), atol=1e-12)
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            assert np.allclose(np.abs(mats[i] @ mats[j].conj().T), ens.dim ** -0.5, atol=1e-10)


def test_exact_mubs_arguments():
    assert len(mub.build_exact_mubs(3, 4)) == 4
    for bad in [(0, None), (7, None), (2, 6), (2, 0)]:
        with pytest.raises(ValueError):
            mub.build_exact_mubs(*bad)


def test_adjoint_and_then(rng):
    ens = mub.build_exact_mubs(3)
    u, v = ens[3], ens[5]
    psi = qc.haar_state(8, rng)
    assert np.allclose(u.apply_adjoint(u.apply(psi)), psi)
    assert np.allclose(u.then(v).matrix(), v.matrix() @ u.matrix())
    with pytest.raises(ValueError):
        u.apply(np.ones(4))


def test_perm_stage_and_embedding():
    ctx = gf.make_field(2)
    p = AffinePermutation(ctx, 3, 1)
    st = mub.PermStage(p, 2)
    m = mub.UnitarySpec(2, (st,)).matrix()
    want = np.zeros((4, 4))
    for x in range(4):
        want[p.forward(x), x] = 1
    assert np.allclose(m, want)
    assert np.allclose(mub.UnitarySpec(2, (st.inverse(),)).matrix(), want.T)
    emb = mub.UnitarySpec(2, (st, mub.LocalStage(("H", "I")))).embed_low(3).matrix()
    assert np.allclose(emb, np.kron(np.eye(2), mub.LocalStage(("H", "I")).apply(want.astype(complex))))


def test_ensemble_validation():
    with pytest.raises(ValueError):
        mub.EnsembleSpec(())
    with pytest.raises(ValueError):
        mub.EnsembleSpec((mub.UnitarySpec(1), mub.UnitarySpec(2)))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_two_design(n):
    assert mub.check_2design(mub.build_exact_mubs(n)) < 1e-10
    with pytest.raises(ValueError):
        mub.check_2design(mub.build_exact_mubs(n, 2))


def test_non_mub_is_not_two_design():
    # computational basis repeated d+1 times is far from a 2-design
    ens = mub.EnsembleSpec(tuple(mub.UnitarySpec(1) for _ in range(3)))
    assert mub.check_2design(ens) > 0.1


def test_hadamard_codewords():
    words = mub.hadamard_codewords(2)
    assert words == [(0, 0, 0, 0), (0, 1, 0, 1), (0, 0, 1, 1), (0, 1, 1, 0)]
    assert all(mub.hamming(a, b) == 2 for i, a in enumerate(words) for b in words[i + 1:])


@pytest.mark.parametrize("variant,n_prime", [("hadamard_code", 1), ("hadamard_code", 2), ("concatenated", 1)])
def test_hadamard_ensemble_gamma(variant, n_prime):
    ens = mub.build_hadamard_mubs(n_prime, variant)
    g = ens.params["gamma"]
    assert mub.verify_gamma_mub(ens, g) <= 1e-12
    # slightly larger gamma must fail
    assert mub.verify_gamma_mub(ens, g + 0.05) > 0


@pytest.mark.parametrize("n_prime", [1, 2, 3])
def test_hadamard_pattern_overlap_law(n_prime):
    ens = mub.build_hadamard_mubs(n_prime)
    words = ens.params["codewords"]
    mats = [m.matrix() for m in ens.members]
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            want = 2.0 ** (-mub.hamming(words[i], words[j]) / 2)
            assert abs(mub.overlap_matrix_max(mats[i], mats[j]) - want) < 1e-12


def test_hadamard_arguments():
    with pytest.raises(ValueError):
        mub.build_hadamard_mubs(4)
    with pytest.raises(ValueError):
        mub.build_hadamard_mubs(1, "other")
    with pytest.raises(ValueError):
        mub.build_hadamard_mubs(2, r=99)


def test_flatten_uniform_state():
    ens = mub.build_exact_mubs(2)
    psi = np.full(4, 0.5, dtype=complex)
    rows = mub.minentropy_flatten(ens, psi, 0.5, 1.0)
    assert [r["in_T"] for r in rows] == [True, False, True, True, True]
    # the Hadamard member maps the uniform state to |0>
    assert rows[1]["w"] == pytest.approx(1.0)
    assert rows[0]["w"] == pytest.approx(0.25)


def test_flatten_uniform_state_three_qubits():
    rows = mub.minentropy_flatten(mub.build_exact_mubs(3), np.full(8, 8 ** -0.5, dtype=complex), 0.5, 1.0)
    # H maps the uniform state to |0>, so its block holds all of S
    assert not rows[1]["in_T"] and rows[1]["w"] == pytest.approx(1.0)
    for r in rows[2:]:
        assert r["in_T"] and r["hmin_q"] >= 1.5 - math.log2(32)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(1, 4))
def test_flatten_properties(seed, n):
    ens = mub.build_exact_mubs(n)
    psi = qc.haar_state(1 << n, np.random.default_rng(seed))
    rows = mub.minentropy_flatten(ens, psi, 0.5, 1.0)
    # Gram-matrix bound for the mass of |S| vectors with pairwise overlaps d^{-1/2}
    size = math.floor(2 ** (n / 2) + 1e-12)
    assert sum(r["w"] for r in rows) <= 1 + (size - 1) * 2 ** (-n / 2) + 1e-12
    for r in rows:
        assert r["tv_to_q"] <= r["w"] + 1e-12
        # q is a distribution with max entry above 1/d
        assert r["hmin_q"] <= n + 1e-12
