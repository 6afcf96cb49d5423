import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qurlab import extractor as ex
from qurlab import gf


def _bijective(perm) -> bool:
    x = np.arange(1 << perm.n, dtype=np.int64)
    z = perm.forward(x)
    return np.array_equal(np.sort(z), x) and np.array_equal(perm.inverse(z), x)


def test_rs_forward_is_polynomial_evaluation():
    ctx = gf.make_field(3)
    p = ex.rs_permutation(ctx, 3, 1, 5)
    coeffs = [6, 1, 3]  # block i is the coefficient of X^i, first block most significant
    x = (coeffs[0] << 6) | (coeffs[1] << 3) | coeffs[2]
    vals = gf.poly_eval_multi(ctx, coeffs, p.points)
    assert p.forward(x) == (vals[0] << 6) | (vals[1] << 3) | vals[2]
    assert p.head(x, 3) == vals[0]
    assert len(set(p.points)) == 3


@pytest.mark.parametrize("t,blocks", [(3, 3), (4, 3), (2, 3)])
def test_rs_bijective_all_seeds(t, blocks):
    fam = ex.rs_family(gf.make_field(t), blocks, 1)
    assert fam.seed_count == (1 << t) - 1
    assert all(_bijective(fam.member(s)) for s in fam.seeds())


def test_rs_errors():
    ctx = gf.make_field(2)
    with pytest.raises(ValueError):
        ex.rs_permutation(ctx, 2, 1, 0)
    with pytest.raises(ValueError):
        ex.rs_permutation(ctx, 4, 1, 1)  # only 3 nonzero points


def test_lhl_trivial_cases():
    ctx = gf.make_field(8)
    x = np.arange(256)
    assert np.array_equal(ex.lhl_permutation(ctx, 1).forward(x), x)
    for y in (1, 7, 200):
        assert ex.lhl_permutation(ctx, y).forward(0) == 0
    with pytest.raises(ValueError):
        ex.lhl_permutation(ctx, 0)


def test_lhl_pairwise_independent_on_nonzero_inputs():
    # for x1 != x2 the map y -> (x1 y, x2 y) hits each admissible pair at most once
    ctx = gf.make_field(4)
    x = np.arange(1, 16)
    tabs = np.stack([ex.lhl_permutation(ctx, y).forward(x) for y in range(1, 16)])
    for i in range(15):
        for j in range(i + 1, 15):
            pairs = set(zip(tabs[:, i].tolist(), tabs[:, j].tolist()))
            assert len(pairs) == 15


@settings(max_examples=40, deadline=None)
@given(a=st.integers(1, 15), b=st.integers(0, 15))
def test_affine_bijective(a, b):
    assert _bijective(ex.AffinePermutation(gf.make_field(4), a, b))


def test_compose_with_identity_is_original():
    fam = ex.lhl_family(6, 3)
    comp = ex.compose_families(fam, ex.identity_family(3))
    assert comp.seed_count == fam.seed_count
    for s in list(comp.seeds())[:10]:
        assert np.array_equal(comp.member(s).table(), fam.member(s[:1]).table())


def test_compose_lhl_after_rs_bijective():
    rs = ex.rs_family(gf.make_field(4), 2, 1)  # n = 8, head 4 bits
    comp = ex.compose_families(rs, ex.lhl_family(4, 2))
    assert comp.n == 8 and comp.m == 2
    assert comp.seed_count == rs.seed_count * 15
    assert all(_bijective(comp.member(s)) for s in comp.seeds())
    with pytest.raises(ValueError):
        ex.compose_families(rs, ex.lhl_family(5, 2))


def test_block_extract_toy_bijective():
    fam = ex.block_extract_family(12, 1, 1, 0.5, t=4)
    assert fam.n == 12
    for s in fam.seeds():
        assert _bijective(fam.member(s))
    seed = next(iter(fam.seeds()))
    assert fam.member(seed).forward(1234) == fam.member(seed).forward(1234)
    assert math.log2(fam.seed_count) <= fam.params["seed_bits_bound"]


def test_block_extract_infeasible():
    with pytest.raises(ValueError, match="infeasible"):
        ex.block_extract_family(12, 1, 1, 0.5, t=5)
    with pytest.raises(ValueError, match="infeasible"):
        ex.block_extract_family(1 << 10, 1, 1, 0.01)


def test_baseext_seed_accounting():
    p = ex.baseext_params(1000, 2, 4, 0.01)
    t = math.ceil(8 * 4 * math.log2(24 * 1000**2 * 17 / 0.01))
    assert p["t"] == t and p["k"] == 4 * t and p["m"] == 2 * t
    assert p["seed_bits_bound"] == 4 * t / 4 + t


def test_guv_parameter_calculator():
    n = 2**20
    eps = 2.0**-10
    p = ex.guv_params(n, n // 2, eps)
    bound = 200 * math.ceil(200 * math.log2(24 * n * n / eps))
    assert p["seed_bits_bound"] == bound
    assert p["seed_bits"] <= bound
    assert p["output_bits"] == (n // 2) // 4 == 131072


def test_guv_infeasible_reports_inequality():
    with pytest.raises(ValueError, match="k >= 2t"):
        ex.guv_params(1000, 500, 0.1)
    with pytest.raises(ValueError, match="eps"):
        ex.guv_params(1000, 500, 0.7)


@pytest.mark.parametrize("delta,stages", [(0.5, 3), (0.25, 5), (0.125, 8), (0.01, 17)])
def test_guv_iteration_stage_counts(delta, stages):
    n = 2**40
    it = ex.guv_iteration(n, n // 2, 2.0**-10, delta)
    assert it["stages"] == stages
    assert it["extracted_bits"] >= (1 - delta) * (n // 2)
    assert it["stages"] <= it["log_bound"] + 1


def test_guv_toy_bijective_n16(rng):
    fam = ex.guv_family(16, 12, 0.25, toy={"t": 4, "stages": 1})
    seeds = [fam.seed_at(int(i)) for i in rng.choice(fam.seed_count, 16, replace=False)]
    for s in seeds:
        assert _bijective(fam.member(s))


def test_guv_without_toy_raises():
    with pytest.raises(ValueError, match="desk scale"):
        ex.guv_family(2**20, 2**19, 2.0**-10)


def test_repeat_families_bijective():
    fam = ex.guv_family(10, 8, 0.25, toy={"t": 3, "stages": 2})
    assert fam.m == 2
    for s in fam.seeds():
        assert _bijective(fam.member(s))


def test_condenser_trivial_cases():
    fam = ex.lhl_family(6, 3)
    uni = np.full(64, 1 / 64)
    r = ex.verify_condenser(fam, 6, 3, [uni])
    assert r["worst_excess"] == pytest.approx(0.0) and r["worst_tv"] == pytest.approx(0.0)
    point = np.zeros(64)
    point[5] = 1
    r = ex.verify_condenser(ex.identity_family(6), 0, 3, [point], m=3)
    assert r["worst_excess"] == pytest.approx(1 - 2.0**-3)


def test_extractor_uniform_source_full_head(rng):
    fam = ex.lhl_family(6, 6)
    r = ex.verify_extractor(fam, 6, 0.1, 3, rng, m=6)
    assert r["max_tv"] == pytest.approx(0.0)


def test_lhl_extractor_meets_leftover_hash_bound(rng):
    fam = ex.lhl_family(8, 2, 0.5, 6)
    r = ex.verify_extractor(fam, 6, 0.5, 50, rng)
    assert r["pass"]
    assert r["max_tv"] <= ex.lhl_bound(2, 6) + 1e-12
    assert ex.lhl_bound(2, 6) == 0.125


class _Constant(ex.BitPermutation):
    def __init__(self, n):
        self.n = n

    def _fwd(self, x):
        return np.zeros_like(x)


def test_broken_family_fails(rng):
    fam = ex.ExtractorFamily(6, 3, ((0,),), lambda s: _Constant(6), "broken")
    r = ex.verify_extractor(fam, 4, 0.5, 5, rng)
    assert not r["pass"]
    assert r["max_tv"] == pytest.approx(1 - 2.0**-3)


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_head_truncation_never_increases_tv(seed):
    r = np.random.default_rng(seed)
    fam = ex.lhl_family(7, 4)
    support = ex.flat_source(7, 4, r)
    p = np.zeros(128)
    p[support] = 1 / support.size
    tvs = [ex.verify_condenser(fam, 4, m, [p], m=m)["worst_tv"] for m in range(1, 5)]
    assert all(a <= b + 1e-12 for a, b in zip(tvs, tvs[1:]))


def test_composition_error_adds(rng):
    rs = ex.rs_family(gf.make_field(4), 2, 1)
    outer = ex.lhl_family(4, 2)
    comp = ex.compose_families(rs, outer)
    support = ex.flat_source(8, 6, rng)
    p = np.zeros(256)
    p[support] = 1 / support.size
    e_rs = ex.verify_condenser(rs, 6, 4, [p])["worst_tv"]
    # outer error measured on the worst condensed head distribution
    heads = np.stack([ex.head_table(rs.member(s), 4) for s in rs.seeds()])
    e_out = max(ex.verify_condenser(outer, 4, 2, [np.bincount(h, weights=p, minlength=16)])["worst_tv"]
                for h in heads)
    e_comp = ex.verify_condenser(comp, 6, 2, [p])["worst_tv"]
    assert e_comp <= e_rs + e_out + 1e-12
