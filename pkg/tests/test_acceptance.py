"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

import math
import time

import numpy as np

from qurlab import extractor as ex
from qurlab import gf
from qurlab import locking as lk
from qurlab import mub
from qurlab import mur
from qurlab import qcext
from qurlab import quantum_core as qc
from qurlab import wse

LOG3 = math.log2(3)


def test_criterion_01_mub_exactness(report_line):
    t0 = time.perf_counter()
    worst = 0.0
    for n in (1, 2, 3, 4):
        d = 1 << n
        mats = [m.matrix() for m in mub.build_exact_mubs(n).members]
        assert len(mats) == d + 1
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                dev = np.abs(np.abs(mats[i] @ mats[j].conj().T) - d ** -0.5).max()
                worst = max(worst, float(dev))
    dt = time.perf_counter() - t0
    ok = worst < 1e-10 and dt < 5
    report_line(1, ok, f"max |overlap - d^-1/2| = {worst:.2e} at d in 2,4,8,16; {dt:.2f}s")
    assert ok


def test_criterion_02_two_design(report_line):
    t0 = time.perf_counter()
    res = {1 << n: mub.check_2design(mub.build_exact_mubs(n)) for n in (1, 2, 3)}
    dt = time.perf_counter() - t0
    ok = max(res.values()) < 1e-10 and dt < 10
    report_line(2, ok, f"residuals {', '.join(f'd={d}: {r:.1e}' for d, r in res.items())}; {dt:.2f}s")
    assert ok


def test_criterion_03_hadamard_pattern(report_line):
    worst = 0.0
    for n_prime in (1, 2, 3):
        ens = mub.build_hadamard_mubs(n_prime)
        words = ens.params["codewords"]
        mats = [m.matrix() for m in ens.members]
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                want = 2.0 ** (-mub.hamming(words[i], words[j]) / 2)
                worst = max(worst, abs(mub.overlap_matrix_max(mats[i], mats[j]) - want))
    ok = worst < 1e-12
    report_line(3, ok, f"max deviation from 2^(-dist/2) = {worst:.2e} at n = 2, 4, 8")
    assert ok


def test_criterion_04_rs_bijectivity(report_line):
    t0 = time.perf_counter()
    fam = ex.rs_family(gf.make_field(4), 3, 1)
    xs = np.arange(1 << 12, dtype=np.int64)
    failures, cases = 0, 0
    for seed in fam.seeds():
        p = fam.member(seed)
        img = p.forward(xs)
        failures += int((p.inverse(img) != xs).sum())
        failures += int(np.unique(img).size != xs.size)
        cases += xs.size
    dt = time.perf_counter() - t0
    ok = failures == 0 and cases == 4096 * 15 and dt < 5
    report_line(4, ok, f"{cases} cases over {fam.seed_count} seeds, {failures} failures; {dt:.2f}s")
    assert ok


def test_criterion_05_lhl(report_line, rng):
    t0 = time.perf_counter()
    fam = ex.lhl_family(8, 2)
    res = ex.verify_extractor(fam, 6, 0.5, 200, rng, intervals=False)
    dt = time.perf_counter() - t0
    lhl = ex.lhl_bound(2, 6)
    worst = res["max_random"]
    # sqrt(2^(2-6))/2 evaluates to 1/8; the stated 1/4 is looser
    ok = worst <= 0.5 and worst <= lhl + 1e-12 and abs(lhl - 0.125) < 1e-15 and dt < 30
    report_line(5, ok, f"max avg-TV {worst:.4f} <= 1/2 and <= sqrt(2^(m-k))/2 = {lhl} (criterion text says 1/4); "
                       f"{dt:.2f}s")
    assert ok


def test_criterion_06_locking_attack(report_line):
    s = lk.LockingScheme(mub.build_exact_mubs(1), 1)
    rep = lk.attack_eval(s, lk.computational_attack(2))
    dev = abs(rep["max_delta"] - 1 / 6)
    ok = s.t == 3 and dev < 1e-12
    report_line(6, ok, f"max Delta = {rep['max_delta']:.15f}, |. - 1/6| = {dev:.1e}")
    assert ok


def _haar_rho(d, rng):
    psi = qc.haar_state(d, rng)
    return np.outer(psi, psi.conj())


def test_criterion_07_full_mub_decoupling(report_line, rng):
    t0 = time.perf_counter()
    ens = qcext.build_full_mub_qcext(4)
    viol, margin = 0, math.inf
    for _ in range(100):
        rep = qcext.decoupling_eval(ens, _haar_rho(16, rng), 2, 4)
        gap = rep.bounds["h2_bound"] - rep.avg
        margin = min(margin, gap)
        viol += gap < -1e-9
    rho_e = qc.random_density(4, rng)
    prod = qcext.decoupling_eval(ens, np.kron(np.eye(4) / 4, rho_e), 2, 4)
    dt = time.perf_counter() - t0
    ok = viol == 0 and abs(prod.avg) < 1e-9 and dt < 120
    report_line(7, ok, f"{viol} violations in 100 states (min slack {margin:.4f}); "
                       f"pi_A x rho_E LHS = {prod.avg:.1e}; {dt:.1f}s")
    assert ok


def test_criterion_08_bitwise_decoupling(report_line, rng):
    t0 = time.perf_counter()
    ens = qcext.build_bitwise_qcext(2, 2)
    viol, margin = 0, math.inf
    for _ in range(100):
        rep = qcext.decoupling_eval(ens, _haar_rho(16, rng), 2, 4)
        gap = rep.bounds["h2_bound"] - rep.avg
        margin = min(margin, gap)
        viol += gap < -1e-9
    dt = time.perf_counter() - t0
    ok = len(ens) == 108 and viol == 0 and dt < 300
    report_line(8, ok, f"{len(ens)} members, {viol} violations in 100 states (min slack {margin:.4f}); {dt:.1f}s")
    assert ok


def test_criterion_09_von_neumann_ur(report_line, rng):
    t0 = time.perf_counter()
    viol = 0
    for _ in range(1000):
        rho = qc.random_density(4, rng, rank=int(rng.integers(1, 5)))
        viol += not qcext.vn_uncertainty_check(rho)["pass"]
    zero = np.zeros((4, 4))
    zero[0, 0] = 1.0  # |0>_A with a trivial E factor
    z = qcext.vn_uncertainty_check(zero)
    dt = time.perf_counter() - t0
    ok = viol == 0 and abs(z["lhs"] - 2 / 3) < 1e-12 and abs(z["rhs"] - (LOG3 - 1)) < 1e-12 and dt < 60
    report_line(9, ok, f"{viol} violations in 1000 states; |0> case lhs = {z['lhs']:.12f}, "
                       f"rhs = {z['rhs']:.6f}; {dt:.1f}s")
    assert ok


def test_criterion_10_gamma_formula(report_line, rng):
    t0 = time.perf_counter()
    parts, ok = [], True
    for d_a, d_b in ((2, 2), (4, 4), (8, 8)):
        d = d_a * d_b
        g = rng.standard_normal((100_000, d)) + 1j * rng.standard_normal((100_000, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        vals = np.sqrt((np.abs(g.reshape(-1, d_a, d_b)) ** 2).sum(axis=2)).sum(axis=1)
        mean, se = vals.mean(), vals.std(ddof=1) / math.sqrt(vals.size)
        want = mur.gamma_expectation(d_a, d_b)
        z = abs(mean - want) / se
        ok &= z <= 3
        parts.append(f"({d_a},{d_b}) z={z:.2f}")
    spot = mur.gamma_expectation(2, 1)
    ok &= abs(spot - 4 / 3) < 1e-12
    dt = time.perf_counter() - t0
    ok &= dt < 60
    report_line(10, ok, f"{'; '.join(parts)}; Gamma(2,1) = {spot:.12f}; {dt:.1f}s")
    assert ok


def test_criterion_11_wse_honest(report_line, rng):
    t0 = time.perf_counter()
    n = 100_000
    tr = wse.wse_run(n, rng)
    match = tr.theta == tr.theta_b
    disagree = int((tr.x_b[match] != tr.x[match]).sum())
    p_i = match.mean()
    z_i = abs(p_i - 1 / 3) / math.sqrt((1 / 3) * (2 / 3) / n)
    mis = ~match
    p_eq = (tr.x_b[mis] == tr.x[mis]).mean()
    z_m = abs(p_eq - 0.5) / math.sqrt(0.25 / mis.sum())
    dt = time.perf_counter() - t0
    ok = disagree == 0 and z_i <= 3 and z_m <= 3 and dt < 10
    report_line(11, ok, f"{disagree} matched-basis disagreements; Pr[i in I] = {p_i:.4f} (z={z_i:.2f}); "
                        f"mismatched agreement {p_eq:.4f} (z={z_m:.2f}); {dt:.2f}s")
    assert ok


def test_criterion_12_noisy_storage(report_line):
    res = wse.wse_security_params(10_000, 0.01, 3000)
    hand = LOG3 - 1 - 3000 / 10_000 - 8 * math.log2(4 / 0.01) / 10_000
    ok = abs(res["lambda_max"] - hand) < 1e-3 and abs(hand - 0.278) < 1e-3
    report_line(12, ok, f"lambda_max = {res['lambda_max']:.6f}, hand value {hand:.6f}")
    assert ok


def test_criterion_13_qid_deviation(report_line, rng):
    t0 = time.perf_counter()
    ens = mub.build_exact_mubs(3)
    split = (2, 4)  # d_A = 2, d_B = 4
    viol, worst_ratio, viol_w = 0, 0.0, 0
    for _ in range(50):
        rep = lk.qid_report(ens, qc.haar_state(8, rng), qc.haar_state(8, rng), split)
        viol += not rep["pass"]
        viol_w += rep["deviation"] > rep["bound_with_weights"] + 1e-12
        if rep["bound"] > 0:
            worst_ratio = max(worst_ratio, rep["deviation"] / rep["bound"])
    dt = time.perf_counter() - t0
    ok = viol == 0 and dt < 60
    report_line(13, ok, f"{viol} violations of 12e+2sqrt(e) in 50 pairs ({viol_w} of the weighted form); "
                        f"max deviation/bound = {worst_ratio:.3f}; {dt:.1f}s")
    assert ok


def test_criterion_14_random_mur(report_line, rng):
    t0 = time.perf_counter()
    res = mur.random_mur_experiment(8, 8, 16, 200, rng)
    dt = time.perf_counter() - t0
    lim = math.sqrt(1 / 8) + 3 * res["sem"]
    ok = res["mean"] <= lim and dt < 120
    report_line(14, ok, f"mean avg-TV {res['mean']:.4f} (sem {res['sem']:.4f}) <= {lim:.4f}; {dt:.1f}s")
    assert ok


def test_criterion_15_invariants(report_line, rng):
    tol = 1e-9
    bad = {"hmin<=h2": 0, "fvdg": 0, "swap": 0, "orth": 0}
    for _ in range(1000):
        rho = qc.random_density(4, rng, rank=int(rng.integers(1, 5)))
        sigma = qc.partial_trace(rho, [2, 2], [1]) if rng.random() < 0.5 else qc.random_density(2, rng)
        bad["hmin<=h2"] += qc.hmin_rel(rho, sigma, 2, 2) > qc.h2_rel(rho, sigma, 2, 2) + tol
    for _ in range(1000):
        d = int(rng.integers(2, 6))
        a = qc.random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        b = qc.random_density(d, rng, rank=int(rng.integers(1, d + 1)))
        f, t = qc.fidelity(a, b), qc.trace_distance(a, b)
        bad["fvdg"] += not (1 - f - tol <= t <= math.sqrt(max(0.0, 1 - f * f)) + tol)
    for _ in range(100):
        d = int(rng.integers(2, 6))
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        b = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        lhs = np.trace(np.kron(a, b) @ qc.swap_operator(d))
        bad["swap"] += abs(lhs - np.trace(a @ b)) > tol
    for _ in range(100):
        d = int(rng.integers(2, 9))
        s = int(rng.integers(1, d + 1))
        u = rng.standard_normal((d, s)) + 1j * rng.standard_normal((d, s))
        u /= np.linalg.norm(u, axis=0)
        v = qc.orthogonalize(u)
        g = np.abs(u.conj().T @ u) ** 2
        np.fill_diagonal(g, 0.0)
        lhs = (np.linalg.norm(u - v, axis=0) ** 2).sum() / s
        ortho = np.abs(v.conj().T @ v - np.eye(s)).max() < tol
        bad["orth"] += not (ortho and lhs <= g.sum() / s + tol)
    ok = not any(bad.values())
    report_line(15, ok, "violations " + ", ".join(f"{k}: {v}" for k, v in bad.items())
                        + " (1000/1000/100/100 trials)")
    assert ok
