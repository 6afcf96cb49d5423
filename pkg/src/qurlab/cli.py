"""Command-line experiment runner.

Every command writes a table (CSV or JSON) and exits with 0 when its check
passes, 1 when it fails and 2 on a parameter error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import extractor as ex
from . import gf
from . import locking as lk
from . import mub
from . import mur
from . import qcext as qc
from . import quantum_core as qcore
from . import wse

EXIT_OK, EXIT_FAIL, EXIT_PARAM = 0, 1, 2


class ParamError(ValueError):
    pass


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v) or math.isinf(v):
            return str(v)
        return float(f"{v:.12g}")
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (list, tuple)):
        return [_fmt(x) for x in v]
    return v


def _pmap(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _rng(args) -> np.random.Generator:
    return np.random.default_rng(args.seed)


# ---------------------------------------------------------------- mub

def cmd_mub_verify(a):
    ens = mub.build_exact_mubs(a.n, a.bases)
    exc = mub.verify_gamma_mub(ens, a.gamma)
    return [{"n": a.n, "bases": a.bases, "gamma": a.gamma, "excess": exc, "pass": exc <= a.tol}]


def cmd_mub_design2(a):
    res = mub.check_2design(mub.build_exact_mubs(a.n))
    return [{"n": a.n, "d": 1 << a.n, "residual": res, "pass": res < a.tol}]


def cmd_mub_flatten(a):
    r = math.ceil(2 / a.eps ** 2)
    ens = mub.build_exact_mubs(a.n, min(r, (1 << a.n) + 1))
    d = 1 << a.n
    if a.state == "uniform":
        psi = np.full(d, d ** -0.5, dtype=complex)
    elif a.state == "basis0":
        psi = qcore.ket(0, d)
    else:
        psi = qcore.haar_state(d, _rng(a))
    rows = mub.minentropy_flatten(ens, psi, a.eps, a.gamma)
    good = sum(x["in_T"] and x["tv_to_q"] <= a.eps and x["hmin_q"] >= x["hmin_bound"] - 1e-12 for x in rows)
    ok = good >= (1 - a.eps) * len(rows)
    return [dict(x, pass_=ok) for x in rows]


# ---------------------------------------------------------------- extractor

def cmd_ext_lhl(a):
    m = a.m if a.m is not None else max(0, math.floor(a.k - 2 * math.log2(2 / a.eps)))
    fam = ex.lhl_family(a.n, m, a.eps, a.k)
    rep = ex.verify_extractor(fam, a.k, a.eps, a.sources, _rng(a), m=m)
    return [{"n": a.n, "k": a.k, "m": m, "eps": a.eps, "sources": a.sources, "max_tv": rep["max_tv"],
             "lhl_bound": rep["lhl_bound"], "pass": rep["max_tv"] <= a.eps and rep["max_tv"] <= rep["lhl_bound"] + 1e-12}]


def cmd_ext_rs(a):
    ctx = gf.make_field(a.t)
    fam = ex.rs_family(ctx, a.blocks, a.ell)
    x = np.arange(1 << fam.n, dtype=np.int64)
    fails = 0
    for s in fam.seeds():
        p = fam.member(s)
        fails += int(np.count_nonzero(p.inverse(p.forward(x)) != x))
    return [{"t": a.t, "blocks": a.blocks, "ell": a.ell, "seeds": fam.seed_count, "inputs": int(x.size),
             "failures": fails, "pass": fails == 0}]


def cmd_ext_guv(a):
    p = ex.guv_params(a.n, a.k, a.eps)
    row = {k: p[k] for k in ("n", "k", "eps", "branch", "seed_bits", "seed_bits_bound", "output_bits", "extracted_bits")}
    row["pass"] = p["seed_bits"] <= p["seed_bits_bound"]
    rows = [row]
    if a.delta is not None:
        it = ex.guv_iteration(a.n, a.k, a.eps, a.delta)
        rows.append({"delta": a.delta, "stages": it["stages"], "extracted_bits": it["extracted_bits"],
                     "log_bound": it["log_bound"], "pass": it["extracted_bits"] >= (1 - a.delta) * a.k})
    return rows


def cmd_ext_verify(a):
    if a.family == "lhl":
        fam = ex.lhl_family(a.n, a.m, a.eps, a.k)
    elif a.family == "block":
        fam = ex.block_extract_family(a.n, a.ell, a.s, a.eps, t=a.t)
    else:
        fam = ex.guv_family(a.n, a.k, a.eps, toy={"t": a.t, "stages": a.stages})
    m = a.m if a.m is not None else fam.m
    rep = ex.verify_extractor(fam, a.k, a.eps, a.sources, _rng(a), m=m)
    return [{"family": a.family, "n": fam.n, "k": a.k, "m": m, "seeds": fam.seed_count, "max_tv": rep["max_tv"],
             "eps": a.eps, "pass": rep["pass"]}]


# ---------------------------------------------------------------- mur

def _mur_ensemble(a):
    if a.ensemble == "exact":
        return mub.build_exact_mubs(a.n)
    return mur.build_mur_ur1(a.n, toy={"r": a.r, "seeds": a.seeds, "m": a.m})


def cmd_mur_eval(a):
    ens = _mur_ensemble(a)
    d = ens.dim
    psi = qcore.ket(0, d) if a.state == "basis0" else qcore.haar_state(d, _rng(a))
    rep = mur.eval_mur(ens, psi, (1 << a.m, d >> a.m), a.state)
    return [{"ensemble": a.ensemble, "n": a.n, "m": a.m, "t": len(ens), "avg_tv": rep.avg,
             "max_tv": max(rep.tvs), "pass": rep.avg <= 1 - 2.0 ** -a.m + 1e-12}]


def cmd_mur_worst(a):
    ens = _mur_ensemble(a)
    res = mur.worst_case_mur(ens, (1 << a.m, ens.dim >> a.m), a.budget, _rng(a), a.steps)
    return [{"ensemble": a.ensemble, "n": a.n, "m": a.m, "budget": a.budget, "eps_hat": res["eps_hat"],
             "source": res["source"], "pass": res["eps_hat"] <= 1 - 2.0 ** -a.m + 1e-12}]


def cmd_mur_random(a):
    res = mur.random_mur_experiment(a.dA, a.dB, a.t, a.trials, _rng(a))
    bound = math.sqrt(1 / a.dB)
    return [{"dA": a.dA, "dB": a.dB, "t": a.t, "trials": a.trials, "mean": res["mean"], "sem": res["sem"],
             "bound": bound, "pass": res["mean"] <= bound + 3 * res["sem"]}]


def cmd_mur_gamma(a):
    rng = _rng(a)
    d = a.dA * a.dB
    g = rng.standard_normal((a.samples, d)) + 1j * rng.standard_normal((a.samples, d))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    vals = np.sqrt((np.abs(g.reshape(a.samples, a.dA, a.dB)) ** 2).sum(axis=2)).sum(axis=1)
    mean, sem = float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(a.samples))
    want = mur.gamma_expectation(a.dA, a.dB)
    return [{"dA": a.dA, "dB": a.dB, "samples": a.samples, "mean": mean, "sem": sem, "formula": want,
             "pass": abs(mean - want) <= 3 * sem}]


# ---------------------------------------------------------------- locking

def cmd_lock_roundtrip(a):
    s = lk.LockingScheme(mub.build_exact_mubs(a.n), a.n)
    bad = 0
    for k in range(s.t):
        for x in range(s.d_a):
            for b in range(s.d_b):
                bad += lk.lock_decode(s, lk.lock_encode(s, x, k, b), k) != (x, b)
    return [{"n": a.n, "t": s.t, "cases": s.t * s.d_a * s.d_b, "failures": bad, "pass": bad == 0}]


def cmd_lock_attack(a):
    s = lk.LockingScheme(mub.build_exact_mubs(a.n), a.n)
    povm = lk.computational_attack(s.ensemble.dim)
    src = "uniform" if a.source == "uniform" else range(s.d_a // 2)
    rep = lk.attack_eval(s, povm, src)
    eps = lk.attack_mur_eps(s, povm)
    ell = a.n if a.source == "uniform" else a.n - 1
    bound = lk.locking_bound(eps, ell, a.n)
    return [{"n": a.n, "source": a.source, "max_delta": rep["max_delta"], "eps_hat": eps, "bound": bound,
             "pass": rep["max_delta"] <= bound + 1e-12}]


def cmd_lock_commit(a):
    rng = _rng(a)
    s = lk.LockingScheme(mub.build_exact_mubs(a.n), a.n)
    honest = wrong_x = 0
    wrong_k = []
    for _ in range(a.trials):
        x, k = int(rng.integers(s.d_a)), int(rng.integers(s.t))
        ct = lk.commit(s, x, k, rng)
        honest += lk.verify(s, ct, *lk.reveal(x, k))
        wrong_x += lk.verify(s, ct, (x + 1) % s.d_a, k)
        if s.t > 1:
            wrong_k.append(lk.verify_accept_prob(s, ct, x, (k + 1) % s.t))
    return [{"n": a.n, "trials": a.trials, "honest_accept": honest / a.trials, "wrong_x_accept": wrong_x / a.trials,
             "wrong_key_accept_prob": float(np.mean(wrong_k)) if wrong_k else 1.0,
             "pass": honest == a.trials and wrong_x == 0}]


def cmd_lock_fingerprint(a):
    params = lk.FingerprintParams(a.nbits, a.delta, a.eps, overrides={"l": a.l, "u": a.u, "t": a.t, "d_B": a.dB},
                                  unitary_seed=a.seed or 0)
    fp = lk.fingerprint_make(params, a.x, _rng(a))
    p = fp["p"]
    same = lk.fingerprint_test(params, fp, a.x)
    other = lk.fingerprint_test(params, fp, a.y)
    us = lk.fingerprint_unitaries(params, p)
    gamma = lk.measured_gamma(us, a.dB, a.y % p, a.x % p)
    bound = lk.fingerprint_error_bound(a.t, a.dB, p * a.dB, gamma)
    ok = abs(same - 1) <= 1e-9 and (a.x % p == a.y % p or other <= bound + 1e-9)
    return [{"p": p, "x": a.x, "y": a.y, "accept_same": same, "accept_other": other, "gamma": gamma,
             "bound": bound, "pass": ok}]


def cmd_lock_qid(a):
    ens = mub.build_exact_mubs(a.n)
    rng = _rng(a)
    d = ens.dim
    split = (a.dA, d // a.dA)
    rows = []
    for i in range(a.pairs):
        r = lk.qid_report(ens, qcore.haar_state(d, rng), qcore.haar_state(d, rng), split)
        rows.append({"pair": i, "accept": r["accept"], "overlap": r["overlap"], "eps_bar": r["eps_bar"],
                     "bound": r["bound"], "pass": r["pass"]})
    return rows


# ---------------------------------------------------------------- qcext

def cmd_qc_decouple(a):
    if a.kind == "full":
        ens = qc.build_full_mub_qcext(a.d)
    else:
        ens = qc.build_bitwise_qcext(2, a.n)
    rng = _rng(a)
    dim = ens.dim * a.dE
    states = [qcore.haar_state(dim, c) for c in rng.spawn(a.states)]
    reps = _pmap(lambda psi: qc.decoupling_eval(ens, psi, a.dA1, a.dE), states, a.threads)
    return [{"state": i, "kind": a.kind, "avg": r.avg, "h2_bound": r.bounds["h2_bound"], "h2": r.entropies["h2"],
             "vacuous": r.vacuous, "pass": r.passed} for i, r in enumerate(reps)]


def cmd_qc_random(a):
    r = qc.random_qcext_experiment(a.dA, a.dA1, a.dE, a.t, a.trials, _rng(a))
    return [{"dA": a.dA, "dA1": a.dA1, "dE": a.dE, "t": a.t, "trials": a.trials, "mean": r["mean"], "sem": r["sem"],
             "bound_full": r["bound_full"], "bound_loose": r["bound_loose"], "pass": r["pass"]}]


def cmd_qc_vncheck(a):
    rng = _rng(a)
    d = (1 << a.n) * a.dE
    rows = []
    for i, c in enumerate(rng.spawn(a.samples)):
        r = qc.vn_uncertainty_check(qcore.random_density(d, c, int(c.integers(1, d + 1))), a.n, a.dE)
        rows.append({"sample": i, "lhs": r["lhs"], "rhs": r["rhs"], "pass": r["pass"]})
    return rows


def cmd_qc_bounds(a):
    if a.kind == "full_mub":
        v = qc.minent_ur_bound("full_mub", hmin=a.hmin, eps=a.eps, delta=a.delta, d_a=a.dA)
    else:
        v = qc.minent_ur_bound("bitwise", hmin=a.hmin, eps=a.eps, delta=a.delta, d=2, n=a.n, delta_p=a.delta_p)
    return [{"kind": a.kind, "hmin": a.hmin, "eps": a.eps, "value": v, "pass": True}]


# ---------------------------------------------------------------- wse

def cmd_wse_run(a):
    tr = wse.wse_run(a.n, _rng(a))
    mism = tr.theta != tr.theta_b
    frac = len(tr.index_set) / a.n
    sig = math.sqrt((1 / 3) * (2 / 3) / a.n)
    ones = float(tr.x_b[mism].mean()) if mism.any() else 0.5
    sig2 = math.sqrt(0.25 / max(1, int(mism.sum())))
    dis = int(np.count_nonzero(tr.z != tr.x[tr.index_set]))
    return [{"n": a.n, "matched_fraction": frac, "matched_disagreements": dis, "mismatched_ones": ones,
             "pass": dis == 0 and abs(frac - 1 / 3) <= 3 * sig and abs(ones - 0.5) <= 3 * sig2}]


def cmd_wse_correctness(a):
    rng = _rng(a)
    run = wse.wse_run_epr if a.epr else wse.wse_run
    trs = [run(a.n, c) for c in rng.spawn(a.runs)]
    r = wse.wse_correctness_check(trs)
    return [{"n": a.n, "runs": a.runs, "epr": a.epr, "tv": r["tv"], "chi2": r["chi2"], "threshold": r["chi2_threshold"],
             "pass": r["pass"]}]


def cmd_wse_params(a):
    r = wse.wse_security_params(a.n, a.eps, a.N)
    fb = wse.channel_fidelity_bound(a.n, a.N)
    return [{"n": a.n, "eps": a.eps, "N": a.N, "kappa": r["kappa"], "lambda_max": r["lambda_max"],
             "secure": r["secure"], "fidelity_bound": fb["bound"], "pass": True}]


# ---------------------------------------------------------------- plumbing

def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--seed", type=int, default=0, help="64-bit RNG seed")
    p.add_argument("--out", type=str, default=None, help="output path (stdout if omitted)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--config", type=str, default=None, help="JSON file with flag values")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    root = argparse.ArgumentParser(prog="qurlab", description="Numerical oracles for uncertainty-relation constructions.")
    groups = root.add_subparsers(dest="group", required=True)

    def leaf(group, name, fn, help_):
        sp = group.add_parser(name, parents=[common], help=help_)
        sp.set_defaults(func=fn, command=f"{group_name[group]} {name}")
        return sp

    group_name = {}

    def grp(name, help_):
        g = groups.add_parser(name, help=help_).add_subparsers(dest="cmd", required=True)
        group_name[g] = name
        return g

    g = grp("mub", "mutually unbiased bases")
    p = leaf(g, "verify", cmd_mub_verify, "max overlap excess")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--bases", type=int, default=None)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--tol", type=float, default=1e-10)
    p = leaf(g, "design2", cmd_mub_design2, "2-design residual")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--tol", type=float, default=1e-10)
    p = leaf(g, "flatten", cmd_mub_flatten, "min-entropy flattening report")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--state", choices=("uniform", "basis0", "haar"), default="haar")

    g = grp("extractor", "permutation extractors")
    p = leaf(g, "lhl", cmd_ext_lhl, "leftover hash family on flat sources")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--sources", type=int, default=200)
    p = leaf(g, "rs", cmd_ext_rs, "Reed-Solomon permutation bijectivity")
    p.add_argument("--t", type=int, default=4)
    p.add_argument("--blocks", type=int, default=3)
    p.add_argument("--ell", type=int, default=1)
    p = leaf(g, "guv", cmd_ext_guv, "parameter calculator")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=None)
    p = leaf(g, "verify", cmd_ext_verify, "brute-force extractor check")
    p.add_argument("--family", choices=("lhl", "block", "guv"), default="lhl")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--t", type=int, default=4)
    p.add_argument("--ell", type=int, default=1)
    p.add_argument("--s", type=int, default=1)
    p.add_argument("--stages", type=int, default=1)
    p.add_argument("--sources", type=int, default=50)

    g = grp("mur", "metric uncertainty relations")
    for name, fn, h in (("eval", cmd_mur_eval, "average TV on one state"),
                        ("worst", cmd_mur_worst, "heuristic worst-case search")):
        p = leaf(g, name, fn, h)
        p.add_argument("--ensemble", choices=("exact", "ur1"), default="exact")
        p.add_argument("--n", type=int, required=True)
        p.add_argument("--m", type=int, required=True, help="qubits in A")
        p.add_argument("--r", type=int, default=2)
        p.add_argument("--seeds", type=int, default=3)
        if name == "eval":
            p.add_argument("--state", choices=("basis0", "haar"), default="haar")
        else:
            p.add_argument("--budget", type=int, default=8)
            p.add_argument("--steps", type=int, default=200)
    p = leaf(g, "random", cmd_mur_random, "Haar ensemble Monte Carlo")
    p.add_argument("--dA", type=int, required=True)
    p.add_argument("--dB", type=int, required=True)
    p.add_argument("--t", type=int, required=True)
    p.add_argument("--trials", type=int, default=200)
    p = leaf(g, "gamma", cmd_mur_gamma, "l1(l2) norm Monte Carlo vs closed form")
    p.add_argument("--dA", type=int, required=True)
    p.add_argument("--dB", type=int, required=True)
    p.add_argument("--samples", type=int, default=100000)

    g = grp("lock", "locking and applications")
    p = leaf(g, "roundtrip", cmd_lock_roundtrip, "encode/decode grid")
    p.add_argument("--n", type=int, default=2)
    p = leaf(g, "attack", cmd_lock_attack, "computational-basis attack")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--source", choices=("uniform", "half"), default="uniform")
    p = leaf(g, "commit", cmd_lock_commit, "string commitment runs")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--trials", type=int, default=100)
    p = leaf(g, "fingerprint", cmd_lock_fingerprint, "hiding fingerprint acceptance")
    p.add_argument("--nbits", type=int, default=16)
    p.add_argument("--delta", type=float, default=0.2)
    p.add_argument("--eps", type=float, default=0.2)
    p.add_argument("--l", type=int, default=5)
    p.add_argument("--u", type=int, default=13)
    p.add_argument("--t", type=int, default=2)
    p.add_argument("--dB", type=int, default=2)
    p.add_argument("--x", type=int, default=1234)
    p.add_argument("--y", type=int, default=1235)
    p = leaf(g, "qid", cmd_lock_qid, "quantum identification deviation")
    p.add_argument("--n", type=int, default=3)
    p.add_argument("--dA", type=int, default=2)
    p.add_argument("--pairs", type=int, default=50)

    g = grp("qcext", "QC-extractors")
    p = leaf(g, "decouple", cmd_qc_decouple, "exact decoupling vs bound")
    p.add_argument("--kind", choices=("full", "bitwise"), default="full")
    p.add_argument("--d", type=int, default=4)
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--dA1", type=int, default=2)
    p.add_argument("--dE", type=int, default=4)
    p.add_argument("--states", type=int, default=100)
    p = leaf(g, "random", cmd_qc_random, "Haar QC-extractor Monte Carlo")
    p.add_argument("--dA", type=int, default=16)
    p.add_argument("--dA1", type=int, default=2)
    p.add_argument("--dE", type=int, default=4)
    p.add_argument("--t", type=int, default=32)
    p.add_argument("--trials", type=int, default=20)
    p = leaf(g, "vncheck", cmd_qc_vncheck, "von Neumann uncertainty relation")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--dE", type=int, default=2)
    p.add_argument("--samples", type=int, default=1000)
    p = leaf(g, "bounds", cmd_qc_bounds, "min-entropy uncertainty bounds")
    p.add_argument("--kind", choices=("full_mub", "bitwise"), default="full_mub")
    p.add_argument("--hmin", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.0)
    p.add_argument("--delta-p", dest="delta_p", type=float, default=None)
    p.add_argument("--dA", type=int, default=2)
    p.add_argument("--n", type=int, default=1)

    g = grp("wse", "weak string erasure")
    p = leaf(g, "run", cmd_wse_run, "honest run statistics")
    p.add_argument("--n", type=int, default=100000)
    p = leaf(g, "correctness", cmd_wse_correctness, "joint law of (x, I)")
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--runs", type=int, default=20000)
    p.add_argument("--epr", action="store_true")
    p = leaf(g, "params", cmd_wse_params, "noisy-storage calculus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--N", type=int, required=True)

    rp = groups.add_parser("report", help="aggregate result files")
    rp.add_argument("files", nargs="*")
    rp.add_argument("--format", choices=("csv", "json"), default="csv")
    rp.add_argument("--out", type=str, default=None)
    rp.set_defaults(func=None, command="report")
    return root


def _config_argv(argv: list[str]) -> list[str]:
    """Splice ``--config`` values in front of explicit flags so the command line wins."""
    if "--config" not in argv:
        return argv
    i = argv.index("--config")
    if i + 1 >= len(argv):
        raise ParamError("--config needs a path")
    path = argv[i + 1]
    rest = argv[:i] + argv[i + 2:]
    try:
        cfg = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ParamError(f"cannot read config {path}: {e}") from e
    lead = 0
    while lead < min(2, len(rest)) and not rest[lead].startswith("-"):
        lead += 1
    cmd, rest = rest[:lead], rest[lead:]
    if not cmd and "command" in cfg:
        cmd = str(cfg["command"]).split()
    extra = []
    for key, val in cfg.items():
        if key == "command":
            continue
        flag = "--" + key.replace("_", "-") if key == "delta_p" else "--" + key
        if isinstance(val, bool):
            if val:
                extra.append(flag)
        else:
            extra += [flag, str(val)]
    return cmd + extra + rest


def _write(rows: list[dict], fmt: str, out: str | None, command: str) -> str:
    rows = [{("pass" if k == "pass_" else k): _fmt(v) for k, v in r.items()} for r in rows]
    if fmt == "json":
        text = json.dumps({"command": command, "rows": rows, "pass": all(r.get("pass", True) for r in rows)},
                          sort_keys=True, indent=1) + "\n"
    else:
        buf = io.StringIO()
        cols = ["command"] + sorted({k for r in rows for k in r} - {"command"})
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({"command": command, **r})
        text = buf.getvalue()
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
    return text


def _read_result(path: str) -> list[dict]:
    p = Path(path)
    if not p.exists():
        raise ParamError(f"missing file {path}")
    text = p.read_text()
    if text.lstrip().startswith("{"):
        obj = json.loads(text)
        return [{"file": path, "source": obj.get("command", ""), "pass": bool(obj.get("pass", False)),
                 "rows": len(obj.get("rows", []))}]
    rows = list(csv.DictReader(io.StringIO(text)))
    cmd = rows[0]["command"] if rows else ""
    ok = all(r.get("pass", "True") == "True" for r in rows)
    return [{"file": path, "source": cmd, "pass": ok, "rows": len(rows)}]


def report(files: list[str], fmt: str = "csv", out: str | None = None) -> int:
    rows = []
    for f in files:
        rows += _read_result(f)
    _write(rows, fmt, out, "report")
    return EXIT_OK if all(r["pass"] for r in rows) else EXIT_FAIL


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        argv = _config_argv(argv)
    except ParamError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARAM
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_PARAM if e.code not in (0, None) else EXIT_OK
    try:
        if args.command == "report":
            return report(args.files, args.format, args.out)
        if args.threads is None:
            args.threads = int(os.environ.get("QURLAB_THREADS", "1"))
        rows = args.func(args)
    except (ValueError, ZeroDivisionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARAM
    _write(rows, args.format, args.out, args.command)
    return EXIT_OK if all(r.get("pass", r.get("pass_", True)) for r in rows) else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
