"""Metric uncertainty relations: explicit ensembles, evaluation and experiments.

An ensemble ``{U_k}`` on ``A B`` is evaluated on a state by measuring the
``A`` register of every ``U_k |psi>`` in the computational basis and taking
the total variation distance to uniform. ``A`` is always the leading
(most significant) register.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import gammaln

from .extractor import lhl_family
from .mub import EnsembleSpec, LocalStage, PermStage, UnitarySpec, hamming
from .quantum_core import binary_entropy, haar_state, haar_unitary, shannon

__all__ = [
    "MurEvalReport",
    "punctured_hadamard_codewords",
    "ur1_theorem_params",
    "build_mur_ur1",
    "build_mur_ur2",
    "a_marginals",
    "eval_mur",
    "composition_check",
    "worst_case_mur",
    "entropic_bound",
    "avg_shannon",
    "l1l2_norm",
    "gamma_expectation",
    "random_mur_experiment",
]


@dataclass
class MurEvalReport:
    tvs: list
    avg: float
    split: tuple
    state_id: str = ""
    ensemble_id: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def _check_split(dim: int, split) -> tuple[int, int]:
    d_a, d_b = (int(s) for s in split)
    if d_a < 1 or d_b < 1 or d_a * d_b != dim:
        raise ValueError(f"split {split} does not factor dimension {dim}")
    return d_a, d_b


def punctured_hadamard_codewords(n: int) -> list[tuple]:
    """Hadamard code of length ``2^ceil(log n)`` restricted to its first ``n`` coordinates.

    All ``2^ceil(log n)`` codewords stay distinct because every unit vector
    ``z = 2^j`` with ``2^j < n`` is kept.
    """
    if n < 1:
        raise ValueError("n must be positive")
    k = max(0, math.ceil(math.log2(n)))
    return [tuple(bin(x & z).count("1") & 1 for z in range(n)) for x in range(1 << k)]


def ur1_theorem_params(n: int, eps: float, delta: float) -> dict:
    """Parameter accounting for the key-optimized construction.

    ``eps' = eps/6``, ``r = ceil(2/eps'^2)`` bases and the extractor min-entropy
    ``ell = (1 - delta/2) n/4 - log(8/eps'^2)``.
    """
    if not 0 < eps < 1 or not 0 < delta < 1:
        raise ValueError("need 0 < eps < 1 and 0 < delta < 1")
    ep = eps / 6
    r = math.ceil(2 / ep ** 2)
    ell = (1 - delta / 2) * n / 4 - math.log2(8 / ep ** 2)
    return {"eps_prime": ep, "r": r, "ell": ell, "gamma": 0.5 - delta / 4,
            "codewords_available": 1 << max(0, math.ceil(math.log2(max(n, 1))))}


def build_mur_ur1(n: int, eps: float = 0.5, delta: float = 0.5, toy: dict | None = None) -> EnsembleSpec:
    """Members ``P_y V_j``: a Hadamard pattern followed by an extractor permutation.

    Parameters
    ----------
    n : int
        Number of qubits.
    eps, delta : float
        Target parameters; used for the theorem accounting when ``toy`` is None.
    toy : dict, optional
        Desk-scale overrides: ``r`` (number of patterns), ``seeds`` (number
        of leading multiplier seeds of the LHL family), ``m`` (width of ``A``,
        default ``floor(n/4)``).

    Raises
    ------
    ValueError
        When the theorem parameters are infeasible at this ``n``; the message
        names the violated inequality.
    """
    words = punctured_hadamard_codewords(n)
    if toy is None:
        p = ur1_theorem_params(n, eps, delta)
        if p["ell"] < 1:
            raise ValueError(f"infeasible: ell = (1-delta/2)n/4 - log(8/eps'^2) = {p['ell']:.3f} < 1")
        if p["r"] > len(words):
            raise ValueError(f"infeasible: r = ceil(2/eps'^2) = {p['r']} exceeds {len(words)} codewords")
        toy = {"r": p["r"], "m": int(math.floor(p["ell"]))}
    r = int(toy.get("r", len(words)))
    m = int(toy.get("m", n // 4))
    if not 1 <= r <= len(words):
        raise ValueError(f"need 1 <= r <= {len(words)}")
    if not 0 <= m <= n:
        raise ValueError("A width must lie in [0, n]")
    fam = lhl_family(n, m)
    n_seeds = int(toy.get("seeds", fam.seed_count))
    if not 1 <= n_seeds <= fam.seed_count:
        raise ValueError(f"need 1 <= seeds <= {fam.seed_count}")
    seeds = list(fam.seeds())[:n_seeds]
    words = words[:r]
    members = []
    for j, w in enumerate(words):
        had = LocalStage(tuple("H" if b else "I" for b in w))
        for s in seeds:
            perm = fam.member(s)
            members.append(UnitarySpec(n, (had, PermStage(perm, n)), f"P{s[0]}V{j}"))
    dmin = min((hamming(a, b) for i, a in enumerate(words) for b in words[i + 1:]), default=n)
    return EnsembleSpec(tuple(members), "ur1", {
        "n": n, "r": r, "seeds": n_seeds, "m": m, "d_A": 1 << m, "d_B": 1 << (n - m),
        "min_distance": dmin, "eps": eps, "delta": delta})


def build_mur_ur2(n: int, eps: float = 0.5, toy: dict | list | None = None, depth: int = 2) -> EnsembleSpec:
    """Recursive composition: level ``i`` re-applies the key-optimized ensemble to ``B_{i-1}``.

    Members are ``(id_{A_1..A_{i-1}} (x) U^(i)) ... U^(1)`` over all index
    tuples. ``toy`` is one override dict used at every level or a list with
    one dict per level; its length fixes the depth.
    """
    levels = toy if isinstance(toy, list) else [toy] * depth
    if not levels:
        raise ValueError("depth must be at least 1")
    eps_level = eps / len(levels)
    width, used, stacks = n, 0, []
    for lv in levels:
        if width < 1:
            raise ValueError("recursion depth exceeds the available qubits")
        ens = build_mur_ur1(width, eps_level, 1 / 8, lv)
        stacks.append((ens, used))
        used += ens.params["m"]
        width -= ens.params["m"]
    members = [UnitarySpec(n, (), "")]
    for ens, off in stacks:
        members = [prev.then(u.embed_low(n), (prev.label + "|" + u.label).strip("|"))
                   for prev in members for u in ens.members]
    return EnsembleSpec(tuple(members), "ur2", {
        "n": n, "depth": len(levels), "m": used, "d_A": 1 << used, "d_B": 1 << (n - used),
        "level_widths": [e.params["m"] for e, _ in stacks], "level_sizes": [len(e) for e, _ in stacks]})


def a_marginals(ens: EnsembleSpec, state, split) -> np.ndarray:
    """``(t, d_A)`` array of computational-basis distributions of ``A``."""
    psi = np.asarray(state, dtype=complex)
    d_a, d_b = _check_split(ens.dim, split)
    if psi.shape != (ens.dim,):
        raise ValueError("state dimension does not match the ensemble")
    out = np.empty((len(ens), d_a))
    for k, u in enumerate(ens.members):
        out[k] = (np.abs(u.apply(psi)) ** 2).reshape(d_a, d_b).sum(axis=1)
    return out


def eval_mur(ens: EnsembleSpec, state, split, state_id: str = "") -> MurEvalReport:
    """Per-member TV distance of the ``A`` marginal from uniform."""
    p = a_marginals(ens, state, split)
    tvs = 0.5 * np.abs(p - 1.0 / p.shape[1]).sum(axis=1)
    return MurEvalReport([float(x) for x in tvs], float(tvs.mean()), tuple(int(s) for s in split),
                         state_id, ens.name)


def composition_check(ens1: EnsembleSpec, ens2: EnsembleSpec, state, m1: int, m2: int) -> dict:
    """Instrumented two-level bound for ``(id (x) U2) U1`` on one state.

    ``eps1`` is the avg TV of ``A_1`` under ``ens1``. ``eps2`` averages, over
    ``k1`` and the outcome ``a1``, the avg TV of ``A_2`` under ``ens2`` on the
    normalized post-measurement state of ``B_1``.
    """
    n = ens1.n_qubits
    psi = np.asarray(state, dtype=complex)
    d1, rest = 1 << m1, 1 << (n - m1)
    lhs_terms, eps1_terms, eps2_terms = [], [], []
    u2 = ens2.members
    for u1 in ens1.members:
        out = u1.apply(psi).reshape(d1, rest)
        pa1 = (np.abs(out) ** 2).sum(axis=1)
        eps1_terms.append(0.5 * np.abs(pa1 - 1 / d1).sum())
        e2 = 0.0
        for a1 in range(d1):
            if pa1[a1] > 1e-15:
                e2 += pa1[a1] * eval_mur(ens2, out[a1] / math.sqrt(pa1[a1]), (1 << m2, rest >> m2)).avg
        eps2_terms.append(e2)
        for u in u2:
            tail = u.apply(out.T).T  # U2 on every row
            p = (np.abs(tail) ** 2).reshape(d1, 1 << m2, -1).sum(axis=2).ravel()
            lhs_terms.append(0.5 * np.abs(p - 1 / (d1 << m2)).sum())
    lhs = float(np.mean(lhs_terms))
    eps1, eps2 = float(np.mean(eps1_terms)), float(np.mean(eps2_terms))
    return {"lhs": lhs, "eps1": eps1, "eps2": eps2, "pass": lhs <= eps1 + eps2 + 1e-9}


def _ascent(ens, split, psi, steps, rng):
    """Derivative-free coordinate polish on (real, imag) amplitude pairs."""
    best = eval_mur(ens, psi, split).avg
    h = 0.25
    d = psi.size
    for s in range(steps):
        j = s % d
        improved = False
        for delta in (h, -h, 1j * h, -1j * h):
            cand = psi.copy()
            cand[j] += delta
            cand /= np.linalg.norm(cand)
            val = eval_mur(ens, cand, split).avg
            if val > best:
                best, psi, improved = val, cand, True
                break
        if not improved and j == d - 1:
            h *= 0.5
    return best, psi


def worst_case_mur(ens: EnsembleSpec, split, budget: int = 8, rng: np.random.Generator | None = None,
                   steps: int = 200) -> dict:
    """Heuristic lower bound on ``sup_psi`` of the average TV (empirical, not certified).

    Candidates are the computational basis, every ``U_k^dagger |x>``, and
    ``budget`` Haar samples each refined by coordinate ascent. Sample ``i``
    uses its own spawned stream, so the result is nondecreasing in ``budget``.
    """
    if budget < 0:
        raise ValueError("budget must be non-negative")
    rng = np.random.default_rng() if rng is None else rng
    d = ens.dim
    _check_split(d, split)
    best, arg, kind = -1.0, None, ""

    def consider(val, vec, label):
        nonlocal best, arg, kind
        if val > best + 1e-15:
            best, arg, kind = val, vec, label

    eye = np.eye(d, dtype=complex)
    for x in range(d):
        consider(eval_mur(ens, eye[x], split).avg, eye[x], "basis")
    for u in ens.members:
        inv = u.adjoint().matrix()
        for x in range(d):
            consider(eval_mur(ens, inv[:, x], split).avg, inv[:, x], "member_basis")
    for child in rng.spawn(budget):
        val, vec = _ascent(ens, split, haar_state(d, child), steps, child)
        consider(val, vec, "ascent")
    return {"eps_hat": float(best), "state": arg, "source": kind, "budget": budget}


def entropic_bound(eps: float, d_a: int) -> float:
    """Average-entropy guarantee ``(1 - 8 eps) log d_A - 2 h(2 eps)``."""
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    return (1 - 8 * eps) * math.log2(d_a) - 2 * binary_entropy(2 * eps)


def avg_shannon(ens: EnsembleSpec, state, split) -> float:
    """``(1/t) sum_k H(p^A_{U_k psi})``."""
    return float(np.mean([shannon(p) for p in a_marginals(ens, state, split)]))


def l1l2_norm(state, split) -> float:
    """``sum_a sqrt(sum_b |alpha_ab|^2)``."""
    psi = np.asarray(state, dtype=complex)
    d_a, d_b = _check_split(psi.size, split)
    return float(np.sqrt((np.abs(psi.reshape(d_a, d_b)) ** 2).sum(axis=1)).sum())


def gamma_expectation(d_a: int, d_b: int) -> float:
    """Haar average of :func:`l1l2_norm`, evaluated with log-gamma."""
    D = d_a * d_b
    return float(d_a * math.exp(gammaln(d_b + 0.5) - gammaln(d_b) + gammaln(D) - gammaln(D + 0.5)))


def random_mur_experiment(d_a: int, d_b: int, t: int, trials: int, rng: np.random.Generator) -> dict:
    """Monte Carlo over ``t`` Haar unitaries and one Haar state per trial.

    Each trial draws from its own spawned stream. ``ci`` is mean +- 3 standard errors.
    """
    d = d_a * d_b
    if d > 256:
        raise ValueError("need d_A * d_B <= 256")
    if t < 1 or trials < 1:
        raise ValueError("t and trials must be positive")
    vals = []
    for child in rng.spawn(trials):
        psi = haar_state(d, child)
        tv = 0.0
        for _ in range(t):
            p = (np.abs(haar_unitary(d, child) @ psi) ** 2).reshape(d_a, d_b).sum(axis=1)
            tv += 0.5 * np.abs(p - 1 / d_a).sum()
        vals.append(tv / t)
    vals = np.asarray(vals)
    mean = float(vals.mean())
    sem = float(vals.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return {"mean": mean, "sem": sem, "ci": (mean - 3 * sem, mean + 3 * sem), "trials": trials,
            "d_A": d_a, "d_B": d_b, "t": t, "bound_sqrt_1_over_dB": math.sqrt(1 / d_b)}
