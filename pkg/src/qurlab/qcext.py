"""QC-extractors: measurement after a random unitary decouples the outcome from ``E``.

For a member ``U`` the figure of merit is
``|| T(U rho_AE U^dagger) - id_{A1}/d_{A1} (x) rho_E ||_1`` where ``T`` measures
``A = A1 A2`` in the computational basis and discards ``A2``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .extractor import AffinePermutation
from .gf import make_field
from .mub import EnsembleSpec, LocalStage, PermStage, UnitarySpec, build_exact_mubs
from .quantum_core import (
    as_density,
    h2_rel,
    haar_state,
    haar_unitary,
    hmin_rel,
    meas_map_T,
    partial_trace,
    trace_norm,
    von_neumann_cond,
)

__all__ = [
    "QcReport",
    "pairwise_perm_family",
    "check_pairwise_independent",
    "build_full_mub_qcext",
    "QUBIT_MUB_LABELS",
    "build_bitwise_qcext",
    "apply_on_a",
    "member_distance",
    "decoupling_eval",
    "full_mub_bound",
    "bitwise_bound",
    "random_bound",
    "random_qcext_experiment",
    "minent_ur_bound",
    "vn_uncertainty_check",
]

QUBIT_MUB_LABELS = ("I", "H", "V2")


@dataclass
class QcReport:
    distances: list
    avg: float
    bounds: dict = field(default_factory=dict)
    entropies: dict = field(default_factory=dict)
    passed: bool = True
    vacuous: bool = False

    def to_json(self) -> str:
        return json.dumps(asdict(self))


def pairwise_perm_family(q: int) -> list[AffinePermutation]:
    """All maps ``x -> a x + b`` over ``GF(q)`` with ``a != 0``, ordered by ``(a, b)``."""
    t = q.bit_length() - 1
    if q < 2 or q != 1 << t:
        raise ValueError("q must be a power of two")
    ctx = make_field(t)
    return [AffinePermutation(ctx, a, b) for a in range(1, q) for b in range(q)]


def check_pairwise_independent(perms) -> bool:
    """Every ordered pair of distinct points hits every ordered pair of distinct targets equally often."""
    q = 1 << perms[0].n
    tabs = np.stack([p.forward(np.arange(q)) for p in perms])
    counts = np.zeros((q, q, q, q), dtype=np.int64)
    for x1, x2 in itertools.permutations(range(q), 2):
        np.add.at(counts[x1, x2], (tabs[:, x1], tabs[:, x2]), 1)
    want = len(perms) / (q * (q - 1))
    for x1, x2 in itertools.permutations(range(q), 2):
        c = counts[x1, x2].copy()
        if np.any(np.diag(c) != 0):
            return False
        np.fill_diagonal(c, round(want))
        if np.any(c != want):
            return False
    return True


def build_full_mub_qcext(d: int) -> EnsembleSpec:
    """Members ``P U_i`` for the full MUB set and all affine permutations of ``GF(d)``."""
    if d not in (2, 4, 8):
        raise ValueError("supported dimensions are 2, 4 and 8")
    n = d.bit_length() - 1
    mubs = build_exact_mubs(n)
    perms = pairwise_perm_family(d)
    members = tuple(UnitarySpec(n, u.stages + (PermStage(p, n),), f"P{p.a},{p.b}.{u.label}")
                    for u in mubs.members for p in perms)
    return EnsembleSpec(members, "full_mub_qcext", {"d": d, "n": n, "t": len(members)})


def build_bitwise_qcext(d: int, n: int) -> EnsembleSpec:
    """Members ``P (V_{u_1} (x) ... (x) V_{u_n})`` with the qubit MUB triple."""
    if d != 2:
        raise ValueError("only d = 2 is supported")
    if not 1 <= n <= 3:
        raise ValueError("need 1 <= n <= 3")
    perms = pairwise_perm_family(1 << n)
    members = []
    for us in itertools.product(range(3), repeat=n):
        loc = LocalStage(tuple(QUBIT_MUB_LABELS[u] for u in us))
        for p in perms:
            members.append(UnitarySpec(n, (loc, PermStage(p, n)), f"P{p.a},{p.b}.V{''.join(map(str, us))}"))
    return EnsembleSpec(tuple(members), "bitwise_qcext", {"d": d, "n": n, "t": len(members)})


def apply_on_a(u: np.ndarray, rho: np.ndarray, d_e: int) -> np.ndarray:
    """``(U (x) id_E) rho (U (x) id_E)^dagger`` with ``U`` a dense matrix on ``A``."""
    d_a = u.shape[0]
    r = rho.reshape(d_a, d_e, d_a, d_e)
    r = np.einsum("ij,jekf->iekf", u, r)
    r = np.einsum("iekf,lk->ielf", r, u.conj())
    return r.reshape(d_a * d_e, d_a * d_e)


def member_distance(u: np.ndarray, rho: np.ndarray, d_a1: int, d_e: int) -> float:
    d_a = u.shape[0]
    rho_e = partial_trace(rho, [d_a, d_e], [1])
    out = meas_map_T(apply_on_a(u, rho, d_e), d_a1, d_a // d_a1, d_e)
    return trace_norm(out - np.kron(np.eye(d_a1) / d_a1, rho_e))


def full_mub_bound(d_a: int, d_a1: int, h: float) -> float:
    return math.sqrt(d_a1 / (d_a + 1) * 2.0 ** (-h))


def bitwise_bound(d: int, n: int, d_a1: int, h: float) -> float:
    xi = math.log2(d_a1) / (n * math.log2(d))
    return math.sqrt(2.0 ** ((1 - math.log2(d + 1) + xi * math.log2(d)) * n) * (1 + 2.0 ** (-h)))


def random_bound(d_a: int, d_a1: int, h: float, eta: float = 0.0, form: str = "full") -> float:
    """Haar-average bound; ``full`` uses ``(1+eta) d_A1/(d_A+1)``, ``loose`` uses ``2 d_A1/d_A``."""
    if form == "full":
        return math.sqrt(eta + (1 + eta) * d_a1 / (d_a + 1) * 2.0 ** (-h))
    return math.sqrt(eta + 2 * d_a1 / d_a * 2.0 ** (-h))


def decoupling_eval(ens: EnsembleSpec, rho_ae, d_a1: int, d_e: int, tol: float = 1e-9) -> QcReport:
    """Exact per-member distances with the matching bound from ``H_2`` and ``H_min`` relative to ``rho_E``.

    ``vacuous`` is set when the bound cannot exceed the trivial value 2, or,
    for the bitwise family, when ``H_min < -(log(d+1) - 1) n``.
    """
    rho = as_density(rho_ae)
    d_a = ens.dim
    if rho.shape[0] != d_a * d_e or d_a % d_a1:
        raise ValueError("dimensions do not match the ensemble and split")
    if d_a * d_e > 128:
        raise ValueError("density dimension limited to 128")
    dists = [member_distance(u.matrix(), rho, d_a1, d_e) for u in ens.members]
    rho_e = partial_trace(rho, [d_a, d_e], [1])
    h2 = h2_rel(rho, rho_e, d_a, d_e)
    hmin = hmin_rel(rho, rho_e, d_a, d_e)
    avg = float(np.mean(dists))
    if ens.name == "bitwise_qcext":
        n, d = ens.params["n"], ens.params["d"]
        bounds = {"h2_bound": bitwise_bound(d, n, d_a1, h2), "hmin_bound": bitwise_bound(d, n, d_a1, hmin)}
        # below this min-entropy the bitwise bound carries no information
        vacuous = hmin < -(math.log2(d + 1) - 1) * n
    else:
        bounds = {"h2_bound": full_mub_bound(d_a, d_a1, h2), "hmin_bound": full_mub_bound(d_a, d_a1, hmin)}
        vacuous = False
    vacuous = bool(vacuous or bounds["h2_bound"] >= 2.0)
    return QcReport([float(x) for x in dists], avg, bounds, {"h2": h2, "hmin": hmin},
                    bool(avg <= bounds["h2_bound"] + tol), vacuous)


def random_qcext_experiment(d_a: int, d_a1: int, d_e: int, t: int, trials: int, rng: np.random.Generator,
                            eta: float = 0.0) -> dict:
    """Haar members and Haar-pure ``rho_AE``, one spawned stream per trial."""
    if d_a * d_e > 128 or d_a % d_a1:
        raise ValueError("unsupported sizes")
    lhs, b_full, b_loose = [], [], []
    for child in rng.spawn(trials):
        psi = haar_state(d_a * d_e, child)
        rho = np.outer(psi, psi.conj())
        rho_e = partial_trace(rho, [d_a, d_e], [1])
        h2 = h2_rel(rho, rho_e, d_a, d_e)
        lhs.append(np.mean([member_distance(haar_unitary(d_a, child), rho, d_a1, d_e) for _ in range(t)]))
        b_full.append(random_bound(d_a, d_a1, h2, eta, "full"))
        b_loose.append(random_bound(d_a, d_a1, h2, eta, "loose"))
    lhs = np.asarray(lhs)
    mean = float(lhs.mean())
    sem = float(lhs.std(ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    bf, bl = float(np.mean(b_full)), float(np.mean(b_loose))
    return {"mean": mean, "sem": sem, "ci": (mean - 3 * sem, mean + 3 * sem), "bound_full": bf,
            "bound_loose": bl, "pass": mean <= bf + 3 * sem, "pass_loose": mean <= bl + 3 * sem,
            "trials": trials, "t": t}


def minent_ur_bound(kind: str, *, hmin: float, eps: float, delta: float = 0.0, d_a: int | None = None,
                    d: int = 2, n: int = 1, delta_p: float | None = None) -> float:
    """Lower bound on the smooth min-entropy of the outcome given ``E`` and the basis index.

    ``full_mub``: ``log(d_A+1) + hmin - log(1/(eps^2/2 - 2 delta)^2) - 1``.
    ``bitwise``: ``n(log(d+1)-1) + min{0, hmin - log(2/delta'^2 + 1/(1-2 delta))}
    - log(1/(eps^2/2 - 2(delta+delta'))^2) - 2``.
    """
    if kind == "full_mub":
        if d_a is None:
            raise ValueError("full_mub needs d_a")
        gap = eps ** 2 / 2 - 2 * delta
        if gap <= 0:
            raise ValueError("need delta < eps^2/4")
        return math.log2(d_a + 1) + hmin - math.log2(1 / gap ** 2) - 1
    if kind == "bitwise":
        if delta_p is None or delta_p <= 0:
            raise ValueError("bitwise needs delta_p > 0")
        gap = eps ** 2 / 2 - 2 * (delta + delta_p)
        if gap <= 0:
            raise ValueError("need delta + delta_p < eps^2/4")
        z = math.log2(2 / delta_p ** 2 + 1 / (1 - 2 * delta))
        return n * (math.log2(d + 1) - 1) + min(0.0, hmin - z) - math.log2(1 / gap ** 2) - 2
    raise ValueError(f"unknown kind {kind!r}")


def vn_uncertainty_check(rho_ae, n: int = 1, d_e: int = 2, d: int = 2, tol: float = 1e-9) -> dict:
    """Average ``H(X|E)`` over all ``3^n`` product bases against ``n(log 3 - 1) + min{0, H(A|E)}``."""
    if d != 2:
        raise ValueError("only d = 2 is supported")
    rho = as_density(rho_ae)
    d_a = 1 << n
    if rho.shape[0] != d_a * d_e:
        raise ValueError("dimension mismatch")
    vals = []
    for us in itertools.product(range(3), repeat=n):
        u = UnitarySpec(n, (LocalStage(tuple(QUBIT_MUB_LABELS[x] for x in us)),)).matrix()
        cq = meas_map_T(apply_on_a(u, rho, d_e), d_a, 1, d_e)
        vals.append(von_neumann_cond(cq, d_a, d_e))
    lhs = float(np.mean(vals))
    rhs = n * (math.log2(3) - 1) + min(0.0, von_neumann_cond(rho, d_a, d_e))
    return {"lhs": lhs, "rhs": rhs, "per_basis": vals, "pass": lhs >= rhs - tol}
