"""Locking classical messages, string commitment, hiding fingerprints and quantum identification.

A locking scheme encodes ``x`` under key ``k`` with private randomness ``b``
as ``U_k^dagger |x>|b>``. Attacks are rank-1 weighted POVMs ``{w_i |e_i><e_i|}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .mub import EnsembleSpec
from .quantum_core import haar_unitary, orthogonalize

__all__ = [
    "LockingScheme",
    "lock_encode",
    "lock_decode",
    "decode_distribution",
    "mixed_ciphertext",
    "computational_attack",
    "validate_povm",
    "attack_eval",
    "attack_mur_eps",
    "locking_bound",
    "commit",
    "reveal",
    "verify",
    "verify_accept_prob",
    "primes_in",
    "FingerprintParams",
    "fingerprint_unitaries",
    "fingerprint_make",
    "fingerprint_projector",
    "fingerprint_test",
    "fingerprint_error_bound",
    "measured_gamma",
    "qid_branches",
    "qid_accept_prob",
    "qid_round",
    "qid_deficiency",
    "qid_report",
]


@dataclass(frozen=True, eq=False)
class LockingScheme:
    """Ensemble on ``A B`` with ``d_A = 2^n`` message values and ``d_B`` randomness values."""

    ensemble: EnsembleSpec
    n: int

    def __post_init__(self):
        if self.ensemble.dim % (1 << self.n):
            raise ValueError("message register does not divide the ensemble dimension")

    @property
    def d_a(self) -> int:
        return 1 << self.n

    @property
    def d_b(self) -> int:
        return self.ensemble.dim >> self.n

    @property
    def t(self) -> int:
        return len(self.ensemble)


def _check_index(name, v, hi):
    if not 0 <= int(v) < hi:
        raise ValueError(f"{name}={v} out of range [0, {hi})")


def lock_encode(s: LockingScheme, x: int, k: int, b: int = 0) -> np.ndarray:
    """``U_k^dagger |x>|b>``."""
    _check_index("x", x, s.d_a)
    _check_index("k", k, s.t)
    _check_index("b", b, s.d_b)
    e = np.zeros(s.ensemble.dim, dtype=complex)
    e[x * s.d_b + b] = 1.0
    return s.ensemble[k].apply_adjoint(e)


def decode_distribution(s: LockingScheme, state, k: int) -> np.ndarray:
    """Joint ``(d_A, d_B)`` outcome distribution of measuring ``U_k state``."""
    _check_index("k", k, s.t)
    out = s.ensemble[k].apply(np.asarray(state, dtype=complex))
    return (np.abs(out) ** 2).reshape(s.d_a, s.d_b)


def lock_decode(s: LockingScheme, state, k: int, rng: np.random.Generator | None = None) -> tuple[int, int]:
    """Measure ``U_k state`` computationally and return ``(x, b)``.

    Without ``rng`` the most likely outcome is returned, which is exact for
    honest ciphertexts. No error flag is raised for corrupted inputs.
    """
    p = decode_distribution(s, state, k).ravel()
    idx = int(np.argmax(p)) if rng is None else int(rng.choice(p.size, p=p / p.sum()))
    return divmod(idx, s.d_b)


def mixed_ciphertext(s: LockingScheme, x: int, k: int) -> np.ndarray:
    """``(1/d_B) sum_b U_k^dagger |x,b><x,b| U_k``."""
    rho = np.zeros((s.ensemble.dim,) * 2, dtype=complex)
    for b in range(s.d_b):
        v = lock_encode(s, x, k, b)
        rho += np.outer(v, v.conj())
    return rho / s.d_b


def computational_attack(d: int) -> list[tuple[float, np.ndarray]]:
    return [(1.0, np.eye(d, dtype=complex)[i]) for i in range(d)]


def validate_povm(povm, d: int, tol: float = 1e-9) -> None:
    acc = np.zeros((d, d), dtype=complex)
    for w, e in povm:
        e = np.asarray(e, dtype=complex)
        if e.shape != (d,) or w < 0:
            raise ValueError("POVM elements must be non-negative weights on d-dim vectors")
        acc += w * np.outer(e, e.conj())
    if np.abs(acc - np.eye(d)).max() > tol:
        raise ValueError("POVM elements do not sum to the identity")


def _source(s: LockingScheme, source) -> np.ndarray:
    if source is None or (isinstance(source, str) and source == "uniform"):
        return np.full(s.d_a, 1.0 / s.d_a)
    support = sorted({int(x) for x in source})
    if not support or support[0] < 0 or support[-1] >= s.d_a:
        raise ValueError("flat source support must be a non-empty subset of messages")
    p = np.zeros(s.d_a)
    p[support] = 1.0 / len(support)
    return p


def attack_eval(s: LockingScheme, povm, source="uniform") -> dict:
    """Exact posteriors of ``X`` given each attack outcome.

    ``Pr[I=i | X=x] = (w_i / (t d_B)) sum_k p^A_{U_k e_i}(x)``, the ``1/d_B``
    coming from the uniform private randomness ``b``.
    """
    validate_povm(povm, s.ensemble.dim)
    px = _source(s, source)
    rows, deltas, pis = [], [], []
    for w, e in povm:
        e = np.asarray(e, dtype=complex) / np.linalg.norm(e)
        lik = np.zeros(s.d_a)
        for u in s.ensemble.members:
            lik += (np.abs(u.apply(e)) ** 2).reshape(s.d_a, s.d_b).sum(axis=1)
        lik *= w / (s.t * s.d_b)
        joint = lik * px
        pi = joint.sum()
        pis.append(float(pi))
        if pi <= 1e-300:
            rows.append(px.copy())
            deltas.append(0.0)
            continue
        post = joint / pi
        rows.append(post)
        deltas.append(0.5 * float(np.abs(post - px).sum()))
    return {"posteriors": np.array(rows), "p_outcome": np.array(pis), "deltas": deltas,
            "max_delta": max(deltas), "prior": px}


def attack_mur_eps(s: LockingScheme, povm) -> float:
    """Largest average TV of the ``A`` marginal over the attack vectors."""
    from .mur import eval_mur
    return max(eval_mur(s.ensemble, np.asarray(e, dtype=complex) / np.linalg.norm(e), (s.d_a, s.d_b)).avg
               for _, e in povm)


def locking_bound(eps: float, ell: float, n: int) -> float:
    """``2 eps / (2^(ell - n) - eps)`` for sources of min-entropy ``ell``; inf when vacuous."""
    gap = 2.0 ** (ell - n) - eps
    return 2 * eps / gap if gap > 0 else math.inf


def commit(s: LockingScheme, x: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Commit phase: send ``U_k^dagger |x>|b>`` with private uniform ``b``."""
    return lock_encode(s, x, k, int(rng.integers(s.d_b)))


def reveal(x: int, k: int) -> tuple[int, int]:
    return int(x), int(k)


def verify(s: LockingScheme, ciphertext, x: int, k: int, rng: np.random.Generator | None = None) -> bool:
    """Accept iff the decode under the revealed key returns the revealed message."""
    return lock_decode(s, ciphertext, k, rng)[0] == int(x)


def verify_accept_prob(s: LockingScheme, ciphertext, x: int, k: int) -> float:
    return float(decode_distribution(s, ciphertext, k)[int(x)].sum())


def primes_in(lo: int, hi: int) -> list[int]:
    """Primes in ``[lo, hi]`` by a sieve."""
    if hi < 2 or hi < lo:
        return []
    sieve = np.ones(hi + 1, dtype=bool)
    sieve[:2] = False
    for i in range(2, int(math.isqrt(hi)) + 1):
        if sieve[i]:
            sieve[i * i::i] = False
    return [int(p) for p in np.nonzero(sieve)[0] if p >= lo]


@dataclass(frozen=True)
class FingerprintParams:
    """Fingerprint parameters; ``l, u, t, d_B`` follow the theorem unless overridden.

    The unspecified constants ``c, c', c''`` default to one.
    """

    n: int
    delta: float
    eps: float
    c: float = 1.0
    c1: float = 1.0
    c2: float = 1.0
    overrides: dict = field(default_factory=dict)
    unitary_seed: int = 0

    def _theory(self) -> dict:
        l = (self.c2 / self.delta * math.log2(1 / self.eps) ** 2 / self.eps ** 8) ** (1 / 0.9) + 10 * self.n
        l = math.ceil(l)
        return {"l": l, "u": l + math.ceil((2 * self.n / self.delta) ** 2),
                "t": math.ceil(self.c * math.log2(1 / self.eps) / self.eps ** 2),
                "d_B": math.ceil(self.c1 / self.eps ** 2)}

    def resolved(self) -> dict:
        out = self._theory()
        out.update(self.overrides)
        if out["u"] > 2 ** (self.n - 2):
            raise ValueError(f"need u <= 2^(n-2): u = {out['u']}, n = {self.n}")
        out["primes"] = primes_in(out["l"], out["u"])
        if not out["primes"]:
            raise ValueError(f"no prime in [{out['l']}, {out['u']}]")
        return out


def fingerprint_unitaries(params: FingerprintParams, p: int) -> list[np.ndarray]:
    """Haar unitaries on ``p * d_B`` dimensions; reproducible from ``(unitary_seed, p)``."""
    r = params.resolved()
    rng = np.random.default_rng([params.unitary_seed, p])
    return [haar_unitary(p * r["d_B"], rng) for _ in range(r["t"])]


def fingerprint_make(params: FingerprintParams, x: int, rng: np.random.Generator) -> dict:
    """Random prime ``p``, a sampled pure fingerprint and the mixed state ``f(x)``."""
    r = params.resolved()
    if not 0 <= x < 2 ** params.n:
        raise ValueError("x out of range")
    p = int(rng.choice(r["primes"]))
    us = fingerprint_unitaries(params, p)
    d_b = r["d_B"]
    z = x % p
    cols = np.stack([u.conj().T[:, z * d_b + b] for u in us for b in range(d_b)], axis=1)
    rho = cols @ cols.conj().T / cols.shape[1]
    k, b = int(rng.integers(len(us))), int(rng.integers(d_b))
    return {"p": p, "state": us[k].conj().T[:, z * d_b + b], "density": rho, "k": k, "b": b}


def fingerprint_projector(params: FingerprintParams, p: int, y: int) -> np.ndarray:
    """Projector onto ``span{U_k^dagger |y mod p>|b>}``."""
    us = fingerprint_unitaries(params, p)
    d_b = params.resolved()["d_B"]
    z = y % p
    cols = np.stack([u.conj().T[:, z * d_b + b] for u in us for b in range(d_b)], axis=1)
    if cols.shape[1] >= cols.shape[0]:
        # spanning set larger than the space: use the column range directly
        u, sv, _ = np.linalg.svd(cols, full_matrices=False)
        r = int((sv > 1e-10 * sv.max()).sum())
        return u[:, :r] @ u[:, :r].conj().T
    v = orthogonalize(cols)
    return v @ v.conj().T


def fingerprint_test(params: FingerprintParams, fp: dict, y: int) -> float:
    """Exact acceptance probability ``tr[Pi_{F_y} f(x)]``."""
    proj = fingerprint_projector(params, fp["p"], y)
    return float(np.real(np.trace(proj @ fp["density"])))


def measured_gamma(unitaries, d_b: int, y: int, x: int | None = None) -> float:
    """Largest ``gamma`` with every relevant overlap at most ``d^(-gamma/2)``.

    Overlaps are ``|<y,b'| U_k' U_k^dagger |y,b>|`` for ``(k,b) != (k',b')``
    and, when ``x`` is given, also ``|<y,b'| U_k' U_k^dagger |x,b>|``.
    """
    d = unitaries[0].shape[0]

    def cols(z):
        return np.stack([u.conj().T[:, z * d_b + b] for u in unitaries for b in range(d_b)], axis=1)

    cy = cols(y)
    g = np.abs(cy.conj().T @ cy)
    np.fill_diagonal(g, 0.0)
    mx = g.max()
    if x is not None:
        mx = max(mx, float(np.abs(cy.conj().T @ cols(x)).max()))
    return math.inf if mx == 0 else -2 * math.log(mx) / math.log(d)


def fingerprint_error_bound(t: int, d_b: int, d: int, gamma: float) -> float:
    return 3 * (t * d_b) ** 2 * d ** (-gamma)


def qid_branches(ens: EnsembleSpec, v, split) -> np.ndarray:
    """Unnormalized ``(t, d_A, d_B)`` branches of ``t^{-1/2} sum_k |k> U_k |v>``."""
    d_a, d_b = (int(s) for s in split)
    v = np.asarray(v, dtype=complex)
    if d_a * d_b != ens.dim or v.shape != (ens.dim,):
        raise ValueError("split or state does not match the ensemble")
    return np.stack([u.apply(v).reshape(d_a, d_b) for u in ens.members]) / math.sqrt(len(ens))


def _branch_fidelities(bp: np.ndarray, bf: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    wp = (np.abs(bp) ** 2).sum(axis=2)
    wf = (np.abs(bf) ** 2).sum(axis=2)
    ov = np.abs((bp.conj() * bf).sum(axis=2)) ** 2
    ok = (wp > 1e-15) & (wf > 1e-15)
    # branches where either vector vanishes contribute fidelity 0
    fid = np.where(ok, ov / np.where(ok, wp * wf, 1.0), 0.0)
    return wp, fid


def qid_accept_prob(ens: EnsembleSpec, psi, phi, split) -> float:
    """``sum_{k,a} ||psi_ka||^2 |<psi_ka^ | phi_ka^>|^2``."""
    wp, fid = _branch_fidelities(qid_branches(ens, psi, split), qid_branches(ens, phi, split))
    return float((wp * fid).sum())


def qid_round(ens: EnsembleSpec, psi, phi, split, rng: np.random.Generator) -> bool:
    """One execution: sample ``(k, a)``, then Bob's two-outcome test on ``B``."""
    wp, fid = _branch_fidelities(qid_branches(ens, psi, split), qid_branches(ens, phi, split))
    flat = wp.ravel()
    i = int(rng.choice(flat.size, p=flat / flat.sum()))
    return bool(rng.random() < fid.ravel()[i])


def qid_deficiency(ens: EnsembleSpec, psi, phi, split) -> float:
    """Measured isometry deficiency over ``psi, phi, psi +- phi, psi +- i phi``.

    For each vector ``v`` it is ``sum_{k,a} | ||v_ka||^2 - ||v||^2/(t d_A) | / ||v||^2``.
    """
    psi = np.asarray(psi, dtype=complex)
    phi = np.asarray(phi, dtype=complex)
    d_a = int(split[0])
    m = len(ens) * d_a
    worst = 0.0
    for v in (psi, phi, psi + phi, psi - phi, psi + 1j * phi, psi - 1j * phi):
        nv = float(np.vdot(v, v).real)
        if nv < 1e-24:
            continue
        w = (np.abs(qid_branches(ens, v, split)) ** 2).sum(axis=2)
        worst = max(worst, float(np.abs(w - nv / m).sum()) / nv)
    return worst


def qid_report(ens: EnsembleSpec, psi, phi, split) -> dict:
    acc = qid_accept_prob(ens, psi, phi, split)
    target = float(abs(np.vdot(phi, psi)) ** 2)
    eb = qid_deficiency(ens, psi, phi, split)
    bound = 12 * eb + 2 * math.sqrt(eb)
    return {"accept": acc, "overlap": target, "deviation": abs(acc - target), "eps_bar": eb,
            "bound": bound, "bound_with_weights": bound + 2 * eb, "pass": abs(acc - target) <= bound + 1e-12}
