"""Weak string erasure with three qubit bases and the noisy-storage parameter calculus.

The honest protocol is simulated in prepare-and-measure form: Alice sends
``V_theta^dagger |x>`` and Bob measures with ``V_theta~``. An EPR form on a
small number of qubits is provided as a distributional cross-check.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .mub import GATES
from .qcext import QUBIT_MUB_LABELS

__all__ = [
    "WseTranscript",
    "NoisyStorageParams",
    "basis_transition",
    "wse_run",
    "wse_run_epr",
    "ideal_joint",
    "empirical_joint",
    "wse_correctness_check",
    "channel_fidelity_bound",
    "wse_security_params",
    "bob_measure_all",
    "bob_store_first",
]

LOG3M1 = math.log2(3) - 1
_V = np.stack([GATES[lab] for lab in QUBIT_MUB_LABELS])


def basis_transition() -> np.ndarray:
    """``P[theta, theta~, x, x~] = |<x~| V_theta~ V_theta^dagger |x>|^2``."""
    out = np.empty((3, 3, 2, 2))
    for a in range(3):
        for b in range(3):
            m = _V[b] @ _V[a].conj().T
            out[a, b] = (np.abs(m) ** 2).T
    # exact zeros where rounding leaves ~1e-34
    return np.where(out < 1e-15, 0.0, out)


_TRANS = basis_transition()


@dataclass
class WseTranscript:
    n: int
    theta: np.ndarray
    x: np.ndarray
    theta_b: np.ndarray
    x_b: np.ndarray
    index_set: np.ndarray
    z: np.ndarray

    def to_json(self) -> str:
        d = {k: (v.tolist() if isinstance(v, np.ndarray) else v) for k, v in asdict(self).items()}
        return json.dumps(d)


@dataclass(frozen=True)
class NoisyStorageParams:
    n: int
    eps: float
    N: int
    lam: float

    @property
    def kappa(self) -> float:
        return 8 * math.log2(4 / self.eps)

    def __post_init__(self):
        if self.lam > LOG3M1 + 1e-15:
            raise ValueError("lambda must not exceed log 3 - 1")


def _transcript(n, theta, x, theta_b, x_b) -> WseTranscript:
    idx = np.nonzero(theta == theta_b)[0]
    return WseTranscript(n, theta, x, theta_b, x_b, idx, x_b[idx])


def wse_run(n: int, rng: np.random.Generator) -> WseTranscript:
    """Honest run: uniform bases and bits for Alice, uniform bases for Bob."""
    if n < 1:
        raise ValueError("n must be positive")
    theta = rng.integers(0, 3, n)
    x = rng.integers(0, 2, n)
    theta_b = rng.integers(0, 3, n)
    p1 = _TRANS[theta, theta_b, x, 1]
    x_b = (rng.random(n) < p1).astype(np.int64)
    return _transcript(n, theta, x, theta_b, x_b)


def wse_run_epr(n: int, rng: np.random.Generator) -> WseTranscript:
    """EPR form on ``n <= 3`` qubit pairs via the full state vector.

    Alice measures her halves of ``n`` maximally entangled pairs with
    ``conj(V_theta)``; Bob's halves are then ``V_theta^dagger |x>``.
    """
    if not 1 <= n <= 3:
        raise ValueError("EPR form supports 1 <= n <= 3")
    theta = rng.integers(0, 3, n)
    theta_b = rng.integers(0, 3, n)
    # qubit order: A_1..A_n, B_1..B_n
    psi = np.zeros((2,) * (2 * n), dtype=complex)
    for bits in np.ndindex(*(2,) * n):
        psi[bits + bits] = 1.0
    psi /= math.sqrt(2 ** n)
    for i in range(n):
        psi = np.moveaxis(np.tensordot(_V[theta[i]].conj(), psi, axes=([1], [i])), 0, i)
        psi = np.moveaxis(np.tensordot(_V[theta_b[i]], psi, axes=([1], [n + i])), 0, n + i)
    p = (np.abs(psi) ** 2).ravel()
    out = int(rng.choice(p.size, p=p / p.sum()))
    bits = np.array([(out >> (2 * n - 1 - j)) & 1 for j in range(2 * n)])
    return _transcript(n, theta, bits[:n], theta_b, bits[n:])


def ideal_joint(n: int, p: float = 1 / 3) -> np.ndarray:
    """``(2^n, 2^n)`` table of ``Pr[x, I]`` for uniform ``x`` and independent ``Psi(p)``.

    ``I`` is encoded as a bitmask with qubit 0 as the most significant bit.
    """
    sizes = np.array([bin(m).count("1") for m in range(1 << n)])
    psi = p ** sizes * (1 - p) ** (n - sizes)
    return np.tile(psi, (1 << n, 1)) / (1 << n)


def _mask(tr: WseTranscript) -> int:
    m = 0
    for i in tr.index_set:
        m |= 1 << (tr.n - 1 - int(i))
    return m


def _xint(tr: WseTranscript) -> int:
    return int("".join(map(str, tr.x)), 2)


def empirical_joint(transcripts) -> np.ndarray:
    n = transcripts[0].n
    h = np.zeros((1 << n, 1 << n))
    for tr in transcripts:
        h[_xint(tr), _mask(tr)] += 1
    return h / len(transcripts)


def wse_correctness_check(transcripts, alpha_sigma: float = 3.0) -> dict:
    """Compare the empirical law of ``(x, I)`` with uniform ``x`` times ``Psi(1/3)``.

    Reports the TV distance, a chi-square statistic and whether ``z = x_I`` held
    in every transcript. The chi-square pass uses mean + ``alpha_sigma`` standard
    deviations of the chi-square law with ``cells - 1`` degrees of freedom.
    """
    n = transcripts[0].n
    if n > 4:
        raise ValueError("exact histogram needs n <= 4")
    emp = empirical_joint(transcripts)
    ideal = ideal_joint(n)
    m = len(transcripts)
    chi2 = float((m * (emp - ideal) ** 2 / ideal).sum())
    dof = emp.size - 1
    thr = dof + alpha_sigma * math.sqrt(2 * dof)
    z_ok = all(np.array_equal(tr.z, tr.x[tr.index_set]) for tr in transcripts)
    return {"tv": 0.5 * float(np.abs(emp - ideal).sum()), "chi2": chi2, "dof": dof, "chi2_threshold": thr,
            "z_matches": z_ok, "pass": bool(z_ok and chi2 <= thr)}


def channel_fidelity_bound(n: int, N: int) -> dict:
    """``2^{-n+N}``; reported as a vacuous 1 when ``n < N``."""
    if n < N:
        return {"bound": 1.0, "vacuous": True}
    return {"bound": 2.0 ** (N - n), "vacuous": False}


def wse_security_params(n: int, eps: float, N: int) -> dict:
    """Largest ``lambda`` with ``2^{-n+N} <= 2^{-(2 - log 3 + lambda) n - kappa}``."""
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    if n < 1 or N < 0:
        raise ValueError("need n >= 1 and N >= 0")
    kappa = 8 * math.log2(4 / eps)
    raw = LOG3M1 - N / n - kappa / n
    lam = min(max(raw, 0.0), LOG3M1)
    return {"lambda_max": lam, "lambda_raw": raw, "secure": raw > 0, "kappa": kappa, "n": n, "eps": eps, "N": N}


def bob_measure_all(n: int, rng: np.random.Generator, basis: int = 0) -> dict:
    """Demonstration attack: Bob measures every qubit in one fixed basis right away."""
    tr = wse_run(n, rng)
    theta_b = np.full(n, basis)
    x_b = (rng.random(n) < _TRANS[tr.theta, theta_b, tr.x, 1]).astype(np.int64)
    return {"guess_rate": float(np.mean(x_b == tr.x)), "n": n}


def bob_store_first(n: int, N: int, rng: np.random.Generator, basis: int = 0) -> dict:
    """Demonstration attack: keep the first ``N`` qubits until the bases are announced.

    Stored qubits are measured in Alice's basis; the rest in ``basis`` immediately.
    """
    tr = wse_run(n, rng)
    theta_b = np.full(n, basis)
    stored = np.arange(n) < N
    theta_b[stored] = tr.theta[stored]
    x_b = (rng.random(n) < _TRANS[tr.theta, theta_b, tr.x, 1]).astype(np.int64)
    return {"guess_rate": float(np.mean(x_b == tr.x)), "n": n, "N": int(min(N, n))}
