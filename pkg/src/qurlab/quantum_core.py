"""Dense quantum-information numerics for small systems.

States are numpy arrays. A pure state is a 1-d complex vector and a mixed
state a square Hermitian matrix. Composite systems are described by a list
of factor dimensions ``dims``; the global index is row-major over the
factors, so the first factor is the most significant digit.

All logarithms are base 2.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from scipy import linalg

__all__ = [
    "EIG_CLAMP",
    "PINV_REL",
    "ket",
    "as_density",
    "check_state",
    "measure_comp",
    "meas_map_T",
    "partial_trace",
    "psd_power",
    "trace_norm",
    "trace_distance",
    "tv_distance",
    "fidelity",
    "purified_distance",
    "hmin_rel",
    "h2_rel",
    "vn_entropy",
    "von_neumann_cond",
    "shannon",
    "binary_entropy",
    "orthogonalize",
    "haar_state",
    "haar_unitary",
    "random_density",
    "swap_operator",
    "maximally_entangled",
]

EIG_CLAMP = 1e-10
PINV_REL = 1e-12
_HERM_TOL = 1e-12


def ket(index: int, d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[index] = 1.0
    return v


def maximally_entangled(d: int) -> np.ndarray:
    """Pure state ``sum_i |ii> / sqrt(d)`` on two d-dimensional factors."""
    return np.eye(d, dtype=complex).reshape(-1) / np.sqrt(d)


def check_state(x) -> np.ndarray:
    """Validate and return a normalized state vector or density matrix.

    Density matrices whose trace is within 1e-10 of one are renormalized;
    eigenvalues down to -1e-10 are tolerated.
    """
    x = np.asarray(x, dtype=complex)
    if x.ndim == 1:
        nrm = np.linalg.norm(x)
        if abs(nrm - 1.0) > 1e-10:
            raise ValueError(f"state vector not normalized (norm {nrm})")
        return x / nrm
    if x.ndim != 2 or x.shape[0] != x.shape[1]:
        raise ValueError("density operator must be a square matrix")
    scale = max(1.0, np.abs(x).max())
    if np.abs(x - x.conj().T).max() > _HERM_TOL * scale * 100:
        raise ValueError("density operator is not Hermitian")
    x = (x + x.conj().T) / 2
    tr = np.trace(x).real
    if abs(tr - 1.0) > 1e-10:
        raise ValueError(f"density operator trace {tr} != 1")
    if np.linalg.eigvalsh(x).min() < -EIG_CLAMP:
        raise ValueError("density operator is not positive semidefinite")
    return x / tr


def as_density(x) -> np.ndarray:
    """Density matrix of a state vector, or the validated matrix itself."""
    x = check_state(x)
    if x.ndim == 1:
        return np.outer(x, x.conj())
    return x


def _check_dims(dims: Sequence[int], size: int) -> list[int]:
    dims = [int(d) for d in dims]
    if int(np.prod(dims)) != size:
        raise ValueError(f"dims {dims} do not match dimension {size}")
    return dims


def measure_comp(x, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Outcome distribution of a computational-basis measurement of ``keep``.

    Parameters
    ----------
    x : array_like
        State vector or density matrix.
    dims : sequence of int
        Factor dimensions.
    keep : sequence of int
        Indices of the measured factors, in output order.

    Returns
    -------
    numpy.ndarray
        Probabilities over the joint outcomes of ``keep`` (row-major).
    """
    x = np.asarray(x)
    dims = _check_dims(dims, x.shape[0])
    keep = list(keep)
    if any(k < 0 or k >= len(dims) for k in keep) or len(set(keep)) != len(keep):
        raise ValueError(f"bad subsystem indices {keep}")
    diag = np.abs(x) ** 2 if x.ndim == 1 else np.real(np.diag(x))
    diag = diag.reshape(dims)
    rest = tuple(i for i in range(len(dims)) if i not in keep)
    marg = diag.sum(axis=rest) if rest else diag
    # sum keeps the remaining axes in increasing order; reorder to ``keep``
    order = sorted(keep)
    marg = np.transpose(marg, [order.index(k) for k in keep])
    p = np.clip(marg.reshape(-1), 0.0, None)
    return p / p.sum()


def partial_trace(rho, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Reduced density matrix on the factors in ``keep`` (kept in input order)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    dims = _check_dims(dims, rho.shape[0])
    keep = sorted(set(keep))
    if any(k < 0 or k >= len(dims) for k in keep):
        raise ValueError(f"bad subsystem indices {keep}")
    n = len(dims)
    t = rho.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    # contract matching row/column axes one at a time, highest first
    cur = n
    for i in sorted(traced, reverse=True):
        t = np.trace(t, axis1=i, axis2=i + cur)
        cur -= 1
    dk = int(np.prod([dims[k] for k in keep])) if keep else 1
    return t.reshape(dk, dk)


def meas_map_T(rho, d_a1: int, d_a2: int, d_e: int = 1) -> np.ndarray:
    """Measure ``A = A1 A2`` in the computational basis, keep ``A1``, drop ``A2``.

    Returns the block-diagonal operator on ``A1 E``.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = np.outer(rho, rho.conj())
    if rho.shape[0] != d_a1 * d_a2 * d_e:
        raise ValueError("split does not factor the input dimension")
    t = rho.reshape(d_a1, d_a2, d_e, d_a1, d_a2, d_e)
    # diagonal in a1 and a2, then sum over a2
    blocks = np.einsum("abiabj->aij", t)
    out = np.zeros((d_a1 * d_e, d_a1 * d_e), dtype=complex)
    for a in range(d_a1):
        out[a * d_e:(a + 1) * d_e, a * d_e:(a + 1) * d_e] = blocks[a]
    return out


def _eigh(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    m = (m + m.conj().T) / 2
    return np.linalg.eigh(m)


def psd_power(m, power: float) -> np.ndarray:
    """Power of a PSD matrix; negative powers use the generalized inverse.

    Eigenvalues below ``1e-12 * lambda_max`` are treated as zero.
    """
    w, v = _eigh(np.asarray(m, dtype=complex))
    if w.min() < -EIG_CLAMP * max(1.0, w.max()):
        raise ValueError("matrix is not positive semidefinite")
    w = np.clip(w, 0.0, None)
    cut = PINV_REL * w.max() if w.size else 0.0
    mask = w > cut
    wp = np.zeros_like(w)
    wp[mask] = w[mask] ** power
    return (v * wp) @ v.conj().T


def trace_norm(m) -> float:
    m = np.asarray(m, dtype=complex)
    return float(np.abs(np.linalg.eigvalsh((m + m.conj().T) / 2)).sum())


def trace_distance(a, b) -> float:
    """Half the trace norm of ``a - b`` (states or density matrices)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim == 1:
        a = np.outer(a, a.conj())
    if b.ndim == 1:
        b = np.outer(b, b.conj())
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    return 0.5 * trace_norm(a - b)


def tv_distance(p, q) -> float:
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise ValueError("dimension mismatch")
    return 0.5 * float(np.abs(p - q).sum())


def fidelity(a, b) -> float:
    """``|| sqrt(a) sqrt(b) ||_1`` (not squared)."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    if a.ndim == 1:
        a = np.outer(a, a.conj())
    if b.ndim == 1:
        b = np.outer(b, b.conj())
    if a.shape != b.shape:
        raise ValueError("dimension mismatch")
    prod = psd_power(a, 0.5) @ psd_power(b, 0.5)
    s = linalg.svdvals(prod)
    return float(min(1.0, s.sum()))


def purified_distance(a, b) -> float:
    """``sqrt(1 - F^2)`` for normalized states."""
    f = fidelity(a, b)
    return float(np.sqrt(max(0.0, 1.0 - f * f)))


def _sandwich(rho, sigma, d_a: int, d_e: int, power: float) -> np.ndarray:
    rho = as_density(rho)
    sigma = np.asarray(sigma, dtype=complex)
    if rho.shape[0] != d_a * d_e or sigma.shape != (d_e, d_e):
        raise ValueError("split does not match operator dimensions")
    s = np.kron(np.eye(d_a), psd_power(sigma, power))
    return s @ rho @ s


def hmin_rel(rho, sigma, d_a: int, d_e: int) -> float:
    """``-log lambda_max((1 x sigma^-1/2) rho (1 x sigma^-1/2))``."""
    m = _sandwich(rho, sigma, d_a, d_e, -0.5)
    lam = np.linalg.eigvalsh((m + m.conj().T) / 2).max()
    return float(-np.log2(lam))


def h2_rel(rho, sigma, d_a: int, d_e: int) -> float:
    """``-log tr[((1 x sigma^-1/4) rho (1 x sigma^-1/4))^2]``."""
    m = _sandwich(rho, sigma, d_a, d_e, -0.25)
    return float(-np.log2(np.real(np.trace(m @ m))))


def vn_entropy(rho) -> float:
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        return 0.0
    w = np.linalg.eigvalsh((rho + rho.conj().T) / 2)
    w = w[w > 1e-15]
    return float(-(w * np.log2(w)).sum())


def von_neumann_cond(rho, d_a: int, d_e: int) -> float:
    """``H(A|E) = H(AE) - H(E)``."""
    rho = as_density(rho)
    rho_e = partial_trace(rho, [d_a, d_e], [1])
    return vn_entropy(rho) - vn_entropy(rho_e)


def shannon(p) -> float:
    p = np.asarray(p, dtype=float)
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return float(-x * np.log2(x) - (1 - x) * np.log2(1 - x))


def orthogonalize(vectors) -> np.ndarray:
    """Closest orthonormal family via the polar factor of the SVD.

    Parameters
    ----------
    vectors : array_like, shape (d, s)
        Columns are the input unit vectors.

    Returns
    -------
    numpy.ndarray, shape (d, s)
        ``U V^dagger`` where ``X = U S V^dagger``.
    """
    x = np.asarray(vectors, dtype=complex)
    if x.ndim != 2 or x.shape[1] > x.shape[0]:
        raise ValueError("need a d x s matrix with s <= d")
    u, s, vh = np.linalg.svd(x, full_matrices=False)
    if s.min() <= 1e-12 * max(1.0, s.max()):
        raise ValueError("input vectors are linearly dependent")
    return u @ vh


def haar_state(d: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return g / np.linalg.norm(g)


def haar_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * ph


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Random mixed state from a Ginibre matrix of the given rank."""
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def swap_operator(d: int) -> np.ndarray:
    """Swap ``F`` on two d-dimensional factors."""
    f = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            f[j * d + i, i * d + j] = 1.0
    return f
