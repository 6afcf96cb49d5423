"""Structured unitaries and (approximately) mutually unbiased bases.

A :class:`UnitarySpec` is an ordered list of stages applied left to right to
a state vector on ``n`` qubits (qubit 0 is the most significant index bit).
The basis associated with a unitary ``U`` is ``{U^dagger |x>}``: ensembles
are evaluated by applying ``U`` forward and measuring computationally.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .extractor import BitPermutation
from .gf import FieldCtx, gf_mul, make_field

__all__ = [
    "GATES",
    "PhaseStage",
    "LocalStage",
    "PermStage",
    "DenseStage",
    "UnitarySpec",
    "EnsembleSpec",
    "alpha_vector",
    "quadratic_form_T",
    "quadratic_form_table",
    "build_exact_mubs",
    "hadamard_codewords",
    "build_hadamard_mubs",
    "hamming",
    "overlap_matrix_max",
    "verify_gamma_mub",
    "check_2design",
    "minentropy_flatten",
]

_S2 = 1 / math.sqrt(2)
GATES = {
    "I": np.eye(2, dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) * _S2,
    "SH": np.array([[1, 1], [1j, -1j]], dtype=complex) * _S2,
    # third qubit basis map, unbiased to I and H (the -1 corner of the
    # commonly printed form would make it non-unitary)
    "V2": np.array([[1, 1j], [1j, 1]], dtype=complex) * _S2,
}
GATES["SHdg"] = GATES["SH"].conj().T
GATES["V2dg"] = GATES["V2"].conj().T


def _bits(d: int, n: int) -> np.ndarray:
    """``(d, n)`` array; column ``x`` holds bit ``x`` (little-endian) of each index."""
    idx = np.arange(d)
    return ((idx[:, None] >> np.arange(n)[None, :]) & 1).astype(np.int64)


@dataclass(frozen=True)
class PhaseStage:
    """Diagonal ``v -> i^(sign * T(v))`` for a length ``2n-1`` alpha vector."""

    n: int
    alpha: tuple
    sign: int = 1

    def phases(self) -> np.ndarray:
        t = quadratic_form_table(self.n, self.alpha)
        return 1j ** ((self.sign * t) % 4)

    def apply(self, psi):
        ph = self.phases()
        return psi * (ph if psi.ndim == 1 else ph[:, None])

    def inverse(self):
        return PhaseStage(self.n, self.alpha, -self.sign)


@dataclass(frozen=True)
class LocalStage:
    """Tensor product of single-qubit gates named in :data:`GATES`."""

    labels: tuple

    def apply(self, psi):
        n = len(self.labels)
        extra = psi.shape[1:]
        t = psi.reshape((2,) * n + extra)
        for q, lab in enumerate(self.labels):
            if lab == "I":
                continue
            t = np.moveaxis(np.tensordot(GATES[lab], t, axes=([1], [q])), 0, q)
        return t.reshape(psi.shape)

    def inverse(self):
        inv = {"I": "I", "H": "H", "SH": "SHdg", "SHdg": "SH", "V2": "V2dg", "V2dg": "V2"}
        return LocalStage(tuple(inv[lab] for lab in self.labels))


@dataclass(frozen=True, eq=False)
class PermStage:
    """Basis permutation ``|x> -> |P(x)>``; ``P`` may act on the low bits only."""

    perm: BitPermutation
    n: int
    inverse_flag: bool = False

    def table(self) -> np.ndarray:
        x = np.arange(1 << self.n, dtype=np.int64)
        w = self.perm.n
        low = x & ((1 << w) - 1)
        f = self.perm.inverse if self.inverse_flag else self.perm.forward
        return (x >> w << w) | f(low)

    def apply(self, psi):
        out = np.empty_like(psi)
        out[self.table()] = psi
        return out

    def inverse(self):
        return PermStage(self.perm, self.n, not self.inverse_flag)


@dataclass(frozen=True, eq=False)
class DenseStage:
    matrix: np.ndarray

    def apply(self, psi):
        return self.matrix @ psi

    def inverse(self):
        return DenseStage(self.matrix.conj().T)


@dataclass(frozen=True, eq=False)
class UnitarySpec:
    """Product of stages; ``stages[0]`` acts first."""

    n_qubits: int
    stages: tuple = ()
    label: str = ""

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def apply(self, psi) -> np.ndarray:
        psi = np.asarray(psi, dtype=complex)
        if psi.shape[0] != self.dim:
            raise ValueError("state dimension does not match the unitary")
        for st in self.stages:
            psi = st.apply(psi)
        return psi

    def adjoint(self) -> "UnitarySpec":
        return UnitarySpec(self.n_qubits, tuple(st.inverse() for st in reversed(self.stages)),
                           self.label + "^dg")

    def apply_adjoint(self, psi) -> np.ndarray:
        return self.adjoint().apply(psi)

    def then(self, other: "UnitarySpec", label: str = "") -> "UnitarySpec":
        """``other`` applied after ``self``."""
        if other.n_qubits != self.n_qubits:
            raise ValueError("dimension mismatch")
        return UnitarySpec(self.n_qubits, self.stages + other.stages, label)

    def matrix(self) -> np.ndarray:
        return self.apply(np.eye(self.dim, dtype=complex))

    def embed_low(self, n_total: int) -> "UnitarySpec":
        """``id (x) self`` with ``self`` acting on the last ``n_qubits`` qubits."""
        pad = n_total - self.n_qubits
        if pad < 0:
            raise ValueError("target register is smaller than the unitary")
        stages = []
        for st in self.stages:
            if isinstance(st, LocalStage):
                stages.append(LocalStage(("I",) * pad + st.labels))
            elif isinstance(st, PermStage):
                stages.append(PermStage(st.perm, n_total, st.inverse_flag))
            elif isinstance(st, DenseStage):
                stages.append(DenseStage(np.kron(np.eye(1 << pad), st.matrix)))
            else:
                stages.append(DenseStage(np.kron(np.eye(1 << pad), UnitarySpec(self.n_qubits, (st,)).matrix())))
        return UnitarySpec(n_total, tuple(stages), self.label)


@dataclass(frozen=True, eq=False)
class EnsembleSpec:
    """Indexed family of unitaries with a uniform seed."""

    members: tuple
    name: str = "ensemble"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.members:
            raise ValueError("ensemble must be non-empty")
        if len({m.n_qubits for m in self.members}) != 1:
            raise ValueError("members act on different dimensions")

    def __len__(self):
        return len(self.members)

    def __getitem__(self, i):
        return self.members[i]

    @property
    def n_qubits(self) -> int:
        return self.members[0].n_qubits

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def descriptor(self) -> dict:
        return {"name": self.name, "t": len(self), "n_qubits": self.n_qubits, "params": self.params}


def alpha_vector(ctx: FieldCtx, u: Sequence[int]) -> tuple:
    """``alpha_u(z) = N_u(x, y)`` for ``x + y = z`` with ``theta = X``.

    ``N_u = sum_l u_l M_l`` where ``X^z mod Q = sum_l M_l(z) X^l``; the sum is
    taken over the integers as the entries are later used mod 4.
    """
    n = ctx.t
    if len(u) != n:
        raise ValueError("u must have length n")
    out = []
    xz = 1
    for z in range(2 * n - 1):
        out.append(sum(int(u[l]) * ((xz >> l) & 1) for l in range(n)))
        xz <<= 1
        if xz >> n:
            xz ^= ctx.modulus
    return tuple(out)


@lru_cache(maxsize=256)
def _qf_table(n: int, alpha: tuple) -> np.ndarray:
    b = _bits(1 << n, n)
    conv = np.zeros((1 << n, 2 * n - 1), dtype=np.int64)
    for x in range(n):
        for y in range(n):
            conv[:, x + y] += b[:, x] * b[:, y]
    out = (conv @ np.asarray(alpha, dtype=np.int64)) % 4
    out.flags.writeable = False
    return out


def quadratic_form_table(n: int, alpha: Sequence[int]) -> np.ndarray:
    """``T(v) mod 4`` for every ``v`` in ``{0,1}^n`` (index bit ``x`` = ``v_x``)."""
    return _qf_table(int(n), tuple(int(a) for a in alpha))


def quadratic_form_T(ctx: FieldCtx, u: Sequence[int], v: Sequence[int]) -> int:
    """``T_u(v) = sum_z (sum_x v_x v_{z-x}) alpha_u(z) mod 4``."""
    n = ctx.t
    alpha = alpha_vector(ctx, u)
    tot = 0
    for z in range(2 * n - 1):
        c = sum(int(v[x]) * int(v[z - x]) for x in range(max(0, z - n + 1), min(z, n - 1) + 1))
        tot += c * alpha[z]
    return tot % 4


def _ubits(j: int, n: int) -> tuple:
    return tuple((j >> i) & 1 for i in range(n))


def build_exact_mubs(n: int, r: int | None = None) -> EnsembleSpec:
    """First ``r`` of the ``2^n + 1`` mutually unbiased bases on ``n`` qubits.

    Member 0 is the identity. Member ``j >= 1`` is ``H^{xn} D_u^dagger`` with
    ``u`` the little-endian bits of ``j - 1``, i.e. the adjoint of
    ``D_u H^{xn}`` whose columns form the ``j``-th basis.
    """
    if not 1 <= n <= 6:
        raise ValueError("need 1 <= n <= 6")
    full = (1 << n) + 1
    r = full if r is None else r
    if not 1 <= r <= full:
        raise ValueError(f"need 1 <= r <= 2^n + 1 = {full}")
    ctx = make_field(n)
    members = [UnitarySpec(n, (), "I")]
    had = LocalStage(("H",) * n)
    for j in range(1, r):
        u = _ubits(j - 1, n)
        ph = PhaseStage(n, alpha_vector(ctx, u), -1)
        members.append(UnitarySpec(n, (ph, had), f"mub{j}"))
    return EnsembleSpec(tuple(members), "exact_mub", {"n": n, "r": r, **ctx.descriptor()})


def hamming(a: Sequence[int], b: Sequence[int]) -> int:
    return int(sum(x != y for x, y in zip(a, b)))


def hadamard_codewords(n_prime: int) -> list[tuple]:
    """Hadamard code: ``x in {0,1}^{n'}`` maps to ``(x . z)_z`` of length ``2^{n'}``."""
    n = 1 << n_prime
    words = []
    for x in range(1 << n_prime):
        words.append(tuple(bin(x & z).count("1") & 1 for z in range(n)))
    return words


def _rs_hadamard_codewords(m: int, k: int) -> list[tuple]:
    """Reed-Solomon over GF(2^m) (degree < k, all 2^m points) then Hadamard per symbol."""
    ctx = make_field(m)
    q = ctx.q
    if not 1 <= k <= q:
        raise ValueError("need 1 <= k <= 2^m")
    inner = hadamard_codewords(m)
    words = []
    for msg in range(q ** k):
        coeffs = [(msg // q ** i) % q for i in range(k)]
        word = []
        for pt in range(q):
            acc = 0
            for c in reversed(coeffs):
                acc = gf_mul(ctx, acc, pt) ^ c
            word.extend(inner[acc])
        words.append(tuple(word))
    return words


def build_hadamard_mubs(n_prime: int, variant: str = "hadamard_code", r: int | None = None,
                        rs_k: int = 2) -> EnsembleSpec:
    """Hadamard-pattern ensemble ``{H^v}`` indexed by codewords ``v``.

    Parameters
    ----------
    n_prime : int
        For ``hadamard_code`` the register has ``n = 2^{n'}`` qubits. For
        ``concatenated`` the outer Reed-Solomon code is over ``GF(2^{n'})``
        with ``2^{n'}`` points and degree ``< rs_k``; ``n = 4^{n'}``.
    r : int, optional
        Keep only the first ``r`` codewords.
    """
    if variant == "hadamard_code":
        if not 1 <= n_prime <= 3:
            raise ValueError("hadamard_code variant supports 1 <= n' <= 3")
        words = hadamard_codewords(n_prime)
    elif variant == "concatenated":
        if not 1 <= n_prime <= 2:
            raise ValueError("concatenated variant supports 1 <= n' <= 2")
        words = _rs_hadamard_codewords(n_prime, rs_k)
    else:
        raise ValueError(f"unknown variant {variant!r}")
    if r is not None:
        if not 1 <= r <= len(words):
            raise ValueError("r exceeds the number of codewords")
        words = words[:r]
    n = len(words[0])
    dmin = min((hamming(a, b) for i, a in enumerate(words) for b in words[i + 1:]), default=n)
    members = tuple(UnitarySpec(n, (LocalStage(tuple("H" if b else "I" for b in w)),), "H^" + "".join(map(str, w)))
                    for w in words)
    return EnsembleSpec(members, variant, {"n_prime": n_prime, "n": n, "codewords": words,
                                           "min_distance": dmin, "gamma": dmin / n})


def overlap_matrix_max(ui: np.ndarray, uj: np.ndarray) -> float:
    """``max_{x,y} |<x| U_i U_j^dagger |y>|``."""
    return float(np.abs(ui @ uj.conj().T).max())


def verify_gamma_mub(ens: EnsembleSpec, gamma: float) -> float:
    """Largest excess of a cross-basis overlap over ``d^{-gamma/2}``."""
    if ens.dim > 64:
        raise ValueError("dense verification needs d <= 64")
    mats = [m.matrix() for m in ens.members]
    thr = ens.dim ** (-gamma / 2)
    worst = -np.inf
    for i in range(len(mats)):
        for j in range(i + 1, len(mats)):
            worst = max(worst, overlap_matrix_max(mats[i], mats[j]) - thr)
    return float(worst) if np.isfinite(worst) else -thr


def check_2design(ens: EnsembleSpec) -> float:
    """Frobenius distance of the basis second moment from ``2 Pi_sym / (d(d+1))``."""
    d = ens.dim
    if len(ens) != d + 1:
        raise ValueError(f"need exactly d + 1 = {d + 1} bases, got {len(ens)}")
    acc = np.zeros((d * d, d * d), dtype=complex)
    for m in ens.members:
        vecs = m.adjoint().matrix()  # columns U^dagger |a>
        for a in range(d):
            v = np.kron(vecs[:, a], vecs[:, a])
            acc += np.outer(v, v.conj())
    acc /= d * (d + 1)
    swap = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            swap[j * d + i, i * d + j] = 1.0
    pi_sym = (np.eye(d * d) + swap) / 2
    return float(np.linalg.norm(acc - 2 * pi_sym / (d * (d + 1))))


def minentropy_flatten(ens: EnsembleSpec, state, eps: float, gamma: float) -> list[dict]:
    """Per-member flattening of the output distributions of a gamma-MUB.

    ``S`` holds the ``floor(d^{gamma/2})`` largest entries of the stacked
    amplitudes ``(U_j psi)_j``; ``w_j`` is the mass of ``S`` inside block ``j``
    and ``q_j`` moves that mass uniformly over the block. Index ``j`` is in
    the good set when ``w_j <= eps``.
    """
    psi = np.asarray(state, dtype=complex)
    d = ens.dim
    n = ens.n_qubits
    probs = np.stack([np.abs(m.apply(psi)) ** 2 for m in ens.members])
    size = int(math.floor(d ** (gamma / 2) + 1e-12))
    flat = probs.ravel()
    order = np.argsort(-flat, kind="stable")[:size]
    in_s = np.zeros(flat.size, dtype=bool)
    in_s[order] = True
    in_s = in_s.reshape(probs.shape)
    bound = gamma * n / 2 - math.log2(8 / eps ** 2)
    out = []
    for j in range(len(ens)):
        p = probs[j]
        w = float(p[in_s[j]].sum())
        q = np.where(in_s[j], 0.0, p) + w / d
        out.append({"index": j, "w": w, "in_T": w <= eps, "tv_to_q": 0.5 * float(np.abs(p - q).sum()),
                    "hmin_q": float(-math.log2(q.max())), "hmin_bound": bound})
    return out
