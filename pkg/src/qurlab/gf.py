"""Binary finite fields GF(2^t) and polynomials over them.

Field elements are plain Python ints whose bit ``i`` is the coefficient of
``x^i`` (little-endian). The modulus is stored with its leading bit, so
GF(4) built from ``x^2 + x + 1`` has ``modulus == 0b111``.

Array helpers accept numpy integer arrays and use log/exp tables for fields
small enough to tabulate.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "FieldCtx",
    "clmul",
    "poly_mod",
    "is_irreducible",
    "find_irreducible",
    "find_generator",
    "make_field",
    "gf_mul",
    "gf_pow",
    "gf_inv",
    "gf_mul_array",
    "poly_eval_multi",
    "poly_interpolate",
]

MAX_DEGREE = 24
_TABLE_MAX_T = 20


def clmul(a: int, b: int) -> int:
    """Carry-less product of two GF(2)[x] polynomials."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_mod(a: int, m: int) -> int:
    """Remainder of ``a`` modulo ``m`` in GF(2)[x]."""
    dm = m.bit_length()
    while a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def _poly_gcd(a: int, b: int) -> int:
    while b:
        a, b = b, poly_mod(a, b)
    return a


def is_irreducible(poly: int) -> bool:
    """Rabin-style irreducibility test for a GF(2)[x] polynomial.

    Uses the fact that ``f`` of degree ``t`` is irreducible iff
    ``gcd(x^(2^i) - x, f) = 1`` for all ``i <= t // 2``.
    """
    t = poly.bit_length() - 1
    if t < 1:
        return False
    if t == 1:
        return True
    if not poly & 1:
        return False
    xp = 0b10
    for _ in range(t // 2):
        xp = poly_mod(clmul(xp, xp), poly)
        if _poly_gcd(poly, xp ^ 0b10) != 1:
            return False
    return True


@lru_cache(maxsize=None)
def find_irreducible(t: int) -> int:
    """Lowest irreducible polynomial of degree ``t`` (as a bit mask).

    Parameters
    ----------
    t : int
        Degree, ``1 <= t <= 24``.

    Returns
    -------
    int
        Bit mask including the leading ``x^t`` term.
    """
    if not isinstance(t, (int, np.integer)) or not 1 <= t <= MAX_DEGREE:
        raise ValueError(f"degree must satisfy 1 <= t <= {MAX_DEGREE}, got {t}")
    t = int(t)
    for cand in range(1 << t, 1 << (t + 1)):
        if is_irreducible(cand):
            return cand
    raise AssertionError("no irreducible polynomial found")  # pragma: no cover


def _prime_factors(n: int) -> list[int]:
    out, p = [], 2
    while p * p <= n:
        if n % p == 0:
            out.append(p)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        out.append(n)
    return out


def _mulmod(a: int, b: int, modulus: int) -> int:
    return poly_mod(clmul(a, b), modulus)


def _powmod(a: int, e: int, modulus: int) -> int:
    r = 1
    while e:
        if e & 1:
            r = _mulmod(r, a, modulus)
        a = _mulmod(a, a, modulus)
        e >>= 1
    return r


def _find_generator(t: int, modulus: int) -> int:
    order = (1 << t) - 1
    if order == 1:
        return 1
    factors = _prime_factors(order)
    for g in range(2, 1 << t):
        if all(_powmod(g, order // p, modulus) != 1 for p in factors):
            return g
    raise AssertionError("field has no generator")  # pragma: no cover


@dataclass(frozen=True)
class FieldCtx:
    """GF(2^t) defined by an irreducible ``modulus`` with generator ``generator``."""

    t: int
    modulus: int
    generator: int
    _tables: dict = field(default_factory=dict, repr=False, compare=False, hash=False)

    @property
    def q(self) -> int:
        return 1 << self.t

    def tables(self) -> tuple[np.ndarray, np.ndarray]:
        """Return ``(exp, log)`` tables; ``exp`` has length ``2(q-1)``."""
        if "exp" not in self._tables:
            if self.t > _TABLE_MAX_T:
                raise ValueError("field too large to tabulate")
            order = self.q - 1
            exp = np.empty(2 * order, dtype=np.int64)
            log = np.zeros(self.q, dtype=np.int64)
            x = 1
            for i in range(order):
                exp[i] = x
                log[x] = i
                x = _mulmod(x, self.generator, self.modulus)
            exp[order:] = exp[:order]
            self._tables["exp"] = exp
            self._tables["log"] = log
        return self._tables["exp"], self._tables["log"]

    def descriptor(self) -> dict:
        return {"t": self.t, "modulus": self.modulus, "generator": self.generator}


@lru_cache(maxsize=None)
def make_field(t: int) -> FieldCtx:
    """Build the deterministic field context for GF(2^t)."""
    modulus = find_irreducible(t)
    return FieldCtx(int(t), modulus, _find_generator(int(t), modulus))


def find_generator(ctx: FieldCtx) -> int:
    """Smallest element of multiplicative order ``2^t - 1``."""
    return _find_generator(ctx.t, ctx.modulus)


def gf_mul(ctx: FieldCtx, a: int, b: int) -> int:
    """Product of two field elements."""
    return poly_mod(clmul(int(a), int(b)), ctx.modulus)


def gf_pow(ctx: FieldCtx, a: int, e: int) -> int:
    if e < 0:
        return gf_pow(ctx, gf_inv(ctx, a), -e)
    return _powmod(int(a), e, ctx.modulus)


def gf_inv(ctx: FieldCtx, a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse")
    return _powmod(int(a), ctx.q - 2, ctx.modulus)


def gf_mul_array(ctx: FieldCtx, a, b) -> np.ndarray:
    """Elementwise product of integer arrays (broadcasting)."""
    a = np.asarray(a, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    if ctx.t <= _TABLE_MAX_T:
        exp, log = ctx.tables()
        prod = exp[log[a] + log[b]]
        return np.where((a == 0) | (b == 0), 0, prod)
    # shift-and-add fallback for wide fields
    a, b = np.broadcast_arrays(a, b)
    out = np.zeros(a.shape, dtype=np.int64)
    a = a.copy()
    top = 1 << ctx.t
    for i in range(ctx.t):
        out ^= np.where((b >> i) & 1, a, 0)
        a <<= 1
        a = np.where(a & top, a ^ ctx.modulus, a)
    return out


def poly_eval_multi(ctx: FieldCtx, coeffs, points) -> list[int]:
    """Evaluate ``f(X) = sum_i coeffs[i] X^i`` at every point (Horner)."""
    out = []
    for p in points:
        acc = 0
        for c in reversed(coeffs):
            acc = gf_mul(ctx, acc, p) ^ int(c)
        out.append(acc)
    return out


def _poly_mul_linear(ctx: FieldCtx, poly: list[int], root: int) -> list[int]:
    # poly * (X - root); subtraction is xor
    out = [0] * (len(poly) + 1)
    for i, c in enumerate(poly):
        out[i + 1] ^= c
        out[i] ^= gf_mul(ctx, c, root)
    return out


def poly_interpolate(ctx: FieldCtx, points, values) -> list[int]:
    """Lagrange interpolation; returns ``len(points)`` coefficients.

    Raises
    ------
    ValueError
        On repeated points or mismatched lengths.
    """
    points = [int(p) for p in points]
    values = [int(v) for v in values]
    if len(points) != len(values):
        raise ValueError("points and values differ in length")
    if len(set(points)) != len(points):
        raise ValueError("interpolation points must be pairwise distinct")
    n = len(points)
    coeffs = [0] * n
    for i, (pi, vi) in enumerate(zip(points, values)):
        if vi == 0:
            continue
        basis, denom = [1], 1
        for j, pj in enumerate(points):
            if j != i:
                basis = _poly_mul_linear(ctx, basis, pj)
                denom = gf_mul(ctx, denom, pi ^ pj)
        scale = gf_mul(ctx, vi, gf_inv(ctx, denom))
        for k in range(n):
            coeffs[k] ^= gf_mul(ctx, basis[k], scale)
    return coeffs
