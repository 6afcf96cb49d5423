"""Strong permutation condensers and extractors on bit strings.

An ``n``-bit string is stored as an integer whose most significant bit is
the first bit. The *head* of width ``m`` of an output ``z`` is therefore
``z >> (n - m)`` and the tail is the remaining low bits.

Every family member is a :class:`BitPermutation` with exact forward and
inverse maps, evaluated elementwise on numpy integer arrays.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .gf import FieldCtx, gf_inv, gf_mul_array, gf_pow, make_field, poly_interpolate

__all__ = [
    "BitPermutation",
    "IdentityPermutation",
    "RSPermutation",
    "LHLPermutation",
    "AffinePermutation",
    "ComposedPermutation",
    "SplitHeadPermutation",
    "BlocksPermutation",
    "SeedFromHeadPermutation",
    "ExtractorFamily",
    "rs_permutation",
    "lhl_permutation",
    "rs_family",
    "lhl_family",
    "identity_family",
    "compose_families",
    "repeat_families",
    "block_extract_family",
    "baseext_params",
    "guv_params",
    "guv_iteration",
    "guv_family",
    "head_table",
    "flat_source",
    "interval_source",
    "verify_condenser",
    "verify_extractor",
    "lhl_bound",
]


def _as_array(x) -> tuple[np.ndarray, bool]:
    scalar = np.ndim(x) == 0
    return np.asarray(x, dtype=np.int64), scalar


def _ret(arr: np.ndarray, scalar: bool):
    return int(arr) if scalar else arr


class BitPermutation:
    """Invertible map on ``n``-bit integers."""

    kind = "abstract"
    n: int

    def _fwd(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _inv(self, z: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def forward(self, x):
        arr, scalar = _as_array(x)
        return _ret(self._fwd(arr), scalar)

    def inverse(self, z):
        arr, scalar = _as_array(z)
        return _ret(self._inv(arr), scalar)

    def head(self, x, m: int):
        """First ``m`` output bits."""
        if not 0 <= m <= self.n:
            raise ValueError("head width out of range")
        return self.forward(x) >> (self.n - m) if m else self.forward(x) * 0

    def table(self) -> np.ndarray:
        """Forward images of all ``2**n`` inputs (``n <= 24``)."""
        if self.n > 24:
            raise ValueError("permutation too wide to tabulate")
        return self._fwd(np.arange(1 << self.n, dtype=np.int64))

    def descriptor(self) -> dict:
        return {"kind": self.kind, "n": self.n}


class IdentityPermutation(BitPermutation):
    kind = "identity"

    def __init__(self, n: int):
        self.n = n

    def _fwd(self, x):
        return x.copy()

    def _inv(self, z):
        return z.copy()


class RSPermutation(BitPermutation):
    """Reed-Solomon evaluation map on ``GF(2^t)^{n_blocks}``.

    Input block ``i`` (most significant first) is the coefficient of ``X^i``.
    Output block ``j`` is ``f(zeta^j y)``; the head is the first ``ell`` blocks.
    """

    kind = "rs_seeded"

    def __init__(self, ctx: FieldCtx, n_blocks: int, ell: int, y: int):
        if y == 0 or not 0 < y < ctx.q:
            raise ValueError("seed must be a nonzero field element")
        if not 1 <= n_blocks <= ctx.q - 1:
            raise ValueError("need n_blocks <= 2^t - 1 distinct evaluation points")
        if not 0 <= ell <= n_blocks:
            raise ValueError("head block count out of range")
        self.ctx, self.n_blocks, self.ell, self.y = ctx, n_blocks, ell, int(y)
        self.n = n_blocks * ctx.t
        self.m = ell * ctx.t
        zeta = ctx.generator
        self.points = [gf_mul_array(ctx, gf_pow(ctx, zeta, j), y).item() for j in range(n_blocks)]
        # inverse Vandermonde: column j holds the Lagrange basis polynomial for point j
        cols = []
        for j in range(n_blocks):
            unit = [0] * n_blocks
            unit[j] = 1
            cols.append(poly_interpolate(ctx, self.points, unit))
        self._minv = np.array(cols, dtype=np.int64).T  # [coef i, point j]

    def _blocks(self, x):
        t, nb, mask = self.ctx.t, self.n_blocks, self.ctx.q - 1
        return [(x >> (t * (nb - 1 - i))) & mask for i in range(nb)]

    def _join(self, blocks):
        t, nb = self.ctx.t, self.n_blocks
        out = np.zeros_like(blocks[0])
        for i, b in enumerate(blocks):
            out |= b << (t * (nb - 1 - i))
        return out

    def _fwd(self, x):
        coeffs = self._blocks(x)
        vals = []
        for p in self.points:
            acc = np.zeros_like(x)
            for c in reversed(coeffs):
                acc = gf_mul_array(self.ctx, acc, p) ^ c
            vals.append(acc)
        return self._join(vals)

    def _inv(self, z):
        vals = self._blocks(z)
        coeffs = []
        for i in range(self.n_blocks):
            acc = np.zeros_like(z)
            for j, v in enumerate(vals):
                acc ^= gf_mul_array(self.ctx, self._minv[i, j], v)
            coeffs.append(acc)
        return self._join(coeffs)

    def descriptor(self):
        return {"kind": self.kind, "n": self.n,
                "params": {"n_blocks": self.n_blocks, "ell": self.ell, "y": self.y},
                "modulus": self.ctx.modulus, "generator": self.ctx.generator}


class LHLPermutation(BitPermutation):
    """``x -> x * y`` in ``GF(2^n)``."""

    kind = "lhl"

    def __init__(self, ctx: FieldCtx, y: int, m: int | None = None):
        if not 0 < y < ctx.q:
            raise ValueError("seed must be a nonzero field element")
        m = ctx.t if m is None else m
        if not 0 <= m <= ctx.t:
            raise ValueError("output length exceeds field width")
        self.ctx, self.y, self.m, self.n = ctx, int(y), m, ctx.t
        self._yinv = gf_inv(ctx, y)

    def _fwd(self, x):
        return gf_mul_array(self.ctx, x, self.y)

    def _inv(self, z):
        return gf_mul_array(self.ctx, z, self._yinv)

    def descriptor(self):
        return {"kind": self.kind, "n": self.n, "params": {"y": self.y, "m": self.m},
                "modulus": self.ctx.modulus, "generator": self.ctx.generator}


class AffinePermutation(BitPermutation):
    """``x -> a * x + b`` in ``GF(2^t)`` with ``a != 0``."""

    kind = "affine"

    def __init__(self, ctx: FieldCtx, a: int, b: int):
        if not 0 < a < ctx.q or not 0 <= b < ctx.q:
            raise ValueError("need a in GF(q)* and b in GF(q)")
        self.ctx, self.a, self.b, self.n = ctx, int(a), int(b), ctx.t
        self._ainv = gf_inv(ctx, a)

    def _fwd(self, x):
        return gf_mul_array(self.ctx, x, self.a) ^ self.b

    def _inv(self, z):
        return gf_mul_array(self.ctx, z ^ self.b, self._ainv)

    def descriptor(self):
        return {"kind": self.kind, "n": self.n, "params": {"a": self.a, "b": self.b},
                "modulus": self.ctx.modulus, "generator": self.ctx.generator}


class ComposedPermutation(BitPermutation):
    """Apply ``perms[0]`` first, then ``perms[1]``, and so on."""

    kind = "compose"

    def __init__(self, perms: Sequence[BitPermutation]):
        perms = list(perms)
        if not perms:
            raise ValueError("empty composition")
        if len({p.n for p in perms}) != 1:
            raise ValueError("width mismatch in composition")
        self.perms, self.n = perms, perms[0].n

    def _fwd(self, x):
        for p in self.perms:
            x = p._fwd(x)
        return x

    def _inv(self, z):
        for p in reversed(self.perms):
            z = p._inv(z)
        return z

    def descriptor(self):
        return {"kind": self.kind, "n": self.n, "params": {"parts": [p.descriptor() for p in self.perms]}}


class SplitHeadPermutation(BitPermutation):
    """Apply ``head_perm`` to the first ``m`` bits and ``tail_perm`` to the rest."""

    kind = "split_head"

    def __init__(self, n: int, m: int, head_perm: BitPermutation | None = None,
                 tail_perm: BitPermutation | None = None):
        if not 0 <= m <= n:
            raise ValueError("split point out of range")
        if head_perm is not None and head_perm.n != m:
            raise ValueError(f"head permutation width {head_perm.n} != {m}")
        if tail_perm is not None and tail_perm.n != n - m:
            raise ValueError(f"tail permutation width {tail_perm.n} != {n - m}")
        self.n, self.m, self.head_perm, self.tail_perm = n, m, head_perm, tail_perm

    def _apply(self, x, inverse):
        r = self.n - self.m
        h, t = x >> r, x & ((1 << r) - 1)
        if self.head_perm is not None:
            h = self.head_perm._inv(h) if inverse else self.head_perm._fwd(h)
        if self.tail_perm is not None:
            t = self.tail_perm._inv(t) if inverse else self.tail_perm._fwd(t)
        return (h << r) | t

    def _fwd(self, x):
        return self._apply(x, False)

    def _inv(self, z):
        return self._apply(z, True)

    def descriptor(self):
        return {"kind": self.kind, "n": self.n, "params": {
            "m": self.m,
            "head": None if self.head_perm is None else self.head_perm.descriptor(),
            "tail": None if self.tail_perm is None else self.tail_perm.descriptor()}}


class BlocksPermutation(BitPermutation):
    """Permute contiguous blocks independently and gather their heads first.

    Input is split into blocks of the given widths. Block ``i`` is mapped by
    ``perms[i]``; the output lists every block head (``heads[i]`` bits) in
    order, followed by every block tail.
    """

    kind = "blocks"

    def __init__(self, perms: Sequence[BitPermutation], heads: Sequence[int]):
        self.perms, self.heads = list(perms), list(heads)
        self.widths = [p.n for p in self.perms]
        if any(not 0 <= h <= w for h, w in zip(self.heads, self.widths)):
            raise ValueError("block head wider than block")
        self.n = sum(self.widths)
        self.m = sum(self.heads)

    def _fwd(self, x):
        shift = self.n
        heads, tails = [], []
        for p, w, h in zip(self.perms, self.widths, self.heads):
            shift -= w
            z = p._fwd((x >> shift) & ((1 << w) - 1))
            heads.append((z >> (w - h), h))
            tails.append((z & ((1 << (w - h)) - 1), w - h))
        out = np.zeros_like(x)
        for v, w in heads + tails:
            out = (out << w) | v
        return out

    def _inv(self, z):
        parts = [(h, True) for h in self.heads] + [(w - h, False) for w, h in zip(self.widths, self.heads)]
        shift = self.n
        vals = []
        for w, _ in parts:
            shift -= w
            vals.append((z >> shift) & ((1 << w) - 1))
        k = len(self.perms)
        out = np.zeros_like(z)
        for i, (p, w, h) in enumerate(zip(self.perms, self.widths, self.heads)):
            blk = p._inv((vals[i] << (w - h)) | vals[k + i])
            out = (out << w) | blk
        return out

    def descriptor(self):
        return {"kind": self.kind, "n": self.n,
                "params": {"heads": self.heads, "parts": [p.descriptor() for p in self.perms]}}


class SeedFromHeadPermutation(BitPermutation):
    """Use the head of one extractor as the seed of a second one.

    The input is ``(x1, x2)`` with widths ``(first.n, ctx2.t)``. The first map
    sends ``x1`` to ``z1``; its top ``m1`` bits ``s`` select the multiplier
    ``s + 1`` of the second map ``x2 -> x2 * (s + 1)`` over ``ctx2``. The
    output is ``(z2, z1)`` so the seed can be recovered for inversion.
    """

    kind = "seed_from_head"

    def __init__(self, first: BitPermutation, m1: int, ctx2: FieldCtx):
        if (1 << m1) > ctx2.q - 1:
            raise ValueError("derived seed does not fit the second field")
        self.first, self.m1, self.ctx2 = first, m1, ctx2
        self.n = first.n + ctx2.t

    def _fwd(self, x):
        w1, w2 = self.first.n, self.ctx2.t
        x1, x2 = x >> w2, x & ((1 << w2) - 1)
        z1 = self.first._fwd(x1)
        s = (z1 >> (w1 - self.m1)) + 1
        z2 = gf_mul_array(self.ctx2, x2, s)
        return (z2 << w1) | z1

    def _inv(self, z):
        w1, w2 = self.first.n, self.ctx2.t
        z2, z1 = z >> w1, z & ((1 << w1) - 1)
        s = (z1 >> (w1 - self.m1)) + 1
        # (s)^{-1} = s^{q-2}; vectorized square-and-multiply
        inv = np.ones_like(s)
        base, e = s.copy(), self.ctx2.q - 2
        while e:
            if e & 1:
                inv = gf_mul_array(self.ctx2, inv, base)
            base = gf_mul_array(self.ctx2, base, base)
            e >>= 1
        x2 = gf_mul_array(self.ctx2, z2, inv)
        x1 = self.first._inv(z1)
        return (x1 << w2) | x2

    def descriptor(self):
        return {"kind": self.kind, "n": self.n, "params": {
            "first": self.first.descriptor(), "m1": self.m1},
            "modulus": self.ctx2.modulus, "generator": self.ctx2.generator}


def rs_permutation(ctx: FieldCtx, n_blocks: int, ell: int, y: int) -> RSPermutation:
    return RSPermutation(ctx, n_blocks, ell, y)


def lhl_permutation(ctx: FieldCtx, y: int, m: int | None = None) -> LHLPermutation:
    return LHLPermutation(ctx, y, m)


@dataclass
class ExtractorFamily:
    """Seeded family of permutations with a declared head length ``m``.

    Seeds form a product of the component ``seed_sets``; each seed is a
    tuple with one entry per component.
    """

    n: int
    m: int
    seed_sets: tuple
    factory: Callable[[tuple], BitPermutation]
    name: str = "family"
    params: dict = field(default_factory=dict)
    eps: float | None = None
    k: float | None = None

    @property
    def seed_count(self) -> int:
        return math.prod(len(s) for s in self.seed_sets)

    @property
    def seed_bits(self) -> float:
        return math.log2(self.seed_count)

    def seeds(self):
        return itertools.product(*self.seed_sets)

    def seed_at(self, index: int) -> tuple:
        out = []
        for s in reversed(self.seed_sets):
            index, r = divmod(index, len(s))
            out.append(s[r])
        return tuple(reversed(out))

    def member(self, seed) -> BitPermutation:
        if not isinstance(seed, tuple):
            seed = (seed,)
        return self.factory(seed)

    def descriptor(self) -> dict:
        return {"kind": self.name, "n": self.n, "m": self.m, "seed_count": self.seed_count,
                "params": self.params, "eps": self.eps, "k": self.k}


def identity_family(n: int) -> ExtractorFamily:
    return ExtractorFamily(n, n, ((0,),), lambda s: IdentityPermutation(n), "identity")


def rs_family(ctx: FieldCtx, n_blocks: int, ell: int) -> ExtractorFamily:
    """Reed-Solomon condenser family with seeds ``GF(q)*`` in increasing order."""
    seeds = tuple(range(1, ctx.q))
    return ExtractorFamily(n_blocks * ctx.t, ell * ctx.t, (seeds,),
                           lambda s: RSPermutation(ctx, n_blocks, ell, s[0]), "rs",
                           {"t": ctx.t, "n_blocks": n_blocks, "ell": ell, **ctx.descriptor()})


def lhl_family(n: int, m: int, eps: float | None = None, k: float | None = None) -> ExtractorFamily:
    """Leftover-hash family ``x -> x*y`` over ``GF(2^n)``, seeds ``GF(2^n)*``."""
    ctx = make_field(n)
    seeds = tuple(range(1, ctx.q))
    return ExtractorFamily(n, m, (seeds,), lambda s: LHLPermutation(ctx, s[0], m), "lhl",
                           {"m": m, **ctx.descriptor()}, eps, k)


def compose_families(inner: ExtractorFamily, outer: ExtractorFamily) -> ExtractorFamily:
    """Apply ``outer`` to the head of ``inner``; tails are concatenated.

    The head of the composition is the head of ``outer``; the tail is the
    tail of ``outer`` followed by the tail of ``inner``. Errors add.
    """
    if inner.m != outer.n:
        raise ValueError(f"inner head width {inner.m} != outer input width {outer.n}")
    ni, ki = len(inner.seed_sets), inner

    def factory(seed):
        p1 = ki.member(tuple(seed[:ni]))
        p2 = outer.member(tuple(seed[ni:]))
        return ComposedPermutation([p1, SplitHeadPermutation(inner.n, inner.m, p2, None)])

    eps = None if inner.eps is None or outer.eps is None else inner.eps + outer.eps
    return ExtractorFamily(inner.n, outer.m, inner.seed_sets + outer.seed_sets, factory,
                           f"compose({inner.name},{outer.name})",
                           {"inner": inner.descriptor(), "outer": outer.descriptor()}, eps, inner.k)


def repeat_families(stages: Sequence[ExtractorFamily]) -> ExtractorFamily:
    """Apply each stage to the tail left by the previous one.

    Output is ``head_1 | head_2 | ... | final tail`` with independent seeds.
    """
    stages = list(stages)
    if not stages:
        raise ValueError("no stages")
    for a, b in zip(stages, stages[1:]):
        if b.n != a.n - a.m:
            raise ValueError("stage width does not match the previous tail")
    offsets = np.cumsum([0] + [len(s.seed_sets) for s in stages])

    def build(i, seed):
        st = stages[i]
        p = st.member(tuple(seed[offsets[i]:offsets[i + 1]]))
        if i + 1 == len(stages) or st.n == st.m:
            return p
        rest = build(i + 1, seed)
        return ComposedPermutation([p, SplitHeadPermutation(st.n, st.m, None, rest)])

    seed_sets = tuple(itertools.chain.from_iterable(s.seed_sets for s in stages))
    eps = None if any(s.eps is None for s in stages) else sum(2 * s.eps for s in stages)
    return ExtractorFamily(stages[0].n, sum(s.m for s in stages), seed_sets,
                           lambda seed: build(0, seed), "repeat",
                           {"stages": [s.descriptor() for s in stages]}, eps, stages[0].k)


def baseext_params(n: int, ell: int, s: int, eps: float) -> dict:
    """Theorem-faithful parameters of the block-source base extractor."""
    t = math.ceil(8 * s * math.log2(24 * n * n * (4 * s + 1) / eps))
    return {"t": t, "k": 2 * ell * t, "m": ell * t, "seed_bits_bound": 2 * ell * t / s + t,
            "alpha": 1 / (8 * s), "eps0": eps / (4 * s + 1)}


def block_extract_family(n: int, ell: int, s: int, eps: float, t: int | None = None) -> ExtractorFamily:
    """RS condenser followed by a shared-seed LHL on ``2s`` contiguous blocks.

    Parameters
    ----------
    n : int
        Input width in bits.
    ell, s : int
        Output is ``ell * t`` bits (capped by the condensed width) from
        ``2s`` blocks.
    eps : float
        Target error (used for the theorem value of ``t``).
    t : int, optional
        Toy-mode override of the field degree. Without it the theorem value
        is used and the instance is usually far too large to build.
    """
    par = baseext_params(n, ell, s, eps)
    toy = t is not None
    t = par["t"] if t is None else t
    if t > 24 or n % t:
        raise ValueError(f"infeasible widths: need t <= 24 and t | n (n={n}, t={t})")
    ctx = make_field(t)
    n_blocks = n // t
    ell_rs = 2 * ell - 1
    if not 1 <= ell_rs <= n_blocks or n_blocks > ctx.q - 1:
        raise ValueError("infeasible widths: need 2*ell - 1 <= n/t <= 2^t - 1")
    n1 = ell_rs * t
    if 2 * s > n1:
        raise ValueError(f"infeasible widths: 2s={2 * s} blocks exceed condensed width {n1}")
    base, extra = divmod(n1, 2 * s)
    widths = [base + 1] * extra + [base] * (2 * s - extra)
    m = min(ell * t, n1)
    # spread the ell*t output bits over the blocks, largest blocks first
    heads, left = [], m
    for i, w in enumerate(widths):
        h = min(w, -(-left // (2 * s - i)))
        heads.append(h)
        left -= h
    wmin = min(widths)
    ctxs = {w: make_field(w) for w in set(widths)}
    rs_seeds = tuple(range(1, ctx.q))
    lhl_seeds = tuple(range(1, 1 << wmin))

    def factory(seed):
        rs = RSPermutation(ctx, n_blocks, ell_rs, seed[0])
        blocks = BlocksPermutation([LHLPermutation(ctxs[w], seed[1]) for w in widths], heads)
        return ComposedPermutation([rs, SplitHeadPermutation(n, n1, blocks, None)])

    params = {"n": n, "ell": ell, "s": s, "t": t, "toy": toy, "block_widths": widths,
              "block_heads": heads, "seed_bits_bound": 2 * ell * t / s + t, **ctx.descriptor()}
    return ExtractorFamily(n, m, (rs_seeds, lhl_seeds), factory, "block_extract", params,
                           eps, 2 * ell * t)


def _log2(x: float) -> float:
    return math.log2(x)


def guv_params(n: int, k: int, eps: float) -> dict:
    """Seed and output accounting for one ``(n, k) -> floor(k/4)`` stage.

    For ``n <= 2e6`` the base extractor with ``s = 200`` is used, which
    needs ``k >= 2t``; above that the recursive construction needs
    ``k >= 200 * ceil(200 log(24 n^2 / eps))``.

    Raises
    ------
    ValueError
        Naming the violated inequality.
    """
    if not 0 < eps < 0.5:
        raise ValueError("need 0 < eps < 1/2")
    if not 1 <= k <= n:
        raise ValueError(f"need 1 <= k <= n (k={k}, n={n})")
    t_eps = math.ceil(200 * _log2(24 * n * n / eps))
    d_eps = 200 * t_eps
    out = {"n": n, "k": k, "eps": eps, "t_eps": t_eps, "d_eps": d_eps,
           "seed_bits_bound": d_eps, "output_bits": k // 4}
    if n <= 2 * 10**6:
        base = baseext_params(n, 1, 200, eps)
        t = base["t"]
        if k < 2 * t:
            raise ValueError(f"k >= 2t violated: k={k} < {2 * t} (base extractor, s=200)")
        ell = k // (2 * t)
        out.update(branch="baseext", s=200, t=t, ell=ell,
                   seed_bits=math.ceil(2 * ell * t / 200) + t, extracted_bits=ell * t)
    else:
        if k < d_eps:
            raise ValueError(f"k >= 200*ceil(200*log(24n^2/eps)) violated: k={k} < {d_eps}")
        i = 0
        while (1 << i) * 8 * d_eps < k:
            i += 1
        out.update(branch="recursive", depth=i, seed_bits=d_eps, extracted_bits=k // 4)
    return out


def guv_iteration(n: int, k: int, eps: float, delta: float) -> dict:
    """Stages of repeated extraction needed to reach ``(1 - delta) k`` bits.

    Each stage extracts ``floor(k_j / 4)`` bits and leaves a source with
    ``k_{j+1} = k_j - floor(k_j / 4) - 1`` bits of min-entropy.
    """
    if not 0 < delta < 1:
        raise ValueError("need 0 < delta < 1")
    target = (1 - delta) * k
    kj, got, stages, seeds = k, 0, 0, 0
    while got < target:
        par = guv_params(n, kj, eps)
        got += kj // 4
        kj = kj - kj // 4 - 1
        seeds += par["seed_bits"]
        stages += 1
    return {"stages": stages, "extracted_bits": got, "seed_bits": seeds,
            "log_bound": math.log(1 / delta) / math.log(4 / 3), "eps_total": 2 * stages * eps}


def _q_family(n: int, t: int, m1: int | None = None, m2: int | None = None) -> ExtractorFamily:
    """Toy version of the seeded-from-head construction on ``n`` bits.

    RS-condense to two blocks, hash the first half with a fresh LHL seed and
    use the top ``m1`` hashed bits as the seed of an LHL on the second half.
    """
    if n % t:
        raise ValueError("t must divide n")
    ctx = make_field(t)
    n_blocks = n // t
    ell_rs = max(1, n_blocks // 2)
    w = ell_rs * t
    w1 = w // 2
    w2 = w - w1
    if w1 < 1 or w2 < 2:
        raise ValueError("condensed head too narrow")
    m1 = min(w1, w2 - 1) if m1 is None else m1
    m2 = max(1, w2 // 2) if m2 is None else m2
    c1, c2 = make_field(w1), make_field(w2)

    def factory(seed):
        rs = RSPermutation(ctx, n_blocks, ell_rs, seed[0])
        inner = SeedFromHeadPermutation(LHLPermutation(c1, seed[1]), m1, c2)
        return ComposedPermutation([rs, SplitHeadPermutation(n, w, inner, None)])

    return ExtractorFamily(n, m2, (tuple(range(1, ctx.q)), tuple(range(1, c1.q))), factory, "guv_q",
                           {"t": t, "ell_rs": ell_rs, "w1": w1, "w2": w2, "m1": m1, **ctx.descriptor()})


def guv_family(n: int, k: int, eps: float, toy: dict | None = None) -> ExtractorFamily:
    """Permutation extractor following the recursive construction.

    Without ``toy`` only the parameter accounting is available and a
    ``ValueError`` is raised after it has been validated (the
    theorem-size instance cannot be built). With ``toy = {"t": .., "stages": ..}``
    a desk-scale family is built from ``stages`` repeated seeded-from-head
    blocks.
    """
    par = guv_params(n, k, eps) if toy is None else None
    if toy is None:
        raise ValueError(f"theorem-size instance not constructible at desk scale: {par}")
    t = int(toy.get("t", 4))
    stages = []
    width = n
    for _ in range(int(toy.get("stages", 1))):
        ok = [d for d in range(1, min(width, 24) + 1)
              if width % d == 0 and 2 <= width // d <= (1 << d) - 1]
        if not ok:
            raise ValueError(f"no admissible field degree for a {width}-bit stage")
        tt = min(ok, key=lambda d: (abs(d - t), d))
        fam = _q_family(width, tt)
        stages.append(fam)
        width -= fam.m
    fam = repeat_families(stages) if len(stages) > 1 else stages[0]
    fam.params = {"toy": dict(toy), **fam.params}
    fam.eps, fam.k = eps, k
    return fam


def head_table(perm: BitPermutation, m: int) -> np.ndarray:
    return perm.table() >> (perm.n - m)


def flat_source(n: int, k: int, rng: np.random.Generator) -> np.ndarray:
    """Support of a uniformly random flat ``k``-source on ``n`` bits."""
    return np.sort(rng.choice(1 << n, size=1 << k, replace=False))


def interval_source(n: int, k: int, start: int) -> np.ndarray:
    return (start + np.arange(1 << k)) % (1 << n)


def _head_matrix(family: ExtractorFamily, m: int) -> np.ndarray:
    if family.n > 16:
        raise ValueError("exhaustive verification needs n <= 16")
    return np.stack([head_table(family.member(s), m) for s in family.seeds()])


def _head_dists(heads: np.ndarray, p: np.ndarray, m: int) -> np.ndarray:
    ns = heads.shape[0]
    idx = heads + (np.arange(ns)[:, None] << m)
    w = np.broadcast_to(p, heads.shape)
    return np.bincount(idx.ravel(), weights=w.ravel(), minlength=ns << m).reshape(ns, 1 << m)


def verify_condenser(family: ExtractorFamily, k: float, k_prime: float, sources, m: int | None = None,
                     eps: float | None = None) -> dict:
    """Per-seed closeness of the head to a ``k'``-source.

    Distance to the nearest ``k'``-source is the capped excess mass
    ``sum_z max(p(z) - 2^-k', 0)``.

    Parameters
    ----------
    sources : list of array_like
        Probability vectors of length ``2**n``.
    """
    m = family.m if m is None else m
    heads = _head_matrix(family, m)
    cap = 2.0 ** (-k_prime)
    excess, tvs = [], []
    for p in sources:
        p = np.asarray(p, dtype=float)
        dists = _head_dists(heads, p, m)
        excess.append(np.clip(dists - cap, 0, None).sum(axis=1).mean())
        tvs.append(0.5 * np.abs(dists - 2.0 ** (-m)).sum(axis=1).mean())
    out = {"avg_excess": [float(e) for e in excess], "worst_excess": float(max(excess, default=0.0)),
           "avg_tv": [float(v) for v in tvs], "worst_tv": float(max(tvs, default=0.0))}
    if eps is not None:
        out["pass"] = out["worst_excess"] <= eps
    return out


def verify_extractor(family: ExtractorFamily, k: int, eps: float, num_sources: int,
                     rng: np.random.Generator, m: int | None = None, intervals: bool = True) -> dict:
    """Average-over-seeds TV of the head from uniform on flat ``k``-sources.

    Tests ``num_sources`` random flat sources and, if ``intervals``, the
    aligned intervals ``[j 2^k, (j+1) 2^k)``.
    """
    m = family.m if m is None else m
    heads = _head_matrix(family, m)
    n = family.n

    def avg_tv(support):
        idx = heads[:, support]
        ns = idx.shape[0]
        counts = np.bincount((idx + (np.arange(ns)[:, None] << m)).ravel(), minlength=ns << m)
        dists = counts.reshape(ns, 1 << m) / support.size
        return float(0.5 * np.abs(dists - 2.0 ** (-m)).sum(axis=1).mean())

    rand = [avg_tv(flat_source(n, k, rng)) for _ in range(num_sources)]
    inter = [avg_tv(interval_source(n, k, j << k)) for j in range(1 << (n - k))] if intervals else []
    worst = max(rand + inter, default=0.0)
    return {"n": n, "k": k, "m": m, "eps": eps, "random_tv": rand, "interval_tv": inter,
            "max_random": max(rand, default=0.0), "max_interval": max(inter, default=0.0),
            "max_tv": worst, "lhl_bound": lhl_bound(m, k), "pass": worst <= eps}


def lhl_bound(m: int, k: float) -> float:
    """Leftover-hash guarantee ``sqrt(2^(m-k)) / 2`` for flat sources."""
    return 0.5 * math.sqrt(2.0 ** (m - k))
