"""Particle-number and Sz restricted determinant spaces.

A determinant is a pair of per-spin occupation bitmasks ``(alpha, beta)``;
bit ``i`` of a mask is the occupation of spatial orbital ``i`` in that spin
block.  Spin orbitals are ordered blocked: alpha ``0..n-1`` then beta
``n..2n-1``.  Fermionic signs follow the Jordan-Wigner convention where
``a_i`` and ``a_i^dagger`` pick up ``(-1)`` per occupied spin orbital with a
lower index.

Strings within a spin block are ranked in lexicographic order of their sorted
orbital tuples (the order ``itertools.combinations`` produces).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np

MAX_ORBITALS = 64
_INDEX_LIMIT = 2**63 - 1

# _BINOM[a][b] == C(a, b); rows cover 0..MAX_ORBITALS.
_BINOM = [[comb(a, b) for b in range(MAX_ORBITALS + 1)] for a in range(MAX_ORBITALS + 1)]


def binomial(a: int, b: int) -> int:
    if a < 0 or b < 0 or b > a:
        return 0
    return _BINOM[a][b]


def dimension(n: int, k_alpha: int, k_beta: int) -> int:
    """Number of determinants with ``k_alpha`` and ``k_beta`` electrons in ``n`` orbitals."""
    if not 0 <= n <= MAX_ORBITALS:
        raise ValueError(f"n={n} outside [0, {MAX_ORBITALS}]")
    for k in (k_alpha, k_beta):
        if not 0 <= k <= n:
            raise ValueError(f"electron count {k} outside [0, {n}]")
    d = binomial(n, k_alpha) * binomial(n, k_beta)
    if d > _INDEX_LIMIT:
        raise OverflowError(f"dimension {d} exceeds 64-bit index width")
    return d


def popcount(mask: int) -> int:
    return int(mask).bit_count()


def mask_from_orbitals(orbitals) -> int:
    mask = 0
    for i in orbitals:
        mask |= 1 << i
    return mask


def orbitals_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def format_occupation(mask: int, n: int) -> str:
    """Big-endian occupation string ``n_{n-1} ... n_0`` (orbital 0 is rightmost)."""
    return format(mask, f"0{n}b") if n else ""


def parse_occupation(bits: str, n: int | None = None) -> int:
    bits = bits.strip()
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"not an occupation bit string: {bits!r}")
    if n is not None and len(bits) != n:
        raise ValueError(f"occupation string {bits!r} has length {len(bits)}, expected {n}")
    return int(bits, 2)


def rank(mask: int, n: int, k: int) -> int:
    """Lexicographic rank of the k-subset encoded by ``mask`` among all k-subsets of n."""
    if mask < 0 or mask >> n:
        raise ValueError(f"mask {mask:#b} has bits outside {n} orbitals")
    if popcount(mask) != k:
        raise ValueError(f"mask {mask:#b} has popcount {popcount(mask)}, expected {k}")
    # Lex rank = C(n,k) - 1 - sum_i C(n-1-c_i, k-i) over sorted members c_0 < c_1 < ...
    total = 0
    i = 0
    for c in range(n):
        if mask >> c & 1:
            total += binomial(n - 1 - c, k - i)
            i += 1
    return binomial(n, k) - 1 - total


def unrank(index: int, n: int, k: int) -> int:
    """Inverse of :func:`rank`."""
    count = binomial(n, k)
    if not 0 <= index < count:
        raise IndexError(f"rank {index} outside [0, {count})")
    x = count - 1 - index
    mask = 0
    c = 0
    for i in range(k):
        # smallest c whose complement weight C(n-1-c, k-i) fits in the remainder
        while binomial(n - 1 - c, k - i) > x:
            c += 1
        x -= binomial(n - 1 - c, k - i)
        mask |= 1 << c
        c += 1
    return mask


def rank_array(masks: np.ndarray, n: int, k: int) -> np.ndarray:
    """Vectorised :func:`rank` for masks known to have popcount ``k``."""
    masks = np.asarray(masks, dtype=np.uint64)
    total = np.zeros(masks.shape, dtype=np.int64)
    seen = np.zeros(masks.shape, dtype=np.int64)
    table = np.array([[binomial(a, b) for b in range(k + 2)] for a in range(n + 1)], dtype=np.int64)
    for c in range(n):
        bit = ((masks >> np.uint64(c)) & np.uint64(1)).astype(bool)
        total[bit] += table[n - 1 - c, k - seen[bit]]
        seen += bit
    return binomial(n, k) - 1 - total


def parity_between(mask: int, i: int, j: int) -> int:
    """Parity of the occupied orbitals strictly between ``i`` and ``j``."""
    if i == j:
        raise ValueError("parity_between needs distinct orbitals")
    lo, hi = (i, j) if i < j else (j, i)
    window = ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)
    return popcount(mask & window) & 1


def create(mask: int, i: int):
    """``a_i^dagger`` on a bitmask: ``(mask', sign)`` or ``None``."""
    if mask >> i & 1:
        return None
    sign = -1 if popcount(mask & ((1 << i) - 1)) & 1 else 1
    return mask | (1 << i), sign


def annihilate(mask: int, i: int):
    """``a_i`` on a bitmask: ``(mask', sign)`` or ``None``."""
    if not mask >> i & 1:
        return None
    sign = -1 if popcount(mask & ((1 << i) - 1)) & 1 else 1
    return mask & ~(1 << i), sign


def apply_operators(mask: int, ops):
    """Apply a product of ladder operators to one bitmask.

    ``ops`` is written left to right as in the operator product, e.g.
    ``[("+", p), ("-", r)]`` for ``a_p^dagger a_r``; the rightmost acts first.
    ``("n", q)`` is the number operator.  Returns ``(mask', sign)`` or ``None``.
    """
    sign = 1
    for kind, i in reversed(ops):
        if kind == "n":
            if not mask >> i & 1:
                return None
            continue
        res = create(mask, i) if kind == "+" else annihilate(mask, i)
        if res is None:
            return None
        mask, s = res
        sign *= s
    return mask, sign


def apply_single_excitation(mask: int, p: int, r: int):
    """``a_p^dagger a_r`` within one spin block.

    Returns ``(mask', +1|-1)`` or ``None`` when the component is annihilated.
    """
    if p == r:
        return (mask, 1) if mask >> p & 1 else None
    if not mask >> r & 1 or mask >> p & 1:
        return None
    new = (mask & ~(1 << r)) | (1 << p)
    return new, -1 if parity_between(mask, p, r) else 1


def apply_double_excitation(mask_pair, p: int, q: int, r: int, s: int, n: int):
    """``a_p^dagger a_q^dagger a_s a_r`` on an ``(alpha, beta)`` pair.

    Indices are spin-orbital indices in ``[0, 2n)``.  Returns
    ``((alpha', beta'), sign)`` or ``None``.
    """
    alpha, beta = mask_pair
    full = alpha | (beta << n)
    res = apply_operators(full, [("+", p), ("+", q), ("-", s), ("-", r)])
    if res is None:
        return None
    new, sign = res
    low = (1 << n) - 1
    return (new & low, new >> n), sign


def block_strings(n: int, k: int) -> np.ndarray:
    """All k-electron masks of an n-orbital block, in rank order."""
    masks = [mask_from_orbitals(c) for c in combinations(range(n), k)]
    return np.array(masks, dtype=np.uint64)


@dataclass(frozen=True)
class DeterminantSpace:
    n: int
    k_alpha: int
    k_beta: int
    dim_alpha: int = field(init=False)
    dim_beta: int = field(init=False)
    dimension: int = field(init=False)

    def __post_init__(self):
        d = dimension(self.n, self.k_alpha, self.k_beta)
        object.__setattr__(self, "dim_alpha", binomial(self.n, self.k_alpha))
        object.__setattr__(self, "dim_beta", binomial(self.n, self.k_beta))
        object.__setattr__(self, "dimension", d)

    @property
    def n_spin_orbitals(self) -> int:
        return 2 * self.n

    def flat_index(self, c1: int, c2: int) -> int:
        if not (0 <= c1 < self.dim_alpha and 0 <= c2 < self.dim_beta):
            raise IndexError(f"config index ({c1}, {c2}) out of range")
        return c1 * self.dim_beta + c2

    def split_index(self, flat: int) -> tuple[int, int]:
        if not 0 <= flat < self.dimension:
            raise IndexError(f"flat index {flat} out of range")
        return divmod(flat, self.dim_beta)

    def index_of(self, alpha: int, beta: int) -> int:
        return self.flat_index(rank(alpha, self.n, self.k_alpha), rank(beta, self.n, self.k_beta))

    def determinant(self, flat: int) -> tuple[int, int]:
        c1, c2 = self.split_index(flat)
        return unrank(c1, self.n, self.k_alpha), unrank(c2, self.n, self.k_beta)

    def alpha_strings(self) -> np.ndarray:
        return block_strings(self.n, self.k_alpha)

    def beta_strings(self) -> np.ndarray:
        return block_strings(self.n, self.k_beta)

    def determinants(self):
        """Iterate ``(flat, alpha, beta)`` in flat-index order."""
        betas = [int(b) for b in self.beta_strings()]
        flat = 0
        for a in self.alpha_strings():
            for b in betas:
                yield flat, int(a), b
                flat += 1

    def full_mask(self, alpha: int, beta: int) -> int:
        return alpha | (beta << self.n)

    def hartree_fock(self) -> tuple[int, int]:
        return (1 << self.k_alpha) - 1, (1 << self.k_beta) - 1

    def naive_amplitudes(self) -> int:
        return 2 ** (2 * self.n)
