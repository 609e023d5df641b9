"""Dense-matrix ground truth on small determinant spaces.

Matrices are plain complex ``numpy`` arrays in flat determinant order.
"""
from __future__ import annotations

import numpy as np

from .determinants import (
    DeterminantSpace,
    annihilate,
    apply_double_excitation,
    apply_operators,
    apply_single_excitation,
    create,
)
from .hamiltonian import ClassifiedHamiltonian, IntegralSet
from .trotter import TrotterConfig, TrotterStep, check_compatible, operator_string

DEFAULT_CAP = 4096


class DimensionCapExceeded(ValueError):
    pass


def _check_cap(space: DeterminantSpace, cap: int):
    if space.dimension > cap:
        raise DimensionCapExceeded(
            f"dense oracle limited to dimension {cap}; space has {space.dimension}"
        )


def _split(full: int, n: int):
    return full & ((1 << n) - 1), full >> n


def _block_of(i: int, n: int):
    return (0, i) if i < n else (1, i - n)


def term_matrix(kind: str, indices, space: DeterminantSpace, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Dense matrix of one classified term with unit coefficient.

    Off-diagonal classes include their hermitian partner.  Built from the
    scalar determinant kernels, one determinant at a time.
    """
    _check_cap(space, cap)
    n = space.n
    M = np.zeros((space.dimension, space.dimension), dtype=complex)
    for col, alpha, beta in space.determinants():
        occ = (alpha, beta)
        if kind == "pp":
            (p,) = indices
            blk, i = _block_of(p, n)
            if occ[blk] >> i & 1:
                M[col, col] += 1.0
            continue
        if kind == "pqqp":
            full = space.full_mask(alpha, beta)
            p, q = indices
            if full >> p & 1 and full >> q & 1:
                M[col, col] += 1.0
            continue
        for ops in _hermitian_halves(kind, indices):
            res = _apply_kernel(kind, ops, alpha, beta, n)
            if res is not None:
                (a2, b2), sign = res
                M[space.index_of(a2, b2), col] += sign
    return M


def _hermitian_halves(kind, indices):
    if kind == "pq":
        p, q = indices
        return [(p, q), (q, p)]
    if kind == "pqqr":
        p, q, r = indices
        return [(p, q, r), (r, q, p)]
    if kind == "pqrs":
        p, q, r, s = indices
        return [(p, q, r, s), (r, s, p, q)]
    raise ValueError(f"unknown term class {kind!r}")


def _apply_kernel(kind, idx, alpha, beta, n):
    occ = [alpha, beta]
    if kind == "pq":
        p, r = idx
        (bp, ip), (br, ir) = _block_of(p, n), _block_of(r, n)
        if bp != br:
            raise ValueError("pq term crosses spin blocks")
        res = apply_single_excitation(occ[bp], ip, ir)
        if res is None:
            return None
        occ[bp] = res[0]
        return tuple(occ), res[1]
    if kind == "pqqr":
        p, q, r = idx
        bq, iq = _block_of(q, n)
        if not occ[bq] >> iq & 1:
            return None
        (bp, ip), (_, ir) = _block_of(p, n), _block_of(r, n)
        res = apply_single_excitation(occ[bp], ip, ir)
        if res is None:
            return None
        occ[bp] = res[0]
        return tuple(occ), res[1]
    p, q, r, s = idx
    return apply_double_excitation((alpha, beta), p, q, r, s, n)


def build_dense_hamiltonian(H: ClassifiedHamiltonian, space: DeterminantSpace,
                            cap: int = DEFAULT_CAP) -> np.ndarray:
    """``offset * I + sum_k h_k T_k`` over the classified terms."""
    check_compatible(H, space)
    _check_cap(space, cap)
    D = space.dimension
    M = H.offset * np.eye(D, dtype=complex)
    for kind in ("pp", "pqqp", "pq", "pqqr", "pqrs"):
        for term in H.terms(kind):
            M += term[-1] * term_matrix(kind, term[:-1], space, cap)
    return M


def build_dense_from_integrals(ints: IntegralSet, space: DeterminantSpace,
                               cap: int = DEFAULT_CAP) -> np.ndarray:
    """The second-quantised Hamiltonian assembled straight from spatial integrals.

    Applies ``a+_{p s} a_{q s}`` and ``a+_{p s} a+_{r t} a_{s t} a_{q s}``
    operator by operator to each determinant; independent of the classifier.
    """
    _check_cap(space, cap)
    n = space.n
    h, v = ints.one_body, ints.two_body
    D = space.dimension
    M = ints.core_energy * np.eye(D, dtype=complex)
    spins = (0, n)
    for col, alpha, beta in space.determinants():
        full = space.full_mask(alpha, beta)
        for so in spins:
            for q in range(n):
                r1 = annihilate(full, q + so)
                if r1 is None:
                    continue
                for p in range(n):
                    if h[p, q] == 0.0:
                        continue
                    r2 = create(r1[0], p + so)
                    if r2 is None:
                        continue
                    row = space.index_of(*_split(r2[0], n))
                    M[row, col] += h[p, q] * r1[1] * r2[1]
        for sq in spins:
            for q in range(n):
                r1 = annihilate(full, q + sq)
                if r1 is None:
                    continue
                for ts in spins:
                    for s in range(n):
                        r2 = annihilate(r1[0], s + ts)
                        if r2 is None:
                            continue
                        for r in range(n):
                            r3 = create(r2[0], r + ts)
                            if r3 is None:
                                continue
                            for p in range(n):
                                val = v[p, q, r, s]
                                if val == 0.0:
                                    continue
                                r4 = create(r3[0], p + sq)
                                if r4 is None:
                                    continue
                                row = space.index_of(*_split(r4[0], n))
                                M[row, col] += 0.5 * val * r1[1] * r2[1] * r3[1] * r4[1]
    return M


def operator_matrix(ops, space: DeterminantSpace, cap: int = DEFAULT_CAP) -> np.ndarray:
    """Dense matrix of a number-conserving ladder-operator product on ``space``."""
    _check_cap(space, cap)
    M = np.zeros((space.dimension, space.dimension), dtype=complex)
    for col, alpha, beta in space.determinants():
        res = apply_operators(space.full_mask(alpha, beta), ops)
        if res is not None:
            M[space.index_of(*_split(res[0], space.n)), col] += res[1]
    return M


def exact_eigensolve(Hd: np.ndarray):
    """Eigenvalues (ascending) and eigenvectors of a Hermitian matrix."""
    if np.abs(Hd - Hd.conj().T).max(initial=0.0) > 1e-10:
        raise ValueError("matrix is not Hermitian")
    return np.linalg.eigh(Hd)


def exact_propagator(Hd: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i Hd t)`` through the spectral decomposition."""
    w, V = exact_eigensolve(Hd)
    return (V * np.exp(-1j * w * t)) @ V.conj().T


def trotter_step_matrix(H: ClassifiedHamiltonian, space: DeterminantSpace,
                        cfg: TrotterConfig, cap: int = DEFAULT_CAP) -> np.ndarray:
    _check_cap(space, cap)
    return TrotterStep(H, space, cfg).matrix()


def trotter_error(H: ClassifiedHamiltonian, space: DeterminantSpace, cfg: TrotterConfig,
                  cap: int = DEFAULT_CAP) -> float:
    """Spectral-norm distance between ``W^r`` and ``exp(-i H t)``.

    The offset enters the exact propagator only when the step folds it in.
    """
    W = trotter_step_matrix(H, space, cfg, cap)
    U = np.linalg.matrix_power(W, cfg.r)
    Hd = build_dense_hamiltonian(H, space, cap)
    if not cfg.include_offset:
        Hd = Hd - H.offset * np.eye(space.dimension)
    exact = exact_propagator(Hd, cfg.t)
    return float(np.linalg.norm(U - exact, 2))


def energy_drift_bound(error: float, t: float) -> float:
    """Largest eigen-energy shift compatible with a propagator error ``error`` over time ``t``.

    Eigenvalues of two unitaries at spectral distance ``e`` pair up within
    chord ``e``, i.e. within arc ``2 asin(e/2)``.
    """
    return 2.0 * np.arcsin(min(error / 2.0, 1.0)) / abs(t)


def ground_state(H: ClassifiedHamiltonian, space: DeterminantSpace, cap: int = DEFAULT_CAP):
    """Lowest eigenvalue (offset included) and its eigenvector."""
    w, V = exact_eigensolve(build_dense_hamiltonian(H, space, cap))
    return float(w[0]), V[:, 0]


def lifted_term_exponential(kind: str, indices, theta: float, space: DeterminantSpace,
                            cap: int = DEFAULT_CAP) -> np.ndarray:
    """Exact ``exp(-i theta T)`` for one term's unit-coefficient matrix ``T``."""
    return exact_propagator(term_matrix(kind, indices, space, cap), theta)


__all__ = [
    "DEFAULT_CAP",
    "DimensionCapExceeded",
    "build_dense_from_integrals",
    "build_dense_hamiltonian",
    "energy_drift_bound",
    "exact_eigensolve",
    "exact_propagator",
    "ground_state",
    "lifted_term_exponential",
    "operator_matrix",
    "operator_string",
    "term_matrix",
    "trotter_error",
    "trotter_step_matrix",
]
