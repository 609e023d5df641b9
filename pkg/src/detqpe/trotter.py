"""First-order Trotter steps applied directly to determinant amplitudes.

Diagonal classes (pp, pqqp) multiply each amplitude by a phase.  Each
off-diagonal term ``h (O + O^dagger)`` couples disjoint pairs of
determinants ``(R, L)`` with ``O|R> = s|L>``; its exponential acts on every
pair as

    [a_L]    [ cos t       -i s sin t ] [a_L]
    [a_R] <- [ -i s sin t   cos t     ] [a_R]       t = h * time / steps

The pair lists are computed per spin block with vectorised bit operations
and cached in a :class:`TrotterStep`, so a step is a sequence of numpy
gather/scatter updates.  Amplitude arrays may carry trailing axes; every
update acts on axis 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .determinants import DeterminantSpace, rank_array
from .hamiltonian import OFFDIAGONAL_CLASSES, ClassifiedHamiltonian

ORDERINGS = ("default", "as-parsed")


@dataclass
class TrotterConfig:
    t: float = 1.0
    r: int = 1
    ordering: str = "default"
    # Fold exp(-i offset t/r) into the amplitudes instead of only tracking it.
    include_offset: bool = False

    def __post_init__(self):
        if int(self.r) != self.r or self.r < 1:
            raise ValueError(f"Trotter steps r must be a positive integer, got {self.r}")
        self.r = int(self.r)
        if not np.isfinite(self.t):
            raise ValueError("evolution time must be finite")
        if self.ordering not in ORDERINGS:
            raise ValueError(f"unknown ordering {self.ordering!r}; choose from {ORDERINGS}")

    @property
    def dt(self) -> float:
        return self.t / self.r


@dataclass
class StateVector:
    space: DeterminantSpace
    amps: np.ndarray
    # Accumulated global phase exp(-i offset t/r) per step, not folded into amps.
    offset_phase: float = 0.0

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape[0] != self.space.dimension:
            raise ValueError(
                f"amplitude length {self.amps.shape[0]} != dimension {self.space.dimension}"
            )

    @classmethod
    def basis(cls, space: DeterminantSpace, alpha: int, beta: int) -> "StateVector":
        amps = np.zeros(space.dimension, dtype=complex)
        amps[space.index_of(alpha, beta)] = 1.0
        return cls(space, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def copy(self) -> "StateVector":
        return StateVector(self.space, self.amps.copy(), self.offset_phase)


def operator_string(kind: str, indices) -> list:
    """Ladder-operator product (left to right) for the non-hermitian half of a term."""
    if kind == "pq":
        p, q = indices
        return [("+", p), ("-", q)]
    if kind == "pqqr":
        p, q, r = indices
        return [("n", q), ("+", p), ("-", r)]
    if kind == "pqrs":
        p, q, r, s = indices
        return [("+", p), ("+", q), ("-", s), ("-", r)]
    raise ValueError(f"{kind!r} is not an off-diagonal term class")


def _block_action(ops, strings: np.ndarray, n: int, k: int):
    """Apply ``ops`` (block-local indices) to every string of one spin block.

    Returns ``(source_ranks, target_ranks, signs)`` over the strings the
    product does not annihilate.
    """
    if not ops:
        idx = np.arange(strings.shape[0])
        return idx, idx, np.ones(strings.shape[0], dtype=np.int8)
    cur = strings.copy()
    valid = np.ones(strings.shape[0], dtype=bool)
    sign = np.ones(strings.shape[0], dtype=np.int8)
    one = np.uint64(1)
    for kind, i in reversed(ops):
        bit = one << np.uint64(i)
        occ = (cur & bit) != 0
        if kind == "n":
            valid &= occ
            continue
        valid &= ~occ if kind == "+" else occ
        odd = (np.bitwise_count(cur & (bit - one)) & 1).astype(bool)
        sign[odd] *= -1
        cur = cur ^ bit
    src = np.flatnonzero(valid)
    tgt = rank_array(cur[src], n, k)
    return src, tgt, sign[src]


def term_pairs(kind: str, indices, space: DeterminantSpace):
    """Connected determinant pairs of one off-diagonal term.

    Returns flat index arrays ``(left, right)`` and ``signs`` such that the
    term's non-hermitian half maps ``|right[i]>`` to ``signs[i] |left[i]>``.
    """
    n = space.n
    ops = operator_string(kind, indices)
    alpha_ops = [(c, i) for c, i in ops if i < n]
    beta_ops = [(c, i - n) for c, i in ops if i >= n]
    # JW strings of beta operators run over every alpha orbital; the alpha
    # count each one sees is fixed by the alpha operators applied before it.
    cross = 0
    k_a = space.k_alpha
    for c, i in reversed(ops):
        if i < n:
            k_a += {"+": 1, "-": -1, "n": 0}[c]
        elif c != "n":
            cross += k_a
    a_src, a_tgt, a_sign = _block_action(alpha_ops, space.alpha_strings(), n, space.k_alpha)
    b_src, b_tgt, b_sign = _block_action(beta_ops, space.beta_strings(), n, space.k_beta)
    db = space.dim_beta
    right = (a_src[:, None] * db + b_src[None, :]).ravel()
    left = (a_tgt[:, None] * db + b_tgt[None, :]).ravel()
    signs = np.outer(a_sign, b_sign).ravel().astype(np.int8)
    if cross & 1:
        signs = -signs
    return left, right, signs


def diagonal_energies(pp_terms, pqqp_terms, space: DeterminantSpace) -> np.ndarray:
    """Per-determinant sum of active pp and pqqp coefficients (flat order)."""
    n = space.n
    occ_a = _occupations(space.alpha_strings(), n)
    occ_b = _occupations(space.beta_strings(), n)
    h = np.zeros(2 * n)
    for p, c in pp_terms:
        h[p] += c
    J = np.zeros((2 * n, 2 * n))
    for p, q, c in pqqp_terms:
        J[p, q] += c
    e_a = occ_a @ h[:n] + np.einsum("ip,pq,iq->i", occ_a, J[:n, :n], occ_a)
    e_b = occ_b @ h[n:] + np.einsum("ip,pq,iq->i", occ_b, J[n:, n:], occ_b)
    cross = occ_a @ (J[:n, n:] + J[n:, :n].T) @ occ_b.T
    return (e_a[:, None] + e_b[None, :] + cross).ravel()


def _occupations(strings: np.ndarray, n: int) -> np.ndarray:
    bits = (strings[:, None] >> np.arange(n, dtype=np.uint64)[None, :]) & np.uint64(1)
    return bits.astype(float)


def _phase_vector(energies: np.ndarray, amps: np.ndarray, scale: float) -> np.ndarray:
    phase = np.exp(-1j * energies * scale)
    return phase.reshape(phase.shape + (1,) * (amps.ndim - 1))


def apply_diagonal(pp_terms, pqqp_terms, state: StateVector, theta_scale: float) -> StateVector:
    """Multiply every amplitude by ``exp(-i theta_scale * sum of active coefficients)``."""
    e = diagonal_energies(pp_terms, pqqp_terms, state.space)
    state.amps *= _phase_vector(e, state.amps, theta_scale)
    return state


def _rotate(amps, left, right, cos_t, off):
    x = amps[left]
    y = amps[right]
    amps[left] = cos_t * x + off * y
    amps[right] = off * x + cos_t * y


def _off_factor(signs, theta, ndim):
    off = (-1j * np.sin(theta)) * signs
    return off.reshape(off.shape + (1,) * (ndim - 1))


def apply_offdiagonal_term(kind: str, indices, state: StateVector, theta: float) -> StateVector:
    """Apply ``exp(-i theta (O + O^dagger))`` for one pq, pqqr or pqrs term in place."""
    left, right, signs = term_pairs(kind, indices, state.space)
    if left.size:
        _rotate(state.amps, left, right, np.cos(theta), _off_factor(signs, theta, state.amps.ndim))
    return state


def ordered_terms(H: ClassifiedHamiltonian, ordering: str = "default"):
    """Yield ``(kind, indices, h)`` for the off-diagonal classes in application order."""
    if ordering == "default":
        H = H.sorted()
    elif ordering != "as-parsed":
        raise ValueError(f"unknown ordering {ordering!r}")
    for kind in OFFDIAGONAL_CLASSES:
        for term in H.terms(kind):
            yield kind, tuple(term[:-1]), term[-1]


def check_compatible(H: ClassifiedHamiltonian, space: DeterminantSpace):
    if (H.n_orbitals, H.n_alpha, H.n_beta) != (space.n, space.k_alpha, space.k_beta):
        raise ValueError(
            f"Hamiltonian (n={H.n_orbitals}, {H.n_alpha}a, {H.n_beta}b) does not match "
            f"state space (n={space.n}, {space.k_alpha}a, {space.k_beta}b)"
        )


@dataclass
class TrotterStep:
    """One cached Trotter step ``W = prod_k exp(-i H_k t/r)`` for a fixed space."""

    H: ClassifiedHamiltonian
    space: DeterminantSpace
    cfg: TrotterConfig = field(default_factory=TrotterConfig)

    def __post_init__(self):
        check_compatible(self.H, self.space)
        dt = self.cfg.dt
        energies = diagonal_energies(self.H.pp_terms, self.H.pqqp_terms, self.space)
        if self.cfg.include_offset:
            energies = energies + self.H.offset
        self.diagonal_phase = np.exp(-1j * energies * dt)
        self.offset_angle = -self.H.offset * dt
        self.plan = []
        for kind, indices, h in ordered_terms(self.H, self.cfg.ordering):
            left, right, signs = term_pairs(kind, indices, self.space)
            if left.size == 0:
                continue
            theta = h * dt
            off = (-1j * np.sin(theta)) * signs
            self.plan.append((left, right, np.cos(theta), off))

    @property
    def n_pairs(self) -> int:
        return sum(entry[0].size for entry in self.plan)

    def apply(self, amps: np.ndarray) -> np.ndarray:
        """Advance ``amps`` (shape ``(dimension, ...)``) by one step, in place."""
        extra = (1,) * (amps.ndim - 1)
        amps *= self.diagonal_phase.reshape(self.diagonal_phase.shape + extra)
        for left, right, cos_t, off in self.plan:
            _rotate(amps, left, right, cos_t, off.reshape(off.shape + extra) if extra else off)
        return amps

    __call__ = apply

    def matrix(self) -> np.ndarray:
        """The step lifted to a dense ``dimension x dimension`` unitary."""
        return self.apply(np.eye(self.space.dimension, dtype=complex))


def apply_trotter_step(H: ClassifiedHamiltonian, state: StateVector, cfg: TrotterConfig,
                       step: TrotterStep | None = None) -> StateVector:
    """Apply one first-order Trotter step in place.

    Diagonal classes go first, then pq, pqqr and pqrs in the configured
    order.  The scalar offset is recorded in ``state.offset_phase`` (and also
    folded into the amplitudes when ``cfg.include_offset`` is set).
    """
    check_compatible(H, state.space)
    if step is None:
        step = TrotterStep(H, state.space, cfg)
    step.apply(state.amps)
    state.offset_phase += step.offset_angle
    return state
