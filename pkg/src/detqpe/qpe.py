"""Fourier-based phase estimation over a Trotter step unitary.

For ``N = 2**p`` phase bins and layers ``psi_j = W**j psi_0`` the readout
distribution is

    Prob(m) = N**-2 * sum_x |sum_j exp(-2 pi i j m / N) psi_j(x)|**2

which peaks at ``m`` when ``W psi = exp(2 pi i m / N) psi``.  ``layered``
mode stores all ``N`` layers; ``overlap`` mode keeps two vectors and uses
the autocorrelation ``a(d) = <psi_0 | W**d psi_0>`` instead.
"""
from __future__ import annotations

import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .determinants import DeterminantSpace, format_occupation, parse_occupation, popcount
from .hamiltonian import ClassifiedHamiltonian
from .trotter import TrotterConfig, TrotterStep, check_compatible

MODES = ("overlap", "layered")
DEFAULT_MEMORY_BUDGET = 2 * 1024**3
NEGATIVE_CLAMP = 1e-12
RENORM_TOL = 1e-6

Step = Callable[[np.ndarray], np.ndarray]


class MemoryBudgetExceeded(RuntimeError):
    pass


class NumericalBreakdown(RuntimeError):
    pass


class AnsatzError(ValueError):
    pass


@dataclass
class QpeConfig:
    p: int
    trotter: TrotterConfig = field(default_factory=TrotterConfig)
    mode: str = "overlap"
    memory_budget: int = DEFAULT_MEMORY_BUDGET

    def __post_init__(self):
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"precision bits p must be a positive integer, got {self.p}")
        self.p = int(self.p)
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; choose from {MODES}")

    @property
    def n_bins(self) -> int:
        return 1 << self.p


@dataclass
class Ansatz:
    space: DeterminantSpace
    entries: list  # (alpha_mask, beta_mask, complex amplitude)

    def __post_init__(self):
        seen = set()
        for alpha, beta, _ in self.entries:
            if popcount(alpha) != self.space.k_alpha or popcount(beta) != self.space.k_beta:
                raise AnsatzError(
                    f"determinant ({format_occupation(alpha, self.space.n)}, "
                    f"{format_occupation(beta, self.space.n)}) has wrong electron count"
                )
            if alpha >> self.space.n or beta >> self.space.n:
                raise AnsatzError("occupation outside the orbital range")
            if (alpha, beta) in seen:
                raise AnsatzError(
                    f"duplicate determinant {format_occupation(alpha, self.space.n)} "
                    f"{format_occupation(beta, self.space.n)}"
                )
            seen.add((alpha, beta))
        norm = math.sqrt(sum(abs(c) ** 2 for *_, c in self.entries))
        if norm == 0.0:
            raise AnsatzError("ansatz has zero norm")
        self.entries = [(a, b, complex(c) / norm) for a, b, c in self.entries]

    def to_vector(self) -> np.ndarray:
        psi = np.zeros(self.space.dimension, dtype=complex)
        for alpha, beta, c in self.entries:
            psi[self.space.index_of(alpha, beta)] = c
        return psi

    @classmethod
    def from_vector(cls, space: DeterminantSpace, psi, tol: float = 0.0) -> "Ansatz":
        psi = np.asarray(psi)
        entries = []
        for flat, alpha, beta in space.determinants():
            if abs(psi[flat]) > tol:
                entries.append((alpha, beta, complex(psi[flat])))
        return cls(space, entries)

    @classmethod
    def hartree_fock(cls, space: DeterminantSpace) -> "Ansatz":
        alpha, beta = space.hartree_fock()
        return cls(space, [(alpha, beta, 1.0)])

    def dumps(self) -> str:
        n = self.space.n
        return "".join(
            f"{format_occupation(a, n)} {format_occupation(b, n)} {c.real!r} {c.imag!r}\n"
            for a, b, c in self.entries
        )


def load_ansatz(source, space: DeterminantSpace) -> Ansatz:
    """Read ``alpha_bits beta_bits re im`` lines; orbital 0 is the rightmost bit.

    Blank lines and ``#`` comments are ignored.  The result is normalised.
    """
    if isinstance(source, Path):
        source = source.read_text()
    elif hasattr(source, "read"):
        source = source.read()
    entries = []
    for lineno, raw in enumerate(io.StringIO(source), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (3, 4):
            raise AnsatzError(f"ansatz line {lineno}: expected 'alpha beta re [im]', got {raw!r}")
        try:
            alpha = parse_occupation(parts[0], space.n)
            beta = parse_occupation(parts[1], space.n)
            amp = complex(float(parts[2]), float(parts[3]) if len(parts) == 4 else 0.0)
        except ValueError as exc:
            raise AnsatzError(f"ansatz line {lineno}: {exc}") from None
        entries.append((alpha, beta, amp))
    if not entries:
        raise AnsatzError("ansatz is empty")
    return Ansatz(space, entries)


@dataclass
class PhaseDistribution:
    p: int
    probs: np.ndarray

    @property
    def n_bins(self) -> int:
        return 1 << self.p

    def argmax(self) -> int:
        return int(np.argmax(self.probs))

    def to_csv(self, header_lines=()) -> str:
        out = [f"# {line}\n" for line in header_lines]
        out.append("m,probability\n")
        out.extend(f"{m},{float(v)!r}\n" for m, v in enumerate(self.probs))
        return "".join(out)

    def to_dict(self) -> dict:
        return {"p": self.p, "probabilities": [float(v) for v in self.probs]}

    def to_json(self, extra: dict | None = None, **kwargs) -> str:
        d = dict(extra or {})
        d.update(self.to_dict())
        return json.dumps(d, **kwargs)


def _finalize(probs: np.ndarray, p: int) -> PhaseDistribution:
    probs = np.asarray(probs, dtype=float)
    if probs.min() < -NEGATIVE_CLAMP:
        raise NumericalBreakdown(f"negative probability {probs.min():.3e}")
    probs = np.clip(probs, 0.0, None)
    total = math.fsum(probs)
    if abs(total - 1.0) > RENORM_TOL:
        raise NumericalBreakdown(f"probabilities sum to {total!r}")
    return PhaseDistribution(p, probs / total)


def _initial(H: ClassifiedHamiltonian, ansatz: Ansatz) -> np.ndarray:
    check_compatible(H, ansatz.space)
    return ansatz.to_vector()


def _default_step(H, ansatz, cfg: QpeConfig, step):
    if step is None:
        step = TrotterStep(H, ansatz.space, cfg.trotter)
    return step


def run_layered(H: ClassifiedHamiltonian, ansatz: Ansatz, cfg: QpeConfig,
                step: Step | None = None) -> PhaseDistribution:
    """Store every layer ``W**j psi_0`` and Fourier transform across layers.

    ``step`` replaces the Trotter step (e.g. with an exact propagator); it
    must update its argument in place and return it.
    """
    psi = _initial(H, ansatz)
    N = cfg.n_bins
    need = memory_estimate(ansatz.space, cfg.p, "layered").bytes
    if need > cfg.memory_budget:
        raise MemoryBudgetExceeded(
            f"layered mode needs {need} bytes (budget {cfg.memory_budget}); use overlap mode"
        )
    step = _default_step(H, ansatz, cfg, step)
    layers = np.empty((N, psi.size), dtype=complex)
    layers[0] = psi
    work = psi.copy()
    for j in range(1, N):
        step(work)
        layers[j] = work
    spectrum = np.fft.fft(layers, axis=0)
    probs = np.einsum("mx,mx->m", spectrum.real, spectrum.real) + np.einsum(
        "mx,mx->m", spectrum.imag, spectrum.imag
    )
    return _finalize(probs / N**2, cfg.p)


def autocorrelation(H: ClassifiedHamiltonian, ansatz: Ansatz, cfg: QpeConfig,
                    step: Step | None = None) -> np.ndarray:
    """``a(d) = <psi_0 | W**d psi_0>`` for ``d = 0 .. 2**p - 1``."""
    psi0 = _initial(H, ansatz)
    step = _default_step(H, ansatz, cfg, step)
    N = cfg.n_bins
    a = np.empty(N, dtype=complex)
    work = psi0.copy()
    a[0] = np.vdot(psi0, work)
    for d in range(1, N):
        step(work)
        a[d] = np.vdot(psi0, work)
    return a


def distribution_from_autocorrelation(a: np.ndarray, p: int) -> PhaseDistribution:
    """Triangle-weighted Fourier sum over lags ``-(N-1) .. N-1``."""
    N = 1 << p
    if a.shape != (N,):
        raise ValueError(f"need {N} autocorrelation values, got {a.shape}")
    weights = N - np.arange(N)
    b = np.zeros(2 * N, dtype=complex)
    b[:N] = weights * a
    b[N + 1:] = (weights[1:] * np.conj(a[1:]))[::-1]
    # frequency 2m of the length-2N transform is phase bin m
    probs = np.fft.fft(b)[::2].real / N**2
    return _finalize(probs, p)


def run_overlap(H: ClassifiedHamiltonian, ansatz: Ansatz, cfg: QpeConfig,
                step: Step | None = None) -> PhaseDistribution:
    """Same distribution as :func:`run_layered` with two state vectors of memory."""
    return distribution_from_autocorrelation(autocorrelation(H, ansatz, cfg, step), cfg.p)


def run_qpe(H: ClassifiedHamiltonian, ansatz: Ansatz, cfg: QpeConfig,
            step: Step | None = None) -> PhaseDistribution:
    runner = run_layered if cfg.mode == "layered" else run_overlap
    return runner(H, ansatz, cfg, step)


def dense_step(U: np.ndarray) -> Step:
    """Wrap a dense unitary as an in-place step callable."""
    def step(vec):
        vec[...] = U @ vec
        return vec
    return step


@dataclass(frozen=True)
class MemoryEstimate:
    mode: str
    bytes: int
    naive_amplitudes: int
    dimension: int

    @property
    def reduction(self) -> float:
        return self.naive_amplitudes / self.dimension


def memory_estimate(space: DeterminantSpace, p: int, mode: str = "overlap") -> MemoryEstimate:
    """State-storage bytes for one run, at 16 bytes per complex amplitude."""
    D = space.dimension
    if mode == "layered":
        nbytes = 16 * (1 << p) * D + 16 * D
    elif mode == "overlap":
        nbytes = 32 * D + 16 * (1 << (p + 1))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return MemoryEstimate(mode, nbytes, space.naive_amplitudes(), D)
