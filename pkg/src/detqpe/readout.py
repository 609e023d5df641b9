"""Turn phase distributions into energies.

A step ``W`` with eigenvalue ``exp(-i E t / r)`` reads out as
``phi = m / 2**p = -E t / (2 pi r) mod 1``, so

    E = -(2 pi r / t) (phi + k) + offset

for an unknown integer alias ``k``.  The scalar offset of the Hamiltonian
is never inside the phase unless the run folded it in; it is added here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .qpe import PhaseDistribution

DEFAULT_THRESHOLD = 0.1


@dataclass(frozen=True)
class Peak:
    m: int
    prob: float
    neighbors_merged: bool = False


@dataclass(frozen=True)
class EnergyEstimate:
    energy: float
    phase: float
    alias_k: int
    resolution: float
    m: int


def resolution(p: int, r: int, t: float = 1.0) -> float:
    """Energy width of one phase bin."""
    return 2.0 * math.pi * r / (abs(t) * (1 << p))


def find_peaks(dist: PhaseDistribution, threshold: float = DEFAULT_THRESHOLD) -> list[Peak]:
    """Bins with probability >= threshold, most probable first.

    Bins adjacent (cyclically) to another qualifying bin are flagged.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    probs = np.asarray(dist.probs)
    N = probs.size
    hits = [int(m) for m in np.flatnonzero(probs >= threshold)]
    hit_set = set(hits)
    peaks = [
        Peak(m, float(probs[m]), ((m - 1) % N in hit_set or (m + 1) % N in hit_set) and N > 1)
        for m in hits
    ]
    peaks.sort(key=lambda pk: (-pk.prob, pk.m))
    return peaks


def phase_to_energy(m: int, p: int, r: int, t: float = 1.0, alias_k: int = 0,
                    offset: float = 0.0) -> EnergyEstimate:
    if not 0 <= m < (1 << p):
        raise ValueError(f"phase bin {m} outside [0, {1 << p})")
    phi = m / (1 << p)
    energy = -(2.0 * math.pi * r / t) * (phi + alias_k) + offset
    return EnergyEstimate(energy, phi, alias_k, resolution(p, r, t), m)


def weighted_average(energies, probs) -> float:
    energies = list(energies)
    probs = list(probs)
    if not energies or len(energies) != len(probs):
        raise ValueError("need matching, non-empty energies and probabilities")
    if any(w <= 0 for w in probs):
        raise ValueError("weights must be positive")
    return math.fsum(w * e for w, e in zip(probs, energies)) / math.fsum(probs)


def resolve_alias(m: int, p: int, r: int, t: float, window, offset: float = 0.0) -> list[EnergyEstimate]:
    """Every alias of bin ``m`` whose energy falls inside ``window = (lo, hi)``."""
    lo, hi = window
    if not lo < hi:
        raise ValueError("energy window needs lo < hi")
    period = 2.0 * math.pi * r / t
    phi = m / (1 << p)
    # E(k) decreases with k (t > 0): lo <= offset - period (phi + k) <= hi
    k_a = (offset - hi) / period - phi
    k_b = (offset - lo) / period - phi
    k_min, k_max = math.floor(min(k_a, k_b)) - 1, math.ceil(max(k_a, k_b)) + 1
    out = []
    for k in range(k_min, k_max + 1):
        est = phase_to_energy(m, p, r, t, k, offset)
        if lo <= est.energy <= hi:
            out.append(est)
    out.sort(key=lambda e: e.energy)
    return out


def estimate_energy(m: int, p: int, r: int, t: float, offset: float = 0.0, window=None) -> EnergyEstimate | None:
    """Single estimate for bin ``m``: alias 0 without a window, else the in-window alias nearest its centre."""
    if window is None:
        return phase_to_energy(m, p, r, t, 0, offset)
    cands = resolve_alias(m, p, r, t, window, offset)
    if not cands:
        return None
    centre = 0.5 * (window[0] + window[1])
    return min(cands, key=lambda e: abs(e.energy - centre))


def build_report(dist: PhaseDistribution, r: int, t: float, offset: float = 0.0,
                 threshold: float = DEFAULT_THRESHOLD, window=None) -> dict:
    """Peaks, per-alias energies and weighted averages as a JSON-ready dict."""
    p = dist.p
    peaks = find_peaks(dist, threshold)
    rows = []
    for pk in peaks:
        if window is None:
            cands = [phase_to_energy(pk.m, p, r, t, 0, offset)]
        else:
            cands = resolve_alias(pk.m, p, r, t, window, offset)
        rows.append({
            "m": pk.m,
            "probability": pk.prob,
            "adjacent_peak": pk.neighbors_merged,
            "phase": pk.m / (1 << p),
            "candidates": [{"alias_k": e.alias_k, "energy": e.energy} for e in cands],
        })
    report = {
        "p": p,
        "r": r,
        "t": t,
        "threshold": threshold,
        "resolution": resolution(p, r, t),
        "offset_added_classically": offset,
        "window": list(window) if window is not None else None,
        "top_bin": dist.argmax(),
        "top_probability": float(dist.probs[dist.argmax()]),
        "peaks": rows,
        "weighted_averages": [],
    }
    # weighted average over each run of adjacent peaks, using the in-window
    # alias (or alias 0) for each member
    groups = _adjacent_groups(peaks, 1 << p)
    for group in groups:
        if len(group) < 2:
            continue
        ests = [estimate_energy(pk.m, p, r, t, offset, window) for pk in group]
        if any(e is None for e in ests):
            continue
        report["weighted_averages"].append({
            "bins": [pk.m for pk in group],
            "energy": weighted_average([e.energy for e in ests], [pk.prob for pk in group]),
        })
    return report


def _adjacent_groups(peaks, N):
    remaining = {pk.m: pk for pk in peaks}
    groups = []
    for pk in peaks:
        if pk.m not in remaining:
            continue
        group = [remaining.pop(pk.m)]
        frontier = [pk.m]
        while frontier:
            m = frontier.pop()
            for nb in ((m - 1) % N, (m + 1) % N):
                if nb in remaining:
                    group.append(remaining.pop(nb))
                    frontier.append(nb)
        group.sort(key=lambda x: x.m)
        groups.append(group)
    return groups
