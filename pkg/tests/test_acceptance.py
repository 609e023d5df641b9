"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Shared invariants (norm, probability sum, pair closure) are checked by
``_Invariants`` wherever a criterion produces states or distributions;
criterion 9 re-runs a sweep of its own and reports the tally.
"""
import math

import numpy as np
import pytest
from helpers import random_integrals, random_term

from detqpe import oracle
from detqpe.determinants import DeterminantSpace
from detqpe.hamiltonian import (
    OFFDIAGONAL_CLASSES,
    TERM_CLASSES,
    ClassifiedHamiltonian,
    expand_and_classify,
    parse_fcidump,
)
from detqpe.qpe import Ansatz, QpeConfig, memory_estimate, run_layered, run_overlap
from detqpe.readout import estimate_energy, find_peaks, resolution, weighted_average
from detqpe.trotter import (
    StateVector,
    TrotterConfig,
    TrotterStep,
    apply_diagonal,
    apply_offdiagonal_term,
    term_pairs,
)


class _Invariants:
    def __init__(self):
        self.checks = 0
        self.failures = []

    def _check(self, ok, what):
        self.checks += 1
        if not ok:
            self.failures.append(what)

    def unitary(self, M, what, tol=1e-12):
        self._check(np.abs(M.conj().T @ M - np.eye(len(M))).max() <= tol, f"unitarity: {what}")

    def distribution(self, probs, what, tol=1e-12):
        self._check(probs.min() >= 0.0 and abs(math.fsum(probs) - 1.0) <= tol, f"probability sum: {what}")

    def closure(self, left, right, dim, what):
        touched = np.concatenate([left, right])
        ok = len(set(touched.tolist())) == touched.size and (touched.size == 0 or (
            touched.min() >= 0 and touched.max() < dim))
        self._check(ok, f"closure: {what}")


INV = _Invariants()


def _engine_term_exponential(kind, idx, theta, space):
    state = StateVector(space, np.eye(space.dimension, dtype=complex))
    if kind == "pp":
        apply_diagonal([(idx[0], theta)], [], state, 1.0)
    elif kind == "pqqp":
        apply_diagonal([], [(*idx, theta)], state, 1.0)
    else:
        apply_offdiagonal_term(kind, idx, state, theta)
    return state.amps


def test_criterion_1_sign_rule_equivalence(acceptance):
    rng = np.random.default_rng(2024)
    worst = {}
    for kind in TERM_CLASSES:
        worst[kind] = 0.0
        for _ in range(200):
            n = int(rng.integers(2, 6))
            ka, kb = (int(x) for x in rng.integers(1, n, size=2))
            space = DeterminantSpace(n, ka, kb)
            idx = random_term(kind, n, rng)
            theta = float(rng.uniform(-math.pi, math.pi))
            got = _engine_term_exponential(kind, idx, theta, space)
            want = oracle.lifted_term_exponential(kind, idx, theta, space)
            worst[kind] = max(worst[kind], float(np.abs(got - want).max()))
            INV.unitary(got, f"{kind}{idx}")
            if kind in OFFDIAGONAL_CLASSES:
                left, right, _ = term_pairs(kind, idx, space)
                INV.closure(left, right, space.dimension, f"{kind}{idx}")
    err = max(worst.values())
    detail = "max-abs " + ", ".join(f"{k}={v:.1e}" for k, v in worst.items()) + " (tol 1e-12)"
    assert acceptance(1, err <= 1e-12, detail)


def test_criterion_2_hamiltonian_reconstruction(acceptance):
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        ka, kb = (int(x) for x in rng.integers(1, n + 1, size=2))
        ints = random_integrals(n, ka, kb, rng)
        space = DeterminantSpace(n, ka, kb)
        diff = oracle.build_dense_hamiltonian(expand_and_classify(ints), space) - \
            oracle.build_dense_from_integrals(ints, space)
        worst = max(worst, float(np.abs(diff).max()))
    assert acceptance(2, worst <= 1e-12, f"100 instances, max-abs {worst:.1e} (tol 1e-12)")


def test_criterion_3_mode_equivalence(acceptance):
    rng = np.random.default_rng(11)
    worst = 0.0
    for i in range(25):
        n = int(rng.integers(1, 5))
        ka, kb = (int(x) for x in rng.integers(1, n + 1, size=2))
        p = int(rng.integers(1, 7))
        r = int(rng.integers(1, 4))
        space = DeterminantSpace(n, ka, kb)
        H = expand_and_classify(random_integrals(n, ka, kb, rng, 0.5))
        psi = rng.normal(size=space.dimension) + 1j * rng.normal(size=space.dimension)
        ans = Ansatz.from_vector(space, psi)
        cfg = QpeConfig(p, TrotterConfig(float(rng.uniform(0.3, 2.0)), r))
        a = run_layered(H, ans, cfg).probs
        b = run_overlap(H, ans, cfg).probs
        INV.distribution(a, f"layered instance {i}")
        INV.distribution(b, f"overlap instance {i}")
        worst = max(worst, float(np.abs(a - b).max()))
    assert acceptance(3, worst <= 1e-10, f"25 instances, max per-bin difference {worst:.1e} (tol 1e-10)")


def test_criterion_4_delta(acceptance):
    H = ClassifiedHamiltonian(1, 1, 0, 0.0, [(0, -2 * math.pi * 3 / 8)])
    ans = Ansatz.hartree_fock(DeterminantSpace(1, 1, 0))
    cfg = QpeConfig(3, TrotterConfig(1.0, 1))
    results = {}
    for run in (run_overlap, run_layered):
        probs = run(H, ans, cfg).probs
        INV.distribution(probs, f"delta {run.__name__}")
        results[run.__name__] = float(probs[3])
    ok = all(abs(v - 1.0) <= 1e-10 for v in results.values())
    detail = ", ".join(f"{k}: Prob(3)={v:.12f}" for k, v in results.items())
    assert acceptance(4, ok, detail)


def _step_eigen_energy(H, space, cfg, target_vec, near):
    """Energy of the Trotter-step eigenvector with the largest overlap on ``target_vec``."""
    w, V = np.linalg.eig(TrotterStep(H, space, cfg).matrix())
    j = int(np.argmax(np.abs(V.conj().T @ target_vec)))
    period = 2 * math.pi / cfg.dt
    e = -np.angle(w[j]) / cfg.dt + H.offset
    return e + period * round((near - e) / period)


def test_criterion_5_h2_end_to_end(acceptance, h2_path):
    H = expand_and_classify(parse_fcidump(h2_path))
    space = DeterminantSpace(2, 1, 1)
    e_fci, vec = oracle.ground_state(H, space)
    ans = Ansatz.from_vector(space, vec)
    p, t = 10, 1.0
    window = (e_fci - 1.0, e_fci + 1.0)
    rows = {}
    for r in (16, 64):
        cfg = QpeConfig(p, TrotterConfig(t, r))
        dist = run_overlap(H, ans, cfg)
        INV.distribution(dist.probs, f"H2 r={r}")
        m = dist.argmax()
        est = estimate_energy(m, p, r, t, H.offset, window)
        drift = oracle.energy_drift_bound(oracle.trotter_error(H, space, cfg.trotter), t)
        allowed = resolution(p, r, t) / 2 + drift
        trotter_gap = abs(_step_eigen_energy(H, space, cfg.trotter, vec, e_fci) - e_fci)
        rows[r] = (abs(est.energy - e_fci), allowed, trotter_gap, drift)
    within = all(err <= allowed for err, allowed, *_ in rows.values())
    shrinks = rows[64][2] < rows[16][2] and rows[64][3] < rows[16][3]
    detail = "; ".join(
        f"r={r}: |E_peak-E_FCI|={e:.4f} <= {a:.4f}, Trotter discrepancy {g:.2e}, drift bound {d:.2e}"
        for r, (e, a, g, d) in rows.items()
    )
    assert acceptance(5, within and shrinks, detail)


def test_criterion_6_trotter_scaling(acceptance):
    rng = np.random.default_rng(0)
    H = expand_and_classify(random_integrals(3, 2, 1, rng, 0.5))
    space = DeterminantSpace(3, 2, 1)
    errs = {}
    for r in (1, 2, 4, 8, 16):
        cfg = TrotterConfig(1.0, r)
        INV.unitary(TrotterStep(H, space, cfg).matrix(), f"n=3 step r={r}")
        errs[r] = oracle.trotter_error(H, space, cfg)
    ratios = [errs[2 * r] / errs[r] for r in (1, 2, 4, 8)]
    ok = all(0.35 <= x <= 0.65 for x in ratios)
    assert acceptance(6, ok, "ratios " + ", ".join(f"{x:.3f}" for x in ratios) + " (want [0.35, 0.65])")


def test_criterion_7_memory_claim(acceptance):
    est = memory_estimate(DeterminantSpace(15, 5, 5), 14)
    ok = est.dimension == 9_018_009 and abs(est.reduction - 2**30 / 9_018_009) <= 1e-9 \
        and 100 <= est.reduction < 120
    assert acceptance(7, ok, f"dimension {est.dimension}, reduction {est.reduction:.2f}x, "
                             f"overlap storage {est.bytes / 1e6:.1f} MB at p=14")


def test_criterion_8_readout_arithmetic(acceptance):
    avg = weighted_average([-76.2225, -76.2187], [0.410, 0.358])
    assert acceptance(8, abs(avg - -76.2207) <= 5e-4, f"weighted average {avg:.5f} (want -76.2207 +/- 5e-4)")


def test_criterion_9_conservation(acceptance):
    # a sweep of its own, so the criterion holds even when run alone
    rng = np.random.default_rng(99)
    for _ in range(10):
        n = int(rng.integers(2, 5))
        ka, kb = (int(x) for x in rng.integers(1, n, size=2))
        space = DeterminantSpace(n, ka, kb)
        H = expand_and_classify(random_integrals(n, ka, kb, rng, 0.5))
        step = TrotterStep(H, space, TrotterConfig(1.0, 2))
        psi = rng.normal(size=space.dimension) + 1j * rng.normal(size=space.dimension)
        psi /= np.linalg.norm(psi)
        for _ in range(8):
            step(psi)
        INV._check(abs(np.linalg.norm(psi) - 1.0) <= 1e-12, "norm after 8 steps")
        for kind in OFFDIAGONAL_CLASSES:
            for term in H.terms(kind):
                left, right, _ = term_pairs(kind, term[:-1], space)
                INV.closure(left, right, space.dimension, f"{kind}{term[:-1]}")
        dist = run_overlap(H, Ansatz.from_vector(space, psi), QpeConfig(4, TrotterConfig(1.0, 2)))
        INV.distribution(dist.probs, "sweep")
    ok = not INV.failures
    detail = f"{INV.checks} invariant checks, {len(INV.failures)} failures"
    if INV.failures:
        detail += f" (first: {INV.failures[0]})"
    assert acceptance(9, ok, detail)


@pytest.mark.slow
def test_criterion_10_water_probe(acceptance, water_path):
    ints = parse_fcidump(water_path)
    H = expand_and_classify(ints)
    space = DeterminantSpace(ints.n_orbitals, ints.n_alpha, ints.n_beta)
    assert (space.n, space.k_alpha + space.k_beta) == (6, 4)
    e_fci, vec = oracle.ground_state(H, space)
    hf = Ansatz.hartree_fock(space)
    overlap = float(abs(np.vdot(hf.to_vector(), vec)) ** 2)
    p, r, t = 10, 10, 1.0
    dist = run_overlap(H, hf, QpeConfig(p, TrotterConfig(t, r)))
    INV.distribution(dist.probs, "water probe")
    m = dist.argmax()
    res = resolution(p, r, t)
    est = estimate_energy(m, p, r, t, H.offset, (e_fci - 1.0, e_fci + 1.0))
    energy_ok = est is not None and abs(est.energy - e_fci) <= 2 * res
    prob = float(dist.probs[m])
    prob_ok = prob >= overlap - 0.1
    peaks = find_peaks(dist)
    e_text = "none in window" if est is None else f"{est.energy:.4f}"
    detail = (f"top bin {m}, E={e_text} vs FCI {e_fci:.4f} (2*res {2 * res:.4f}, "
              f"{'ok' if energy_ok else 'too far'}); top prob {prob:.3f} vs |<HF|FCI>|^2-0.1 = "
              f"{overlap - 0.1:.3f} ({'ok' if prob_ok else 'too low'}); {len(peaks)} peak(s) >= 0.1")
    assert acceptance(10, energy_ok and prob_ok, detail)
