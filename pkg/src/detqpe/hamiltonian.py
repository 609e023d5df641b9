"""Integral files and the five-class fermionic term decomposition.

The Hamiltonian is

    H = E_core + sum_{pq,s} h(p,q) a+_{ps} a_{qs}
        + 1/2 sum_{pqrs,s,t} (pq|rs) a+_{ps} a+_{rt} a_{st} a_{qs}

with spatial integrals in chemists' notation.  :func:`expand_and_classify`
rewrites it over spin orbitals (alpha ``0..n-1``, beta ``n..2n-1``) as an
offset plus five term lists:

=======  ==========================================  ================
class    operator                                    key
=======  ==========================================  ================
pp       h n_p                                       p
pqqp     h n_p n_q                                   p < q
pq       h (a+_p a_q + a+_q a_p)                     p < q
pqqr     h n_q (a+_p a_r + a+_r a_p)                 p < r, q not in {p, r}
pqrs     h (a+_p a+_q a_s a_r + a+_r a+_s a_q a_p)   p < q, r < s, (p, q) < (r, s)
=======  ==========================================  ================
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SYMMETRY_TOL = 1e-12
DUPLICATE_TOL = 1e-10
DEFAULT_DROP = 1e-12

TERM_CLASSES = ("pp", "pqqp", "pq", "pqqr", "pqrs")
DIAGONAL_CLASSES = ("pp", "pqqp")
OFFDIAGONAL_CLASSES = ("pq", "pqqr", "pqrs")
_INDEX_COUNT = {"pp": 1, "pqqp": 2, "pq": 2, "pqqr": 3, "pqrs": 4}


class FcidumpError(ValueError):
    """Malformed or inconsistent integral file."""


def _eightfold(i, j, k, l):
    return {
        (i, j, k, l), (j, i, k, l), (i, j, l, k), (j, i, l, k),
        (k, l, i, j), (l, k, i, j), (k, l, j, i), (l, k, j, i),
    }


@dataclass
class IntegralSet:
    n_orbitals: int
    n_alpha: int
    n_beta: int
    core_energy: float
    one_body: np.ndarray
    two_body: np.ndarray

    def __post_init__(self):
        n = self.n_orbitals
        if n < 1:
            raise ValueError("n_orbitals must be positive")
        if not (0 < self.n_alpha <= n and 0 < self.n_beta <= n):
            raise ValueError(
                f"electron counts ({self.n_alpha}, {self.n_beta}) not in (0, {n}]"
            )
        for name in ("one_body", "two_body"):
            arr = np.asarray(getattr(self, name))
            if np.iscomplexobj(arr):
                if np.abs(arr.imag).max(initial=0.0) > 0:
                    raise ValueError(f"{name}: complex integrals are not supported")
                arr = arr.real
            setattr(self, name, np.array(arr, dtype=float))
        if self.one_body.shape != (n, n):
            raise ValueError(f"one_body has shape {self.one_body.shape}, expected {(n, n)}")
        if self.two_body.shape != (n,) * 4:
            raise ValueError(f"two_body has shape {self.two_body.shape}, expected {(n,) * 4}")
        if isinstance(self.core_energy, complex):
            raise ValueError("core_energy must be real")
        self.core_energy = float(self.core_energy)
        h, v = self.one_body, self.two_body
        if not np.all(np.isfinite(h)) or not np.all(np.isfinite(v)):
            raise ValueError("integrals must be finite")
        if np.abs(h - h.T).max(initial=0.0) > SYMMETRY_TOL:
            raise ValueError("one_body is not symmetric")
        for perm in ((1, 0, 2, 3), (0, 1, 3, 2), (2, 3, 0, 1)):
            if np.abs(v - v.transpose(perm)).max(initial=0.0) > SYMMETRY_TOL:
                raise ValueError("two_body lacks 8-fold permutational symmetry")

    @classmethod
    def zeros(cls, n: int, n_alpha: int, n_beta: int, core_energy: float = 0.0) -> "IntegralSet":
        return cls(n, n_alpha, n_beta, core_energy, np.zeros((n, n)), np.zeros((n,) * 4))


_HEADER_KEY = re.compile(r"\b(NORB|NELEC|MS2)\s*=\s*(-?\d+)", re.IGNORECASE)


def _split_header(lines):
    for i, line in enumerate(lines):
        s = line.strip().upper()
        if s in ("/", "&END", "$END") or s.endswith("&END") or s.endswith("/"):
            return " ".join(lines[: i + 1]), lines[i + 1 :]
    # bare single-line header
    return lines[0], lines[1:]


def parse_fcidump(text) -> IntegralSet:
    """Parse FCIDUMP text (a string, path or open file) into an :class:`IntegralSet`."""
    if isinstance(text, Path):
        text = text.read_text()
    elif hasattr(text, "read"):
        text = text.read()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise FcidumpError("empty FCIDUMP")
    header, body = _split_header(lines)
    keys = {k.upper(): int(v) for k, v in _HEADER_KEY.findall(header)}
    if "NORB" not in keys or "NELEC" not in keys:
        raise FcidumpError(f"header must define NORB and NELEC: {header!r}")
    n, nelec, ms2 = keys["NORB"], keys["NELEC"], keys.get("MS2", 0)
    if n < 1 or nelec < 0:
        raise FcidumpError(f"invalid NORB={n} / NELEC={nelec}")
    if (nelec + ms2) % 2:
        raise FcidumpError(f"NELEC+MS2 = {nelec + ms2} is odd")
    n_alpha, n_beta = (nelec + ms2) // 2, (nelec - ms2) // 2

    one = np.zeros((n, n))
    two = np.zeros((n,) * 4)
    seen1: dict = {}
    seen2: dict = {}
    core = None

    def record(store, key, value, lineno):
        old = store.get(key)
        if old is not None and abs(old - value) > DUPLICATE_TOL:
            raise FcidumpError(f"line {lineno}: conflicting duplicate entry for {key}")
        store[key] = value

    for lineno, line in enumerate(body, start=1):
        parts = line.split()
        if len(parts) != 5:
            raise FcidumpError(f"integral line {lineno}: expected 5 fields, got {line!r}")
        try:
            value = float(parts[0].replace("D", "E").replace("d", "e"))
            i, j, k, l = (int(x) for x in parts[1:])
        except ValueError as exc:
            raise FcidumpError(f"integral line {lineno}: {exc}") from None
        if any(x < 0 or x > n for x in (i, j, k, l)):
            raise FcidumpError(f"integral line {lineno}: index out of range 0..{n}")
        if i == j == k == l == 0:
            if core is not None and abs(core - value) > DUPLICATE_TOL:
                raise FcidumpError(f"line {lineno}: conflicting core energy")
            core = value
        elif k == 0 and l == 0:
            if i == 0 or j == 0:
                raise FcidumpError(f"integral line {lineno}: bad one-body indices")
            key = (min(i, j) - 1, max(i, j) - 1)
            record(seen1, key, value, lineno)
        else:
            if 0 in (i, j, k, l):
                raise FcidumpError(f"integral line {lineno}: bad two-body indices")
            key = min(_eightfold(i - 1, j - 1, k - 1, l - 1))
            record(seen2, key, value, lineno)

    for (p, q), value in seen1.items():
        one[p, q] = one[q, p] = value
    for key, value in seen2.items():
        for idx in _eightfold(*key):
            two[idx] = value
    try:
        return IntegralSet(n, n_alpha, n_beta, core or 0.0, one, two)
    except ValueError as exc:
        raise FcidumpError(str(exc)) from None


def write_fcidump(ints: IntegralSet, tol: float = 0.0) -> str:
    """Serialise to FCIDUMP text; values use ``repr`` so a parse round trip is exact."""
    n = ints.n_orbitals
    nelec = ints.n_alpha + ints.n_beta
    ms2 = ints.n_alpha - ints.n_beta
    out = [f" &FCI NORB={n},NELEC={nelec},MS2={ms2},", " &END"]
    v = ints.two_body
    for i in range(n):
        for j in range(i + 1):
            for k in range(n):
                for l in range(k + 1):
                    if (i * (i + 1) // 2 + j) < (k * (k + 1) // 2 + l):
                        continue
                    if abs(v[i, j, k, l]) > tol:
                        out.append(f"{float(v[i, j, k, l])!r} {i + 1} {j + 1} {k + 1} {l + 1}")
    for i in range(n):
        for j in range(i + 1):
            if abs(ints.one_body[i, j]) > tol:
                out.append(f"{float(ints.one_body[i, j])!r} {i + 1} {j + 1} 0 0")
    out.append(f"{ints.core_energy!r} 0 0 0 0")
    return "\n".join(out) + "\n"


def spin_orbital_integrals(ints: IntegralSet):
    """One-body matrix and two-body tensor over blocked spin orbitals.

    Returns ``(h1, g)`` with ``H = sum h1[P,Q] a+_P a_Q
    + sum g[P,Q,R,S] a+_P a+_Q a_S a_R``.
    """
    n = ints.n_orbitals
    m = 2 * n
    h1 = np.zeros((m, m))
    h1[:n, :n] = ints.one_body
    h1[n:, n:] = ints.one_body
    # <PQ|RS> = (pr|qs) when spin(P)=spin(R) and spin(Q)=spin(S)
    phys = ints.two_body.transpose(0, 2, 1, 3)
    g = np.zeros((m, m, m, m))
    for sp in (0, n):
        for sq in (0, n):
            g[sp:sp + n, sq:sq + n, sp:sp + n, sq:sq + n] = 0.5 * phys
    return h1, g


@dataclass
class ClassifiedHamiltonian:
    n_orbitals: int
    n_alpha: int
    n_beta: int
    offset: float = 0.0
    pp_terms: list = field(default_factory=list)
    pqqp_terms: list = field(default_factory=list)
    pq_terms: list = field(default_factory=list)
    pqqr_terms: list = field(default_factory=list)
    pqrs_terms: list = field(default_factory=list)

    def terms(self, kind: str) -> list:
        if kind not in TERM_CLASSES:
            raise KeyError(kind)
        return getattr(self, f"{kind}_terms")

    def term_counts(self) -> dict:
        return {kind: len(self.terms(kind)) for kind in TERM_CLASSES}

    @property
    def n_terms(self) -> int:
        return sum(self.term_counts().values())

    def one_norm(self) -> float:
        """Sum of |h| over all terms; bounds the spectral norm of H - offset."""
        return sum(abs(t[-1]) for kind in TERM_CLASSES for t in self.terms(kind))

    def sorted(self) -> "ClassifiedHamiltonian":
        """Copy with every term list in lexicographic canonical-key order."""
        return ClassifiedHamiltonian(
            self.n_orbitals, self.n_alpha, self.n_beta, self.offset,
            *(sorted(self.terms(kind), key=lambda t: t[:-1]) for kind in TERM_CLASSES),
        )

    def with_offset(self, offset: float) -> "ClassifiedHamiltonian":
        return ClassifiedHamiltonian(
            self.n_orbitals, self.n_alpha, self.n_beta, float(offset),
            *(list(self.terms(kind)) for kind in TERM_CLASSES),
        )

    def to_dict(self) -> dict:
        d = {
            "n_orbitals": self.n_orbitals,
            "n_alpha": self.n_alpha,
            "n_beta": self.n_beta,
            "offset": self.offset,
        }
        for kind in TERM_CLASSES:
            d[kind] = [[*map(int, t[:-1]), float(t[-1])] for t in self.terms(kind)]
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ClassifiedHamiltonian":
        lists = []
        for kind in TERM_CLASSES:
            rows = d.get(kind, [])
            for row in rows:
                if len(row) != _INDEX_COUNT[kind] + 1:
                    raise ValueError(f"{kind} term {row!r} has wrong arity")
            lists.append([(*map(int, row[:-1]), float(row[-1])) for row in rows])
        return cls(int(d["n_orbitals"]), int(d["n_alpha"]), int(d["n_beta"]), float(d["offset"]), *lists)

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    @classmethod
    def from_json(cls, text: str) -> "ClassifiedHamiltonian":
        return cls.from_dict(json.loads(text))


def expand_and_classify(ints: IntegralSet, drop_threshold: float = DEFAULT_DROP) -> ClassifiedHamiltonian:
    """Expand spatial integrals to spin orbitals and sort terms into the five classes.

    Hermitian partners are merged into a single real coefficient.  Terms are
    listed in the order the expansion first meets them; use
    :meth:`ClassifiedHamiltonian.sorted` for canonical order.
    """
    if drop_threshold < 0:
        raise ValueError("drop_threshold must be non-negative")
    n = ints.n_orbitals
    m = 2 * n
    h1, g = spin_orbital_integrals(ints)
    buckets = {kind: {} for kind in TERM_CLASSES}

    def add(kind, key, value):
        if value != 0.0:
            bucket = buckets[kind]
            bucket[key] = bucket.get(key, 0.0) + value

    for P in range(m):
        for Q in range(m):
            h = h1[P, Q]
            if h == 0.0:
                continue
            if P == Q:
                add("pp", (P,), h)
            else:
                # a+_P a_Q and a+_Q a_P both land on one merged key
                add("pq", (min(P, Q), max(P, Q)), 0.5 * h)

    # Antisymmetrise onto a+_P a+_Q a_S a_R with P < Q, R < S.
    w = g - g.transpose(1, 0, 2, 3) - g.transpose(0, 1, 3, 2) + g.transpose(1, 0, 3, 2)
    for P, Q, R, S in zip(*np.nonzero(w)):
        if not (P < Q and R < S):
            continue
        P, Q, R, S = int(P), int(Q), int(R), int(S)
        c = w[P, Q, R, S]
        if (P, Q) == (R, S):
            add("pqqp", (P, Q), c)
            continue
        shared = {P, Q} & {R, S}
        if not shared:
            key = (P, Q, R, S) if (P, Q) < (R, S) else (R, S, P, Q)
            add("pqrs", key, 0.5 * c)
            continue
        # One shared index: reduce to sign * n_c a+_a a_b.
        if P == R:
            common, a, b, sign = P, Q, S, 1.0
        elif Q == S:
            common, a, b, sign = Q, P, R, 1.0
        elif P == S:
            common, a, b, sign = P, Q, R, -1.0
        else:  # Q == R
            common, a, b, sign = Q, P, S, -1.0
        add("pqqr", (min(a, b), common, max(a, b)), 0.5 * sign * c)

    out = ClassifiedHamiltonian(n, ints.n_alpha, ints.n_beta, ints.core_energy)
    for kind in TERM_CLASSES:
        terms = out.terms(kind)
        for key, value in buckets[kind].items():
            if value != 0.0 and abs(value) >= drop_threshold:
                terms.append((*key, float(value)))
    _check_classified(out)
    return out


def _spin_block(i: int, n: int) -> int:
    return 0 if i < n else 1


def _check_classified(H: ClassifiedHamiltonian):
    n = H.n_orbitals
    m = 2 * n
    for kind in TERM_CLASSES:
        for term in H.terms(kind):
            *idx, h = term
            if not np.isfinite(h):
                raise ValueError(f"{kind} term {term} has non-finite coefficient")
            if any(not 0 <= i < m for i in idx):
                raise ValueError(f"{kind} term {term} index outside [0, {m})")
    for p, q, _ in H.pq_terms:
        if _spin_block(p, n) != _spin_block(q, n):
            raise ValueError(f"pq term ({p}, {q}) mixes spin blocks")
    for p, q, r, _ in H.pqqr_terms:
        if _spin_block(p, n) != _spin_block(r, n) or q in (p, r):
            raise ValueError(f"pqqr term ({p}, {q}, {r}) is not spin-conserving")
    for p, q, r, s, _ in H.pqrs_terms:
        if sorted(_spin_block(i, n) for i in (p, q)) != sorted(_spin_block(i, n) for i in (r, s)):
            raise ValueError(f"pqrs term ({p}, {q}, {r}, {s}) is not spin-conserving")
