"""Random instances shared by the test modules."""
from detqpe.hamiltonian import IntegralSet


def random_integrals(n, n_alpha, n_beta, rng, scale=1.0):
    """Random real integrals with the full 8-fold symmetry."""
    h = rng.normal(size=(n, n))
    h = 0.5 * (h + h.T)
    v = rng.normal(size=(n,) * 4)
    v = v + v.transpose(1, 0, 2, 3)
    v = v + v.transpose(0, 1, 3, 2)
    v = 0.125 * (v + v.transpose(2, 3, 0, 1))
    return IntegralSet(n, n_alpha, n_beta, float(rng.normal()), scale * h, scale * v)


def random_term(kind, n, rng):
    """A random spin-conserving term of one class, as an index tuple.

    Needs ``n >= 2`` for pqqr/pqrs.
    """
    def pick(k, block=None):
        pool = range(n) if block is None else range(block * n, block * n + n)
        return [int(x) for x in rng.choice(list(pool), size=k, replace=False)]

    if kind == "pp":
        return (int(rng.integers(0, 2 * n)),)
    if kind == "pqqp":
        return tuple(sorted(int(x) for x in rng.choice(2 * n, size=2, replace=False)))
    if kind == "pq":
        p, q = sorted(pick(2, int(rng.integers(0, 2))))
        return (p, q)
    if kind == "pqqr":
        b = int(rng.integers(0, 2))
        p, r = sorted(pick(2, b))
        q = int(rng.choice([x for x in range(2 * n) if x not in (p, r)]))
        return (p, q, r)
    if kind == "pqrs":
        same = n >= 4 and rng.random() < 0.5
        if same:
            b = int(rng.integers(0, 2))
            p, q, r, s = pick(4, b)
            p, q = sorted((p, q))
            r, s = sorted((r, s))
        else:
            p, r = pick(2, 0)
            q, s = (x + n for x in pick(2, 0))
        if (p, q) > (r, s):
            p, q, r, s = r, s, p, q
        return (p, q, r, s)
    raise ValueError(kind)
