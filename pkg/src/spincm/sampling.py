"""Random regular phase points. All randomness comes from a caller-supplied
``numpy.random.Generator`` so that runs are reproducible from one seed."""

import numpy as np

from .phase_space import CMPoint, OrbitTag, SpinMatrix, TStarGPoint, lift_to_cotangent


def spread_positions(rng, n, spread=1.0, min_gap=0.3):
    """Real, centred, pairwise separated positions."""
    steps = min_gap + spread * rng.uniform(0.0, 1.0, size=n)
    q = np.cumsum(steps)
    q = q[rng.permutation(n)]
    return q - q.mean()


def random_momenta(rng, n, scale=1.0):
    p = scale * rng.normal(size=n)
    return p - p.mean()


def random_spin(rng, n, scale=0.5, complex_entries=True):
    mu = scale * rng.normal(size=(n, n))
    if complex_entries:
        mu = mu + 1j * scale * rng.normal(size=(n, n))
    np.fill_diagonal(mu, 0.0)
    return mu


def random_cm_point(rng, n, spin_scale=0.5, spread=1.0, momentum_scale=1.0):
    """Generic (General-orbit) reduced point with real q and p."""
    return CMPoint(
        spread_positions(rng, n, spread),
        random_momenta(rng, n, momentum_scale),
        SpinMatrix(random_spin(rng, n, spin_scale), OrbitTag.GENERAL),
    )


def random_unimodular(rng, n, scale=0.3):
    m = np.eye(n) + scale * (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
    return m / np.linalg.det(m) ** (1.0 / n)


def conjugate(pt, u):
    uinv = np.linalg.inv(u)
    return TStarGPoint(u @ pt.x @ uinv, u @ pt.gamma @ uinv)


def random_tstar_point(rng, cartan, spin_scale=0.5):
    """Lift of a random reduced point, conjugated by a random group element."""
    cm = random_cm_point(rng, cartan.n, spin_scale)
    return conjugate(lift_to_cotangent(cm, cartan), random_unimodular(rng, cartan.n))
