"""Independent reference implementations used only by the test suite."""

import itertools
import math

import numpy as np

from nadid.measure import Capacity, GroundSet
from nadid.panel import PanelDataset


def random_monotone_capacity(rng, n, normalized=True):
    """Random monotone table built by cardinality-ordered running maxima."""
    size = 1 << n
    v = np.zeros(size)
    for mask in sorted(range(1, size), key=lambda m: bin(m).count("1")):
        below = max(v[mask & ~(1 << i)] for i in range(n) if mask >> i & 1)
        v[mask] = max(below, rng.random())
    if normalized:
        v = v / v[-1]
        v[-1] = 1.0
    return Capacity.from_table(GroundSet.of_size(n), v, normalized=normalized)


def brute_choquet(f, capacity):
    """Choquet integral by exact level-set integration.

    ``int_0^inf nu({f >= t}) dt + int_-inf^0 (nu({f >= t}) - nu(X)) dt``
    evaluated interval by interval between the breakpoints of ``f``.
    """
    f = [float(x) for x in f]
    n = len(f)
    table = list(capacity.values())
    full = table[(1 << n) - 1]
    points = sorted(set(f) | {0.0})
    total = 0.0
    for lo, hi in zip(points[:-1], points[1:]):
        t = 0.5 * (lo + hi)
        mask = 0
        for i, x in enumerate(f):
            if x >= t:
                mask |= 1 << i
        height = table[mask] if t > 0 else table[mask] - full
        total += (hi - lo) * height
    return total


def brute_reconstruct(mobius):
    """Capacity values from Möbius coefficients by direct subset enumeration."""
    size = len(mobius)
    out = np.zeros(size)
    for a in range(size):
        out[a] = sum(mobius[b] for b in range(size) if b & a == b)
    return out


def brute_shapley(capacity):
    """Shapley values as average marginal contributions over all orderings."""
    n = capacity.n
    v = capacity.values()
    phi = np.zeros(n)
    for perm in itertools.permutations(range(n)):
        mask = 0
        for j in perm:
            phi[j] += v[mask | (1 << j)] - v[mask]
            mask |= 1 << j
    return phi / math.factorial(n)


def random_balanced_panel(rng, max_units=40, max_periods=12):
    n_units = int(rng.integers(2, max_units + 1))
    T = int(rng.integers(2, max_periods + 1))
    start = int(rng.integers(2, T + 1))
    treated = rng.random(n_units) < rng.uniform(0.2, 0.8)
    treated[0], treated[1] = True, False
    rng.shuffle(treated)
    y = rng.normal(rng.normal(), rng.uniform(0.1, 2.0), (n_units, T))
    return PanelDataset.from_arrays(
        unit=np.repeat(np.arange(n_units), T),
        period=np.tile(np.arange(1, T + 1), n_units),
        treated=np.repeat(treated.astype(int), T),
        outcome=y.ravel(),
        treatment_start=start,
    )


def panel_from_cell_means(y1, y2, y3, y4, units_per_group=2):
    """Two-period panel whose treated/control x post/pre cell means are given."""
    rows = []
    unit = 0
    for treated, (post_mean, pre_mean) in ((1, (y1, y3)), (0, (y2, y4))):
        for k in range(units_per_group):
            unit += 1
            spread = 0.1 * (k - (units_per_group - 1) / 2)
            rows.append((unit, 1, treated, pre_mean + spread))
            rows.append((unit, 2, treated, post_mean - spread))
    u, t, d, y = map(np.array, zip(*rows))
    return PanelDataset.from_arrays(u, t, d, y, treatment_start=2)


def identical_path_panel(n_units=6, T=5, start=3, seed=0):
    """Every unit follows the same outcome path; treated and control coincide."""
    rng = np.random.default_rng(seed)
    path = rng.normal(size=T)
    treated = np.array([1, 0] * (n_units // 2))
    return PanelDataset.from_arrays(
        unit=np.repeat(np.arange(n_units), T),
        period=np.tile(np.arange(1, T + 1), n_units),
        treated=np.repeat(treated, T),
        outcome=np.tile(path, n_units),
        treatment_start=start,
    )
