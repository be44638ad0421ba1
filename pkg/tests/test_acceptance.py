"""Acceptance checks, one test per criterion.

Each test prints a single ``[PASS]`` or ``[FAIL]`` line with the measured
quantities, then asserts. Run on its own with::

    pytest tests/test_acceptance.py -v -s
"""

import time

import numpy as np
import pytest

from nadid.capacity_fit import build_qp, fit_capacity, make_samples, solve_qp
from nadid.did import SigmoidSpec, did_integral, did_ols, difference_table, nadid
from nadid.integrals import choquet
from nadid.measure import (
    GroundSet,
    additive_capacity,
    make_uniform_capacity,
    mobius_transform,
    shapley_values,
    symmetric_capacity,
    validate,
    zeta_transform,
)
from nadid.simulate import SimConfig, generate_panel, treatment_effect

from oracles import brute_choquet, random_balanced_panel, random_monotone_capacity


@pytest.fixture
def report(capsys):
    def emit(criterion, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
        return ok
    return emit


@pytest.fixture(scope="module")
def replication():
    spec = SigmoidSpec(5.0, 0.5, "raw")
    t0 = time.perf_counter()
    did, na = [], []
    for seed in range(200):
        panel = generate_panel(SimConfig(num_units=50, num_periods=30, treatment_start=12,
                                         treated_fraction=0.7, seed=seed))
        did.append(difference_table(panel).value)
        na.append(nadid(panel, spec, "listing").value)
    return np.array(did), np.array(na), time.perf_counter() - t0


def test_criterion_1_replication_bands(replication, report):
    did, na, elapsed = replication
    ok = -0.12 <= did.mean() <= -0.07 and -0.06 <= na.mean() <= -0.02 and elapsed <= 60
    report(1, ok, f"mean DiD {did.mean():.5f} in [-0.12, -0.07], mean NA-DiD {na.mean():.5f} "
                  f"in [-0.06, -0.02], {elapsed:.2f}s <= 60s")
    assert ok


def test_criterion_2_attenuation(replication, report):
    did, na, _ = replication
    frac = float(np.mean(np.abs(na) < np.abs(did)))
    ok = frac >= 0.95
    report(2, ok, f"|NA-DiD| < |DiD| in {frac:.3f} of seeds (>= 0.95)")
    assert ok


def test_criterion_3_reduction(report):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(500):
        panel = random_balanced_panel(rng, max_units=40, max_periods=12)
        periods = tuple(range(panel.treatment_start, int(panel.period.max()) + 1))
        uniform = make_uniform_capacity(GroundSet(periods))
        vals = [
            difference_table(panel).value,
            did_ols(panel)[3],
            did_integral(panel, "count").value,
            nadid(panel, uniform, "time_integral").value,
        ]
        worst = max(worst, max(vals) - min(vals))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed <= 10
    report(3, ok, f"max pairwise gap {worst:.3e} <= 1e-10 over 500 panels, {elapsed:.2f}s <= 10s")
    assert ok


def test_criterion_4_choquet(report):
    rng = np.random.default_rng(77)
    t0 = time.perf_counter()
    oracle_gap = 0.0
    failures = {"translation": 0, "homogeneity": 0, "monotonicity": 0, "additive": 0}
    for _ in range(1000):
        n = int(rng.integers(1, 7))
        cap = random_monotone_capacity(rng, n)
        f = rng.normal(size=n) * rng.choice([0.1, 1.0, 10.0])
        cf = choquet(f, cap)
        oracle_gap = max(oracle_gap, abs(cf - brute_choquet(f, cap)))
        c = rng.normal() * 5
        if abs(choquet(f + c, cap) - (cf + c)) > 1e-12:
            failures["translation"] += 1
        a = rng.uniform(0, 10)
        if abs(choquet(a * f, cap) - a * cf) > 1e-12:
            failures["homogeneity"] += 1
        g = f + rng.uniform(0, 2, n)
        if choquet(g, cap) < cf - 1e-12:
            failures["monotonicity"] += 1
        w = rng.dirichlet(np.ones(n))
        if abs(choquet(f, additive_capacity(GroundSet.of_size(n), w)) - f @ w) > 1e-12:
            failures["additive"] += 1
    elapsed = time.perf_counter() - t0
    ok = oracle_gap <= 1e-12 and not any(failures.values()) and elapsed <= 10
    report(4, ok, f"oracle gap {oracle_gap:.2e} <= 1e-12, property failures {failures}, "
                  f"{elapsed:.2f}s <= 10s")
    assert ok


def test_criterion_5_qp_fit(report):
    rng = np.random.default_rng(5)
    truth = random_monotone_capacity(rng, 3)
    F = rng.random((100, 3))
    clean = np.array([choquet(f, truth) for f in F])
    noisy = clean + rng.normal(0.0, 0.01, 100)
    t0 = time.perf_counter()
    clean_samples, noisy_samples = make_samples(F, clean), make_samples(F, noisy)
    fit0 = fit_capacity(clean_samples)
    fit1 = fit_capacity(noisy_samples)
    rms0, rms1 = fit0.rms(clean_samples), fit1.rms(noisy_samples)
    valid = all(validate(f.capacity, tol=1e-8).is_capacity for f in (fit0, fit1))
    spread = 0.0
    for samples in (clean_samples, noisy_samples):
        prob = build_qp(samples)
        sols = [solve_qp(prob, start=s).capacity.values() for s in ("uniform", "min", "max")]
        spread = max(spread, max(np.abs(s - sols[0]).max() for s in sols))
    elapsed = time.perf_counter() - t0
    ok = rms0 <= 1e-6 and rms1 <= 0.02 and valid and spread <= 1e-7 and elapsed <= 30
    report(5, ok, f"noise-free rms {rms0:.2e} <= 1e-6, noisy rms {rms1:.4f} <= 0.02, "
                  f"valid={valid}, start spread {spread:.2e} <= 1e-7, {elapsed:.2f}s <= 30s")
    assert ok


def test_criterion_6_dgp(report):
    cfg = SimConfig(seed=3)
    same = generate_panel(cfg).to_frame().equals(generate_panel(cfg).to_frame())
    floor = min(generate_panel(SimConfig(seed=s)).outcome.min() for s in range(100))
    peak = treatment_effect(cfg.treatment_start + cfg.effect_peak_offset, cfg)
    pre_zero = all(treatment_effect(t, cfg) == 0.0 for t in range(1, cfg.treatment_start))
    ok = same and floor >= 0.02 and peak == 0.4 and pre_zero
    report(6, ok, f"deterministic={same}, min outcome {floor:.4f} >= 0.02, "
                  f"tau(peak)={peak!r}, tau(pre)=0: {pre_zero}")
    assert ok


def test_criterion_7_mobius_shapley(report):
    rng = np.random.default_rng(8)
    roundtrip, sum_gap = 0.0, 0.0
    for _ in range(200):
        n = int(rng.integers(1, 9))
        cap = random_monotone_capacity(rng, n)
        v = cap.values()
        roundtrip = max(roundtrip, np.abs(zeta_transform(mobius_transform(cap)) - v).max())
        sum_gap = max(sum_gap, abs(shapley_values(cap).sum() - 1.0))
    sym_spread = 0.0
    for n in range(1, 9):
        levels = np.concatenate([[0.0], np.sort(rng.random(n - 1)), [1.0]])
        phi = shapley_values(symmetric_capacity(GroundSet.of_size(n), levels))
        sym_spread = max(sym_spread, phi.max() - phi.min())
    ok = roundtrip <= 1e-12 and sum_gap <= 1e-12 and sym_spread <= 1e-12
    report(7, ok, f"roundtrip {roundtrip:.2e} <= 1e-12, |sum phi - 1| {sum_gap:.2e} <= 1e-12, "
                  f"symmetric spread {sym_spread:.2e}")
    assert ok
