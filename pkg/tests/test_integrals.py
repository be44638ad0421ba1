import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nadid.integrals import ValuedFunction, choquet, choquet_listing, sugeno
from nadid.measure import (
    Capacity,
    GroundSet,
    SigmoidDistortion,
    additive_capacity,
    make_uniform_capacity,
)

from oracles import brute_choquet, random_monotone_capacity

G2 = GroundSet.of_size(2)
DEFAULT_G = SigmoidDistortion(5.0, 0.5).scalar("raw")

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def vectors(n):
    return st.lists(finite, min_size=n, max_size=n)


class TestChoquet:
    def test_hand_example(self):
        # larger element is x_2
        cap = Capacity.from_table(G2, [0.0, 0.4, 0.7, 1.0])
        assert choquet([0.2, 0.5], cap) == pytest.approx(0.41, abs=1e-15)

    def test_constant(self):
        rng = np.random.default_rng(0)
        cap = random_monotone_capacity(rng, 4)
        assert choquet([1.7] * 4, cap) == pytest.approx(1.7, abs=1e-15)

    def test_uniform_is_mean(self):
        cap = make_uniform_capacity(GroundSet.of_size(4))
        assert choquet([1, 2, 3, 4], cap) == pytest.approx(2.5, abs=1e-15)

    def test_ground_mismatch(self):
        cap = make_uniform_capacity(GroundSet.of_size(3))
        with pytest.raises(ValueError):
            choquet([1.0, 2.0], cap)
        with pytest.raises(ValueError):
            choquet(ValuedFunction(GroundSet(("a", "b", "c")), [1, 2, 3]), cap)

    def test_non_finite(self):
        cap = make_uniform_capacity(G2)
        with pytest.raises(ValueError):
            choquet([np.nan, 1.0], cap)
        with pytest.raises(ValueError):
            choquet([np.inf, 1.0], cap)

    @pytest.mark.parametrize("n", range(1, 7))
    def test_matches_level_set_integration(self, n):
        rng = np.random.default_rng(100 + n)
        for _ in range(30):
            cap = random_monotone_capacity(rng, n)
            f = rng.normal(size=n) * rng.choice([0.1, 1, 10])
            assert abs(choquet(f, cap) - brute_choquet(f, cap)) <= 1e-12

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 6).flatmap(lambda n: st.tuples(vectors(n), finite, st.integers(0, 2**32))))
    def test_translation(self, args):
        f, c, seed = args
        cap = random_monotone_capacity(np.random.default_rng(seed), len(f))
        f = np.array(f)
        assert choquet(f + c, cap) == pytest.approx(choquet(f, cap) + c, abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 6).flatmap(lambda n: st.tuples(vectors(n), st.floats(0, 10), st.integers(0, 2**32))))
    def test_positive_homogeneity(self, args):
        f, a, seed = args
        cap = random_monotone_capacity(np.random.default_rng(seed), len(f))
        f = np.array(f)
        assert choquet(a * f, cap) == pytest.approx(a * choquet(f, cap), abs=1e-12)

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 8).flatmap(
        lambda n: st.tuples(vectors(n), st.lists(st.floats(0, 5), min_size=n, max_size=n),
                            st.integers(0, 2**32))))
    def test_monotonicity(self, args):
        f, bump, seed = args
        cap = random_monotone_capacity(np.random.default_rng(seed), len(f))
        f = np.array(f)
        g = f + np.array(bump)
        assert choquet(f, cap) <= choquet(g, cap) + 1e-12

    def test_additive_reduction(self):
        rng = np.random.default_rng(4)
        for n in range(1, 7):
            w = rng.dirichlet(np.ones(n))
            cap = additive_capacity(GroundSet.of_size(n), w)
            f = rng.normal(size=n)
            assert choquet(f, cap) == pytest.approx(float(f @ w), abs=1e-12)

    def test_tie_invariance(self):
        rng = np.random.default_rng(8)
        cap = random_monotone_capacity(rng, 5)
        base = np.array([0.3, 0.3, -1.0, 0.3, 2.0])
        ref = choquet(base, cap)
        # swapping tied entries leaves the vector identical; permute the
        # positions of the ties only
        for perm in ([1, 0, 2, 3, 4], [3, 1, 2, 0, 4], [0, 3, 2, 1, 4]):
            assert choquet(base[perm], cap) == ref
        assert choquet_listing(base, DEFAULT_G) == choquet_listing(base[[3, 1, 2, 0, 4]], DEFAULT_G)


class TestListing:
    def test_shared_value(self):
        assert choquet_listing([0.1, 0.1], DEFAULT_G) == pytest.approx(0.09241418199787566, abs=1e-15)

    def test_zero(self):
        assert choquet_listing([0.0, 0.0], DEFAULT_G) == 0.0
        assert choquet_listing([0.0, 0.0], lambda x: x ** 2) == 0.0

    def test_not_translation_covariant(self):
        d = 0.37
        g1 = DEFAULT_G(1.0)
        assert choquet_listing([d, d], DEFAULT_G) == pytest.approx(d * g1, abs=1e-15)
        assert choquet_listing([d, d], DEFAULT_G) != pytest.approx(d)
        base = choquet_listing([0.0, 0.0], DEFAULT_G)
        assert choquet_listing([d, d], DEFAULT_G) - base != pytest.approx(d)

    def test_ascending_rank_weights(self):
        # x sorted [1, 3]: 1 * g(1/2) + 3 * (g(1) - g(1/2))
        g = lambda x: x
        assert choquet_listing([3.0, 1.0], g) == pytest.approx(1 * 0.5 + 3 * 0.5)
        g = lambda x: x ** 2
        assert choquet_listing([3.0, 1.0], g) == pytest.approx(1 * 0.25 + 3 * 0.75)

    def test_differs_from_canonical_choquet(self):
        cap = Capacity(G2, "distorted", distortion=SigmoidDistortion(5.0, 0.5), anchor="raw")
        f = [-0.08, 0.01]
        assert choquet_listing(f, DEFAULT_G) != pytest.approx(choquet(f, cap), abs=1e-6)

    def test_non_finite(self):
        with pytest.raises(ValueError):
            choquet_listing([np.nan], DEFAULT_G)


class TestSugeno:
    def test_uniform_pair(self):
        assert sugeno([0.3, 0.8], make_uniform_capacity(G2)) == 0.5

    def test_constant(self):
        rng = np.random.default_rng(2)
        cap = random_monotone_capacity(rng, 4)
        assert sugeno([0.42] * 4, cap) == 0.42

    def test_zeros(self):
        assert sugeno([0.0] * 5, make_uniform_capacity(GroundSet.of_size(5))) == 0.0

    def test_against_enumeration(self):
        rng = np.random.default_rng(12)
        for n in range(1, 7):
            cap = random_monotone_capacity(rng, n)
            f = rng.random(n)
            v = cap.values()
            best = max(
                min(min(f[i] for i in range(n) if a >> i & 1), v[a]) for a in range(1, 1 << n)
            )
            assert sugeno(f, cap) == best

    def test_ground_mismatch(self):
        with pytest.raises(ValueError):
            sugeno([0.1, 0.2, 0.3], make_uniform_capacity(G2))
