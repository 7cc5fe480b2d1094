import itertools

import numpy as np
import pytest
from scipy import stats as sps

from bipmatch import (
    ConditioningFailed,
    DegreeSample,
    DistributionSpec,
    InvalidParameter,
    bipartite_gale_ryser,
    graphical_check,
    sample_conditioned,
)
from bipmatch._rand import make_rng


class TestDistributionSpec:
    def test_dirac_pmf(self):
        assert np.array_equal(DistributionSpec.dirac(3).pmf(), [0, 0, 0, 1])

    def test_poisson_pmf_matches_scipy_and_truncates(self):
        spec = DistributionSpec.poisson(3.0)
        pmf = spec.pmf()
        assert pmf.size >= 51
        ref = sps.poisson.pmf(np.arange(pmf.size), 3.0)
        # renormalization only redistributes the 1e-12 tail
        assert np.allclose(pmf, ref, atol=1e-12)
        assert abs(pmf.sum() - 1.0) < 1e-12
        assert 1.0 - sps.poisson.cdf(spec.truncation, 3.0) < 1e-12

    def test_explicit_pmf_must_normalize(self):
        DistributionSpec.explicit([0.25, 0.75])
        with pytest.raises(InvalidParameter):
            DistributionSpec.explicit([0.25, 0.25])

    def test_json_round_trip(self):
        for spec in (DistributionSpec.dirac(3),
                     DistributionSpec.poisson(2.5),
                     DistributionSpec.explicit([0.5, 0.25, 0.25])):
            assert DistributionSpec.from_json(spec.to_json()) == spec

    def test_json_examples(self):
        assert DistributionSpec.from_json({"kind": "dirac", "p": 3}).pmf()[3] == 1.0
        assert DistributionSpec.from_json({"kind": "poisson", "lambda": 3.0}).mean() == pytest.approx(3.0, abs=1e-9)
        assert DistributionSpec.from_json({"kind": "pmf", "probs": [0.5, 0.5]}).mean() == 0.5

    def test_token_parsing(self):
        assert DistributionSpec.parse("dirac:3") == DistributionSpec.dirac(3)
        assert DistributionSpec.parse("poisson:2.5") == DistributionSpec.poisson(2.5)
        assert DistributionSpec.parse("pmf:0.5,0.5") == DistributionSpec.explicit([0.5, 0.5])
        with pytest.raises(InvalidParameter):
            DistributionSpec.parse("zipf:2")

    def test_dirac_validation(self):
        with pytest.raises(InvalidParameter):
            DistributionSpec.dirac(-1)


class TestSampleConditioned:
    def test_degenerate_specs_accept_immediately(self):
        sample = sample_conditioned(DistributionSpec.dirac(3), DistributionSpec.dirac(3),
                                    n=4, rng=make_rng(0))
        assert sample.total == 12
        assert np.array_equal(sample.plus, [3, 3, 3, 3])
        assert np.array_equal(sample.minus, [3, 3, 3, 3])

    def test_impossible_conditioning_fails(self):
        with pytest.raises(ConditioningFailed):
            sample_conditioned(DistributionSpec.dirac(2), DistributionSpec.dirac(3),
                               n=5, rng=make_rng(0), max_attempts=50)

    def test_poisson_pair_statistics(self):
        spec = DistributionSpec.poisson(3.0)
        sample = sample_conditioned(spec, spec, n=1000, rng=make_rng(42))
        assert int(sample.plus.sum()) == int(sample.minus.sum())
        assert abs(sample.plus.mean() - 3.0) < 0.2
        assert abs(sample.minus.mean() - 3.0) < 0.2
        # independent inverse-cdf sampler as a statistical oracle
        rng = make_rng(42)
        oracle = np.searchsorted(np.cumsum(spec.pmf()), rng.random(1000))
        assert abs(oracle.mean() - sample.plus.mean()) < 0.2

    def test_reproducible_bit_for_bit(self):
        spec = DistributionSpec.poisson(2.0)
        a = sample_conditioned(spec, spec, n=500, rng=make_rng(7))
        b = sample_conditioned(spec, spec, n=500, rng=make_rng(7))
        assert np.array_equal(a.plus, b.plus) and np.array_equal(a.minus, b.minus)

    def test_n_must_be_positive(self):
        with pytest.raises(InvalidParameter):
            sample_conditioned(DistributionSpec.dirac(1), DistributionSpec.dirac(1),
                               n=0, rng=make_rng(0))


class TestGraphicalCheck:
    def test_realizable_two_by_two(self):
        check = graphical_check(DegreeSample(plus=[1, 1], minus=[2, 0]))
        assert check.multigraph_ok and check.simple_ok

    def test_degree_exceeding_side_size(self):
        check = graphical_check(DegreeSample(plus=[3, 3], minus=[3, 3]))
        assert check.multigraph_ok and not check.simple_ok

    def test_unequal_totals(self):
        check = graphical_check(DegreeSample(plus=[2, 1], minus=[2, 2]))
        assert not check.multigraph_ok and not check.simple_ok


def brute_force_realizable(n: int) -> set:
    """All degree-sequence pairs achieved by some simple bipartite graph."""
    achievable = set()
    cells = n * n
    for bits in range(1 << cells):
        matrix = np.array([(bits >> c) & 1 for c in range(cells)]).reshape(n, n)
        key = (tuple(sorted(matrix.sum(axis=1), reverse=True)),
               tuple(sorted(matrix.sum(axis=0), reverse=True)))
        achievable.add(key)
    return achievable


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_gale_ryser_agrees_with_brute_force(n):
    achievable = brute_force_realizable(n)
    for dp in itertools.product(range(4), repeat=n):
        for dm in itertools.product(range(4), repeat=n):
            if sum(dp) != sum(dm):
                assert not bipartite_gale_ryser(dp, dm)
                continue
            key = (tuple(sorted(dp, reverse=True)), tuple(sorted(dm, reverse=True)))
            assert bipartite_gale_ryser(dp, dm) == (key in achievable), (dp, dm)
