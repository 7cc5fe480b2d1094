import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bipmatch import PointMeasure


def running_example():
    # 2 atoms at 1, one at 2, one at 4
    return PointMeasure([0, 2, 1, 0, 1])


class TestMoments:
    def test_first_moment_of_running_example(self):
        assert running_example().moment("x") == 8.0

    def test_empty_measure_total_mass(self):
        assert PointMeasure.zero(5).moment("one") == 0.0

    def test_second_moment_of_scaled_dirac(self):
        n = 137
        mu = PointMeasure.dirac(3, mass=n)
        assert mu.moment("x2") == 9.0 * n

    def test_named_tags_match_callables(self):
        mu = running_example()
        assert mu.moment("one") == mu.moment(lambda k: 1)
        assert mu.moment("x") == mu.moment(lambda k: k)
        assert mu.moment("x2") == mu.moment(lambda k: k * k)
        assert mu.moment("positive") == mu.moment(lambda k: 1 if k >= 1 else 0)

    def test_total_mass_counts_atoms_with_multiplicity(self):
        assert running_example().total_mass == 4.0

    def test_unknown_tag_rejected(self):
        with pytest.raises(ValueError):
            running_example().moment("huh")


class TestAtoms:
    def test_add_atom_stacks_mass(self):
        assert PointMeasure.dirac(2).add_atom(2) == PointMeasure([0, 0, 2])

    def test_remove_atom(self):
        mu = PointMeasure([0, 2, 1])
        assert mu.remove_atom(1) == PointMeasure([0, 1, 1])

    def test_shift_pattern_on_dirac(self):
        # one unit moves from 3 down to 2
        assert PointMeasure.dirac(3).remove_atom(3).add_atom(2) == PointMeasure.dirac(2, size=4)

    def test_remove_from_empty_atom_is_an_error(self):
        with pytest.raises(ValueError):
            PointMeasure.dirac(2).remove_atom(1)

    def test_negative_masses_rejected(self):
        with pytest.raises(ValueError):
            PointMeasure([1.0, -0.5])


masses = st.lists(st.integers(min_value=0, max_value=9), min_size=1, max_size=8)


class TestProperties:
    @given(masses, st.integers(min_value=1, max_value=7))
    def test_shift_preserves_mass_and_drops_first_moment_by_one(self, m, a):
        mu = PointMeasure(m).add_atom(a)  # guarantee mass at a >= 1
        shifted = mu.remove_atom(a).add_atom(a - 1)
        assert shifted.total_mass == mu.total_mass
        assert shifted.first_moment == mu.first_moment - 1.0

    @given(masses, masses)
    def test_moment_is_linear_in_the_measure(self, m1, m2):
        mu1, mu2 = PointMeasure(m1), PointMeasure(m2)
        for phi in ("one", "x", "x2", "positive", lambda k: (k - 1) ** 2):
            assert (mu1 + mu2).moment(phi) == pytest.approx(
                mu1.moment(phi) + mu2.moment(phi), abs=1e-12)


class TestSerialization:
    def test_json_round_trip(self):
        mu = running_example()
        blob = json.dumps(mu.to_json())
        assert json.loads(blob) == {"masses": [0.0, 2.0, 1.0, 0.0, 1.0]}
        assert PointMeasure.from_json(blob) == mu

    def test_from_degrees(self):
        mu = PointMeasure.from_degrees([1, 1, 2, 4])
        assert mu == running_example()
        assert np.array_equal(PointMeasure.from_degrees([0, 0], size=3).masses, [2, 0, 0])
