import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nvvortex.errors import ObjectiveNotFinite
from nvvortex.simplex import NelderMeadResult, SimplexSettings, nelder_mead


def quadratic_bowl(x):
    return float(np.sum((np.asarray(x) - 3.0) ** 2))


def rosenbrock(x):
    return float(100.0 * (x[1] - x[0] ** 2) ** 2 + (1.0 - x[0]) ** 2)


class TestSettings:
    @pytest.mark.parametrize(
        "kwargs",
        [
            {"reflection": 0.0},
            {"expansion": 1.0},
            {"contraction": 1.0},
            {"contraction": 0.0},
            {"shrink": 1.5},
            {"max_iterations": 0},
        ],
    )
    def test_invalid_coefficients_rejected(self, kwargs):
        with pytest.raises(ValueError):
            SimplexSettings(**kwargs)


class TestMinimization:
    def test_quadratic_bowl(self):
        # f-spread ~ |x - 3|^2, so pin convergence on the x criterion
        settings = SimplexSettings(x_tolerance=1e-8, f_tolerance=1e-18)
        result = nelder_mead(quadratic_bowl, np.zeros(3), settings)
        assert np.abs(result.x - 3.0).max() < 1e-6
        assert result.converged

    def test_rosenbrock(self):
        settings = SimplexSettings(max_iterations=5000, x_tolerance=1e-9,
                                   f_tolerance=1e-14)
        result = nelder_mead(rosenbrock, np.array([-1.2, 1.0]), settings)
        assert np.abs(result.x - 1.0).max() < 1e-4

    def test_nonsmooth_absolute_value(self):
        result = nelder_mead(lambda x: abs(float(x[0])), np.array([1.7]))
        assert abs(result.x[0]) < 1e-6

    def test_budget_exhaustion_is_flagged_not_raised(self):
        settings = SimplexSettings(max_iterations=3)
        result = nelder_mead(quadratic_bowl, np.zeros(4), settings)
        assert isinstance(result, NelderMeadResult)
        assert not result.converged
        assert result.iterations == 3

    def test_nan_objective_raises(self):
        with pytest.raises(ObjectiveNotFinite):
            nelder_mead(lambda x: float("nan"), np.zeros(2))

    def test_inf_objective_raises_mid_run(self):
        def spiky(x):
            if x[0] < -0.5:
                return float("inf")
            return float(x[0] ** 2)

        with pytest.raises(ObjectiveNotFinite):
            nelder_mead(spiky, np.array([0.4]), initial_step=[2.0])

    def test_deterministic(self):
        a = nelder_mead(rosenbrock, np.array([-1.2, 1.0]))
        b = nelder_mead(rosenbrock, np.array([-1.2, 1.0]))
        assert np.array_equal(a.x, b.x) and a.fun == b.fun

    @given(
        st.lists(st.floats(-5.0, 5.0), min_size=1, max_size=4),
        st.lists(st.floats(-3.0, 3.0), min_size=4, max_size=4),
    )
    @settings(max_examples=40)
    def test_never_worse_than_start(self, start, target):
        start = np.asarray(start)
        center = np.asarray(target[: start.size])

        def f(x):
            return float(np.sum((x - center) ** 2))

        result = nelder_mead(f, start, SimplexSettings(max_iterations=50))
        assert result.fun <= f(start) + 1e-15

    def test_custom_initial_step_respected(self):
        result = nelder_mead(quadratic_bowl, np.zeros(2), initial_step=[3.0, 3.0])
        assert np.abs(result.x - 3.0).max() < 1e-6

    def test_zero_initial_step_rejected(self):
        with pytest.raises(ValueError):
            nelder_mead(quadratic_bowl, np.zeros(2), initial_step=[0.0, 1.0])
