import math

import numpy as np
import pytest

from pdcornet.datagen import (
    CONDITION_FIELDS,
    FORMS,
    DGPSpec,
    GridLevels,
    condition_grid,
    generate,
)
from pdcornet.errors import InvalidInputError

ZERO_BETAS = dict(beta_non=0.0, beta_lin=0.0, beta_con=0.0, beta_ab=0.0)


def big(**kw):
    return DGPSpec(n=10_000, seed=kw.pop("seed", 1), **kw)


class TestGenerate:
    def test_columns_and_lengths(self):
        d3 = generate(DGPSpec(n=50))
        d4 = generate(DGPSpec(network_size=4, n=50))
        assert list(d3) == ["A", "B", "C"]
        assert list(d4) == ["A", "B", "C", "D"]
        assert all(v.shape == (50,) and np.isfinite(v).all() for v in d4.values())

    def test_all_betas_zero_gives_noise_mean(self):
        data = generate(big(mu_c=5.0, **ZERO_BETAS))
        assert abs(data["C"].mean() - 5.0) < 4 / math.sqrt(10_000)

    def test_beta_ab_zero_independent(self):
        data = generate(big(beta_ab=0.0))
        assert abs(np.corrcoef(data["A"], data["B"])[0, 1]) < 0.05

    def test_quadratic_has_no_linear_trace(self):
        data = generate(big(ac_form="quadratic"))
        a, c = data["A"], data["C"]
        assert abs(np.corrcoef(a, c)[0, 1]) < 0.05
        assert np.corrcoef(a * a, c)[0, 1] > 0.8

    def test_variance_of_a(self):
        data = generate(big(sigma_a=2.0))
        assert data["A"].var() == pytest.approx(4.0, rel=0.05)

    def test_regression_recovers_beta_ab(self):
        data = generate(big(beta_ab=1.0))
        slope = np.polyfit(data["A"], data["B"], 1)[0]
        assert abs(slope - 1.0) < 0.05

    def test_structural_equations(self):
        spec = DGPSpec(network_size=4, ac_form="interaction", ad_form="logarithmic", n=30,
                       beta_non=2.0, beta_lin=0.5, beta_con=-1.0, beta_ab=0.7, beta_ad=1.5,
                       beta_non2=-0.5, beta_con2=0.25, seed=3)
        d = generate(spec)
        zero = generate(DGPSpec(network_size=4, n=30, seed=3, ac_form="interaction",
                                ad_form="logarithmic", beta_non=0.0, beta_non2=0.0,
                                beta_con2=0.0))
        a, b = d["A"], d["B"]
        eps, gamma, nu = zero["B"], zero["D"], zero["C"]
        np.testing.assert_allclose(b, 0.7 * a + eps, atol=1e-12)
        np.testing.assert_allclose(d["D"], -0.5 * np.log(np.abs(a)) + 1.5 * a + gamma, atol=1e-12)
        expected_c = 2.0 * a * b + 0.5 * a - 1.0 * b + 0.25 * d["D"] + nu
        np.testing.assert_allclose(d["C"], expected_c, atol=1e-12)

    def test_deterministic(self):
        spec = DGPSpec(network_size=4, ac_form="logarithmic", n=100, seed=17)
        a, b = generate(spec), generate(spec)
        assert all(np.array_equal(a[k], b[k]) for k in a)
        c = generate(spec.with_seed(18))
        assert not np.array_equal(a["A"], c["A"])

    def test_three_node_nested_in_four_node(self):
        kw = dict(n=200, beta_ab=1.0, seed=5)
        d3 = generate(DGPSpec(**kw))
        d4 = generate(DGPSpec(network_size=4, **kw))
        assert np.array_equal(d3["A"], d4["A"])
        assert np.array_equal(d3["B"], d4["B"])

    @pytest.mark.parametrize("field,value", [
        ("network_size", 5), ("ac_form", "cubic"), ("n", 0), ("sigma_b", 0.0), ("n", 2.5),
    ])
    def test_invalid_spec(self, field, value):
        with pytest.raises(InvalidInputError):
            DGPSpec(**{field: value})


class TestCondition:
    def test_three_node_ignores_four_node_fields(self):
        a = DGPSpec(beta_ad=1.0, mu_d=3.0, seed=1)
        b = DGPSpec(seed=2)
        assert a.condition() == b.condition()
        assert tuple(a.condition()) == CONDITION_FIELDS
        assert "seed" not in a.condition()


class TestConditionGrid:
    def test_three_node_count(self):
        assert len(condition_grid(3)) == 288

    def test_four_node_count_and_levels(self):
        grid = condition_grid(4)
        assert len(grid) == 3 * 3 * 2 * 2 ** 4
        assert all(s.beta_non == 1.0 for s in grid)
        assert all(s.mu_a == s.mu_b == s.mu_c == s.mu_d == 0.0 for s in grid)
        assert all(s.beta_non2 == 1.0 and s.beta_con2 == 1.0 for s in grid)

    def test_shared_mean_and_forms(self):
        grid = condition_grid(3)
        assert all(s.mu_a == s.mu_b == s.mu_c for s in grid)
        assert {s.ac_form for s in grid} == set(FORMS)
        assert {s.mu_a for s in grid} == {0.0, 5.0, 10.0}
        assert {s.beta_non for s in grid} == {-1.0, 1.0}

    def test_distinct_and_deterministic(self):
        a, b = condition_grid(3), condition_grid(3)
        assert a == b
        assert len({tuple(s.condition().items()) for s in a}) == len(a)

    def test_invalid_size(self):
        with pytest.raises(InvalidInputError):
            condition_grid(5)

    def test_mu_sets_override(self):
        levels = GridLevels(ac_forms=("quadratic",), n=(200,), mu_sets=((10, 0, 10),),
                            beta_lin=(0.0,), beta_con=(0.0,), beta_ab=(0.0,))
        (cell,) = list(levels.cells())
        assert (cell.mu_a, cell.mu_b, cell.mu_c) == (10.0, 0.0, 10.0)

    def test_mu_sets_wrong_length(self):
        with pytest.raises(InvalidInputError):
            list(GridLevels(mu_sets=((0, 0),)).cells())
