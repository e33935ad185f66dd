import math

import numpy as np
import pytest

import stochtr


def test_catalog_and_ids():
    assert "sign" in stochtr.catalog()
    assert "meanreg" in stochtr.experiments()


def test_paths_are_seeded():
    a = stochtr.brownian_path(7, 32)
    b = stochtr.brownian_path(7, 32)
    assert a.shape == (33,)
    assert a[0] == 0.0
    assert np.array_equal(a, b)
    assert stochtr.brownian_path(3, 8, dim=2).shape == (9, 2)


def test_exponential_has_mean_one():
    mean, se = stochtr.exponential_means("switch", 16, paths=20000, seed=5)
    assert mean.shape == (17,)
    assert np.all(np.abs(mean - 1.0) <= 4.0 * se + 1e-15)


def test_constants_are_transported():
    x, u = stochtr.transport("sign", "const:1", steps=16)
    assert u.shape == (17, x.size)
    assert np.allclose(u, 1.0)


def test_monte_carlo_agrees_with_solver():
    mc = stochtr.estimate_mean("ou", control="one", cells=64, steps=32, paths=2000, seed=3)
    pde = stochtr.solve_mean_equation("ou", control="one", cells=64, steps=32)
    last = mc["steps"][-1]
    gap = np.abs(mc["values"][-1] - pde["values"][last])
    assert np.all(gap <= 4.0 * mc["errors"][-1] + 0.05)
    assert pde["max_principle_ok"]
    assert pde["energy_constant"] <= pde["predicted_constant"]


def test_commutator_ladder_decays():
    rows = stochtr.commutator_ladder("ou", ladder=[0.2, 0.1, 0.05])
    assert [w for w, _ in rows] == [0.2, 0.1, 0.05]
    assert rows[-1][1] <= 0.5 * rows[0][1]


def test_config_roundtrip_and_errors():
    text = stochtr.default_config("selection")
    assert len(stochtr.config_hash(text)) == 16
    with pytest.raises(stochtr.ConfigError):
        stochtr.run_experiment("commutator-suite", {"grid.cellz": "1"})


def test_verdict_is_a_dict():
    v = stochtr.run_experiment("commutator-suite", {"commutator.ladder": "0.2,0.1,0.05"})
    assert v["experiment"] == "commutator-suite"
    assert all(math.isfinite(a["measured"]) for a in v["assertions"])
