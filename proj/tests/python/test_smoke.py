import json

import numpy as np
import pytest

import nilflow


def test_version():
    assert nilflow.__version__ == "0.1.0"


def test_heisenberg_product_and_inverse():
    spec = nilflow.zoo("heisenberg")
    assert (spec.m, spec.n, spec.step) == (2, 1, 2)
    g = np.array([1.0, 0.0, 0.0])
    h = np.array([0.0, 1.0, 0.0])
    np.testing.assert_allclose(nilflow.multiply(spec, g, h), [1.0, 1.0, 0.5])
    x = np.array([0.3, -0.7, 1.1])
    np.testing.assert_allclose(nilflow.multiply(spec, x, nilflow.inverse(spec, x)), 0.0, atol=1e-15)


def test_json_round_trip_and_validation():
    spec = nilflow.zoo("step3", m=3)
    again = nilflow.ExtensionSpec.from_json(spec.to_json())
    assert again.hash() == spec.hash()
    rep = nilflow.validate(spec)
    assert rep["passed"]


def test_broken_spec_names_check():
    doc = json.loads(nilflow.zoo("heisenberg").to_json())
    doc["omega"][1][0][0] = 0.3
    rep = nilflow.validate(nilflow.ExtensionSpec.from_json(json.dumps(doc)))
    assert not rep["passed"]
    failed = [c["name"] for c in rep["checks"] if not c["passed"]]
    assert "skewness" in failed


def test_ricci_heisenberg():
    r = nilflow.ricci(nilflow.zoo("heisenberg"))
    np.testing.assert_allclose(sorted(r["eigenvalues"]), [-0.5, -0.5, 0.5], atol=1e-12)
    assert r["k_p"] == pytest.approx(-0.5)


def test_simulate_engines_agree_pathwise():
    spec = nilflow.zoo("beta5")
    a = nilflow.simulate(spec, steps=8, trials=20, seed=3)
    b = nilflow.simulate(spec, steps=8, trials=20, seed=3, engine="signature", threads=2)
    assert a.shape == (20, spec.dim)
    np.testing.assert_allclose(a, b, atol=1e-9)


def test_verify_is_deterministic():
    spec = nilflow.zoo("heisenberg")
    r1 = nilflow.verify(spec, "inversion", trials=400, steps=16, seed=5)
    r2 = nilflow.verify(spec, "inversion", trials=400, steps=16, seed=5, threads=2)
    assert r1 == r2
    assert r1["verdict"] in ("pass", "inconclusive")


def test_shape_errors_raise_value_error():
    spec = nilflow.zoo("heisenberg")
    with pytest.raises(ValueError):
        nilflow.multiply(spec, np.zeros(2), np.zeros(3))
