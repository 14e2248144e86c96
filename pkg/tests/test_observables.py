"""Observable dictionaries: sizes, lifting, Jacobians, serialization.

The log dictionary is the workhorse: per node it carries the scaled linear
entry x_i/C and one log(1 + (x_i/C)^p) entry per power, plus one shared
constant.  The polynomial dictionary enumerates deduplicated monomials up to
a total structure of two nodes; the identity dictionary is plain DMD.
"""

import itertools
import json
import math

import numpy as np
import pytest

from koopnet import (
    ObservableSpec,
    build_spec,
    check_scale,
    identity_spec,
    lift,
    lift_jacobian,
    lift_trajectory,
    log_spec,
    poly_spec,
    spec_from_json,
    spec_to_json,
    unlift,
    unlift_trajectory,
)
from koopnet.observables import spec_from_dict, spec_to_dict


# =========================================================================
# Dictionary sizes
# =========================================================================

def test_log_size_formula():
    # 1 + n * (1 + #powers)
    assert log_spec(50, powers=(1, 2)).size == 151
    assert log_spec(1, powers=(1,)).size == 3
    assert log_spec(10, powers=(1, 2, 3)).size == 41


def test_identity_size_is_n():
    spec = identity_spec(7)
    assert spec.size == 7
    x = np.arange(7.0)
    assert np.array_equal(lift(spec, x), x)


def _poly_monomial_count(n, d):
    """Independent enumeration of x_i^a * x_j^b up to deduplication."""
    seen = set()
    for a in range(d + 1):
        for b in range(d + 1):
            for i, j in itertools.product(range(n), range(n)):
                # normalize: drop zero-power factors, merge same-node powers
                expo = {}
                for node, p in ((i, a), (j, b)):
                    if p:
                        expo[node] = expo.get(node, 0) + p
                if expo:
                    seen.add(tuple(sorted(expo.items())))
    return 1 + len(seen)


def test_poly_size_matches_enumeration():
    for n, d in ((4, 1), (4, 2), (10, 2), (6, 3)):
        assert poly_spec(n, max_power=d).size == _poly_monomial_count(n, d)


def test_poly_size_grows_quadratically():
    # at n = 10, d = 2 the dictionary dwarfs both the state and the log grid
    spec = poly_spec(10, max_power=2)
    assert spec.size == 221
    assert spec.size > 100
    for n in (10, 14, 20):
        assert poly_spec(n, max_power=2).size > n * n / 2


def test_build_spec_dispatch():
    assert build_spec("log", 5).kind == "log"
    assert build_spec("poly", 5).kind == "poly"
    assert build_spec("identity", 5).kind == "identity"
    with pytest.raises(ValueError):
        build_spec("fourier", 5)


def test_spec_parameter_validation():
    with pytest.raises(ValueError):
        log_spec(3, scale=0.0)
    with pytest.raises(ValueError):
        log_spec(3, powers=())
    with pytest.raises(ValueError):
        log_spec(3, powers=(1, 1))
    with pytest.raises(ValueError):
        poly_spec(3, max_power=0)
    with pytest.raises(ValueError):
        identity_spec(0)


# =========================================================================
# Lifting
# =========================================================================

def test_lift_at_origin():
    spec = log_spec(1, scale=500.0, powers=(1, 2))
    z = lift(spec, np.array([0.0]))
    assert np.array_equal(z, [1.0, 0.0, 0.0, 0.0])


def test_lift_at_the_scale_point():
    spec = log_spec(1, scale=500.0, powers=(1, 2))
    z = lift(spec, np.array([500.0]))
    assert z == pytest.approx([1.0, 1.0, math.log(2.0), math.log(2.0)])


def test_log_entries_linearize_products():
    # log(1+u) + log(1+v) = log(1 + u + v + uv): sums of log observables
    # capture the pairwise product that the raw states hide
    spec = log_spec(2, scale=1.0, powers=(1,))
    z = lift(spec, np.array([0.01, 0.01]))
    logs = z[2] + z[4]
    u = v = 0.01
    assert logs == pytest.approx(math.log(1.0 + u + v + u * v), abs=1e-15)
    # for small states the sum is the linear+product combination itself,
    # up to second-order terms ~ (u + v)^2 / 2
    assert abs(logs - (u + v)) < 1.1e-4
    assert abs(logs - (u + v + u * v)) < 2.1e-4


def test_lift_round_trip_is_exact():
    rng = np.random.default_rng(0)
    spec = log_spec(12, scale=500.0, powers=(1, 2))
    x = rng.uniform(0.0, 100.0, size=(12, 7))
    z = lift_trajectory(spec, x)
    back = unlift_trajectory(spec, z)
    assert np.allclose(back, x, rtol=1e-12, atol=1e-12)


def test_unlift_reads_the_scaled_linear_entries():
    spec = log_spec(3, scale=500.0, powers=(1, 2))
    z = np.ones(spec.size)
    z[spec.linear_indices] = [0.2, 0.4, 0.6]
    assert np.allclose(unlift(spec, z), [100.0, 200.0, 300.0])


def test_poly_lift_matches_direct_monomials():
    rng = np.random.default_rng(3)
    spec = poly_spec(4, max_power=2)
    x = rng.uniform(0.5, 2.0, size=4)
    z = lift(spec, x)
    for m, term in enumerate(spec.terms):
        expected = 1.0
        for node, power in term.exponents:
            expected *= x[node] ** power
        assert z[m] == pytest.approx(expected, rel=1e-12)


def test_ownership_is_local():
    # perturbing node j moves only the entries owned by j
    spec = log_spec(6, scale=500.0, powers=(1, 2))
    x = np.full(6, 3.0)
    z0 = lift(spec, x)
    x[2] += 1.0
    z1 = lift(spec, x)
    changed = set(np.nonzero(z1 != z0)[0])
    owned = {m for m in range(spec.size) if spec.owners(m) == (2,)}
    assert changed == owned
    assert all(spec.owners(m) == () for m in (0,))  # the constant has no owner


def test_lift_domain_violation_names_node_and_power():
    spec = log_spec(3, scale=500.0, powers=(1, 2))
    x = np.array([1.0, -1000.0, 1.0])
    with pytest.raises(ValueError) as err:
        lift(spec, x)
    assert "node 1" in str(err.value)
    assert "**1" in str(err.value)


def test_lift_shape_errors():
    spec = log_spec(3)
    with pytest.raises(ValueError):
        lift(spec, np.zeros(4))
    with pytest.raises(ValueError):
        lift_trajectory(spec, np.zeros((4, 5)))
    with pytest.raises(ValueError):
        unlift_trajectory(spec, np.zeros((5, 2)))


# =========================================================================
# Jacobian
# =========================================================================

def test_jacobian_rows_at_origin():
    spec = log_spec(2, scale=500.0, powers=(1, 2))
    jac = lift_jacobian(spec, np.zeros(2))
    assert jac.shape == (spec.size, 2)
    assert np.array_equal(jac[0], [0.0, 0.0])          # constant
    assert np.allclose(jac[1], [1.0 / 500.0, 0.0])     # x_0 / C
    # d/dx log(1 + u) = 1/C at u=0 for p=1; = 0 for p=2
    assert np.allclose(jac[2], [1.0 / 500.0, 0.0])
    assert np.allclose(jac[3], [0.0, 0.0])


def _fd_jacobian(spec, x, h=1e-6):
    cols = []
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        cols.append((lift(spec, x + e) - lift(spec, x - e)) / (2.0 * h))
    return np.column_stack(cols)


@pytest.mark.parametrize("factory,low,high", [
    (lambda: log_spec(5, scale=500.0, powers=(1, 2)), 0.5, 90.0),
    (lambda: poly_spec(5, max_power=2), 0.5, 2.0),
    (lambda: identity_spec(5), -3.0, 3.0),
])
def test_jacobian_matches_central_differences(factory, low, high):
    rng = np.random.default_rng(8)
    spec = factory()
    for _ in range(5):
        x = rng.uniform(low, high, size=5)
        jac = lift_jacobian(spec, x)
        fd = _fd_jacobian(spec, x)
        scale = np.abs(fd).max()
        assert np.abs(jac - fd).max() < 1e-5 * max(scale, 1.0)


def test_jacobian_rejects_bad_state():
    spec = log_spec(3)
    with pytest.raises(ValueError):
        lift_jacobian(spec, np.zeros(2))
    with pytest.raises(ValueError):
        lift_jacobian(spec, np.array([1.0, np.nan, 0.0]))


# =========================================================================
# Scale advisory and serialization
# =========================================================================

def test_check_scale_warns_past_headroom():
    spec = log_spec(2, scale=500.0)
    quiet = np.full((2, 4), 50.0)
    with np.errstate(all="raise"):
        assert check_scale(spec, quiet) == pytest.approx(0.1)
    loud = np.full((2, 4), 200.0)
    with pytest.warns(UserWarning, match="headroom"):
        ratio = check_scale(spec, loud)
    assert ratio == pytest.approx(0.4)


def test_check_scale_ignores_non_log_dictionaries():
    assert check_scale(poly_spec(2), np.full((2, 3), 1e6)) == 0.0


def test_spec_json_round_trip():
    for spec in (log_spec(4, scale=250.0, powers=(1, 3)),
                 poly_spec(3, max_power=2),
                 identity_spec(5)):
        back = spec_from_json(spec_to_json(spec))
        assert back == spec
        assert back.size == spec.size
        # dict form is plain JSON data
        d = spec_to_dict(spec)
        assert json.loads(json.dumps(d)) == d
        assert spec_from_dict(d) == spec
