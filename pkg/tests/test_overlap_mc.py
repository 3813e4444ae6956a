import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vbs_entropy import _fallback, kernels
from vbs_entropy.model import build_hexagonal_half, build_square_half, custom_graph
from vbs_entropy.overlap_mc import (
    EstimatorError,
    MCConfig,
    Method,
    OverlapEstimate,
    UnitVector,
    boundary_spinors,
    entropy,
    estimate_z,
    sample_sphere,
    spin_rotation,
)
from vbs_entropy.pauli import global_flip
from vbs_entropy.transfer import ladder_entropy, ladder_z_matrix, ladder_coefficients


def _within(val, exact, err, k=3.0):
    return abs(val - exact) <= k * err + 1e-12


def test_unit_vector_rejects_non_unit():
    with pytest.raises(ValueError):
        UnitVector(1.0, 1.0, 0.0)
    assert UnitVector(0.0, 0.0, 1.0).as_array().tolist() == [0.0, 0.0, 1.0]


def test_sample_sphere_moments():
    rng = np.random.default_rng(123)
    pts = np.array([sample_sphere(rng).as_array() for _ in range(200_000)])
    np.testing.assert_allclose(np.linalg.norm(pts, axis=1), 1.0, atol=1e-15)
    assert np.linalg.norm(pts.mean(axis=0)) < 0.005
    assert abs(np.mean(pts[:, 2] ** 2) - 1 / 3) < 0.002


@pytest.mark.slow
def test_sample_sphere_moments_million():
    rng = np.random.default_rng(5)
    pts = np.array([sample_sphere(rng).as_array() for _ in range(1_000_000)])
    assert np.linalg.norm(pts.mean(axis=0)) < 0.005
    assert abs(np.mean(pts[:, 2] ** 2) - 1 / 3) < 0.002


def test_uncoupled_boundary_gives_identity():
    g = custom_graph(1, [], [0])
    est = estimate_z(g, MCConfig(samples=800, batches=8))
    np.testing.assert_array_equal(est.mean, np.eye(2))
    res = entropy(est)
    assert res.spectrum.per_bond == pytest.approx(math.log(2), abs=1e-14)


@pytest.mark.parametrize(
    "graph, exact",
    [
        (build_square_half(1, 2), 0.6553433),
        (build_square_half(2, 2), 0.6498531),
        (build_hexagonal_half(1, 4), 0.6891577),
    ],
)
def test_estimate_matches_exact(graph, exact):
    est = estimate_z(graph, MCConfig(samples=400_000, batches=16, seed=3))
    res = entropy(est)
    assert _within(res.spectrum.per_bond, exact, res.per_bond_stderr)
    assert res.per_bond_stderr < 2e-3


def test_matrix_matches_exact_up_to_scale():
    g = build_square_half(1, 2)
    est = estimate_z(g, MCConfig(samples=400_000, batches=16, seed=9))
    z = ladder_z_matrix(ladder_coefficients("square", 2, 1))
    scale = np.trace(est.mean) / np.trace(z)
    assert np.all(np.abs(est.mean - scale * z) <= 5 * est.stderr + 1e-12)


def test_determinism_and_seed_dependence():
    g = build_square_half(2, 2)
    cfg = MCConfig(samples=32_000, batches=8, seed=42)
    a = estimate_z(g, cfg)
    b = estimate_z(g, cfg)
    c = estimate_z(g, MCConfig(samples=32_000, batches=8, seed=43))
    np.testing.assert_array_equal(a.mean, b.mean)
    np.testing.assert_array_equal(a.stderr, b.stderr)
    assert not np.array_equal(a.mean, c.mean)


def test_workers_do_not_change_result():
    g = build_hexagonal_half(1, 4)
    cfg = MCConfig(samples=24_000, batches=8, seed=1)
    np.testing.assert_array_equal(estimate_z(g, cfg).mean, estimate_z(g, cfg, workers=3).mean)


def test_rotation_invariance():
    g = build_square_half(1, 2)
    cfg = MCConfig(samples=200_000, batches=16, seed=4)
    a = estimate_z(g, cfg)
    b = estimate_z(g, cfg, rotation=((1.0, 2.0, -0.5), 1.1))
    bound = 5 * np.sqrt(a.stderr**2 + b.stderr**2) + 1e-12
    assert np.all(np.abs(a.mean - b.mean) <= bound)


def test_spin_rotation_consistency():
    r, u = spin_rotation((0.3, -1.0, 0.7), 0.8)
    np.testing.assert_allclose(r @ r.T, np.eye(3), atol=1e-14)
    n = np.array([0.1, 0.5, -0.2])
    sig = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]
    lhs = u @ sum(c * s for c, s in zip(n, sig)) @ u.conj().T
    rhs = sum(c * s for c, s in zip(r @ n, sig))
    np.testing.assert_allclose(lhs, rhs, atol=1e-14)


def test_spin_flip_commutation():
    g = build_square_half(2, 2)
    est = estimate_z(g, MCConfig(samples=64_000, batches=8, seed=2))
    f = global_flip(2)
    comm = np.abs(est.mean @ f - f @ est.mean)
    bound = 5 * np.sqrt(est.stderr**2 @ (f * f) + (f * f) @ est.stderr**2) + 1e-14
    assert np.all(comm <= bound)


def test_boundary_spinors_are_coherent_states():
    rng = np.random.default_rng(0)
    v = rng.standard_normal((50, 1, 3))
    v /= np.linalg.norm(v, axis=2, keepdims=True)
    pp, pm = boundary_spinors(v)
    psi = pp[0] + 1j * pp[1]
    chi = pm[0] + 1j * pm[1]
    sig = [np.array([[0, 1], [1, 0]]), np.array([[0, -1j], [1j, 0]]), np.array([[1, 0], [0, -1]])]
    for k in range(50):
        for comp, s in enumerate(sig):
            assert np.vdot(psi[k], s @ psi[k]).real == pytest.approx(v[k, 0, comp], abs=1e-12)
            assert np.vdot(chi[k], s @ chi[k]).real == pytest.approx(-v[k, 0, comp], abs=1e-12)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(batches=4, samples=400),
        dict(batches=8, samples=401),
        dict(samples=0, batches=8),
        dict(seed=-1),
        dict(method="metropolis", step_angle=0.0),
        dict(method="metropolis", thinning=0),
    ],
)
def test_config_guards(kwargs):
    with pytest.raises(ValueError):
        MCConfig(**kwargs)


def test_boundary_limit():
    g = build_square_half(1, 15)
    with pytest.raises(ValueError, match="exceeds"):
        estimate_z(g, MCConfig(samples=800, batches=8))


def test_invalid_graph_rejected():
    from vbs_entropy.model import SymmetricGraph

    bad = SymmetricGraph((0, 1), ((0, 0),), (0,), {0: 2, 1: 1})
    with pytest.raises(ValueError):
        estimate_z(bad, MCConfig(samples=800, batches=8))


def test_metropolis_acceptance_guard():
    g = build_square_half(1, 2)
    cfg = MCConfig(samples=8_000, batches=8, method=Method.METROPOLIS, step_angle=0.01, burn_in=10)
    with pytest.raises(EstimatorError, match="acceptance"):
        estimate_z(g, cfg)


def test_metropolis_agrees_with_uniform():
    g = build_square_half(1, 2)
    cfg = MCConfig(samples=160_000, batches=16, seed=8, method="metropolis", step_angle=1.2)
    est = estimate_z(g, cfg)
    assert 0.05 <= est.acceptance <= 0.95
    res = entropy(est)
    assert _within(res.spectrum.per_bond, ladder_entropy("square", 2, 1).per_bond, 2 * res.per_bond_stderr)


def test_config_json_round_trip():
    cfg = MCConfig(samples=1600, batches=16, seed=7, method="metropolis", step_angle=0.9)
    assert MCConfig.from_json(json.loads(json.dumps(cfg.to_json()))) == cfg


def test_estimate_json_round_trip():
    g = build_square_half(1, 2)
    est = estimate_z(g, MCConfig(samples=8_000, batches=8, seed=5))
    back = OverlapEstimate.from_json(json.loads(json.dumps(est.to_json())))
    np.testing.assert_array_equal(back.mean, est.mean)
    np.testing.assert_array_equal(back.stderr, est.stderr)
    np.testing.assert_array_equal(back.batch_means, est.batch_means)
    assert entropy(back).entropy_stderr == pytest.approx(entropy(est).entropy_stderr, rel=1e-12)


@pytest.mark.skipif(kernels.BACKEND != "compiled", reason="extension not built")
@settings(max_examples=10, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_compiled_uniform_chunk_matches_fallback(seed):
    g = build_square_half(2, 2)
    rng = np.random.default_rng(seed)
    u = rng.random((37, 2 * g.n_vertices))
    bonds = np.asarray(g.bonds, dtype=np.int32)
    boundary = np.asarray(g.boundary, dtype=np.int32)
    got = kernels.weighted_uniform_chunk(u, bonds, boundary)
    want = _fallback.weighted_uniform_chunk(u, bonds, boundary)
    for a, b in zip(got, want):
        np.testing.assert_allclose(a, b, rtol=1e-12, atol=1e-14)


@pytest.mark.skipif(kernels.BACKEND != "compiled", reason="extension not built")
def test_compiled_metropolis_chunk_matches_fallback():
    g = build_hexagonal_half(1, 4)
    offsets, neighbors = g.adjacency()
    boundary = np.asarray(g.boundary, dtype=np.int32)
    rng = np.random.default_rng(11)
    state = rng.standard_normal((g.n_vertices, 3))
    state /= np.linalg.norm(state, axis=1, keepdims=True)
    u = rng.random((g.n_vertices * 20, 3))
    s1, s2 = state.copy(), state.copy()
    p1, a1 = kernels.metropolis_chunk(s1, offsets, neighbors, boundary, u, math.cos(0.7), 1)
    p2, a2 = _fallback.metropolis_chunk(s2, offsets, neighbors, boundary, u, math.cos(0.7), 1)
    assert a1 == a2
    np.testing.assert_allclose(p1, p2, atol=1e-12)
    np.testing.assert_allclose(s1, s2, atol=1e-12)
