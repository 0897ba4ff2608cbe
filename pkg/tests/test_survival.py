import math

import numpy as np
import pytest

from string_sausage.geometry import PointCloud, bounding_box
from string_sausage.rng import ENV, substream
from string_sausage.simulate import simulate
from string_sausage.spectral import ModelParams
from string_sausage.survival import (
    ResolutionError,
    annealed_hard,
    annealed_soft,
    environment_for_cloud,
    quenched,
    resolution_doubling_report,
    scaled_unit_params,
    scaling_check,
    scaling_transform,
    survive_hard_once,
)
from string_sausage.traps import (
    Box,
    GridIndex,
    PoissonEnvironment,
    PotentialKind,
    PotentialSpec,
    sample_environment,
)


def params(**kw):
    defaults = dict(d=2, K=8, M=32, dt=0.1, T=0.5, nu=1.0, a=0.3, eps_tail=5e-3)
    defaults.update(kw)
    return ModelParams(**defaults)


def make_env(points, lo, hi, nu=1.0, cell=0.3):
    pts = np.asarray(points, float)
    box = Box(np.asarray(lo, float), np.asarray(hi, float))
    return PoissonEnvironment(pts.reshape(-1, box.d), box, nu, GridIndex(pts, cell))


def test_survive_hard_once_contact():
    cloud = PointCloud(np.array([[0.0, 0.0], [1.0, 0.0]]))
    env_far = make_env([[3.0, 3.0]], [-2, -2], [4, 4])
    env_near = make_env([[0.1, 0.0]], [-2, -2], [4, 4])
    assert survive_hard_once(cloud, env_far, a=0.3)
    assert not survive_hard_once(cloud, env_near, a=0.3)


def test_survive_hard_once_coverage_guard():
    cloud = PointCloud(np.array([[0.0, 0.0], [5.0, 0.0]]))
    env = make_env([[0.5, 0.5]], [-1, -1], [1, 1])
    with pytest.raises(ResolutionError):
        survive_hard_once(cloud, env, a=0.3)
    assert not survive_hard_once(cloud, env, a=0.8, require_cover=False)


def test_environment_for_cloud_covers_padded_box():
    p = params()
    cloud = simulate(p, 3).cloud()
    env = environment_for_cloud(cloud, p.nu, p.a, substream(3, ENV, 0))
    padded = bounding_box(cloud, p.a)
    assert np.all(env.box.lower <= padded.lower)
    assert np.all(env.box.upper >= padded.upper)


def test_annealed_zero_intensity_survives():
    p = params(nu=0.0)
    est = annealed_hard(p, 100, seed=1, workers=1)
    assert est.p_hat == 1.0
    assert est.stderr == 0.0


def test_annealed_T_zero_is_one():
    p = params(T=0.0)
    for method in ("hard_direct", "hard_via_volume"):
        est = annealed_hard(p, 100, seed=1, method=method, workers=1)
        assert est.p_hat == 1.0


def test_annealed_needs_replicas_and_known_method():
    p = params()
    with pytest.raises(ValueError):
        annealed_hard(p, 50, seed=1)
    with pytest.raises(ValueError):
        annealed_hard(p, 100, seed=1, method="bogus")


def test_annealed_hard_monotone_in_intensity():
    lo = annealed_hard(params(nu=0.05), 150, seed=5, workers=1)
    hi = annealed_hard(params(nu=1.5), 150, seed=5, workers=1)
    assert lo.p_hat >= hi.p_hat


def test_soft_zero_height_survives():
    p = params()
    spec = PotentialSpec(PotentialKind.SOFT_INDICATOR, a=p.a, height=0.0)
    est = annealed_soft(p, spec, 100, seed=2, workers=1)
    assert est.p_hat == 1.0


def test_soft_below_hard_at_large_height():
    """exp(-large occupation) <= contact indicator replica by replica, so the
    soft estimate cannot exceed hard survival by more than MC noise."""
    p = params()
    spec = PotentialSpec(PotentialKind.SOFT_INDICATOR, a=p.a, height=50.0)
    soft = annealed_soft(p, spec, 150, seed=3, workers=1)
    hard = annealed_hard(p, 150, seed=3, workers=1)
    assert soft.p_hat <= hard.p_hat + 4 * (soft.stderr + hard.stderr) + 1e-9


def test_soft_requires_soft_spec():
    p = params()
    with pytest.raises(ValueError):
        annealed_soft(p, PotentialSpec(PotentialKind.HARD, a=0.3), 100, seed=1)


def test_quenched_empty_environment():
    p = params()
    env = make_env(np.empty((0, 2)), [-5, -5], [5, 5])
    est = quenched(p, env, 100, seed=4, workers=1)
    assert est.p_hat == 1.0


def test_quenched_dense_environment_kills():
    p = params()
    grid = np.stack(np.meshgrid(np.linspace(-3, 3, 25), np.linspace(-3, 3, 25)), axis=-1)
    env = make_env(grid.reshape(-1, 2), [-3.5, -3.5], [3.5, 3.5])
    est = quenched(p, env, 100, seed=4, workers=1)
    assert est.p_hat == 0.0


def test_scaling_transform_values():
    p = params(J=2.0, nu=1.0, a=0.3, T=1.0, d=2)
    s = scaling_transform(p)
    assert abs(s.T_tilde - 0.25) < 1e-15
    assert abs(s.nu_tilde - 2.0) < 1e-15
    assert abs(s.a_tilde - 0.3 / math.sqrt(2.0)) < 1e-15
    assert abs(s.H_scale - 8.0) < 1e-15


def test_scaled_unit_params_are_exact_images():
    """With the same seed the scaled run is the exact diffusive image of the
    original: u~(t~, x~) = u(J^2 t~, J x~) / sqrt(J) at every sample point."""
    p = params(J=4.0, dt=0.08, T=0.4, M=32, K=8)
    q = scaled_unit_params(p)
    assert q.n_steps == p.n_steps
    tr_p = simulate(p, 99)
    tr_q = simulate(q, 99)
    np.testing.assert_allclose(tr_q.values, tr_p.values / math.sqrt(p.J), atol=1e-12)


def test_scaling_check_runs_and_overlaps():
    p = params(J=2.0, nu=0.25, a=0.2, T=0.5)
    rep = scaling_check(p, 150, seed=6, workers=1)
    assert rep.overlap
    assert rep.original.n_replicas == rep.scaled.n_replicas == 150


def test_resolution_doubling_report_runs():
    p = params(nu=0.3)
    coarse, fine = resolution_doubling_report(p, 100, seed=8, workers=1)
    assert 0.0 <= coarse.p_hat <= 1.0
    assert 0.0 <= fine.p_hat <= 1.0
    assert fine.params.M == 2 * p.M


def test_parallel_merge_is_order_independent():
    p = params()
    serial = annealed_hard(p, 120, seed=9, workers=1)
    parallel = annealed_hard(p, 120, seed=9, workers=3)
    assert serial.p_hat == parallel.p_hat
    assert serial.stderr == parallel.stderr
