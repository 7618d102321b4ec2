import numpy as np
import pytest

from rtis import _kernels_py as py
from rtis import kernels
from rtis.arm import ArmModel, forward_kinematics

cy = pytest.importorskip("rtis._kernels")


def test_backend_is_compiled():
    assert kernels.BACKEND == "cython"


def test_pure_python_selected_by_env(monkeypatch):
    import importlib

    monkeypatch.setenv("RTIS_PURE_PYTHON", "1")
    mod = importlib.reload(kernels)
    try:
        assert mod.BACKEND == "python"
    finally:
        monkeypatch.delenv("RTIS_PURE_PYTHON")
        importlib.reload(kernels)


def test_fk_parity(rng):
    q = rng.uniform(-np.pi, np.pi, size=(500, 3))
    a = py.fk_batch(0.3, 0.3, 0.2, q)
    b = cy.fk_batch(0.3, 0.3, 0.2, q)
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-15)
    arm = ArmModel()
    for row, p in zip(q[:20], a[:20]):
        np.testing.assert_allclose(forward_kinematics(arm, row), p, atol=1e-15)


def test_rollout_parity_with_clamping(rng):
    lo, hi = np.array([-1.0, -1.0, -1.0]), np.array([1.0, 1.0, 1.0])
    dts = 1e-3 * np.exp(0.2 * rng.standard_normal(3000))
    v = np.array([0.5, -0.4, 0.05])
    a = py.rollout_constant_velocity(0.3, 0.3, 0.2, lo, hi, np.zeros(3), v, dts, 1e-3)
    b = cy.rollout_constant_velocity(0.3, 0.3, 0.2, lo, hi, np.zeros(3), v, dts, 1e-3)
    for x, y in zip(a, b):
        np.testing.assert_allclose(x, y, rtol=0, atol=1e-13)
    q = a[0]
    assert q[:, 0].max() == 1.0 and q[:, 1].min() == -1.0
    # saturated joints report zero apparent velocity
    assert a[1][-1, 0] == 0.0


def test_rollout_fixed_dt_velocity_is_command():
    n = 100
    v = np.array([0.01, 0.02, -0.03])
    q, vel, _ = cy.rollout_constant_velocity(0.3, 0.3, 0.2, -np.full(3, 3.0), np.full(3, 3.0), np.zeros(3), v,
                                             np.full(n, 1e-3), 1e-3)
    np.testing.assert_allclose(vel, np.tile(v, (n, 1)), rtol=1e-9)
    np.testing.assert_allclose(q[-1], v * n * 1e-3, rtol=1e-12)


@pytest.mark.parametrize("terminal", [True, False])
def test_gae_parity(rng, terminal):
    r, v = rng.standard_normal(200), rng.standard_normal(201)
    np.testing.assert_allclose(py.gae(r, v, terminal, 0.99, 0.95), cy.gae(r, v, terminal, 0.99, 0.95),
                               rtol=1e-13, atol=1e-13)
