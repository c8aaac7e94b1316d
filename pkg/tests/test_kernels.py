"""Compiled core vs numpy fallback: identical semantics on random inputs."""

import numpy as np
import pytest

from enspulse import kernels
from enspulse.kernels import pyref

pytestmark = pytest.mark.skipif(
    not kernels.HAVE_COMPILED, reason="compiled core not built; fallback is in use"
)

try:
    from enspulse.kernels import _fastcore
except ImportError:
    _fastcore = None


def random_problem(rng, nsteps=48, npts=17):
    u = rng.uniform(-3000, 3000, nsteps)
    v = rng.uniform(-3000, 3000, nsteps)
    omega = rng.uniform(-2000, 2000, npts)
    eps = rng.uniform(0.7, 1.3, npts)
    theta = rng.uniform(-np.pi, np.pi, npts)
    return u, v, 1e-4, omega, eps, theta


@pytest.mark.parametrize("hard", [False, True])
@pytest.mark.parametrize("with_theta", [False, True])
def test_spinor_propagate_equivalence(hard, with_theta):
    rng = np.random.default_rng(60)
    u, v, dt, omega, eps, theta = random_problem(rng)
    th = theta if with_theta else None
    a0 = np.exp(1j * rng.uniform(0, 2 * np.pi, len(omega))) * 0.6
    b0 = np.sqrt(1 - np.abs(a0) ** 2) * np.exp(1j * rng.uniform(0, 2 * np.pi, len(omega)))
    a1, b1 = _fastcore.spinor_propagate(u, v, dt, omega, eps, th, a0, b0, hard)
    a2, b2 = pyref.spinor_propagate(u, v, dt, omega, eps, th, a0, b0, hard)
    assert np.abs(a1 - a2).max() < 1e-12
    assert np.abs(b1 - b2).max() < 1e-12


@pytest.mark.parametrize("hard", [False, True])
def test_bloch_propagate_equivalence(hard):
    rng = np.random.default_rng(61)
    u, v, dt, omega, eps, theta = random_problem(rng)
    xyz0 = rng.standard_normal((len(omega), 3))
    xyz0 /= np.linalg.norm(xyz0, axis=1, keepdims=True)
    out1 = _fastcore.bloch_propagate(u, v, dt, omega, eps, theta, xyz0, hard)
    out2 = pyref.bloch_propagate(u, v, dt, omega, eps, theta, xyz0, hard)
    assert np.abs(out1 - out2).max() < 1e-12


def test_slr_forward_equivalence():
    rng = np.random.default_rng(62)
    phi = rng.uniform(0.01, 1.6, 40)
    theta = rng.uniform(-np.pi, np.pi, 40)
    c = np.cos(phi / 2)
    s = -1j * np.exp(1j * theta) * np.sin(phi / 2)
    p1, q1 = _fastcore.slr_forward(c, s)
    p2, q2 = pyref.slr_forward(c, s)
    assert np.abs(p1 - p2).max() < 1e-13
    assert np.abs(q1 - q2).max() < 1e-13


def test_slr_inverse_equivalence():
    rng = np.random.default_rng(63)
    phi = rng.uniform(0.01, 1.6, 40)
    theta = rng.uniform(-np.pi, np.pi, 40)
    c = np.cos(phi / 2)
    s = -1j * np.exp(1j * theta) * np.sin(phi / 2)
    p, q = pyref.slr_forward(c, s)
    out1 = _fastcore.slr_inverse(p, q)
    out2 = pyref.slr_inverse(p, q)
    for a, b in zip(out1[:2], out2[:2]):
        assert np.abs(np.asarray(a) - np.asarray(b)).max() < 1e-11
    assert abs(out1[2] - out2[2]) < 1e-11
    assert abs(out1[3] - out2[3]) < 1e-11


def test_deterministic_repeat():
    rng = np.random.default_rng(64)
    u, v, dt, omega, eps, theta = random_problem(rng)
    a0 = np.ones(len(omega), dtype=complex)
    b0 = np.zeros(len(omega), dtype=complex)
    first = _fastcore.spinor_propagate(u, v, dt, omega, eps, theta, a0, b0, False)
    second = _fastcore.spinor_propagate(u, v, dt, omega, eps, theta, a0, b0, False)
    assert np.array_equal(first[0], second[0]) and np.array_equal(first[1], second[1])
