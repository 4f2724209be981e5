"""Registered control systems with analytic jacobians, addressable by name from scenario documents."""

import numpy as np

from .exceptions import ScenarioError
from .system import VectorFieldSet


def rigid_body():
    """x1' = u1, x2' = u2, x3' = x1^2 u2 - x2^2 u1"""
    return VectorFieldSet(
        n=3, m=2, name='rigid-body',
        fields=(
            lambda x: np.array([1.0, 0.0, -x[1] ** 2]),
            lambda x: np.array([0.0, 1.0, x[0] ** 2]),
        ),
        jacobians=(
            lambda x: np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, -2.0 * x[1], 0.0]]),
            lambda x: np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [2.0 * x[0], 0.0, 0.0]]),
        ),
    )


def rolling_disc():
    """x1' = u1 cos x3, x2' = u1 sin x3, x3' = u2, x4' = u1"""
    def f1(x):
        return np.array([np.cos(x[2]), np.sin(x[2]), 0.0, 1.0])

    def j1(x):
        jac = np.zeros((4, 4))
        jac[0, 2] = -np.sin(x[2])
        jac[1, 2] = np.cos(x[2])
        return jac

    return VectorFieldSet(
        n=4, m=2, name='rolling-disc',
        fields=(f1, lambda x: np.array([0.0, 0.0, 1.0, 0.0])),
        jacobians=(j1, lambda x: np.zeros((4, 4))),
    )


def brockett_integrator():
    """x1' = u1, x2' = u2, x3' = x1 u2 - x2 u1; only [f1, f2] is nonzero."""
    return VectorFieldSet(
        n=3, m=2, name='brockett-integrator',
        fields=(
            lambda x: np.array([1.0, 0.0, -x[1]]),
            lambda x: np.array([0.0, 1.0, x[0]]),
        ),
        jacobians=(
            lambda x: np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, -1.0, 0.0]]),
            lambda x: np.array([[0.0, 0.0, 0.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
        ),
    )


def three_input_chain():
    """x1' = u1, x2' = u2, x3' = x1 u2, x4' = x3 u3; [[f1, f2], f3] = e4."""
    def j2(x):
        jac = np.zeros((4, 4))
        jac[2, 0] = 1.0
        return jac

    def j3(x):
        jac = np.zeros((4, 4))
        jac[3, 2] = 1.0
        return jac

    return VectorFieldSet(
        n=4, m=3, name='three-input-chain',
        fields=(
            lambda x: np.array([1.0, 0.0, 0.0, 0.0]),
            lambda x: np.array([0.0, 1.0, x[0], 0.0]),
            lambda x: np.array([0.0, 0.0, 0.0, x[2]]),
        ),
        jacobians=(lambda x: np.zeros((4, 4)), j2, j3),
    )


SYSTEM_CATALOG = {
    'rigid-body': rigid_body,
    'rolling-disc': rolling_disc,
    'brockett-integrator': brockett_integrator,
    'three-input-chain': three_input_chain,
}


def catalog_system(name):
    try:
        return SYSTEM_CATALOG[name]()
    except KeyError:
        raise ScenarioError('unknown system %r; choose from %s' % (name, ', '.join(SYSTEM_CATALOG)))
