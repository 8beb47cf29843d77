import numpy as np
import pytest

import gpexact as gx

KAPPA = 0.5


@pytest.fixture(scope="session")
def params_1d():
    return gx.Example1DParams(m=1.0, k=1.0, e=1.0, E=0.1, omega=0.5,
                              a=0.2, b=0.1, c=0.3)


@pytest.fixture(scope="session")
def model_1d(params_1d):
    return gx.model_1d(params_1d, hbar=1.0, kappa=KAPPA)


@pytest.fixture(scope="session")
def axis_2048():
    return gx.Axis(-12.0, 12.0, 2048)


@pytest.fixture(scope="session")
def axis_1024():
    return gx.Axis(-12.0, 12.0, 1024)


@pytest.fixture(scope="session")
def displaced_gaussian(model_1d, params_1d, axis_2048):
    """Unit-norm packet displaced off the steady orbit; the standard probe."""
    om = params_1d.Omega(KAPPA)
    return gx.gaussian_packet((axis_2048,), 1.0, [1.0], [0.2],
                              [params_1d.m * om])


def forced_oscillator_mean(params, kappa_tilde, p0, x0, t):
    """Independent closed form for the driven mean motion.

    x(t) = Xs cos(w t) + (x0 - Xs) cos(Wt t) + p0 sin(Wt t)/(m Wt),
    with Xs the steady amplitude and Wt the mean-motion frequency.
    """
    wt = np.sqrt(params.OmegaTilde_sq(kappa_tilde))
    xs = params.steady_center(kappa_tilde)
    w = params.omega
    x = xs * np.cos(w * t) + (x0 - xs) * np.cos(wt * t) \
        + p0 * np.sin(wt * t) / (params.m * wt)
    p = params.m * (-xs * w * np.sin(w * t) - (x0 - xs) * wt * np.sin(wt * t)
                    + p0 * np.cos(wt * t) / params.m)
    return p, x
