"""Registered coefficient families and data builders.

Problems are selected by name with numeric parameters; every family is
constructed here rather than from user-scripted code.  The lorentzian
profile ``1/(1+x^2)`` supplies the asymptotic flatness that the weighted
bounds require.
"""

from __future__ import annotations

import numpy as np

from .coefficients import (
    CoefficientFunction,
    CoefficientSet,
    constant_coefficient,
)
from .errors import UsageError
from .grid import Field, GridSpec

__all__ = ["build_problem", "PROBLEM_NAMES", "gaussian_data", "wide_gaussian_data",
           "spectral_tail_data", "scale_to_y_norm"]


def _lorentz(x):
    return 1.0 / (1.0 + x**2)


def _as_matrix_fn(fn):
    """Lift a scalar (x,t,z)->(X,) callable to a (1,1,X) matrix field."""
    return lambda x, t, z: fn(np.asarray(x, dtype=float), t, z)[None, None, :]


def _scalar_cf(fn, dz0=None):
    forms = {}
    if dz0 is not None:
        forms[0] = _as_matrix_fn(dz0)
    return CoefficientFunction(fn=_as_matrix_fn(fn), dz_forms=forms)


def _zero_cf():
    return CoefficientFunction(fn=lambda x, t, z: np.zeros((1, 1, np.size(x))))


# ---------------------------------------------------------------------------
# linear families
# ---------------------------------------------------------------------------

def _airy(params):
    lead = params.get("a", 1.0)
    return CoefficientSet(
        n=1,
        a=constant_coefficient([[lead]]),
        b=constant_coefficient([[0.0]]),
        c=constant_coefficient([[0.0]]),
        d=constant_coefficient([[0.0]]),
        c_jm=lambda j, m: max(1.0, abs(lead)),
        name="airy",
    )


def _varcoef(params):
    aa = params.get("a_amp", 0.25)
    bb = params.get("b_amp", 0.15)
    cc = params.get("c_amp", 0.1)
    dd = params.get("d_amp", 0.05)
    tmod = params.get("t_mod", 0.2)

    a = _scalar_cf(lambda x, t, z: 1.0 + aa * _lorentz(x))
    b = _scalar_cf(lambda x, t, z: bb * _lorentz(x) * (1.0 + tmod * np.cos(t)))
    c = _scalar_cf(lambda x, t, z: cc * x * _lorentz(x))
    d = _scalar_cf(lambda x, t, z: dd * _lorentz(x))
    return CoefficientSet(
        n=1, a=a, b=b, c=c, d=d,
        time_dependent=True,
        c_jm=lambda j, m: 2.0,
        name="varcoef",
    )


def _varsys(params):
    s_amp = params.get("s_amp", 0.2)
    tmod = params.get("t_mod", 0.15)

    def a_fn(x, t, z):
        s = _lorentz(x)
        out = np.empty((2, 2, x.size))
        out[0, 0] = 1.6 + s_amp * s
        out[0, 1] = 0.15 * s
        out[1, 0] = 0.15 * s
        out[1, 1] = 1.2 + 0.0 * s
        return out

    def b_fn(x, t, z):
        s = _lorentz(x) * (1.0 + tmod * np.cos(t))
        out = np.empty((2, 2, x.size))
        out[0, 0] = 0.12 * s
        out[0, 1] = 0.08 * s
        out[1, 0] = -0.06 * s
        out[1, 1] = 0.10 * s
        return out

    def c_fn(x, t, z):
        s = _lorentz(x)
        out = np.empty((2, 2, x.size))
        out[0, 0] = 0.10 + 0.0 * s
        out[0, 1] = 0.05 + 0.10 * s
        out[1, 0] = 0.05 - 0.10 * s
        out[1, 1] = -0.08 + 0.0 * s
        return out

    def d_fn(x, t, z):
        one = np.ones(x.size)
        out = np.empty((2, 2, x.size))
        out[0, 0] = 0.04 * one
        out[0, 1] = -0.02 * one
        out[1, 0] = 0.01 * one
        out[1, 1] = 0.05 * one
        return out

    return CoefficientSet(
        n=2,
        a=CoefficientFunction(fn=lambda x, t, z: a_fn(np.asarray(x, float), t, z)),
        b=CoefficientFunction(fn=lambda x, t, z: b_fn(np.asarray(x, float), t, z)),
        c=CoefficientFunction(fn=lambda x, t, z: c_fn(np.asarray(x, float), t, z)),
        d=CoefficientFunction(fn=lambda x, t, z: d_fn(np.asarray(x, float), t, z)),
        time_dependent=True,
        c_jm=lambda j, m: 2.5,
        name="varsys",
    )


def _jordan(params):
    delta = params.get("delta", 1.0)
    return CoefficientSet(
        n=2,
        a=constant_coefficient([[1.0, delta], [0.0, 1.0]]),
        b=constant_coefficient(np.zeros((2, 2))),
        c=constant_coefficient(np.zeros((2, 2))),
        d=constant_coefficient(np.zeros((2, 2))),
        c_jm=lambda j, m: 1.0 + abs(delta),
        name="jordan",
    )


def _jordan_symmetric(params):
    delta = params.get("delta", 1.0)
    return CoefficientSet(
        n=2,
        a=constant_coefficient([[1.0, delta], [delta, 1.0]]),
        b=constant_coefficient(np.zeros((2, 2))),
        c=constant_coefficient(np.zeros((2, 2))),
        d=constant_coefficient(np.zeros((2, 2))),
        c_jm=lambda j, m: 1.0 + abs(delta),
        name="jordan_symmetric",
    )


# ---------------------------------------------------------------------------
# quasilinear families (dispersion depends on the state)
# ---------------------------------------------------------------------------

def _picard_cubic(params):
    """a = 1 + u^2 with a mild first-order self-interaction; x-independent."""
    transport = params.get("transport", 0.5)

    a = _scalar_cf(lambda x, t, z: 1.0 + z[0] ** 2, dz0=lambda x, t, z: 2.0 * z[0])
    c = _scalar_cf(lambda x, t, z: transport * z[0],
                   dz0=lambda x, t, z: transport * np.ones_like(x))
    return CoefficientSet(
        n=1, a=a, b=_zero_cf(), c=c, d=_zero_cf(),
        z_dependent=True,
        c_jm=lambda j, m: max(2.0, 1.0 + m**2, 2.0 * m),
        name="picard_cubic",
    )


def _quasilinear_cubic(params):
    """a = 1 + a_amp/(1+x^2) + u^2 with KdV-style transport c = c_amp*u."""
    aa = params.get("a_amp", 0.3)
    cc = params.get("c_amp", 0.5)

    a = _scalar_cf(lambda x, t, z: 1.0 + aa * _lorentz(x) + z[0] ** 2,
                   dz0=lambda x, t, z: 2.0 * z[0])
    c = _scalar_cf(lambda x, t, z: cc * z[0], dz0=lambda x, t, z: cc * np.ones_like(x))
    return CoefficientSet(
        n=1, a=a, b=_zero_cf(), c=c, d=_zero_cf(),
        z_dependent=True,
        c_jm=lambda j, m: max(2.0, 1.0 + m**2, 2.0 * m, 2.0 * aa),
        name="quasilinear_cubic",
    )


_REGISTRY = {
    "airy": _airy,
    "varcoef": _varcoef,
    "varsys": _varsys,
    "jordan": _jordan,
    "jordan_symmetric": _jordan_symmetric,
    "picard_cubic": _picard_cubic,
    "quasilinear_cubic": _quasilinear_cubic,
}

PROBLEM_NAMES = tuple(sorted(_REGISTRY))

# problems expected to pass the full assumption battery
COMPLIANT = ("airy", "varcoef", "varsys", "picard_cubic", "quasilinear_cubic")


def build_problem(name: str, params: dict | None = None) -> CoefficientSet:
    if name not in _REGISTRY:
        raise UsageError(f"unknown problem '{name}'; registered: {', '.join(PROBLEM_NAMES)}")
    return _REGISTRY[name](params or {})


# ---------------------------------------------------------------------------
# data builders
# ---------------------------------------------------------------------------

def gaussian_data(grid: GridSpec, amplitude: float = 1.0, width: float = 1.0,
                  center: float = 0.0) -> Field:
    vals = amplitude * np.exp(-(((grid.x - center) / width) ** 2))
    return Field(grid, np.tile(vals, (grid.n_components, 1)))


def wide_gaussian_data(grid: GridSpec, amplitude: float = 1.0, width: float = 8.0) -> Field:
    return gaussian_data(grid, amplitude, width)


def spectral_tail_data(grid: GridSpec, decay: float, amplitude: float = 1.0) -> Field:
    """Field with coefficients exactly <xi>^(-decay): smooth in x with an
    exponentially decaying Bessel-kernel profile, but with the slowest
    spectral tail compatible with the requested regularity."""
    coeffs = amplitude * (1.0 + grid.xi**2) ** (-decay / 2.0)
    spec = np.tile(coeffs.astype(complex), (grid.n_components, 1))
    from .grid import SpectralField, inverse_transform

    return inverse_transform(SpectralField(grid, spec, validate=False))


def scale_to_y_norm(u0: Field, target: float, y_value: float) -> Field:
    """Rescale data so its measured Y-norm hits ``target``."""
    if y_value <= 0:
        raise ValueError("current Y-norm must be positive")
    return u0 * (target / y_value)
