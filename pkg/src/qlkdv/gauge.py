"""Gauge transform, gauged coefficients, energy matrices, and the
dissipation/smoothing inequality checks.

The multiplicative gauge ``v = exp(-phi) u`` with ``phi' = -N <x>^-2``
turns the second-order energy matrix negative definite, which is what
makes the L2 estimate close.  All matrices here are assembled from
coefficient fields sampled on the grid, with derivatives taken
spectrally.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import matfield_apply, quadratic_form
from .coefficients import (
    AssumptionConstants,
    CoefficientFields,
    gauge_d2phi,
    gauge_d3phi,
    gauge_dphi,
    gauge_phi,
)
from .errors import InsufficientDataError
from .grid import Field, GridSpec, derivative, raw_derivative, spatial_weight

__all__ = [
    "GaugeData",
    "EnergyMatrices",
    "build_gauge",
    "gauge_state",
    "gauged_coefficients",
    "energy_matrices",
    "energy_inequality_check",
    "smoothing_functional",
]


@dataclass(frozen=True)
class GaugeData:
    """Gauge profile phi and its derivatives sampled on a grid (delta = 1)."""

    grid: GridSpec
    amplitude: float  # N
    delta: float
    phi: np.ndarray
    dphi: np.ndarray
    d2phi: np.ndarray
    d3phi: np.ndarray
    exp_phi: np.ndarray
    exp_neg_phi: np.ndarray


def build_gauge(grid: GridSpec, constants: AssumptionConstants) -> GaugeData:
    """Closed-form gauge phi(x) = -N (arctan x + pi/2)."""
    n_gauge = constants.gauge_amplitude
    if n_gauge <= 0:
        raise ValueError("gauge amplitude must be positive")
    x = grid.x
    phi = gauge_phi(x, n_gauge)
    return GaugeData(
        grid=grid,
        amplitude=n_gauge,
        delta=constants.delta,
        phi=phi,
        dphi=gauge_dphi(x, n_gauge),
        d2phi=gauge_d2phi(x, n_gauge),
        d3phi=gauge_d3phi(x, n_gauge),
        exp_phi=np.exp(phi),
        exp_neg_phi=np.exp(-phi),
    )


def gauge_state(u: Field, g: GaugeData, direction: str = "forward") -> Field:
    """Apply v = exp(-phi) u (forward) or u = exp(phi) v (inverse)."""
    if direction == "forward":
        w = g.exp_neg_phi
    elif direction == "inverse":
        w = g.exp_phi
    else:
        raise ValueError("direction must be 'forward' or 'inverse'")
    return Field(u.grid, w[None, :] * u.values)


def _dx(arr: np.ndarray, grid: GridSpec, order: int = 1) -> np.ndarray:
    """Spectral derivative of each entry of an (n, n, N) matrix field."""
    return raw_derivative(arr, grid, order)


def spectral_consistency_defect(g: GaugeData) -> float:
    """Max error of the spectral derivative of the gauge profile.

    The profile itself is not periodic (it steps down by 2 N arctan L
    across the box), so an odd cubic matching the value and curvature
    jumps is removed before differentiating and restored afterwards.
    """
    grid = g.grid
    x, L, N = grid.x, grid.half_length, g.amplitude
    jump0 = -2.0 * N * np.arctan(L)
    jump2 = 2.0 * gauge_d2phi(L, N)
    beta = jump2 / (12.0 * L)
    alpha = (jump0 - 2.0 * beta * L**3) / (2.0 * L)
    poly = alpha * x + beta * x**3
    dpoly = alpha + 3.0 * beta * x**2
    dnum = raw_derivative((g.phi - poly)[None, :], grid, 1)[0] + dpoly
    return float(np.max(np.abs(dnum - g.dphi)))


def gauged_coefficients(cf: CoefficientFields, g: GaugeData) -> CoefficientFields:
    """Coefficients of the conjugated operator exp(-phi) L (exp(phi) . ).

    The dispersion matrix is unchanged; the lower orders pick up gauge
    corrections through the Leibniz expansion of the conjugation.
    """
    p1, p2, p3 = g.dphi, g.d2phi, g.d3phi
    q = p1**2 + p2
    cub = p1**3 + 3.0 * p2 * p1 + p3
    b_t = cf.b + 3.0 * cf.a * p1
    c_t = cf.c + 2.0 * cf.b * p1 + 3.0 * cf.a * q
    d_t = cf.d + cf.c * p1 + cf.b * q + cf.a * cub
    return CoefficientFields(grid=cf.grid, t=cf.t, a=cf.a, b=b_t, c=c_t, d=d_t)


@dataclass(frozen=True)
class EnergyMatrices:
    """Second/first/zero-order energy matrices of the gauged system."""

    grid: GridSpec
    t: float
    b_mat: np.ndarray  # symmetric
    c_mat: np.ndarray  # antisymmetric
    d_mat: np.ndarray

    def __post_init__(self):
        if np.max(np.abs(self.b_mat - np.swapaxes(self.b_mat, 0, 1))) > 1e-10:
            raise ValueError("B must be symmetric")
        if np.max(np.abs(self.c_mat + np.swapaxes(self.c_mat, 0, 1))) > 1e-10:
            raise ValueError("C must be antisymmetric")
        for m in (self.b_mat, self.c_mat, self.d_mat):
            if not np.all(np.isfinite(m)):
                raise ValueError("energy matrices must be finite")


def energy_matrices(cf: CoefficientFields, gauged: CoefficientFields,
                    g: GaugeData) -> EnergyMatrices:
    """Assemble B, C, D from the original and gauged coefficient fields.

    B = -3 a' + b + b^T + 6 phi' a   (negative definite by gauge design)
    C = (b - b^T)' + (c - c^T) + 2 (b - b^T) phi'
    D = -(a''')^T + (btilde'')^T - (ctilde')^T + dtilde + dtilde^T
    """
    grid = cf.grid

    def T(m):
        return np.swapaxes(m, 0, 1)

    da = _dx(cf.a, grid)
    b_mat = -3.0 * da + cf.b + T(cf.b) + 6.0 * g.dphi * cf.a
    b_mat = 0.5 * (b_mat + T(b_mat))  # symmetrize away roundoff

    banti = cf.b - T(cf.b)
    c_mat = _dx(banti, grid) + (cf.c - T(cf.c)) + 2.0 * banti * g.dphi
    c_mat = 0.5 * (c_mat - T(c_mat))

    d_mat = (
        -T(_dx(cf.a, grid, 3))
        + T(_dx(gauged.b, grid, 2))
        - T(_dx(gauged.c, grid))
        + gauged.d
        + T(gauged.d)
    )
    return EnergyMatrices(grid=grid, t=cf.t, b_mat=b_mat, c_mat=c_mat, d_mat=d_mat)


def second_order_sign_margin(em: EnergyMatrices, n_directions: int = 16,
                             rng=None) -> float:
    """max over grid points and unit directions of <x>^2 B xi.xi + 2 |xi|^2.

    Nonpositive means the negative-definiteness target holds with the
    designed margin.
    """
    grid = em.grid
    n = grid.n_components
    if rng is None:
        rng = np.random.default_rng(2024)
    dirs = rng.standard_normal((n_directions, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    w2 = spatial_weight(grid, 2.0) ** 2 if False else (1.0 + grid.x**2)
    worst = -np.inf
    for xi in dirs:
        form = np.einsum("i,ijp,j->p", xi, em.b_mat, xi)
        worst = max(worst, float(np.max(w2 * form + 2.0)))
    return worst


def matrix_norm_bounds(em: EnergyMatrices):
    """(sup <x> |C|, sup |D|) pointwise operator norms on the grid."""
    w1 = np.sqrt(1.0 + em.grid.x**2)
    cn = np.linalg.norm(np.moveaxis(em.c_mat * w1, -1, 0), ord=2, axis=(1, 2))
    dn = np.linalg.norm(np.moveaxis(em.d_mat, -1, 0), ord=2, axis=(1, 2))
    return float(np.max(cn)), float(np.max(dn))


# ---------------------------------------------------------------------------
# inequality checks on trajectories
# ---------------------------------------------------------------------------

def _l2_sq(values: np.ndarray, grid: GridSpec) -> float:
    return float(grid.spacing * np.sum(values * values))


def _ddt_second_order(series: np.ndarray, dt: float) -> np.ndarray:
    """O(dt^2) time derivative: centered inside, one-sided at the ends."""
    if series.size < 3:
        raise InsufficientDataError("need at least 3 time samples")
    out = np.empty_like(series)
    out[1:-1] = (series[2:] - series[:-2]) / (2.0 * dt)
    out[0] = (-3.0 * series[0] + 4.0 * series[1] - series[2]) / (2.0 * dt)
    out[-1] = (3.0 * series[-1] - 4.0 * series[-2] + series[-3]) / (2.0 * dt)
    return out


def energy_inequality_check(times, states, g: GaugeData,
                            constants: AssumptionConstants,
                            forcing_states=None):
    """Per-step check of the gauged dissipation inequality.

    For the gauged trajectory v the inequality reads

        d/dt ||v||^2 + integral <x>^(-2 delta) |v_x|^2
            <= A ||v||^2 + 2 |integral g . v|

    with g the gauged forcing.  Returns a dict of per-step columns and the
    overall pass flag (margin >= -1e-6 * max(1, rhs) at every sample).
    """
    times = np.asarray(times, dtype=float)
    if times.size < 3:
        raise InsufficientDataError("need at least 3 time samples")
    dt = times[1] - times[0]
    if not np.allclose(np.diff(times), dt, rtol=1e-8):
        raise InsufficientDataError("time samples must be uniform")
    grid = states[0].grid
    a_const = constants.a_bound
    wminus = (1.0 + grid.x**2) ** (-constants.delta)

    e_series = np.array([_l2_sq(v.values, grid) for v in states])
    smooth = np.empty(times.size)
    dual = np.zeros(times.size)
    for i, v in enumerate(states):
        vx = raw_derivative(v.values, grid, 1)
        smooth[i] = grid.spacing * np.sum(wminus[None, :] * vx * vx)
        if forcing_states is not None:
            gi = forcing_states[i]
            dual[i] = abs(grid.spacing * np.sum(gi.values * v.values))

    dedt = _ddt_second_order(e_series, dt)
    lhs = dedt + smooth
    rhs = a_const * e_series + 2.0 * dual
    margin = rhs - lhs
    tol = 1e-6 * np.maximum(1.0, rhs)
    passed = bool(np.all(margin >= -tol))

    # integrated Gronwall consequence, evaluated in log space:
    # ||v(t)||^2 <= exp(A t) (||v0||^2 + integral |/ g.v|)
    cum = np.concatenate([[0.0], np.cumsum(0.5 * (dual[1:] + dual[:-1]) * dt)])
    log_rhs = a_const * times + np.log(e_series[0] + 2.0 * cum + 1e-300)
    with np.errstate(divide="ignore"):
        log_lhs = np.log(e_series + 1e-300)
    gronwall_ok = bool(np.all(log_lhs <= log_rhs + 1e-9))

    return {
        "t": times,
        "lhs": lhs,
        "rhs": rhs,
        "margin": margin,
        "pass": passed,
        "gronwall_pass": gronwall_ok,
    }


def smoothing_functional(times, states, u0: Field, constants: AssumptionConstants,
                         forcing_states=None):
    """Local smoothing ratio for a trajectory of the regularized system.

    lhs = || <x>^-delta <dx> u ||_{L2_t L2_x}
    rhs = A (||u0||_L2 + || <x>^delta <dx>^-1 f ||_{L2_t L2_x})
    """
    from .grid import bessel_multiplier, l2_norm, weight_field

    times = np.asarray(times, dtype=float)
    grid = states[0].grid
    delta = constants.delta

    def time_l2(series_sq):
        return float(np.sqrt(np.trapezoid(series_sq, times)))

    lhs_sq = [
        _l2_sq(weight_field(bessel_multiplier(v, 1.0), -delta).values, grid)
        for v in states
    ]
    lhs = time_l2(lhs_sq)

    f_term = 0.0
    if forcing_states is not None:
        f_sq = [
            _l2_sq(weight_field(bessel_multiplier(f, -1.0), delta).values, grid)
            for f in forcing_states
        ]
        f_term = time_l2(f_sq)
    rhs = constants.a_bound * (l2_norm(u0) + f_term)
    ratio = lhs / rhs if rhs > 0 else 0.0
    return lhs, rhs, ratio
