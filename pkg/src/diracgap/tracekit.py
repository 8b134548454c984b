"""Fiber traces and the separated (geometric x arithmetic) representation.

For an even Gaussian window phi, the trace of phi of the truncated Dirac
operator decomposes over Floquet-Hecke fibers:

    theta_fiber = 2 sum_n int_{-pi/L}^{pi/L} mean_m phi(E_n(kappa) - E* + m_m) dkappa,

with the kappa integral done by trapezoid weights on the stored grid.  The
same quantity has a separated Fourier-side form

    theta_separated = (1/pi) int phihat(t) (sum_n G_n(t)) A(t) dt,

with geometric factors G_n(t) = int e^{i t (E_n(kappa) - E*)} dkappa and the
joint arithmetic factor A(t) = mean_m e^{i t m_m}.  With matching quadrature
weights the two sides agree identically up to the t-quadrature error; the
1/pi prefactor follows from phi = (1/2pi) int phihat e^{i t lambda} dt
together with the factor 2 in the fiber sum, and is pinned here by requiring
agreement with the fiber sum.

The t grid is symmetric about 0 with a step small enough to keep the
trapezoid aliasing images phi(v - 2 pi k / h) negligible for every fiber
value v, and a half-width set by the tail rule phihat(T) < 1e-14 (widened
automatically until the analytic tail bound drops below 1e-10).

A_joint (the empirical joint measure) is what enters theta_separated; the
prime product A_prod = prod_p A_p is reported separately, because strict
multiplicativity of the empirical joint measure holds only in expectation
at finite N_H (it is exact in constant_one mode).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .arithmetic import CoefficientFamily, HeckeEnsemble, MassShifts, local_factor_grid
from .floquet import BandStructure
from .shift import TestFunction

TAIL_HAT_CUTOFF = 1e-14
TAIL_BOUND = 1e-10
DEFAULT_H_MAX = 0.01


@dataclass(frozen=True)
class TraceFactors:
    """Fourier-side factors on a shared symmetric t grid."""

    t_grid: np.ndarray = field(repr=False)
    geometric: np.ndarray = field(repr=False)  # shape (n_bands, nt)
    a_joint: np.ndarray = field(repr=False)
    a_prod: np.ndarray = field(repr=False)
    h_t: float = 0.0
    t_max: float = 0.0


@dataclass(frozen=True)
class TraceReport:
    theta_fiber: float
    theta_separated: float
    rel_gap: float
    euler_gap: float
    t_max: float
    h_t: float
    imag_residue: float
    abs_gap: float = 0.0
    # L1 mass of the Fourier-side integrand: the quadrature's rounding noise
    # scales with it, so agreement below ~eps * l1_mass is at resolution.
    l1_mass: float = 0.0
    # The fiber sum is the ground truth that fixes the Fourier-side constant.
    resolved_prefactor: str = "1/pi"


def _kappa_pattern(n_nodes: int) -> np.ndarray:
    c = np.ones(n_nodes)
    c[0] = 0.5
    c[-1] = 0.5
    return c


def theta_fiber(phi, bands: BandStructure, e_star: float, shifts: MassShifts) -> float:
    """Trapezoid fiber sum 2 sum_n sum_j w_j mean_m phi(E - E* + m).

    phi may be any callable acting elementwise on arrays.  The weights are
    applied as (2 pi / L) * c_j / (N - 1) with c the half-end trapezoid
    pattern, so a constant integrand integrates exactly.
    """
    q = bands.bands - e_star
    vals = q[:, :, None] + shifts.values[None, None, :]
    mean_over_modes = np.asarray(phi(vals)).mean(axis=2)
    c = _kappa_pattern(bands.grid.n_nodes)
    raw = float(np.dot(mean_over_modes.sum(axis=0), c))
    L = bands.potential.period
    return 2.0 * (2.0 * np.pi / L) * (raw / (bands.grid.n_nodes - 1))


def geometric_factor(bands: BandStructure, e_star: float, n: int, t: float) -> complex:
    """Trapezoid quadrature of e^{i t (E_n(kappa) - E*)} over the kappa grid.

    G_n(0) = 2 pi / L exactly (the grid measure).
    """
    if not 0 <= n < bands.n_bands:
        raise ValueError(f"band index {n} not stored (n_bands={bands.n_bands})")
    q = bands.bands[n] - e_star
    c = _kappa_pattern(bands.grid.n_nodes)
    raw = complex(np.dot(c, np.exp(1j * t * q)))
    L = bands.potential.period
    return (2.0 * np.pi / L) * (raw / (bands.grid.n_nodes - 1))


def _geometric_on_grid(bands: BandStructure, e_star: float, t_grid: np.ndarray) -> np.ndarray:
    c = _kappa_pattern(bands.grid.n_nodes)
    L = bands.potential.period
    scale = 2.0 * np.pi / L / (bands.grid.n_nodes - 1)
    out = np.empty((bands.n_bands, len(t_grid)), dtype=complex)
    for n in range(bands.n_bands):
        q = bands.bands[n] - e_star
        out[n] = scale * (np.exp(1j * np.multiply.outer(t_grid, q)) @ c)
    return out


def default_t_grid(
    bands: BandStructure,
    e_star: float,
    shifts: MassShifts,
    phi: TestFunction,
    h_max: float = DEFAULT_H_MAX,
    t_max: float | None = None,
) -> np.ndarray:
    """Symmetric uniform t grid satisfying the tail and aliasing rules.

    The half-width T starts at the solution of phihat(T) = TAIL_HAT_CUTOFF
    and is widened until the analytic Gaussian tail bound on the truncated
    integral falls below TAIL_BOUND.  The step obeys h <= h_max and keeps
    2 pi / h beyond the largest fiber value by a multiple of alpha, so the
    trapezoid aliasing images of phi are negligible.
    """
    a = phi.alpha
    q_extreme = max(abs(bands.bands.max() - e_star), abs(bands.bands.min() - e_star))
    m_extreme = max(abs(float(shifts.values.max())), abs(float(shifts.values.min()))) if len(shifts) else 0.0
    v_max = q_extreme + m_extreme

    if t_max is None:
        # phihat(T) < cutoff  <=>  T > (2/a) sqrt(log(a sqrt(pi) / cutoff))
        arg = a * math.sqrt(math.pi) / TAIL_HAT_CUTOFF
        T = (2.0 / a) * math.sqrt(max(math.log(arg), 1.0))
        L = bands.potential.period
        amp = (1.0 / math.pi) * bands.n_bands * (2.0 * math.pi / L)
        coef = a * math.sqrt(math.pi)
        aa = a * a / 4.0
        # two-sided tail of int_T^inf e^{-aa t^2} <= e^{-aa T^2} / (2 aa T)
        while 2.0 * amp * coef * math.exp(-aa * T * T) / (2.0 * aa * T) > TAIL_BOUND:
            T *= 1.25
    else:
        T = float(t_max)

    h = min(h_max, 2.0 * math.pi / (v_max + 8.0 * a + 1.0))
    half_steps = max(int(math.ceil(T / h)), 1)
    h = T / half_steps
    k = np.arange(-half_steps, half_steps + 1)
    return k * h


def arithmetic_factors(
    ensemble: HeckeEnsemble,
    family: CoefficientFamily,
    shifts: MassShifts,
    t_grid: np.ndarray,
    bands: BandStructure | None = None,
    e_star: float = 0.0,
) -> TraceFactors:
    """Evaluate A_joint, A_prod, and (optionally) the geometric factors.

    A_joint(t) = mean_m e^{i t m_m}; A_prod(t) = prod_{p in S} A_p(t) in
    ascending-prime order.  Both equal 1 at t = 0.
    """
    t = np.asarray(t_grid, dtype=float)
    a_joint = np.exp(1j * np.multiply.outer(t, shifts.values)).mean(axis=1)
    a_prod = np.ones(len(t), dtype=complex)
    for p in ensemble.primes:
        a_prod *= local_factor_grid(ensemble, family, p, t)
    geometric = (
        _geometric_on_grid(bands, e_star, t)
        if bands is not None
        else np.zeros((0, len(t)), dtype=complex)
    )
    h = float(t[1] - t[0]) if len(t) > 1 else 0.0
    return TraceFactors(
        t_grid=t, geometric=geometric, a_joint=a_joint, a_prod=a_prod,
        h_t=h, t_max=float(abs(t).max()),
    )


def _separated_integral(phi: TestFunction, factors: TraceFactors) -> complex:
    integrand = phi.fourier(factors.t_grid) * factors.geometric.sum(axis=0) * factors.a_joint
    c = np.ones(len(factors.t_grid))
    c[0] = 0.5
    c[-1] = 0.5
    return factors.h_t * complex(np.dot(c, integrand)) / np.pi


def theta_separated(phi: TestFunction, factors: TraceFactors) -> float:
    """Real part of the separated Fourier-side trace (1/pi normalization)."""
    if factors.geometric.shape[0] == 0:
        raise ValueError("factors were built without geometric data")
    return _separated_integral(phi, factors).real


def log_local_coefficients(
    ensemble: HeckeEnsemble, family: CoefficientFamily, p: int, r_max: int
) -> list[complex]:
    """Taylor coefficients c_{p,r} of log A_p(t) at t = 0, r = 1..r_max.

    c_{p,r} = kappa_r i^r / r! with kappa_r the cumulants of the empirical
    distribution of eta_p values, obtained from raw moments by the standard
    recursion kappa_r = mu_r - sum_{j<r} C(r-1, j-1) kappa_j mu_{r-j}.
    """
    if not 1 <= r_max <= 6:
        raise ValueError("r_max must be between 1 and 6")
    eta = family.eta(p, ensemble.row(p))
    moments = [1.0]
    power = np.ones_like(eta)
    for _ in range(r_max):
        power = power * eta
        moments.append(float(power.mean()))
    cumulants = [0.0]
    for r in range(1, r_max + 1):
        k = moments[r]
        for j in range(1, r):
            k -= math.comb(r - 1, j - 1) * cumulants[j] * moments[r - j]
        cumulants.append(k)
    return [cumulants[r] * (1j**r) / math.factorial(r) for r in range(1, r_max + 1)]


def compare_trace_representations(
    bands: BandStructure,
    e_star: float,
    shifts: MassShifts,
    ensemble: HeckeEnsemble,
    family: CoefficientFamily,
    phi: TestFunction,
    h_max: float = DEFAULT_H_MAX,
    t_max: float | None = None,
) -> TraceReport:
    """Run both trace routes on one configuration and report the gaps."""
    t_grid = default_t_grid(bands, e_star, shifts, phi, h_max=h_max, t_max=t_max)
    factors = arithmetic_factors(ensemble, family, shifts, t_grid, bands=bands, e_star=e_star)
    fiber = theta_fiber(phi, bands, e_star, shifts)
    integral = _separated_integral(phi, factors)
    separated = integral.real
    scale = max(abs(fiber), np.finfo(float).tiny)
    euler_gap = float(np.abs(factors.a_joint - factors.a_prod).max())
    magnitude = np.abs(
        phi.fourier(factors.t_grid) * factors.geometric.sum(axis=0) * factors.a_joint
    )
    l1_mass = factors.h_t * float(magnitude.sum()) / np.pi
    return TraceReport(
        theta_fiber=fiber,
        theta_separated=separated,
        rel_gap=abs(fiber - separated) / scale,
        euler_gap=euler_gap,
        t_max=factors.t_max,
        h_t=factors.h_t,
        imag_residue=abs(integral.imag),
        abs_gap=abs(fiber - separated),
        l1_mass=l1_mass,
    )
