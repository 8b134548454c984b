"""Spectral-shift staircase, Krein pairing, and stationary-point diagnostics.

The truncated spectral shift is an odd right-continuous step function built
from the positive gap eigenvalues lambda_k with integer weights m_k:

    xi(lambda) = sum_{lambda_k <= lambda} m_k    for lambda > 0,
    xi(0) = 0,    xi(-lambda) = -xi(lambda).

Evaluation is integer arithmetic throughout, so oddness holds exactly.  The
Krein pairing treats the jump data as the signed measure
sum_k m_k (delta_{+lambda_k} - delta_{-lambda_k}) and pairs it against an
arbitrary differentiable probe psi by exact summation; even probes cancel
identically.

The stationary scan evaluates the translated-trace response

    F(t) = sum_k m_k [phi(lambda_k - t) + phi(-lambda_k - t)]

for a Gaussian window phi and locates the zeros of its closed-form
derivative.  F is even, so t = 0 is always stationary; isolated pairs
produce near-stationary points displaced from +-lambda_k by the
exponentially small cross term phi'(2 lambda_k), which is why the scan is a
diagnostic rather than an exact detector.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

import numpy as np

from .arithmetic import CoefficientFamily, HeckeEnsemble, local_factor_grid
from .gapspec import GapSpectrum

BISECTION_TOLERANCE = 1e-10


@dataclass(frozen=True)
class TestFunction:
    """Gaussian window phi(x) = exp(-x^2 / alpha^2).

    Even, positive, strictly decreasing on (0, inf), phi(0) = 1; its Fourier
    transform (integral with e^{-i x t}) is alpha sqrt(pi) exp(-alpha^2 t^2 / 4).
    """

    alpha: float
    kind: str = "gaussian"

    def __post_init__(self):
        if self.kind != "gaussian":
            raise ValueError(f"unsupported test function kind {self.kind!r}")
        if not (self.alpha > 0.0 and math.isfinite(self.alpha)):
            raise ValueError("the Gaussian width alpha must be positive and finite")

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return np.exp(-(x * x) / (self.alpha * self.alpha))

    def derivative(self, x):
        x = np.asarray(x, dtype=float)
        return -2.0 * x / (self.alpha * self.alpha) * self(x)

    def fourier(self, t):
        t = np.asarray(t, dtype=float)
        a = self.alpha
        return a * math.sqrt(math.pi) * np.exp(-(a * a) * (t * t) / 4.0)


@dataclass(frozen=True)
class Staircase:
    """Odd right-continuous step function stored by its positive jumps."""

    locations: tuple[float, ...]
    weights: tuple[int, ...]
    cumulative: tuple[int, ...] = field(repr=False, default=())

    def __post_init__(self):
        if len(self.locations) != len(self.weights):
            raise ValueError("locations and weights must have equal length")
        if any(x <= 0.0 for x in self.locations):
            raise ValueError("jump locations must be strictly positive")
        if list(self.locations) != sorted(self.locations):
            raise ValueError("jump locations must be ascending")
        if any(w <= 0 for w in self.weights):
            raise ValueError("jump weights must be positive integers")
        running, cum = 0, []
        for w in self.weights:
            running += int(w)
            cum.append(running)
        object.__setattr__(self, "cumulative", tuple(cum))

    @property
    def total_weight(self) -> int:
        return self.cumulative[-1] if self.cumulative else 0


def build_staircase(spectrum: GapSpectrum) -> Staircase:
    """Staircase with jump +m_k at +lambda_k; the negative side is implied."""
    return Staircase(locations=spectrum.positive_values, weights=spectrum.multiplicities)


def eval_staircase(s: Staircase, lam: float) -> int:
    """xi(lambda) under the right-continuous odd convention (exact integers)."""
    if lam == 0.0:
        return 0
    if lam < 0.0:
        return -eval_staircase(s, -lam)
    k = bisect_right(s.locations, lam)
    return s.cumulative[k - 1] if k else 0


def krein_pairing(s: Staircase, probe) -> float:
    """sum_k m_k (psi(lambda_k) - psi(-lambda_k)) for a differentiable probe.

    This is the pairing of the probe with the signed jump measure; it equals
    -integral psi' xi_signed and vanishes identically for even probes.
    """
    total = 0.0
    for lam, w in zip(s.locations, s.weights):
        total += w * (float(probe(lam)) - float(probe(-lam)))
    return total


@dataclass(frozen=True)
class StationaryScan:
    """Refined roots of F'(t) with their local type and scan warnings."""

    roots: tuple[float, ...]
    kinds: tuple[str, ...]  # "max" | "min"
    warnings: tuple[str, ...]


def trace_response(s: Staircase, phi: TestFunction, t):
    """F(t) = sum over the symmetric spectrum of phi(lambda - t)."""
    t = np.asarray(t, dtype=float)
    total = np.zeros_like(t)
    for lam, w in zip(s.locations, s.weights):
        total += w * (phi(lam - t) + phi(-lam - t))
    return total


def trace_response_derivative(s: Staircase, phi: TestFunction, t):
    """Closed-form F'(t); exactly zero at t = 0 by pairwise cancellation."""
    t = np.asarray(t, dtype=float)
    a2 = phi.alpha * phi.alpha
    total = np.zeros_like(t)
    for lam, w in zip(s.locations, s.weights):
        total += w * (2.0 / a2) * ((lam - t) * phi(lam - t) + (-lam - t) * phi(-lam - t))
    return total


def stationary_scan(
    spectrum: GapSpectrum, phi: TestFunction, t_grid: np.ndarray
) -> StationaryScan:
    """Locate stationary points of the translated trace on a uniform grid.

    Sign changes of the closed-form derivative are refined by bisection to
    1e-10.  A grid too coarse to separate adjacent jump locations is flagged
    in the warnings rather than rejected.
    """
    s = build_staircase(spectrum)
    t = np.asarray(t_grid, dtype=float)
    warnings: list[str] = []
    if not s.locations:
        return StationaryScan(roots=(), kinds=(), warnings=())

    sym = sorted({-x for x in s.locations} | set(s.locations))
    spacing = min(b - a for a, b in zip(sym, sym[1:])) if len(sym) > 1 else math.inf
    step = float(t[1] - t[0]) if len(t) > 1 else math.inf
    if step > spacing / 2.0:
        warnings.append(
            f"grid step {step:.3g} exceeds half the minimum jump spacing "
            f"{spacing:.3g}; adjacent eigenvalues may be unresolved"
        )
    if phi.alpha > spacing / 4.0:
        warnings.append(
            f"window width alpha={phi.alpha:.3g} exceeds a quarter of the minimum "
            f"jump spacing {spacing:.3g}; peaks may merge"
        )

    deriv = trace_response_derivative(s, phi, t)
    roots: list[float] = []
    kinds: list[str] = []

    def refine(lo: float, hi: float, f_lo: float) -> float:
        while hi - lo > BISECTION_TOLERANCE:
            mid = 0.5 * (lo + hi)
            f_mid = float(trace_response_derivative(s, phi, mid))
            if f_mid == 0.0:
                return mid
            if (f_lo > 0) == (f_mid > 0):
                lo, f_lo = mid, f_mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    for i in range(len(t) - 1):
        f0, f1 = deriv[i], deriv[i + 1]
        if f0 == 0.0:
            roots.append(float(t[i]))
            kinds.append("max" if f1 < 0 else "min")
        elif (f0 > 0) != (f1 > 0) and f1 != 0.0:
            r = refine(float(t[i]), float(t[i + 1]), float(f0))
            roots.append(r)
            kinds.append("max" if f0 > 0 else "min")
    if len(t) and deriv[-1] == 0.0:
        roots.append(float(t[-1]))
        kinds.append("max" if (len(deriv) > 1 and deriv[-2] > 0) else "min")
    return StationaryScan(roots=tuple(roots), kinds=tuple(kinds), warnings=tuple(warnings))


def arithmetic_shift_density(
    ensemble: HeckeEnsemble,
    family: CoefficientFamily,
    lambda_grid: np.ndarray,
) -> np.ndarray:
    """EXPLORATORY prime-indexed shift density on a uniform grid.

    Computes sum_p log A_p(lambda) with the branch tracked continuously along
    the grid (anchored to the principal branch at the node nearest 0, where
    A_p = 1 when the grid contains 0), then returns the real part of the
    central-difference derivative divided by 2 pi i.  Grid points where some
    |A_p| < 1e-12 are rejected since the branch becomes ambiguous.
    """
    grid = np.asarray(lambda_grid, dtype=float)
    if grid.ndim != 1 or len(grid) < 3:
        raise ValueError("lambda_grid must be a 1-d grid with at least 3 nodes")
    steps = np.diff(grid)
    h = float(steps[0])
    if h <= 0.0 or np.abs(steps - h).max() > 1e-9 * abs(h):
        raise ValueError("lambda_grid must be uniform and increasing")
    total_log = np.zeros(len(grid), dtype=complex)
    anchor = int(np.argmin(np.abs(grid)))
    for p in ensemble.primes:
        a = local_factor_grid(ensemble, family, p, grid)
        mods = np.abs(a)
        if mods.min() < 1e-12:
            bad = grid[int(np.argmin(mods))]
            raise ValueError(
                f"|A_{p}| vanishes near lambda={bad:.6g}; branch tracking is ambiguous"
            )
        # Continuous phase: accumulate principal increments between nodes,
        # then pin the node nearest 0 to its principal argument.
        increments = np.angle(a[1:] / a[:-1])
        phase = np.concatenate([[0.0], np.cumsum(increments)])
        phase += np.angle(a[anchor]) - phase[anchor]
        total_log += np.log(mods) + 1j * phase
    density = np.empty(len(grid), dtype=complex)
    density[1:-1] = (total_log[2:] - total_log[:-2]) / (2.0 * h)
    density[0] = (total_log[1] - total_log[0]) / h
    density[-1] = (total_log[-1] - total_log[-2]) / h
    return (density / (2.0j * np.pi)).real


def is_jump_location(s: Staircase, lam: float) -> bool:
    """True when |lam| coincides with a stored jump location."""
    x = abs(lam)
    k = bisect_left(s.locations, x)
    return k < len(s.locations) and s.locations[k] == x
