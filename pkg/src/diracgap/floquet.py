"""Floquet-Bloch band structure of an even periodic Hill operator.

The operator is H = -d^2/dy^2 + U(y) with U even and L-periodic, given as a
finite cosine series U(y) = sum_r c_r cos(2 pi r y / L).  Bloch decomposition
reduces H to a family of fibers H(kappa) over the quasi-momentum
kappa in [-pi/L, pi/L].  In the plane-wave basis e^{2 pi i m y / L},
m = -M..M, each fiber is the real symmetric matrix

    A[m][m]   = (kappa + 2 pi m / L)^2
    A[m][m']  = c_{|m-m'|} / 2      for 1 <= |m-m'| <= R,

banded with bandwidth R (tridiagonal for a single cosine).  Bands are the
ranges of the ascending fiber eigenvalues E_n(kappa); evenness of U gives
E_n(-kappa) = E_n(kappa), which we exploit by solving the non-negative half
grid only and mirroring.

Fiber eigenvalues are computed with a bisection-based banded solver
(LAPACK sbevx via scipy), which resolves the low-lying spectrum far below
the 1e-10 contract even though the matrix norm grows like (2 pi M / L)^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigvals_banded

# A gap narrower than this is treated as closed (numerically touching bands).
GAP_TOLERANCE = 1e-6


class NoOpenGapError(ValueError):
    """Raised when a reference energy is requested but no gap is open."""


class FiberSolveError(RuntimeError):
    """Eigensolver failure on a single quasi-momentum fiber."""


@dataclass(frozen=True)
class PotentialSpec:
    """Even periodic potential given by a cosine series.

    cosine_coefficients[r-1] is the coefficient of cos(2 pi r y / L); the
    representation is even by construction.  An empty tuple is the free
    potential U = 0.
    """

    period: float = 1.0
    cosine_coefficients: tuple[float, ...] = ()

    def __post_init__(self):
        if not (self.period > 0.0 and math.isfinite(self.period)):
            raise ValueError(f"period must be positive and finite, got {self.period}")
        coeffs = tuple(float(c) for c in self.cosine_coefficients)
        if any(not math.isfinite(c) for c in coeffs):
            raise ValueError("cosine coefficients must be finite")
        object.__setattr__(self, "cosine_coefficients", coeffs)

    @property
    def harmonic_count(self) -> int:
        return len(self.cosine_coefficients)

    def evaluate(self, y):
        """U(y), vectorized over y."""
        y = np.asarray(y, dtype=float)
        u = np.zeros_like(y)
        for r, c in enumerate(self.cosine_coefficients, start=1):
            u += c * np.cos(2.0 * np.pi * r * y / self.period)
        return u

    @classmethod
    def mathieu(cls) -> "PotentialSpec":
        """Default potential U(y) = 2 cos(2 pi y), period 1."""
        return cls(period=1.0, cosine_coefficients=(2.0,))

    @classmethod
    def free(cls, period: float = 1.0) -> "PotentialSpec":
        return cls(period=period, cosine_coefficients=())


@dataclass(frozen=True)
class QuasiMomentumGrid:
    """Uniform symmetric grid on [-pi/L, pi/L] with an odd node count.

    Nodes satisfy nodes[j] == -nodes[n-1-j] bitwise: the negative half is
    constructed by negating the positive half, never recomputed.
    """

    n_nodes: int
    period: float
    nodes: np.ndarray = field(repr=False, compare=False, default=None)

    def __post_init__(self):
        if self.n_nodes < 3 or self.n_nodes % 2 == 0:
            raise ValueError(f"n_nodes must be odd and >= 3, got {self.n_nodes}")
        if not self.period > 0.0:
            raise ValueError("period must be positive")
        half = (self.n_nodes - 1) // 2
        edge = np.pi / self.period
        positive = np.array([edge * j / half for j in range(half + 1)])
        nodes = np.concatenate([-positive[:0:-1], positive])
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def half_index(self) -> int:
        """Index of the kappa = 0 node."""
        return (self.n_nodes - 1) // 2

    def mirror(self, j: int) -> int:
        return self.n_nodes - 1 - j


@dataclass(frozen=True)
class GapInterval:
    """Open spectral gap (beta_n, alpha_{n+1}) between bands n and n+1."""

    lower: float
    upper: float
    index: int

    @property
    def width(self) -> float:
        return self.upper - self.lower

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lower + self.upper)


@dataclass(frozen=True)
class BandStructure:
    """Band functions E_n(kappa_j) with edges and open gaps.

    bands has shape (n_bands, n_nodes); band_edges[n] = (alpha_n, beta_n).
    """

    potential: PotentialSpec
    grid: QuasiMomentumGrid
    truncation: int
    bands: np.ndarray
    band_edges: tuple[tuple[float, float], ...]
    gaps: tuple[GapInterval, ...]

    @property
    def n_bands(self) -> int:
        return self.bands.shape[0]


def build_fiber_matrix(potential: PotentialSpec, kappa: float, M: int) -> np.ndarray:
    """Dense real symmetric fiber matrix of size 2M+1 at quasi-momentum kappa.

    Rejects M < R, since the potential harmonics beyond the band width would
    be silently dropped, and rejects non-finite or out-of-zone kappa.
    """
    _check_fiber_args(potential, kappa, M)
    L = potential.period
    m = np.arange(-M, M + 1)
    a = np.diag((kappa + 2.0 * np.pi * m / L) ** 2)
    n = 2 * M + 1
    for r, c in enumerate(potential.cosine_coefficients, start=1):
        half = c / 2.0
        idx = np.arange(n - r)
        a[idx, idx + r] = half
        a[idx + r, idx] = half
    return a


def _check_fiber_args(potential: PotentialSpec, kappa: float, M: int) -> None:
    R = potential.harmonic_count
    if M < max(R, 1):
        raise ValueError(
            f"truncation M={M} must be >= R={R}; smaller M drops potential harmonics"
        )
    if not math.isfinite(kappa):
        raise ValueError(f"non-finite quasi-momentum {kappa!r}")
    if abs(kappa) > np.pi / potential.period + 1e-12:
        raise ValueError(f"kappa={kappa} outside the Brillouin zone [-pi/L, pi/L]")


def _fiber_band_storage(potential: PotentialSpec, kappa: float, M: int) -> np.ndarray:
    # Upper banded storage for scipy.linalg.eigvals_banded (row R is the diagonal).
    L = potential.period
    R = potential.harmonic_count
    n = 2 * M + 1
    m = np.arange(-M, M + 1)
    ab = np.zeros((R + 1, n))
    ab[R, :] = (kappa + 2.0 * np.pi * m / L) ** 2
    for r, c in enumerate(potential.cosine_coefficients, start=1):
        ab[R - r, r:] = c / 2.0
    return ab


def fiber_eigenvalues(potential: PotentialSpec, kappa: float, M: int, count: int) -> np.ndarray:
    """Lowest `count` fiber eigenvalues, ascending."""
    _check_fiber_args(potential, kappa, M)
    n = 2 * M + 1
    if count > n:
        raise ValueError(f"requested {count} eigenvalues from a fiber of size {n}")
    ab = _fiber_band_storage(potential, kappa, M)
    try:
        return eigvals_banded(ab, select="i", select_range=(0, count - 1))
    except np.linalg.LinAlgError as err:  # pragma: no cover - driver failure
        raise FiberSolveError(f"eigensolver failed at kappa={kappa}: {err}") from err


def compute_band_structure(
    potential: PotentialSpec,
    grid: QuasiMomentumGrid,
    M: int,
    n_bands: int,
    gap_tolerance: float = GAP_TOLERANCE,
) -> BandStructure:
    """Solve every fiber on the non-negative half grid and mirror.

    Only the lowest n_bands eigenvalues per fiber are kept; n_bands <= 2M
    keeps them well resolved.  Band edges are grid extrema, and gaps wider
    than gap_tolerance are recorded as open.
    """
    if n_bands < 1:
        raise ValueError("n_bands must be >= 1")
    if n_bands > 2 * M:
        raise ValueError(f"n_bands={n_bands} exceeds 2M={2 * M}; increase M")
    if grid.period != potential.period:
        raise ValueError("grid and potential periods disagree")

    n = grid.n_nodes
    half = grid.half_index
    bands = np.empty((n_bands, n))
    for j in range(half, n):
        try:
            bands[:, j] = fiber_eigenvalues(potential, grid.nodes[j], M, n_bands)
        except FiberSolveError as err:
            raise FiberSolveError(f"fiber j={j}: {err}") from err
    for j in range(half):
        bands[:, j] = bands[:, grid.mirror(j)]
    bands.setflags(write=False)

    edges = tuple((float(bands[b].min()), float(bands[b].max())) for b in range(n_bands))
    gaps = []
    for b in range(n_bands - 1):
        lower = edges[b][1]
        upper = edges[b + 1][0]
        if upper - lower > gap_tolerance:
            gaps.append(GapInterval(lower=lower, upper=upper, index=b))
    return BandStructure(
        potential=potential,
        grid=grid,
        truncation=M,
        bands=bands,
        band_edges=edges,
        gaps=tuple(gaps),
    )


def select_reference_energy(bands: BandStructure, gap_index: int) -> float:
    """Midpoint of the selected open gap."""
    if not bands.gaps:
        raise NoOpenGapError(
            "no open gaps in the band structure; increase the potential strength"
        )
    if not 0 <= gap_index < len(bands.gaps):
        raise ValueError(
            f"gap_index={gap_index} out of range; {len(bands.gaps)} open gaps available"
        )
    return bands.gaps[gap_index].midpoint
