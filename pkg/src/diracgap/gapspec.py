"""Gap eigenvalue enumeration and aggregation for the truncated Dirac model.

The chiral background has spectrum +-(band - E*) for every stored Floquet
band; a fiber (n, j, m) contributes the candidate pair

    +-v,   v = E_n(kappa_j) - E* + m_m,

which is a gap eigenvalue exactly when it clears every interval of the
symmetric band set by more than a membership margin.  Values are filtered
against the full chiral band set (bands and their negations), not just the
gap containing E*, since that set is the essential spectrum of the doubled
operator.  Positive survivors are grouped into a multiplicity-weighted gap
spectrum; the full spectrum is its symmetric closure {+-lambda_k}.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass, field

import numpy as np

from .arithmetic import MassShifts
from .floquet import BandStructure

MEMBERSHIP_MARGIN = 1e-8
GROUPING_TOLERANCE = 1e-9
GROUPING_DECIMALS = 12


@dataclass(frozen=True)
class DiracBandSet:
    """Disjoint sorted closed intervals, symmetric under negation."""

    intervals: tuple[tuple[float, float], ...]

    @property
    def lowers(self) -> np.ndarray:
        return np.array([iv[0] for iv in self.intervals])

    @property
    def uppers(self) -> np.ndarray:
        return np.array([iv[1] for iv in self.intervals])


@dataclass(frozen=True)
class GapEigenvalue:
    value: float
    fiber: tuple[int, int, int]  # (band n, node j, mode m), m 1-based


@dataclass(frozen=True)
class GapSpectrum:
    """Sorted positive gap eigenvalues with multiplicities and provenance.

    positive_values[k] carries multiplicity multiplicities[k]; provenance[k]
    lists the (n, j, m) fibers grouped into it.  The physical spectrum is the
    symmetric closure {+-lambda_k}.
    """

    positive_values: tuple[float, ...]
    multiplicities: tuple[int, ...]
    provenance: tuple[tuple[tuple[int, int, int], ...], ...] = field(repr=False)

    def __len__(self) -> int:
        return len(self.positive_values)


def dirac_band_set(bands: BandStructure, e_star: float) -> DiracBandSet:
    """Shift bands by -E*, close under negation, and merge overlaps.

    E* must lie outside every band (inside a gap); a reference energy inside
    a band is rejected.
    """
    raw = []
    for alpha, beta in bands.band_edges:
        if alpha <= e_star <= beta:
            raise ValueError(
                f"reference energy {e_star} lies inside the band [{alpha}, {beta}]"
            )
        lo, hi = alpha - e_star, beta - e_star
        raw.append((lo, hi))
        raw.append((-hi, -lo))
    raw.sort()
    merged = [raw[0]]
    for lo, hi in raw[1:]:
        if lo <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], hi))
        else:
            merged.append((lo, hi))
    return DiracBandSet(intervals=tuple(merged))


def band_distance(values, band_set: DiracBandSet) -> np.ndarray:
    """Distance from each value to the union of band intervals (0 if inside)."""
    v = np.atleast_1d(np.asarray(values, dtype=float))
    lows = band_set.lowers
    highs = band_set.uppers
    idx = np.searchsorted(lows, v, side="right") - 1
    dist = np.full(v.shape, np.inf)
    has_left = idx >= 0
    inside = has_left & (v <= highs[np.maximum(idx, 0)])
    dist[has_left] = v[has_left] - highs[idx[has_left]]
    has_right = idx + 1 < len(lows)
    dist[has_right] = np.minimum(dist[has_right], lows[idx[has_right] + 1] - v[has_right])
    dist[inside] = 0.0
    return dist


def outside_bands(values, band_set: DiracBandSet, margin: float = MEMBERSHIP_MARGIN) -> np.ndarray:
    """Boolean mask of values clearing every band interval by more than margin."""
    return band_distance(values, band_set) > margin


def fiber_gap_eigenvalues(
    bands: BandStructure,
    e_star: float,
    shifts: MassShifts,
    band_set: DiracBandSet,
    margin: float = MEMBERSHIP_MARGIN,
) -> list[GapEigenvalue]:
    """Enumerate +-(E_n(kappa_j) - E* + m_m) surviving the gap filter.

    Emission order is lexicographic in (n, j, m, sign) with + before -, so
    the result is schedule-independent.  An empty list is a valid outcome.
    """
    q = bands.bands - e_star
    n_bands, n_nodes = q.shape
    m_vals = shifts.values
    # v[n, j, m]; the band set is negation-symmetric, so one distance test
    # covers both signs of each candidate.
    v = q[:, :, None] + m_vals[None, None, :]
    keep = outside_bands(v.ravel(), band_set, margin).reshape(v.shape)
    out: list[GapEigenvalue] = []
    for n in range(n_bands):
        for j in range(n_nodes):
            for m in range(len(m_vals)):
                if keep[n, j, m]:
                    val = v[n, j, m]
                    fiber = (n, j, m + 1)
                    out.append(GapEigenvalue(value=float(val), fiber=fiber))
                    out.append(GapEigenvalue(value=float(-val), fiber=fiber))
    return out


def aggregate_spectrum(values: list[GapEigenvalue]) -> GapSpectrum:
    """Group positive values within the grouping tolerance, ascending.

    Values are rounded to 12 decimals first; groups chain while consecutive
    rounded values are within GROUPING_TOLERANCE.  Multiplicity is group
    size and the group's smallest rounded value is the representative.
    """
    positives = [
        (round(gev.value, GROUPING_DECIMALS), gev.fiber)
        for gev in values
        if round(gev.value, GROUPING_DECIMALS) > 0.0
    ]
    positives.sort()
    lams: list[float] = []
    mults: list[int] = []
    prov: list[list] = []
    previous = -np.inf
    for val, fiber in positives:
        if lams and val - previous <= GROUPING_TOLERANCE:
            mults[-1] += 1
            prov[-1].append(fiber)
        else:
            lams.append(val)
            mults.append(1)
            prov.append([fiber])
        previous = val
    return GapSpectrum(
        positive_values=tuple(lams),
        multiplicities=tuple(mults),
        provenance=tuple(tuple(p) for p in prov),
    )


def gap_index_of(value: float, band_set: DiracBandSet) -> int:
    """Index of the band-set gap containing value (-1 below, len-1 above)."""
    return bisect_right([iv[0] for iv in band_set.intervals], value) - 1
