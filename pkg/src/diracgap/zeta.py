"""Zero-ordinate table, affine alignment, and staircase-mismatch diagnostics.

The table of nontrivial-zero ordinates is bundled data (first 100 ordinates
to 9 decimal places) behind a validation gate; nothing is computed from the
zeta function at runtime.  The alignment lambda -> a lambda + b is the
least-squares fit of the leading gap eigenvalues onto the leading ordinates,
with a documented fallback when the unconstrained slope is not positive.

The staircase mismatch E_step(T) is the time-averaged L1 distance between
two odd integer staircases on [-T, T]: the mapped model staircase (jumps at
+-(a lambda_k + b) with weights m_k) and the signed zero staircase (unit
jumps at +-gamma_k).  The integrand is piecewise constant, so the integral
is evaluated exactly by a breakpoint sweep; both halves are swept in
mirrored order, which makes the half-interval symmetry exact in floating
point, not just in theory.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

GAMMA1_GATE = (14.13, 14.14)


@dataclass(frozen=True)
class ZeroTable:
    """Ascending positive zero ordinates with a source tag."""

    ordinates: tuple[float, ...]
    source: str = "embedded"

    def __len__(self) -> int:
        return len(self.ordinates)


@dataclass(frozen=True)
class AffineMap:
    """Orientation-preserving map lambda -> a lambda + b."""

    a: float
    b: float
    flagged: bool = False  # least squares gave a <= 0; span fallback used

    def __post_init__(self):
        if not (self.a > 0.0 and math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError(f"affine map requires finite b and a > 0, got a={self.a}")

    def __call__(self, lam):
        return self.a * np.asarray(lam, dtype=float) + self.b


@dataclass(frozen=True)
class DiagnosticsReport:
    """Per-zero deviations and staircase mismatch for one configuration."""

    K: int
    deviations: tuple[float, ...]
    mae: float
    max_abs: float
    e_step: float
    T: float
    affine: AffineMap
    flags: tuple[str, ...] = ()


def _parse_zero_rows(lines, source: str) -> ZeroTable:
    header, *rows = [ln.strip() for ln in lines if ln.strip()]
    if header != "gamma":
        raise ValueError(f"zero table {source}: expected header 'gamma', got {header!r}")
    vals = tuple(float(r) for r in rows)
    if not vals:
        raise ValueError(f"zero table {source} is empty")
    if not GAMMA1_GATE[0] < vals[0] < GAMMA1_GATE[1]:
        raise ValueError(
            f"zero table {source} failed the gamma_1 gate {GAMMA1_GATE}: got {vals[0]}"
        )
    if any(b <= a for a, b in zip(vals, vals[1:])):
        raise ValueError(f"zero table {source} is not strictly ascending")
    return ZeroTable(ordinates=vals, source=source)


def load_zero_table(source: str = "embedded", min_count: int | None = None) -> ZeroTable:
    """Load and validate the ordinate table (bundled resource or CSV path)."""
    if source == "embedded":
        text = resources.files("diracgap").joinpath("data/zeros.csv").read_text()
        table = _parse_zero_rows(text.splitlines(), "embedded")
        if len(table) < 100:
            raise ValueError("bundled zero table is corrupt: fewer than 100 ordinates")
    else:
        table = _parse_zero_rows(Path(source).read_text().splitlines(), str(source))
    if min_count is not None and len(table) < min_count:
        raise ValueError(
            f"insufficient zeros: requested {min_count}, table holds {len(table)}"
        )
    return table


def fit_affine(lambdas, zeros: ZeroTable, K: int) -> AffineMap:
    """Least-squares a, b minimizing sum_{k<=K} (a lambda_k + b - gamma_k)^2.

    Uses the closed-form normal equations.  If the unconstrained slope is
    not positive (degenerate alignment), falls back to the span ratio
    (gamma_K - gamma_1) / (lambda_K - lambda_1) with b matching the means,
    and flags the result.
    """
    lam = np.asarray(lambdas, dtype=float)
    if K < 2:
        raise ValueError(f"need K >= 2 points to fit an affine map, got K={K}")
    if len(lam) < K:
        raise ValueError(f"insufficient gap eigenvalues: requested K={K}, have {len(lam)}")
    if len(zeros) < K:
        raise ValueError(f"insufficient zeros: requested K={K}, table holds {len(zeros)}")
    x = lam[:K]
    y = np.asarray(zeros.ordinates[:K])
    var = float(np.mean(x * x) - np.mean(x) ** 2)
    if var <= 0.0:
        raise ValueError("degenerate eigenvalue list: all lambda_k equal")
    cov = float(np.mean(x * y) - np.mean(x) * np.mean(y))
    a = cov / var
    if a > 0.0:
        return AffineMap(a=a, b=float(np.mean(y) - a * np.mean(x)))
    a = float((y[-1] - y[0]) / (x[-1] - x[0]))
    return AffineMap(a=a, b=float(np.mean(y) - a * np.mean(x)), flagged=True)


def _odd_staircase_eval(locations, cumulative, lam: float) -> int:
    if lam == 0.0:
        return 0
    if lam < 0.0:
        return -_odd_staircase_eval(locations, cumulative, -lam)
    k = bisect_right(locations, lam)
    return cumulative[k - 1] if k else 0


def _half_sweep(model_jumps, model_cum, zero_jumps, zero_cum, T: float, side: float) -> float:
    # Sweep [0, T] in ascending |x|; evaluate both staircases at side * x.
    # Mirrored sides produce bitwise-identical |differences|, so the two
    # half-integrals agree exactly.
    points = sorted({0.0, T} | {x for x in model_jumps if x < T} | {x for x in zero_jumps if x < T})
    total = 0.0
    for a, b in zip(points, points[1:]):
        mid = side * (0.5 * (a + b))
        diff = _odd_staircase_eval(model_jumps, model_cum, mid) - _odd_staircase_eval(
            zero_jumps, zero_cum, mid
        )
        total += (b - a) * abs(diff)
    return total


def _cumulate(weights) -> list[int]:
    out, run = [], 0
    for w in weights:
        run += int(w)
        out.append(run)
    return out


def staircase_mismatch(
    mapped_locations, multiplicities, zeros: ZeroTable, T: float
) -> tuple[float, float, float]:
    """Exact (1/2T) integral of |xi_model - xi_zero| over [-T, T].

    Returns (e_step, positive_half, negative_half); the halves are exactly
    equal by the mirrored sweep.  Mapped locations at or below zero are
    folded to their absolute value (the mapped spectrum is symmetric).
    """
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T}")
    pairs = sorted(
        (abs(float(v)), int(m)) for v, m in zip(mapped_locations, multiplicities) if v != 0.0
    )
    model_jumps = [v for v, _ in pairs]
    model_cum = _cumulate(m for _, m in pairs)
    zero_jumps = list(zeros.ordinates)
    zero_cum = _cumulate([1] * len(zero_jumps))
    pos = _half_sweep(model_jumps, model_cum, zero_jumps, zero_cum, T, +1.0)
    neg = _half_sweep(model_jumps, model_cum, zero_jumps, zero_cum, T, -1.0)
    return (pos + neg) / (2.0 * T), pos, neg


def diagnostics(
    affine: AffineMap,
    lambdas,
    zeros: ZeroTable,
    K: int,
    T: float,
    multiplicities=None,
) -> DiagnosticsReport:
    """Deviations Delta_k = (a lambda_k + b) - gamma_k plus E_step(T)."""
    lam = np.asarray(lambdas, dtype=float)
    if len(lam) < K:
        raise ValueError(f"insufficient gap eigenvalues: requested K={K}, have {len(lam)}")
    if len(zeros) < K:
        raise ValueError(f"insufficient zeros: requested K={K}, table holds {len(zeros)}")
    if not T > 0.0:
        raise ValueError(f"T must be positive, got {T}")
    mult = [1] * len(lam) if multiplicities is None else list(multiplicities)
    deltas = tuple(float(affine(lam[k]) - zeros.ordinates[k]) for k in range(K))
    mae = sum(abs(d) for d in deltas) / K
    e_step, _, _ = staircase_mismatch(affine(lam), mult, zeros, T)
    flags = ("affine-fallback",) if affine.flagged else ()
    return DiagnosticsReport(
        K=K,
        deviations=deltas,
        mae=mae,
        max_abs=max(abs(d) for d in deltas),
        e_step=e_step,
        T=T,
        affine=affine,
        flags=flags,
    )
