import math
import time

import numpy as np
import pytest
from scipy.linalg import eigh_tridiagonal

from conftest import toy_band_structure
from diracgap.floquet import (
    NoOpenGapError,
    PotentialSpec,
    QuasiMomentumGrid,
    build_fiber_matrix,
    compute_band_structure,
    fiber_eigenvalues,
    select_reference_energy,
)

# True lowest eigenvalue of the Mathieu fiber at kappa = pi (L=1, c1=2),
# from a 40-digit arbitrary-precision diagonalization at M=20.
TRUE_LOWEST_AT_PI = 8.857098951351016856

PI2 = np.pi * np.pi


def tridiagonal_oracle(kappa, M, count):
    """Full-spectrum tridiagonal diagonalization at high truncation (stemr)."""
    m = np.arange(-M, M + 1)
    d = (kappa + 2.0 * np.pi * m) ** 2
    e = np.ones(2 * M)
    return eigh_tridiagonal(d, e, eigvals_only=True)[:count]


def test_free_fiber_matrix_closed_form():
    a = build_fiber_matrix(PotentialSpec.free(), kappa=0.0, M=2)
    expected = np.diag([16 * PI2, 4 * PI2, 0.0, 4 * PI2, 16 * PI2])
    assert np.array_equal(a, expected)


def test_mathieu_fiber_matrix_m1():
    a = build_fiber_matrix(PotentialSpec.mathieu(), kappa=0.0, M=1)
    assert np.array_equal(np.diag(a), [4 * PI2, 0.0, 4 * PI2])
    assert a[0, 1] == a[1, 0] == 1.0  # c_1 = 2 forces off-diagonal 1
    assert a[0, 2] == a[2, 0] == 0.0
    assert np.array_equal(a, a.T)


def test_fiber_matrix_rejections():
    pot = PotentialSpec.mathieu()
    with pytest.raises(ValueError, match="harmonics"):
        build_fiber_matrix(pot, kappa=0.0, M=0)
    with pytest.raises(ValueError, match="non-finite"):
        build_fiber_matrix(pot, kappa=float("nan"), M=4)
    with pytest.raises(ValueError, match="Brillouin"):
        build_fiber_matrix(pot, kappa=4.0, M=4)


def test_fiber_eigenvalue_count_and_order():
    pot = PotentialSpec.mathieu()
    full = fiber_eigenvalues(pot, 0.3, M=6, count=13)
    assert len(full) == 13  # 2M + 1
    assert np.all(np.diff(full) >= 0)
    dense = np.linalg.eigvalsh(build_fiber_matrix(pot, 0.3, M=6))
    assert np.allclose(full, dense, atol=1e-9)


def test_golden_lowest_eigenvalue_at_zone_edge():
    # Production truncation M=32 against the high-truncation desk oracle.
    prod = fiber_eigenvalues(PotentialSpec.mathieu(), np.pi, M=32, count=1)[0]
    oracle = tridiagonal_oracle(np.pi, 128, 1)[0]
    assert abs(prod - oracle) < 1e-10
    assert abs(prod - TRUE_LOWEST_AT_PI) < 1e-10
    # Dense-matrix route as an independent cross-check; its own rounding is
    # eps * ||A|| ~ 1.3e-10 at M=128, hence the looser tolerance.
    m = np.arange(-128, 129)
    dense = np.linalg.eigvalsh(
        np.diag((np.pi + 2 * np.pi * m) ** 2)
        + np.diag(np.ones(256), 1)
        + np.diag(np.ones(256), -1)
    )[0]
    assert abs(prod - dense) < 5e-10


def test_grid_symmetry_is_bitwise():
    grid = QuasiMomentumGrid(n_nodes=41, period=1.0)
    n = grid.n_nodes
    for j in range(n):
        assert grid.nodes[j] == -grid.nodes[n - 1 - j]
    assert grid.nodes[grid.half_index] == 0.0
    assert grid.nodes[0] == -np.pi
    assert grid.nodes[-1] == np.pi


def test_grid_validation():
    with pytest.raises(ValueError):
        QuasiMomentumGrid(n_nodes=40, period=1.0)
    with pytest.raises(ValueError):
        QuasiMomentumGrid(n_nodes=1, period=1.0)


def test_free_potential_has_no_open_gaps():
    grid = QuasiMomentumGrid(n_nodes=41, period=1.0)
    bands = compute_band_structure(PotentialSpec.free(), grid, M=8, n_bands=4)
    assert bands.gaps == ()
    for n in range(3):
        assert bands.band_edges[n + 1][0] - bands.band_edges[n][1] < 1e-8


def test_band_structure_rejects_underresolved_bands():
    grid = QuasiMomentumGrid(n_nodes=5, period=1.0)
    with pytest.raises(ValueError, match="n_bands"):
        compute_band_structure(PotentialSpec.mathieu(), grid, M=2, n_bands=5)


def test_evenness_bitwise_and_independent(mathieu_bands):
    bands = mathieu_bands
    n = bands.grid.n_nodes
    for j in range(n):
        assert np.array_equal(bands.bands[:, j], bands.bands[:, n - 1 - j])
    # Re-solve a few negative nodes independently, without mirroring.
    pot = bands.potential
    for j in (0, 17, 60, 99):
        kappa = bands.grid.nodes[j]
        assert kappa < 0
        fresh = fiber_eigenvalues(pot, kappa, M=32, count=bands.n_bands)
        assert np.abs(fresh - bands.bands[:, j]).max() < 1e-10


def test_band_ordering_and_interlacing(mathieu_bands):
    bands = mathieu_bands
    assert np.all(np.diff(bands.bands, axis=0) >= 0)
    for gap in bands.gaps:
        alpha_n, beta_n = bands.band_edges[gap.index]
        assert alpha_n <= beta_n < bands.band_edges[gap.index + 1][0]
        assert gap.lower == beta_n
        assert gap.width > 1e-6


def test_mathieu_open_gaps(mathieu_bands):
    # Gap widths ~ 2.0, 5.06e-2, 3.2e-4; gap 3 (9e-7) is below tolerance.
    indices = [g.index for g in mathieu_bands.gaps]
    assert indices == [0, 1, 2]
    assert abs(mathieu_bands.gaps[0].width - 1.999679250962929) < 1e-8


def test_reference_energy(mathieu_bands):
    e_star = select_reference_energy(mathieu_bands, 0)
    assert abs(e_star - 9.856938576832455) < 1e-9
    toy = toy_band_structure([[0.0, 0.5, 1.0], [2.0, 2.5, 3.0]])
    assert select_reference_energy(toy, 0) == 1.5
    with pytest.raises(ValueError, match="out of range"):
        select_reference_energy(toy, 1)


def test_reference_energy_requires_open_gap():
    grid = QuasiMomentumGrid(n_nodes=21, period=1.0)
    bands = compute_band_structure(PotentialSpec.free(), grid, M=6, n_bands=3)
    with pytest.raises(NoOpenGapError, match="potential strength"):
        select_reference_energy(bands, 0)


def test_potential_evenness_by_sampling():
    pot = PotentialSpec(period=2.0, cosine_coefficients=(1.0, -0.3, 0.05))
    y = np.linspace(-3.0, 3.0, 101)
    assert np.array_equal(pot.evaluate(y), pot.evaluate(-y))


def test_potential_validation():
    with pytest.raises(ValueError):
        PotentialSpec(period=0.0)
    with pytest.raises(ValueError):
        PotentialSpec(period=1.0, cosine_coefficients=(float("inf"),))


def test_truncation_convergence_fast():
    # Cheap variant of the M-doubling invariant (full check in acceptance).
    grid = QuasiMomentumGrid(n_nodes=21, period=1.0)
    e16 = compute_band_structure(PotentialSpec.mathieu(), grid, M=16, n_bands=6)
    e32 = compute_band_structure(PotentialSpec.mathieu(), grid, M=32, n_bands=6)
    diff = max(
        max(abs(a - b), abs(c - d))
        for (a, c), (b, d) in zip(e16.band_edges, e32.band_edges)
    )
    assert diff < 1e-8


def test_band_structure_runtime_is_desk_scale():
    grid = QuasiMomentumGrid(n_nodes=201, period=1.0)
    t0 = time.perf_counter()
    compute_band_structure(PotentialSpec.mathieu(), grid, M=32, n_bands=8)
    assert time.perf_counter() - t0 < 5.0
