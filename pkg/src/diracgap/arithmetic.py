"""Primes, synthetic Hecke ensembles, and prime-indexed mass data.

The arithmetic input to the truncated Dirac model is a finite prime set S,
one sampled eigenvalue tuple {lambda_p(m)} in [-1, 1] per synthetic mode m,
an even coefficient family eta_p, and the derived mass shifts

    m_m = sum_{p in S} eta_p(lambda_p(m)).

Sampling is fully deterministic and index-keyed: the sample for (seed, p, m)
is a fixed integer mix of those three values, so regeneration is bitwise
stable and independent of iteration order or threading.  All integer mixing
uses splitmix64 (the standard finalizer constants) on the key

    seed XOR (p * 0x9E3779B97F4A7C15) XOR (m * 0xBF58476D1CE4E5B9)

with mode indices m = 1..N_H, and the 53 high bits of the output mapped
affinely onto [-1, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB

MODES = ("iid_uniform", "constant_one")


def splitmix64(x: int) -> int:
    """One splitmix64 step: golden-ratio increment plus the standard finalizer."""
    x = (x + _GAMMA) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def sample_unit(seed: int, p: int, m: int) -> float:
    """Deterministic sample in [-1, 1) keyed by (seed, p, m)."""
    key = (seed ^ ((p * _GAMMA) & _MASK64) ^ ((m * _MIX1) & _MASK64)) & _MASK64
    z = splitmix64(key)
    return 2.0 * (z >> 11) / 2.0**53 - 1.0


def generate_primes(count: int) -> "PrimeSet":
    """First `count` primes, ascending, by sieve of Eratosthenes."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    # Rosser-type overestimate of the nth prime; extend on the rare shortfall.
    bound = 15 if count < 6 else int(count * (np.log(count) + np.log(np.log(count)))) + 3
    while True:
        sieve = np.ones(bound + 1, dtype=bool)
        sieve[:2] = False
        for q in range(2, int(bound**0.5) + 1):
            if sieve[q]:
                sieve[q * q :: q] = False
        primes = np.flatnonzero(sieve)
        if len(primes) >= count:
            return PrimeSet(primes=tuple(int(p) for p in primes[:count]))
        bound *= 2


@dataclass(frozen=True)
class PrimeSet:
    primes: tuple[int, ...]

    def __len__(self) -> int:
        return len(self.primes)

    def __iter__(self):
        return iter(self.primes)

    @property
    def largest(self) -> int:
        return self.primes[-1]


@dataclass(frozen=True)
class CoefficientFamily:
    """Even coefficient family eta_p; only the quadratic kind is implemented.

    Quadratic: eta_p(lambda) = p^-(1+epsilon) * lambda^2, with sup norm
    p^-(1+epsilon) on [-1, 1].  epsilon > 0 is required for summability of
    sum_p ||eta_p||_inf.
    """

    epsilon: float
    kind: str = "quadratic"

    def __post_init__(self):
        if self.kind != "quadratic":
            raise ValueError(f"unsupported coefficient family kind {self.kind!r}")
        if not self.epsilon > 0.0:
            raise ValueError(
                f"epsilon must be positive (got {self.epsilon}): the prime sum "
                "sum_p p^-(1+epsilon) diverges otherwise"
            )

    def eta(self, p: int, lam):
        """eta_p(lambda), vectorized over lambda."""
        lam = np.asarray(lam, dtype=float)
        return p ** -(1.0 + self.epsilon) * lam * lam

    def sup_norm(self, p: int) -> float:
        return p ** -(1.0 + self.epsilon)


def eta_eval(family: CoefficientFamily, p: int, lam: float) -> float:
    """Scalar evaluation of eta_p at lambda."""
    return float(family.eta(p, lam))


@dataclass(frozen=True)
class HeckeEnsemble:
    """Joint synthetic eigenvalue samples lambda_p(m), p in S, m = 1..N_H.

    samples[i, m-1] is the value for the i-th prime and mode m.  The array is
    a pure function of (seed, primes, n_modes, mode) and regenerates bitwise
    identically.
    """

    primes: PrimeSet
    n_modes: int
    seed: int
    mode: str
    samples: np.ndarray = field(repr=False, compare=False)

    def row(self, p: int) -> np.ndarray:
        """Samples for one prime, indexed by mode."""
        try:
            i = self.primes.primes.index(p)
        except ValueError:
            raise ValueError(f"prime {p} is not in the ensemble's prime set") from None
        return self.samples[i]


def sample_hecke_ensemble(
    primes: PrimeSet, n_modes: int, seed: int, mode: str = "iid_uniform"
) -> HeckeEnsemble:
    """Generate the deterministic ensemble for (seed, primes, n_modes, mode)."""
    if n_modes < 1:
        raise ValueError(f"n_modes must be >= 1, got {n_modes}")
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if not 0 <= seed <= _MASK64:
        raise ValueError("seed must fit in 64 unsigned bits")
    if mode == "constant_one":
        samples = np.ones((len(primes), n_modes))
    else:
        samples = np.empty((len(primes), n_modes))
        for i, p in enumerate(primes):
            samples[i] = [sample_unit(seed, p, m) for m in range(1, n_modes + 1)]
    samples.setflags(write=False)
    return HeckeEnsemble(primes=primes, n_modes=n_modes, seed=seed, mode=mode, samples=samples)


@dataclass(frozen=True)
class MassShifts:
    """Per-mode mass shifts m_m, on the same energy scale as the bands."""

    values: np.ndarray = field(repr=False, compare=False)

    def __len__(self) -> int:
        return len(self.values)


def mass_shifts(ensemble: HeckeEnsemble, family: CoefficientFamily) -> MassShifts:
    """m_m = sum_{p in S} eta_p(lambda_p(m)), accumulated in ascending-prime order.

    The summation order is fixed for float reproducibility.
    """
    total = np.zeros(ensemble.n_modes)
    for i, p in enumerate(ensemble.primes):
        total += family.eta(p, ensemble.samples[i])
    total.setflags(write=False)
    return MassShifts(values=total)


def summability_report(
    family: CoefficientFamily, primes: PrimeSet
) -> tuple[float, float]:
    """(partial_sum, analytic_tail_bound) for sum_p ||eta_p||_inf.

    The tail over omitted primes is overcounted by the integer tail
    sum_{n > P_max} n^-(1+eps) <= P_max^-eps / eps, which is rigorous and
    monotone decreasing as the prime set grows.
    """
    eps = family.epsilon
    partial = 0.0
    for p in primes:
        partial += family.sup_norm(p)
    tail = primes.largest**-eps / eps
    return partial, tail


def local_factor(
    ensemble: HeckeEnsemble, family: CoefficientFamily, p: int, t: float
) -> complex:
    """Empirical local factor A_p(t) = mean_m exp(i t eta_p(lambda_p(m))).

    A_p(0) = 1 exactly, |A_p(t)| <= 1, and A_p(-t) = conj(A_p(t)).
    """
    eta = family.eta(p, ensemble.row(p))
    return complex(np.mean(np.exp(1j * t * eta)))


def local_factor_grid(
    ensemble: HeckeEnsemble, family: CoefficientFamily, p: int, t_grid: np.ndarray
) -> np.ndarray:
    """A_p evaluated on a whole grid of t values at once."""
    eta = family.eta(p, ensemble.row(p))
    return np.exp(1j * np.multiply.outer(np.asarray(t_grid, dtype=float), eta)).mean(axis=1)
