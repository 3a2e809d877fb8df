"""Multi-time measurement statistics of a quantum system on a time grid.

A sequence of projective measurements of F at times 0 < t_1 < ... < t_n is
described by the joint distribution

    P_n(f_n..f_1) = tr[ P(f_n,t_n)...P(f_1,t_1) ρ P(f_1,t_1)...P(f_n,t_n) ]

and its two-sided complex generalization with independent left/right
projector sequences

    Q_n(f, f_-) = tr[ P(f_n,t_n)...P(f_1,t_1) ρ P(f_-1,t_1)...P(f_-n,t_n) ]

where P(f,t) = U†(t) P(f) U(t). Tables are stored as dense ndarrays over
outcome-index tuples ordered chronologically: axis k of a Born table is the
outcome at t_{k+1}; a bi-probability table interleaves left/right axes as
(f_1, f_-1, f_2, f_-2, ...).
"""

from __future__ import annotations

import functools
import itertools
import string
from dataclasses import dataclass

import numpy as np

from .errors import (
    DimensionMismatch,
    IndexOutOfRange,
    NumericalInvariantViolation,
    TableTooLarge,
    ZeroProbabilityHistory,
)
from .linalg import DEFAULT_TOLERANCES, Tolerances, propagator, require_density, require_hermitian
from .spectral import SpectralDecomposition, heisenberg_projectors, spectral_decompose

DEFAULT_TABLE_CAP = 1_000_000

_LETTERS = string.ascii_letters


@dataclass(frozen=True)
class TimeGrid:
    """Strictly increasing positive measurement times t_1 < ... < t_n."""

    times: tuple[float, ...]

    def __post_init__(self):
        ts = tuple(float(t) for t in self.times)
        object.__setattr__(self, "times", ts)
        if len(ts) < 1:
            raise ValueError("a time grid needs at least one time")
        if not all(np.isfinite(ts)):
            raise ValueError("grid times must be finite")
        if ts[0] <= 0 or any(b <= a for a, b in zip(ts, ts[1:])):
            raise ValueError(f"grid times must satisfy 0 < t_1 < ... < t_n, got {ts}")

    @property
    def n(self):
        return len(self.times)

    def without(self, position):
        """Grid with the 1-based position removed (needs n ≥ 2)."""
        self._check_position(position)
        if self.n < 2:
            raise IndexOutOfRange("cannot remove a time from a single-time grid")
        return TimeGrid(self.times[: position - 1] + self.times[position:])

    def prefix(self, n):
        return TimeGrid(self.times[:n])

    def _check_position(self, position):
        if not 1 <= position <= self.n:
            raise IndexOutOfRange(
                f"position {position} outside 1..{self.n}"
            )


@dataclass(frozen=True)
class QuantumSystem:
    """Hamiltonian, decomposed observable, and initial state of one system."""

    H: np.ndarray
    F: SpectralDecomposition
    rho0: np.ndarray

    @classmethod
    def from_operators(cls, H, F, rho0, tolerances: Tolerances = DEFAULT_TOLERANCES):
        Hm = require_hermitian(H, tolerances.hermiticity, "H")
        sd = F if isinstance(F, SpectralDecomposition) else spectral_decompose(
            F, tolerances.cluster, tolerances.hermiticity
        )
        rho = require_density(rho0, tolerances.density, "rho0")
        if not (Hm.shape[0] == sd.dim == rho.shape[0]):
            raise DimensionMismatch(
                f"inconsistent dims: H {Hm.shape[0]}, F {sd.dim}, rho0 {rho.shape[0]}"
            )
        return cls(H=Hm, F=sd, rho0=rho)

    @property
    def dim(self):
        return self.F.dim


@dataclass(frozen=True)
class BornTable:
    """Joint distribution over outcome-index tuples, axes chronological."""

    grid: TimeGrid
    eigenvalues: np.ndarray
    dist: np.ndarray

    @property
    def n(self):
        return self.grid.n

    @property
    def n_outcomes(self):
        return len(self.eigenvalues)

    def prob(self, outcomes):
        return float(self.dist[tuple(outcomes)])

    def items(self):
        """(outcome tuple, probability) pairs in lexicographic order."""
        m, n = self.n_outcomes, self.n
        for tup in itertools.product(range(m), repeat=n):
            yield tup, float(self.dist[tup])

    def clamped(self):
        """Copy with roundoff negatives zeroed (report/sampling boundary)."""
        return np.maximum(self.dist, 0.0)


@dataclass(frozen=True)
class BiProbTable:
    """Two-sided complex table; axes interleaved (f_1, f_-1, f_2, f_-2, ...)."""

    grid: TimeGrid
    eigenvalues: np.ndarray
    dist: np.ndarray

    @property
    def n(self):
        return self.grid.n

    @property
    def n_outcomes(self):
        return len(self.eigenvalues)

    def value(self, outcomes, outcomes_minus):
        idx = tuple(np.ravel([*zip(outcomes, outcomes_minus)]))
        return complex(self.dist[idx])

    def diagonal(self):
        """The Born distribution sitting on the diagonal f_- = f."""
        n = self.n
        subs = "".join(_LETTERS[k] * 2 for k in range(n))
        out = "".join(_LETTERS[k] for k in range(n))
        diag = np.einsum(f"{subs}->{out}", self.dist)
        return BornTable(self.grid, self.eigenvalues, diag.real)

    def items(self):
        m, n = self.n_outcomes, self.n
        for tup in itertools.product(range(m), repeat=2 * n):
            yield tup[0::2], tup[1::2], complex(self.dist[tup])


def _heisenberg_family(sys, grid):
    return [heisenberg_projectors(sys.F, sys.H, t) for t in grid.times]


def _check_cap(entries, cap, what):
    if entries > cap:
        raise TableTooLarge(
            f"{what} would hold {entries} entries, exceeding the cap of {cap}"
        )


@functools.singledispatch
def born_table(source, grid, cap=DEFAULT_TABLE_CAP):
    """Joint measurement distribution for any supported table source."""
    raise TypeError(f"no Born-table builder registered for {type(source).__name__}")


@functools.singledispatch
def biprob_table(source, grid, cap=DEFAULT_TABLE_CAP):
    """Bi-probability table for any supported table source."""
    raise TypeError(f"no bi-probability builder registered for {type(source).__name__}")


def born_distribution(sys: QuantumSystem, grid: TimeGrid, cap=DEFAULT_TABLE_CAP):
    """Exact joint distribution of n sequential projective measurements."""
    m, d, n = sys.F.n_outcomes, sys.dim, grid.n
    _check_cap(m**n, cap, "Born table")
    T = sys.rho0[None]
    for P in _heisenberg_family(sys, grid):
        T = np.einsum("aij,njk,akl->nail", P, T, P).reshape(-1, d, d)
    probs = np.einsum("nii->n", T).real.reshape((m,) * n)
    total = probs.sum()
    if not np.isfinite(total) or abs(total - 1.0) > 1e-10:
        raise NumericalInvariantViolation(
            f"Born table total {total} differs from 1 beyond 1e-10"
        )
    return BornTable(grid, sys.F.eigenvalues.copy(), probs)


def bi_probability(sys: QuantumSystem, grid: TimeGrid, cap=DEFAULT_TABLE_CAP):
    """Exact bi-probability table with independent left/right sequences."""
    m, d, n = sys.F.n_outcomes, sys.dim, grid.n
    _check_cap(m ** (2 * n), cap, "bi-probability table")
    T = sys.rho0[None]
    for P in _heisenberg_family(sys, grid):
        T = np.einsum("aij,njk,bkl->nabil", P, T, P).reshape(-1, d, d)
    q = np.einsum("nii->n", T).reshape((m, m) * n)
    total = q.sum()
    if not np.isfinite(total.real) or abs(total - 1.0) > 1e-10:
        raise NumericalInvariantViolation(
            f"bi-probability total {total} differs from 1 beyond 1e-10"
        )
    return BiProbTable(grid, sys.F.eigenvalues.copy(), q)


born_table.register(QuantumSystem, born_distribution)
biprob_table.register(QuantumSystem, bi_probability)


def conditional_state(
    sys: QuantumSystem,
    outcomes,
    grid: TimeGrid | None,
    t_next,
    prob_floor=DEFAULT_TOLERANCES.prob_floor,
):
    """State at ``t_next`` conditioned on a measurement history.

    ``outcomes``/``grid`` give the history (may be empty: pass ``()`` and
    ``None``); the state is the collapsed-and-renormalized chain propagated
    to ``t_next``.
    """
    outcomes = tuple(outcomes)
    if (grid is None) != (len(outcomes) == 0):
        raise ValueError("history outcomes and grid must be both empty or both given")
    if grid is not None:
        if len(outcomes) != grid.n:
            raise DimensionMismatch(
                f"history of {len(outcomes)} outcomes on a grid of {grid.n} times"
            )
        if t_next <= grid.times[-1]:
            raise ValueError(f"t_next {t_next} must exceed the last history time")
        M = sys.rho0
        for k, P in enumerate(_heisenberg_family(sys, grid)):
            Pk = P[outcomes[k]]
            M = Pk @ M @ Pk
        p = np.trace(M).real
        if p <= prob_floor:
            raise ZeroProbabilityHistory(
                f"history probability {p:.3e} at or below floor {prob_floor:.1e}"
            )
        M = M / p
    else:
        M = sys.rho0
    U = propagator(sys.H, t_next)
    return U @ M @ U.conj().T


def marginalize(table: BornTable, position):
    """Sum out the outcome at the 1-based position; grid loses that time."""
    if table.n < 2:
        raise IndexOutOfRange("marginalize needs a table of order n ≥ 2")
    table.grid._check_position(position)
    return BornTable(
        table.grid.without(position),
        table.eigenvalues,
        table.dist.sum(axis=position - 1),
    )


def marginalize_pair(table: BiProbTable, position):
    """Sum out the (f_i, f_-i) pair at the 1-based position."""
    if table.n < 2:
        raise IndexOutOfRange("marginalize_pair needs a table of order n ≥ 2")
    table.grid._check_position(position)
    ax = 2 * (position - 1)
    return BiProbTable(
        table.grid.without(position),
        table.eigenvalues,
        table.dist.sum(axis=(ax, ax + 1)),
    )
