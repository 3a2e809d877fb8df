"""A quantum system coupled to the measured observable, and its surrogate.

The joint model is H_os = H_o ⊗ 1 + 1 ⊗ H + λ G_o ⊗ F. The exact reduced
state of the coupled system (interaction picture) is computed by a full
joint matrix exponential followed by a partial trace and a frame rotation —
never by a perturbative series. When the observable admits a surrogate
field, the same reduced state is reproduced by averaging the propagation
under the stochastic Hamiltonian H_o + λ f(τ) G_o over sampled trajectories;
each piecewise-constant segment contributes one exact matrix exponential.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionCap, DimensionMismatch
from .linalg import (
    DEFAULT_TOLERANCES,
    Tolerances,
    kron,
    partial_trace,
    propagator,
    require_density,
    require_hermitian,
    trace_distance,
)
from .process import (
    DEFAULT_TABLE_CAP,
    QuantumSystem,
    TimeGrid,
    bi_probability,
)
from .sampler import Ensemble, Trajectory
from .spectral import SpectralDecomposition

DEFAULT_JOINT_DIM_CAP = 32


@dataclass(frozen=True)
class ObserverSystem:
    """Free Hamiltonian, coupling operator, initial state, coupling strength."""

    H_o: np.ndarray
    G_o: np.ndarray
    rho_o: np.ndarray
    coupling: float

    @classmethod
    def from_operators(cls, H_o, G_o, rho_o, coupling, tolerances: Tolerances = DEFAULT_TOLERANCES):
        Hm = require_hermitian(H_o, tolerances.hermiticity, "H_o")
        Gm = require_hermitian(G_o, tolerances.hermiticity, "G_o")
        rho = require_density(rho_o, tolerances.density, "rho_o")
        if not (Hm.shape == Gm.shape == rho.shape):
            raise DimensionMismatch("H_o, G_o, rho_o must share one dimension")
        return cls(H_o=Hm, G_o=Gm, rho_o=rho, coupling=float(coupling))

    @property
    def dim(self):
        return self.H_o.shape[0]


@dataclass(frozen=True)
class JointScenario:
    """An observer coupled to a measured system, within the dimension cap."""

    obs: ObserverSystem
    sys: QuantumSystem
    dim_cap: int = DEFAULT_JOINT_DIM_CAP

    def __post_init__(self):
        joint = self.obs.dim * self.sys.dim
        if joint > self.dim_cap:
            raise DimensionCap(
                f"joint dimension {joint} exceeds cap {self.dim_cap}"
            )

    @property
    def dims(self):
        return (self.obs.dim, self.sys.dim)


def joint_hamiltonian(js: JointScenario):
    """H_o ⊗ 1 + 1 ⊗ H + λ G_o ⊗ F."""
    d_o, d_s = js.dims
    F = js.sys.F.observable()
    return (
        kron(js.obs.H_o, np.eye(d_s))
        + kron(np.eye(d_o), js.sys.H)
        + js.obs.coupling * kron(js.obs.G_o, F)
    )


def joint_propagate(js: JointScenario, t):
    """exp(-i t H_os) (ρ_o ⊗ ρ) exp(+i t H_os)."""
    U = propagator(joint_hamiltonian(js), t)
    rho = kron(js.obs.rho_o, js.sys.rho0)
    return U @ rho @ U.conj().T


def exact_reduced_state(js: JointScenario, t):
    """Interaction-picture reduced state U_o†(t) tr_s[ρ_os(t)] U_o(t)."""
    reduced = partial_trace(joint_propagate(js, t), "second", js.dims)
    U_o = propagator(js.obs.H_o, t)
    return U_o.conj().T @ reduced @ U_o


def _segment_propagator(obs: ObserverSystem, value, duration, cache=None):
    key = (value, duration)
    if cache is not None and key in cache:
        return cache[key]
    W = propagator(obs.H_o + obs.coupling * value * obs.G_o, duration)
    if cache is not None:
        cache[key] = W
    return W


def stochastic_propagator(obs: ObserverSystem, traj: Trajectory, t, cache=None):
    """Schrödinger propagator from 0 to t under H_o + λ f(τ) G_o.

    The trajectory's piecewise-constant segments each contribute one exact
    matrix exponential; no sub-segment error.
    """
    W = np.eye(obs.dim, dtype=complex)
    for value, duration in traj.segments(t):
        W = _segment_propagator(obs, value, duration, cache) @ W
    return W


def surrogate_propagate(obs: ObserverSystem, traj: Trajectory, t, cache=None):
    """Interaction-picture state driven by one trajectory."""
    W = stochastic_propagator(obs, traj, t, cache)
    U_o = propagator(obs.H_o, t)
    V = U_o.conj().T @ W
    return V @ obs.rho_o @ V.conj().T


@dataclass(frozen=True)
class SurrogateAverage:
    """Monte-Carlo mean state with per-entry standard errors."""

    mean: np.ndarray
    stderr: np.ndarray
    size: int


def surrogate_average(obs: ObserverSystem, ens: Ensemble, t):
    """(1/N) Σ_j surrogate_propagate(obs, f_j, t) with standard errors.

    The mean and the complex per-entry sample variance are reduced with
    numpy pairwise summation over the trajectory index order (deterministic
    for fixed N).
    """
    cache = {}
    states = np.array(
        [surrogate_propagate(obs, traj, t, cache) for traj in ens.trajectories]
    )
    mean = states.mean(axis=0)
    if ens.size > 1:
        var = np.mean(np.abs(states - mean) ** 2, axis=0) * ens.size / (ens.size - 1)
        stderr = np.sqrt(var / ens.size)
    else:
        stderr = np.zeros_like(mean, dtype=float)
    return SurrogateAverage(mean=mean, stderr=stderr, size=ens.size)


@dataclass(frozen=True)
class StateComparison:
    trace_distance: float
    z_scores: np.ndarray

    @property
    def max_z(self):
        return float(np.max(self.z_scores))


def compare(exact, mc, atol=1e-12):
    """Trace distance and entrywise deviation over standard error.

    ``mc`` may be a :class:`SurrogateAverage` (z-scores use its standard
    errors) or a bare matrix. Entries whose deviation is below ``atol`` get
    z = 0 (deterministic entries have vanishing standard error and would
    otherwise divide roundoff by roundoff); a deviation above ``atol`` with
    zero standard error gives z = inf.
    """
    if isinstance(mc, SurrogateAverage):
        mean, stderr = mc.mean, mc.stderr
    else:
        mean = np.asarray(mc, dtype=complex)
        stderr = np.zeros(mean.shape, dtype=float)
    exact = np.asarray(exact, dtype=complex)
    if exact.shape != mean.shape:
        raise DimensionMismatch(f"compare: shapes {exact.shape} vs {mean.shape}")
    dev = np.abs(exact - mean)
    z = np.zeros(dev.shape, dtype=float)
    significant = dev > atol
    with np.errstate(divide="ignore"):
        z[significant] = dev[significant] / stderr[significant]
    return StateComparison(trace_distance=trace_distance(exact, mean), z_scores=z)


def observer_observable_biprob(
    js: JointScenario,
    X_o: SpectralDecomposition,
    grid: TimeGrid,
    cap=DEFAULT_TABLE_CAP,
):
    """Bi-probability of an observer-side observable under the joint dynamics.

    Computed by embedding X_o ⊗ 1 in the joint system and reusing the exact
    bi-probability construction with the joint Hamiltonian.
    """
    d_o, d_s = js.dims
    if X_o.dim != d_o:
        raise DimensionMismatch(
            f"observer observable dim {X_o.dim} does not match observer dim {d_o}"
        )
    eye = np.eye(d_s)
    embedded = SpectralDecomposition(
        eigenvalues=X_o.eigenvalues.copy(),
        projectors=np.array([kron(P, eye) for P in X_o.projectors]),
        multiplicities=tuple(m * d_s for m in X_o.multiplicities),
        dim=d_o * d_s,
        clustered=X_o.clustered,
    )
    joint_sys = QuantumSystem(
        H=joint_hamiltonian(js),
        F=embedded,
        rho0=kron(js.obs.rho_o, js.sys.rho0),
    )
    return bi_probability(joint_sys, grid, cap)
