"""Semigroup-parameterized measurement statistics (quantum regression form).

Instead of a closed-system Hamiltonian, the observable's dynamics is given
by a GKLS semigroup: bi-probabilities become alternating compositions of
projector-sandwich superoperators and semigroup maps,

    Q_n(f, f_-) = tr[ ∏_{i=n..1} 𝒫(f_i, f_-i) Λ(t_i − t_{i-1}) ρ_a ],

with 𝒫(f_+, f_-) : X ↦ P(f_+) X P(f_-), Λ(τ) = exp(τ ℒ_total), t_0 = 0.
This module builds GKLS generators from rate tables, evaluates the tables,
and classifies generators (block-triangular structure, NCGD) against the
consistency conditions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

from .errors import (
    DimensionMismatch,
    NegativeRate,
    NonBlockDiagonalState,
    NonPositiveRate,
    NumericalInvariantViolation,
    UnmatchedFrequency,
)
from .linalg import (
    DEFAULT_TOLERANCES,
    Superoperator,
    commutator_superop,
    require_density,
    require_hermitian,
    unvec,
    vec,
)
from .process import (
    DEFAULT_TABLE_CAP,
    BiProbTable,
    BornTable,
    TimeGrid,
    _check_cap,
    biprob_table,
    born_table,
)
from .sampler import measurement_chain
from .spectral import SpectralDecomposition, default_cluster_tol, spectral_decompose
from .consistency import check_cm, check_sf, ConditionRecord, _record

_SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


@dataclass(frozen=True)
class GKLSTerm:
    frequency: float
    operator: np.ndarray
    rate: complex


@dataclass(frozen=True)
class GKLSGenerator:
    """ℒ_total = −i[H_a, ·] + μ² ℒ with ℒ in GKLS form."""

    dim: int
    H_a: np.ndarray
    terms: tuple[GKLSTerm, ...]
    mu: float
    total: Superoperator


def _validate_generator(matrix, dim, tol=1e-12):
    """Trace and Hermiticity preservation on the matrix-unit basis."""
    scale = max(1.0, float(np.max(np.abs(matrix))))
    for k in range(dim):
        for l in range(dim):
            E = np.zeros((dim, dim), dtype=complex)
            E[k, l] = 1.0
            out = unvec(matrix @ vec(E), dim)
            out_dag = unvec(matrix @ vec(E.conj().T), dim)
            if abs(np.trace(out)) > tol * scale:
                raise NumericalInvariantViolation(
                    f"generator does not preserve trace: |tr ℒE_{k}{l}| = "
                    f"{abs(np.trace(out)):.3e}"
                )
            if np.max(np.abs(out_dag - out.conj().T)) > tol * scale:
                raise NumericalInvariantViolation(
                    "generator does not preserve Hermiticity on the basis"
                )


def build_gkls(H_a, G_a, rates, mu=1.0, cluster_tol=None,
               hermiticity_tol=DEFAULT_TOLERANCES.hermiticity):
    """Assemble a GKLS generator from a coupling operator and a rate table.

    ``rates`` maps Bohr frequencies ω of H_a to complex rates γ_ω with
    Re γ_ω ≥ 0. Each frequency component of the coupling operator is

        G_ω = Σ_{α,α'} δ(ω − ε_α + ε_{α'}) |α⟩⟨α| G_a |α'⟩⟨α'|

    and the dissipative part is
    ℒ = −i[Σ_ω Im(γ_ω) G_ω†G_ω, ·] + Σ_ω 2 Re(γ_ω)(G_ω · G_ω† − ½{G_ω†G_ω, ·}).
    """
    Hm = require_hermitian(H_a, hermiticity_tol, "H_a")
    Gm = require_hermitian(G_a, hermiticity_tol, "G_a")
    if Hm.shape != Gm.shape:
        raise DimensionMismatch("H_a and G_a must share a dimension")
    d = Hm.shape[0]
    w, V = np.linalg.eigh(0.5 * (Hm + Hm.conj().T))
    tol = default_cluster_tol(w) if cluster_tol is None else float(cluster_tol)
    bohr = w[:, None] - w[None, :]
    G_tilde = V.conj().T @ Gm @ V

    pairs = rates.items() if hasattr(rates, "items") else rates
    terms = []
    for omega, gamma in pairs:
        omega = float(omega)
        gamma = complex(gamma)
        if gamma.real < 0:
            raise NegativeRate(f"rate at ω={omega} has Re(γ)={gamma.real} < 0")
        mask = np.abs(bohr - omega) <= tol
        if not mask.any():
            raise UnmatchedFrequency(
                f"ω={omega} is not a Bohr frequency of H_a within {tol:.1e}"
            )
        G_omega = V @ (G_tilde * mask) @ V.conj().T
        terms.append(GKLSTerm(frequency=omega, operator=G_omega, rate=gamma))

    d2 = d * d
    dissipator = np.zeros((d2, d2), dtype=complex)
    lamb_shift = np.zeros((d, d), dtype=complex)
    eye = np.eye(d, dtype=complex)
    for term in terms:
        G = term.operator
        GdG = G.conj().T @ G
        lamb_shift += term.rate.imag * GdG
        jump = np.kron(G.conj(), G)  # X ↦ G X G†
        anti = 0.5 * (np.kron(eye, GdG) + np.kron(GdG.T, eye))
        dissipator += 2.0 * term.rate.real * (jump - anti)
    dissipator += -1j * commutator_superop(lamb_shift).matrix

    total = commutator_superop(Hm).matrix * (-1j) + (mu**2) * dissipator
    _validate_generator(total, d)
    return GKLSGenerator(
        dim=d, H_a=Hm, terms=tuple(terms), mu=float(mu),
        total=Superoperator(d, total),
    )


def generator_from_matrix(matrix, H_a=None):
    """Wrap a raw d²×d² generator matrix; validates preservation invariants."""
    M = np.asarray(matrix, dtype=complex)
    d2 = M.shape[0]
    d = int(round(np.sqrt(d2)))
    if M.shape != (d2, d2) or d * d != d2:
        raise DimensionMismatch(f"generator matrix must be d²×d², got {M.shape}")
    _validate_generator(M, d)
    Hm = np.zeros((d, d), dtype=complex) if H_a is None else require_hermitian(H_a)
    return GKLSGenerator(dim=d, H_a=Hm, terms=(), mu=1.0, total=Superoperator(d, M))


@dataclass(frozen=True)
class QRFModel:
    """Semigroup generator + measured observable + initial state."""

    generator: GKLSGenerator
    F_a: SpectralDecomposition
    rho_a: np.ndarray

    def __post_init__(self):
        if self.F_a.dim != self.generator.dim:
            raise DimensionMismatch(
                f"observable dim {self.F_a.dim} vs generator dim {self.generator.dim}"
            )

    @property
    def dim(self):
        return self.generator.dim


def semigroup(model_or_generator, tau, cache=None):
    """Λ(τ) = exp(τ ℒ_total) as a d²×d² matrix."""
    gen = model_or_generator.generator if isinstance(model_or_generator, QRFModel) \
        else model_or_generator
    key = float(tau)
    if cache is not None and key in cache:
        return cache[key]
    L = expm(key * gen.total.matrix)
    if cache is not None:
        cache[key] = L
    return L


def pair_superops(F_a: SpectralDecomposition):
    """𝒫(f_+, f_-) for all outcome pairs, stacked (m², d², d²), index f_+·m + f_-."""
    P = F_a.projectors
    m = F_a.n_outcomes
    return np.array([np.kron(P[b].T, P[a]) for a in range(m) for b in range(m)])


def dephasing_projector(F_a: SpectralDecomposition):
    """Δ = Σ_f 𝒫(f, f); projects onto the observable's block-diagonal sector."""
    return sum(np.kron(P.T, P) for P in F_a.projectors)


def qrf_bi_probability(model: QRFModel, grid: TimeGrid, cap=DEFAULT_TABLE_CAP):
    """Bi-probability table of a semigroup model on a grid."""
    m, d, n = model.F_a.n_outcomes, model.dim, grid.n
    _check_cap(m ** (2 * n), cap, "bi-probability table")
    K = pair_superops(model.F_a)
    cache = {}
    V = vec(model.rho_a)[None]
    prev = 0.0
    for t in grid.times:
        L = semigroup(model, t - prev, cache)
        V = np.einsum("kij,nj->nki", K, V @ L.T).reshape(-1, d * d)
        prev = t
    tr_vec = vec(np.eye(d))
    q = (V @ tr_vec).reshape((m, m) * n)
    total = q.sum()
    if not np.isfinite(total.real) or abs(total - 1.0) > 1e-10:
        raise NumericalInvariantViolation(
            f"bi-probability total {total} differs from 1 beyond 1e-10"
        )
    return BiProbTable(grid, model.F_a.eigenvalues.copy(), q)


def qrf_born(model: QRFModel, grid: TimeGrid, cap=DEFAULT_TABLE_CAP):
    """Diagonal (Born) table of a semigroup model, built directly."""
    m, d, n = model.F_a.n_outcomes, model.dim, grid.n
    _check_cap(m**n, cap, "Born table")
    P = model.F_a.projectors
    K = np.array([np.kron(P[a].T, P[a]) for a in range(m)])
    cache = {}
    V = vec(model.rho_a)[None]
    prev = 0.0
    for t in grid.times:
        L = semigroup(model, t - prev, cache)
        V = np.einsum("kij,nj->nki", K, V @ L.T).reshape(-1, d * d)
        prev = t
    tr_vec = vec(np.eye(d))
    probs = ((V @ tr_vec).real).reshape((m,) * n)
    total = probs.sum()
    if not np.isfinite(total) or abs(total - 1.0) > 1e-10:
        raise NumericalInvariantViolation(
            f"Born table total {total} differs from 1 beyond 1e-10"
        )
    return BornTable(grid, model.F_a.eigenvalues.copy(), probs)


born_table.register(QRFModel, qrf_born)
biprob_table.register(QRFModel, qrf_bi_probability)


class QRFChain:
    """Conditional-collapse chain driven by the semigroup map."""

    def __init__(self, model: QRFModel):
        self.model = model
        self.eigenvalues = model.F_a.eigenvalues
        P = model.F_a.projectors
        m = model.F_a.n_outcomes
        self._collapse = np.array([np.kron(P[a].T, P[a]) for a in range(m)])
        tr_vec = vec(np.eye(model.dim))
        self._readout = (self._collapse @ tr_vec)  # (m, d²): p_f = readout[f]·v
        self._props = {}

    def prepare(self, grid: TimeGrid):
        prev = 0.0
        for t in grid.times:
            semigroup(self.model, t - prev, self._props)
            prev = t

    def initial(self):
        return vec(self.model.rho_a)

    def step(self, state, gap):
        return semigroup(self.model, gap, self._props) @ state

    def probabilities(self, state):
        return (self._readout @ state).real

    def collapse(self, state, outcome, prob):
        return (self._collapse[outcome] @ state) / prob


measurement_chain.register(QRFModel, QRFChain)


def rtn_model(gamma, rho_a):
    """Qubit whose surrogate field is random telegraph noise.

    F = ½σ_z with outcomes ±½; ℒ_total = −(γ/2)[σ_x, [σ_x, ·]], which flips
    the observable between its two values at rate γ.
    """
    if gamma <= 0:
        raise NonPositiveRate(f"RTN rate must be positive, got {gamma}")
    rho = require_density(rho_a, name="rho_a")
    if rho.shape[0] != 2:
        raise DimensionMismatch("RTN model needs a qubit state")
    gen = build_gkls(
        H_a=np.zeros((2, 2), dtype=complex),
        G_a=_SIGMA_X,
        rates={0.0: gamma / 2.0},
        mu=1.0,
    )
    return QRFModel(generator=gen, F_a=spectral_decompose(0.5 * _SIGMA_Z), rho_a=rho)


@dataclass(frozen=True)
class NCGDReport:
    record: ConditionRecord

    @property
    def passed(self):
        return self.record.passed


def check_ncgd(model: QRFModel, time_pairs, epsilon=DEFAULT_TOLERANCES.consistency):
    """ΔΛ(t)Δ = ΔΛ(t−t′)ΔΛ(t′)Δ over the supplied (t, t′) pairs."""
    D = dephasing_projector(model.F_a)
    cache = {}
    worst, witness = 0.0, None
    checked = []
    for t, tp in time_pairs:
        if not t > tp > 0:
            raise ValueError(f"NCGD needs t > t' > 0, got ({t}, {tp})")
        lhs = D @ semigroup(model, t, cache) @ D
        rhs = D @ semigroup(model, t - tp, cache) @ D @ semigroup(model, tp, cache) @ D
        mag = float(np.max(np.abs(lhs - rhs)))
        if mag > worst:
            worst, witness = mag, {"t": float(t), "t_prime": float(tp)}
        checked.append([float(t), float(tp)])
    return NCGDReport(
        _record("NCGD", worst, witness, epsilon, {"time_pairs": checked})
    )


@dataclass(frozen=True)
class BlockStructure:
    lower: bool
    upper: bool
    labels: tuple[str, ...]
    lower_violation: float
    upper_violation: float
    label_residuals: dict


def classify_block_structure(model: QRFModel, epsilon=DEFAULT_TOLERANCES.consistency,
                             sample_times=(0.5, 1.0)):
    """Block-triangular structure of the generator w.r.t. the eigen-sectors.

    lower ⟺ 𝒫(f,f) ℒ_total 𝒫(f_+,f_-) = 0 for all f and f_+ ≠ f_-
    (coherence non-activating: ΔΛ(t)Δ = ΔΛ(t));
    upper ⟺ the mirrored condition (coherence non-generating:
    ΔΛ(t)Δ = Λ(t)Δ). Labels are verified directly on ``sample_times``.
    """
    m = model.F_a.n_outcomes
    K = pair_superops(model.F_a)
    D = dephasing_projector(model.F_a)
    L = model.generator.total.matrix
    lower_v = upper_v = 0.0
    for f in range(m):
        Kd = K[f * m + f]
        for a in range(m):
            for b in range(m):
                if a == b:
                    continue
                Kab = K[a * m + b]
                lower_v = max(lower_v, float(np.max(np.abs(Kd @ L @ Kab))))
                upper_v = max(upper_v, float(np.max(np.abs(Kab @ L @ Kd))))
    lower = lower_v <= epsilon
    upper = upper_v <= epsilon

    cache = {}
    residuals = {}
    labels = []
    if lower:
        r = max(
            float(np.max(np.abs(D @ semigroup(model, t, cache) @ D
                                - D @ semigroup(model, t, cache))))
            for t in sample_times
        )
        residuals["coherence non-activating"] = r
        if r <= epsilon:
            labels.append("coherence non-activating")
    if upper:
        r = max(
            float(np.max(np.abs(D @ semigroup(model, t, cache) @ D
                                - semigroup(model, t, cache) @ D)))
            for t in sample_times
        )
        residuals["coherence non-generating"] = r
        if r <= epsilon:
            labels.append("coherence non-generating")
    return BlockStructure(
        lower=lower,
        upper=upper,
        labels=tuple(labels),
        lower_violation=lower_v,
        upper_violation=upper_v,
        label_residuals=residuals,
    )


@dataclass(frozen=True)
class EquivalenceReport:
    ncgd: ConditionRecord
    cm: ConditionRecord
    agree: bool


def verify_ncgd_cm_equivalence(model: QRFModel, grid: TimeGrid,
                               epsilon=DEFAULT_TOLERANCES.consistency,
                               cap=DEFAULT_TABLE_CAP):
    """NCGD on the grid's time pairs vs CM on the grid's bi-probabilities.

    Requires a block-diagonal initial state (the equivalence hypothesis);
    verdicts of the two checks must agree there.
    """
    D = dephasing_projector(model.F_a)
    v = vec(model.rho_a)
    defect = float(np.max(np.abs(D @ v - v)))
    if defect > epsilon:
        raise NonBlockDiagonalState(
            f"rho_a deviates from block-diagonal by {defect:.3e} > {epsilon:.1e}"
        )
    ts = grid.times
    pairs = [(ts[j], ts[i]) for j in range(len(ts)) for i in range(j)]
    ncgd = check_ncgd(model, pairs, epsilon)
    cm = check_cm(qrf_bi_probability(model, grid, cap), epsilon)
    return EquivalenceReport(
        ncgd=ncgd.record,
        cm=cm.record("CM"),
        agree=ncgd.record.passed == cm.record("CM").passed,
    )


def qrf_sf_report(model: QRFModel, grid: TimeGrid,
                  epsilon=DEFAULT_TOLERANCES.consistency, cap=DEFAULT_TABLE_CAP):
    """SF condition on the model's bi-probability over the grid."""
    return check_sf(qrf_bi_probability(model, grid, cap), epsilon)


def choi_matrix(superop_matrix, dim):
    """Choi matrix Σ_kl E_kl ⊗ Λ(E_kl) of a superoperator matrix."""
    C = np.zeros((dim * dim, dim * dim), dtype=complex)
    for k in range(dim):
        for l in range(dim):
            E = np.zeros((dim, dim), dtype=complex)
            E[k, l] = 1.0
            C += np.kron(E, unvec(superop_matrix @ vec(E), dim))
    return C
