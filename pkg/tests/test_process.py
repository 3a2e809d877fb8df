import itertools

import numpy as np
import pytest

from bornlab import (
    QuantumSystem,
    TimeGrid,
    bi_probability,
    born_distribution,
    conditional_state,
    marginalize,
    marginalize_pair,
)
from bornlab.errors import (
    IndexOutOfRange,
    TableTooLarge,
    ZeroProbabilityHistory,
)
from conftest import (
    KET0,
    SZ,
    quasistatic_system,
    rabi_system,
    random_grid,
    random_system,
)


def heis(P, H, t):
    """Test-local Heisenberg projector oracle built from scratch."""
    w, V = np.linalg.eigh(H)
    U = (V * np.exp(-1j * t * w)) @ V.conj().T
    return U.conj().T @ P @ U


class TestBornDistribution:
    def test_frozen_pure_state(self):
        sys = QuantumSystem.from_operators(np.zeros((2, 2)), SZ, KET0)
        table = born_distribution(sys, TimeGrid((0.5, 1.0, 2.0)))
        # sigma_z outcomes ascend: index 1 is +1
        assert abs(table.prob((1, 1, 1)) - 1.0) <= 1e-12
        assert abs(table.dist.sum() - 1.0) <= 1e-12

    def test_quasistatic_product_form(self):
        sys = quasistatic_system()
        grid = TimeGrid((0.3, 0.9, 1.4))
        table = born_distribution(sys, grid)
        weights = [np.trace(P @ sys.rho0).real for P in sys.F.projectors]
        for tup, p in table.items():
            expected = weights[tup[0]] if len(set(tup)) == 1 else 0.0
            assert abs(p - expected) <= 1e-12

    def test_rabi_single_time_cosine(self):
        sys = rabi_system()
        for t in (0.4, np.pi / 4, 1.9):
            table = born_distribution(sys, TimeGrid((t,)))
            assert abs(table.prob((1,)) - np.cos(t / 2) ** 2) <= 1e-12

    def test_matches_direct_oracle(self, rng):
        sys = random_system(rng, 3)
        grid = TimeGrid((0.4, 1.1))
        table = born_distribution(sys, grid)
        projs = sys.F.projectors
        for f2, f1 in itertools.product(range(3), repeat=2):
            A1 = heis(projs[f1], sys.H, grid.times[0])
            A2 = heis(projs[f2], sys.H, grid.times[1])
            oracle = np.trace(A2 @ A1 @ sys.rho0 @ A1 @ A2).real
            assert abs(table.prob((f1, f2)) - oracle) <= 1e-12

    def test_table_cap(self):
        sys = rabi_system()
        with pytest.raises(TableTooLarge):
            born_distribution(sys, TimeGrid((1.0, 2.0, 3.0)), cap=7)


class TestBiProbability:
    def test_single_time_is_diagonal(self, rng):
        sys = random_system(rng, 4)
        table = bi_probability(sys, TimeGrid((0.8,)))
        for f, g in itertools.product(range(4), repeat=2):
            if f != g:
                assert abs(table.value((f,), (g,))) <= 1e-12

    def test_quasistatic_delta_structure(self):
        sys = quasistatic_system()
        grid = TimeGrid((0.3, 0.9))
        table = bi_probability(sys, grid)
        weights = [np.trace(P @ sys.rho0).real for P in sys.F.projectors]
        for f, g, q in table.items():
            same = f == g and len(set(f)) == 1
            expected = weights[f[0]] if same else 0.0
            assert abs(q - expected) <= 1e-12

    def test_rabi_offdiagonal_entry_is_large(self):
        # pinned oracle value: max off-diagonal |Q_2| = 0.125 at Omega*t = pi/4
        t = np.pi / 4
        table = bi_probability(rabi_system(), TimeGrid((t, 2 * t)))
        entry = table.value((1, 1), (0, 1))  # f_1 = +1, f_-1 = -1, f_2 = f_-2 = +1
        assert abs(entry) > 0.01
        assert abs(abs(entry) - 0.125) <= 1e-10

    def test_diagonal_matches_born(self, rng):
        sys = random_system(rng, 3)
        grid = TimeGrid((0.2, 0.7, 1.5))
        diag = bi_probability(sys, grid).diagonal()
        born = born_distribution(sys, grid)
        assert np.max(np.abs(diag.dist - born.dist)) <= 1e-12

    def test_hermitian_symmetry(self, rng):
        sys = random_system(rng, 3)
        table = bi_probability(sys, TimeGrid((0.5, 1.2)))
        swapped = np.transpose(table.dist, (1, 0, 3, 2))
        assert np.max(np.abs(table.dist - swapped.conj())) <= 1e-12

    def test_last_index_diagonality(self, rng):
        sys = random_system(rng, 4)
        table = bi_probability(sys, TimeGrid((0.4, 0.9)))
        m = table.n_outcomes
        flat = table.dist.reshape(-1, m, m)
        off = flat.copy()
        off[:, np.arange(m), np.arange(m)] = 0.0
        assert np.max(np.abs(off)) <= 1e-12

    def test_diagonal_entries_real_nonnegative(self, rng):
        sys = random_system(rng, 3)
        diag = bi_probability(sys, TimeGrid((0.4, 0.9))).diagonal()
        assert np.min(diag.dist) >= -1e-12


class TestConditionalState:
    def test_empty_history_free_evolution(self, rng):
        sys = random_system(rng, 3)
        t = 0.8
        rho_t = conditional_state(sys, (), None, t)
        w, V = np.linalg.eigh(sys.H)
        U = (V * np.exp(-1j * t * w)) @ V.conj().T
        assert np.allclose(rho_t, U @ sys.rho0 @ U.conj().T)

    def test_quasistatic_history_confines_support(self):
        sys = quasistatic_system()
        rho = conditional_state(sys, (1,), TimeGrid((0.5,)), 2.0)
        P = sys.F.projectors[1]
        assert np.max(np.abs(P @ rho @ P - rho)) <= 1e-12

    def test_rabi_conditional_cosine(self):
        sys = rabi_system()
        t1, t2 = 0.6, 1.5
        rho = conditional_state(sys, (1,), TimeGrid((t1,)), t2)
        p_up = np.trace(sys.F.projectors[1] @ rho).real
        assert abs(p_up - np.cos((t2 - t1) / 2) ** 2) <= 1e-12

    def test_zero_probability_history(self):
        sys = QuantumSystem.from_operators(np.zeros((2, 2)), SZ, KET0)
        with pytest.raises(ZeroProbabilityHistory):
            conditional_state(sys, (0,), TimeGrid((0.5,)), 1.0)

    def test_chain_rule_reproduces_joint(self, rng):
        sys = random_system(rng, 3)
        grid = TimeGrid((0.4, 0.9, 1.6))
        table = born_distribution(sys, grid)
        for tup, p in table.items():
            if p <= 1e-6:
                continue
            chain = 1.0
            for k in range(grid.n):
                rho_k = conditional_state(
                    sys, tup[:k], grid.prefix(k) if k else None, grid.times[k]
                )
                chain *= np.trace(sys.F.projectors[tup[k]] @ rho_k).real
            assert abs(chain - p) <= 1e-10


class TestMarginalize:
    def test_last_index_causality(self, rng):
        sys = random_system(rng, 3)
        grid = TimeGrid((0.3, 0.8, 1.2))
        full = born_distribution(sys, grid)
        reduced = born_distribution(sys, grid.prefix(2))
        assert np.max(np.abs(marginalize(full, 3).dist - reduced.dist)) <= 1e-12

    def test_deterministic_table(self):
        sys = QuantumSystem.from_operators(np.zeros((2, 2)), SZ, KET0)
        table = born_distribution(sys, TimeGrid((0.5, 1.0)))
        out = marginalize(table, 1)
        assert abs(out.prob((1,)) - 1.0) <= 1e-12

    def test_interior_marginal_detects_kc_violation(self):
        t = np.pi / 4
        grid = TimeGrid((t, 2 * t))
        sys = rabi_system()
        full = born_distribution(sys, grid)
        fresh = born_distribution(sys, grid.without(1))
        gap = np.max(np.abs(marginalize(full, 1).dist - fresh.dist))
        assert abs(gap - 0.25) <= 1e-10  # pinned oracle value

    def test_index_out_of_range(self, rng):
        sys = random_system(rng, 2)
        table = born_distribution(sys, TimeGrid((0.5, 1.0)))
        with pytest.raises(IndexOutOfRange):
            marginalize(table, 3)
        single = born_distribution(sys, TimeGrid((0.5,)))
        with pytest.raises(IndexOutOfRange):
            marginalize(single, 1)

    def test_pair_marginalization(self, rng):
        sys = random_system(rng, 2)
        grid = TimeGrid((0.5, 1.0))
        table = bi_probability(sys, grid)
        out = marginalize_pair(table, 1)
        fresh = bi_probability(sys, grid.without(1))
        assert np.max(np.abs(out.dist - fresh.dist)) <= 1e-12


class TestAlgebraicInvariants:
    """Spot versions of the acceptance identity suite on a few draws."""

    def test_identities_random_systems(self):
        rng = np.random.default_rng(77)
        for _ in range(20):
            d = int(rng.integers(2, 5))
            n = int(rng.integers(2, 4))
            sys = random_system(rng, d, degenerate_F=bool(rng.integers(0, 2)))
            grid = random_grid(rng, n)
            born = born_distribution(sys, grid)
            bip = bi_probability(sys, grid)
            # normalization and diagonal extraction
            assert abs(born.dist.sum() - 1.0) <= 1e-10
            assert np.max(np.abs(bip.diagonal().dist - born.dist)) <= 1e-12
            # causality
            reduced = born_distribution(sys, grid.prefix(n - 1))
            assert np.max(np.abs(marginalize(born, n).dist - reduced.dist)) <= 1e-10
            # bi-consistency over every pair index
            for i in range(1, n + 1):
                fresh = bi_probability(sys, grid.without(i))
                assert np.max(np.abs(marginalize_pair(bip, i).dist - fresh.dist)) <= 1e-10
