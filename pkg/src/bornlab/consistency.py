"""Numerical tests of the consistency conditions on measurement statistics.

Conditions checked (all quantified over the user-supplied grid; the report
records exactly what was covered):

* causality — summing the LAST outcome of P_n reproduces P_{n-1}; holds for
  every Born family.
* KC — summing ANY outcome of P_n reproduces P_{n-1} on the reduced grid.
* CM — for every index i and diagonal assignment elsewhere, the off-diagonal
  bi-probability sum Σ_{f_i ≠ f_-i} Q_n vanishes; equivalent to KC.
* SF — every off-diagonal bi-probability entry vanishes individually;
  implies CM and KC.
* bi-consistency — summing any (f_i, f_-i) pair of Q_n reproduces Q_{n-1};
  an unconditional algebraic identity and the implementation's main
  self-test.
* generalized relation — the KC defect of the Born family equals the
  diagonal-context off-diagonal sum of Q_n; an unconditional identity
  linking the two families.
"""

from __future__ import annotations

import string
from dataclasses import dataclass, field

import numpy as np

from .linalg import DEFAULT_TOLERANCES
from .process import (
    DEFAULT_TABLE_CAP,
    BiProbTable,
    TimeGrid,
    biprob_table,
    born_table,
)

IDENTITY_TOL = 1e-10

_LETTERS = string.ascii_letters


@dataclass(frozen=True)
class ConditionRecord:
    condition: str
    max_abs_violation: float
    witness: dict | None
    threshold: float
    passed: bool
    coverage: dict = field(default_factory=dict)


@dataclass(frozen=True)
class ConsistencyReport:
    grid: TimeGrid
    n: int
    records: tuple[ConditionRecord, ...]

    def record(self, condition):
        for r in self.records:
            if r.condition == condition:
                return r
        raise KeyError(condition)

    def passed(self, condition):
        return self.record(condition).passed


def _record(condition, violation, witness, threshold, coverage):
    violation = float(violation)
    return ConditionRecord(
        condition=condition,
        max_abs_violation=violation,
        witness=witness if violation > 0 else None,
        threshold=float(threshold),
        passed=violation <= threshold,
        coverage=coverage,
    )


def _argmax_abs(arr):
    flat = int(np.argmax(np.abs(arr)))
    return np.unravel_index(flat, arr.shape), float(np.abs(arr).flat[flat])


def _diag_context_sums(table: BiProbTable, position):
    """Σ_{f_i ≠ f_-i} Q_n with all other index pairs on the diagonal.

    Returns ``(sums, real_form)``: complex sums per context tuple and the
    equivalent 2·Re Σ_{f_i > f_-i} form (they must agree to roundoff).
    """
    n, i = table.n, position - 1
    subs, out_ctx = [], []
    for k in range(n):
        if k == i:
            subs.append(_LETTERS[n] + _LETTERS[n + 1])
        else:
            subs.append(_LETTERS[k] * 2)
            out_ctx.append(_LETTERS[k])
    expr = "".join(subs) + "->" + "".join(out_ctx) + _LETTERS[n] + _LETTERS[n + 1]
    sliced = np.einsum(expr, table.dist)  # (..., f_i, f_-i) with diagonal context
    total = sliced.sum(axis=(-2, -1))
    diag = np.einsum("...kk->...", sliced)
    sums = total - diag
    m = table.n_outcomes
    lower = np.tril(np.ones((m, m)), k=-1)  # pairs with f_i > f_-i
    real_form = 2.0 * np.einsum("...kl,kl->...", sliced.real, lower)
    return sums, real_form


def check_kc(source, grid: TimeGrid, epsilon=DEFAULT_TOLERANCES.consistency, cap=DEFAULT_TABLE_CAP):
    """Kolmogorov consistency over every single-deletion of the given grid.

    Also reports the causality record (deletion of the last index), which is
    an identity for Born families.
    """
    if grid.n < 2:
        raise ValueError("KC check needs a grid of n ≥ 2 times")
    full = born_table(source, grid, cap)
    worst, witness = 0.0, None
    causality_worst, causality_witness = 0.0, None
    for i in range(1, grid.n + 1):
        reduced = born_table(source, grid.without(i), cap)
        diff = full.dist.sum(axis=i - 1) - reduced.dist
        idx, mag = _argmax_abs(diff)
        if mag > worst:
            worst, witness = mag, {"index": i, "outcomes": [int(v) for v in idx]}
        if i == grid.n and mag > causality_worst:
            causality_worst = mag
            causality_witness = {"index": i, "outcomes": [int(v) for v in idx]}
    coverage = {"n": grid.n, "times": list(grid.times), "indices": list(range(1, grid.n + 1))}
    return ConsistencyReport(
        grid=grid,
        n=grid.n,
        records=(
            _record("KC", worst, witness, epsilon, coverage),
            _record(
                "causality",
                causality_worst,
                causality_witness,
                IDENTITY_TOL,
                {"n": grid.n, "times": list(grid.times), "indices": [grid.n]},
            ),
        ),
    )


def check_cm(table: BiProbTable, epsilon=DEFAULT_TOLERANCES.consistency):
    """Consistent-measurements condition on a bi-probability table.

    The complex-sum form is the verdict; the 2·Re Σ_{f_i > f_-i} form is
    recomputed independently and their agreement is reported as a separate
    identity record ("CM-real-form").
    """
    worst, witness = 0.0, None
    agreement = 0.0
    for i in range(1, table.n + 1):
        sums, real_form = _diag_context_sums(table, i)
        idx, mag = _argmax_abs(sums)
        if mag > worst:
            worst, witness = mag, {"index": i, "context": [int(v) for v in idx]}
        agreement = max(agreement, float(np.max(np.abs(sums.real - real_form))))
        agreement = max(agreement, float(np.max(np.abs(sums.imag))))
    coverage = {"n": table.n, "times": list(table.grid.times), "indices": list(range(1, table.n + 1))}
    return ConsistencyReport(
        grid=table.grid,
        n=table.n,
        records=(
            _record("CM", worst, witness, epsilon, coverage),
            _record("CM-real-form", agreement, None, 1e-12, coverage),
        ),
    )


def _off_diagonal_mask(n, m):
    """Boolean mask over an interleaved table marking f_- ≠ f entries."""
    shape = (m, m) * n
    grids = np.indices(shape, dtype=np.int16)
    diag = np.ones(shape, dtype=bool)
    for k in range(n):
        diag &= grids[2 * k] == grids[2 * k + 1]
    return ~diag


def check_sf(table: BiProbTable, epsilon=DEFAULT_TOLERANCES.consistency):
    """Surrogate-field condition: every off-diagonal entry of Q_n vanishes."""
    mask = _off_diagonal_mask(table.n, table.n_outcomes)
    off = np.where(mask, table.dist, 0.0)
    idx, mag = _argmax_abs(off)
    witness = None
    if mag > 0:
        witness = {
            "outcomes": [int(v) for v in idx[0::2]],
            "outcomes_minus": [int(v) for v in idx[1::2]],
        }
    coverage = {"n": table.n, "times": list(table.grid.times)}
    return ConsistencyReport(
        grid=table.grid,
        n=table.n,
        records=(_record("SF", mag, witness, epsilon, coverage),),
    )


def check_bi_consistency(source, grid: TimeGrid, threshold=IDENTITY_TOL, cap=DEFAULT_TABLE_CAP):
    """Pair-marginalization identity of bi-probabilities (always holds)."""
    if grid.n < 2:
        raise ValueError("bi-consistency check needs a grid of n ≥ 2 times")
    full = biprob_table(source, grid, cap)
    worst, witness = 0.0, None
    for i in range(1, grid.n + 1):
        reduced = biprob_table(source, grid.without(i), cap)
        ax = 2 * (i - 1)
        diff = full.dist.sum(axis=(ax, ax + 1)) - reduced.dist
        idx, mag = _argmax_abs(diff)
        if mag > worst:
            worst = mag
            witness = {
                "index": i,
                "outcomes": [int(v) for v in idx[0::2]],
                "outcomes_minus": [int(v) for v in idx[1::2]],
            }
    coverage = {"n": grid.n, "times": list(grid.times), "indices": list(range(1, grid.n + 1))}
    return ConsistencyReport(
        grid=grid,
        n=grid.n,
        records=(_record("bi-consistency", worst, witness, threshold, coverage),),
    )


def verify_generalized_relation(source, grid: TimeGrid, cap=DEFAULT_TABLE_CAP):
    """Residual of the identity linking the KC defect of P_n to Q_n sums.

    For every index i and context: P_{n-1} − Σ_{f_i} P_n must equal the
    diagonal-context off-diagonal sum of Q_n. The two sides are computed
    through independent code paths (Born recursion vs bi-probability
    recursion); returns the maximal absolute residual.
    """
    if grid.n < 2:
        raise ValueError("generalized-relation check needs a grid of n ≥ 2 times")
    full = born_table(source, grid, cap)
    bip = biprob_table(source, grid, cap)
    residual = 0.0
    for i in range(1, grid.n + 1):
        reduced = born_table(source, grid.without(i), cap)
        lhs = reduced.dist - full.dist.sum(axis=i - 1)
        rhs, _ = _diag_context_sums(bip, i)
        residual = max(residual, float(np.max(np.abs(lhs - rhs))))
    return residual


def analyze(source, grid: TimeGrid, epsilon=DEFAULT_TOLERANCES.consistency, cap=DEFAULT_TABLE_CAP):
    """Full per-grid report: causality, KC, CM, SF, bi-consistency, identity."""
    kc = check_kc(source, grid, epsilon, cap)
    bip = biprob_table(source, grid, cap)
    cm = check_cm(bip, epsilon)
    sf = check_sf(bip, epsilon)
    bic = check_bi_consistency(source, grid, IDENTITY_TOL, cap)
    residual = verify_generalized_relation(source, grid, cap)
    gen = _record(
        "generalized-relation",
        residual,
        None,
        IDENTITY_TOL,
        {"n": grid.n, "times": list(grid.times), "indices": list(range(1, grid.n + 1))},
    )
    records = kc.records + cm.records + sf.records + bic.records + (gen,)
    return ConsistencyReport(grid=grid, n=grid.n, records=records)
