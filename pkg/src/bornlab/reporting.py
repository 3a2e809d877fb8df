"""Machine-readable report payloads.

Reports are JSON with sorted keys and two-space indentation; floats use the
shortest round-trip decimal. For a fixed (config, seed) the serialized bytes
are identical across runs. Complex numbers are two-element [re, im] arrays.
Roundoff-negative probabilities are clamped to zero at this boundary only.
"""

from __future__ import annotations

import itertools
import json

import numpy as np
import scipy

from .consistency import ConditionRecord, ConsistencyReport
from .process import BiProbTable, BornTable
from .sampler import RNG_ALGORITHM
from .version import __version__


def complex_json(z):
    z = complex(z)
    return [float(z.real), float(z.imag)]


def matrix_json(M):
    return [[complex_json(v) for v in row] for row in np.asarray(M, dtype=complex)]


def born_table_json(table: BornTable, max_entries=4096):
    clamped = table.clamped()
    m, n = table.n_outcomes, table.n
    keys = list(itertools.product(range(m), repeat=n))
    truncated = len(keys) > max_entries
    if truncated:
        keys = sorted(keys, key=lambda k: (-clamped[k], k))[:max_entries]
    return {
        "times": [float(t) for t in table.grid.times],
        "eigenvalues": [float(v) for v in table.eigenvalues],
        "entries": [
            {"outcomes": list(map(int, k)), "p": float(clamped[k])} for k in keys
        ],
        "truncated": truncated,
    }


def biprob_table_json(table: BiProbTable, max_entries=4096):
    m, n = table.n_outcomes, table.n
    keys = list(itertools.product(range(m), repeat=2 * n))
    truncated = len(keys) > max_entries
    if truncated:
        keys = sorted(keys, key=lambda k: (-abs(table.dist[k]), k))[:max_entries]
    return {
        "times": [float(t) for t in table.grid.times],
        "eigenvalues": [float(v) for v in table.eigenvalues],
        "entries": [
            {
                "outcomes": list(map(int, k[0::2])),
                "outcomes_minus": list(map(int, k[1::2])),
                "value": complex_json(table.dist[k]),
            }
            for k in keys
        ],
        "truncated": truncated,
    }


def record_json(record: ConditionRecord):
    return {
        "condition": record.condition,
        "max_abs_violation": float(record.max_abs_violation),
        "witness": record.witness,
        "threshold": float(record.threshold),
        "verdict": "pass" if record.passed else "fail",
        "coverage": record.coverage,
    }


def consistency_json(report: ConsistencyReport):
    return [record_json(r) for r in report.records]


def tolerances_json(tol):
    return {
        "hermiticity": tol.hermiticity,
        "unitarity": tol.unitarity,
        "density": tol.density,
        "cluster": tol.cluster,
        "consistency": tol.consistency,
        "prob_floor": tol.prob_floor,
    }


def envelope(command, cfg, seed=None):
    """Common report header: tool identity, config hash, RNG, tolerances."""
    body = {
        "report_schema": 1,
        "command": command,
        "tool": {
            "name": "bornlab",
            "version": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "rng": RNG_ALGORITHM,
        },
        "config": {"path": cfg.path, "sha256": cfg.sha256, "kind": cfg.kind},
        "tolerances": tolerances_json(cfg.tolerances),
        "caps": {"table_entries": cfg.table_cap, "joint_dim": cfg.joint_dim_cap},
    }
    if seed is not None:
        body["seed"] = int(seed)
    return body


def dump(payload):
    return json.dumps(payload, indent=2, sort_keys=True, allow_nan=False) + "\n"
