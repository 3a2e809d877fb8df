"""Scenario configuration files.

Configs are YAML (JSON syntax is accepted too) with a versioned ``schema``
field. Matrices are nested arrays whose entries are numbers or two-element
``[re, im]`` arrays; grids are named lists of strictly increasing positive
times. The schema is documented in the README.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np
import yaml

from .errors import (
    BornlabError,
    ConfigError,
    DimensionCap,
    TableTooLarge,
)
from .linalg import Tolerances
from .observer import JointScenario, ObserverSystem, DEFAULT_JOINT_DIM_CAP
from .process import DEFAULT_TABLE_CAP, QuantumSystem, TimeGrid
from .qrf import QRFModel, build_gkls, generator_from_matrix
from .spectral import spectral_decompose

SCHEMA_VERSION = 1

_TOP_LEVEL_KEYS = {
    "schema", "kind", "tolerances", "caps", "system", "observer", "qrf",
    "grids", "n_max", "sampling", "simulate", "report",
}
_REQUIRED_SECTIONS = {
    "unitary": ("system",),
    "joint": ("system", "observer"),
    "qrf": ("qrf",),
}


def parse_complex(value, where):
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        return complex(float(value[0]), float(value[1]))
    raise ConfigError("expected a number or a two-element [re, im] array", where)


def parse_matrix(value, where):
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise ConfigError("expected a matrix as a list of rows", where)
    width = len(value[0])
    rows = []
    for i, row in enumerate(value):
        if len(row) != width:
            raise ConfigError(f"row {i} has {len(row)} entries, expected {width}", where)
        rows.append([parse_complex(v, f"{where}[{i}][{j}]") for j, v in enumerate(row)])
    return np.array(rows, dtype=complex)


def _section(data, name, where=None):
    sec = data.get(name)
    if not isinstance(sec, dict):
        raise ConfigError("missing or malformed section", where or name)
    return sec


def _get(sec, key, where, required=True, default=None):
    if key not in sec:
        if required:
            raise ConfigError("missing required field", f"{where}.{key}")
        return default
    return sec[key]


@dataclass(frozen=True)
class SamplingConfig:
    size: int
    seed: int
    grid: str


@dataclass(frozen=True)
class SimulateConfig:
    grid: str
    probe_times: tuple[float, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    path: str
    sha256: str
    kind: str
    tolerances: Tolerances
    table_cap: int
    joint_dim_cap: int
    grids: dict[str, TimeGrid]
    n_max: int
    sampling: SamplingConfig | None
    simulate: SimulateConfig | None
    report_max_entries: int
    raw: dict = field(repr=False, default_factory=dict)

    def default_grid_name(self):
        return next(iter(self.grids))

    def grid(self, name):
        if name not in self.grids:
            raise ConfigError(f"unknown grid {name!r}", "grids")
        return self.grids[name]

    def build_system(self) -> QuantumSystem:
        sec = _section(self.raw, "system")
        try:
            return QuantumSystem.from_operators(
                parse_matrix(_get(sec, "H", "system"), "system.H"),
                parse_matrix(_get(sec, "F", "system"), "system.F"),
                parse_matrix(_get(sec, "rho", "system"), "system.rho"),
                self.tolerances,
            )
        except (ConfigError, DimensionCap, TableTooLarge):
            raise
        except BornlabError as exc:
            raise ConfigError(str(exc), "system") from exc

    def build_joint(self) -> JointScenario:
        sec = _section(self.raw, "observer")
        try:
            obs = ObserverSystem.from_operators(
                parse_matrix(_get(sec, "H_o", "observer"), "observer.H_o"),
                parse_matrix(_get(sec, "G_o", "observer"), "observer.G_o"),
                parse_matrix(_get(sec, "rho_o", "observer"), "observer.rho_o"),
                float(_get(sec, "coupling", "observer")),
                self.tolerances,
            )
        except (ConfigError, DimensionCap, TableTooLarge):
            raise
        except BornlabError as exc:
            raise ConfigError(str(exc), "observer") from exc
        return JointScenario(obs=obs, sys=self.build_system(), dim_cap=self.joint_dim_cap)

    def build_qrf(self) -> QRFModel:
        sec = _section(self.raw, "qrf")
        try:
            F_a = spectral_decompose(
                parse_matrix(_get(sec, "F_a", "qrf"), "qrf.F_a"),
                self.tolerances.cluster,
                self.tolerances.hermiticity,
            )
            rho_a = parse_matrix(_get(sec, "rho_a", "qrf"), "qrf.rho_a")
            if "generator" in sec:
                H_a = sec.get("H_a")
                gen = generator_from_matrix(
                    parse_matrix(sec["generator"], "qrf.generator"),
                    None if H_a is None else parse_matrix(H_a, "qrf.H_a"),
                )
            else:
                rates_raw = _get(sec, "rates", "qrf")
                if not isinstance(rates_raw, list):
                    raise ConfigError("expected a list of {omega, gamma} entries", "qrf.rates")
                rates = []
                for k, entry in enumerate(rates_raw):
                    if not isinstance(entry, dict) or "omega" not in entry or "gamma" not in entry:
                        raise ConfigError("each rate needs omega and gamma", f"qrf.rates[{k}]")
                    rates.append((
                        float(entry["omega"]),
                        parse_complex(entry["gamma"], f"qrf.rates[{k}].gamma"),
                    ))
                gen = build_gkls(
                    parse_matrix(_get(sec, "H_a", "qrf"), "qrf.H_a"),
                    parse_matrix(_get(sec, "G_a", "qrf"), "qrf.G_a"),
                    rates,
                    float(sec.get("mu", 1.0)),
                    self.tolerances.cluster,
                    self.tolerances.hermiticity,
                )
            from .linalg import require_density

            return QRFModel(generator=gen, F_a=F_a, rho_a=require_density(rho_a, name="qrf.rho_a"))
        except (ConfigError, DimensionCap, TableTooLarge):
            raise
        except BornlabError as exc:
            raise ConfigError(str(exc), "qrf") from exc


def _parse_tolerances(sec):
    if sec is None:
        return Tolerances()
    known = {"hermiticity", "unitarity", "density", "cluster", "consistency", "prob_floor"}
    unknown = set(sec) - known
    if unknown:
        raise ConfigError(f"unknown tolerance keys {sorted(unknown)}", "tolerances")
    kwargs = {k: (None if v is None else float(v)) for k, v in sec.items()}
    return Tolerances(**kwargs)


def load_config(path) -> ScenarioConfig:
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        data = yaml.safe_load(blob)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"YAML parse error{loc}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")

    unknown = set(data) - _TOP_LEVEL_KEYS
    if unknown:
        raise ConfigError(f"unknown top-level keys {sorted(unknown)}")
    if data.get("schema") != SCHEMA_VERSION:
        raise ConfigError(f"expected schema {SCHEMA_VERSION}, got {data.get('schema')!r}", "schema")
    kind = data.get("kind")
    if kind not in _REQUIRED_SECTIONS:
        raise ConfigError(f"kind must be one of {sorted(_REQUIRED_SECTIONS)}, got {kind!r}", "kind")
    for required in _REQUIRED_SECTIONS[kind]:
        if required not in data:
            raise ConfigError(f"kind {kind!r} requires the {required!r} section", required)

    grids_raw = data.get("grids")
    if not isinstance(grids_raw, dict) or not grids_raw:
        raise ConfigError("at least one named grid is required", "grids")
    grids = {}
    for name, times in grids_raw.items():
        if not isinstance(times, list) or not times:
            raise ConfigError("grid must be a non-empty list of times", f"grids.{name}")
        try:
            grids[str(name)] = TimeGrid(tuple(float(t) for t in times))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc), f"grids.{name}") from exc

    caps = data.get("caps") or {}
    if not isinstance(caps, dict):
        raise ConfigError("caps must be a mapping", "caps")
    table_cap = int(caps.get("table_entries", DEFAULT_TABLE_CAP))
    joint_cap = int(caps.get("joint_dim", DEFAULT_JOINT_DIM_CAP))

    n_max = int(data.get("n_max", 3))
    if n_max < 1:
        raise ConfigError("n_max must be ≥ 1", "n_max")

    sampling = None
    if "sampling" in data:
        sec = data["sampling"]
        if not isinstance(sec, dict):
            raise ConfigError("sampling must be a mapping", "sampling")
        grid_name = str(sec.get("grid", next(iter(grids))))
        if grid_name not in grids:
            raise ConfigError(f"unknown grid {grid_name!r}", "sampling.grid")
        size = int(_get(sec, "N", "sampling"))
        seed = int(_get(sec, "seed", "sampling"))
        if size < 1:
            raise ConfigError("N must be ≥ 1", "sampling.N")
        if seed < 0:
            raise ConfigError("seed must be a non-negative integer", "sampling.seed")
        sampling = SamplingConfig(size=size, seed=seed, grid=grid_name)

    simulate = None
    if "simulate" in data:
        sec = data["simulate"]
        if not isinstance(sec, dict):
            raise ConfigError("simulate must be a mapping", "simulate")
        grid_name = str(sec.get("grid", next(iter(grids))))
        if grid_name not in grids:
            raise ConfigError(f"unknown grid {grid_name!r}", "simulate.grid")
        grid = grids[grid_name]
        probes = sec.get("probe_times", list(grid.times))
        if not isinstance(probes, list) or not probes:
            raise ConfigError("probe_times must be a non-empty list", "simulate.probe_times")
        probe_times = tuple(float(t) for t in probes)
        for t in probe_times:
            if t < 0 or t > grid.times[-1]:
                raise ConfigError(
                    f"probe time {t} outside the sampling grid span [0, {grid.times[-1]}]",
                    "simulate.probe_times",
                )
        simulate = SimulateConfig(grid=grid_name, probe_times=probe_times)

    report_sec = data.get("report") or {}
    if not isinstance(report_sec, dict):
        raise ConfigError("report must be a mapping", "report")
    report_max = int(report_sec.get("max_table_entries", 4096))

    cfg = ScenarioConfig(
        path=str(path),
        sha256=hashlib.sha256(blob).hexdigest(),
        kind=kind,
        tolerances=_parse_tolerances(data.get("tolerances")),
        table_cap=table_cap,
        joint_dim_cap=joint_cap,
        grids=grids,
        n_max=n_max,
        sampling=sampling,
        simulate=simulate,
        report_max_entries=report_max,
        raw=data,
    )
    # build eagerly so malformed matrices fail at load time with field names
    if kind in ("unitary", "joint"):
        cfg.build_system()
    if kind == "joint":
        cfg.build_joint()
    if kind == "qrf":
        cfg.build_qrf()
    return cfg
