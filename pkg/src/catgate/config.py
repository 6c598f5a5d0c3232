"""JSON run configuration: defaults, validation and the config hash."""

import copy
import hashlib
import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

from catgate.dynamics import PropagationConfig
from catgate.errors import CatgateError, ConfigError
from catgate.hamiltonians import FrameCorrection, HamiltonianModel
from catgate.hilbert import SpaceSpec
from catgate.models import DecoherenceParams, SystemParams, solve_g2
from catgate.scenario import FidelityKind, FidelityStrategy, GateMode, GateTime, Scenario

logger = logging.getLogger(__name__)

HASH_LENGTH = 16

# Every accepted key with its default; the published operating point.
DEFAULTS: dict[str, dict[str, Any]] = {
    "system": {
        "omega_eg": 5.0,
        "omega_fe": 7.5,
        "omega_c1": None,
        "omega_c2": None,
        "delta1": 1.5,
        "delta2": 1.65,
        "g1": 0.150,
        "g2": None,
        "g1_tilde": None,
        "g2_tilde": None,
        "cat_amplitude": 0.5,
        "n1_trunc": 6,
        "n2_trunc": 12,
    },
    "design": {
        "k": 6,
        "gate_time": "dressed",
        "model": "full",
        "frame_correction": "dressed",
        "ramp_ns": 20.0,
    },
    "decoherence": {
        "T_us": [5.0, 10.0, 15.0],
        "kappa_inv_us": [10.0, 50.0, 136.0, 300.0],
    },
    "simulation": {
        "mode": "open",
        "t_final": None,
        "dt": None,
        "max_phase_step": 0.05,
        "record_stride": 0,
        "renormalize": False,
        "positivity_check_stride": 1000,
    },
    "analysis": {
        "quadrature_n": 8,
        "fidelity_kind": "sqrt",
        "strategy": "per-point",
        "max_leakage": 0.05,
    },
    "output": {
        "directory": "results",
        "sweep_csv": "sweep.csv",
        "manifest": "sweep_manifest.json",
        "record_wall_time": True,
    },
    "parallel": {
        "workers": None,
    },
}


@dataclass(slots=True, frozen=True)
class OutputConfig:
    directory: Path
    sweep_csv: str
    manifest: str
    record_wall_time: bool = True

    @property
    def csv_path(self) -> Path:
        return self.directory / self.sweep_csv

    @property
    def manifest_path(self) -> Path:
        return self.directory / self.manifest


@dataclass(slots=True, frozen=True)
class RunConfig:
    """Validated configuration with the resolved JSON it was built from."""

    system: SystemParams
    k: int
    gate_time: GateTime
    model: HamiltonianModel
    frame_correction: FrameCorrection
    ramp: float
    T_values: tuple[float, ...]
    kappa_inv_values: tuple[float, ...]
    propagation: PropagationConfig
    mode: GateMode
    quadrature_n: int
    fidelity_kind: FidelityKind
    strategy: FidelityStrategy
    max_leakage: float
    output: OutputConfig
    workers: int | None
    resolved: dict[str, dict[str, Any]]

    @property
    def config_hash(self) -> str:
        return config_hash(self.resolved)

    def scenario(
        self,
        decoherence: DecoherenceParams | None = None,
        mode: GateMode | None = None,
        workers: int = 1,
    ) -> Scenario:
        """Scenario for one decoherence setting (lossless when omitted)."""
        return Scenario(
            params=self.system,
            k=self.k,
            mode=self.mode if mode is None else mode,
            model=self.model,
            decoherence=decoherence or DecoherenceParams(),
            propagation=self.propagation,
            quadrature_n=self.quadrature_n,
            fidelity_kind=self.fidelity_kind,
            strategy=self.strategy,
            frame_correction=self.frame_correction,
            gate_time=self.gate_time,
            ramp=self.ramp,
            max_leakage=self.max_leakage,
            workers=workers,
        )

    def with_overrides(self, **sections: dict[str, Any]) -> "RunConfig":
        """Re-validate with some keys replaced, e.g. ``decoherence={"T_us": [5.0]}``."""
        data = copy.deepcopy(self.resolved)
        for section, values in sections.items():
            if section not in data:
                raise ConfigError("unknown section", key=section)
            data[section].update(values)
        return load_config(data)


def canonical_json(value: Any) -> str:
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def config_hash(resolved: dict[str, Any]) -> str:
    """First 16 hex digits of the SHA-256 of the canonical JSON."""
    digest = hashlib.sha256(canonical_json(resolved).encode("utf-8")).hexdigest()
    return digest[:HASH_LENGTH]


def _merge(data: dict[str, Any]) -> dict[str, dict[str, Any]]:
    if not isinstance(data, dict):
        raise ConfigError("top level must be a JSON object")
    merged = copy.deepcopy(DEFAULTS)
    for section, values in data.items():
        if section not in DEFAULTS:
            raise ConfigError("unknown section", key=section)
        if not isinstance(values, dict):
            raise ConfigError("section must be a JSON object", key=section)
        for name, value in values.items():
            if name not in DEFAULTS[section]:
                raise ConfigError("unknown key", key=f"{section}.{name}")
            merged[section][name] = value
    return merged


def _number(merged: dict[str, dict[str, Any]], section: str, name: str) -> float | None:
    value = merged[section][name]
    if value is None:
        return None
    if value == "inf":
        return math.inf
    if isinstance(value, bool) or not isinstance(value, int | float):
        raise ConfigError(f"expected a number, got {value!r}", key=f"{section}.{name}")
    return float(value)


def _required(merged: dict[str, dict[str, Any]], section: str, name: str) -> float:
    value = _number(merged, section, name)
    if value is None:
        raise ConfigError("must not be null", key=f"{section}.{name}")
    return value


def _integer(merged: dict[str, dict[str, Any]], section: str, name: str) -> int | None:
    value = merged[section][name]
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", key=f"{section}.{name}")
    return value


def _flag(merged: dict[str, dict[str, Any]], section: str, name: str) -> bool:
    value = merged[section][name]
    if not isinstance(value, bool):
        raise ConfigError(f"expected true or false, got {value!r}", key=f"{section}.{name}")
    return value


def _choice[E](merged: dict[str, dict[str, Any]], section: str, name: str, kind: type[E]) -> E:
    value = merged[section][name]
    try:
        return kind(value)  # type: ignore[call-arg]
    except ValueError as exc:
        allowed = ", ".join(member.value for member in kind)  # type: ignore[attr-defined]
        raise ConfigError(
            f"expected one of {allowed}, got {value!r}", key=f"{section}.{name}"
        ) from exc


def _values(merged: dict[str, dict[str, Any]], name: str) -> tuple[float, ...]:
    raw = merged["decoherence"][name]
    key = f"decoherence.{name}"
    if not isinstance(raw, list) or not raw:
        raise ConfigError("must be a non-empty list", key=key)
    values = []
    for item in raw:
        value = math.inf if item == "inf" else item
        if isinstance(value, bool) or not isinstance(value, int | float) or value <= 0:
            raise ConfigError(f"values must be positive numbers, got {item!r}", key=key)
        values.append(float(value))
    return tuple(values)


def _system(merged: dict[str, dict[str, Any]], k: int) -> SystemParams:
    section = merged["system"]
    omega_eg = _number(merged, "system", "omega_eg")
    omega_fe = _number(merged, "system", "omega_fe")
    g1 = _number(merged, "system", "g1")
    if omega_eg is None or omega_fe is None or g1 is None:
        raise ConfigError("omega_eg, omega_fe and g1 are required", key="system")
    omega_fg = omega_eg + omega_fe

    cavity = {name: _number(merged, "system", name) for name in ("omega_c1", "omega_c2")}
    detuning = {name: _number(merged, "system", name) for name in ("delta1", "delta2")}
    if all(value is not None for value in cavity.values()):
        if any(value is not None for value in detuning.values()):
            raise ConfigError("give cavity frequencies or detunings, not both", key="system")
        omega_c1, omega_c2 = cavity["omega_c1"], cavity["omega_c2"]
    elif all(value is not None for value in detuning.values()):
        omega_c1 = omega_fg - detuning["delta1"]
        omega_c2 = omega_fe - detuning["delta2"]
    else:
        raise ConfigError("needs omega_c1 and omega_c2, or delta1 and delta2", key="system")

    delta1, delta2 = omega_fg - omega_c1, omega_fe - omega_c2
    g2 = _number(merged, "system", "g2")
    if g2 is None:
        try:
            g2 = solve_g2(delta1, delta2, delta2 - delta1, k)
        except CatgateError as exc:
            raise ConfigError(str(exc), key="system.g2") from exc
        logger.info("g2 not given; design value g2/2pi = %.6f GHz for k = %d", g2, k)
        section["g2"] = g2

    n1 = _integer(merged, "system", "n1_trunc")
    n2 = _integer(merged, "system", "n2_trunc")
    cat_amplitude = _required(merged, "system", "cat_amplitude")
    try:
        return SystemParams(
            omega_eg=omega_eg,
            omega_fe=omega_fe,
            omega_fg=omega_fg,
            omega_c1=omega_c1,
            omega_c2=omega_c2,
            g1=g1,
            g2=g2,
            g1_tilde=_number(merged, "system", "g1_tilde"),
            g2_tilde=_number(merged, "system", "g2_tilde"),
            cat_amplitude=cat_amplitude,
            space=SpaceSpec(n1 or 0, n2 or 0),
        )
    except CatgateError as exc:
        raise ConfigError(str(exc), key="system") from exc


def load_config(data: dict[str, Any]) -> RunConfig:
    """Validate a configuration mapping; missing keys take their defaults."""
    merged = _merge(data)

    k = _integer(merged, "design", "k")
    if k is None or k < 1:
        raise ConfigError(f"must be a positive integer, got {k!r}", key="design.k")
    system = _system(merged, k)

    try:
        propagation = PropagationConfig(
            t_final=_number(merged, "simulation", "t_final"),
            dt=_number(merged, "simulation", "dt"),
            max_phase_step=_required(merged, "simulation", "max_phase_step"),
            record_stride=_integer(merged, "simulation", "record_stride") or 0,
            renormalize=_flag(merged, "simulation", "renormalize"),
            positivity_check_stride=_integer(merged, "simulation", "positivity_check_stride") or 0,
        )
    except CatgateError as exc:
        raise ConfigError(str(exc), key="simulation") from exc

    quadrature_n = _integer(merged, "analysis", "quadrature_n")
    if quadrature_n is None or quadrature_n < 2:
        raise ConfigError(f"must be >= 2, got {quadrature_n!r}", key="analysis.quadrature_n")
    max_leakage = _number(merged, "analysis", "max_leakage")
    if max_leakage is None or not 0 < max_leakage <= 1:
        raise ConfigError(f"must lie in (0, 1], got {max_leakage!r}", key="analysis.max_leakage")
    ramp = _required(merged, "design", "ramp_ns")
    if not 0 <= ramp < math.inf:
        raise ConfigError(f"must be a finite number >= 0, got {ramp}", key="design.ramp_ns")
    workers = _integer(merged, "parallel", "workers")
    if workers is not None and workers < 1:
        raise ConfigError(f"must be >= 1, got {workers}", key="parallel.workers")

    out = merged["output"]
    for name in ("directory", "sweep_csv", "manifest"):
        if not isinstance(out[name], str) or not out[name]:
            raise ConfigError("must be a non-empty string", key=f"output.{name}")

    return RunConfig(
        system=system,
        k=k,
        gate_time=_choice(merged, "design", "gate_time", GateTime),
        model=_choice(merged, "design", "model", HamiltonianModel),
        frame_correction=_choice(merged, "design", "frame_correction", FrameCorrection),
        ramp=ramp,
        T_values=_values(merged, "T_us"),
        kappa_inv_values=_values(merged, "kappa_inv_us"),
        propagation=propagation,
        mode=_choice(merged, "simulation", "mode", GateMode),
        quadrature_n=quadrature_n,
        fidelity_kind=_choice(merged, "analysis", "fidelity_kind", FidelityKind),
        strategy=_choice(merged, "analysis", "strategy", FidelityStrategy),
        max_leakage=max_leakage,
        output=OutputConfig(
            directory=Path(out["directory"]),
            sweep_csv=out["sweep_csv"],
            manifest=out["manifest"],
            record_wall_time=_flag(merged, "output", "record_wall_time"),
        ),
        workers=workers,
        resolved=merged,
    )


def default_config() -> RunConfig:
    return load_config({})


def parse_config(path: Path | str) -> RunConfig:
    """Read and validate a JSON configuration file."""
    source = Path(path)
    try:
        text = source.read_text(encoding="utf-8")
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {source}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read config file {source}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"malformed JSON in {source} at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc
    config = load_config(data)
    logger.debug("loaded %s (config hash %s)", source, config.config_hash)
    return config

