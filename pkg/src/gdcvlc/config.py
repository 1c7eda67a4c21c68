"""INI experiment configuration.

Every key has a default equal to the reference room setup, so an empty file
is a valid configuration.  Unknown sections or keys are rejected.
"""

from __future__ import annotations

import configparser
import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from importlib import resources
from pathlib import Path

from .channel import TABLE2_LEDS, TABLE2_PDS, RoomGeometry
from .errors import ValidationError
from .illumination import GridSpec
from .link import DEFAULT_SEED, StopRule


def _grid(start: float, stop: float, step: float) -> tuple:
    n = int(round((stop - start) / step)) + 1
    return tuple(float(round(start + i * step, 10)) for i in range(n))


@dataclass(frozen=True)
class GeometrySection:
    led_positions: tuple = TABLE2_LEDS
    pd_positions: tuple = TABLE2_PDS
    semi_angle_half_power: float = 60.0
    fov_semi_angle: float = 40.0
    detector_area: float = 1e-4
    refractive_index: float = 1.5
    room_size: tuple = (4.0, 4.0)
    grid_points: int = 50
    plane_height: float = 0.75


@dataclass(frozen=True)
class SystemSection:
    n_slots: int = 2
    bits_per_matrix: int = 8
    current_min: float = 0.1
    current_max: float = 2.0


@dataclass(frozen=True)
class SweepSection:
    dimming_levels: tuple = (0.35, 0.5, 0.65, 0.8)
    snr_db: tuple = _grid(0.0, 40.0, 5.0)
    seed: int = DEFAULT_SEED
    min_errors: int = StopRule.min_errors
    max_matrices: int = StopRule.max_matrices
    batch: int = StopRule.batch
    selector: str = "incremental"
    methods: tuple = ("mber", "mfd1", "mfd2")
    cpep_scale: int = 4
    selection_snr_db: float = 30.0
    uidr_levels: tuple = _grid(0.05, 0.95, 0.05)
    illum_eta: float = 0.2
    ns_eta: float = 0.5
    ns_slots: tuple = (2, 3)
    ns_bits_per_matrix: int = 9
    ns_snr_db: float = 30.0
    rate_levels: tuple = _grid(0.1, 0.9, 0.1)
    rate_snr_db: float = 30.0
    ber_target: float = 5e-4
    max_bits: int = 12


@dataclass(frozen=True)
class OutputSection:
    directory: str = "results"
    formats: tuple = ("csv",)


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: GeometrySection = field(default_factory=GeometrySection)
    system: SystemSection = field(default_factory=SystemSection)
    sweep: SweepSection = field(default_factory=SweepSection)
    output: OutputSection = field(default_factory=OutputSection)

    def room(self) -> RoomGeometry:
        g = self.geometry
        return RoomGeometry(g.led_positions, g.pd_positions, g.semi_angle_half_power,
                            g.fov_semi_angle, g.detector_area, g.refractive_index,
                            room_size=g.room_size)

    def grid(self) -> GridSpec:
        g = self.geometry
        n = g.grid_points
        return GridSpec(0.0, g.room_size[0], 0.0, g.room_size[1], n, n, g.plane_height)

    def stop_rule(self) -> StopRule:
        s = self.sweep
        return StopRule(s.min_errors, s.max_matrices, s.batch)

    def with_overrides(self, **sweep_fields) -> "ExperimentConfig":
        sw = asdict(self.sweep)
        for k, v in sweep_fields.items():
            if v is not None:
                sw[k] = v
        return ExperimentConfig(self.geometry, self.system, _validated_sweep(SweepSection(**sw)), self.output)

    def canonical(self) -> str:
        """Stable JSON text of the fully resolved configuration."""
        return json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


_SECTIONS = {
    "geometry": GeometrySection,
    "system": SystemSection,
    "sweep": SweepSection,
    "output": OutputSection,
}


def _points(text: str) -> tuple:
    pts = []
    for chunk in text.split(";"):
        if chunk.strip():
            xyz = tuple(float(v) for v in chunk.replace(",", " ").split())
            if len(xyz) != 3:
                raise ValueError(f"expected x y z, got {chunk.strip()!r}")
            pts.append(xyz)
    return tuple(pts)


def _numbers(text: str, kind):
    """Space/comma separated values, or ``start:stop:step`` for floats."""
    text = text.strip()
    if ":" in text:
        a, b, c = (float(v) for v in text.split(":"))
        if c <= 0 or b < a:
            raise ValueError("range needs start <= stop and a positive step")
        return tuple(kind(v) for v in _grid(a, b, c))
    return tuple(kind(v) for v in text.replace(",", " ").split())


def _parse(name: str, default, raw: str):
    if name.endswith("positions"):
        return _points(raw)
    if isinstance(default, tuple):
        if default and isinstance(default[0], str):
            return tuple(raw.replace(",", " ").split())
        kind = int if default and isinstance(default[0], int) else float
        return _numbers(raw, kind)
    if isinstance(default, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return int(raw, 0)
    if isinstance(default, float):
        return float(raw)
    return raw.strip()


def _validated_sweep(s: SweepSection) -> SweepSection:
    if s.cpep_scale not in (2, 4):
        raise ValidationError("cpep_scale must be 2 or 4")
    bad = set(s.methods) - {"mber", "mfd1", "mfd2"}
    if bad or not s.methods:
        raise ValidationError(f"unknown methods {sorted(bad)}")
    if s.selector not in ("incremental", "sequential", "exhaustive"):
        raise ValidationError(f"unknown selector {s.selector!r}")
    if s.min_errors < 1 or s.max_matrices < 1 or s.batch < 1:
        raise ValidationError("stop rule values must be positive")
    if not s.snr_db:
        raise ValidationError("snr_db grid is empty")
    return s


def load_config(path: str | Path | None = None, text: str | None = None) -> ExperimentConfig:
    """Read a configuration from ``path`` or literal ``text``; neither means defaults."""
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        if path is not None:
            with open(path, encoding="utf-8") as fh:
                cp.read_file(fh)
        elif text is not None:
            cp.read_string(text)
    except (OSError, configparser.Error) as exc:
        raise ValidationError(f"cannot read config: {exc}") from exc

    built = {}
    for section in cp.sections():
        if section not in _SECTIONS:
            raise ValidationError(f"unknown config section [{section}]")
    for section, cls in _SECTIONS.items():
        defaults = {f.name: getattr(cls(), f.name) for f in fields(cls)}
        values = {}
        if cp.has_section(section):
            for key, raw in cp.items(section):
                if key not in defaults:
                    raise ValidationError(f"unknown key {key!r} in [{section}]")
                try:
                    values[key] = _parse(key, defaults[key], raw)
                except ValueError as exc:
                    raise ValidationError(f"[{section}] {key}: {exc}") from exc
        built[section] = cls(**values)

    cfg = ExperimentConfig(**built)
    _validated_sweep(cfg.sweep)
    if cfg.system.n_slots < 1 or cfg.system.bits_per_matrix < 1:
        raise ValidationError("n_slots and bits_per_matrix must be positive")
    if not 0 < cfg.system.current_min < cfg.system.current_max:
        raise ValidationError("need 0 < current_min < current_max")
    if set(cfg.output.formats) - {"csv"}:
        raise ValidationError("only the csv output format is supported")
    if cfg.geometry.grid_points < 1:
        raise ValidationError("grid_points must be positive")
    cfg.room()  # geometry validation
    return cfg


def reference_config_text() -> str:
    """The shipped, fully commented reference configuration."""
    return resources.files("gdcvlc").joinpath("reference.ini").read_text(encoding="utf-8")
