"""Configuration dataclasses and JSON run-config loading.

All lengths are meters, frequencies Hz, and angles degrees; unit
conversion happens only at the CLI/file boundary.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

CONFIG_SCHEMA_VERSION = 1


class ConfigError(ValueError):
    """Invalid configuration value, file, or cross-field combination."""


DESCRIPTOR_FIELDS = (
    "feed_len",
    "feed_w",
    "slot_len",
    "slot_w",
    "slot_offset",
    "patch_len",
    "patch_w",
    "dir_len",
    "dir_w",
    "dir_offset",
)

# Offsets may legitimately be zero; every other descriptor must be positive.
_ZERO_ALLOWED = frozenset({"slot_offset", "dir_offset"})


@dataclass(frozen=True)
class DesignVector:
    """The ten geometric descriptors of an offset stacked-patch radiator.

    ``feed_len``/``feed_w`` describe the microstrip feed line,
    ``slot_len``/``slot_w``/``slot_offset`` the coupling slot etched in the
    ground plane, ``patch_len``/``patch_w`` the driven patch, and
    ``dir_len``/``dir_w``/``dir_offset`` the parasitic director plus its
    lateral shift along the (negative) array axis. All fields in meters.
    """

    feed_len: float
    feed_w: float
    slot_len: float
    slot_w: float
    slot_offset: float
    patch_len: float
    patch_w: float
    dir_len: float
    dir_w: float
    dir_offset: float

    def __post_init__(self) -> None:
        for name in DESCRIPTOR_FIELDS:
            value = getattr(self, name)
            if not math.isfinite(value):
                raise ConfigError(f"descriptor {name!r} must be finite, got {value!r}")
            if name in _ZERO_ALLOWED:
                if value < 0.0:
                    raise ConfigError(f"descriptor {name!r} must be >= 0, got {value!r}")
            elif value <= 0.0:
                raise ConfigError(f"descriptor {name!r} must be > 0, got {value!r}")

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, name) for name in DESCRIPTOR_FIELDS], dtype=float)

    @classmethod
    def from_array(cls, values) -> "DesignVector":
        values = np.asarray(values, dtype=float)
        if values.shape != (len(DESCRIPTOR_FIELDS),):
            raise ConfigError(
                f"descriptor array must have shape ({len(DESCRIPTOR_FIELDS)},), got {values.shape}"
            )
        return cls(*(float(v) for v in values))

    def as_dict(self) -> dict[str, float]:
        return {name: float(getattr(self, name)) for name in DESCRIPTOR_FIELDS}

    @classmethod
    def from_dict(cls, data: dict) -> "DesignVector":
        unknown = set(data) - set(DESCRIPTOR_FIELDS)
        if unknown:
            raise ConfigError(f"unknown descriptor keys: {sorted(unknown)}")
        missing = set(DESCRIPTOR_FIELDS) - set(data)
        if missing:
            raise ConfigError(f"missing descriptor keys: {sorted(missing)}")
        return cls(**{k: float(data[k]) for k in DESCRIPTOR_FIELDS})

    def replace(self, **changes) -> "DesignVector":
        return dataclasses.replace(self, **changes)


# Reference descriptor sets for the two linear polarizations of the
# 26-30 GHz study layouts; also the anchor for the default search bounds.
REFERENCE_DESIGN_HPOL = DesignVector(
    feed_len=4.63e-3,
    feed_w=3.14e-4,
    slot_len=2.42e-3,
    slot_w=4.80e-4,
    slot_offset=7.27e-4,
    patch_len=2.54e-3,
    patch_w=4.83e-3,
    dir_len=2.63e-3,
    dir_w=4.05e-3,
    dir_offset=2.83e-3,
)

REFERENCE_DESIGN_VPOL = DesignVector(
    feed_len=4.63e-3,
    feed_w=3.56e-4,
    slot_len=2.43e-3,
    slot_w=4.79e-4,
    slot_offset=7.26e-4,
    patch_len=2.64e-3,
    patch_w=4.86e-3,
    dir_len=2.70e-3,
    dir_w=4.46e-3,
    dir_offset=3.35e-3,
)


@dataclass(frozen=True)
class DesignBounds:
    """Per-descriptor search box, stored as two aligned tuples of meters."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self) -> None:
        n = len(DESCRIPTOR_FIELDS)
        if len(self.lower) != n or len(self.upper) != n:
            raise ConfigError(f"bounds must have {n} entries per side")
        for name, lo, hi in zip(DESCRIPTOR_FIELDS, self.lower, self.upper):
            if not (math.isfinite(lo) and math.isfinite(hi)):
                raise ConfigError(f"bounds for {name!r} must be finite")
            if lo >= hi:
                raise ConfigError(f"bounds for {name!r} are degenerate: [{lo}, {hi}]")
            floor = 0.0 if name in _ZERO_ALLOWED else np.nextafter(0.0, 1.0)
            if lo < floor:
                raise ConfigError(f"lower bound for {name!r} must be >= {floor}")

    def to_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return np.array(self.lower, dtype=float), np.array(self.upper, dtype=float)

    def span(self) -> np.ndarray:
        lo, hi = self.to_arrays()
        return hi - lo

    def violations(self, chi: DesignVector) -> list[str]:
        """Names of descriptors falling outside the box."""
        out = []
        for name, lo, hi in zip(DESCRIPTOR_FIELDS, self.lower, self.upper):
            v = getattr(chi, name)
            if v < lo or v > hi:
                out.append(name)
        return out

    def contains(self, chi: DesignVector) -> bool:
        return not self.violations(chi)

    def as_dict(self) -> dict:
        return {
            "lower": dict(zip(DESCRIPTOR_FIELDS, self.lower)),
            "upper": dict(zip(DESCRIPTOR_FIELDS, self.upper)),
        }


def default_bounds(scale_low: float = 0.5, scale_high: float = 1.5) -> DesignBounds:
    """Search box spanning ``scale_low``..``scale_high`` times the reference layout."""
    ref = REFERENCE_DESIGN_HPOL.to_array()
    return DesignBounds(
        lower=tuple(float(v) for v in scale_low * ref),
        upper=tuple(float(v) for v in scale_high * ref),
    )


@dataclass(frozen=True)
class DielectricLayer:
    eps_r: float
    tan_delta: float
    thickness_m: float

    def __post_init__(self) -> None:
        if self.eps_r < 1.0:
            raise ConfigError(f"relative permittivity must be >= 1, got {self.eps_r}")
        if self.thickness_m <= 0.0:
            raise ConfigError(f"layer thickness must be > 0, got {self.thickness_m}")
        if self.tan_delta < 0.0:
            raise ConfigError(f"loss tangent must be >= 0, got {self.tan_delta}")


N_LAYERS = 3


@dataclass(frozen=True)
class StackUp:
    """Three-layer dielectric stack: feed layer, patch layer, director layer."""

    layers: tuple[DielectricLayer, DielectricLayer, DielectricLayer]

    def __post_init__(self) -> None:
        if len(self.layers) != N_LAYERS:
            raise ConfigError(f"stack-up must have exactly {N_LAYERS} layers")

    @property
    def total_thickness_m(self) -> float:
        return sum(layer.thickness_m for layer in self.layers)


def default_stackup() -> StackUp:
    layer = DielectricLayer(eps_r=2.2, tan_delta=9e-4, thickness_m=508e-6)
    return StackUp(layers=(layer, layer, layer))


@dataclass(frozen=True)
class BandSpec:
    """Target frequency band, matching threshold, and steering angle."""

    f_min_hz: float
    f_max_hz: float
    f_c_hz: float
    n_samples: int
    s_threshold_db: float
    theta_s_deg: float

    def __post_init__(self) -> None:
        if not (0.0 < self.f_min_hz < self.f_c_hz < self.f_max_hz):
            raise ConfigError(
                f"need 0 < f_min < f_c < f_max, got {self.f_min_hz}, {self.f_c_hz}, {self.f_max_hz}"
            )
        if self.n_samples < 3 or self.n_samples % 2 == 0:
            raise ConfigError(f"band sample count must be odd and >= 3, got {self.n_samples}")
        if self.s_threshold_db >= 0.0:
            raise ConfigError(f"matching threshold must be negative dB, got {self.s_threshold_db}")
        if not (0.0 < self.theta_s_deg <= 180.0):
            raise ConfigError(f"steering angle must lie in (0, 180], got {self.theta_s_deg}")
        grid = self.freq_grid()
        if np.min(np.abs(grid - self.f_c_hz)) > 1e-6 * self.f_c_hz:
            raise ConfigError("center frequency must coincide with a band grid sample")

    def freq_grid(self) -> np.ndarray:
        return np.linspace(self.f_min_hz, self.f_max_hz, self.n_samples)

    @property
    def fractional_bandwidth(self) -> float:
        return (self.f_max_hz - self.f_min_hz) / self.f_c_hz

    @property
    def wavelength_c_m(self) -> float:
        return SPEED_OF_LIGHT / self.f_c_hz


@dataclass(frozen=True)
class ArrayConfig:
    """Linear-array context: element count, spacing, band, polarization."""

    n_elements: int
    spacing_m: float
    band: BandSpec
    polarization: str = "h"

    def __post_init__(self) -> None:
        if self.n_elements < 1:
            raise ConfigError(f"element count must be >= 1, got {self.n_elements}")
        if self.spacing_m <= 0.0:
            raise ConfigError(f"element spacing must be > 0, got {self.spacing_m}")
        if self.polarization not in ("h", "v"):
            raise ConfigError(f"polarization must be 'h' or 'v', got {self.polarization!r}")

    @property
    def theta_s_deg(self) -> float:
        return self.band.theta_s_deg

    @property
    def f_c_hz(self) -> float:
        return self.band.f_c_hz


@dataclass(frozen=True)
class ProxyCalibration:
    """Tunable constants of the analytic element model.

    ``ef_exponent`` shapes the bare-patch element factor, ``coupling_phase_rad``
    and ``coupling_ceiling`` the complex director coupling, ``q_factor`` the
    resonance sharpness. ``edge_*`` set the deterministic perturbation applied
    to elements that are missing one neighbor. ``broadside_ref_gain_db`` pins
    the peak of a single centered-director element so pattern levels read as
    relative gain in dB.
    """

    ef_exponent: float = 1.0
    coupling_phase_rad: float = -math.pi / 2.0
    coupling_ceiling: float = 0.9
    q_factor: float = 15.0
    edge_pattern_shift_deg: float = 1.5
    edge_freq_shift: float = 0.005
    cross_pol_ratio: float = 0.05
    broadside_ref_gain_db: float = 8.8

    def __post_init__(self) -> None:
        if self.ef_exponent <= 0.0:
            raise ConfigError("element-factor exponent must be > 0")
        if not (0.0 <= self.coupling_ceiling <= 1.0):
            raise ConfigError("coupling ceiling must lie in [0, 1]")
        if self.q_factor <= 0.0:
            raise ConfigError("resonance Q must be > 0")
        if self.cross_pol_ratio < 0.0:
            raise ConfigError("cross-pol ratio must be >= 0")


@dataclass(frozen=True)
class SbdBudget:
    """Evaluation budget: initial samples, swarm size, infill iterations."""

    initial_samples: int = 50
    particles: int = 10
    iterations: int = 100

    def __post_init__(self) -> None:
        if self.initial_samples < 1:
            raise ConfigError("initial sample count must be >= 1")
        if self.particles < 1:
            raise ConfigError("particle count must be >= 1")
        if self.iterations < 0:
            raise ConfigError("iteration count must be >= 0")
        if self.particles > self.initial_samples:
            raise ConfigError(
                f"swarm size ({self.particles}) cannot exceed the initial "
                f"sample count ({self.initial_samples})"
            )

    @property
    def total_evaluations(self) -> int:
        return self.initial_samples + self.iterations


@dataclass(frozen=True)
class FilesSpec:
    """External data sources for the file-based evaluator."""

    s1p: tuple[str, ...]
    patterns: tuple[tuple[str, ...], ...] | None = None

    def __post_init__(self) -> None:
        if not self.s1p:
            raise ConfigError("files evaluator needs at least one .s1p path")
        if self.patterns is not None and len(self.patterns) != len(self.s1p):
            raise ConfigError("pattern file rows must match the number of elements")


@dataclass(frozen=True)
class RunConfig:
    """Fully validated description of one co-design or analysis run."""

    array: ArrayConfig
    stack: StackUp
    bounds: DesignBounds
    budget: SbdBudget
    seed: int
    evaluator: str = "proxy"
    proxy: ProxyCalibration = field(default_factory=ProxyCalibration)
    files: FilesSpec | None = None
    angular_step_deg: float = 0.25
    output_dir: str | None = None

    def __post_init__(self) -> None:
        if self.evaluator not in ("proxy", "files"):
            raise ConfigError(f"evaluator must be 'proxy' or 'files', got {self.evaluator!r}")
        if self.evaluator == "files" and self.files is None:
            raise ConfigError("files evaluator selected but no file paths configured")
        if self.angular_step_deg <= 0.0 or self.angular_step_deg > 1.0:
            raise ConfigError(f"angular step must lie in (0, 1] degrees, got {self.angular_step_deg}")
        steps = 180.0 / self.angular_step_deg
        if abs(steps - round(steps)) > 1e-9:
            raise ConfigError("angular step must divide 180 degrees evenly")

    def replace(self, **changes) -> "RunConfig":
        return dataclasses.replace(self, **changes)

    def to_json_dict(self) -> dict:
        band = self.array.band
        data = {
            "schema": CONFIG_SCHEMA_VERSION,
            "array": {
                "n_elements": self.array.n_elements,
                "spacing_m": self.array.spacing_m,
                "theta_s_deg": band.theta_s_deg,
                "polarization": self.array.polarization,
            },
            "band": {
                "f_min_hz": band.f_min_hz,
                "f_max_hz": band.f_max_hz,
                "f_c_hz": band.f_c_hz,
                "samples": band.n_samples,
                "s_threshold_db": band.s_threshold_db,
            },
            "stackup": [
                {
                    "eps_r": layer.eps_r,
                    "tan_delta": layer.tan_delta,
                    "thickness_m": layer.thickness_m,
                }
                for layer in self.stack.layers
            ],
            "bounds": self.bounds.as_dict(),
            "budget": {
                "initial_samples": self.budget.initial_samples,
                "particles": self.budget.particles,
                "iterations": self.budget.iterations,
            },
            "seed": self.seed,
            "evaluator": self.evaluator,
            "proxy": dataclasses.asdict(self.proxy),
            "angular_step_deg": self.angular_step_deg,
        }
        if self.files is not None:
            data["files"] = {
                "s1p": list(self.files.s1p),
                "patterns": None
                if self.files.patterns is None
                else [list(row) for row in self.files.patterns],
            }
        if self.output_dir is not None:
            data["output_dir"] = self.output_dir
        return data


def _take(block: dict, allowed: set[str], required: set[str], where: str) -> dict:
    if not isinstance(block, dict):
        raise ConfigError(f"{where} must be a JSON object")
    unknown = set(block) - allowed
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - set(block)
    if missing:
        raise ConfigError(f"missing keys in {where}: {sorted(missing)}")
    return block


def run_config_from_dict(data: dict) -> RunConfig:
    """Build and cross-validate a :class:`RunConfig` from parsed JSON."""
    top = _take(
        data,
        allowed={
            "schema",
            "array",
            "band",
            "stackup",
            "bounds",
            "budget",
            "seed",
            "evaluator",
            "proxy",
            "files",
            "angular_step_deg",
            "output_dir",
        },
        required={"schema", "array", "band", "budget", "seed"},
        where="run config",
    )
    if top["schema"] != CONFIG_SCHEMA_VERSION:
        raise ConfigError(
            f"unsupported config schema {top['schema']!r}; expected {CONFIG_SCHEMA_VERSION}"
        )

    array_block = _take(
        top["array"],
        allowed={"n_elements", "spacing_m", "theta_s_deg", "polarization"},
        required={"n_elements", "spacing_m", "theta_s_deg"},
        where="array",
    )
    band_block = _take(
        top["band"],
        allowed={"f_min_hz", "f_max_hz", "f_c_hz", "samples", "s_threshold_db"},
        required={"f_min_hz", "f_max_hz", "f_c_hz", "samples", "s_threshold_db"},
        where="band",
    )
    band = BandSpec(
        f_min_hz=float(band_block["f_min_hz"]),
        f_max_hz=float(band_block["f_max_hz"]),
        f_c_hz=float(band_block["f_c_hz"]),
        n_samples=int(band_block["samples"]),
        s_threshold_db=float(band_block["s_threshold_db"]),
        theta_s_deg=float(array_block["theta_s_deg"]),
    )
    array = ArrayConfig(
        n_elements=int(array_block["n_elements"]),
        spacing_m=float(array_block["spacing_m"]),
        band=band,
        polarization=str(array_block.get("polarization", "h")),
    )

    if "stackup" in top:
        layers_raw = top["stackup"]
        if not isinstance(layers_raw, list) or len(layers_raw) != N_LAYERS:
            raise ConfigError(f"stackup must be a list of {N_LAYERS} layers")
        layers = []
        for i, layer in enumerate(layers_raw):
            block = _take(
                layer,
                allowed={"eps_r", "tan_delta", "thickness_m"},
                required={"eps_r", "tan_delta", "thickness_m"},
                where=f"stackup[{i}]",
            )
            layers.append(
                DielectricLayer(
                    eps_r=float(block["eps_r"]),
                    tan_delta=float(block["tan_delta"]),
                    thickness_m=float(block["thickness_m"]),
                )
            )
        stack = StackUp(layers=tuple(layers))
    else:
        stack = default_stackup()

    if "bounds" in top:
        bounds_block = _take(
            top["bounds"], allowed={"lower", "upper"}, required={"lower", "upper"}, where="bounds"
        )
        lower = DesignVector.from_dict(bounds_block["lower"]).to_array()
        upper_raw = bounds_block["upper"]
        unknown = set(upper_raw) - set(DESCRIPTOR_FIELDS)
        if unknown:
            raise ConfigError(f"unknown descriptor keys: {sorted(unknown)}")
        missing = set(DESCRIPTOR_FIELDS) - set(upper_raw)
        if missing:
            raise ConfigError(f"missing descriptor keys: {sorted(missing)}")
        upper = np.array([float(upper_raw[k]) for k in DESCRIPTOR_FIELDS])
        bounds = DesignBounds(lower=tuple(map(float, lower)), upper=tuple(map(float, upper)))
    else:
        bounds = default_bounds()

    budget_block = _take(
        top["budget"],
        allowed={"initial_samples", "particles", "iterations"},
        required={"initial_samples", "particles", "iterations"},
        where="budget",
    )
    budget = SbdBudget(
        initial_samples=int(budget_block["initial_samples"]),
        particles=int(budget_block["particles"]),
        iterations=int(budget_block["iterations"]),
    )

    proxy = ProxyCalibration()
    if "proxy" in top:
        proxy_block = _take(
            top["proxy"],
            allowed=set(f.name for f in dataclasses.fields(ProxyCalibration)),
            required=set(),
            where="proxy",
        )
        proxy = dataclasses.replace(proxy, **{k: float(v) for k, v in proxy_block.items()})

    files = None
    if "files" in top:
        files_block = _take(
            top["files"], allowed={"s1p", "patterns"}, required={"s1p"}, where="files"
        )
        patterns = files_block.get("patterns")
        files = FilesSpec(
            s1p=tuple(str(p) for p in files_block["s1p"]),
            patterns=None
            if patterns is None
            else tuple(tuple(str(p) for p in row) for row in patterns),
        )

    return RunConfig(
        array=array,
        stack=stack,
        bounds=bounds,
        budget=budget,
        seed=int(top["seed"]),
        evaluator=str(top.get("evaluator", "proxy")),
        proxy=proxy,
        files=files,
        angular_step_deg=float(top.get("angular_step_deg", 0.25)),
        output_dir=None if top.get("output_dir") is None else str(top["output_dir"]),
    )


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return run_config_from_dict(data)
