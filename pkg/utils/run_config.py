"""
Run configuration: pydantic schema, YAML loading and --override handling
"""
import logging
import math
from pathlib import Path
from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from ruamel.yaml import YAML
from ruamel.yaml.error import YAMLError

from config.settings import (
    DEFAULT_DT,
    DEFAULT_EPS_LIST,
    DEFAULT_EPSILON,
    DEFAULT_GAMMA,
    DEFAULT_KAPPA,
    DEFAULT_N_V,
    DEFAULT_N_X,
    DEFAULT_NU_STAR,
    DEFAULT_PICARD_ITERATIONS,
    DEFAULT_QUAD_DT,
    DEFAULT_T_END,
    DT_SAFETY,
    NSF_DEFAULT_DT,
    NSF_DEFAULT_T_END,
    NU_STAR_PER_NU,
    TOL_IDENTITY,
)
from core.errors import ConfigError

logger = logging.getLogger(__name__)


class _Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class BandConfig(_Section):
    n_x: int = Field(DEFAULT_N_X, ge=1, description="x-sphere radius (strict cutoff)")
    n_v: int = Field(DEFAULT_N_V, ge=2, description="v-cube halfwidth (strict cutoff)")
    eps_scaling: bool = Field(False, description="tie both radii to ceil(eps^-gamma)")
    gamma: float = Field(DEFAULT_GAMMA, gt=0.0)


class ParamsConfig(_Section):
    epsilon: float = Field(DEFAULT_EPSILON, gt=0.0)
    nu_star: float = Field(DEFAULT_NU_STAR, gt=0.0)
    kappa: float = Field(DEFAULT_KAPPA, gt=0.0)

    @property
    def nu(self):
        return self.nu_star / NU_STAR_PER_NU


class IntegratorConfig(_Section):
    method: Literal["imex", "rk4", "picard"] = "imex"
    dt: float = Field(DEFAULT_DT, gt=0.0)
    t_end: float = Field(DEFAULT_T_END, gt=0.0)
    quad_dt: float = Field(DEFAULT_QUAD_DT, gt=0.0)
    picard_iterations: int = Field(DEFAULT_PICARD_ITERATIONS, ge=1)
    dt_safety: float = Field(DT_SAFETY, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _horizon_covers_step(self):
        if self.t_end < self.dt:
            raise ValueError(f"t_end ({self.t_end}) must be at least dt ({self.dt})")
        return self


class ModeConfig(_Section):
    """One explicit initial mode; n is the x-wavevector, m the v-wavevector (component 'f' only)"""

    component: Literal["f", "rho", "u1", "u2", "u3", "theta"]
    n: Tuple[int, int, int]
    m: Tuple[int, int, int] = (0, 0, 0)
    amplitude: Tuple[float, float] = Field(description="[re, im]")

    @property
    def complex_amplitude(self):
        return complex(*self.amplitude)


class InitialConfig(_Section):
    preset: Literal["zero", "single_mode_shear", "thermal_bump", "homogeneous", "random_seeded", "modes"] = (
        "single_mode_shear"
    )
    amplitude: float = 0.1
    seed: int = 0
    modes: List[ModeConfig] = Field(default_factory=list)
    well_prepared: bool = False

    @model_validator(mode="after")
    def _modes_need_mode_preset(self):
        if self.preset == "modes" and not self.modes:
            raise ValueError("preset 'modes' needs a non-empty modes list")
        return self


class OutputsConfig(_Section):
    dir: Optional[str] = None
    checkpoint_every: int = Field(0, ge=0)
    series_every: int = Field(1, ge=1)
    write_fields: bool = True


class TolerancesConfig(_Section):
    tol_energy: Optional[float] = Field(None, gt=0.0, description="default 1e-8 * E(f0)^2")
    tol_identity: float = Field(TOL_IDENTITY, gt=0.0)


class StudyConfig(_Section):
    eps_list: Tuple[float, ...] = DEFAULT_EPS_LIST
    horizon: float = Field(DEFAULT_T_END, gt=0.0)

    @field_validator("eps_list")
    @classmethod
    def _decreasing(cls, value):
        if len(value) < 2:
            raise ValueError("eps_list needs at least two values")
        if any(e <= 0 for e in value):
            raise ValueError("eps_list values must be positive")
        if any(b >= a for a, b in zip(value, value[1:])):
            raise ValueError(f"eps_list must be strictly decreasing, got {list(value)}")
        return value


class NsfConfig(_Section):
    dt: float = Field(NSF_DEFAULT_DT, gt=0.0)
    t_end: float = Field(NSF_DEFAULT_T_END, gt=0.0)
    ingest: Optional[str] = Field(None, description="fields.csv of a kinetic run to take forcing from")


class RunConfig(_Section):
    band: BandConfig = Field(default_factory=BandConfig)
    params: ParamsConfig = Field(default_factory=ParamsConfig)
    integrator: IntegratorConfig = Field(default_factory=IntegratorConfig)
    initial: InitialConfig = Field(default_factory=InitialConfig)
    outputs: OutputsConfig = Field(default_factory=OutputsConfig)
    tolerances: TolerancesConfig = Field(default_factory=TolerancesConfig)
    study: StudyConfig = Field(default_factory=StudyConfig)
    nsf: NsfConfig = Field(default_factory=NsfConfig)

    def build_band(self, epsilon=None):
        """Band of a run at epsilon (defaults to params.epsilon)"""
        from core.spectral_core import Band

        if self.band.eps_scaling:
            return Band.from_epsilon(epsilon or self.params.epsilon, self.band.gamma)
        return Band(self.band.n_x, self.band.n_v)

    def kinetic_params(self, epsilon=None):
        from core.dynamics import KineticParams

        return KineticParams(
            epsilon=epsilon or self.params.epsilon,
            nu_star=self.params.nu_star,
            kappa=self.params.kappa,
        )

    def with_overrides(self, overrides):
        """New validated config with dotted overrides applied"""
        return validate_config(apply_overrides(self.model_dump(mode="python"), overrides))


def parse_override_value(raw):
    """Python value of a CLI override string: bool, none, int, float or string"""
    text = raw.strip()
    lower = text.lower()
    if lower in {"true", "false"}:
        return lower == "true"
    if lower in {"none", "null"}:
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    if "," in text:
        return [parse_override_value(part) for part in text.split(",") if part.strip()]
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def apply_overrides(payload, overrides):
    """
    Apply dotted-path overrides (e.g. 'params.epsilon=0.1') to a raw mapping

    Raises:
        ConfigError: malformed override or a path through a non-mapping
    """
    for item in overrides or ():
        key, sep, value_str = item.partition("=")
        parts = [segment for segment in key.strip().split(".") if segment]
        if not sep or not parts:
            raise ConfigError(f"Invalid override '{item}'; expected path=value")
        target = payload
        for segment in parts[:-1]:
            if not isinstance(target, dict):
                raise ConfigError(f"Cannot traverse into non-mapping for override '{item}' at '{segment}'")
            if target.get(segment) is None:
                target[segment] = {}
            target = target[segment]
        if not isinstance(target, dict):
            raise ConfigError(f"Cannot set override '{item}'; target is not a mapping")
        target[parts[-1]] = parse_override_value(value_str)
        logger.debug(f"Override {'.'.join(parts)} = {target[parts[-1]]!r}")
    return payload


def validate_config(payload):
    """RunConfig from a raw mapping; validation errors become ConfigError"""
    try:
        return RunConfig.model_validate(payload or {})
    except ValidationError as exc:
        raise ConfigError(f"Invalid run configuration:\n{exc}") from exc


def load_config(path=None, overrides=None):
    """
    Load a RunConfig from YAML (or defaults when path is None)

    Args:
        path: YAML file
        overrides: iterable of 'a.b=value' strings

    Returns:
        RunConfig

    Raises:
        ConfigError: unreadable file, non-mapping root, bad override or schema failure
    """
    payload = {}
    if path is not None:
        source = Path(path)
        try:
            with source.open("r", encoding="utf-8") as fh:
                payload = YAML(typ="safe").load(fh) or {}
        except (OSError, YAMLError) as exc:
            raise ConfigError(f"Cannot read configuration {source}: {exc}") from exc
        if not isinstance(payload, dict):
            raise ConfigError(f"Configuration root of {source} must be a mapping")
        logger.info(f"Loaded configuration from {source}")
    config = validate_config(apply_overrides(payload, overrides))
    if not math.isclose(config.params.kappa, DEFAULT_KAPPA):
        logger.info(f"Non-default kappa={config.params.kappa}; the limit system assumes kappa = sqrt(3)")
    return config
