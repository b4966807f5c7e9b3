import dataclasses
import io
import json
import os
from dataclasses import dataclass, field
from typing import Optional

import constant_config
from fields.phantoms import ATTENUATION_KINDS, PHANTOM_KINDS
from reconstruct.extension import CONTINUATION_SAMPLES
from reconstruct.psi import PSI_KINDS
from tensoray_errors import ConfigError, FileFormatError


@dataclass
class RunConfig:
    """
    Parameters of a command line run. Every output of a run echoes the dictionary form of its configuration.
    """
    radius: float = constant_config.DEFAULT_RADIUS
    M: int = constant_config.DEFAULT_BOUNDARY_NODES
    K: int = constant_config.DEFAULT_ANGLE_NODES
    N: int = constant_config.DEFAULT_MODE_TRUNCATION
    grid_step: float = constant_config.DEFAULT_GRID_STEP
    margin: float = constant_config.DEFAULT_MARGIN_FRACTION
    h_ray: float = constant_config.DEFAULT_RAY_STEP_FRACTION
    radon_step: float = constant_config.DEFAULT_RADON_STEP_FRACTION
    padding: int = constant_config.DEFAULT_HILBERT_PADDING
    cutoff_width: float = constant_config.DEFAULT_CUTOFF_FRACTION
    tangency_eps: float = constant_config.DEFAULT_TANGENCY_EPS
    tol_range: float = constant_config.DEFAULT_TOL_RANGE
    tol_compat: float = constant_config.DEFAULT_TOL_COMPAT
    tol_conv: float = constant_config.DEFAULT_TOL_CONV
    tol_neg: float = constant_config.DEFAULT_TOL_NEG
    tol_mass: float = constant_config.DEFAULT_TOL_DISCARDED_MASS
    min_a: float = constant_config.DEFAULT_MIN_ATTENUATION
    tol_roundtrip_free: float = constant_config.DEFAULT_TOL_ROUNDTRIP_FREE
    tol_roundtrip_attenuated: float = constant_config.DEFAULT_TOL_ROUNDTRIP_ATTENUATED
    tol_transport: float = constant_config.DEFAULT_TOL_TRANSPORT
    tol_product: float = constant_config.DEFAULT_TOL_PRODUCT
    tol_recursion: float = constant_config.DEFAULT_TOL_RECURSION
    phantom: dict = field(default_factory=lambda: {"kind": PHANTOM_KINDS.BUMP_TENSOR})
    attenuation: Optional[dict] = None
    psi_rule: Optional[str] = None
    psi_perturbation: float = 0.0
    noise_amplitude: float = 0.0
    seed: int = 0
    fan_format: str = "binary"
    output_dir: str = constant_config.BASE_DATA_FOLDER_PATH
    threads: int = constant_config.TENSORAY_THREADS
    show_progress: bool = False

    def validate(self):
        """Check the invariants of a configuration; raises ConfigError"""
        if not self.radius > 0:
            raise ConfigError(f"Attention, the radius must be positive, got {self.radius}.")
        for name in ("M", "K"):
            value = getattr(self, name)
            if int(value) != value or value < 2 or value % 2 != 0:
                raise ConfigError(f"Attention, {name} must be an even positive integer, got {value}.")
        if self.N < 4:
            raise ConfigError(f"Attention, the mode truncation N must be at least 4, got {self.N}.")
        if self.K < 2 * self.N + 2:
            raise ConfigError(f"Attention, K={self.K} direction nodes cannot resolve N={self.N} modes (K >= 2N + 2).")
        for name in ("grid_step", "h_ray", "radon_step", "cutoff_width", "tol_range", "tol_compat", "tol_conv",
                     "tol_neg", "tol_mass", "min_a", "tol_roundtrip_free", "tol_roundtrip_attenuated", "tol_transport",
                     "tol_product", "tol_recursion"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"Attention, {name} must be positive, got {getattr(self, name)}.")
        if not 0 < self.margin < 1.0 / CONTINUATION_SAMPLES:
            raise ConfigError(f"Attention, the margin is a fraction of the radius in (0, 1/{CONTINUATION_SAMPLES}), got "
                              f"{self.margin}.")
        if self.noise_amplitude < 0:
            raise ConfigError(f"Attention, the noise amplitude must be non-negative, got {self.noise_amplitude}.")
        if self.phantom is None or self.phantom.get("kind") not in vars(PHANTOM_KINDS).values():
            raise ConfigError(f"Attention, unknown phantom descriptor: {self.phantom}")
        if self.attenuation is not None and self.attenuation.get("kind") not in vars(ATTENUATION_KINDS).values():
            raise ConfigError(f"Attention, unknown attenuation descriptor: {self.attenuation}")
        if self.psi_rule not in (None, PSI_KINDS.POISSON_DEFAULT, PSI_KINDS.RADIAL_BLEND):
            raise ConfigError(f"Attention, unknown psi rule: {self.psi_rule}")
        if self.fan_format not in ("binary", "csv"):
            raise ConfigError(f"Attention, the fan format must be 'binary' or 'csv', got {self.fan_format}.")
        return self

    # Lengths below are configured as fractions of the radius
    @property
    def grid_step_abs(self):
        return self.grid_step * self.radius

    @property
    def margin_abs(self):
        return self.margin * self.radius

    @property
    def h_ray_abs(self):
        return self.h_ray * self.radius

    @property
    def radon_step_abs(self):
        return self.radon_step * self.radius

    @property
    def cutoff_width_abs(self):
        return self.cutoff_width * self.radius

    def to_dict(self):
        return dataclasses.asdict(self)

    def echo(self):
        """Configuration echoed into the metadata of the outputs (host dependent entries left out)"""
        out = self.to_dict()
        for key in ("output_dir", "threads", "show_progress"):
            out.pop(key)
        return out


def run_config_from_dict(config_dict):
    known = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = set(config_dict) - known
    if unknown:
        raise ConfigError(f"Attention, unknown configuration keys: {sorted(unknown)}")
    try:
        return RunConfig(**config_dict).validate()
    except TypeError as e:
        raise ConfigError(f"Attention, invalid configuration: {e}")


def load_run_config(file_path=None, overrides=None):
    """
    Load a JSON configuration file (optional) and apply the overrides
    :param file_path: path of the JSON file, None for the defaults
    :param overrides: dictionary of values replacing the ones of the file (None values are ignored)
    :return: validated RunConfig
    """
    config_dict = dict()
    if file_path is not None:
        if not os.path.isfile(file_path):
            raise FileNotFoundError(f"Attention, configuration file {file_path} not found.")
        with io.open(file_path, 'r', encoding='utf8') as f:
            try:
                config_dict = json.load(f)
            except json.JSONDecodeError as e:
                raise FileFormatError(f"Attention, malformed configuration file {file_path}: {e.msg}", e.lineno)
        if not isinstance(config_dict, dict):
            raise ConfigError(f"Attention, configuration file {file_path} must hold a JSON object.")
    for key, value in (overrides or dict()).items():
        if value is not None:
            config_dict[key] = value
    return run_config_from_dict(config_dict)
