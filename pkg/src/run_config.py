"""
Run configuration
Flat `key = value` files (read with python-dotenv) overridden by `--key value` pairs
"""
import os
import math
import logging
from dataclasses import dataclass, field, fields, asdict
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from dotenv import dotenv_values

from errors import ConfigError, MediumError, QuasiHelmError
from media import CutVector, MediumSpec, coefficient_preset, interior_preset, source_preset

logger = logging.getLogger(__name__)

COMMANDS = ('halfline', 'wholeline', 'convergence', 'spectrum', 'fibrage', 'absorption')
METHOD_NAMES = ('2d', 'quasi1d')

_TRUE = {'1', 'true', 'yes', 'on'}
_FALSE = {'0', 'false', 'no', 'off'}


def default_workers() -> int:
    return int(os.getenv('QUASIHELM_WORKERS', '4'))


def _number(key: str, text: str) -> float:
    """Float, also accepting fractions such as 1/64"""
    try:
        return float(Fraction(text.strip())) if '/' in text else float(text)
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key}: expected a number, got {text!r}")


def _integer(key: str, text: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {text!r}")


def _flag(key: str, text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in _TRUE:
        return True
    if lowered in _FALSE:
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


def _numbers(key: str, text: str) -> List[float]:
    items = [item for item in text.replace(';', ',').split(',') if item.strip()]
    if not items:
        raise ConfigError(f"{key}: empty list")
    return [_number(key, item) for item in items]


def _names(key: str, text: str) -> List[str]:
    return [item.strip() for item in text.split(',') if item.strip()]


@dataclass
class RunConfig:
    """Everything one CLI run needs; defaults reproduce the reference medium at omega = 8 + 0.25i"""
    command: str = 'halfline'
    mu: str = 'trig'
    rho: str = 'trig'
    theta: Optional[Tuple[float, float]] = None
    theta_deg: float = 60.0
    assert_irrational: bool = True
    allow_degenerate: bool = False
    omega_re: float = 8.0
    omega_im: float = 0.25
    method: str = 'quasi1d'
    methods: List[str] = field(default_factory=lambda: ['quasi1d', '2d'])
    h: float = 1.0 / 64
    h_theta: Optional[float] = None
    order: int = 1
    l_cells: int = 8
    a: float = 1.0
    interior: str = 'stepped'
    source: str = 'bump'
    boundary_data: str = 'one'
    h_list: List[float] = field(default_factory=lambda: [1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256])
    omega_im_list: List[float] = field(default_factory=lambda: [0.25, 0.1, 0.05, 0.01, 0.001])
    n_samples: int = 256
    radius_ref: Optional[float] = None
    band: float = 0.05
    window: Optional[Tuple[float, float]] = None
    n_points: int = 2001
    fibrage_m: float = 80.0
    fibrage_step: float = 0.01
    h_ref: float = 5e-4
    target: float = 1e-10
    fresh_cells: bool = False
    export_field: bool = False
    output_dir: str = 'results'

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.command not in COMMANDS:
            raise ConfigError(f"Unknown command {self.command!r}, expected one of {', '.join(COMMANDS)}")
        if not self.omega_im > 0:
            raise ConfigError(f"omega_im must be positive, got {self.omega_im}")
        if not self.h > 0 or (self.h_theta is not None and not self.h_theta > 0):
            raise ConfigError("Mesh steps h and h_theta must be positive")
        for name in [self.method] + list(self.methods):
            if name not in METHOD_NAMES:
                raise ConfigError(f"Unknown method {name!r}, expected 2d or quasi1d")
        if self.order < 1 or self.l_cells < 1 or self.n_samples < 1 or self.n_points < 2:
            raise ConfigError("order, l_cells, n_samples must be >= 1 and n_points >= 2")
        if not self.a > 0:
            raise ConfigError(f"a must be positive, got {self.a}")
        if any(h <= 0 for h in self.h_list) or any(w <= 0 for w in self.omega_im_list):
            raise ConfigError("h_list and omega_im_list entries must be positive")
        if not 0 < self.target < 1 or not self.h_ref > 0 or not self.band > 0:
            raise ConfigError("target must lie in (0, 1), h_ref and band must be positive")
        if self.window is not None and not self.window[0] < self.window[1]:
            raise ConfigError(f"window must be increasing, got {self.window}")
        if self.command == 'halfline' and self.window is not None and self.window[0] < 0:
            raise ConfigError(f"halfline window must start at x >= 0, got {self.window}")
        if self.boundary_data not in ('one', 'cos'):
            raise ConfigError(f"boundary_data must be 'one' or 'cos', got {self.boundary_data!r}")

    @property
    def omega(self) -> complex:
        return complex(self.omega_re, self.omega_im)

    def cut_vector(self) -> CutVector:
        try:
            if self.theta is not None:
                return CutVector(self.theta[0], self.theta[1], self.assert_irrational, self.allow_degenerate)
            return CutVector.from_angle(math.radians(self.theta_deg), self.assert_irrational,
                                        self.allow_degenerate)
        except QuasiHelmError as e:
            raise ConfigError(f"theta: {e}")

    def coefficients(self):
        try:
            return coefficient_preset(self.mu, 'mu'), coefficient_preset(self.rho, 'rho')
        except MediumError as e:
            raise ConfigError(f"coefficients: {e}")

    def medium(self) -> MediumSpec:
        mu_p, rho_p = self.coefficients()
        theta = self.cut_vector()
        try:
            mu_i, rho_i = interior_preset(self.interior, mu_p, rho_p, theta, self.a)
            return MediumSpec(mu_p=mu_p, rho_p=rho_p, theta=theta, a=self.a, mu_i=mu_i, rho_i=rho_i,
                              source=source_preset(self.source, self.a))
        except MediumError as e:
            raise ConfigError(f"medium: {e}")

    def echo(self) -> str:
        """One-line summary used in failure reports"""
        return ', '.join(f"{key}={value}" for key, value in asdict(self).items())


_PARSERS = {
    'command': lambda k, v: v.strip(),
    'mu': lambda k, v: v.strip(),
    'rho': lambda k, v: v.strip(),
    'theta': lambda k, v: _pair(k, v),
    'theta_deg': _number,
    'assert_irrational': _flag,
    'allow_degenerate': _flag,
    'omega_re': _number,
    'omega_im': _number,
    'method': lambda k, v: v.strip(),
    'methods': _names,
    'h': _number,
    'h_theta': _number,
    'order': _integer,
    'l_cells': _integer,
    'a': _number,
    'interior': lambda k, v: v.strip(),
    'source': lambda k, v: v.strip(),
    'boundary_data': lambda k, v: v.strip(),
    'h_list': _numbers,
    'omega_im_list': _numbers,
    'n_samples': _integer,
    'radius_ref': _number,
    'band': _number,
    'window': lambda k, v: _pair(k, v),
    'n_points': _integer,
    'fibrage_m': _number,
    'fibrage_step': _number,
    'h_ref': _number,
    'target': _number,
    'fresh_cells': _flag,
    'export_field': _flag,
    'output_dir': lambda k, v: v.strip(),
}


def _pair(key: str, text: str) -> Tuple[float, float]:
    values = _numbers(key, text)
    if len(values) != 2:
        raise ConfigError(f"{key}: expected two numbers, got {text!r}")
    return values[0], values[1]


def parse_values(raw: Dict[str, Optional[str]]) -> Dict[str, object]:
    """Typed values for raw string entries; unknown keys are rejected"""
    known = {f.name for f in fields(RunConfig)}
    parsed = {}
    for key, text in raw.items():
        key = key.strip().replace('-', '_')
        if key not in known:
            raise ConfigError(f"Unknown configuration key: {key!r}")
        if text is None or not text.strip():
            raise ConfigError(f"{key}: missing value")
        parsed[key] = _PARSERS[key](key, text)
    return parsed


def parse_overrides(args: Sequence[str]) -> Dict[str, str]:
    """['--h', '0.01', '--method=2d'] -> {'h': '0.01', 'method': '2d'}"""
    overrides = {}
    i = 0
    while i < len(args):
        token = args[i]
        if not token.startswith('--') or len(token) <= 2:
            raise ConfigError(f"Unexpected argument: {token!r}")
        if '=' in token:
            key, value = token[2:].split('=', 1)
            i += 1
        else:
            if i + 1 >= len(args):
                raise ConfigError(f"Missing value for {token}")
            key, value = token[2:], args[i + 1]
            i += 2
        overrides[key.replace('-', '_')] = value
    return overrides


def load_config(path: Optional[str] = None, overrides: Optional[Dict[str, str]] = None,
                command: Optional[str] = None) -> RunConfig:
    """
    Build a RunConfig from an optional file and command-line overrides.

    Args:
        path: flat `key = value` file with `#` comments
        overrides: raw string values that replace file entries
        command: experiment kind, takes precedence over a `command` key
    """
    raw: Dict[str, Optional[str]] = {}
    if path is not None:
        if not os.path.isfile(path):
            raise ConfigError(f"Config file not found: {path}")
        raw.update(dotenv_values(path))
    raw.update(overrides or {})
    if command is not None:
        raw['command'] = command

    values = parse_values(raw)
    if 'theta' in values and 'theta_deg' in values:
        raise ConfigError("Give either theta or theta_deg, not both")
    config = RunConfig(**values)
    logger.debug(f"Resolved configuration: {config.echo()}")
    return config
