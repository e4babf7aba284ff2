"""
Configuration for overlap_ec.

This module validates sweep files and command-line parameters with voluptuous
schemas and applies the logger configuration they carry.
"""

from __future__ import annotations

import logging
import re
from pathlib import Path
from typing import Any

import voluptuous as vol
import yaml

from .algo import ComponentLimit
from .const import (
    CONF_DRAIN,
    CONF_EPSILON_EXPONENT,
    CONF_F_OF_N,
    CONF_K,
    CONF_LOGGER,
    CONF_N,
    CONF_OUTPUT,
    CONF_Q,
    CONF_R,
    CONF_RUNS_PER_POINT,
    CONF_SCHEDULE,
    CONF_SCHEDULE_EPSILON,
    CONF_SEED,
    CONF_THREADS,
    CONF_TOLERANCE,
    DEFAULT_DRAIN,
    DEFAULT_EPSILON_EXPONENT,
    DEFAULT_F_OF_N,
    DEFAULT_SCHEDULE,
    DEFAULT_SCHEDULE_EPSILON,
    DEFAULT_SEED,
    DEFAULT_THREADS,
    DRAIN_MODES,
    R_UP_TOLERANCE,
    SCHEDULE_KINDS,
)
from .core import MAX_SEED, MIN_K, OverlapEcInvalidParametersError
from .data import SweepConfig

_LOGGER = logging.getLogger(__name__)

LOG_LEVELS = ("critical", "error", "warning", "info", "debug")
F_OF_N_PATTERN = re.compile(
    r"^(?:(?P<scale>[0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\*)?(?P<kind>ln2|ln|sqrt)$"
)
# Sweep files carry no per-branch constants.
SWEEP_SCHEDULE_KINDS = tuple(kind for kind in SCHEDULE_KINDS if kind != "constant")


def parse_f_of_n(text: str) -> ComponentLimit:
    """Parse 'ln2', 'ln', 'sqrt' or a scaled form such as '2*ln2'."""
    match = F_OF_N_PATTERN.match(str(text).strip().replace(" ", ""))
    if match is None:
        msg = f"Invalid f(n) '{text}', expected ln2, ln, sqrt or <c>*<kind>"
        raise OverlapEcInvalidParametersError(msg)
    scale = float(match.group("scale")) if match.group("scale") else 1.0
    if scale <= 0:
        msg = f"f(n) scale must be positive, got {scale}"
        raise OverlapEcInvalidParametersError(msg)
    return ComponentLimit(kind=match.group("kind"), scale=scale)


def _f_of_n(value: Any) -> str:
    try:
        parse_f_of_n(value)
    except OverlapEcInvalidParametersError as exception:
        raise vol.Invalid(str(exception)) from exception
    return str(value)


def _as_list(value: Any) -> list[Any]:
    return value if isinstance(value, list) else [value]


POSITIVE_FLOAT = vol.All(vol.Coerce(float), vol.Range(min=0, min_included=False))
UNIT_INTERVAL = vol.All(
    vol.Coerce(float), vol.Range(min=0, max=1, min_included=False, max_included=False)
)
EPSILON_EXPONENT = vol.All(
    vol.Coerce(float), vol.Range(min=0.5, max=1, min_included=False, max_included=False)
)
SEED = vol.All(vol.Coerce(int), vol.Range(min=0, max=MAX_SEED))

LOGGER_SCHEMA = vol.Schema(
    {
        vol.Optional("default", default="info"): vol.All(vol.Lower, vol.In(LOG_LEVELS)),
        vol.Optional("logs", default={}): {str: vol.All(vol.Lower, vol.In(LOG_LEVELS))},
    }
)

SWEEP_SCHEMA = vol.Schema(
    {
        vol.Optional(CONF_SEED, default=DEFAULT_SEED): SEED,
        vol.Optional(CONF_THREADS, default=DEFAULT_THREADS): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional(CONF_K, default=[3]): vol.All(
            _as_list, [vol.All(vol.Coerce(int), vol.Range(min=MIN_K))]
        ),
        vol.Optional(CONF_Q, default=[]): vol.All(_as_list, [UNIT_INTERVAL]),
        vol.Optional(CONF_R, default=[]): vol.All(_as_list, [POSITIVE_FLOAT]),
        vol.Optional(CONF_N, default=[]): vol.All(
            _as_list, [vol.All(vol.Coerce(int), vol.Range(min=MIN_K))]
        ),
        vol.Optional(CONF_RUNS_PER_POINT, default=1): vol.All(
            vol.Coerce(int), vol.Range(min=1)
        ),
        vol.Optional(CONF_SCHEDULE, default=DEFAULT_SCHEDULE): vol.In(SWEEP_SCHEDULE_KINDS),
        vol.Optional(CONF_SCHEDULE_EPSILON, default=DEFAULT_SCHEDULE_EPSILON): POSITIVE_FLOAT,
        vol.Optional(CONF_EPSILON_EXPONENT, default=DEFAULT_EPSILON_EXPONENT): EPSILON_EXPONENT,
        vol.Optional(CONF_F_OF_N, default=DEFAULT_F_OF_N): _f_of_n,
        vol.Optional(CONF_DRAIN, default=DEFAULT_DRAIN): vol.In(DRAIN_MODES),
        vol.Optional(CONF_TOLERANCE, default=R_UP_TOLERANCE): POSITIVE_FLOAT,
        vol.Required(CONF_OUTPUT): str,
        vol.Optional(CONF_LOGGER, default={}): LOGGER_SCHEMA,
    }
)

GEN_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_N): vol.All(int, vol.Range(min=1)),
        vol.Required("m"): vol.All(int, vol.Range(min=0)),
        vol.Required(CONF_K): vol.All(int, vol.Range(min=MIN_K)),
    }
)

SIMULATE_SCHEMA = vol.Schema(
    {
        vol.Required(CONF_N): vol.All(int, vol.Range(min=MIN_K)),
        vol.Required(CONF_R): POSITIVE_FLOAT,
        vol.Required(CONF_K): vol.All(int, vol.Range(min=MIN_K)),
        vol.Required("runs"): vol.All(int, vol.Range(min=0)),
        vol.Required(CONF_SCHEDULE): vol.In(SCHEDULE_KINDS),
        vol.Required(CONF_SCHEDULE_EPSILON): POSITIVE_FLOAT,
    }
)


def validate(schema: vol.Schema, data: dict[str, Any]) -> dict[str, Any]:
    """Validate data against a schema, raising the project error on failure."""
    try:
        return schema(data)
    except vol.Invalid as exception:
        msg = f"Invalid configuration: {exception}"
        raise OverlapEcInvalidParametersError(msg) from None


def sweep_config_from_dict(data: dict[str, Any]) -> SweepConfig:
    """Build a SweepConfig from an already parsed mapping."""
    conf = validate(SWEEP_SCHEMA, data or {})
    return SweepConfig(
        seed=conf[CONF_SEED],
        threads=conf[CONF_THREADS],
        k=tuple(conf[CONF_K]),
        q=tuple(conf[CONF_Q]),
        r=tuple(conf[CONF_R]),
        n=tuple(conf[CONF_N]),
        runs_per_point=conf[CONF_RUNS_PER_POINT],
        schedule=conf[CONF_SCHEDULE],
        schedule_epsilon=conf[CONF_SCHEDULE_EPSILON],
        epsilon_exponent=conf[CONF_EPSILON_EXPONENT],
        f_of_n=conf[CONF_F_OF_N],
        drain=conf[CONF_DRAIN],
        tolerance=conf[CONF_TOLERANCE],
        output=conf[CONF_OUTPUT],
        logger=conf[CONF_LOGGER],
    )


def load_sweep_config(path: Path | str) -> SweepConfig:
    """Read and validate a YAML sweep file."""
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exception:
        msg = f"Sweep file {path} is not valid YAML"
        raise OverlapEcInvalidParametersError(msg) from exception
    if data is not None and not isinstance(data, dict):
        msg = f"Sweep file {path} must contain a mapping"
        raise OverlapEcInvalidParametersError(msg)
    config = sweep_config_from_dict(data)
    _LOGGER.debug("Loaded sweep config from %s: %s", path, config)
    return config


def apply_logger_config(logger_conf: dict[str, Any]) -> None:
    """Apply a 'logger:' mapping of default and per-logger levels."""
    conf = LOGGER_SCHEMA(logger_conf or {})
    logging.getLogger().setLevel(conf["default"].upper())
    for name, level in conf["logs"].items():
        logging.getLogger(name).setLevel(level.upper())


def parse_grid(text: str) -> tuple[float, ...]:
    """Parse 'start:stop:step' (stop included) or a comma-separated list."""
    try:
        if ":" in text:
            start, stop, step = (float(part) for part in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError(text)
            count = int(round((stop - start) / step)) + 1
            return tuple(round(start + i * step, 12) for i in range(count))
        return tuple(float(part) for part in text.split(",") if part.strip())
    except ValueError as exception:
        msg = f"Invalid grid '{text}', expected start:stop:step or a comma list"
        raise OverlapEcInvalidParametersError(msg) from exception


def parse_lambdas(text: str) -> tuple[float, float, float]:
    """Parse three comma-separated branch probabilities."""
    values = parse_grid(text) if "," in text else ()
    if len(values) != 3:  # noqa: PLR2004
        msg = f"Expected three comma-separated probabilities, got '{text}'"
        raise OverlapEcInvalidParametersError(msg)
    return values
