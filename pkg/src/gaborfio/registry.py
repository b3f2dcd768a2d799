"""Name-to-object parsing for operators and windows.

Operator specs are colon-separated: identity, multiplier:cos,
multiplier:poly:<c2>, metaplectic:chirp:<c>, metaplectic:dilation:<a>,
harmonic:<t>. Parameters may be omitted where a documented default
exists. Window specs are gaussian:<width> or hermite:<order>:<width>.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ConfigError
from .fio import FioOperator, identity_operator, multiplier_operator
from .gabor import Window, gaussian, hermite
from .metaplectic import chirp_operator, dilation_operator, harmonic_oscillator

__all__ = ["parse_operator", "parse_window", "shipped_operator_names"]

DEFAULT_POLY_COEFF = 0.5
DEFAULT_CHIRP_RATE = 1.0
DEFAULT_DILATION = 2.0
DEFAULT_HARMONIC_TIME = math.pi / 4


def _param(parts, index, default, spec):
    if len(parts) <= index:
        if default is None:
            raise ConfigError(f"operator {spec!r} needs a parameter")
        return default
    try:
        return float(parts[index])
    except ValueError as exc:
        raise ConfigError(
            f"bad numeric parameter in operator {spec!r}") from exc


def parse_operator(spec: str) -> FioOperator:
    parts = spec.strip().split(":")
    kind = parts[0]
    if kind == "identity" and len(parts) == 1:
        return identity_operator()
    if kind == "multiplier" and len(parts) >= 2:
        if parts[1] == "cos" and len(parts) == 2:
            return multiplier_operator(np.cos, lambda x: -np.sin(x),
                                       lambda x: -np.cos(x), "cos")
        if parts[1] == "poly" and len(parts) <= 3:
            c2 = _param(parts, 2, DEFAULT_POLY_COEFF, spec)
            return multiplier_operator(
                lambda x, c=c2: c * np.asarray(x) ** 2,
                lambda x, c=c2: 2.0 * c * np.asarray(x, dtype=float),
                lambda x, c=c2: 2.0 * c, f"poly:{c2}",
                smoothness_order=0.5)
    if kind == "metaplectic" and len(parts) >= 2 and len(parts) <= 3:
        if parts[1] == "chirp":
            return chirp_operator(
                _param(parts, 2, DEFAULT_CHIRP_RATE, spec)).as_fio
        if parts[1] == "dilation":
            return dilation_operator(
                _param(parts, 2, DEFAULT_DILATION, spec)).as_fio
    if kind == "harmonic" and len(parts) <= 2:
        return harmonic_oscillator(_param(parts, 1, DEFAULT_HARMONIC_TIME,
                                          spec)).as_fio
    raise ConfigError(f"unknown operator spec {spec!r}")


def parse_window(spec: str) -> Window:
    parts = spec.strip().split(":")
    try:
        if parts[0] == "gaussian" and len(parts) == 2:
            return gaussian(float(parts[1]))
        if parts[0] == "hermite" and len(parts) == 3:
            return hermite(int(parts[1]), float(parts[2]))
    except ValueError as exc:
        raise ConfigError(f"bad window spec {spec!r}") from exc
    raise ConfigError(f"unknown window spec {spec!r}")


def shipped_operator_names() -> tuple:
    """Canonical example of each shipped operator family."""
    return (
        "identity",
        "multiplier:cos",
        f"multiplier:poly:{DEFAULT_POLY_COEFF}",
        f"metaplectic:chirp:{DEFAULT_CHIRP_RATE}",
        f"metaplectic:dilation:{DEFAULT_DILATION}",
        f"harmonic:{DEFAULT_HARMONIC_TIME}",
    )
