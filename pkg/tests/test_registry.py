"""Operator and window name parsing."""

import numpy as np
import pytest

import gaborfio as gf
from gaborfio.errors import ConfigError


def test_shipped_names_round_trip():
    names = gf.shipped_operator_names()
    assert len(names) == 6
    for name in names:
        op = gf.parse_operator(name)
        assert op.name == name


def test_operator_defaults():
    assert gf.parse_operator("harmonic").name == f"harmonic:{np.pi / 4}"
    assert gf.parse_operator("metaplectic:chirp").name == "metaplectic:chirp:1.0"
    assert gf.parse_operator("metaplectic:dilation").name == "metaplectic:dilation:2.0"
    assert gf.parse_operator("multiplier:poly").name == "multiplier:poly:0.5"


def test_operator_kinds():
    assert gf.parse_operator("identity").kind == "general"
    assert gf.parse_operator("multiplier:cos").kind == "multiplier"
    assert gf.parse_operator("metaplectic:chirp:1.0").kind == "metaplectic"
    assert gf.parse_operator("harmonic").kind == "metaplectic"


def test_operator_parse_errors():
    for bad in ("wavelet", "multiplier", "multiplier:tan",
                "metaplectic:chirp:abc", "harmonic:1:2", ""):
        with pytest.raises(ConfigError):
            gf.parse_operator(bad)


def test_window_parsing():
    w = gf.parse_window("gaussian:2")
    assert w.kind == "gaussian" and w.width == 2.0
    h = gf.parse_window("hermite:3:1.5")
    assert h.kind == "hermite" and h.order == 3 and h.width == 1.5
    for bad in ("gaussian", "gaussian:0", "hermite:2", "boxcar:1", ""):
        with pytest.raises(ConfigError):
            gf.parse_window(bad)
