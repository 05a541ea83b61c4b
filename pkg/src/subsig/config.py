"""Line-based ``key = value`` configuration files.

Angle lists are comma-separated radians; matrices are row-major with rows
separated by ``;``.  In the nilpotent ring a matrix entry may be a sum
like ``1.5*eps0 - 0.25*eps1``.  ``#`` starts a comment.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .clifford import UsageError
from .scalars import NilPoly

INT_KEYS = {"n", "a", "k", "trials", "seed"}
FLOAT_KEYS = {"tol", "theta", "t"}
LIST_KEYS = {"angles", "spacings"}
TEXT_KEYS = {"suite", "mode", "output", "csv"}
MATRIX_KEYS = {"curvature"}
KNOWN_KEYS = INT_KEYS | FLOAT_KEYS | LIST_KEYS | TEXT_KEYS | MATRIX_KEYS


class ConfigError(UsageError):
    def __init__(self, path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


@dataclass
class RunConfig:
    values: dict
    path: str = "<config>"

    def get(self, key, default=None):
        return self.values.get(key, default)


_TERM = re.compile(r"([+-]?)((?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)?(?:\*?eps(\d+))?")


def parse_nil_entry(text: str, ngen: int) -> NilPoly:
    """Parse ``c0 + c1*eps0 - eps2`` style entries."""
    s = text.replace(" ", "")
    if not s:
        raise ValueError("empty entry")
    terms: dict[int, complex] = {}
    pos = 0
    while pos < len(s):
        m = _TERM.match(s, pos)
        if m.end() == pos or (m.group(2) is None and m.group(3) is None):
            raise ValueError(f"cannot parse {s[pos:]!r}")
        if pos and not m.group(1):
            raise ValueError(f"missing sign before {s[pos:]!r}")
        coeff = float(m.group(2)) if m.group(2) else 1.0
        if m.group(1) == "-":
            coeff = -coeff
        mask = 0
        if m.group(3) is not None:
            g = int(m.group(3))
            if g >= ngen:
                raise ValueError(f"eps{g} exceeds the {ngen} available generators")
            mask = 1 << g
        terms[mask] = terms.get(mask, 0) + coeff
        pos = m.end()
    return NilPoly(ngen, terms)


def parse_matrix(text: str, ngen: int | None = None) -> np.ndarray:
    rows = [r for r in text.split(";")]
    cells = [[c.strip() for c in r.split(",")] for r in rows]
    width = len(cells[0])
    if any(len(r) != width for r in cells) or len(cells) != width:
        raise ValueError("matrix must be square with equal-length rows")
    if ngen is None:
        return np.array([[float(c) for c in r] for r in cells])
    out = np.empty((width, width), dtype=object)
    for i, r in enumerate(cells):
        for j, c in enumerate(r):
            out[i, j] = parse_nil_entry(c, ngen)
    return out


def parse_config_text(text: str, path: str = "<config>") -> RunConfig:
    values: dict = {}
    raw: dict[str, tuple[int, str]] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        if "=" not in body:
            raise ConfigError(path, lineno, f"expected 'key = value', got {body!r}")
        key, value = (part.strip() for part in body.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ConfigError(path, lineno, f"unknown key {key!r}")
        if key in raw:
            raise ConfigError(path, lineno, f"duplicate key {key!r}")
        if not value:
            raise ConfigError(path, lineno, f"empty value for {key!r}")
        raw[key] = (lineno, value)
        try:
            if key in INT_KEYS:
                values[key] = int(value)
            elif key in FLOAT_KEYS:
                values[key] = float(value)
            elif key in LIST_KEYS:
                values[key] = value if value == "random" else [float(v) for v in value.split(",")]
            elif key in TEXT_KEYS:
                values[key] = value
        except ValueError as exc:
            raise ConfigError(path, lineno, f"bad value for {key!r}: {exc}") from None
    if "curvature" in raw:
        lineno, value = raw["curvature"]
        ngen = values.get("a", 0) // 2 if values.get("mode") == "nilpotent" else None
        try:
            values["curvature"] = parse_matrix(value, ngen)
        except ValueError as exc:
            raise ConfigError(path, lineno, f"bad curvature matrix: {exc}") from None
    if values.get("mode") not in (None, "exact", "float", "nilpotent"):
        raise ConfigError(path, raw["mode"][0], f"unknown mode {values['mode']!r}")
    return RunConfig(values, path)


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config_text(text, str(path))
