"""Coefficient JSON, equator-data JSON and ``theta,value`` CSV files."""
from __future__ import annotations

import csv
import json
import math
import warnings

import numpy as np
from scipy.interpolate import FloaterHormannInterpolator

from .spectral import AxisymCoeffs, SphCoeffs, gauss_nodes

__all__ = [
    "InputFileError",
    "coeffs_to_json",
    "coeffs_from_json",
    "write_coeffs",
    "read_coeffs",
    "read_equator",
    "write_equator",
    "read_theta_csv",
    "write_theta_csv",
    "to_gauss_samples",
    "dump_json",
]


class InputFileError(ValueError):
    """Missing, unreadable or malformed input file."""


def _num(x) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InputFileError(f"expected a number, got {x!r}")
    x = float(x)
    if not math.isfinite(x):
        raise InputFileError("non-finite number in input")
    return x


def _complex(x) -> complex:
    if isinstance(x, (list, tuple)):
        if len(x) != 2:
            raise InputFileError(f"complex entries are [re, im] pairs, got {x!r}")
        return complex(_num(x[0]), _num(x[1]))
    return complex(_num(x), 0.0)


def coeffs_to_json(u) -> dict:
    """JSON-ready dict; general tables list ``l`` ascending, ``m = -l..l`` within each ``l``."""
    if isinstance(u, AxisymCoeffs):
        return {"kind": "axisym", "L": u.L, "coeffs": u.c.tolist()}
    rows = []
    for l in range(u.L + 1):
        for m in range(-l, l + 1):
            z = u.get(l, m)
            rows.append([z.real, z.imag])
    return {"kind": "general", "L": u.L, "coeffs": rows}


def coeffs_from_json(obj):
    if not isinstance(obj, dict):
        raise InputFileError("coefficient file must hold a JSON object")
    kind, L, raw = obj.get("kind"), obj.get("L"), obj.get("coeffs")
    if kind not in ("axisym", "general"):
        raise InputFileError(f"unknown coefficient kind {kind!r}")
    if isinstance(L, bool) or not isinstance(L, int) or L < 0:
        raise InputFileError("L must be a non-negative integer")
    if not isinstance(raw, list):
        raise InputFileError("coeffs must be a list")
    if kind == "axisym":
        if len(raw) != L + 1:
            raise InputFileError(f"expected {L + 1} coefficients, got {len(raw)}")
        return AxisymCoeffs([_num(x) for x in raw])
    if len(raw) != (L + 1) ** 2:
        raise InputFileError(f"expected {(L + 1) ** 2} coefficients, got {len(raw)}")
    table = np.zeros((L + 1, 2 * L + 1), dtype=complex)
    it = iter(raw)
    for l in range(L + 1):
        for m in range(-l, l + 1):
            table[l, m + L] = _complex(next(it))
    return SphCoeffs(table)


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputFileError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputFileError(f"{path} is not valid JSON: {exc}") from exc


def dump_json(path, obj) -> None:
    """Write JSON with sorted keys; floats use Python's shortest round-trip repr."""
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_coeffs(path):
    return coeffs_from_json(_load_json(path))


def write_coeffs(path, u) -> None:
    dump_json(path, coeffs_to_json(u))


def read_equator(path) -> np.ndarray:
    """Equator Fourier coefficients ``h[m + M]`` from ``{"M": M, "coeffs": [...]}``.

    ``{"h0": value}`` is accepted as shorthand for a constant.
    """
    obj = _load_json(path)
    if not isinstance(obj, dict):
        raise InputFileError("equator file must hold a JSON object")
    if "h0" in obj:
        return np.array([complex(_num(obj["h0"]))])
    M, raw = obj.get("M"), obj.get("coeffs")
    if isinstance(M, bool) or not isinstance(M, int) or M < 0 or not isinstance(raw, list):
        raise InputFileError("equator file needs integer M >= 0 and a coeffs list")
    if len(raw) != 2 * M + 1:
        raise InputFileError(f"expected {2 * M + 1} equator coefficients, got {len(raw)}")
    return np.array([_complex(x) for x in raw])


def write_equator(path, h) -> None:
    h = np.asarray(h, dtype=complex)
    dump_json(path, {"M": h.size // 2, "coeffs": [[z.real, z.imag] for z in h]})


def read_theta_csv(path):
    """``(theta, value)`` arrays from a CSV with header ``theta,value``."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise InputFileError(f"cannot read {path}: {exc.strerror}") from exc
    if not rows or [c.strip() for c in rows[0]] != ["theta", "value"]:
        raise InputFileError(f"{path}: header must be 'theta,value'")
    try:
        data = np.array([[float(a), float(b)] for a, b in (r for r in rows[1:] if r)])
    except ValueError as exc:
        raise InputFileError(f"{path}: {exc}") from exc
    if data.size == 0:
        raise InputFileError(f"{path}: no samples")
    if not np.all(np.isfinite(data)):
        raise InputFileError(f"{path}: non-finite sample")
    theta, value = data[:, 0], data[:, 1]
    if np.any(np.abs(theta) > math.pi / 2 + 1e-12):
        raise InputFileError(f"{path}: latitudes must lie in [-pi/2, pi/2]")
    return theta, value


def write_theta_csv(path, theta, value) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta", "value"])
        for t, v in zip(np.ravel(theta), np.ravel(value)):
            w.writerow([f"{t:.17g}", f"{v:.17g}"])


def to_gauss_samples(theta, value, n: int | None = None, *, assume_gauss: bool = False):
    """Values at the ascending Gauss nodes in ``z = sin(theta)``.

    Samples already at the ``len(theta)`` Gauss nodes (in any order) are
    returned sorted.  Anything else is resampled onto ``n`` nodes (default
    ``len(theta)``) with a Floater-Hormann barycentric rational interpolant in
    ``theta``, and a warning is issued since analysis is then no longer exact.
    The interpolant runs in ``theta`` rather than ``z`` because typical input
    grids are equispaced in latitude, where low blending degree stays stable.
    """
    theta = np.asarray(theta, dtype=float)
    value = np.asarray(value, dtype=float)
    order = np.argsort(theta)
    theta, value = theta[order], value[order]
    z_in = np.sin(theta)
    z, _ = gauss_nodes(theta.size)
    on_nodes = np.allclose(z_in, z, rtol=0, atol=1e-12)
    if assume_gauss and not on_nodes:
        raise InputFileError("samples flagged as Gauss nodes do not sit on the Gauss nodes")
    if on_nodes and (n is None or n == theta.size):
        return value
    if np.any(np.diff(theta) <= 0):
        raise InputFileError("sample latitudes must be distinct")
    warnings.warn(
        "samples are not on Gauss-Legendre nodes; resampling by rational interpolation",
        stacklevel=2,
    )
    target, _ = gauss_nodes(n or theta.size)
    interp = FloaterHormannInterpolator(theta, value, d=min(5, theta.size - 1))
    return interp(np.arcsin(target))
