"""File formats: model JSON, covariance JSON, trajectory CSV.

All JSON is written in a canonical form (fixed key order, numeric time keys
sorted, two-space indent, trailing newline, shortest round-trip float
encoding), so parse followed by serialize is the identity on canonical
files.  Malformed payloads raise ``InputError`` with position diagnostics;
structurally invalid matrices surface as ``ValidationError`` from the type
constructors.

Schemas
-------
Model:       {"N": int, "d": int, "c": "first"|"last",
              "transition"/"coupling"/"noise_cov": {"<k>": d-by-d rows}}
Covariance:  {"n": int, "d": int, "data": flat row-major floats}
Trajectories: CSV with header path_id,k,x_1..x_d, one row per (path, time).
"""

import json

import numpy as np

from .core import BlockCovariance, as_direction
from .errors import InputError, ValidationError
from .model import CmModel, interior_times

__all__ = [
    "canonical_json",
    "covariance_from_dict",
    "covariance_to_dict",
    "load_covariance",
    "load_model",
    "load_trajectories",
    "model_from_dict",
    "model_to_dict",
    "save_covariance",
    "save_model",
    "save_trajectories",
]


def canonical_json(obj):
    """Serialize to the canonical JSON text (bit-stable round-trips)."""
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _block_to_rows(block):
    return [[float(v) for v in row] for row in np.asarray(block)]


def _rows_to_block(rows, d, label):
    try:
        block = np.array(rows, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{label}: expected a {d}x{d} array of numbers") from exc
    if block.shape != (d, d):
        raise ValidationError(f"{label}: expected shape {(d, d)}, got {block.shape}")
    return block


def _blocks_to_obj(blocks):
    return {str(k): _block_to_rows(blocks[k]) for k in sorted(blocks)}


def _obj_to_blocks(obj, d, label):
    if not isinstance(obj, dict):
        raise InputError(f"{label} must be an object keyed by time index")
    out = {}
    for key, rows in obj.items():
        try:
            k = int(key)
        except ValueError:
            raise InputError(f"{label}: non-integer time key {key!r}") from None
        out[k] = _rows_to_block(rows, d, f"{label}[{key}]")
    return out


def model_to_dict(model: CmModel):
    """Canonical JSON-ready dict for a model."""
    return {
        "N": model.n,
        "d": model.d,
        "c": model.direction.value,
        "transition": _blocks_to_obj(dict(model.transition)),
        "coupling": _blocks_to_obj(dict(model.coupling)),
        "noise_cov": _blocks_to_obj(dict(model.noise_cov)),
    }


def model_from_dict(obj):
    if not isinstance(obj, dict):
        raise InputError("model payload must be a JSON object")
    missing = {"N", "d", "c", "transition", "coupling", "noise_cov"} - set(obj)
    if missing:
        raise InputError(f"model payload missing fields {sorted(missing)}")
    try:
        n, d = int(obj["N"]), int(obj["d"])
    except (TypeError, ValueError):
        raise InputError("model fields N and d must be integers") from None
    direction = as_direction(obj["c"])
    return CmModel(
        n=n, d=d, direction=direction,
        transition=_obj_to_blocks(obj["transition"], d, "transition"),
        coupling=_obj_to_blocks(obj["coupling"], d, "coupling"),
        noise_cov=_obj_to_blocks(obj["noise_cov"], d, "noise_cov"),
    )


def covariance_to_dict(cov: BlockCovariance):
    return {
        "n": cov.n,
        "d": cov.d,
        "data": [float(v) for v in cov.matrix.ravel()],
    }


def covariance_from_dict(obj):
    if not isinstance(obj, dict):
        raise InputError("covariance payload must be a JSON object")
    missing = {"n", "d", "data"} - set(obj)
    if missing:
        raise InputError(f"covariance payload missing fields {sorted(missing)}")
    try:
        n, d = int(obj["n"]), int(obj["d"])
        data = np.array(obj["data"], dtype=float)
    except (TypeError, ValueError):
        raise InputError("covariance fields must be integers n, d and a numeric data array") from None
    side = (n + 1) * d
    if data.shape != (side * side,):
        raise ValidationError(
            f"covariance data has {data.size} entries, expected {side * side}")
    return BlockCovariance(data.reshape(side, side), d=d)


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(
            f"{path}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}"
        ) from exc


def save_model(path, model):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(model_to_dict(model)))


def load_model(path):
    return model_from_dict(_load_json(path))


def save_covariance(path, cov):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(covariance_to_dict(cov)))


def load_covariance(path):
    return covariance_from_dict(_load_json(path))


def save_trajectories(path, ensemble):
    """Write an ensemble as CSV, one row per (path, time)."""
    paths = ensemble.paths
    count, steps, d = paths.shape
    header = "path_id,k," + ",".join(f"x_{i + 1}" for i in range(d))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(header + "\n")
        for p in range(count):
            fh.writelines(
                f"{p},{k}," + ",".join(repr(float(v)) for v in paths[p, k]) + "\n"
                for k in range(steps)
            )


def load_trajectories(path):
    """Read a trajectory CSV back into an array of shape (count, n+1, d).

    Requires the complete grid written by ``save_trajectories``: every path
    id 0..count-1 with every time 0..n exactly once.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            header = fh.readline().strip()
            cols = header.split(",")
            if cols[:2] != ["path_id", "k"] or len(cols) < 3:
                raise InputError(f"{path}: unexpected trajectory header {header!r}")
            d = len(cols) - 2
            rows = []
            for lineno, line in enumerate(fh, start=2):
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                if len(parts) != d + 2:
                    raise InputError(
                        f"{path}: line {lineno}: expected {d + 2} fields, got {len(parts)}")
                try:
                    rows.append([float(v) for v in parts])
                except ValueError:
                    raise InputError(f"{path}: line {lineno}: non-numeric field") from None
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise InputError(f"{path}: no trajectory rows")
    table = np.array(rows)
    ids = table[:, 0].astype(int)
    ks = table[:, 1].astype(int)
    count, steps = ids.max() + 1, ks.max() + 1
    if len(rows) != count * steps:
        raise InputError(
            f"{path}: incomplete trajectory grid ({len(rows)} rows for "
            f"{count} paths x {steps} times)")
    out = np.full((count, steps, d), np.nan)
    out[ids, ks] = table[:, 2:]
    if not np.isfinite(out).all():
        raise InputError(f"{path}: duplicate or missing (path_id, k) rows")
    return out
