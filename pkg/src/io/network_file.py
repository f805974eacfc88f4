"""Reading and writing model and input-vector documents.

Model document::

    {"layers": [{"weights": [[...], ...], "bias": [...]}, ...]}

``weights`` is row-major (outer list = rows, one row per output neuron).
Input document::

    {"input": [...], "label": 3}

``label`` is optional. Unknown keys and non-finite numbers are rejected.
"""

from __future__ import annotations

import json
from numbers import Real
from pathlib import Path
from typing import Any

import numpy as np
from numpy.typing import ArrayLike

from ..errors import DimensionMismatchError, ModelParseError, SchemaError
from ..model.network import Layer, Network

_MODEL_KEYS = {"layers"}
_LAYER_KEYS = {"weights", "bias"}
_INPUT_KEYS = {"input", "label"}


def _reject_constant(token: str) -> float:
    raise ValueError(f"non-finite literal {token} is not allowed")


def _read_document(path: Path) -> Any:
    try:
        text = path.read_text(encoding="utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ModelParseError(f"not UTF-8 text ({exc})", path=path) from exc
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except ValueError as exc:
        raise ModelParseError(f"invalid document ({exc})", path=path) from exc


def _check_keys(obj: Any, allowed: set[str], required: set[str], path: Path, layer: int | None = None, what: str = "document") -> None:
    if not isinstance(obj, dict):
        raise SchemaError(f"{what} must be a mapping", path=path, layer=layer)
    unknown = sorted(set(obj) - allowed)
    if unknown:
        raise SchemaError(f"unknown keys in {what}: {', '.join(unknown)}", path=path, layer=layer)
    missing = sorted(required - set(obj))
    if missing:
        raise SchemaError(f"missing keys in {what}: {', '.join(missing)}", path=path, layer=layer)


def _is_number(value: Any) -> bool:
    return isinstance(value, Real) and not isinstance(value, bool)


def _numeric_vector(values: Any, path: Path, layer: int | None, what: str) -> np.ndarray:
    if not isinstance(values, list) or not values:
        raise SchemaError(f"{what} must be a non-empty list of numbers", path=path, layer=layer)
    if not all(_is_number(v) for v in values):
        raise SchemaError(f"{what} must contain only numbers", path=path, layer=layer)
    try:
        arr = np.array(values, dtype=np.float64)
    except OverflowError as exc:
        raise SchemaError(f"{what} contains a value outside the double range", path=path, layer=layer) from exc
    if not np.all(np.isfinite(arr)):
        raise SchemaError(f"{what} contains non-finite values", path=path, layer=layer)
    return arr


def _numeric_matrix(rows: Any, path: Path, layer: int) -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise SchemaError("weights must be a non-empty list of rows", path=path, layer=layer)
    parsed = [_numeric_vector(row, path, layer, f"weights row {index}") for index, row in enumerate(rows)]
    width = parsed[0].shape[0]
    for index, row in enumerate(parsed):
        if row.shape[0] != width:
            raise SchemaError(
                f"weights row {index} has {row.shape[0]} entries, expected {width}",
                path=path,
                layer=layer,
            )
    return np.vstack(parsed)


def load_network(path: str | Path) -> Network:
    """Load and validate a model document."""
    path = Path(path)
    document = _read_document(path)
    _check_keys(document, _MODEL_KEYS, _MODEL_KEYS, path)
    raw_layers = document["layers"]
    if not isinstance(raw_layers, list) or not raw_layers:
        raise SchemaError("layers must be a non-empty list", path=path)

    layers: list[Layer] = []
    for index, raw in enumerate(raw_layers, start=1):
        _check_keys(raw, _LAYER_KEYS, _LAYER_KEYS, path, layer=index, what="layer")
        weights = _numeric_matrix(raw["weights"], path, index)
        bias = _numeric_vector(raw["bias"], path, index, "bias")
        if bias.shape[0] != weights.shape[0]:
            raise DimensionMismatchError(
                f"bias has {bias.shape[0]} entries but weights have {weights.shape[0]} rows",
                path=path,
                layer=index,
            )
        if layers and weights.shape[1] != layers[-1].out_dim:
            raise DimensionMismatchError(
                f"weights have {weights.shape[1]} columns but layer {index - 1} has "
                f"{layers[-1].out_dim} outputs",
                path=path,
                layer=index,
            )
        layers.append(Layer(weights, bias))
    return Network(tuple(layers))


def network_document(net: Network) -> dict[str, Any]:
    """Return the canonical mapping for *net*."""
    return {
        "layers": [
            {"weights": layer.weights.tolist(), "bias": layer.bias.tolist()}
            for layer in net.layers
        ]
    }


def save_network(net: Network, path: str | Path) -> Path:
    """Write *net* to *path* and return the path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(network_document(net)) + "\n", encoding="utf-8")
    return path


def load_input(path: str | Path) -> tuple[np.ndarray, int | None]:
    """Load an input-vector document and return ``(x0, label)``."""
    path = Path(path)
    document = _read_document(path)
    _check_keys(document, _INPUT_KEYS, {"input"}, path)
    x0 = _numeric_vector(document["input"], path, None, "input")
    label = document.get("label")
    if label is not None and (not isinstance(label, int) or isinstance(label, bool) or label < 0):
        raise SchemaError("label must be a non-negative integer", path=path)
    return x0, label


def save_input(x0: ArrayLike, label: int | None, path: str | Path) -> Path:
    """Write an input-vector document to *path*."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    document: dict[str, Any] = {"input": [float(v) for v in np.asarray(x0, dtype=np.float64)]}
    if label is not None:
        document["label"] = int(label)
    path.write_text(json.dumps(document) + "\n", encoding="utf-8")
    return path
