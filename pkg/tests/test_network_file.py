from __future__ import annotations

import json

import numpy as np
import pytest

from src.errors import DimensionMismatchError, ModelParseError, SchemaError
from src.io.network_file import load_input, load_network, save_input, save_network
from src.model.network import random_network


def _write(path, payload):
    path.write_text(payload if isinstance(payload, str) else json.dumps(payload), encoding="utf-8")
    return path


def test_save_load_is_bit_exact(tmp_path):
    net = random_network([3, 7, 2], seed=11)
    path = save_network(net, tmp_path / "net.json")
    loaded = load_network(path)
    for a, b in zip(net, loaded):
        np.testing.assert_array_equal(a.weights, b.weights)
        np.testing.assert_array_equal(a.bias, b.bias)
    again = save_network(loaded, tmp_path / "again.json")
    assert again.read_bytes() == path.read_bytes()


def test_rejects_non_finite(tmp_path):
    path = _write(tmp_path / "nan.json", '{"layers": [{"weights": [[NaN]], "bias": [0]}]}')
    with pytest.raises(ModelParseError):
        load_network(path)


def test_rejects_integer_beyond_double_range(tmp_path):
    path = _write(tmp_path / "huge.json", '{"layers": [{"weights": [[1' + "0" * 400 + ']], "bias": [0]}]}')
    with pytest.raises(SchemaError) as info:
        load_network(path)
    assert info.value.layer == 1


def test_rejects_invalid_json(tmp_path):
    with pytest.raises(ModelParseError):
        load_network(_write(tmp_path / "bad.json", "{layers"))


@pytest.mark.parametrize(
    "document",
    [
        {"layers": []},
        {"layers": [{"weights": [[1.0]], "bias": [0.0]}], "extra": 1},
        {"layers": [{"weights": [[1.0]]}]},
        {"layers": [{"weights": [[1.0, 2.0], [3.0]], "bias": [0.0, 0.0]}]},
        {"layers": [{"weights": [[True]], "bias": [0.0]}]},
    ],
)
def test_schema_errors(tmp_path, document):
    with pytest.raises(SchemaError):
        load_network(_write(tmp_path / "model.json", document))


def test_dimension_mismatch_names_layer(tmp_path):
    document = {
        "layers": [
            {"weights": [[1.0, 0.0], [0.0, 1.0]], "bias": [0.0, 0.0]},
            {"weights": [[1.0, 0.0, 0.0]], "bias": [0.0]},
        ]
    }
    with pytest.raises(DimensionMismatchError) as info:
        load_network(_write(tmp_path / "model.json", document))
    assert info.value.layer == 2


def test_input_round_trip(tmp_path):
    path = save_input([0.5, -1.25], 1, tmp_path / "x.json")
    x0, label = load_input(path)
    np.testing.assert_array_equal(x0, [0.5, -1.25])
    assert label == 1
    x0, label = load_input(_write(tmp_path / "nolabel.json", {"input": [1.0]}))
    assert label is None


def test_input_rejects_bad_label(tmp_path):
    with pytest.raises(SchemaError):
        load_input(_write(tmp_path / "x.json", {"input": [1.0], "label": "cat"}))
