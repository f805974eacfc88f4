"""Fully connected ReLU networks: evaluation, margin merging and generation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np
from numpy.typing import ArrayLike

from ..errors import InvalidParameterError, ShapeError
from ..linalg.norms import Matrix, Vector, as_matrix, as_vector


@dataclass(frozen=True, slots=True, eq=False)
class Layer:
    """One affine map ``W x + b``."""

    weights: Matrix
    bias: Vector

    def __post_init__(self) -> None:
        weights = as_matrix(self.weights, "weights").copy()
        bias = as_vector(self.bias, "bias").copy()
        if bias.shape[0] != weights.shape[0]:
            raise ShapeError(
                f"bias length {bias.shape[0]} does not match {weights.shape[0]} weight rows"
            )
        weights.setflags(write=False)
        bias.setflags(write=False)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "bias", bias)

    @property
    def in_dim(self) -> int:
        return int(self.weights.shape[1])

    @property
    def out_dim(self) -> int:
        return int(self.weights.shape[0])


@dataclass(frozen=True, slots=True, eq=False)
class Network:
    """An m-layer ReLU network; ReLU follows every layer except the last."""

    layers: tuple[Layer, ...]

    def __post_init__(self) -> None:
        layers = tuple(self.layers)
        if not layers:
            raise InvalidParameterError("a network needs at least one layer")
        for index in range(1, len(layers)):
            if layers[index].in_dim != layers[index - 1].out_dim:
                raise ShapeError(
                    f"expects {layers[index].in_dim} inputs but layer {index} has "
                    f"{layers[index - 1].out_dim} outputs",
                    layer=index + 1,
                )
        object.__setattr__(self, "layers", layers)

    @classmethod
    def from_arrays(
        cls, weights: Sequence[ArrayLike], biases: Sequence[ArrayLike]
    ) -> "Network":
        """Build a network from parallel weight and bias sequences."""
        if len(weights) != len(biases):
            raise InvalidParameterError("weights and biases must have the same length")
        return cls(tuple(Layer(w, b) for w, b in zip(weights, biases)))

    def __iter__(self) -> Iterator[Layer]:
        return iter(self.layers)

    def __len__(self) -> int:
        return len(self.layers)

    @property
    def num_layers(self) -> int:
        return len(self.layers)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def output_dim(self) -> int:
        return self.layers[-1].out_dim

    @property
    def hidden_dims(self) -> list[int]:
        return [layer.out_dim for layer in self.layers[:-1]]

    @property
    def dims(self) -> list[int]:
        return [self.input_dim] + [layer.out_dim for layer in self.layers]

    def weight(self, k: int) -> Matrix:
        """Return W^(k) using 1-based layer numbering."""
        return self.layers[k - 1].weights

    def bias(self, k: int) -> Vector:
        """Return b^(k) using 1-based layer numbering."""
        return self.layers[k - 1].bias

    def pre_activations(self, x: ArrayLike) -> list[Vector]:
        """Return the pre-ReLU values z^(1), ..., z^(m) at *x*."""
        h = self._check_input(x)
        values: list[Vector] = []
        for index, layer in enumerate(self.layers):
            z = layer.weights @ h + layer.bias
            values.append(z)
            if index < len(self.layers) - 1:
                h = np.maximum(z, 0.0)
        return values

    def forward(self, x: ArrayLike) -> Vector:
        """Return the network output f(x)."""
        return self.pre_activations(x)[-1]

    def logits(self, x: ArrayLike) -> Vector:
        return self.forward(x)

    def forward_batch(self, xs: ArrayLike) -> Matrix:
        """Evaluate the network on every row of *xs*."""
        h = np.asarray(xs, dtype=np.float64)
        if h.ndim != 2 or h.shape[1] != self.input_dim:
            raise ShapeError(f"expected a batch of shape (n, {self.input_dim}), got {h.shape}")
        for index, layer in enumerate(self.layers):
            h = h @ layer.weights.T + layer.bias
            if index < len(self.layers) - 1:
                np.maximum(h, 0.0, out=h)
        return h

    def predict(self, x: ArrayLike) -> int:
        """Return the index of the largest output."""
        return int(np.argmax(self.forward(x)))

    def _check_input(self, x: ArrayLike) -> Vector:
        vec = np.asarray(x, dtype=np.float64)
        if vec.ndim != 1 or vec.shape[0] != self.input_dim:
            raise ShapeError(
                f"input has shape {vec.shape}, expected ({self.input_dim},)"
            )
        return vec


@dataclass(frozen=True, slots=True, eq=False)
class MarginNetwork(Network):
    """A network whose single output is g(x) = f_c(x) - f_j(x)."""

    true_class: int | None = field(default=None)
    target_class: int | None = field(default=None)

    def __post_init__(self) -> None:
        Network.__post_init__(self)
        if self.layers[-1].out_dim != 1:
            raise ShapeError("a margin network must end in a single output row")

    @property
    def margin_row(self) -> Vector:
        """The merged last-layer row w̄."""
        return self.layers[-1].weights[0]

    def margin(self, x: ArrayLike) -> float:
        """Return g(x)."""
        return float(self.forward(x)[0])

    def margin_batch(self, xs: ArrayLike) -> Vector:
        return self.forward_batch(xs)[:, 0]


def merge_last_layer(net: Network, c: int, j: int) -> MarginNetwork:
    """Fold the last layer so the network computes f_c - f_j."""
    n_out = net.output_dim
    if c == j:
        raise InvalidParameterError("true class and target class must differ")
    if not (0 <= c < n_out and 0 <= j < n_out):
        raise InvalidParameterError(f"class indices ({c}, {j}) out of range for {n_out} outputs")
    last = net.layers[-1]
    row = (last.weights[c] - last.weights[j]).reshape(1, -1)
    bias = np.array([last.bias[c] - last.bias[j]])
    return MarginNetwork(
        net.layers[:-1] + (Layer(row, bias),), true_class=c, target_class=j
    )


def random_network(dims: Sequence[int], seed: int) -> Network:
    """Return a network with N(0, 1/fan_in) weights and zero biases."""
    dims = [int(d) for d in dims]
    if len(dims) < 2:
        raise InvalidParameterError("dims needs an input size and at least one layer size")
    if any(d <= 0 for d in dims):
        raise InvalidParameterError(f"every dimension must be positive, got {dims}")
    rng = np.random.default_rng(seed)
    layers = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        weights = rng.normal(0.0, 1.0 / np.sqrt(fan_in), size=(fan_out, fan_in))
        layers.append(Layer(weights, np.zeros(fan_out)))
    return Network(tuple(layers))
