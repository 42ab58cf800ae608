"""A plain feed-forward layer stack."""

from collections import OrderedDict

import numpy as np

from ..errors import CheckpointError, ShapeError
from .checkpoint import register_model
from .layers import DropoutLayer, layer_from_spec


class Network:
    """Ordered stack of layers sharing the forward/backward protocol.

    Parameters are exposed as an ordered mapping "layer<i>.<name>" so
    optimizers, checkpoints and gradient checks all see one flat view.
    """

    checkpoint_kind = "network"

    def __init__(self, layers, seed: int = 0):
        self.layers = list(layers)
        self.seed = seed

    def forward(self, x: np.ndarray, training: bool = False) -> np.ndarray:
        out = x
        for layer in self.layers:
            out = layer.forward(out, training=training)
        return out

    def backward(self, d_out: np.ndarray) -> np.ndarray:
        grad = d_out
        for layer in reversed(self.layers):
            grad = layer.backward(grad)
        return grad

    def parameters(self) -> "OrderedDict[str, np.ndarray]":
        out = OrderedDict()
        for idx, layer in enumerate(self.layers):
            for name, value in layer.params().items():
                out[f"layer{idx}.{name}"] = value
        return out

    def gradients(self) -> "OrderedDict[str, np.ndarray]":
        out = OrderedDict()
        for idx, layer in enumerate(self.layers):
            for name in layer.params():
                out[f"layer{idx}.{name}"] = layer.grads[name]
        return out

    def dropout_layers(self) -> list[DropoutLayer]:
        return [l for l in self.layers if isinstance(l, DropoutLayer)]

    def spec(self) -> list[dict]:
        return [layer.spec() for layer in self.layers]

    @classmethod
    def from_spec(cls, specs: list[dict], seed: int = 0) -> "Network":
        return cls([layer_from_spec(s) for s in specs], seed=seed)

    def load_parameters(self, params) -> None:
        """Copy a flat parameter mapping into the live layer arrays."""
        own = self.parameters()
        if set(own) != set(params):
            raise CheckpointError("parameter names do not match network layout")
        for name, value in own.items():
            loaded = params[name]
            if loaded.shape != value.shape:
                raise ShapeError(f"parameter {name}: shape {loaded.shape} does "
                                 f"not match {value.shape}")
            value[...] = loaded

    def checkpoint_meta(self) -> dict:
        return {"layers": self.spec(), "seed": self.seed}

    @classmethod
    def from_checkpoint(cls, meta: dict, params) -> "Network":
        net = cls.from_spec(meta["layers"], seed=meta.get("seed", 0))
        net.load_parameters(params)
        return net


register_model(Network.checkpoint_kind, Network)
