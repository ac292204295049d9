"""scikit-learn wrapper around training and post-training quantization."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .model import Activation, NetworkSpec, TrainSettings, forward, quantize, train


class SpinNetworkClassifier(ClassifierMixin, BaseEstimator):
    """Two-layer saturating-linear network, trained in float and quantized after training.

    Inputs must lie in [0, 1] (pixel intensities). ``activation`` is
    ``"hardware"`` for the neuron's normalized transfer curve or ``"ideal"``
    for a clipped ramp. After ``fit``, ``spec_`` holds the float network and
    ``quantized_spec_`` the quantized one; ``predict`` uses the latter when
    ``quantized`` is true.
    """

    def __init__(
        self,
        hidden=20,
        activation="hardware",
        epochs=200,
        lr=0.02,
        momentum=0.9,
        batch_size=16,
        l1=1e-3,
        min_fraction=0.1875,
        weight_noise=0.06,
        column_budget=7.0,
        quant_bits_w=4,
        quant_bits_a=2,
        quantized=True,
        random_state=0,
    ):
        self.hidden = hidden
        self.activation = activation
        self.epochs = epochs
        self.lr = lr
        self.momentum = momentum
        self.batch_size = batch_size
        self.l1 = l1
        self.min_fraction = min_fraction
        self.weight_noise = weight_noise
        self.column_budget = column_budget
        self.quant_bits_w = quant_bits_w
        self.quant_bits_a = quant_bits_a
        self.quantized = quantized
        self.random_state = random_state

    def _activation(self) -> Activation:
        if self.activation == "ideal":
            return Activation.ideal()
        if self.activation == "hardware":
            from .hardware import default_activation

            return default_activation()
        raise ValueError(f"activation must be 'hardware' or 'ideal', got {self.activation!r}")

    def settings(self) -> TrainSettings:
        return TrainSettings(
            epochs=self.epochs,
            lr=self.lr,
            momentum=self.momentum,
            batch_size=self.batch_size,
            column_budget=self.column_budget,
            l1=self.l1,
            min_fraction=self.min_fraction,
            weight_noise=self.weight_noise,
            seed=int(self.random_state or 0),
        )

    def fit(self, X, y):
        X, y = validate_data(self, X, y)
        if np.any(X < 0) or np.any(X > 1):
            raise ValueError("inputs must be scaled to [0, 1]")
        self.classes_, idx = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise ValueError("need at least two classes")
        Y = np.eye(self.classes_.size)[idx]
        spec = NetworkSpec(
            sizes=(X.shape[1], int(self.hidden), self.classes_.size),
            activation=self._activation(),
            quant_bits_w=self.quant_bits_w,
            quant_bits_a=self.quant_bits_a,
        )
        self.loss_curve_ = []
        self.spec_ = train(X, Y, spec, self.settings(), self.loss_curve_)
        self.quantized_spec_ = quantize(self.spec_)
        return self

    def decision_function(self, X):
        check_is_fitted(self, "spec_")
        X = validate_data(self, X, reset=False)
        return forward(self.quantized_spec_ if self.quantized else self.spec_, X)

    def predict(self, X):
        return self.classes_[np.argmax(self.decision_function(X), axis=-1)]
