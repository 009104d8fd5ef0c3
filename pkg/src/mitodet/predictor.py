"""Pluggable segmentation predictor interface.

The pipeline composes through files, so any real model can participate by
writing probability-map PNGs. For an end-to-end runnable chain without a
trained network, BaselinePredictor stands in: nuclei are hematoxylin-dark,
so the darkness of the blue channel is a crude nucleus probability. It is
a toy, not a claim about detection quality.
"""

from __future__ import annotations

from typing import Protocol, runtime_checkable

import numpy as np

from .imagecore import RasterImage


@runtime_checkable
class Predictor(Protocol):
    """Maps an RGB image to a per-pixel probability grid in [0, 1]."""

    def predict(self, image: RasterImage) -> np.ndarray: ...


class BaselinePredictor:
    """probability = 1 - blue_channel / 255 (normalized darkness)."""

    def predict(self, image: RasterImage) -> np.ndarray:
        if image.channels != 3:
            raise ValueError(
                f"baseline predictor needs a 3-channel image, got {image.channels} channel(s)"
            )
        blue = image.pixels[:, :, 2].astype(np.float64)
        return 1.0 - blue / 255.0
