"""mitodet: deterministic pipeline stages for cross-scanner mitosis detection.

Library modules mirror the pipeline: imagecore (types + PNG I/O), fda
(low-frequency amplitude swapping), annotate (box-to-mask labels), tiling,
augment, postproc (mask -> centers), metrics (detection P/R/F1), losses,
and predictor (pluggable segmentation interface). The `mitodet` CLI wires
them together through files.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND
from .imagecore import (
    BBox,
    BinaryMask,
    InstanceLabelMap,
    Point2D,
    RasterImage,
    from_real,
    load_image,
    load_label_map,
    save_image,
    save_label_map,
    to_real,
)

__all__ = [
    "__version__",
    "KERNEL_BACKEND",
    "BBox",
    "BinaryMask",
    "InstanceLabelMap",
    "Point2D",
    "RasterImage",
    "from_real",
    "load_image",
    "load_label_map",
    "save_image",
    "save_label_map",
    "to_real",
]
