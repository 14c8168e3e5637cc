"""Scribble-supervised road labeling: propagate centerline scribbles into
tri-state proposal masks, plus the weakly supervised loss kernels and the
pixel metrics used to evaluate road masks."""

from .config import Config, parse_config
from .losses import (KernelParams, LossReport, LossWeights, binarize, boundary_mse, dense_filter_brute,
                     dense_filter_fast, joint_loss, partial_bce, regularized_loss, regularized_loss_grad,
                     sobel_edges)
from .metrics import ConfusionCounts, MetricReport, confusion, evaluate_dataset
from .morphology import erode, simulate_scribbles, skeletonize
from .propagate import PropagationConfig, fuse_masks, propagate_dataset, propagate_image, propagate_tile
from .raster import NON_ROAD, ROAD, UNKNOWN
from .scribble import BufferParams, Polyline, ScribbleSet, buffer_mask, rasterize
from .superpixel import SlicParams, slic_segment

__version__ = "0.1.0"
