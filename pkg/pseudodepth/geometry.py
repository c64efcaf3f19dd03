"""Horizontal epipolar warping, occlusion masks and disparity/depth conversion.

Disparities are stored normalized by image width: a value `d` at a pixel of an
image `W` pixels wide corresponds to a horizontal shift of `d * W` pixels.
Tensors are batched `(B, C, H, W)`.
"""

from enum import Enum
from typing import Tuple, Union

import numpy as np
import torch

from pseudodepth.errors import InvalidInputError, ShapeMismatchError
from pseudodepth.models import CameraModel

ArrayLike = Union[torch.Tensor, np.ndarray]


class WarpDirection(str, Enum):
    """Which view is reconstructed from which."""

    # Reconstruct the left view from the right one: sample at x - d*W.
    LEFT_FROM_RIGHT = "left-from-right"
    # Reconstruct the right view from the left one: sample at x + d*W.
    RIGHT_FROM_LEFT = "right-from-left"

    @property
    def sign(self) -> float:
        return -1.0 if self is WarpDirection.LEFT_FROM_RIGHT else 1.0


def _check_planes(source: torch.Tensor, disparity: torch.Tensor) -> None:
    if source.dim() != 4 or disparity.dim() != 4:
        raise ShapeMismatchError(
            f"expected (B, C, H, W) tensors, got {tuple(source.shape)} and {tuple(disparity.shape)}"
        )
    if disparity.shape[1] != 1:
        raise ShapeMismatchError(f"disparity must have one channel, got {disparity.shape[1]}")
    if source.shape[0] != disparity.shape[0] or source.shape[2:] != disparity.shape[2:]:
        raise ShapeMismatchError(
            f"source {tuple(source.shape)} and disparity {tuple(disparity.shape)} differ in size"
        )
    if not bool(torch.isfinite(disparity).all()):
        raise InvalidInputError("disparity contains non-finite values")


def warp_image(
    source: torch.Tensor,
    disparity: torch.Tensor,
    direction: WarpDirection = WarpDirection.LEFT_FROM_RIGHT,
) -> torch.Tensor:
    """
    Bilinearly resample `source` along the horizontal axis.

    output(x, y) = source(x + sign * disparity(x, y) * W, y) with
    sign = -1 for LEFT_FROM_RIGHT and +1 for RIGHT_FROM_LEFT. Sample
    coordinates outside the image clamp to the border column. The result is
    differentiable with respect to both `source` and `disparity`.

    Args:
        source: Image to resample, (B, C, H, W)
        disparity: Normalized disparity, (B, 1, H, W)
        direction: Warp direction

    Returns:
        Warped image with the shape of `source`

    Raises:
        ShapeMismatchError: If the spatial sizes differ
        InvalidInputError: If the disparity is not finite
    """
    _check_planes(source, disparity)
    batch, channels, height, width = source.shape

    base = torch.arange(width, dtype=disparity.dtype, device=disparity.device)
    x = base.view(1, 1, 1, width) + direction.sign * disparity * width
    x = x.clamp(0.0, float(width - 1))

    x0 = torch.floor(x).detach()
    frac = x - x0
    x0_idx = x0.long()
    x1_idx = (x0_idx + 1).clamp(max=width - 1)

    x0_idx = x0_idx.expand(batch, channels, height, width)
    x1_idx = x1_idx.expand(batch, channels, height, width)
    left = torch.gather(source, 3, x0_idx)
    right = torch.gather(source, 3, x1_idx)
    return (1.0 - frac) * left + frac * right


def warp_disparity(
    source_disp: torch.Tensor,
    sampling_disp: torch.Tensor,
    direction: WarpDirection = WarpDirection.LEFT_FROM_RIGHT,
) -> torch.Tensor:
    """Warp a single-channel disparity map with another disparity map."""
    if source_disp.dim() != 4 or source_disp.shape[1] != 1:
        raise ShapeMismatchError(
            f"source disparity must be (B, 1, H, W), got {tuple(source_disp.shape)}"
        )
    return warp_image(source_disp, sampling_disp, direction)


def left_right_consistency(
    disp_left: torch.Tensor, disp_right: torch.Tensor
) -> Tuple[torch.Tensor, torch.Tensor]:
    """
    Cross-warp a disparity pair.

    Returns:
        (d̃_l, d̃_r): the right map seen from the left view and vice versa
    """
    tilde_left = warp_disparity(disp_right, disp_left, WarpDirection.LEFT_FROM_RIGHT)
    tilde_right = warp_disparity(disp_left, disp_right, WarpDirection.RIGHT_FROM_LEFT)
    return tilde_left, tilde_right


def occlusion_mask(d: torch.Tensor, d_tilde: torch.Tensor, tau: float = 0.01) -> torch.Tensor:
    """
    Binary agreement mask between a disparity map and its cross-warped twin.

    1 where |d - d̃| <= tau (inclusive), else 0. The mask is a constant with
    respect to optimization.

    Raises:
        ShapeMismatchError: If the shapes differ
        InvalidInputError: If tau is not positive
    """
    if d.shape != d_tilde.shape:
        raise ShapeMismatchError(f"shapes {tuple(d.shape)} and {tuple(d_tilde.shape)} differ")
    if tau <= 0:
        raise InvalidInputError(f"tau must be positive, got {tau}")
    with torch.no_grad():
        return (torch.abs(d - d_tilde) <= tau).to(d.dtype)


def _check_positive(values: ArrayLike, what: str) -> None:
    if isinstance(values, torch.Tensor):
        ok = bool((values > 0).all()) and bool(torch.isfinite(values).all())
    else:
        arr = np.asarray(values)
        ok = bool(np.all(arr > 0)) and bool(np.all(np.isfinite(arr)))
    if not ok:
        raise InvalidInputError(f"{what} must be strictly positive and finite")


def disparity_to_depth(d: ArrayLike, cam: CameraModel, image_width: int) -> ArrayLike:
    """
    Convert normalized disparity to metric depth: D = b*f / (d * W).

    Accepts torch tensors or numpy arrays and returns the same kind.

    Raises:
        InvalidInputError: If any disparity is <= 0
    """
    _check_positive(d, "disparity")
    return cam.bf / (d * image_width)


def depth_to_disparity(depth: ArrayLike, cam: CameraModel, image_width: int) -> ArrayLike:
    """Inverse of `disparity_to_depth`: d = b*f / (D * W)."""
    _check_positive(depth, "depth")
    return cam.bf / (depth * image_width)
