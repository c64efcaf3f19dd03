"""Appearance, consistency, smoothness, segmentation and distillation losses.

All functions operate on batched tensors and return scalars (or per-pixel maps
where noted) that autograd can differentiate.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional

import torch
import torch.nn.functional as F

from pseudodepth.errors import InvalidInputError, ShapeMismatchError
from pseudodepth.geometry import WarpDirection, left_right_consistency, warp_image
from pseudodepth.models import LossWeights

SSIM_WINDOW = 3


@dataclass
class LossBreakdown:
    """Total loss with named components for logging."""

    total: torch.Tensor
    components: Dict[str, float] = field(default_factory=dict)


@dataclass
class BinocularLoss(LossBreakdown):
    """Binocular loss plus the warped views and disparities it produced."""

    recon_left: Optional[torch.Tensor] = None
    recon_right: Optional[torch.Tensor] = None
    tilde_left: Optional[torch.Tensor] = None
    tilde_right: Optional[torch.Tensor] = None


def _same_shape(a: torch.Tensor, b: torch.Tensor) -> None:
    if a.shape != b.shape:
        raise ShapeMismatchError(f"shapes {tuple(a.shape)} and {tuple(b.shape)} differ")


def _same_spatial(a: torch.Tensor, b: torch.Tensor) -> None:
    if a.shape[0] != b.shape[0] or a.shape[-2:] != b.shape[-2:]:
        raise ShapeMismatchError(
            f"spatial sizes {tuple(a.shape)} and {tuple(b.shape)} differ"
        )


def _check_labels(s: torch.Tensor, num_classes: int) -> None:
    if s.dtype.is_floating_point:
        raise InvalidInputError("semantic maps must hold integer class ids")
    if s.numel() and (int(s.min()) < 0 or int(s.max()) >= num_classes):
        raise InvalidInputError(f"class ids must lie in [0, {num_classes})")


def _weight_sum(weights: Dict[str, float], terms: Dict[str, torch.Tensor]) -> torch.Tensor:
    total = None
    for name, value in terms.items():
        contribution = weights[name] * value
        total = contribution if total is None else total + contribution
    assert total is not None
    return total


def _scalars(terms: Dict[str, torch.Tensor]) -> Dict[str, float]:
    return {name: float(value.detach()) for name, value in terms.items()}


# ============================================================================
# Appearance matching
# ============================================================================


def ssim(a: torch.Tensor, b: torch.Tensor, data_range: float = 1.0) -> torch.Tensor:
    """
    Single-scale SSIM with a 3x3 uniform window.

    Borders are reflection-padded so the map has the input size. Stabilizers are
    C1 = (0.01 L)^2 and C2 = (0.03 L)^2 with dynamic range L = `data_range`.

    Args:
        a, b: Images (B, C, H, W)
        data_range: Dynamic range L of the values

    Returns:
        Per-pixel similarity averaged over channels, (B, 1, H, W)
    """
    _same_shape(a, b)
    if a.shape[-1] < SSIM_WINDOW or a.shape[-2] < SSIM_WINDOW:
        raise InvalidInputError(
            f"SSIM window {SSIM_WINDOW}x{SSIM_WINDOW} is larger than image {tuple(a.shape[-2:])}"
        )
    if not (bool(torch.isfinite(a).all()) and bool(torch.isfinite(b).all())):
        raise InvalidInputError("SSIM inputs must be finite")

    c1 = (0.01 * data_range) ** 2
    c2 = (0.03 * data_range) ** 2
    pad = SSIM_WINDOW // 2

    a = F.pad(a, (pad, pad, pad, pad), mode="reflect")
    b = F.pad(b, (pad, pad, pad, pad), mode="reflect")

    mu_a = F.avg_pool2d(a, SSIM_WINDOW, 1)
    mu_b = F.avg_pool2d(b, SSIM_WINDOW, 1)
    sigma_a = F.avg_pool2d(a * a, SSIM_WINDOW, 1) - mu_a * mu_a
    sigma_b = F.avg_pool2d(b * b, SSIM_WINDOW, 1) - mu_b * mu_b
    sigma_ab = F.avg_pool2d(a * b, SSIM_WINDOW, 1) - mu_a * mu_b

    numerator = (2 * mu_a * mu_b + c1) * (2 * sigma_ab + c2)
    denominator = (mu_a * mu_a + mu_b * mu_b + c1) * (sigma_a + sigma_b + c2)
    return (numerator / denominator).mean(dim=1, keepdim=True)


def _check_theta(theta: float) -> None:
    if not 0.0 <= theta <= 1.0:
        raise InvalidInputError(f"theta must lie in [0, 1], got {theta}")


def reconstruction_map(
    image: torch.Tensor, reconstructed: torch.Tensor, theta: float = 0.5, data_range: float = 1.0
) -> torch.Tensor:
    """
    Per-pixel appearance matching cost, (B, 1, H, W).

    theta * (1 - SSIM) / 2 + (1 - theta) * channel-mean |I - I_rec|.
    """
    _check_theta(theta)
    _same_shape(image, reconstructed)
    l1 = torch.abs(image - reconstructed).mean(dim=1, keepdim=True)
    if theta == 0.0:
        return l1
    dssim = (1.0 - ssim(image, reconstructed, data_range)) / 2.0
    return theta * dssim + (1.0 - theta) * l1


def loss_reconstruction(
    image: torch.Tensor, reconstructed: torch.Tensor, theta: float = 0.5, data_range: float = 1.0
) -> torch.Tensor:
    """Appearance matching loss: mean of `reconstruction_map`."""
    return reconstruction_map(image, reconstructed, theta, data_range).mean()


# ============================================================================
# Disparity regularizers
# ============================================================================


def loss_lr(d: torch.Tensor, d_tilde: torch.Tensor) -> torch.Tensor:
    """Left-right consistency: mean |d - d̃|."""
    _same_shape(d, d_tilde)
    return torch.abs(d - d_tilde).mean()


def _weighted_gradients(
    d: torch.Tensor, weight_x: torch.Tensor, weight_y: torch.Tensor
) -> torch.Tensor:
    # Forward differences on the common (H-1) x (W-1) grid.
    grad_x = torch.abs(d[:, :, :-1, 1:] - d[:, :, :-1, :-1])
    grad_y = torch.abs(d[:, :, 1:, :-1] - d[:, :, :-1, :-1])
    return (grad_x * weight_x + grad_y * weight_y).mean()


def loss_smooth(d: torch.Tensor, guide: torch.Tensor) -> torch.Tensor:
    """
    Edge-aware smoothness: mean(|dx d| exp(-|dx I|) + |dy d| exp(-|dy I|)).

    Image gradient magnitudes are Euclidean norms of the forward differences
    across channels.
    The last row and column are excluded from the reduction.
    """
    _same_spatial(d, guide)
    guide_x = torch.linalg.vector_norm(
        guide[:, :, :-1, 1:] - guide[:, :, :-1, :-1], dim=1, keepdim=True
    )
    guide_y = torch.linalg.vector_norm(
        guide[:, :, 1:, :-1] - guide[:, :, :-1, :-1], dim=1, keepdim=True
    )
    return _weighted_gradients(d, torch.exp(-guide_x), torch.exp(-guide_y))


def loss_semantic(
    d: torch.Tensor, s: torch.Tensor, num_classes: int, kappa: float = 10.0
) -> torch.Tensor:
    """
    Semantics-guided smoothness.

    Same stencil as `loss_smooth`, with the guide gradient replaced by
    kappa * [neighbouring class ids differ].

    Args:
        d: Disparity (B, 1, H, W)
        s: Class ids (B, H, W), integers in [0, num_classes)
        num_classes: Class count K
        kappa: Boundary strength
    """
    _same_spatial(d, s)
    _check_labels(s, num_classes)
    labels = s.unsqueeze(1)
    boundary_x = (labels[:, :, :-1, 1:] != labels[:, :, :-1, :-1]).to(d.dtype)
    boundary_y = (labels[:, :, 1:, :-1] != labels[:, :, :-1, :-1]).to(d.dtype)
    return _weighted_gradients(d, torch.exp(-kappa * boundary_x), torch.exp(-kappa * boundary_y))


def loss_seg(logits: torch.Tensor, gt: torch.Tensor) -> torch.Tensor:
    """Mean per-pixel cross-entropy of class scores (B, K, H, W) against ids (B, H, W)."""
    _same_spatial(logits, gt)
    _check_labels(gt, logits.shape[1])
    if not bool(torch.isfinite(logits).all()):
        raise InvalidInputError("logits must be finite")
    return F.cross_entropy(logits, gt.long())


# ============================================================================
# Teacher objectives
# ============================================================================


def loss_binocular(
    d_l: torch.Tensor,
    d_r: torch.Tensor,
    image_left: torch.Tensor,
    image_right: torch.Tensor,
    w: LossWeights,
) -> BinocularLoss:
    """
    Unsupervised binocular objective.

    alpha1 (L_re(I_l, Ĩ_l) + L_re(I_r, Ĩ_r))
    + alpha2 (L_lr(d_l, d̃_l) + L_lr(d_r, d̃_r))
    + alpha3 (L_sm(d_l, I_l) + L_sm(d_r, I_r))
    """
    recon_left = warp_image(image_right, d_l, WarpDirection.LEFT_FROM_RIGHT)
    recon_right = warp_image(image_left, d_r, WarpDirection.RIGHT_FROM_LEFT)
    tilde_left, tilde_right = left_right_consistency(d_l, d_r)

    terms = {
        "reconstruction": loss_reconstruction(image_left, recon_left, w.theta)
        + loss_reconstruction(image_right, recon_right, w.theta),
        "lr_consistency": loss_lr(d_l, tilde_left) + loss_lr(d_r, tilde_right),
        "smoothness": loss_smooth(d_l, image_left) + loss_smooth(d_r, image_right),
    }
    weights = {"reconstruction": w.alpha1, "lr_consistency": w.alpha2, "smoothness": w.alpha3}
    return BinocularLoss(
        total=_weight_sum(weights, terms),
        components=_scalars(terms),
        recon_left=recon_left,
        recon_right=recon_right,
        tilde_left=tilde_left,
        tilde_right=tilde_right,
    )


def loss_teacher(
    d_l: torch.Tensor,
    d_r: torch.Tensor,
    image_left: torch.Tensor,
    image_right: torch.Tensor,
    s_l: torch.Tensor,
    w: LossWeights,
    num_classes: int,
) -> LossBreakdown:
    """gamma1 * L_bi + gamma2 * L_semantic(d_l, s_l)."""
    binocular = loss_binocular(d_l, d_r, image_left, image_right, w)
    semantic = loss_semantic(d_l, s_l, num_classes, w.semantic_kappa)
    components = dict(binocular.components)
    components["binocular"] = float(binocular.total.detach())
    components["semantic"] = float(semantic.detach())
    return LossBreakdown(
        total=w.gamma1 * binocular.total + w.gamma2 * semantic, components=components
    )


# ============================================================================
# Student objectives
# ============================================================================


def loss_distill(
    d_s: torch.Tensor, d_t: torch.Tensor, d_max: float = 0.3, theta: float = 0.5
) -> torch.Tensor:
    """Reconstruction loss between student and teacher disparities (SSIM range d_max)."""
    return loss_reconstruction(d_s, d_t, theta, data_range=d_max)


def loss_unmo(
    d_s: torch.Tensor,
    image_s: torch.Tensor,
    image_other: torch.Tensor,
    mask: torch.Tensor,
    theta: float = 0.5,
    direction: WarpDirection = WarpDirection.LEFT_FROM_RIGHT,
) -> torch.Tensor:
    """
    Occlusion-masked reconstruction of the student's view from the opposite view.

    The per-pixel cost is averaged over pixels where mask == 1; an all-zero mask
    gives 0.
    """
    _same_spatial(d_s, mask)
    if mask.dim() == 3:
        mask = mask.unsqueeze(1)
    reconstructed = warp_image(image_other, d_s, direction)
    per_pixel = reconstruction_map(image_s, reconstructed, theta)
    mask = mask.to(per_pixel.dtype).detach()
    count = mask.sum()
    if float(count) == 0.0:
        return (per_pixel * mask).sum()
    return (per_pixel * mask).sum() / count


def loss_student(
    d_s: torch.Tensor,
    d_t: torch.Tensor,
    image_s: torch.Tensor,
    image_other: torch.Tensor,
    mask: torch.Tensor,
    s_t: torch.Tensor,
    w: LossWeights,
    num_classes: int,
    d_max: float = 0.3,
) -> LossBreakdown:
    """gamma3 * L_distill + gamma4 * L_un-mo + gamma5 * L_semantic(d_s, S_t)."""
    terms = {
        "distill": loss_distill(d_s, d_t, d_max, w.theta),
        "unmo": loss_unmo(d_s, image_s, image_other, mask, w.theta),
        "semantic": loss_semantic(d_s, s_t, num_classes, w.semantic_kappa),
    }
    weights = {"distill": w.gamma3, "unmo": w.gamma4, "semantic": w.gamma5}
    return LossBreakdown(total=_weight_sum(weights, terms), components=_scalars(terms))


def loss_student_photometric(
    d_s: torch.Tensor, image_s: torch.Tensor, image_other: torch.Tensor, w: LossWeights
) -> LossBreakdown:
    """Monocular photometric baseline without pseudo labels: alpha1 L_re + alpha3 L_sm."""
    reconstructed = warp_image(image_other, d_s, WarpDirection.LEFT_FROM_RIGHT)
    terms = {
        "reconstruction": loss_reconstruction(image_s, reconstructed, w.theta),
        "smoothness": loss_smooth(d_s, image_s),
    }
    weights = {"reconstruction": w.alpha1, "smoothness": w.alpha3}
    return LossBreakdown(total=_weight_sum(weights, terms), components=_scalars(terms))
