"""Deterministic synthetic rectified-stereo scenes with analytic ground truth.

A scene is a textured fronto-parallel background plane plus fronto-parallel
textured rectangles. Each layer has a constant pixel disparity. The right view
is rendered by shifting each layer by its disparity (a point at left column x
appears at right column x - d) with painter's-algorithm ordering from far to
near. Textures are continuous functions of the layer coordinates, so both
views sample the same surface exactly.
"""

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
import torch

from pseudodepth.errors import InvalidInputError
from pseudodepth.logging_setup import get_logger
from pseudodepth.models import CameraModel, SceneConfig, TextureConfig

logger = get_logger(__name__)

BACKGROUND_CLASS = 0


# ============================================================================
# Samples
# ============================================================================


@dataclass
class StereoPair:
    """Image-only view of a sample: what the student may read."""

    index: int
    image_left: torch.Tensor  # (3, H, W)
    image_right: torch.Tensor  # (3, H, W)


@dataclass
class ObjectSpec:
    """A fronto-parallel rectangle in left-image coordinates."""

    class_id: int
    depth: float  # meters
    disparity_px: float
    x0: int
    y0: int
    x1: int
    y1: int


@dataclass
class StereoSample:
    """Stereo pair with dense ground truth for both views."""

    index: int
    image_left: torch.Tensor  # (3, H, W) float32 in [0, 1]
    image_right: torch.Tensor
    gt_disparity_l: torch.Tensor  # (1, H, W) float32, normalized
    gt_semantic: torch.Tensor  # (H, W) int64
    gt_occlusion: torch.Tensor  # (1, H, W) float32, 1 = reconstructable
    camera: CameraModel
    gt_disparity_r: Optional[torch.Tensor] = None
    gt_semantic_r: Optional[torch.Tensor] = None
    gt_occlusion_r: Optional[torch.Tensor] = None
    objects: List[ObjectSpec] = field(default_factory=list)

    @property
    def height(self) -> int:
        return int(self.image_left.shape[-2])

    @property
    def width(self) -> int:
        return int(self.image_left.shape[-1])

    def pair(self) -> StereoPair:
        return StereoPair(self.index, self.image_left, self.image_right)


# ============================================================================
# Textures
# ============================================================================


def class_palette(class_id: int, num_classes: int) -> np.ndarray:
    """Base colour of a class, channels within [0.3, 0.7]."""
    hue = class_id / max(num_classes, 1)
    phases = np.array([0.0, 1.0 / 3.0, 2.0 / 3.0])
    return 0.5 + 0.2 * np.cos(2.0 * math.pi * (hue + phases))


@dataclass
class _Texture:
    base: np.ndarray  # (3,)
    frequencies: np.ndarray  # (k, 2) radians per pixel along x, y
    phases: np.ndarray  # (k,)
    amplitudes: np.ndarray  # (k,)
    tint: np.ndarray  # (k, 3)
    gradient: np.ndarray  # (2,) per pixel along x, y

    def sample(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Texture value at (possibly fractional) layer coordinates, (..., 3)."""
        angle = x[..., None] * self.frequencies[:, 0] + y[..., None] * self.frequencies[:, 1]
        waves = np.sin(angle + self.phases) * self.amplitudes  # (..., k)
        value = self.base + waves @ self.tint
        value = value + (x * self.gradient[0] + y * self.gradient[1])[..., None]
        return np.clip(value, 0.0, 1.0)


def _random_texture(
    rng: np.random.Generator, base: np.ndarray, texture: TextureConfig, scene: SceneConfig
) -> _Texture:
    k = texture.components
    periods = rng.uniform(texture.min_period_px, texture.max_period_px, size=k)
    orientation = rng.uniform(0.0, math.pi, size=k)
    magnitude = 2.0 * math.pi / periods
    frequencies = np.stack([magnitude * np.cos(orientation), magnitude * np.sin(orientation)], -1)
    amplitudes = texture.amplitude / k * rng.uniform(0.5, 1.0, size=k)
    tint = rng.uniform(0.6, 1.0, size=(k, 3))
    gradient = rng.uniform(-texture.gradient, texture.gradient, size=2) / np.array(
        [scene.width, scene.height]
    )
    base = np.clip(base + rng.uniform(-0.05, 0.05, size=3), 0.0, 1.0)
    return _Texture(
        base=base,
        frequencies=frequencies,
        phases=rng.uniform(0.0, 2.0 * math.pi, size=k),
        amplitudes=amplitudes,
        tint=tint,
        gradient=gradient,
    )


# ============================================================================
# Rendering
# ============================================================================


def _validate(config: SceneConfig) -> None:
    if config.height < 2 or config.width < 2:
        raise InvalidInputError(f"degenerate image size {config.height}x{config.width}")
    if config.background_disparity_px >= config.width:
        raise InvalidInputError("background disparity exceeds the image width")


def sample_objects(config: SceneConfig, rng: np.random.Generator) -> List[ObjectSpec]:
    """Draw object rectangles, depths and distinct classes for one scene."""
    count = int(rng.integers(config.min_objects, config.max_objects + 1))
    classes = rng.permutation(np.arange(1, config.num_classes))[:count]
    bf = config.camera.bf
    objects = []
    for class_id in classes:
        depth = float(rng.uniform(config.object_depth_min, config.object_depth_max))
        disparity_px = bf / depth
        if config.integer_disparity:
            disparity_px = float(max(round(disparity_px), config.background_disparity_px + 1))
            depth = bf / disparity_px
        shift = int(math.ceil(disparity_px))
        max_width = min(config.max_object_size, config.width - shift)
        max_height = min(config.max_object_size, config.height)
        if max_width < 1 or max_height < 1:
            continue
        obj_w = int(rng.integers(min(config.min_object_size, max_width), max_width + 1))
        obj_h = int(rng.integers(min(config.min_object_size, max_height), max_height + 1))
        # The reprojected rectangle stays inside the right image.
        x0 = int(rng.integers(shift, config.width - obj_w + 1))
        y0 = int(rng.integers(0, config.height - obj_h + 1))
        objects.append(
            ObjectSpec(
                class_id=int(class_id),
                depth=depth,
                disparity_px=disparity_px,
                x0=x0,
                y0=y0,
                x1=x0 + obj_w,
                y1=y0 + obj_h,
            )
        )
    return objects


def _covers(obj: ObjectSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return (x >= obj.x0) & (x < obj.x1) & (y >= obj.y0) & (y < obj.y1)


def _render_view(
    layers: Sequence[Tuple[Optional[ObjectSpec], float, int, _Texture]],
    xs: np.ndarray,
    ys: np.ndarray,
    sign: float,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Paint layers far to near for one view.

    `sign` is 0 for the left view and +1 for the right view, whose pixel x
    shows layer coordinate x + d.

    Returns:
        image (H, W, 3), disparity_px (H, W), class ids (H, W), layer ids (H, W)
    """
    height, width = xs.shape
    image = np.zeros((height, width, 3))
    disparity = np.zeros((height, width))
    classes = np.zeros((height, width), dtype=np.int64)
    layer_ids = np.zeros((height, width), dtype=np.int64)
    for layer_id, (obj, disparity_px, class_id, texture) in enumerate(layers):
        lx = xs + sign * disparity_px
        cover = np.ones_like(xs, dtype=bool) if obj is None else _covers(obj, lx, ys)
        image[cover] = texture.sample(lx, ys)[cover]
        disparity[cover] = disparity_px
        classes[cover] = class_id
        layer_ids[cover] = layer_id
    return image, disparity, classes, layer_ids


def _occlusion(
    layers: Sequence[Tuple[Optional[ObjectSpec], float, int, _Texture]],
    layer_ids: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    to_other: float,
) -> np.ndarray:
    """
    1 where the visible surface point is also visible in the other view.

    A point of layer k at column x lands at x + to_other * d_k in the other
    view; it is hidden there when a strictly nearer layer covers that spot.
    For the left view to_other = -1 and nearer layers are hit at left-image
    coordinate x - d_k + d_j; for the right view to_other = +1 and the
    coordinate is x + d_k.
    """
    visible = np.ones(xs.shape, dtype=bool)
    for k, (_, d_k, _, _) in enumerate(layers):
        own = layer_ids == k
        if not own.any():
            continue
        for obj, d_j, _, _ in layers:
            if obj is None or d_j <= d_k:
                continue
            if to_other < 0:
                lx = xs - d_k + d_j
            else:
                lx = xs + d_k
            visible &= ~(own & _covers(obj, lx, ys))
    return visible.astype(np.float32)


def quantize(image: np.ndarray) -> np.ndarray:
    """Round to 8-bit levels so PPM persistence is lossless."""
    return np.rint(np.clip(image, 0.0, 1.0) * 255.0) / 255.0


def render_scene(
    config: SceneConfig,
    objects: Sequence[ObjectSpec],
    rng: np.random.Generator,
    index: int = 0,
) -> StereoSample:
    """Render a stereo sample for explicit objects (textures drawn from `rng`)."""
    _validate(config)
    height, width = config.height, config.width
    ys, xs = np.meshgrid(
        np.arange(height, dtype=np.float64), np.arange(width, dtype=np.float64), indexing="ij"
    )

    background = _random_texture(
        rng, class_palette(BACKGROUND_CLASS, config.num_classes), config.texture, config
    )
    layers: List[Tuple[Optional[ObjectSpec], float, int, _Texture]] = [
        (None, float(config.background_disparity_px), BACKGROUND_CLASS, background)
    ]
    for obj in objects:
        texture = _random_texture(
            rng, class_palette(obj.class_id, config.num_classes), config.texture, config
        )
        layers.append((obj, obj.disparity_px, obj.class_id, texture))
    # Far to near; stable for equal disparities.
    layers = [layers[0]] + sorted(layers[1:], key=lambda layer: layer[1])

    left, disp_l, sem_l, ids_l = _render_view(layers, xs, ys, sign=0.0)
    right, disp_r, sem_r, ids_r = _render_view(layers, xs, ys, sign=1.0)
    occ_l = _occlusion(layers, ids_l, xs, ys, to_other=-1.0)
    occ_r = _occlusion(layers, ids_r, xs, ys, to_other=1.0)

    def image_tensor(image: np.ndarray) -> torch.Tensor:
        return torch.from_numpy(quantize(image).transpose(2, 0, 1).astype(np.float32))

    def disparity_tensor(disparity_px: np.ndarray) -> torch.Tensor:
        return torch.from_numpy((disparity_px / width).astype(np.float32))[None]

    return StereoSample(
        index=index,
        image_left=image_tensor(left),
        image_right=image_tensor(right),
        gt_disparity_l=disparity_tensor(disp_l),
        gt_semantic=torch.from_numpy(sem_l),
        gt_occlusion=torch.from_numpy(occ_l)[None],
        camera=config.camera,
        gt_disparity_r=disparity_tensor(disp_r),
        gt_semantic_r=torch.from_numpy(sem_r),
        gt_occlusion_r=torch.from_numpy(occ_r)[None],
        objects=list(objects),
    )


def generate_sample(config: SceneConfig, index: int) -> StereoSample:
    """
    Generate sample `index` of the scene family described by `config`.

    Deterministic in (config.seed, index) and independent of generation order.
    """
    rng = np.random.default_rng([config.seed, index])
    objects = sample_objects(config, rng)
    return render_scene(config, objects, rng, index=index)


def generate_dataset(config: SceneConfig, count: int, offset: int = 0) -> List[StereoSample]:
    """Generate samples with indices offset .. offset + count - 1."""
    samples = [generate_sample(config, offset + i) for i in range(count)]
    logger.info(
        "Generated synthetic samples",
        extra={"count": count, "offset": offset, "height": config.height, "width": config.width},
    )
    return samples


# ============================================================================
# Augmentation
# ============================================================================


def _flip(tensor: Optional[torch.Tensor]) -> Optional[torch.Tensor]:
    return None if tensor is None else torch.flip(tensor, dims=[-1])


def flip_sample(sample: StereoSample) -> StereoSample:
    """
    Mirror horizontally and swap views.

    The mirrored right image is a valid left image of the mirrored scene, so
    right-view ground truth becomes left-view ground truth and vice versa.
    """
    return replace(
        sample,
        image_left=_flip(sample.image_right),
        image_right=_flip(sample.image_left),
        gt_disparity_l=_flip(sample.gt_disparity_r),
        gt_semantic=_flip(sample.gt_semantic_r),
        gt_occlusion=_flip(sample.gt_occlusion_r),
        gt_disparity_r=_flip(sample.gt_disparity_l),
        gt_semantic_r=_flip(sample.gt_semantic),
        gt_occlusion_r=_flip(sample.gt_occlusion),
        objects=[],
    )


def adjust_colors(
    image: torch.Tensor, gamma: float, brightness: float, colors: np.ndarray
) -> torch.Tensor:
    """Gamma, brightness and per-channel scaling, clamped to [0, 1]."""
    scale = torch.as_tensor(np.asarray(colors), dtype=image.dtype).view(-1, 1, 1)
    return (image.pow(gamma) * brightness * scale).clamp(0.0, 1.0)


def draw_color_params(rng: np.random.Generator) -> Tuple[float, float, np.ndarray]:
    """Random gamma [0.8, 1.2], brightness [0.5, 2.0], colour scales [0.8, 1.2]."""
    gamma = rng.uniform(0.8, 1.2)
    brightness = rng.uniform(0.5, 2.0)
    colors = rng.uniform(0.8, 1.2, 3)
    return float(gamma), float(brightness), np.asarray(colors)


def augment(sample: StereoSample, rng: np.random.Generator) -> StereoSample:
    """
    Training-time augmentation.

    With probability 0.5 the sample is mirrored with a view swap; colour
    jitter is applied identically to both views.
    """
    if rng.random() < 0.5:
        if sample.gt_disparity_r is None:
            raise InvalidInputError("flip augmentation needs right-view ground truth")
        sample = flip_sample(sample)
    gamma, brightness, colors = draw_color_params(rng)
    return replace(
        sample,
        image_left=adjust_colors(sample.image_left, gamma, brightness, colors),
        image_right=adjust_colors(sample.image_right, gamma, brightness, colors),
    )
