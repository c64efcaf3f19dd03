"""Task-conditioned encoder-decoder (teacher) and its monocular reduction (student).

The trunk is a three-level encoder (full, 1/2, 1/4 resolution) with a decoder
back to 1/2 resolution and a skip connection at that level. Prediction heads are
3x3 convolutions on the half-resolution decoder output, up-sampled bilinearly to
the input size. No batch normalization is used.
"""

from dataclasses import dataclass
from typing import Optional, Tuple

import torch
import torch.nn as nn
import torch.nn.functional as F

from pseudodepth.errors import InvalidInputError, ShapeMismatchError
from pseudodepth.logging_setup import get_logger
from pseudodepth.models import ArchitectureConfig, NetworkRole, TaskLabel

logger = get_logger(__name__)

KERNEL = 3
TEACHER_INPUT_CHANNELS = 7  # left RGB, right RGB, task plane
STUDENT_INPUT_CHANNELS = 3


def conv_block(in_channels: int, out_channels: int, stride: int = 1) -> nn.Sequential:
    """3x3 convolution followed by ELU."""
    return nn.Sequential(
        nn.Conv2d(in_channels, out_channels, KERNEL, stride=stride, padding=KERNEL // 2),
        nn.ELU(inplace=False),
    )


def _conv_params(in_channels: int, out_channels: int) -> int:
    return KERNEL * KERNEL * in_channels * out_channels + out_channels


def expected_parameter_count(arch: ArchitectureConfig, role: NetworkRole) -> int:
    """Closed-form parameter count of a network built from `arch`."""
    c0, c1, c2 = arch.channels
    in_channels = TEACHER_INPUT_CHANNELS if role is NetworkRole.TEACHER else STUDENT_INPUT_CHANNELS
    trunk = (
        _conv_params(in_channels, c0)
        + _conv_params(c0, c0)
        + _conv_params(c0, c1)
        + _conv_params(c1, c1)
        + _conv_params(c1, c2)
        + _conv_params(c2, c2)
        + _conv_params(c2, c1)
        + _conv_params(2 * c1, c1)
    )
    right_head = _conv_params(c1, 1)
    if role is NetworkRole.STUDENT:
        return trunk + right_head
    return trunk + right_head + _conv_params(c1, arch.num_classes)


class Trunk(nn.Module):
    """Shared encoder-decoder producing half-resolution features."""

    def __init__(self, in_channels: int, channels: Tuple[int, int, int]) -> None:
        super().__init__()
        c0, c1, c2 = channels
        self.stem = nn.Sequential(conv_block(in_channels, c0), conv_block(c0, c0))
        self.down1 = nn.Sequential(conv_block(c0, c1, stride=2), conv_block(c1, c1))
        self.down2 = nn.Sequential(conv_block(c1, c2, stride=2), conv_block(c2, c2))
        self.up = conv_block(c2, c1)
        self.fuse = conv_block(2 * c1, c1)
        self.out_channels = c1

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        skip = self.down1(self.stem(x))
        bottleneck = self.down2(skip)
        upsampled = F.interpolate(bottleneck, size=skip.shape[-2:], mode="nearest")
        return self.fuse(torch.cat([self.up(upsampled), skip], dim=1))


@dataclass
class TeacherOutput:
    """Task-specific teacher prediction."""

    task: TaskLabel
    disp_left: Optional[torch.Tensor] = None
    disp_right: Optional[torch.Tensor] = None
    logits: Optional[torch.Tensor] = None


def _check_image(image: torch.Tensor, name: str) -> None:
    if image.dim() != 4 or image.shape[1] != 3:
        raise ShapeMismatchError(f"{name} must be (B, 3, H, W), got {tuple(image.shape)}")
    height, width = image.shape[-2:]
    if height % 4 or width % 4:
        raise ShapeMismatchError(f"{name} size {height}x{width} must be divisible by 4")
    if not bool(torch.isfinite(image).all()):
        raise InvalidInputError(f"{name} contains non-finite values")


class _DisparityNet(nn.Module):
    def __init__(self, arch: ArchitectureConfig, in_channels: int) -> None:
        super().__init__()
        self.arch = arch
        self.trunk = Trunk(in_channels, arch.channels)
        self.right_head = nn.Conv2d(self.trunk.out_channels, 1, KERNEL, padding=KERNEL // 2)

    def _to_disparity(self, raw: torch.Tensor, size: Tuple[int, int]) -> torch.Tensor:
        # (floor, d_max) bound; bilinear up-sampling keeps values inside it.
        floor = self.arch.disparity_floor
        disparity = (self.arch.d_max - floor) * torch.sigmoid(raw) + floor
        return F.interpolate(disparity, size=size, mode="bilinear", align_corners=False)


class TeacherNet(_DisparityNet):
    """Binocular teacher switching between depth and segmentation by task label."""

    role = NetworkRole.TEACHER

    def __init__(self, arch: ArchitectureConfig) -> None:
        super().__init__(arch, TEACHER_INPUT_CHANNELS)
        # Segmentation scores, or left disparity from channel 0 in depth mode.
        self.primary_head = nn.Conv2d(
            self.trunk.out_channels, arch.num_classes, KERNEL, padding=KERNEL // 2
        )

    def forward(
        self, image_left: torch.Tensor, image_right: torch.Tensor, task: TaskLabel
    ) -> TeacherOutput:
        """
        Run the teacher for one task.

        For segmentation the right slot carries a copy of the left image.
        """
        _check_image(image_left, "left image")
        task = TaskLabel(task)
        if task is TaskLabel.SEGMENTATION:
            image_right = image_left
        else:
            _check_image(image_right, "right image")
            if image_right.shape != image_left.shape:
                raise ShapeMismatchError("left and right images differ in shape")

        batch, _, height, width = image_left.shape
        task_plane = image_left.new_full((batch, 1, height, width), float(task.value))
        features = self.trunk(torch.cat([image_left, image_right, task_plane], dim=1))
        primary = self.primary_head(features)

        if task is TaskLabel.SEGMENTATION:
            logits = F.interpolate(
                primary, size=(height, width), mode="bilinear", align_corners=False
            )
            return TeacherOutput(task=task, logits=logits)

        return TeacherOutput(
            task=task,
            disp_left=self._to_disparity(primary[:, :1], (height, width)),
            disp_right=self._to_disparity(self.right_head(features), (height, width)),
        )


class StudentNet(_DisparityNet):
    """Monocular student: the teacher trunk with only the disparity head kept."""

    role = NetworkRole.STUDENT

    def __init__(self, arch: ArchitectureConfig) -> None:
        super().__init__(arch, STUDENT_INPUT_CHANNELS)

    def forward(self, image: torch.Tensor) -> torch.Tensor:
        """Predict a normalized disparity map at the input resolution."""
        _check_image(image, "image")
        height, width = image.shape[-2:]
        return self._to_disparity(self.right_head(self.trunk(image)), (height, width))


def build_network(arch: ArchitectureConfig, role: NetworkRole) -> _DisparityNet:
    """Instantiate the network class for `role`."""
    return TeacherNet(arch) if role is NetworkRole.TEACHER else StudentNet(arch)


def init_parameters(seed: int, arch: ArchitectureConfig, role: NetworkRole) -> _DisparityNet:
    """
    Build a network with parameters drawn deterministically from `seed`.

    The global RNG state of the caller is left untouched.
    """
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(seed)
        net = build_network(arch, role)
    count = sum(p.numel() for p in net.parameters())
    logger.debug(
        "Initialized network", extra={"role": role.value, "seed": seed, "parameters": count}
    )
    return net


def teacher_forward(
    net: TeacherNet, image_left: torch.Tensor, image_right: torch.Tensor, task: TaskLabel
) -> TeacherOutput:
    """Functional alias of `TeacherNet.forward`."""
    return net(image_left, image_right, task)


def student_forward(net: StudentNet, image: torch.Tensor) -> torch.Tensor:
    """Functional alias of `StudentNet.forward`."""
    return net(image)
