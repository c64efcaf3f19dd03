"""Pydantic models for configuration, reports and manifests."""

from enum import Enum, IntEnum
from typing import Any, Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


# ============================================================================
# Camera and scene
# ============================================================================


class CameraModel(BaseModel):
    """Rectified stereo rig: baseline in meters, focal length in pixels."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    baseline: float = Field(0.25, gt=0)
    focal: float = Field(200.0, gt=0)

    @property
    def bf(self) -> float:
        return self.baseline * self.focal


class TextureConfig(BaseModel):
    """Procedural texture parameters (band-limited sinusoid mixtures)."""

    model_config = ConfigDict(extra="forbid")

    components: int = Field(6, ge=1)
    min_period_px: float = Field(6.0, gt=2.0)
    max_period_px: float = Field(40.0, gt=2.0)
    amplitude: float = Field(0.22, gt=0, le=0.25)
    gradient: float = Field(0.05, ge=0, le=0.1)


class SceneConfig(BaseModel):
    """Synthetic stereo scene generator configuration."""

    model_config = ConfigDict(extra="forbid")

    height: int = Field(64, ge=2)
    width: int = Field(128, ge=2)
    min_objects: int = Field(1, ge=0)
    max_objects: int = Field(4, ge=0)
    object_depth_min: float = Field(4.0, gt=0)
    object_depth_max: float = Field(20.0, gt=0)
    background_disparity_px: int = Field(1, ge=1)
    integer_disparity: bool = True
    min_object_size: int = Field(8, ge=1)
    max_object_size: int = Field(40, ge=1)
    camera: CameraModel = Field(default_factory=CameraModel)
    texture: TextureConfig = Field(default_factory=TextureConfig)
    train_samples: int = Field(200, ge=1)
    val_samples: int = Field(40, ge=0)
    seed: int = Field(0, ge=0)

    @model_validator(mode="after")
    def _check_ranges(self) -> "SceneConfig":
        if self.max_objects < self.min_objects:
            raise ValueError("max_objects must be >= min_objects")
        if self.object_depth_max < self.object_depth_min:
            raise ValueError("object_depth_max must be >= object_depth_min")
        if self.max_object_size < self.min_object_size:
            raise ValueError("max_object_size must be >= min_object_size")
        return self

    @property
    def num_classes(self) -> int:
        """Background plus one class per object slot."""
        return self.max_objects + 1

    @property
    def background_depth(self) -> float:
        return self.camera.bf / self.background_disparity_px


# ============================================================================
# Losses
# ============================================================================


class LossWeights(BaseModel):
    """Weighting constants of the teacher and student objectives."""

    model_config = ConfigDict(extra="forbid")

    theta: float = Field(0.5, ge=0, le=1)
    alpha1: float = Field(1.0, ge=0)
    alpha2: float = Field(0.5, ge=0)
    alpha3: float = Field(1.0, ge=0)
    gamma1: float = Field(1.0, ge=0)
    gamma2: float = Field(1.0, ge=0)
    gamma3: float = Field(1.0, ge=0)
    gamma4: float = Field(0.05, ge=0)
    gamma5: float = Field(1.0, ge=0)
    semantic_kappa: float = Field(10.0, ge=0)

    def scale_gammas(self, factor: float) -> "LossWeights":
        """Return a copy with every gamma multiplied by `factor`."""
        return self.model_copy(
            update={f"gamma{i}": getattr(self, f"gamma{i}") * factor for i in range(1, 6)}
        )


# ============================================================================
# Network
# ============================================================================


class TaskLabel(IntEnum):
    """Task label stacked as a constant input plane."""

    SEGMENTATION = 0
    DEPTH = 1


class NetworkRole(str, Enum):
    """Which network a parameter set belongs to."""

    TEACHER = "teacher"
    STUDENT = "student"


class ArchitectureConfig(BaseModel):
    """Miniature encoder-decoder configuration."""

    model_config = ConfigDict(extra="forbid")

    channels: Tuple[int, int, int] = (16, 32, 64)
    num_classes: int = Field(5, ge=2)
    d_max: float = Field(0.3, gt=0, le=1)
    disparity_floor: float = Field(1e-4, gt=0)

    @field_validator("channels")
    @classmethod
    def _positive_channels(cls, value: Tuple[int, int, int]) -> Tuple[int, int, int]:
        if any(c <= 0 for c in value):
            raise ValueError("channel widths must be positive")
        return value

    @model_validator(mode="after")
    def _floor_below_cap(self) -> "ArchitectureConfig":
        if self.disparity_floor >= self.d_max:
            raise ValueError("disparity_floor must be below d_max")
        return self


# ============================================================================
# Training
# ============================================================================


class TrainingPhase(str, Enum):
    """Phase tags written to the loss log and checkpoint manifests."""

    DEPTH_SEG = "depth-seg"
    SEMANTIC = "semantic"
    OVER_TRAIN = "over-train"
    STUDENT = "student"


class TrainingTask(str, Enum):
    """Task tags of individual loss-log rows."""

    DEPTH = "depth"
    SEGMENTATION = "segmentation"


class StudentVariant(str, Enum):
    """Which supervision signals the student receives."""

    PHOTOMETRIC = "photometric"  # no pseudo ground truth
    PGT = "pgt"
    PGT_OCC = "pgt_occ"
    PGT_SEM = "pgt_sem"
    FULL = "full"

    @property
    def uses_pgt(self) -> bool:
        return self is not StudentVariant.PHOTOMETRIC

    @property
    def uses_occlusion(self) -> bool:
        return self in (StudentVariant.PGT_OCC, StudentVariant.FULL)

    @property
    def uses_semantics(self) -> bool:
        return self in (StudentVariant.PGT_SEM, StudentVariant.FULL)


class TrainConfig(BaseModel):
    """Optimizer, schedule and epoch counts of one training stage."""

    model_config = ConfigDict(extra="forbid")

    epochs: int = Field(50, gt=0)
    semantic_start_epoch: int = Field(30, ge=0)
    semantic_booster: bool = True
    over_train_epochs: int = Field(20, ge=0)
    over_train_augment: bool = False
    batch_size: int = Field(4, gt=0)
    learning_rate: float = Field(1e-4, gt=0)
    beta1: float = Field(0.9, ge=0, lt=1)
    beta2: float = Field(0.999, ge=0, lt=1)
    adam_eps: float = Field(1e-5, gt=0)
    lr_milestones: List[int] = Field(default_factory=lambda: [30, 40])
    lr_decay: float = Field(0.1, gt=0, le=1)
    checkpoint_every: int = Field(10, gt=0)
    augment: bool = True
    variant: StudentVariant = StudentVariant.FULL
    seed: int = Field(0, ge=0)

    @field_validator("lr_milestones")
    @classmethod
    def _sorted_milestones(cls, value: List[int]) -> List[int]:
        if sorted(value) != value or any(m <= 0 for m in value):
            raise ValueError("lr_milestones must be positive and increasing")
        return value

    def learning_rate_at(self, epoch: int) -> float:
        """
        Learning rate used during 1-indexed `epoch`.

        The rate is divided by 1/lr_decay once for every milestone already passed.
        """
        passed = sum(1 for m in self.lr_milestones if epoch > m)
        return self.learning_rate * (self.lr_decay**passed)


class PseudoLabelConfig(BaseModel):
    """Pseudo-label export settings."""

    model_config = ConfigDict(extra="forbid")

    occlusion_tau: float = Field(0.01, gt=0)


class GradcheckConfig(BaseModel):
    """Finite-difference gradient check fixtures and tolerances."""

    model_config = ConfigDict(extra="forbid")

    seed: int = Field(0, ge=0)
    fixtures: int = Field(5, gt=0)
    height: int = Field(6, ge=3)
    width: int = Field(8, ge=3)
    eps: float = Field(1e-6, gt=0)
    rtol: float = Field(1e-4, gt=0)
    atol: float = Field(1e-7, ge=0)
    network_height: int = Field(16, gt=0)
    network_width: int = Field(32, gt=0)
    network_rtol: float = Field(1e-3, gt=0)
    network_directions: int = Field(3, gt=0)


# ============================================================================
# Reports and manifests
# ============================================================================


class EvalReport(BaseModel):
    """Seven depth metrics plus the evaluation settings."""

    abs_rel: float = Field(ge=0)
    sq_rel: float = Field(ge=0)
    rmse: float = Field(ge=0)
    rmse_log: float = Field(ge=0)
    acc_1: float = Field(ge=0, le=1)
    acc_2: float = Field(ge=0, le=1)
    acc_3: float = Field(ge=0, le=1)
    valid_pixel_count: int = Field(gt=0)
    cap: float = Field(gt=0)
    min_depth: float = Field(1e-3, gt=0)

    @model_validator(mode="after")
    def _monotone_accuracies(self) -> "EvalReport":
        if not self.acc_1 <= self.acc_2 <= self.acc_3:
            raise ValueError("accuracies must satisfy acc_1 <= acc_2 <= acc_3")
        return self


class CheckpointManifest(BaseModel):
    """Structured header stored at the front of every checkpoint file."""

    model_config = ConfigDict(extra="forbid")

    format_version: str
    role: NetworkRole
    architecture: ArchitectureConfig
    epoch: int = Field(ge=0)
    seed: int
    phase: TrainingPhase
    loss_weights: LossWeights = Field(default_factory=LossWeights)
    train_config: Optional[TrainConfig] = None
    dataset_digest: Optional[str] = None
    config_digest: Optional[str] = None
    optimizer_step: int = Field(0, ge=0)
    created_at: Optional[str] = None
    index: List[Dict[str, Any]] = Field(default_factory=list)
    payload_sha256: str = ""
