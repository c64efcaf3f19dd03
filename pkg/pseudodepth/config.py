"""Layered run configuration.

Precedence, lowest to highest: field defaults, a JSON config file, environment
variables `PSD_<SECTION>__<KEY>`, then command-line overrides. Unknown keys
are rejected at every layer.
"""

from pathlib import Path
from typing import Any, Dict, Iterable, Literal, Optional, Tuple, Type, Union

import orjson
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from pydantic_settings import (
    BaseSettings,
    InitSettingsSource,
    PydanticBaseSettingsSource,
    SettingsConfigDict,
)

from pseudodepth.errors import ConfigError
from pseudodepth.logging_setup import get_logger
from pseudodepth.models import (
    ArchitectureConfig,
    GradcheckConfig,
    LossWeights,
    PseudoLabelConfig,
    SceneConfig,
    TrainConfig,
)
from pseudodepth.utils import compute_payload_hash, dump_json, load_json

logger = get_logger(__name__)

RESOLVED_CONFIG_NAME = "resolved_config.json"

SEED_SECTIONS = {
    "gen-data": "scene",
    "train-teacher": "teacher",
    "train-student": "student",
    "gradcheck": "gradcheck",
}


# ============================================================================
# Command sections
# ============================================================================


class EvalConfig(BaseModel):
    """What to evaluate and against which split."""

    model_config = ConfigDict(extra="forbid")

    target: Literal["student", "teacher", "predictions"] = "student"
    split: Literal["train", "val"] = "val"
    checkpoint: Optional[Path] = None
    predictions_dir: Optional[Path] = None
    cap: float = Field(80.0, gt=0)
    min_depth: float = Field(1e-3, gt=0)

    @model_validator(mode="after")
    def _predictions_need_dir(self) -> "EvalConfig":
        if self.target == "predictions" and self.predictions_dir is None:
            raise ValueError("eval.predictions_dir is required when eval.target is 'predictions'")
        return self


class InferConfig(BaseModel):
    """Single-image inference."""

    model_config = ConfigDict(extra="forbid")

    image: Optional[Path] = None
    checkpoint: Optional[Path] = None
    preview: bool = True


class PathsConfig(BaseModel):
    """Artifact directories of the pipeline stages."""

    model_config = ConfigDict(extra="forbid")

    data_dir: Path = Path("runs/data")
    teacher_dir: Path = Path("runs/teacher")
    pseudo_dir: Path = Path("runs/pseudo")
    student_dir: Path = Path("runs/student")
    eval_dir: Path = Path("runs/eval")
    infer_dir: Path = Path("runs/infer")
    gradcheck_dir: Path = Path("runs/gradcheck")
    teacher_checkpoint: Optional[Path] = None

    def split_dir(self, split: str) -> Path:
        return self.data_dir / split

    def resolved_teacher_checkpoint(self) -> Path:
        """Explicit teacher checkpoint, else the over-trained one, else the final one."""
        if self.teacher_checkpoint is not None:
            return self.teacher_checkpoint
        over_trained = self.teacher_dir / "teacher_overtrain_final.ckpt"
        if over_trained.is_file():
            return over_trained
        return self.teacher_dir / "teacher_final.ckpt"

    def student_checkpoint(self) -> Path:
        return self.student_dir / "student_final.ckpt"


def _default_student() -> TrainConfig:
    # The student has no segmentation task and no over-training stage.
    return TrainConfig(semantic_booster=False, over_train_epochs=0)


# ============================================================================
# Run configuration
# ============================================================================


class RunConfig(BaseSettings):
    """Complete configuration of every pipeline command."""

    model_config = SettingsConfigDict(
        env_prefix="PSD_",
        env_nested_delimiter="__",
        case_sensitive=False,
        extra="forbid",
    )

    scene: SceneConfig = Field(default_factory=SceneConfig)
    model: ArchitectureConfig = Field(default_factory=ArchitectureConfig)
    losses: LossWeights = Field(default_factory=LossWeights)
    teacher: TrainConfig = Field(default_factory=TrainConfig)
    student: TrainConfig = Field(default_factory=_default_student)
    pseudo: PseudoLabelConfig = Field(default_factory=PseudoLabelConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    infer: InferConfig = Field(default_factory=InferConfig)
    gradcheck: GradcheckConfig = Field(default_factory=GradcheckConfig)
    paths: PathsConfig = Field(default_factory=PathsConfig)

    @model_validator(mode="after")
    def _consistent(self) -> "RunConfig":
        if self.scene.height % 4 or self.scene.width % 4:
            raise ValueError("scene.height and scene.width must be divisible by 4")
        if self.model.num_classes < self.scene.num_classes:
            raise ValueError(
                f"model.num_classes ({self.model.num_classes}) must be at least "
                f"scene.num_classes ({self.scene.num_classes})"
            )
        nearest = self.scene.camera.bf / self.scene.object_depth_min / self.scene.width
        if nearest > self.model.d_max:
            raise ValueError(
                f"model.d_max ({self.model.d_max}) is below the largest scene disparity "
                f"({nearest:.4f})"
            )
        return self

    def digest(self) -> str:
        """SHA-256 provenance digest of the resolved configuration."""
        return compute_payload_hash(self.model_dump(mode="json"))

    def write_resolved(self, directory: Union[str, Path]) -> Path:
        """Write `resolved_config.json` into `directory`."""
        return dump_json(Path(directory) / RESOLVED_CONFIG_NAME, self.model_dump(mode="json"))


# ============================================================================
# Loading
# ============================================================================


def parse_override(assignment: str) -> Tuple[Tuple[str, ...], Any]:
    """
    Parse `section.key=value` into a key path and a value.

    Values are decoded as JSON when possible (numbers, booleans, lists) and
    kept as strings otherwise.

    Raises:
        ConfigError: If the assignment has no `=` or an empty key
    """
    key, sep, raw = assignment.partition("=")
    path = tuple(part.strip() for part in key.split("."))
    if not sep or not all(path):
        raise ConfigError(f"override must look like section.key=value, got {assignment!r}")
    try:
        value: Any = orjson.loads(raw)
    except orjson.JSONDecodeError:
        value = raw
    return path, value


def build_overrides(assignments: Iterable[str]) -> Dict[str, Any]:
    """Fold `--set` assignments into a nested dict."""
    overrides: Dict[str, Any] = {}
    for assignment in assignments:
        path, value = parse_override(assignment)
        node = overrides
        for part in path[:-1]:
            child = node.setdefault(part, {})
            if not isinstance(child, dict):
                raise ConfigError(f"conflicting overrides for {'.'.join(path)}")
            node = child
        node[path[-1]] = value
    return overrides


def _read_config_file(path: Path) -> Dict[str, Any]:
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        data = load_json(path)
    except orjson.JSONDecodeError as e:
        raise ConfigError(f"config file is not valid JSON: {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"config file must hold a JSON object: {path}")
    return data


def load_run_config(
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Any]] = None,
) -> RunConfig:
    """
    Resolve the run configuration from all layers.

    Args:
        config_path: Optional JSON config file
        overrides: Nested command-line overrides (highest precedence)

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: On a missing or malformed file, unknown keys or invalid values
    """
    file_values = _read_config_file(Path(config_path)) if config_path is not None else {}

    class _LayeredRunConfig(RunConfig):
        @classmethod
        def settings_customise_sources(
            cls,
            settings_cls: Type[BaseSettings],
            init_settings: PydanticBaseSettingsSource,
            env_settings: PydanticBaseSettingsSource,
            dotenv_settings: PydanticBaseSettingsSource,
            file_secret_settings: PydanticBaseSettingsSource,
        ) -> Tuple[PydanticBaseSettingsSource, ...]:
            return (
                init_settings,
                env_settings,
                InitSettingsSource(settings_cls, init_kwargs=file_values),
            )

    try:
        layered = _LayeredRunConfig(**(overrides or {}))
        config = RunConfig.model_validate(layered.model_dump())
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {e}") from e

    logger.debug(
        "Resolved run configuration",
        extra={"config_file": str(config_path) if config_path else None, "digest": config.digest()},
    )
    return config
