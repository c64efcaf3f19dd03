"""Two-stage pseudo-supervision pipeline.

Stage one trains the binocular teacher with alternating task labels (depth and
segmentation batches interleaved), enables semantics-guided smoothness once the
segmentation task has had time to converge, and optionally over-trains the
depth task. Stage two exports pseudo labels (disparity, occlusion mask, class
map) from the teacher and trains the monocular student on them.
"""

import csv
import hashlib
from dataclasses import dataclass, field
from itertools import zip_longest
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Union

import torch
from torch.utils.data import DataLoader

from pseudodepth.checkpoint import (
    LoadedCheckpoint,
    collect_state,
    load_checkpoint,
    optimizer_step_count,
    save_checkpoint,
)
from pseudodepth.dataset import (
    PseudoLabel,
    PseudoLabelSet,
    StudentTrainingSet,
    TeacherTrainingSet,
)
from pseudodepth.errors import CheckpointError, DatasetError, TrainingDivergedError
from pseudodepth.geometry import left_right_consistency, occlusion_mask
from pseudodepth.logging_setup import get_logger
from pseudodepth.losses import (
    LossBreakdown,
    loss_binocular,
    loss_seg,
    loss_student,
    loss_student_photometric,
    loss_teacher,
)
from pseudodepth.metrics import aggregate_reports, evaluate_disparity
from pseudodepth.models import (
    ArchitectureConfig,
    CheckpointManifest,
    EvalReport,
    LossWeights,
    NetworkRole,
    StudentVariant,
    TaskLabel,
    TrainConfig,
    TrainingPhase,
    TrainingTask,
)
from pseudodepth.network import StudentNet, TeacherNet, init_parameters
from pseudodepth.synthdata import StereoPair, StereoSample

logger = get_logger(__name__)

PathLike = Union[str, Path]

LOG_COLUMNS = [
    "epoch",
    "phase",
    "task",
    "loss_total",
    "reconstruction",
    "lr_consistency",
    "smoothness",
    "binocular",
    "semantic",
    "segmentation",
    "distill",
    "unmo",
    "lr",
]


# ============================================================================
# Bookkeeping
# ============================================================================


class LossLog:
    """Append-only CSV of per-epoch mean losses."""

    def __init__(self, path: PathLike) -> None:
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        if not self.path.exists() or self.path.stat().st_size == 0:
            with self.path.open("w", newline="") as handle:
                csv.writer(handle).writerow(LOG_COLUMNS)

    def append(
        self,
        epoch: int,
        phase: TrainingPhase,
        task: TrainingTask,
        total: float,
        components: Dict[str, float],
        lr: float,
    ) -> None:
        row: Dict[str, object] = dict(components)
        row.update(epoch=epoch, phase=phase.value, task=task.value, loss_total=total, lr=lr)
        with self.path.open("a", newline="") as handle:
            csv.DictWriter(handle, fieldnames=LOG_COLUMNS, restval="").writerow(
                {key: row.get(key, "") for key in LOG_COLUMNS}
            )


class _RunningMean:
    def __init__(self) -> None:
        self.count = 0
        self.total = 0.0
        self.components: Dict[str, float] = {}

    def add(self, breakdown: LossBreakdown) -> None:
        self.count += 1
        self.total += float(breakdown.total.detach())
        for name, value in breakdown.components.items():
            self.components[name] = self.components.get(name, 0.0) + value

    def mean(self) -> float:
        return self.total / max(self.count, 1)

    def mean_components(self) -> Dict[str, float]:
        return {name: value / max(self.count, 1) for name, value in self.components.items()}


@dataclass
class EpochRecord:
    """Mean losses of one epoch."""

    epoch: int
    phase: TrainingPhase
    lr: float
    losses: Dict[TrainingTask, float] = field(default_factory=dict)


@dataclass
class TrainingResult:
    """Checkpoints and loss history of a training stage."""

    final_checkpoint: Path
    checkpoints: List[Path] = field(default_factory=list)
    history: List[EpochRecord] = field(default_factory=list)


def dataset_digest(pairs: Iterable[Union[StereoPair, StereoSample]]) -> str:
    """SHA-256 over the image bytes of a sequence of pairs."""
    digest = hashlib.sha256()
    for pair in pairs:
        digest.update(str(pair.index).encode())
        digest.update(pair.image_left.numpy().tobytes())
        digest.update(pair.image_right.numpy().tobytes())
    return digest.hexdigest()


def _make_optimizer(net: torch.nn.Module, config: TrainConfig) -> torch.optim.Adam:
    return torch.optim.Adam(
        net.parameters(),
        lr=config.learning_rate,
        betas=(config.beta1, config.beta2),
        eps=config.adam_eps,
    )


def _set_learning_rate(optimizer: torch.optim.Optimizer, lr: float) -> None:
    for group in optimizer.param_groups:
        group["lr"] = lr


def _loader(dataset: torch.utils.data.Dataset, config: TrainConfig, epoch: int) -> DataLoader:
    # Shuffle order is a function of (seed, epoch) so resumed runs replay it.
    generator = torch.Generator()
    generator.manual_seed(config.seed * 1_000_003 + epoch)
    if hasattr(dataset, "set_epoch"):
        dataset.set_epoch(epoch)
    return DataLoader(
        dataset, batch_size=config.batch_size, shuffle=True, generator=generator, num_workers=0
    )


def _step(
    optimizer: torch.optim.Optimizer,
    breakdown: LossBreakdown,
    epoch: int,
    last_good: Optional[Path],
) -> None:
    if not bool(torch.isfinite(breakdown.total)):
        logger.error(
            "Training diverged",
            extra={"epoch": epoch, "last_good_checkpoint": str(last_good) if last_good else None},
        )
        raise TrainingDivergedError(
            f"non-finite loss at epoch {epoch}; last good checkpoint: {last_good}",
            last_good_checkpoint=last_good,
        )
    optimizer.zero_grad(set_to_none=True)
    breakdown.total.backward()
    optimizer.step()


class _CheckpointWriter:
    """Writes rolling, periodic and final checkpoints for one stage."""

    def __init__(
        self,
        out_dir: PathLike,
        prefix: str,
        role: NetworkRole,
        arch: ArchitectureConfig,
        weights: LossWeights,
        config: TrainConfig,
        data_digest: str,
        config_digest: str,
    ) -> None:
        self.out_dir = Path(out_dir)
        self.prefix = prefix
        self.role = role
        self.arch = arch
        self.weights = weights
        self.config = config
        self.data_digest = data_digest
        self.config_digest = config_digest
        self.last_good: Optional[Path] = None

    def write(
        self,
        name: str,
        net: torch.nn.Module,
        optimizer: torch.optim.Adam,
        epoch: int,
        phase: TrainingPhase,
    ) -> Path:
        manifest = CheckpointManifest(
            format_version="",
            role=self.role,
            architecture=self.arch,
            epoch=epoch,
            seed=self.config.seed,
            phase=phase,
            loss_weights=self.weights,
            train_config=self.config,
            dataset_digest=self.data_digest,
            config_digest=self.config_digest or None,
            optimizer_step=optimizer_step_count(optimizer),
        )
        return save_checkpoint(
            self.out_dir / f"{self.prefix}_{name}.ckpt", collect_state(net, optimizer), manifest
        )

    def rolling(
        self, net: torch.nn.Module, optimizer: torch.optim.Adam, epoch: int, phase: TrainingPhase
    ) -> Path:
        if not all(bool(torch.isfinite(p).all()) for p in net.parameters()):
            raise TrainingDivergedError(
                f"non-finite parameters after epoch {epoch}; "
                f"last good checkpoint: {self.last_good}",
                last_good_checkpoint=self.last_good,
            )
        self.last_good = self.write("last", net, optimizer, epoch, phase)
        return self.last_good


def _resume(
    resume_from: Optional[PathLike], net: torch.nn.Module, optimizer: torch.optim.Adam
) -> int:
    """Load weights and Adam moments; return the last completed epoch."""
    if resume_from is None:
        return 0
    loaded = load_checkpoint(resume_from)
    net.load_state_dict(loaded.parameters())
    loaded.restore_optimizer(net, optimizer)
    logger.info(
        "Resuming training",
        extra={"checkpoint": str(resume_from), "epoch": loaded.manifest.epoch},
    )
    return loaded.manifest.epoch


# ============================================================================
# Teacher
# ============================================================================


def _teacher_depth_loss(
    net: TeacherNet,
    left: torch.Tensor,
    right: torch.Tensor,
    weights: LossWeights,
    use_semantics: bool,
) -> LossBreakdown:
    output = net(left, right, TaskLabel.DEPTH)
    if not use_semantics:
        return loss_binocular(output.disp_left, output.disp_right, left, right, weights)
    # The network's own segmentation of I_l guides the smoothness term.
    with torch.no_grad():
        predicted = net(left, left, TaskLabel.SEGMENTATION).logits.argmax(dim=1)
    return loss_teacher(
        output.disp_left, output.disp_right, left, right, predicted, weights, net.arch.num_classes
    )


def _teacher_phase(config: TrainConfig, epoch: int) -> TrainingPhase:
    if config.semantic_booster and epoch > config.semantic_start_epoch:
        return TrainingPhase.SEMANTIC
    return TrainingPhase.DEPTH_SEG


def _run_teacher_epoch(
    net: TeacherNet,
    optimizer: torch.optim.Adam,
    depth_set: TeacherTrainingSet,
    seg_set: Optional[TeacherTrainingSet],
    config: TrainConfig,
    weights: LossWeights,
    epoch: int,
    phase: TrainingPhase,
    log: LossLog,
    last_good: Optional[Path],
) -> EpochRecord:
    lr = config.learning_rate_at(epoch)
    _set_learning_rate(optimizer, lr)
    use_semantics = config.semantic_booster and phase in (
        TrainingPhase.SEMANTIC,
        TrainingPhase.OVER_TRAIN,
    )
    depth_mean, seg_mean = _RunningMean(), _RunningMean()

    depth_batches = _loader(depth_set, config, epoch)
    seg_batches: Iterable = _loader(seg_set, config, epoch) if seg_set is not None else []
    net.train()
    # Per-batch interleaving: depth, segmentation, depth, ...
    for depth_batch, seg_batch in zip_longest(depth_batches, seg_batches):
        if depth_batch is not None:
            breakdown = _teacher_depth_loss(
                net, depth_batch["left"], depth_batch["right"], weights, use_semantics
            )
            _step(optimizer, breakdown, epoch, last_good)
            depth_mean.add(breakdown)
        if seg_batch is not None:
            logits = net(seg_batch["left"], seg_batch["left"], TaskLabel.SEGMENTATION).logits
            seg_loss = loss_seg(logits, seg_batch["semantic"])
            breakdown = LossBreakdown(
                total=seg_loss, components={"segmentation": float(seg_loss.detach())}
            )
            _step(optimizer, breakdown, epoch, last_good)
            seg_mean.add(breakdown)

    record = EpochRecord(epoch=epoch, phase=phase, lr=lr)
    if depth_mean.count:
        record.losses[TrainingTask.DEPTH] = depth_mean.mean()
        log.append(
            epoch, phase, TrainingTask.DEPTH, depth_mean.mean(), depth_mean.mean_components(), lr
        )
    if seg_mean.count:
        record.losses[TrainingTask.SEGMENTATION] = seg_mean.mean()
        log.append(
            epoch, phase, TrainingTask.SEGMENTATION, seg_mean.mean(), seg_mean.mean_components(), lr
        )
    logger.info(
        "Teacher epoch complete",
        extra={
            "epoch": epoch,
            "phase": phase.value,
            "lr": lr,
            "depth_loss": record.losses.get(TrainingTask.DEPTH),
            "seg_loss": record.losses.get(TrainingTask.SEGMENTATION),
        },
    )
    return record


def train_teacher(
    samples: Sequence[StereoSample],
    semantic_samples: Sequence[StereoSample],
    config: TrainConfig,
    arch: ArchitectureConfig,
    weights: LossWeights,
    out_dir: PathLike,
    *,
    resume_from: Optional[PathLike] = None,
    config_digest: str = "",
) -> TrainingResult:
    """
    Train the teacher for `config.epochs` epochs with alternating task labels.

    After `semantic_start_epoch` (when the semantic booster is enabled) the
    depth batches optimize the full teacher objective with the network's own
    predicted segmentation of the left image; segmentation batches continue.

    Args:
        samples: Stereo training samples (depth task)
        semantic_samples: Samples with class labels (segmentation task)
        config: Teacher training configuration
        arch: Network architecture
        weights: Loss weights
        out_dir: Directory for checkpoints and the loss log
        resume_from: Checkpoint whose epoch is treated as completed
        config_digest: Provenance digest recorded in manifests

    Returns:
        TrainingResult whose final checkpoint is `teacher_final.ckpt`

    Raises:
        DatasetError: If a dataset is empty
        TrainingDivergedError: On a non-finite loss
    """
    if not samples or not semantic_samples:
        raise DatasetError("teacher training needs non-empty depth and semantic datasets")
    out_dir = Path(out_dir)
    net = init_parameters(config.seed, arch, NetworkRole.TEACHER)
    assert isinstance(net, TeacherNet)
    optimizer = _make_optimizer(net, config)
    start = _resume(resume_from, net, optimizer)

    depth_set = TeacherTrainingSet(samples, seed=config.seed, augment=config.augment)
    seg_set = TeacherTrainingSet(semantic_samples, seed=config.seed + 1, augment=config.augment)
    writer = _CheckpointWriter(
        out_dir, "teacher", NetworkRole.TEACHER, arch, weights, config,
        dataset_digest(samples), config_digest,
    )
    log = LossLog(out_dir / "teacher_loss.csv")
    result = TrainingResult(final_checkpoint=out_dir / "teacher_final.ckpt")

    logger.info(
        "Training teacher",
        extra={"samples": len(samples), "epochs": config.epochs, "start_epoch": start + 1},
    )
    writer.rolling(net, optimizer, start, _teacher_phase(config, max(start, 1)))
    for epoch in range(start + 1, config.epochs + 1):
        phase = _teacher_phase(config, epoch)
        record = _run_teacher_epoch(
            net, optimizer, depth_set, seg_set, config, weights, epoch, phase, log, writer.last_good
        )
        result.history.append(record)
        writer.rolling(net, optimizer, epoch, phase)
        if epoch % config.checkpoint_every == 0:
            result.checkpoints.append(writer.write(f"{epoch:04d}", net, optimizer, epoch, phase))

    final_phase = _teacher_phase(config, config.epochs)
    result.final_checkpoint = writer.write("final", net, optimizer, config.epochs, final_phase)
    result.checkpoints.append(result.final_checkpoint)
    return result


def over_train_teacher(
    checkpoint: PathLike,
    samples: Sequence[StereoSample],
    config: TrainConfig,
    out_dir: PathLike,
    *,
    config_digest: str = "",
) -> TrainingResult:
    """
    Continue depth-task training for `config.over_train_epochs` epochs.

    The result is written to `teacher_overtrain_final.ckpt`; with zero
    over-training epochs the input checkpoint is returned unchanged.
    """
    checkpoint = Path(checkpoint)
    if config.over_train_epochs == 0:
        logger.info("Over-training disabled", extra={"checkpoint": str(checkpoint)})
        return TrainingResult(final_checkpoint=checkpoint, checkpoints=[checkpoint])
    if not samples:
        raise DatasetError("over-training needs a non-empty dataset")

    loaded = load_checkpoint(checkpoint)
    net = loaded.build_network()
    assert isinstance(net, TeacherNet)
    optimizer = _make_optimizer(net, config)
    loaded.restore_optimizer(net, optimizer)
    start = loaded.manifest.epoch

    out_dir = Path(out_dir)
    depth_set = TeacherTrainingSet(samples, seed=config.seed, augment=config.over_train_augment)
    writer = _CheckpointWriter(
        out_dir, "teacher_overtrain", NetworkRole.TEACHER, loaded.manifest.architecture,
        loaded.manifest.loss_weights, config, dataset_digest(samples), config_digest,
    )
    writer.last_good = checkpoint
    log = LossLog(out_dir / "teacher_loss.csv")
    result = TrainingResult(final_checkpoint=out_dir / "teacher_overtrain_final.ckpt")

    logger.info(
        "Over-training teacher",
        extra={"from_epoch": start, "epochs": config.over_train_epochs},
    )
    for epoch in range(start + 1, start + config.over_train_epochs + 1):
        record = _run_teacher_epoch(
            net, optimizer, depth_set, None, config, loaded.manifest.loss_weights,
            epoch, TrainingPhase.OVER_TRAIN, log, writer.last_good,
        )
        result.history.append(record)
        writer.rolling(net, optimizer, epoch, TrainingPhase.OVER_TRAIN)

    result.final_checkpoint = writer.write(
        "final", net, optimizer, start + config.over_train_epochs, TrainingPhase.OVER_TRAIN
    )
    result.checkpoints.append(result.final_checkpoint)
    return result


# ============================================================================
# Pseudo labels
# ============================================================================


def _batches(items: Sequence, size: int) -> Iterable[Sequence]:
    for start in range(0, len(items), size):
        yield items[start : start + size]


def export_pseudo_labels(
    teacher: Union[PathLike, LoadedCheckpoint],
    pairs: Sequence[StereoPair],
    tau: float = 0.01,
    batch_size: int = 8,
) -> PseudoLabelSet:
    """
    Run the teacher over training pairs and collect pseudo labels.

    For each pair: d_t is the left disparity, the mask compares d_l with the
    right disparity warped into the left view, and S_t is the arg-max of the
    segmentation scores on the left image.
    """
    loaded = teacher if isinstance(teacher, LoadedCheckpoint) else load_checkpoint(teacher)
    net = loaded.build_network()
    assert isinstance(net, TeacherNet)
    net.eval()

    labels: List[PseudoLabel] = []
    with torch.no_grad():
        for chunk in _batches(list(pairs), batch_size):
            left = torch.stack([p.image_left for p in chunk])
            right = torch.stack([p.image_right for p in chunk])
            depth = net(left, right, TaskLabel.DEPTH)
            tilde_left, _ = left_right_consistency(depth.disp_left, depth.disp_right)
            masks = occlusion_mask(depth.disp_left, tilde_left, tau)
            classes = net(left, left, TaskLabel.SEGMENTATION).logits.argmax(dim=1)
            for i, pair in enumerate(chunk):
                labels.append(
                    PseudoLabel(
                        index=pair.index,
                        disparity=depth.disp_left[i].clone(),
                        mask=masks[i].clone(),
                        semantic=classes[i].clone(),
                    )
                )

    digest = loaded.manifest.payload_sha256
    coverage = float(torch.stack([label.mask.mean() for label in labels]).mean()) if labels else 0.0
    logger.info(
        "Exported pseudo labels",
        extra={"count": len(labels), "unoccluded_fraction": coverage, "teacher_digest": digest},
    )
    return PseudoLabelSet(labels=labels, teacher_digest=digest)


# ============================================================================
# Student
# ============================================================================


def student_weights(weights: LossWeights, variant: StudentVariant) -> LossWeights:
    """Zero the loss weights a student variant does not use."""
    update = {}
    if not variant.uses_occlusion:
        update["gamma4"] = 0.0
    if not variant.uses_semantics:
        update["gamma5"] = 0.0
    return weights.model_copy(update=update)


def _student_loss(
    net: StudentNet, batch: Dict[str, torch.Tensor], weights: LossWeights, variant: StudentVariant
) -> LossBreakdown:
    left, right = batch["left"], batch["right"]
    disparity = net(left)
    if not variant.uses_pgt:
        return loss_student_photometric(disparity, left, right, weights)
    return loss_student(
        disparity,
        batch["pseudo_disparity"],
        left,
        right,
        batch["mask"],
        batch["pseudo_semantic"],
        weights,
        net.arch.num_classes,
        net.arch.d_max,
    )


def train_student(
    pairs: Sequence[StereoPair],
    pseudo: Optional[PseudoLabelSet],
    config: TrainConfig,
    arch: ArchitectureConfig,
    weights: LossWeights,
    out_dir: PathLike,
    *,
    resume_from: Optional[PathLike] = None,
    config_digest: str = "",
) -> TrainingResult:
    """
    Train the monocular student on pseudo labels.

    The student reads image pairs and pseudo labels only; the right image is
    used solely by the reconstruction terms. The photometric variant needs no
    pseudo labels and ignores `pseudo`.
    """
    if not pairs:
        raise DatasetError("student training needs a non-empty dataset")
    variant = config.variant
    if not variant.uses_pgt:
        pseudo = None
    elif pseudo is None:
        raise DatasetError(f"student variant {variant.value} needs pseudo labels")
    effective = student_weights(weights, variant)
    out_dir = Path(out_dir)

    net = init_parameters(config.seed, arch, NetworkRole.STUDENT)
    assert isinstance(net, StudentNet)
    optimizer = _make_optimizer(net, config)
    start = _resume(resume_from, net, optimizer)

    dataset = StudentTrainingSet(pairs, pseudo, seed=config.seed, augment=config.augment)
    writer = _CheckpointWriter(
        out_dir, "student", NetworkRole.STUDENT, arch, effective, config,
        dataset_digest(pairs), config_digest,
    )
    log = LossLog(out_dir / "student_loss.csv")
    result = TrainingResult(final_checkpoint=out_dir / "student_final.ckpt")

    logger.info(
        "Training student",
        extra={"samples": len(pairs), "epochs": config.epochs, "variant": variant.value},
    )
    writer.rolling(net, optimizer, start, TrainingPhase.STUDENT)
    for epoch in range(start + 1, config.epochs + 1):
        lr = config.learning_rate_at(epoch)
        _set_learning_rate(optimizer, lr)
        running = _RunningMean()
        net.train()
        for batch in _loader(dataset, config, epoch):
            breakdown = _student_loss(net, batch, effective, variant)
            _step(optimizer, breakdown, epoch, writer.last_good)
            running.add(breakdown)

        log.append(
            epoch,
            TrainingPhase.STUDENT,
            TrainingTask.DEPTH,
            running.mean(),
            running.mean_components(),
            lr,
        )
        result.history.append(
            EpochRecord(
                epoch=epoch,
                phase=TrainingPhase.STUDENT,
                lr=lr,
                losses={TrainingTask.DEPTH: running.mean()},
            )
        )
        logger.info(
            "Student epoch complete",
            extra={"epoch": epoch, "lr": lr, "loss": running.mean(), "variant": variant.value},
        )
        writer.rolling(net, optimizer, epoch, TrainingPhase.STUDENT)
        if epoch % config.checkpoint_every == 0:
            result.checkpoints.append(
                writer.write(f"{epoch:04d}", net, optimizer, epoch, TrainingPhase.STUDENT)
            )

    result.final_checkpoint = writer.write(
        "final", net, optimizer, config.epochs, TrainingPhase.STUDENT
    )
    result.checkpoints.append(result.final_checkpoint)
    return result


# ============================================================================
# Evaluation helpers
# ============================================================================


def predict_disparity(
    net: torch.nn.Module, pairs: Sequence[StereoPair], batch_size: int = 8
) -> List[torch.Tensor]:
    """Left-view disparity predictions, one (1, H, W) tensor per pair."""
    net.eval()
    outputs: List[torch.Tensor] = []
    with torch.no_grad():
        for chunk in _batches(list(pairs), batch_size):
            left = torch.stack([p.image_left for p in chunk])
            if isinstance(net, TeacherNet):
                right = torch.stack([p.image_right for p in chunk])
                disparity = net(left, right, TaskLabel.DEPTH).disp_left
            else:
                disparity = net(left)
            outputs.extend(disparity[i] for i in range(len(chunk)))
    return outputs


def evaluate_network(
    net: torch.nn.Module,
    samples: Sequence[StereoSample],
    cap: float = 80.0,
    min_depth: float = 1e-3,
) -> EvalReport:
    """Depth metrics of a network's left disparities against ground truth."""
    if not samples:
        raise DatasetError("cannot evaluate on an empty dataset")
    predictions = predict_disparity(net, [s.pair() for s in samples])
    reports = [
        evaluate_disparity(
            pred, sample.gt_disparity_l, sample.camera, sample.width, cap=cap, min_depth=min_depth
        )
        for pred, sample in zip(predictions, samples)
    ]
    return aggregate_reports(reports)


def _network_for(
    source: Union[PathLike, torch.nn.Module], role: NetworkRole
) -> torch.nn.Module:
    net = source if isinstance(source, torch.nn.Module) else load_checkpoint(source).build_network()
    expected = TeacherNet if role is NetworkRole.TEACHER else StudentNet
    if not isinstance(net, expected):
        raise CheckpointError(f"expected a {role.value} network, got {type(net).__name__}")
    return net


def evaluate_teacher(
    teacher: Union[PathLike, TeacherNet],
    samples: Sequence[StereoSample],
    cap: float = 80.0,
    min_depth: float = 1e-3,
) -> EvalReport:
    """Evaluate the teacher's left disparity on stereo samples."""
    return evaluate_network(_network_for(teacher, NetworkRole.TEACHER), samples, cap, min_depth)


def evaluate_student(
    student: Union[PathLike, StudentNet],
    samples: Sequence[StereoSample],
    cap: float = 80.0,
    min_depth: float = 1e-3,
) -> EvalReport:
    """Evaluate the student from left images only."""
    return evaluate_network(_network_for(student, NetworkRole.STUDENT), samples, cap, min_depth)
