"""Integration tests for teacher/student training, export and evaluation."""

import csv
from unittest.mock import Mock, patch

import pytest
import torch
import torch.nn.functional as F

from pseudodepth.ablation import ORDER_TOLERANCE
from pseudodepth.checkpoint import LoadedCheckpoint, load_checkpoint
from pseudodepth.dataset import StudentTrainingSet
from pseudodepth.errors import CheckpointError, DatasetError, TrainingDivergedError
from pseudodepth.losses import LossBreakdown
from pseudodepth.models import (
    EvalReport,
    NetworkRole,
    StudentVariant,
    TaskLabel,
    TrainConfig,
    TrainingPhase,
    TrainingTask,
)
from pseudodepth.network import TeacherNet, TeacherOutput
from pseudodepth.trainer import (
    LOG_COLUMNS,
    dataset_digest,
    evaluate_student,
    evaluate_teacher,
    export_pseudo_labels,
    over_train_teacher,
    student_weights,
    train_student,
    train_teacher,
)


def _parameters(path):
    return load_checkpoint(path).parameters()


def _assert_same_parameters(a, b):
    pa, pb = _parameters(a), _parameters(b)
    assert pa.keys() == pb.keys()
    for name in pa:
        assert torch.allclose(pa[name], pb[name], atol=1e-6), name


class _NoGroundTruth:
    """Sample view that fails on any ground-truth access."""

    def __init__(self, sample):
        self._sample = sample

    def __getattr__(self, name):
        if name.startswith("gt_"):
            raise AssertionError(f"ground truth {name} was read")
        return getattr(self._sample, name)


def _exact_teacher(samples, num_classes):
    """Checkpoint stand-in whose teacher predicts the ground truth."""

    def forward(left, right, task):
        if task is TaskLabel.DEPTH:
            return TeacherOutput(
                task=task,
                disp_left=torch.stack([s.gt_disparity_l for s in samples]),
                disp_right=torch.stack([s.gt_disparity_r for s in samples]),
            )
        semantic = torch.stack([s.gt_semantic for s in samples])
        logits = F.one_hot(semantic, num_classes).permute(0, 3, 1, 2).float()
        return TeacherOutput(task=task, logits=logits)

    net = Mock(spec=TeacherNet, side_effect=forward)
    loaded = Mock(spec=LoadedCheckpoint)
    loaded.build_network.return_value = net
    loaded.manifest = Mock(payload_sha256="0" * 64)
    return loaded


@pytest.fixture
def steady_config():
    """Constant learning rate, no semantic phase, no augmentation."""
    return TrainConfig(
        epochs=4,
        semantic_booster=False,
        over_train_epochs=0,
        batch_size=2,
        learning_rate=1e-3,
        lr_milestones=[],
        checkpoint_every=4,
        augment=False,
        seed=3,
    )


@pytest.fixture
def teacher_run(tmp_path, tiny_samples, fast_train_config, tiny_arch, loss_weights):
    return train_teacher(
        tiny_samples, tiny_samples, fast_train_config, tiny_arch, loss_weights, tmp_path / "t"
    )


@pytest.fixture
def pairs(tiny_samples):
    return [s.pair() for s in tiny_samples]


@pytest.mark.integration
@pytest.mark.slow
class TestTrainTeacher:
    """Test the teacher stage end to end on a tiny dataset."""

    def test_writes_checkpoints_and_history(self, teacher_run, tmp_path):
        out = tmp_path / "t"
        assert teacher_run.final_checkpoint == out / "teacher_final.ckpt"
        assert (out / "teacher_0001.ckpt").is_file()
        assert (out / "teacher_0002.ckpt").is_file()
        assert (out / "teacher_last.ckpt").is_file()
        assert [r.epoch for r in teacher_run.history] == [1, 2]
        assert [r.phase for r in teacher_run.history] == [
            TrainingPhase.DEPTH_SEG,
            TrainingPhase.SEMANTIC,
        ]
        assert set(teacher_run.history[0].losses) == {
            TrainingTask.DEPTH,
            TrainingTask.SEGMENTATION,
        }

    def test_manifest_records_provenance(self, teacher_run, tiny_samples, fast_train_config):
        manifest = load_checkpoint(teacher_run.final_checkpoint).manifest
        assert manifest.role is NetworkRole.TEACHER
        assert manifest.epoch == 2
        assert manifest.seed == fast_train_config.seed
        assert manifest.dataset_digest == dataset_digest(tiny_samples)
        assert manifest.optimizer_step > 0

    def test_loss_log_rows(self, teacher_run, tmp_path):
        with (tmp_path / "t" / "teacher_loss.csv").open(newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert list(rows[0]) == LOG_COLUMNS
        assert [(r["epoch"], r["task"]) for r in rows] == [
            ("1", "depth"),
            ("1", "segmentation"),
            ("2", "depth"),
            ("2", "segmentation"),
        ]
        # Semantic smoothness only contributes after the semantic phase starts.
        assert rows[0]["semantic"] == ""
        assert float(rows[2]["semantic"]) >= 0.0
        assert float(rows[1]["segmentation"]) > 0.0

    def test_same_seed_is_deterministic(
        self, teacher_run, tmp_path, tiny_samples, fast_train_config, tiny_arch, loss_weights
    ):
        again = train_teacher(
            tiny_samples, tiny_samples, fast_train_config, tiny_arch, loss_weights, tmp_path / "u"
        )
        _assert_same_parameters(teacher_run.final_checkpoint, again.final_checkpoint)

    def test_resume_matches_uninterrupted_run(
        self, teacher_run, tmp_path, tiny_samples, fast_train_config, tiny_arch, loss_weights
    ):
        first = fast_train_config.model_copy(update={"epochs": 1})
        partial = train_teacher(
            tiny_samples, tiny_samples, first, tiny_arch, loss_weights, tmp_path / "r"
        )
        resumed = train_teacher(
            tiny_samples,
            tiny_samples,
            fast_train_config,
            tiny_arch,
            loss_weights,
            tmp_path / "r",
            resume_from=partial.final_checkpoint,
        )
        assert [r.epoch for r in resumed.history] == [2]
        _assert_same_parameters(teacher_run.final_checkpoint, resumed.final_checkpoint)

    def test_divergence_points_to_last_good_checkpoint(
        self, tmp_path, tiny_samples, fast_train_config, tiny_arch, loss_weights
    ):
        nan = LossBreakdown(total=torch.tensor(float("nan")), components={})
        with patch("pseudodepth.trainer.loss_binocular", return_value=nan):
            with pytest.raises(TrainingDivergedError) as exc:
                train_teacher(
                    tiny_samples, tiny_samples, fast_train_config, tiny_arch, loss_weights,
                    tmp_path / "d",
                )
        last_good = exc.value.last_good_checkpoint
        assert last_good == tmp_path / "d" / "teacher_last.ckpt"
        assert load_checkpoint(last_good).manifest.epoch == 0

    def test_empty_semantic_set_raises(
        self, tmp_path, tiny_samples, fast_train_config, tiny_arch, loss_weights
    ):
        with pytest.raises(DatasetError):
            train_teacher(tiny_samples, [], fast_train_config, tiny_arch, loss_weights, tmp_path)

    def test_depth_loss_decreases(
        self, tmp_path, tiny_samples, steady_config, tiny_arch, loss_weights
    ):
        result = train_teacher(
            tiny_samples, tiny_samples, steady_config, tiny_arch, loss_weights, tmp_path
        )
        losses = [r.losses[TrainingTask.DEPTH] for r in result.history]
        assert losses[-1] < losses[0], losses


@pytest.mark.integration
@pytest.mark.slow
class TestOverTrain:
    """Test continued depth-only training."""

    def test_continues_epoch_count(self, teacher_run, tmp_path, tiny_samples, fast_train_config):
        result = over_train_teacher(
            teacher_run.final_checkpoint, tiny_samples, fast_train_config, tmp_path / "t"
        )
        assert result.final_checkpoint == tmp_path / "t" / "teacher_overtrain_final.ckpt"
        manifest = load_checkpoint(result.final_checkpoint).manifest
        assert manifest.epoch == 3
        assert manifest.phase is TrainingPhase.OVER_TRAIN
        assert set(result.history[0].losses) == {TrainingTask.DEPTH}

    def test_zero_epochs_returns_input(
        self, teacher_run, tmp_path, tiny_samples, fast_train_config
    ):
        config = fast_train_config.model_copy(update={"over_train_epochs": 0})
        result = over_train_teacher(teacher_run.final_checkpoint, tiny_samples, config, tmp_path)
        assert result.final_checkpoint == teacher_run.final_checkpoint
        assert not (tmp_path / "teacher_overtrain_final.ckpt").exists()

    def test_training_set_abs_rel_does_not_rise(
        self, teacher_run, tmp_path, tiny_samples, fast_train_config
    ):
        config = fast_train_config.model_copy(update={"over_train_epochs": 3})
        result = over_train_teacher(
            teacher_run.final_checkpoint, tiny_samples, config, tmp_path / "o"
        )
        before = evaluate_teacher(teacher_run.final_checkpoint, tiny_samples).abs_rel
        after = evaluate_teacher(result.final_checkpoint, tiny_samples).abs_rel
        assert after <= before + ORDER_TOLERANCE


@pytest.mark.integration
@pytest.mark.slow
class TestExportPseudoLabels:
    """Test pseudo-label export from a trained teacher."""

    def test_one_label_per_pair(self, teacher_run, pairs, tiny_arch):
        pseudo = export_pseudo_labels(teacher_run.final_checkpoint, pairs, batch_size=3)
        assert len(pseudo) == len(pairs)
        for pair in pairs:
            label = pseudo.get(pair.index)
            assert label.disparity.shape == (1, 32, 64)
            assert float(label.disparity.min()) >= tiny_arch.disparity_floor
            assert set(label.mask.unique().tolist()) <= {0.0, 1.0}
            assert label.semantic.shape == (32, 64)
            assert int(label.semantic.max()) < tiny_arch.num_classes

    def test_digest_identifies_teacher(self, teacher_run, pairs):
        pseudo = export_pseudo_labels(teacher_run.final_checkpoint, pairs)
        manifest = load_checkpoint(teacher_run.final_checkpoint).manifest
        assert pseudo.teacher_digest == manifest.payload_sha256

    def test_export_is_deterministic(self, teacher_run, pairs):
        a = export_pseudo_labels(teacher_run.final_checkpoint, pairs)
        b = export_pseudo_labels(teacher_run.final_checkpoint, pairs)
        assert all(torch.equal(x.disparity, y.disparity) for x, y in zip(a.labels, b.labels))

    def test_mask_matches_ground_truth_for_exact_teacher(self, tiny_samples, tiny_arch):
        loaded = _exact_teacher(tiny_samples, tiny_arch.num_classes)
        pairs = [s.pair() for s in tiny_samples]
        pseudo = export_pseudo_labels(loaded, pairs, batch_size=len(pairs))
        for sample in tiny_samples:
            label = pseudo.get(sample.index)
            agreement = (label.mask == sample.gt_occlusion).float().mean().item()
            assert agreement >= 0.97
            assert torch.equal(label.semantic, sample.gt_semantic)


@pytest.mark.unit
class TestStudentWeights:
    """Test per-variant loss weights."""

    @pytest.mark.parametrize(
        "variant, gamma4, gamma5",
        [
            (StudentVariant.PGT, 0.0, 0.0),
            (StudentVariant.PGT_OCC, 0.05, 0.0),
            (StudentVariant.PGT_SEM, 0.0, 1.0),
            (StudentVariant.FULL, 0.05, 1.0),
        ],
    )
    def test_unused_terms_are_zeroed(self, loss_weights, variant, gamma4, gamma5):
        weights = student_weights(loss_weights, variant)
        assert weights.gamma3 == loss_weights.gamma3
        assert weights.gamma4 == gamma4
        assert weights.gamma5 == gamma5


@pytest.mark.integration
@pytest.mark.slow
class TestTrainStudent:
    """Test the student stage and evaluation helpers."""

    @pytest.fixture
    def student_config(self, fast_train_config):
        return fast_train_config.model_copy(
            update={"semantic_booster": False, "over_train_epochs": 0}
        )

    @pytest.mark.parametrize("variant", list(StudentVariant))
    def test_every_variant_trains(
        self, variant, teacher_run, pairs, student_config, tiny_arch, loss_weights, tmp_path
    ):
        pseudo = export_pseudo_labels(teacher_run.final_checkpoint, pairs)
        config = student_config.model_copy(update={"variant": variant})
        result = train_student(pairs, pseudo, config, tiny_arch, loss_weights, tmp_path / "s")
        manifest = load_checkpoint(result.final_checkpoint).manifest
        assert result.final_checkpoint == tmp_path / "s" / "student_final.ckpt"
        assert manifest.role is NetworkRole.STUDENT
        assert manifest.loss_weights == student_weights(loss_weights, variant)
        assert all(r.phase is TrainingPhase.STUDENT for r in result.history)

    def test_photometric_needs_no_pseudo_labels(
        self, pairs, student_config, tiny_arch, loss_weights, tmp_path
    ):
        config = student_config.model_copy(update={"variant": StudentVariant.PHOTOMETRIC})
        result = train_student(pairs, None, config, tiny_arch, loss_weights, tmp_path)
        assert result.final_checkpoint.is_file()

    def test_pgt_without_pseudo_labels_raises(
        self, pairs, student_config, tiny_arch, loss_weights, tmp_path
    ):
        with pytest.raises(DatasetError, match="pseudo labels"):
            train_student(pairs, None, student_config, tiny_arch, loss_weights, tmp_path)

    def test_loss_decreases(
        self, teacher_run, pairs, steady_config, tiny_arch, loss_weights, tmp_path
    ):
        pseudo = export_pseudo_labels(teacher_run.final_checkpoint, pairs)
        config = steady_config.model_copy(update={"variant": StudentVariant.PGT})
        result = train_student(pairs, pseudo, config, tiny_arch, loss_weights, tmp_path)
        losses = [r.losses[TrainingTask.DEPTH] for r in result.history]
        assert losses[-1] < losses[0], losses

    def test_never_reads_ground_truth(
        self, teacher_run, tiny_samples, student_config, tiny_arch, loss_weights, tmp_path
    ):
        guarded = [_NoGroundTruth(s) for s in tiny_samples]
        pseudo = export_pseudo_labels(teacher_run.final_checkpoint, guarded)
        dataset = StudentTrainingSet(guarded, pseudo, seed=0)
        assert set(dataset[0]) == {
            "index",
            "left",
            "right",
            "pseudo_disparity",
            "mask",
            "pseudo_semantic",
        }
        result = train_student(guarded, pseudo, student_config, tiny_arch, loss_weights, tmp_path)
        assert result.final_checkpoint.is_file()

    def test_student_loss_log_has_distill_column(
        self, teacher_run, pairs, student_config, tiny_arch, loss_weights, tmp_path
    ):
        pseudo = export_pseudo_labels(teacher_run.final_checkpoint, pairs)
        train_student(pairs, pseudo, student_config, tiny_arch, loss_weights, tmp_path)
        with (tmp_path / "student_loss.csv").open(newline="") as handle:
            rows = list(csv.DictReader(handle))
        assert len(rows) == student_config.epochs
        assert all(r["phase"] == "student" and float(r["distill"]) >= 0 for r in rows)

    def test_evaluation_reports(
        self, teacher_run, tiny_samples, pairs, student_config, tiny_arch, loss_weights, tmp_path
    ):
        config = student_config.model_copy(update={"variant": StudentVariant.PHOTOMETRIC})
        student = train_student(pairs, None, config, tiny_arch, loss_weights, tmp_path)
        assert isinstance(evaluate_student(student.final_checkpoint, tiny_samples), EvalReport)
        report = evaluate_teacher(teacher_run.final_checkpoint, tiny_samples)
        assert report.valid_pixel_count == len(tiny_samples) * 32 * 64

    def test_evaluate_student_rejects_teacher(self, teacher_run, tiny_samples):
        with pytest.raises(CheckpointError, match="student"):
            evaluate_student(teacher_run.final_checkpoint, tiny_samples)
