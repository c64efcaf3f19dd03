"""Unit tests for layered run configuration."""

import os

import pytest

from pseudodepth.config import (
    RESOLVED_CONFIG_NAME,
    PathsConfig,
    RunConfig,
    build_overrides,
    load_run_config,
    parse_override,
)
from pseudodepth.errors import ConfigError
from pseudodepth.models import StudentVariant
from pseudodepth.utils import dump_json, load_json


@pytest.fixture(autouse=True)
def clean_env(monkeypatch):
    """Keep PSD_ variables from the developer's shell out of these tests."""
    for key in list(os.environ):
        if key.upper().startswith("PSD_"):
            monkeypatch.delenv(key, raising=False)


@pytest.mark.unit
class TestOverrides:
    """Test parsing of --set assignments."""

    def test_json_values_are_decoded(self):
        assert parse_override("teacher.epochs=3") == (("teacher", "epochs"), 3)
        assert parse_override("teacher.augment=false") == (("teacher", "augment"), False)
        assert parse_override("teacher.lr_milestones=[2,4]") == (
            ("teacher", "lr_milestones"),
            [2, 4],
        )

    def test_plain_strings_are_kept(self):
        assert parse_override("student.variant=pgt_occ") == (("student", "variant"), "pgt_occ")

    def test_missing_equals_raises(self):
        with pytest.raises(ConfigError):
            parse_override("teacher.epochs")

    def test_empty_key_part_raises(self):
        with pytest.raises(ConfigError):
            parse_override("teacher..epochs=1")

    def test_nested_folding(self):
        overrides = build_overrides(["scene.camera.focal=100", "scene.seed=4", "model.d_max=0.5"])
        assert overrides == {
            "scene": {"camera": {"focal": 100}, "seed": 4},
            "model": {"d_max": 0.5},
        }

    def test_conflicting_overrides_raise(self):
        with pytest.raises(ConfigError):
            build_overrides(["scene.seed=1", "scene.seed.x=2"])


@pytest.mark.unit
class TestLoadRunConfig:
    """Test precedence and validation of configuration layers."""

    def test_defaults(self):
        config = load_run_config()
        assert config.teacher.epochs == 50
        assert config.teacher.semantic_start_epoch == 30
        assert config.student.semantic_booster is False
        assert config.student.over_train_epochs == 0
        assert config.student.variant is StudentVariant.FULL

    def test_file_overrides_defaults(self, tmp_path):
        path = dump_json(tmp_path / "run.json", {"teacher": {"epochs": 7}})
        config = load_run_config(path)
        assert config.teacher.epochs == 7
        assert config.teacher.batch_size == 4

    def test_env_overrides_file(self, tmp_path, monkeypatch):
        path = dump_json(tmp_path / "run.json", {"teacher": {"epochs": 7, "batch_size": 2}})
        monkeypatch.setenv("PSD_TEACHER__EPOCHS", "9")
        config = load_run_config(path)
        assert config.teacher.epochs == 9
        assert config.teacher.batch_size == 2

    def test_cli_overrides_env(self, monkeypatch):
        monkeypatch.setenv("PSD_TEACHER__EPOCHS", "9")
        config = load_run_config(overrides=build_overrides(["teacher.epochs=11"]))
        assert config.teacher.epochs == 11

    def test_unknown_key_is_rejected(self, tmp_path):
        path = dump_json(tmp_path / "run.json", {"teacher": {"epochz": 7}})
        with pytest.raises(ConfigError):
            load_run_config(path)

    def test_unknown_section_is_rejected(self):
        with pytest.raises(ConfigError):
            load_run_config(overrides={"nonsense": {"a": 1}})

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="not found"):
            load_run_config(tmp_path / "nope.json")

    def test_malformed_file(self, tmp_path):
        (tmp_path / "bad.json").write_text("{not json")
        with pytest.raises(ConfigError, match="JSON"):
            load_run_config(tmp_path / "bad.json")

    def test_too_few_classes_for_scene(self):
        with pytest.raises(ConfigError, match="num_classes"):
            load_run_config(overrides={"scene": {"max_objects": 6}, "model": {"num_classes": 5}})

    def test_size_must_be_divisible_by_four(self):
        with pytest.raises(ConfigError, match="divisible"):
            load_run_config(overrides={"scene": {"height": 30}})

    def test_d_max_must_cover_scene(self):
        with pytest.raises(ConfigError, match="d_max"):
            load_run_config(overrides={"model": {"d_max": 0.05}})

    def test_predictions_target_needs_directory(self):
        with pytest.raises(ConfigError, match="predictions_dir"):
            load_run_config(overrides={"eval": {"target": "predictions"}})


@pytest.mark.unit
class TestResolvedConfig:
    """Test provenance helpers."""

    def test_digest_is_stable_and_sensitive(self):
        a = load_run_config()
        assert a.digest() == load_run_config().digest()
        b = load_run_config(overrides={"scene": {"seed": 1}})
        assert a.digest() != b.digest()

    def test_write_resolved_round_trips(self, tmp_path):
        config = load_run_config(overrides={"teacher": {"epochs": 3}})
        path = config.write_resolved(tmp_path)
        assert path.name == RESOLVED_CONFIG_NAME
        reloaded = RunConfig.model_validate(load_json(path))
        assert reloaded.digest() == config.digest()

    def test_teacher_checkpoint_resolution(self, tmp_path):
        paths = PathsConfig(teacher_dir=tmp_path)
        assert paths.resolved_teacher_checkpoint() == tmp_path / "teacher_final.ckpt"
        (tmp_path / "teacher_overtrain_final.ckpt").write_bytes(b"")
        assert paths.resolved_teacher_checkpoint() == tmp_path / "teacher_overtrain_final.ckpt"
        explicit = PathsConfig(teacher_dir=tmp_path, teacher_checkpoint=tmp_path / "x.ckpt")
        assert explicit.resolved_teacher_checkpoint() == tmp_path / "x.ckpt"
