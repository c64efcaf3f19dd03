"""Pytest configuration and shared fixtures."""

import pytest
import torch
from typing import List

from pseudodepth.models import ArchitectureConfig, LossWeights, SceneConfig, TrainConfig
from pseudodepth.synthdata import StereoSample, generate_dataset


@pytest.fixture
def tiny_scene() -> SceneConfig:
    """Small scene family: 32x64 images, up to three objects."""
    return SceneConfig(
        height=32,
        width=64,
        min_objects=1,
        max_objects=3,
        min_object_size=6,
        max_object_size=20,
        train_samples=4,
        val_samples=2,
        seed=7,
    )


@pytest.fixture
def tiny_samples(tiny_scene: SceneConfig) -> List[StereoSample]:
    """Four rendered training samples."""
    return generate_dataset(tiny_scene, tiny_scene.train_samples)


@pytest.fixture
def tiny_arch(tiny_scene: SceneConfig) -> ArchitectureConfig:
    """Narrow network matching the tiny scene's class count."""
    return ArchitectureConfig(channels=(4, 8, 8), num_classes=tiny_scene.num_classes)


@pytest.fixture
def loss_weights() -> LossWeights:
    return LossWeights()


@pytest.fixture
def fast_train_config() -> TrainConfig:
    """Two epochs with the semantic phase starting after the first."""
    return TrainConfig(
        epochs=2,
        semantic_start_epoch=1,
        over_train_epochs=1,
        batch_size=2,
        learning_rate=1e-3,
        lr_milestones=[1],
        checkpoint_every=1,
        seed=3,
    )


@pytest.fixture
def generator() -> torch.Generator:
    """Seeded torch generator for random test tensors."""
    return torch.Generator().manual_seed(1234)
