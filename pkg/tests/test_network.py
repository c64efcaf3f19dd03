"""Unit tests for the teacher and student networks."""

import pytest
import torch

from pseudodepth.errors import InvalidInputError, ShapeMismatchError
from pseudodepth.models import NetworkRole, TaskLabel
from pseudodepth.network import (
    StudentNet,
    TeacherNet,
    expected_parameter_count,
    init_parameters,
    student_forward,
    teacher_forward,
)


@pytest.fixture
def images(generator):
    left = torch.rand((2, 3, 16, 32), generator=generator)
    right = torch.rand((2, 3, 16, 32), generator=generator)
    return left, right


@pytest.mark.unit
class TestTeacherNet:
    """Test the task-conditioned teacher."""

    def test_depth_outputs_are_bounded(self, tiny_arch, images):
        net = init_parameters(0, tiny_arch, NetworkRole.TEACHER)
        out = teacher_forward(net, *images, TaskLabel.DEPTH)
        assert out.logits is None
        for disparity in (out.disp_left, out.disp_right):
            assert disparity.shape == (2, 1, 16, 32)
            assert float(disparity.min()) >= tiny_arch.disparity_floor
            assert float(disparity.max()) <= tiny_arch.d_max

    def test_segmentation_outputs_class_scores(self, tiny_arch, images):
        net = init_parameters(0, tiny_arch, NetworkRole.TEACHER)
        out = teacher_forward(net, *images, TaskLabel.SEGMENTATION)
        assert out.disp_left is None
        assert out.logits.shape == (2, tiny_arch.num_classes, 16, 32)

    def test_segmentation_ignores_right_image(self, tiny_arch, images):
        net = init_parameters(0, tiny_arch, NetworkRole.TEACHER)
        left, right = images
        a = teacher_forward(net, left, right, TaskLabel.SEGMENTATION).logits
        b = teacher_forward(net, left, torch.zeros_like(right), TaskLabel.SEGMENTATION).logits
        assert torch.equal(a, b)

    def test_size_not_divisible_by_four_raises(self, tiny_arch):
        net = TeacherNet(tiny_arch)
        image = torch.zeros((1, 3, 10, 32))
        with pytest.raises(ShapeMismatchError):
            net(image, image, TaskLabel.DEPTH)

    def test_mismatched_views_raise(self, tiny_arch):
        net = TeacherNet(tiny_arch)
        with pytest.raises(ShapeMismatchError):
            net(torch.zeros((1, 3, 16, 32)), torch.zeros((1, 3, 16, 16)), TaskLabel.DEPTH)

    def test_non_finite_image_raises(self, tiny_arch):
        net = TeacherNet(tiny_arch)
        image = torch.full((1, 3, 16, 32), float("nan"))
        with pytest.raises(InvalidInputError):
            net(image, image, TaskLabel.DEPTH)


@pytest.mark.unit
class TestStudentNet:
    """Test the monocular student."""

    def test_output_shape_and_bounds(self, tiny_arch, images):
        net = init_parameters(0, tiny_arch, NetworkRole.STUDENT)
        disparity = student_forward(net, images[0])
        assert disparity.shape == (2, 1, 16, 32)
        assert float(disparity.min()) >= tiny_arch.disparity_floor
        assert float(disparity.max()) <= tiny_arch.d_max

    def test_rejects_grayscale(self, tiny_arch):
        with pytest.raises(ShapeMismatchError):
            StudentNet(tiny_arch)(torch.zeros((1, 1, 16, 32)))

    def test_shares_trunk_layout_with_teacher(self, tiny_arch):
        teacher = TeacherNet(tiny_arch).state_dict()
        student = StudentNet(tiny_arch).state_dict()
        shared = [name for name in student if not name.startswith("trunk.stem.0.0.")]
        for name in shared:
            assert teacher[name].shape == student[name].shape


@pytest.mark.unit
class TestInitialization:
    """Test deterministic initialization and parameter counts."""

    @pytest.mark.parametrize("role", list(NetworkRole))
    def test_parameter_count_matches_closed_form(self, tiny_arch, role):
        net = init_parameters(0, tiny_arch, role)
        assert sum(p.numel() for p in net.parameters()) == expected_parameter_count(
            tiny_arch, role
        )

    def test_same_seed_gives_identical_parameters(self, tiny_arch):
        a = init_parameters(5, tiny_arch, NetworkRole.TEACHER).state_dict()
        b = init_parameters(5, tiny_arch, NetworkRole.TEACHER).state_dict()
        assert all(torch.equal(a[name], b[name]) for name in a)

    def test_different_seeds_differ(self, tiny_arch):
        a = init_parameters(5, tiny_arch, NetworkRole.STUDENT).state_dict()
        b = init_parameters(6, tiny_arch, NetworkRole.STUDENT).state_dict()
        assert not all(torch.equal(a[name], b[name]) for name in a)

    def test_global_rng_is_untouched(self, tiny_arch):
        torch.manual_seed(99)
        expected = torch.rand(3)
        torch.manual_seed(99)
        init_parameters(1, tiny_arch, NetworkRole.TEACHER)
        assert torch.equal(torch.rand(3), expected)
