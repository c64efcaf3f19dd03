"""Finite-difference verification of every loss and both network forwards.

Loss checks run `torch.autograd.gradcheck` in float64 on small random
fixtures. Disparities are drawn as whole pixel shifts plus a fraction in
[0.2, 0.8] so that no sample coordinate sits on a bilinear kink. Network
checks compare the directional derivative of a scalar read-out along random
parameter directions with a central difference.
"""

import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Sequence, Tuple

import torch

from pseudodepth.geometry import WarpDirection, warp_image
from pseudodepth.logging_setup import get_logger
from pseudodepth.losses import (
    loss_binocular,
    loss_distill,
    loss_lr,
    loss_reconstruction,
    loss_seg,
    loss_semantic,
    loss_smooth,
    loss_student,
    loss_student_photometric,
    loss_teacher,
    loss_unmo,
    ssim,
)
from pseudodepth.models import (
    ArchitectureConfig,
    GradcheckConfig,
    LossWeights,
    NetworkRole,
    TaskLabel,
)
from pseudodepth.network import TeacherNet, init_parameters

logger = get_logger(__name__)

LossFn = Callable[..., torch.Tensor]


@dataclass
class CheckResult:
    """Outcome of one named check over all fixtures."""

    name: str
    passed: bool
    fixtures: int
    max_error: float = 0.0
    detail: str = ""


@dataclass
class GradcheckReport:
    """Pass/fail results of a gradient-check run."""

    results: List[CheckResult] = field(default_factory=list)
    seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return bool(self.results) and all(r.passed for r in self.results)

    @property
    def failures(self) -> List[CheckResult]:
        return [r for r in self.results if not r.passed]

    def format(self) -> str:
        """Plain-text table, one line per check."""
        width = max((len(r.name) for r in self.results), default=4)
        lines = [f"{'check':<{width}}  status  fixtures  max_error"]
        for r in self.results:
            status = "PASS" if r.passed else "FAIL"
            lines.append(f"{r.name:<{width}}  {status:<6}  {r.fixtures:>8}  {r.max_error:.3e}")
        verdict = "all checks passed" if self.passed else f"{len(self.failures)} check(s) failed"
        lines.append(f"{verdict} in {self.seconds:.1f}s")
        return "\n".join(lines)


# ============================================================================
# Fixtures
# ============================================================================


@dataclass
class Fixture:
    """Random float64 inputs shared by the loss checks."""

    image_left: torch.Tensor
    image_right: torch.Tensor
    disp_left: torch.Tensor
    disp_right: torch.Tensor
    teacher_disp: torch.Tensor
    mask: torch.Tensor
    semantic: torch.Tensor
    logits: torch.Tensor
    num_classes: int


def _disparity(generator: torch.Generator, shape: Tuple[int, ...], width: int) -> torch.Tensor:
    shifts = torch.randint(0, 2, shape, generator=generator).to(torch.float64)
    fraction = 0.2 + 0.6 * torch.rand(shape, generator=generator, dtype=torch.float64)
    return (shifts + fraction) / width


def make_fixture(
    generator: torch.Generator, height: int, width: int, num_classes: int = 4
) -> Fixture:
    """Draw one fixture from `generator`."""
    image_shape = (1, 3, height, width)
    plane_shape = (1, 1, height, width)

    def image() -> torch.Tensor:
        return 0.1 + 0.8 * torch.rand(image_shape, generator=generator, dtype=torch.float64)

    return Fixture(
        image_left=image(),
        image_right=image(),
        disp_left=_disparity(generator, plane_shape, width),
        disp_right=_disparity(generator, plane_shape, width),
        teacher_disp=_disparity(generator, plane_shape, width),
        mask=(torch.rand(plane_shape, generator=generator) > 0.3).to(torch.float64),
        semantic=torch.randint(0, num_classes, (1, height, width), generator=generator),
        logits=torch.randn(
            (1, num_classes, height, width), generator=generator, dtype=torch.float64
        ),
        num_classes=num_classes,
    )


def _loss_cases(
    fixture: Fixture, weights: LossWeights
) -> Dict[str, Tuple[LossFn, Sequence[torch.Tensor]]]:
    """Map check name to (function, differentiable inputs)."""
    f = fixture
    k = f.num_classes
    return {
        "warp_image": (
            lambda src, d: warp_image(src, d, WarpDirection.LEFT_FROM_RIGHT),
            (f.image_right, f.disp_left),
        ),
        "warp_image_right": (
            lambda src, d: warp_image(src, d, WarpDirection.RIGHT_FROM_LEFT),
            (f.image_left, f.disp_right),
        ),
        "ssim": (lambda a, b: ssim(a, b).mean(), (f.image_left, f.image_right)),
        "loss_reconstruction": (
            lambda a, b: loss_reconstruction(a, b, weights.theta),
            (f.image_left, f.image_right),
        ),
        "loss_lr": (loss_lr, (f.disp_left, f.disp_right)),
        "loss_smooth": (loss_smooth, (f.disp_left, f.image_left)),
        "loss_semantic": (
            lambda d: loss_semantic(d, f.semantic, k, weights.semantic_kappa),
            (f.disp_left,),
        ),
        "loss_seg": (lambda logits: loss_seg(logits, f.semantic), (f.logits,)),
        "loss_binocular": (
            lambda dl, dr, il, ir: loss_binocular(dl, dr, il, ir, weights).total,
            (f.disp_left, f.disp_right, f.image_left, f.image_right),
        ),
        "loss_teacher": (
            lambda dl, dr: loss_teacher(
                dl, dr, f.image_left, f.image_right, f.semantic, weights, k
            ).total,
            (f.disp_left, f.disp_right),
        ),
        "loss_distill": (
            lambda ds, dt: loss_distill(ds, dt, 0.3, weights.theta),
            (f.disp_left, f.teacher_disp),
        ),
        "loss_unmo": (
            lambda ds, i_s, i_o: loss_unmo(ds, i_s, i_o, f.mask, weights.theta),
            (f.disp_left, f.image_left, f.image_right),
        ),
        "loss_student": (
            lambda ds: loss_student(
                ds, f.teacher_disp, f.image_left, f.image_right, f.mask, f.semantic, weights, k
            ).total,
            (f.disp_left,),
        ),
        "loss_student_photometric": (
            lambda ds: loss_student_photometric(ds, f.image_left, f.image_right, weights).total,
            (f.disp_left,),
        ),
    }


# ============================================================================
# Checks
# ============================================================================


def _max_error(fn: LossFn, inputs: Sequence[torch.Tensor], eps: float) -> float:
    """Largest absolute analytic vs central-difference discrepancy on a scalar read-out."""
    inputs = [t.detach().clone().requires_grad_(True) for t in inputs]
    out = fn(*inputs)
    readout = out.sum() if out.dim() else out
    grads = torch.autograd.grad(readout, inputs, allow_unused=True)
    worst = 0.0
    with torch.no_grad():
        for tensor, grad in zip(inputs, grads):
            analytic = torch.zeros_like(tensor) if grad is None else grad
            flat = tensor.view(-1)
            for i in range(flat.numel()):
                original = float(flat[i])
                flat[i] = original + eps
                plus = fn(*inputs).sum()
                flat[i] = original - eps
                minus = fn(*inputs).sum()
                flat[i] = original
                numeric = float(plus - minus) / (2 * eps)
                worst = max(worst, abs(numeric - float(analytic.view(-1)[i])))
    return worst


def check_losses(config: GradcheckConfig, weights: LossWeights) -> List[CheckResult]:
    """Run `torch.autograd.gradcheck` on every loss over `config.fixtures` fixtures."""
    generator = torch.Generator().manual_seed(config.seed)
    fixtures = [
        make_fixture(generator, config.height, config.width) for _ in range(config.fixtures)
    ]
    names = list(_loss_cases(fixtures[0], weights))

    results = []
    for name in names:
        passed = True
        worst = 0.0
        detail = ""
        for index, fixture in enumerate(fixtures):
            fn, inputs = _loss_cases(fixture, weights)[name]
            prepared = tuple(t.detach().clone().requires_grad_(True) for t in inputs)
            try:
                ok = torch.autograd.gradcheck(
                    fn, prepared, eps=config.eps, atol=config.atol, rtol=config.rtol
                )
            except RuntimeError as e:
                ok = False
                detail = f"fixture {index}: {str(e).splitlines()[0]}"
            worst = max(worst, _max_error(fn, inputs, config.eps))
            passed = passed and ok
        results.append(
            CheckResult(
                name=name, passed=passed, fixtures=len(fixtures), max_error=worst, detail=detail
            )
        )
        logger.debug(
            "Loss gradient check", extra={"check": name, "passed": passed, "max_error": worst}
        )
    return results


def _directional_error(
    net: torch.nn.Module,
    readout: Callable[[], torch.Tensor],
    generator: torch.Generator,
    eps: float,
) -> float:
    """Relative error between autograd and central difference along a random direction."""
    params = [p for p in net.parameters() if p.requires_grad]
    directions = [torch.randn(p.shape, generator=generator, dtype=p.dtype) for p in params]
    norm = torch.sqrt(sum((v * v).sum() for v in directions))
    directions = [v / norm for v in directions]

    net.zero_grad(set_to_none=True)
    value = readout()
    grads = torch.autograd.grad(value, params)
    analytic = float(sum((g * v).sum() for g, v in zip(grads, directions)))

    with torch.no_grad():
        for p, v in zip(params, directions):
            p.add_(eps * v)
        plus = float(readout())
        for p, v in zip(params, directions):
            p.sub_(2 * eps * v)
        minus = float(readout())
        for p, v in zip(params, directions):
            p.add_(eps * v)
    numeric = (plus - minus) / (2 * eps)
    return abs(analytic - numeric) / max(abs(numeric), abs(analytic), 1e-12)


def check_networks(config: GradcheckConfig, arch: ArchitectureConfig) -> List[CheckResult]:
    """Directional finite-difference checks through both network forwards."""
    generator = torch.Generator().manual_seed(config.seed + 1)
    height, width = config.network_height, config.network_width
    results = []
    for role in (NetworkRole.TEACHER, NetworkRole.STUDENT):
        net = init_parameters(config.seed, arch, role).double()
        readouts: Dict[str, Callable[[], torch.Tensor]] = {}
        left = torch.rand((1, 3, height, width), generator=generator, dtype=torch.float64)
        right = torch.rand((1, 3, height, width), generator=generator, dtype=torch.float64)
        weight = torch.randn((1, 1, height, width), generator=generator, dtype=torch.float64)
        if isinstance(net, TeacherNet):
            teacher = net
            scores = torch.randn(
                (1, arch.num_classes, height, width), generator=generator, dtype=torch.float64
            )

            def teacher_depth() -> torch.Tensor:
                out = teacher(left, right, TaskLabel.DEPTH)
                return (out.disp_left * weight).sum() + (out.disp_right * weight).sum()

            def teacher_segmentation() -> torch.Tensor:
                return (teacher(left, left, TaskLabel.SEGMENTATION).logits * scores).sum()

            readouts["teacher_depth"] = teacher_depth
            readouts["teacher_segmentation"] = teacher_segmentation
        else:
            student = net
            readouts["student"] = lambda: (student(left) * weight).sum()

        for name, readout in readouts.items():
            errors = [
                _directional_error(net, readout, generator, config.eps)
                for _ in range(config.network_directions)
            ]
            worst = max(errors)
            passed = worst < config.network_rtol
            results.append(
                CheckResult(
                    name=f"network:{name}",
                    passed=passed,
                    fixtures=config.network_directions,
                    max_error=worst,
                )
            )
            logger.debug(
                "Network gradient check",
                extra={"check": name, "passed": passed, "max_error": worst},
            )
    return results


def run_gradcheck(
    config: GradcheckConfig, arch: ArchitectureConfig, weights: LossWeights
) -> GradcheckReport:
    """Run all loss and network checks and log the verdict."""
    started = time.perf_counter()
    report = GradcheckReport()
    report.results.extend(check_losses(config, weights))
    report.results.extend(check_networks(config, arch))
    report.seconds = time.perf_counter() - started
    logger.info(
        "Gradient check finished",
        extra={
            "passed": report.passed,
            "checks": len(report.results),
            "failures": [r.name for r in report.failures],
            "seconds": round(report.seconds, 2),
        },
    )
    return report
