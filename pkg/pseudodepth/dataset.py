"""Dataset directories, pseudo-label sets and torch dataset adapters.

Dataset directory layout:

    index.txt          key=value header (format, config digest, size, camera) + sample ids
    scene.json         scene configuration that produced the samples
    left/NNNN.ppm      left view, 8-bit binary PPM
    right/NNNN.ppm     right view
    disp/NNNN.pfm      left ground-truth disparity, normalized, float32 PFM
    sem/NNNN.pgm       left class ids
    occ/NNNN.pgm       left occlusion mask, 0/255
    disp_r/, sem_r/, occ_r/   right-view ground truth (same formats)

A pseudo-label directory holds disp/, occ/, sem/ and its own index.txt.
"""

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import torch
from torch.utils.data import Dataset

from pseudodepth.errors import DatasetError
from pseudodepth.formats import read_pfm, read_pgm, read_ppm, write_pfm, write_pgm, write_ppm
from pseudodepth.logging_setup import get_logger
from pseudodepth.models import CameraModel
from pseudodepth.synthdata import (
    StereoPair,
    StereoSample,
    adjust_colors,
    augment,
    draw_color_params,
)
from pseudodepth.utils import atomic_write_bytes

logger = get_logger(__name__)

PathLike = Union[str, Path]

DATASET_FORMAT = "1"
INDEX_FILE = "index.txt"


def sample_name(index: int) -> str:
    return f"{index:04d}"


# ============================================================================
# Index files
# ============================================================================


@dataclass
class DatasetIndex:
    """Parsed index.txt."""

    header: Dict[str, str]
    sample_ids: List[int]

    @property
    def count(self) -> int:
        return int(self.header["count"])

    def camera(self) -> CameraModel:
        return CameraModel(
            baseline=float(self.header["baseline"]), focal=float(self.header["focal"])
        )


def write_index(directory: Path, header: Dict[str, object], sample_ids: Sequence[int]) -> Path:
    lines = ["# pseudodepth index"]
    lines += [f"{key}={value}" for key, value in header.items()]
    lines.append(f"count={len(sample_ids)}")
    lines += [f"sample={sample_name(i)}" for i in sample_ids]
    return atomic_write_bytes(directory / INDEX_FILE, ("\n".join(lines) + "\n").encode("utf-8"))


def read_index(directory: PathLike) -> DatasetIndex:
    """
    Parse and validate an index file.

    Raises:
        DatasetError: If the file is missing, malformed or its count disagrees
            with the listed samples
    """
    path = Path(directory) / INDEX_FILE
    if not path.is_file():
        raise DatasetError("missing index file", path)
    header: Dict[str, str] = {}
    sample_ids: List[int] = []
    for line_no, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise DatasetError(f"malformed line {line_no} in index", path)
        if key == "sample":
            try:
                sample_ids.append(int(value))
            except ValueError as e:
                raise DatasetError(f"bad sample id {value!r} in index", path) from e
        else:
            header[key] = value
    if header.get("format") != DATASET_FORMAT:
        raise DatasetError(f"unsupported index format {header.get('format')!r}", path)
    if "count" not in header or int(header["count"]) != len(sample_ids):
        raise DatasetError(
            f"index count {header.get('count')} disagrees with {len(sample_ids)} listed samples",
            path,
        )
    return DatasetIndex(header=header, sample_ids=sample_ids)


# ============================================================================
# Stereo datasets
# ============================================================================


def _image(tensor: torch.Tensor) -> np.ndarray:
    return tensor.detach().cpu().numpy().transpose(1, 2, 0)


def _plane(tensor: torch.Tensor) -> np.ndarray:
    return tensor.detach().cpu().numpy().reshape(tensor.shape[-2:])


def _mask_pgm(tensor: torch.Tensor) -> np.ndarray:
    return (_plane(tensor) > 0.5).astype(np.uint8) * 255


def _plane_tensor(array: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(array.copy())[None]


def _mask_tensor(pgm: np.ndarray) -> torch.Tensor:
    return torch.from_numpy((pgm > 127).astype(np.float32))[None]


def write_dataset(
    samples: Sequence[StereoSample],
    directory: PathLike,
    config_digest: str = "",
) -> Path:
    """
    Persist samples in the documented directory layout.

    Returns:
        The dataset directory
    """
    directory = Path(directory)
    if not samples:
        raise DatasetError("refusing to write an empty dataset", directory)
    first = samples[0]
    for sample in samples:
        name = sample_name(sample.index)
        write_ppm(directory / "left" / f"{name}.ppm", _image(sample.image_left))
        write_ppm(directory / "right" / f"{name}.ppm", _image(sample.image_right))
        write_pfm(directory / "disp" / f"{name}.pfm", _plane(sample.gt_disparity_l))
        write_pgm(directory / "sem" / f"{name}.pgm", sample.gt_semantic.numpy())
        write_pgm(directory / "occ" / f"{name}.pgm", _mask_pgm(sample.gt_occlusion))
        if sample.gt_disparity_r is not None:
            write_pfm(directory / "disp_r" / f"{name}.pfm", _plane(sample.gt_disparity_r))
        if sample.gt_semantic_r is not None:
            write_pgm(directory / "sem_r" / f"{name}.pgm", sample.gt_semantic_r.numpy())
        if sample.gt_occlusion_r is not None:
            write_pgm(directory / "occ_r" / f"{name}.pgm", _mask_pgm(sample.gt_occlusion_r))

    write_index(
        directory,
        {
            "format": DATASET_FORMAT,
            "kind": "stereo",
            "config_digest": config_digest,
            "height": first.height,
            "width": first.width,
            "baseline": repr(first.camera.baseline),
            "focal": repr(first.camera.focal),
        },
        [s.index for s in samples],
    )
    logger.info("Wrote dataset", extra={"directory": str(directory), "count": len(samples)})
    return directory


def _read_sized(
    path: Path, reader: Callable[[Path], np.ndarray], size: Tuple[int, int]
) -> np.ndarray:
    array = reader(path)
    if array.shape[:2] != size:
        raise DatasetError(
            f"size {array.shape[0]}x{array.shape[1]} disagrees with index header "
            f"{size[0]}x{size[1]}",
            path,
        )
    return array


def _optional(
    path: Path, reader: Callable[[Path], np.ndarray], size: Tuple[int, int]
) -> Optional[np.ndarray]:
    return _read_sized(path, reader, size) if path.is_file() else None


def read_dataset(directory: PathLike) -> List[StereoSample]:
    """
    Load every sample listed in index.txt.

    Raises:
        DatasetError: Naming the first missing or malformed file, including
            any file whose size disagrees with the index header
    """
    directory = Path(directory)
    index = read_index(directory)
    camera = index.camera()
    size = (int(index.header["height"]), int(index.header["width"]))
    samples = []
    for sample_id in index.sample_ids:
        name = sample_name(sample_id)
        left = _read_sized(directory / "left" / f"{name}.ppm", read_ppm, size)
        right = _read_sized(directory / "right" / f"{name}.ppm", read_ppm, size)
        disp = _read_sized(directory / "disp" / f"{name}.pfm", read_pfm, size)
        sem = _read_sized(directory / "sem" / f"{name}.pgm", read_pgm, size)
        occ = _read_sized(directory / "occ" / f"{name}.pgm", read_pgm, size)
        disp_r = _optional(directory / "disp_r" / f"{name}.pfm", read_pfm, size)
        sem_r = _optional(directory / "sem_r" / f"{name}.pgm", read_pgm, size)
        occ_r = _optional(directory / "occ_r" / f"{name}.pgm", read_pgm, size)
        samples.append(
            StereoSample(
                index=sample_id,
                image_left=torch.from_numpy(left.transpose(2, 0, 1).astype(np.float32)),
                image_right=torch.from_numpy(right.transpose(2, 0, 1).astype(np.float32)),
                gt_disparity_l=_plane_tensor(disp),
                gt_semantic=torch.from_numpy(sem.astype(np.int64)),
                gt_occlusion=_mask_tensor(occ),
                camera=camera,
                gt_disparity_r=None if disp_r is None else _plane_tensor(disp_r),
                gt_semantic_r=None if sem_r is None else torch.from_numpy(sem_r.astype(np.int64)),
                gt_occlusion_r=None if occ_r is None else _mask_tensor(occ_r),
            )
        )
    logger.info("Read dataset", extra={"directory": str(directory), "count": len(samples)})
    return samples


def read_disparities(directory: PathLike) -> Dict[int, torch.Tensor]:
    """Read only disp/NNNN.pfm files listed in the index, keyed by sample id."""
    directory = Path(directory)
    index = read_index(directory)
    return {
        sample_id: _plane_tensor(read_pfm(directory / "disp" / f"{sample_name(sample_id)}.pfm"))
        for sample_id in index.sample_ids
    }


# ============================================================================
# Pseudo labels
# ============================================================================


@dataclass
class PseudoLabel:
    """Teacher-produced supervision for one training sample."""

    index: int
    disparity: torch.Tensor  # (1, H, W)
    mask: torch.Tensor  # (1, H, W), 1 = un-occluded
    semantic: torch.Tensor  # (H, W) int64


@dataclass
class PseudoLabelSet:
    """One pseudo label per training sample."""

    labels: List[PseudoLabel]
    teacher_digest: str = ""
    _by_index: Dict[int, PseudoLabel] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        self._by_index = {label.index: label for label in self.labels}

    def __len__(self) -> int:
        return len(self.labels)

    def get(self, index: int) -> PseudoLabel:
        try:
            return self._by_index[index]
        except KeyError as e:
            raise DatasetError(f"no pseudo label for sample {index}") from e


def write_pseudo_labels(pseudo: PseudoLabelSet, directory: PathLike) -> Path:
    """Persist pseudo labels mirroring the dataset layout."""
    directory = Path(directory)
    if not pseudo.labels:
        raise DatasetError("refusing to write an empty pseudo-label set", directory)
    for label in pseudo.labels:
        name = sample_name(label.index)
        write_pfm(directory / "disp" / f"{name}.pfm", _plane(label.disparity))
        write_pgm(directory / "occ" / f"{name}.pgm", _mask_pgm(label.mask))
        write_pgm(directory / "sem" / f"{name}.pgm", label.semantic.numpy())
    first = pseudo.labels[0]
    write_index(
        directory,
        {
            "format": DATASET_FORMAT,
            "kind": "pseudo",
            "teacher_digest": pseudo.teacher_digest,
            "height": int(first.disparity.shape[-2]),
            "width": int(first.disparity.shape[-1]),
        },
        [label.index for label in pseudo.labels],
    )
    logger.info("Wrote pseudo labels", extra={"directory": str(directory), "count": len(pseudo)})
    return directory


def read_pseudo_labels(directory: PathLike) -> PseudoLabelSet:
    """Load a pseudo-label directory."""
    directory = Path(directory)
    index = read_index(directory)
    labels = []
    for sample_id in index.sample_ids:
        name = sample_name(sample_id)
        disp = read_pfm(directory / "disp" / f"{name}.pfm")
        occ = read_pgm(directory / "occ" / f"{name}.pgm")
        sem = read_pgm(directory / "sem" / f"{name}.pgm")
        labels.append(
            PseudoLabel(
                index=sample_id,
                disparity=_plane_tensor(disp),
                mask=_mask_tensor(occ),
                semantic=torch.from_numpy(sem.astype(np.int64)),
            )
        )
    return PseudoLabelSet(labels=labels, teacher_digest=index.header.get("teacher_digest", ""))


# ============================================================================
# Torch adapters
# ============================================================================


class _EpochSeeded(Dataset):
    """Per-item randomness derived from (seed, epoch, index) only."""

    def __init__(self, seed: int, augment: bool) -> None:
        self.seed = seed
        self.augment = augment
        self.epoch = 0

    def set_epoch(self, epoch: int) -> None:
        self.epoch = epoch

    def _rng(self, item: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, self.epoch, item])


class TeacherTrainingSet(_EpochSeeded):
    """Stereo samples with left-view class ids for the teacher."""

    def __init__(
        self, samples: Sequence[StereoSample], seed: int = 0, augment: bool = True
    ) -> None:
        super().__init__(seed, augment)
        if not samples:
            raise DatasetError("teacher training set is empty")
        self.samples = list(samples)

    def __len__(self) -> int:
        return len(self.samples)

    def __getitem__(self, item: int) -> Dict[str, torch.Tensor]:
        sample = self.samples[item]
        if self.augment:
            sample = augment(sample, self._rng(item))
        return {
            "index": torch.tensor(sample.index),
            "left": sample.image_left,
            "right": sample.image_right,
            "semantic": sample.gt_semantic,
        }


class StudentTrainingSet(_EpochSeeded):
    """
    Image pairs joined with pseudo labels.

    Without a pseudo-label set only the images are returned. Only colour
    jitter is applied: a flip would need right-view pseudo labels.
    """

    def __init__(
        self,
        pairs: Sequence[StereoPair],
        pseudo: Optional[PseudoLabelSet],
        seed: int = 0,
        augment: bool = True,
    ) -> None:
        super().__init__(seed, augment)
        if not pairs:
            raise DatasetError("student training set is empty")
        self.pairs = list(pairs)
        self.pseudo = pseudo
        if pseudo is None:
            return
        for pair in self.pairs:
            label = pseudo.get(pair.index)
            if label.disparity.shape[-2:] != pair.image_left.shape[-2:]:
                raise DatasetError(f"pseudo label {pair.index} does not match its image size")

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, item: int) -> Dict[str, torch.Tensor]:
        pair = self.pairs[item]
        left, right = pair.image_left, pair.image_right
        if self.augment:
            gamma, brightness, colors = draw_color_params(self._rng(item))
            left = adjust_colors(left, gamma, brightness, colors)
            right = adjust_colors(right, gamma, brightness, colors)
        item_dict: Dict[str, torch.Tensor] = {
            "index": torch.tensor(pair.index),
            "left": left,
            "right": right,
        }
        if self.pseudo is not None:
            label = self.pseudo.get(pair.index)
            item_dict["pseudo_disparity"] = label.disparity
            item_dict["mask"] = label.mask
            item_dict["pseudo_semantic"] = label.semantic
        return item_dict
