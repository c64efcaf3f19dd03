"""Versioned checkpoint container.

Layout of a checkpoint file:

    b"PSDCKPT\\n"                magic
    uint64 little-endian         manifest length in bytes
    manifest                     JSON (CheckpointManifest) with a name/shape/offset index
    payload                      concatenated little-endian float32 blocks

Parameter blocks are named `param/<name>`; Adam moments are stored as
`adam/<name>/exp_avg` and `adam/<name>/exp_avg_sq`.
"""

import hashlib
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import orjson
import torch
from packaging.version import InvalidVersion, Version
from pydantic import ValidationError

from pseudodepth.errors import CheckpointError
from pseudodepth.logging_setup import get_logger
from pseudodepth.models import CheckpointManifest
from pseudodepth.network import _DisparityNet, build_network
from pseudodepth.utils import atomic_write_bytes, get_current_timestamp

logger = get_logger(__name__)

MAGIC = b"PSDCKPT\n"
FORMAT_VERSION = "1.0"
_LENGTH = struct.Struct("<Q")
_FLOAT = np.dtype("<f4")

PARAM_PREFIX = "param/"
ADAM_PREFIX = "adam/"

# name, offset, nbytes, shape
_Block = Tuple[str, int, int, Tuple[int, ...]]


@dataclass
class LoadedCheckpoint:
    """Manifest plus named float32 arrays read from a checkpoint."""

    manifest: CheckpointManifest
    tensors: Dict[str, np.ndarray]
    path: Optional[Path] = None

    def parameters(self) -> Dict[str, torch.Tensor]:
        """Parameter tensors keyed by module state-dict name."""
        return {
            name[len(PARAM_PREFIX):]: torch.from_numpy(array.copy())
            for name, array in self.tensors.items()
            if name.startswith(PARAM_PREFIX)
        }

    def build_network(self) -> _DisparityNet:
        """Instantiate the network described by the manifest and load its weights."""
        net = build_network(self.manifest.architecture, self.manifest.role)
        try:
            net.load_state_dict(self.parameters(), strict=True)
        except RuntimeError as e:
            raise CheckpointError(f"parameters do not match the architecture: {e}") from e
        return net

    def restore_optimizer(self, net: torch.nn.Module, optimizer: torch.optim.Adam) -> bool:
        """
        Load Adam moments into `optimizer` for the parameters of `net`.

        Returns:
            True if moments were present and restored
        """
        step = self.manifest.optimizer_step
        if step == 0:
            return False
        for name, param in net.named_parameters():
            try:
                exp_avg = self.tensors[f"{ADAM_PREFIX}{name}/exp_avg"]
                exp_avg_sq = self.tensors[f"{ADAM_PREFIX}{name}/exp_avg_sq"]
            except KeyError as e:
                raise CheckpointError(f"optimizer state missing for {name}") from e
            optimizer.state[param] = {
                "step": torch.tensor(float(step)),
                "exp_avg": torch.from_numpy(exp_avg.copy()),
                "exp_avg_sq": torch.from_numpy(exp_avg_sq.copy()),
            }
        return True


def collect_state(
    net: torch.nn.Module, optimizer: Optional[torch.optim.Adam] = None
) -> Dict[str, torch.Tensor]:
    """Gather parameters (and Adam moments when present) into named tensors."""
    state: Dict[str, torch.Tensor] = {}
    for name, tensor in net.state_dict().items():
        state[f"{PARAM_PREFIX}{name}"] = tensor
    if optimizer is not None:
        for name, param in net.named_parameters():
            moments = optimizer.state.get(param)
            if not moments:
                continue
            state[f"{ADAM_PREFIX}{name}/exp_avg"] = moments["exp_avg"]
            state[f"{ADAM_PREFIX}{name}/exp_avg_sq"] = moments["exp_avg_sq"]
    return state


def optimizer_step_count(optimizer: Optional[torch.optim.Adam]) -> int:
    """Number of Adam steps taken so far (0 for a fresh optimizer)."""
    if optimizer is None:
        return 0
    for moments in optimizer.state.values():
        if "step" in moments:
            return int(moments["step"])
    return 0


def save_checkpoint(
    path: Union[str, Path], tensors: Dict[str, torch.Tensor], manifest: CheckpointManifest
) -> Path:
    """
    Write a checkpoint atomically.

    Args:
        path: Destination file
        tensors: Named tensors (stored as little-endian float32)
        manifest: Metadata; format version, index and digest are filled in here

    Returns:
        The written path
    """
    index = []
    blocks = []
    offset = 0
    for name in sorted(tensors):
        array = tensors[name].detach().cpu().numpy().astype(_FLOAT, copy=False)
        block = np.ascontiguousarray(array).tobytes()
        index.append(
            {"name": name, "shape": list(array.shape), "offset": offset, "nbytes": len(block)}
        )
        blocks.append(block)
        offset += len(block)
    payload = b"".join(blocks)

    manifest = manifest.model_copy(
        update={
            "format_version": FORMAT_VERSION,
            "index": index,
            "payload_sha256": hashlib.sha256(payload).hexdigest(),
            "created_at": manifest.created_at or get_current_timestamp(),
        }
    )
    header = orjson.dumps(manifest.model_dump(mode="json"), option=orjson.OPT_SORT_KEYS)
    atomic_write_bytes(path, MAGIC + _LENGTH.pack(len(header)) + header + payload)
    logger.info(
        "Saved checkpoint",
        extra={"path": str(path), "role": manifest.role.value, "epoch": manifest.epoch},
    )
    return Path(path)


def _check_version(found: str) -> None:
    try:
        version = Version(found)
    except InvalidVersion as e:
        raise CheckpointError(f"invalid checkpoint format version {found!r}") from e
    if version.major != Version(FORMAT_VERSION).major:
        raise CheckpointError(
            f"checkpoint format {found} is incompatible with reader format {FORMAT_VERSION}"
        )


def _parse_index(manifest: CheckpointManifest, path: Path) -> List[_Block]:
    """(name, offset, nbytes, shape) per index entry, each block float32-consistent."""
    blocks: List[_Block] = []
    for entry in manifest.index:
        try:
            name = str(entry["name"])
            offset, nbytes = int(entry["offset"]), int(entry["nbytes"])
            shape = tuple(int(n) for n in entry["shape"])
        except (KeyError, TypeError, ValueError) as e:
            raise CheckpointError(f"malformed index entry {entry!r} in {path}: {e}") from e
        if nbytes != int(np.prod(shape, dtype=np.int64)) * _FLOAT.itemsize or offset < 0:
            raise CheckpointError(
                f"index entry {name} has {nbytes} bytes at offset {offset} "
                f"for shape {shape}: {path}"
            )
        blocks.append((name, offset, nbytes, shape))
    return blocks


def load_checkpoint(path: Union[str, Path]) -> LoadedCheckpoint:
    """
    Read and verify a checkpoint.

    Raises:
        CheckpointError: If the file is missing, truncated, corrupted or of an
            incompatible format version
    """
    path = Path(path)
    if not path.is_file():
        raise CheckpointError(f"checkpoint not found: {path}")
    data = path.read_bytes()

    if not data.startswith(MAGIC):
        raise CheckpointError(f"not a checkpoint file (bad magic): {path}")
    start = len(MAGIC) + _LENGTH.size
    if len(data) < start:
        raise CheckpointError(f"truncated checkpoint header: {path}")
    (header_length,) = _LENGTH.unpack_from(data, len(MAGIC))
    if len(data) < start + header_length:
        raise CheckpointError(f"truncated checkpoint manifest: {path}")

    try:
        raw_manifest = orjson.loads(data[start : start + header_length])
        _check_version(str(raw_manifest.get("format_version", "")))
        manifest = CheckpointManifest.model_validate(raw_manifest)
    except (orjson.JSONDecodeError, ValidationError, AttributeError) as e:
        raise CheckpointError(f"corrupted checkpoint manifest in {path}: {e}") from e

    payload = data[start + header_length :]
    blocks = _parse_index(manifest, path)
    expected = sum(nbytes for _, _, nbytes, _ in blocks)
    if len(payload) != expected:
        raise CheckpointError(
            f"checkpoint payload has {len(payload)} bytes, expected {expected}: {path}"
        )
    if hashlib.sha256(payload).hexdigest() != manifest.payload_sha256:
        raise CheckpointError(f"checkpoint payload digest mismatch: {path}")

    tensors: Dict[str, np.ndarray] = {}
    for name, offset, nbytes, shape in blocks:
        if offset + nbytes > len(payload):
            raise CheckpointError(f"index entry {name} lies outside the payload: {path}")
        block = payload[offset : offset + nbytes]
        tensors[name] = np.frombuffer(block, dtype=_FLOAT).reshape(shape)

    logger.info(
        "Loaded checkpoint",
        extra={"path": str(path), "role": manifest.role.value, "epoch": manifest.epoch},
    )
    return LoadedCheckpoint(manifest=manifest, tensors=tensors, path=path)
