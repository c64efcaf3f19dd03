"""Utility functions shared across the pipeline."""

import hashlib
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Union

import orjson
import torch
from tenacity import retry, retry_if_exception_type, stop_after_attempt, wait_exponential

from pseudodepth.logging_setup import get_logger
from pseudodepth.settings import settings

logger = get_logger(__name__)


def compute_payload_hash(data: Dict[str, Any]) -> str:
    """
    Compute a deterministic hash of a payload.

    Used as the provenance digest of configs and datasets.

    Args:
        data: JSON-serializable dictionary (numpy scalars allowed)

    Returns:
        SHA-256 hash as hex string
    """
    json_bytes = orjson.dumps(
        data,
        option=orjson.OPT_SORT_KEYS | orjson.OPT_SERIALIZE_NUMPY,
    )
    return hashlib.sha256(json_bytes).hexdigest()


def get_current_timestamp() -> str:
    """Get current UTC timestamp in ISO format."""
    return datetime.now(timezone.utc).isoformat()


def configure_torch_runtime() -> None:
    """Apply thread count and determinism switches from settings."""
    torch.set_num_threads(settings.torch_threads)
    if settings.deterministic:
        torch.use_deterministic_algorithms(True)


@retry(
    retry=retry_if_exception_type(OSError),
    stop=stop_after_attempt(settings.max_io_retries),
    wait=wait_exponential(multiplier=settings.io_retry_delay, min=0.1, max=2),
    reraise=True,
)
def _replace(tmp_path: Path, path: Path) -> None:
    os.replace(tmp_path, path)


def atomic_write_bytes(path: Union[str, Path], payload: bytes) -> Path:
    """
    Write bytes to `path` through a temporary file and an atomic rename.

    Readers never observe a partially written artifact.

    Args:
        path: Destination path
        payload: File contents

    Returns:
        The destination path
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp_path = path.with_name(f".{path.name}.tmp")
    tmp_path.write_bytes(payload)
    _replace(tmp_path, path)
    return path


def dump_json(path: Union[str, Path], data: Dict[str, Any]) -> Path:
    """Write a JSON document with sorted keys and indentation."""
    payload = orjson.dumps(
        data,
        option=orjson.OPT_SORT_KEYS | orjson.OPT_INDENT_2 | orjson.OPT_SERIALIZE_NUMPY,
    )
    return atomic_write_bytes(path, payload)


def load_json(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a JSON document."""
    return orjson.loads(Path(path).read_bytes())
