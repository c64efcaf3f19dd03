"""Unit tests for utility functions and logging."""

import logging
import os
from datetime import datetime
from unittest.mock import patch

import numpy as np
import orjson
import pytest

from pseudodepth.logging_setup import ConsoleFormatter, StructuredFormatter
from pseudodepth.utils import (
    atomic_write_bytes,
    compute_payload_hash,
    dump_json,
    get_current_timestamp,
    load_json,
)


class TestComputePayloadHash:
    """Test provenance hashing."""

    def test_same_data_produces_same_hash(self):
        data = {"key": "value", "number": 42}
        assert compute_payload_hash(data) == compute_payload_hash(data)

    def test_different_data_produces_different_hash(self):
        assert compute_payload_hash({"seed": 1}) != compute_payload_hash({"seed": 2})

    def test_key_order_does_not_matter(self):
        """Dictionary key order doesn't affect the hash."""
        data1 = {"a": 1, "b": 2, "c": 3}
        data2 = {"c": 3, "a": 1, "b": 2}
        assert compute_payload_hash(data1) == compute_payload_hash(data2)

    def test_numpy_values(self):
        hash_result = compute_payload_hash({"shape": np.array([2, 3]), "scale": np.float64(0.5)})
        assert len(hash_result) == 64  # SHA-256 produces 64 hex chars


class TestTimestamp:
    """Test timestamp helpers."""

    def test_get_current_timestamp_is_utc_iso(self):
        timestamp = get_current_timestamp()
        parsed = datetime.fromisoformat(timestamp)
        assert parsed.tzinfo is not None
        assert parsed.utcoffset().total_seconds() == 0


class TestAtomicWrite:
    """Test atomic artifact writes."""

    def test_creates_parents_and_leaves_no_temp(self, tmp_path):
        path = atomic_write_bytes(tmp_path / "a" / "b" / "file.bin", b"payload")
        assert path.read_bytes() == b"payload"
        assert [p.name for p in path.parent.iterdir()] == ["file.bin"]

    def test_transient_rename_failure_is_retried(self, tmp_path):
        real_replace = os.replace
        calls = []

        def flaky(src, dst):
            calls.append(dst)
            if len(calls) == 1:
                raise OSError("busy")
            real_replace(src, dst)

        with patch("pseudodepth.utils.os.replace", side_effect=flaky):
            atomic_write_bytes(tmp_path / "f.bin", b"x")
        assert len(calls) == 2
        assert (tmp_path / "f.bin").read_bytes() == b"x"

    def test_persistent_failure_is_raised(self, tmp_path):
        with patch("pseudodepth.utils.os.replace", side_effect=OSError("read-only")):
            with pytest.raises(OSError):
                atomic_write_bytes(tmp_path / "f.bin", b"x")


class TestJson:
    """Test JSON helpers."""

    def test_round_trip_with_sorted_keys(self, tmp_path):
        path = dump_json(tmp_path / "c.json", {"b": 1, "a": [1.5, 2]})
        assert load_json(path) == {"a": [1.5, 2], "b": 1}
        assert path.read_text().index('"a"') < path.read_text().index('"b"')


class TestFormatters:
    """Test structured and console log formatting."""

    def _record(self, **extra):
        record = logging.LogRecord("pseudodepth.test", logging.INFO, __file__, 1, "hello", (), None)
        for key, value in extra.items():
            setattr(record, key, value)
        return record

    def test_structured_formatter_includes_extras(self, tmp_path):
        line = StructuredFormatter().format(self._record(epoch=3, path=tmp_path))
        payload = orjson.loads(line)
        assert payload["message"] == "hello"
        assert payload["severity"] == "INFO"
        assert payload["epoch"] == 3
        assert payload["path"] == str(tmp_path)

    def test_console_formatter_appends_key_values(self):
        line = ConsoleFormatter().format(self._record(epoch=3))
        assert "hello" in line
        assert line.endswith("| epoch=3")
