"""Line-delimited record encoding shared by the session and revision logs.

One record per line: a compact JSON object, UTF-8, no trailing whitespace,
with fields in fixed order — "v" (schema version), "t" (record type), "ts"
(UTC milliseconds), then the type-specific payload. Every record line ends
with a newline; a final line without one is the signature of truncation.
"""

from __future__ import annotations

import json
import time

from .errors import FormatError

__all__ = ["RECORD_VERSION", "utc_now_ms", "encode_record", "decode_stream"]

RECORD_VERSION = 1


def utc_now_ms() -> int:
    """Current UTC time in milliseconds; the package's default clock."""
    return time.time_ns() // 1_000_000


def encode_record(record_type: str, ts: int, payload: dict) -> str:
    """One record line (without the trailing newline). Payload order is kept."""
    record = {"v": RECORD_VERSION, "t": record_type, "ts": ts}
    record.update(payload)
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def decode_stream(data: bytes) -> list[tuple[dict, int]]:
    """Decode a full record stream into (record, byte_offset) pairs.

    The offset names the first byte of the record's line, so tools can point
    at damage precisely. Raises FormatError for truncation (a final line
    without a newline), non-JSON lines, or records missing the envelope
    fields.
    """
    records: list[tuple[dict, int]] = []
    offset = 0
    while offset < len(data):
        newline = data.find(b"\n", offset)
        if newline == -1:
            raise FormatError("truncated record (no trailing newline)", offset=offset)
        line = data[offset:newline]
        if not line:
            raise FormatError("empty record line", offset=offset)
        try:
            record = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            raise FormatError("record line is not valid JSON", offset=offset) from None
        if not isinstance(record, dict):
            raise FormatError("record is not an object", offset=offset)
        if record.get("v") != RECORD_VERSION:
            raise FormatError(
                f"unsupported record version {record.get('v')!r}", offset=offset
            )
        if not isinstance(record.get("t"), str):
            raise FormatError("record is missing its type tag", offset=offset)
        if not isinstance(record.get("ts"), int):
            raise FormatError("record is missing its timestamp", offset=offset)
        records.append((record, offset))
        offset = newline + 1
    return records
