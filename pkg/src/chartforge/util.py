"""Shared helpers: number formatting, JSON extraction, seeds, atomic writes."""

from __future__ import annotations

import decimal
import hashlib
import json
import math
import os
import tempfile


def fmt_number(value: float) -> str:
    """Render a finite number with up to 6 significant digits, no trailing zeros.

    Used both for on-figure value labels and for documentation examples, so the
    text printed on a chart matches the canonical JSON form of the same value.
    """
    if not math.isfinite(value):
        raise ValueError(f"cannot format non-finite value {value!r}")
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    text = f"{value:.6g}"
    if "e" in text or "E" in text:
        text = format(decimal.Decimal(text), "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    return text


def fmt_answer(value: float) -> str:
    """Format a numeric QA answer: at most 2 decimal places, no trailing zeros."""
    if not math.isfinite(value):
        raise ValueError(f"cannot format non-finite value {value!r}")
    text = f"{value:.2f}".rstrip("0").rstrip(".")
    return "0" if text == "-0" else text


def canonical_number(value: float) -> int | float:
    """Reduce a float for canonical JSON: 6 significant digits, ints stay ints."""
    reduced = float(f"{value:.6g}")
    if reduced == int(reduced) and abs(reduced) < 2**53:
        return int(reduced)
    return reduced


def extract_json_object(text: str) -> dict | None:
    """Return the first JSON object decodable from ``text``, or None.

    Scans for brace-delimited candidates, so markdown fences and surrounding
    prose are ignored.
    """
    return _extract(text, "{", dict, last=False)


def extract_last_json_object(text: str) -> dict | None:
    return _extract(text, "{", dict, last=True)


def extract_json_array(text: str) -> list | None:
    """Return the first JSON array decodable from ``text``, or None."""
    return _extract(text, "[", list, last=False)


def _extract(text: str, opener: str, kind: type, last: bool):
    decoder = json.JSONDecoder()
    found = None
    pos = 0
    while True:
        start = text.find(opener, pos)
        if start < 0:
            return found
        try:
            value, end = decoder.raw_decode(text, start)
        except ValueError:
            pos = start + 1
            continue
        if isinstance(value, kind):
            if not last:
                return value
            found = value
        pos = start + max(end - start, 1)


def stable_hash64(*parts) -> int:
    """Deterministic 64-bit hash of the string forms of ``parts``."""
    material = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.blake2b(material, digest_size=8).digest(), "big")


def derive_seed(master_seed: int, figure_index: int, stage_name: str) -> int:
    """Per-figure, per-stage seed derived from the run's master seed."""
    return stable_hash64(master_seed, figure_index, stage_name)


def content_hash64(data: bytes) -> int:
    return int.from_bytes(hashlib.blake2b(data, digest_size=8).digest(), "big")


def atomic_write_text(path: str, text: str) -> None:
    """Write via a temp file in the same directory, then rename."""
    atomic_write_bytes(path, text.encode("utf-8"))


def atomic_write_bytes(path: str, data: bytes) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as handle:
            handle.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
