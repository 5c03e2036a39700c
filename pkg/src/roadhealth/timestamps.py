"""Repair and parsing of dashcam overlay timestamps.

OCR output for the burned-in clock is noisy: the time separator ':' comes
back as '.', and the date separators '/' or '-' come back as '1'. This module
rewrites those known misreads back into the canonical ``DD-MM-YYYY HH:MM:SS``
rendering and then parses it strictly. Anything it cannot repair is passed
through untouched so the parse step can reject it and the frame gets counted
as skipped instead of silently inventing a date.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .errors import InvalidDate, MalformedTimestamp

# HH.MM.SS (any mix of '.'/':' separators) not embedded in a longer digit run,
# so the regex cannot chew into a dotted date like "13.08.2025".
_TIME_SEPARATORS = re.compile(r"(?<![\d.])(\d{2})[.:](\d{2})[.:](\d{2})(?!\d)")

# 10-char date token whose separator slots (positions 3 and 6, 1-based) hold a
# misread '1', a '/', or an actual '-', with digits everywhere else. Shorter or
# longer digit runs are deliberately not touched: repairing them would mean
# guessing a date.
_DATE_TOKEN = re.compile(r"^(\d{2})[-/1](\d{2})[-/1](\d{4})$")

_FRACTION = re.compile(r"(\d{2}:\d{2}:\d{2})(?:\.\d+)+")

_CANONICAL = re.compile(r"^(\d{2})-(\d{2})-(\d{4}) (\d{2}):(\d{2}):(\d{2})$")

DEFAULT_ZONE = "IST"


@dataclass(frozen=True)
class FrameTimestamp:
    """A parsed overlay timestamp in the deployment's local zone."""

    day: int
    month: int
    year: int
    hour: int
    minute: int
    second: int
    zone: str = DEFAULT_ZONE

    def render(self) -> str:
        return (
            f"{self.day:02d}-{self.month:02d}-{self.year:04d} "
            f"{self.hour:02d}:{self.minute:02d}:{self.second:02d}"
        )


def repair_ocr_text(raw: str) -> str:
    """Rewrite known OCR misreads into canonical form.

    Applies, in order: time-separator repair ('.' -> ':'), positional date
    separator reconstruction ('1' at the two separator slots of a 10-char
    token), '/' -> '-' normalization, truncation of fractional seconds, and
    whitespace collapse. Never raises; unrepairable text passes through.
    """
    text = _TIME_SEPARATORS.sub(r"\1:\2:\3", raw)

    tokens = []
    for token in text.split():
        m = _DATE_TOKEN.match(token)
        if m:
            token = f"{m.group(1)}-{m.group(2)}-{m.group(3)}"
        tokens.append(token)
    text = " ".join(tokens)

    text = text.replace("/", "-")
    # Truncate, never round: rounding .999 across the second would drift
    # against the whole-second GPS fixes.
    text = _FRACTION.sub(r"\1", text)
    return " ".join(text.split())


def parse_timestamp(normalized: str, zone: str = DEFAULT_ZONE) -> FrameTimestamp:
    """Strictly parse ``DD-MM-YYYY HH:MM:SS`` into a FrameTimestamp.

    Raises MalformedTimestamp on pattern mismatch and InvalidDate when the
    fields do not form a real calendar date/time (leap years honored).
    """
    m = _CANONICAL.match(normalized)
    if not m:
        raise MalformedTimestamp(f"not in DD-MM-YYYY HH:MM:SS form: {normalized!r}")
    day, month, year, hour, minute, second = (int(g) for g in m.groups())
    _validate_calendar(day, month, year, hour, minute, second, normalized)
    return FrameTimestamp(day, month, year, hour, minute, second, zone)


def _validate_calendar(day, month, year, hour, minute, second, original) -> None:
    import datetime as _dt

    try:
        _dt.datetime(year, month, day, hour, minute, second)
    except ValueError as exc:
        raise InvalidDate(f"{original!r}: {exc}") from exc
