"""
Exception hierarchy for BWT/LCP construction and merging.

Every error carries the process exit code the command line front end uses
when it reports the failure.  Library code raises; only the CLI converts
exceptions into exit codes.
"""

from __future__ import annotations


class GapBwtError(Exception):
    """Base class for all library errors."""

    exit_code: int = 2


class ReservedByte(GapBwtError):
    """Input text contains byte 0x00 or 0x01, which are reserved for sentinels."""

    def __init__(self, position: int, value: int) -> None:
        super().__init__(f"reserved byte 0x{value:02x} at offset {position}")
        self.position = position
        self.value = value


class LengthMismatch(GapBwtError):
    """Two arrays that must describe the same text have different lengths."""


class CountMismatch(GapBwtError):
    """Input BWTs do not agree on the number of strings or sentinels."""


class MalformedBwt(GapBwtError):
    """A symbol sequence is not the BWT of any single string."""


class FormatError(GapBwtError):
    """A .bwt or .lcp file is truncated, has a bad magic or an inconsistent header."""


class ConfigError(GapBwtError):
    """Configuration file does not match its schema."""


class NonConvergence(GapBwtError):
    """A merge did not reach its fixed point within the phase limit."""

    exit_code = 3


class NotConverged(GapBwtError):
    """Finalization was requested while active positions remain."""

    exit_code = 3


class VerificationFailed(GapBwtError):
    """Merged output differs from the brute-force oracle."""

    exit_code = 3

    def __init__(self, what: str, index: int) -> None:
        super().__init__(f"{what} differs from oracle at index {index}")
        self.what = what
        self.index = index
