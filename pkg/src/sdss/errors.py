"""Exception types shared across the toolkit."""
from __future__ import annotations


class SdssError(Exception):
    """Base class for all toolkit errors."""


class UnmappedLabel(SdssError):
    def __init__(self, raw_id: int, pixel_index: int):
        self.raw_id = int(raw_id)
        self.pixel_index = int(pixel_index)
        super().__init__(f"raw label {self.raw_id} has no mapping entry (first at pixel {self.pixel_index})")


class DimensionMismatch(SdssError):
    pass


class ClassCountMismatch(SdssError):
    pass


class UnnormalizedInput(SdssError):
    pass


class EmptyImage(SdssError):
    pass


class InvalidPercent(SdssError):
    pass


class BadImage(SdssError):
    pass


class UnsupportedBitDepth(SdssError):
    pass


class ClassOutOfRange(SdssError):
    def __init__(self, value: int, num_classes: int, pixel_index: int):
        self.value = int(value)
        self.num_classes = int(num_classes)
        self.pixel_index = int(pixel_index)
        super().__init__(
            f"label value {self.value} outside [0, {self.num_classes - 1}] (first at pixel {self.pixel_index})"
        )


class BadMagic(SdssError):
    pass


class ChecksumMismatch(SdssError):
    pass


class TruncatedFile(SdssError):
    pass


class MalformedLine(SdssError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = int(line_no)
        super().__init__(f"line {self.line_no}: {reason}")


class DuplicateId(SdssError):
    def __init__(self, image_id: str):
        self.image_id = image_id
        super().__init__(f"duplicate image id {image_id!r}")


class InfeasibleSpec(SdssError):
    pass


class StrictAbort(SdssError):
    """Raised when a per-entry load failure occurs under strict streaming."""


class ConfigError(SdssError):
    """Bad or inconsistent configuration (CLI exit code 2)."""
