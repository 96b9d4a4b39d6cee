"""Typed errors raised across the library.

Every error carries a machine-readable ``details`` dict so the CLI can emit
structured error JSON. No function in this package lets NaN escape; degenerate
inputs raise one of these instead.
"""


class IaaError(Exception):
    """Base class for all typed errors."""

    def __init__(self, message, **details):
        super().__init__(message)
        self.details = details

    @property
    def code(self):
        return type(self).__name__


class UnknownCategory(IaaError):
    def __init__(self, field, label):
        super().__init__(f"unknown category {label!r} for field {field!r}",
                         field=field, label=label)


class MissingTrait(IaaError):
    def __init__(self, field):
        super().__init__(f"rater has no value for field {field!r}", field=field)


class OffScaleScore(IaaError):
    def __init__(self, value):
        super().__init__(f"score {value!r} matches no scale value", value=value)


class EmptyGroup(IaaError):
    pass


class SchemaMismatch(IaaError):
    pass


class ScaleMismatch(IaaError):
    pass


class ParseError(IaaError):
    def __init__(self, message, line=None):
        super().__init__(message, line=line)


class DuplicatePair(IaaError):
    def __init__(self, image_id, rater_id):
        super().__init__(f"duplicate (image, rater) pair ({image_id!r}, {rater_id!r})",
                         image_id=image_id, rater_id=rater_id)


class TooFewImages(IaaError):
    pass


class EmptySide(IaaError):
    def __init__(self, side):
        super().__init__(f"user split leaves the {side!r} side empty", side=side)


class EmptySet(IaaError):
    def __init__(self, which):
        super().__init__(f"materialized {which!r} set is empty", which=which)


class EmptyResult(IaaError):
    pass


class GroupSizeBelowTwo(IaaError):
    pass


class ImageTooSmall(IaaError):
    def __init__(self, image_id, n_raters, k_min):
        super().__init__(f"image {image_id!r} has {n_raters} raters, below k_min={k_min}",
                         image_id=image_id, n_raters=n_raters, k_min=k_min)


class DimensionMismatch(IaaError):
    pass


class DegenerateInput(IaaError):
    pass


class UnknownField(IaaError):
    def __init__(self, field):
        super().__init__(f"schema has no field {field!r}", field=field)


class Divergence(IaaError):
    def __init__(self, epoch):
        super().__init__(f"training loss became non-finite at epoch {epoch}", epoch=epoch)
