"""Score scales, score distributions, trait schemas and the one-hot encoding.

A score distribution is a probability vector over an ordered score scale.
A trait vector concatenates per-field blocks: categorical and binned-numeric
fields contribute a one-hot block, scalar fields a single normalized entry.
Group averages of trait vectors keep the block structure (each distributional
block still sums to 1), which is what makes the convex-hull geometry checks
in :mod:`iaalab.theory` meaningful.

All types are immutable values; all operations are pure functions.
"""

from dataclasses import dataclass, field
from typing import Union

import numpy as np

from .errors import (
    EmptyGroup,
    MissingTrait,
    OffScaleScore,
    ScaleMismatch,
    SchemaMismatch,
    UnknownCategory,
    UnknownField,
)

SUM_TOL = 1e-9
SNAP_TOL = 1e-6


# ---------------------------------------------------------------------------
# Score scales and score distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScoreScale:
    """Ordered list of real score levels, e.g. 0.5 .. 5.0 in steps of 0.5."""

    values: tuple

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 2:
            raise ValueError("score scale needs at least 2 levels")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ValueError("score scale values must be strictly increasing")

    @property
    def bin_count(self):
        return len(self.values)

    def as_array(self):
        return np.asarray(self.values, dtype=float)

    def index_of(self, score, tol=SNAP_TOL):
        """Snap a raw score to its bin index; OffScaleScore if none is within tol."""
        arr = self.as_array()
        k = int(np.argmin(np.abs(arr - score)))
        if abs(arr[k] - score) > tol:
            raise OffScaleScore(score)
        return k

    def quantize(self, raw):
        """Nearest scale value for each raw score, ties resolved to the lower value."""
        arr = self.as_array()
        raw = np.atleast_1d(np.asarray(raw, dtype=float))
        idx = np.abs(arr[None, :] - raw[:, None]).argmin(axis=1)
        return arr[idx]


def para_scale():
    """0.5 .. 5.0 in steps of 0.5 (10 bins)."""
    return ScoreScale(tuple(0.5 * k for k in range(1, 11)))


def lapis_scale():
    """0 .. 10 in unit steps (11 bins)."""
    return ScoreScale(tuple(float(k) for k in range(11)))


@dataclass(frozen=True)
class ScoreDistribution:
    """Probability vector over a score scale."""

    mass: np.ndarray
    scale: ScoreScale

    def __post_init__(self):
        m = np.asarray(self.mass, dtype=float).copy()
        if m.ndim != 1 or m.shape[0] != self.scale.bin_count:
            raise ScaleMismatch("mass length does not match scale bin count")
        if np.any(m < 0):
            raise ValueError("score distribution mass must be non-negative")
        if abs(m.sum() - 1.0) > SUM_TOL:
            raise ValueError(f"score distribution mass sums to {m.sum()!r}, not 1")
        m.setflags(write=False)
        object.__setattr__(self, "mass", m)

    @property
    def is_one_hot(self):
        return np.count_nonzero(self.mass) == 1 and np.isclose(self.mass.max(), 1.0)


def one_hot_score(score, scale):
    """The delta distribution of a single rater's score."""
    mass = np.zeros(scale.bin_count)
    mass[scale.index_of(score)] = 1.0
    return ScoreDistribution(mass, scale)


def assemble_score_distribution(scores, scale):
    """Empirical score distribution of a group: per-bin counts over n."""
    scores = list(scores)
    if not scores:
        raise EmptyGroup("cannot assemble a distribution from zero scores")
    counts = np.zeros(scale.bin_count)
    for s in scores:
        counts[scale.index_of(s)] += 1.0
    return ScoreDistribution(counts / len(scores), scale)


def mean_score(dist, scale=None):
    """Expected score under the distribution."""
    scale = scale or dist.scale
    if scale.values != dist.scale.values:
        raise ScaleMismatch("distribution is defined on a different scale")
    return float(dist.mass @ scale.as_array())


# ---------------------------------------------------------------------------
# Trait schemas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CategoricalField:
    name: str
    categories: tuple

    def __post_init__(self):
        object.__setattr__(self, "categories", tuple(self.categories))
        if len(self.categories) < 2:
            raise ValueError(f"field {self.name!r} needs at least 2 categories")
        if len(set(self.categories)) != len(self.categories):
            raise ValueError(f"field {self.name!r} has duplicate categories")

    @property
    def width(self):
        return len(self.categories)

    @property
    def distributional(self):
        return True


@dataclass(frozen=True)
class NumericField:
    """Numeric trait one-hot encoded into equal-width bins over [min, max]."""

    name: str
    min: float
    max: float
    bins: int

    def __post_init__(self):
        if self.min >= self.max:
            raise ValueError(f"field {self.name!r} needs min < max")
        if self.bins < 2:
            raise ValueError(f"field {self.name!r} needs bins >= 2")

    @property
    def width(self):
        return self.bins

    @property
    def distributional(self):
        return True

    def bin_index(self, value):
        v = min(max(float(value), self.min), self.max)
        k = int(np.floor((v - self.min) / (self.max - self.min) * self.bins))
        return min(k, self.bins - 1)


@dataclass(frozen=True)
class ScalarField:
    """Numeric trait kept as a single entry, min-max normalized to [0, 1].

    This is the conventional (non-distributional) encoding; its block is
    exempt from the sums-to-1 invariant that one-hot blocks carry.
    """

    name: str
    min: float
    max: float

    def __post_init__(self):
        if self.min >= self.max:
            raise ValueError(f"field {self.name!r} needs min < max")

    @property
    def width(self):
        return 1

    @property
    def distributional(self):
        return False

    def normalize(self, value):
        v = min(max(float(value), self.min), self.max)
        return (v - self.min) / (self.max - self.min)


TraitField = Union[CategoricalField, NumericField, ScalarField]


@dataclass(frozen=True)
class TraitSchema:
    """Ordered trait fields; field order determines the block layout bit-exactly."""

    fields: tuple

    def __post_init__(self):
        object.__setattr__(self, "fields", tuple(self.fields))
        names = [f.name for f in self.fields]
        if len(set(names)) != len(names):
            raise ValueError("schema field names must be unique")
        if not self.fields:
            raise ValueError("schema needs at least one field")

    @property
    def total_dim(self):
        return sum(f.width for f in self.fields)

    @property
    def field_names(self):
        return tuple(f.name for f in self.fields)

    def field(self, name):
        for f in self.fields:
            if f.name == name:
                return f
        raise UnknownField(name)

    def slices(self):
        """Mapping field name -> slice into the concatenated vector."""
        out, offset = {}, 0
        for f in self.fields:
            out[f.name] = slice(offset, offset + f.width)
            offset += f.width
        return out

    def to_jsonable(self):
        fields = []
        for f in self.fields:
            if isinstance(f, CategoricalField):
                fields.append({"name": f.name, "kind": "categorical",
                               "categories": list(f.categories)})
            elif isinstance(f, NumericField):
                fields.append({"name": f.name, "kind": "numeric",
                               "min": f.min, "max": f.max, "bins": f.bins})
            else:
                fields.append({"name": f.name, "kind": "scalar",
                               "min": f.min, "max": f.max})
        return {"fields": fields}

    @staticmethod
    def from_jsonable(obj):
        fields = []
        for fo in obj["fields"]:
            kind = fo["kind"]
            if kind == "categorical":
                fields.append(CategoricalField(fo["name"], tuple(fo["categories"])))
            elif kind == "numeric":
                fields.append(NumericField(fo["name"], float(fo["min"]),
                                           float(fo["max"]), int(fo["bins"])))
            elif kind == "scalar":
                fields.append(ScalarField(fo["name"], float(fo["min"]), float(fo["max"])))
            else:
                raise ValueError(f"unknown field kind {kind!r}")
        return TraitSchema(tuple(fields))


def schema_dimension(schema):
    """Total width of the concatenated trait encoding."""
    return schema.total_dim


# ---------------------------------------------------------------------------
# Raters and trait vectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Rater:
    id: str
    trait_values: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "trait_values", dict(self.trait_values))


class _TraitArray:
    """Shared layout/validation for individual vectors and group averages."""

    __slots__ = ("blocks", "schema")

    def __init__(self, blocks, schema, _check=True):
        blocks = np.asarray(blocks, dtype=float).copy()
        if blocks.shape != (schema.total_dim,):
            raise SchemaMismatch(
                f"expected {schema.total_dim} entries, got {blocks.shape}")
        if _check:
            if np.any(blocks < -SUM_TOL) or np.any(blocks > 1 + SUM_TOL):
                raise ValueError("trait entries must lie in [0, 1]")
            for f, sl in zip(schema.fields, schema.slices().values()):
                if f.distributional and abs(blocks[sl].sum() - 1.0) > SUM_TOL:
                    raise ValueError(f"block {f.name!r} does not sum to 1")
        blocks.setflags(write=False)
        self.blocks = blocks
        self.schema = schema

    def block(self, name):
        return self.blocks[self.schema.slices()[name]]

    def __eq__(self, other):
        return (type(self) is type(other)
                and self.schema == other.schema
                and np.array_equal(self.blocks, other.blocks))


class TraitVector(_TraitArray):
    """One individual's encoded traits: one-hot per distributional block."""


class TraitDistribution(_TraitArray):
    """Group-averaged trait frequencies with the same block layout."""


def encode_trait(rater, schema, missing_policy="reject"):
    """Encode one rater against a schema.

    ``missing_policy`` is "reject" (raise MissingTrait) or "unknown" (route a
    missing value to the field's "unknown" category when it declares one).
    """
    blocks = np.zeros(schema.total_dim)
    slices = schema.slices()
    for f in schema.fields:
        sl = slices[f.name]
        value = rater.trait_values.get(f.name)
        if value is None:
            if (missing_policy == "unknown" and isinstance(f, CategoricalField)
                    and "unknown" in f.categories):
                value = "unknown"
            else:
                raise MissingTrait(f.name)
        if isinstance(f, CategoricalField):
            if value not in f.categories:
                raise UnknownCategory(f.name, value)
            blocks[sl.start + f.categories.index(value)] = 1.0
        elif isinstance(f, NumericField):
            blocks[sl.start + f.bin_index(value)] = 1.0
        else:
            blocks[sl.start] = f.normalize(value)
    return TraitVector(blocks, schema)


def average_trait_vectors(vectors):
    """Arithmetic mean of trait vectors; block sums are preserved at 1."""
    vectors = list(vectors)
    if not vectors:
        raise EmptyGroup("cannot average zero trait vectors")
    schema = vectors[0].schema
    for v in vectors[1:]:
        if v.schema != schema:
            raise SchemaMismatch("trait vectors use different schemas")
    stacked = np.stack([v.blocks for v in vectors])
    return TraitDistribution(stacked.mean(axis=0), schema)


# ---------------------------------------------------------------------------
# Preset schemas for PARA-like and LAPIS-like corpora
# ---------------------------------------------------------------------------

_PARA_CATEGORICAL = (
    CategoricalField("gender", ("female", "male")),
    CategoricalField("age", ("18-21", "22-25", "26-29", "30-34", "35-40")),
    CategoricalField("education", ("junior high", "senior high",
                                   "technical secondary", "junior college",
                                   "university")),
    CategoricalField("photography_experience",
                     ("beginner", "competent", "proficient", "expert")),
    CategoricalField("art_experience",
                     ("beginner", "competent", "proficient", "expert")),
)

_BIG5 = ("big5_openness", "big5_conscientiousness", "big5_extraversion",
         "big5_agreeableness", "big5_neuroticism")

# Big-5 answers are on a 1..5 Likert scale; the corpus itself never states the
# range, so the presets declare it and callers with other exports override it.
_BIG5_RANGE = (1.0, 5.0)

_LAPIS_NATIONALITIES = (
    "British", "South African", "American", "Portuguese", "Hungarian",
    "Malaysian", "Belgian", "Northern Irish", "Polish", "Slovenian",
    "Spanish", "Italian", "Egyptian", "Scottish", "Mexican", "Irish",
    "South Korean", "Greek", "Czech", "Brazilian", "Canadian", "Indian",
    "Ugandan", "Zimbabwean", "Dutch", "Welsh", "French", "Finnish",
    "German", "Bangladeshi", "Lithuanian", "Australian", "Tunisian",
    "Swiss", "Romanian", "Chilean", "Austrian", "Nigerien", "Estonian",
    "Bulgarian", "Turkish", "Vietnamese", "Latvian", "Malawian",
)

_LAPIS_CATEGORICAL = (
    CategoricalField("gender", ("female", "male", "non-binary", "unknown")),
    CategoricalField("colorblind", ("no", "yes")),
    CategoricalField("age", ("18-27", "28-38", "39-49", "50-60", "61-71")),
    CategoricalField("education", ("primary", "secondary", "bachelor",
                                   "master", "doctorate")),
    CategoricalField("nationality", _LAPIS_NATIONALITIES),
)

_VAIAK = tuple(f"vaiak{k}" for k in range(1, 8)) + tuple(f"2vaiak{k}" for k in range(1, 5))
_VAIAK_RANGE = (1.0, 7.0)


def para_onehot_schema():
    """PARA-like schema with Big-5 one-hot binned: 70 dimensions."""
    lo, hi = _BIG5_RANGE
    return TraitSchema(_PARA_CATEGORICAL
                       + tuple(NumericField(n, lo, hi, 10) for n in _BIG5))


def para_conventional_schema():
    """PARA-like schema with Big-5 kept numeric: 25 dimensions."""
    lo, hi = _BIG5_RANGE
    return TraitSchema(_PARA_CATEGORICAL
                       + tuple(ScalarField(n, lo, hi) for n in _BIG5))


def lapis_onehot_schema():
    """LAPIS-like schema with VAIAK scores one-hot binned: 137 dimensions."""
    lo, hi = _VAIAK_RANGE
    return TraitSchema(_LAPIS_CATEGORICAL
                       + tuple(NumericField(n, lo, hi, 7) for n in _VAIAK))


def lapis_conventional_schema():
    """LAPIS-like schema with VAIAK kept numeric: 71 dimensions."""
    lo, hi = _VAIAK_RANGE
    return TraitSchema(_LAPIS_CATEGORICAL
                       + tuple(ScalarField(n, lo, hi) for n in _VAIAK))
