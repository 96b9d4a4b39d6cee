"""Annotation tables, GIAA/PIAA sample construction, and leak-free splits.

The split protocol keeps one conventional image split (train/val/test) for
everything; generalization to unseen users additionally partitions raters by
a demographic field. The training set is (train images x train users), the
validation set (val images x train users) so model selection never sees test
demographics, and the test set (test images x test users).
"""

import csv
import logging
from collections import namedtuple
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Rater,
    TraitSchema,
    assemble_score_distribution,
    average_trait_vectors,
    encode_trait,
)
from .errors import (
    DuplicatePair,
    EmptyResult,
    EmptySet,
    EmptySide,
    ParseError,
    TooFewImages,
)

log = logging.getLogger(__name__)

Record = namedtuple("Record", ["image_id", "rater_id", "score"])


class AnnotationTable:
    """Normalized (image, rater, score) records plus rater demographics.

    Immutable after construction; every derived dataset is built from here.
    """

    def __init__(self, images, raters, records, schema, scale,
                 missing_policy="reject"):
        self.schema = schema
        self.scale = scale
        self.missing_policy = missing_policy
        self._features = {img_id: np.asarray(vec, dtype=float)
                          for img_id, vec in images}
        self._raters = {r.id: r for r in raters}
        if len(self._raters) != len(list(raters)):
            raise ParseError("duplicate rater ids")
        self.records = tuple(Record(i, u, float(s)) for i, u, s in records)

        seen = set()
        self._by_image = {}
        self._by_rater = {}
        for idx, rec in enumerate(self.records):
            if rec.image_id not in self._features:
                raise ParseError(f"record references unknown image {rec.image_id!r}")
            if rec.rater_id not in self._raters:
                raise ParseError(f"record references unknown rater {rec.rater_id!r}")
            pair = (rec.image_id, rec.rater_id)
            if pair in seen:
                raise DuplicatePair(*pair)
            seen.add(pair)
            self._by_image.setdefault(rec.image_id, []).append(idx)
            self._by_rater.setdefault(rec.rater_id, []).append(idx)
        for img_id in self._features:
            if img_id not in self._by_image:
                raise ParseError(f"image {img_id!r} has no records")
        self._trait_cache = {}

    # -- lookups ------------------------------------------------------------

    @property
    def image_ids(self):
        return tuple(self._features)

    @property
    def rater_ids(self):
        return tuple(self._raters)

    @property
    def feature_dim(self):
        first = next(iter(self._features.values()))
        return int(first.shape[0])

    def features(self, image_id):
        return self._features[image_id]

    def rater(self, rater_id):
        return self._raters[rater_id]

    def trait_vector(self, rater_id):
        """Encoded traits of one rater; cached. Tests instrument this to
        audit which raters' traits an evaluation actually reads."""
        if rater_id not in self._trait_cache:
            self._trait_cache[rater_id] = encode_trait(
                self.rater(rater_id), self.schema, self.missing_policy)
        return self._trait_cache[rater_id]

    def records_for_image(self, image_id, users=None):
        recs = [self.records[i] for i in self._by_image.get(image_id, ())]
        if users is not None:
            users = set(users)
            recs = [r for r in recs if r.rater_id in users]
        return recs

    def records_for_rater(self, rater_id):
        return [self.records[i] for i in self._by_rater.get(rater_id, ())]


def ingest_annotations(path, schema, scale, features_path=None,
                       missing_policy="reject"):
    """Load an annotation CSV into a normalized table.

    Expected header: ``image_id,user_id,score,<trait columns in schema order>``.
    Feature vectors come from an optional sidecar CSV (``image_id,v0,v1,...``);
    without one, images carry empty feature vectors.
    """
    expected = ["image_id", "user_id", "score"] + list(schema.field_names)
    raters = {}
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != expected:
            raise ParseError(f"header mismatch: expected {expected}, got {header}", line=1)
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(expected):
                raise ParseError(f"expected {len(expected)} columns, got {len(row)}",
                                 line=lineno)
            image_id, user_id = row[0], row[1]
            try:
                score = float(row[2])
            except ValueError:
                raise ParseError(f"score {row[2]!r} is not a number", line=lineno)
            scale.index_of(score)  # raises OffScaleScore early, with context
            traits = _parse_traits(schema, row[3:], lineno)
            if user_id in raters:
                if raters[user_id].trait_values != traits:
                    raise ParseError(
                        f"rater {user_id!r} has inconsistent traits", line=lineno)
            else:
                raters[user_id] = Rater(user_id, traits)
            records.append((image_id, user_id, score))

    image_ids = list(dict.fromkeys(img for img, _, _ in records))
    features = _load_features(features_path, image_ids)
    table = AnnotationTable(
        images=[(img, features[img]) for img in image_ids],
        raters=list(raters.values()),
        records=records,
        schema=schema,
        scale=scale,
        missing_policy=missing_policy,
    )
    # Encode every rater once so bad categories surface at ingest time.
    for rid in table.rater_ids:
        table.trait_vector(rid)
    return table


def _parse_traits(schema, cells, lineno):
    traits = {}
    for f, cell in zip(schema.fields, cells):
        cell = cell.strip()
        if cell == "":
            continue  # missing; encode_trait applies the configured policy
        if hasattr(f, "categories"):
            traits[f.name] = cell
        else:
            try:
                traits[f.name] = float(cell)
            except ValueError:
                raise ParseError(f"field {f.name!r}: {cell!r} is not numeric",
                                 line=lineno)
    return traits


def _load_features(features_path, image_ids):
    if features_path is None:
        return {img: np.zeros(0) for img in image_ids}
    features = {}
    with open(features_path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                features[row[0]] = np.asarray([float(v) for v in row[1:]])
            except ValueError:
                raise ParseError("feature row is not numeric", line=lineno)
    missing = [img for img in image_ids if img not in features]
    if missing:
        raise ParseError(f"no feature vectors for images {missing[:5]!r}")
    return {img: features[img] for img in image_ids}


# ---------------------------------------------------------------------------
# Sample construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GIAASample:
    image_id: str
    feature_vector: np.ndarray
    trait_dist: object
    score_dist: object
    group_size: int
    member_ids: tuple


@dataclass(frozen=True)
class PIAASample:
    image_id: str
    feature_vector: np.ndarray
    trait_vec: object
    score_dist: object
    rater_id: str


def build_giaa(table, user_filter=None):
    """One group sample per image: averaged traits, assembled score distribution.

    Images left with fewer than 2 raters after filtering are dropped (a group
    of one is an individual sample, not a group); the drop count is logged.
    """
    samples = []
    dropped = 0
    for image_id in table.image_ids:
        recs = table.records_for_image(image_id, users=user_filter)
        if len(recs) < 2:
            dropped += 1
            continue
        recs = sorted(recs, key=lambda r: r.rater_id)
        members = tuple(r.rater_id for r in recs)
        trait_dist = average_trait_vectors(
            [table.trait_vector(u) for u in members])
        score_dist = assemble_score_distribution(
            [r.score for r in recs], table.scale)
        samples.append(GIAASample(
            image_id=image_id,
            feature_vector=table.features(image_id),
            trait_dist=trait_dist,
            score_dist=score_dist,
            group_size=len(members),
            member_ids=members,
        ))
    if dropped:
        log.warning("build_giaa dropped %d image(s) with < 2 raters", dropped)
    if not samples:
        raise EmptyResult("no image has >= 2 raters after filtering")
    return samples


def build_piaa(table, user_filter=None):
    """One individual sample per (image, rater) record."""
    from .core import one_hot_score

    users = set(user_filter) if user_filter is not None else None
    samples = []
    for rec in table.records:
        if users is not None and rec.rater_id not in users:
            continue
        samples.append(PIAASample(
            image_id=rec.image_id,
            feature_vector=table.features(rec.image_id),
            trait_vec=table.trait_vector(rec.rater_id),
            score_dist=one_hot_score(rec.score, table.scale),
            rater_id=rec.rater_id,
        ))
    if not samples:
        raise EmptyResult("no records survive the user filter")
    return samples


# ---------------------------------------------------------------------------
# Split protocol
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitManifest:
    train_images: tuple = ()
    val_images: tuple = ()
    test_images: tuple = ()
    train_users: tuple = ()
    test_users: tuple = ()
    mode: str = "shared_users"
    seed: int = 0

    def __post_init__(self):
        for name in ("train_images", "val_images", "test_images",
                     "train_users", "test_users"):
            object.__setattr__(self, name, tuple(sorted(getattr(self, name))))
        img_sets = [set(self.train_images), set(self.val_images), set(self.test_images)]
        for i in range(3):
            for j in range(i + 1, 3):
                if img_sets[i] & img_sets[j]:
                    raise ValueError("image split sets overlap")
        if self.mode == "disjoint_users" and set(self.train_users) & set(self.test_users):
            raise ValueError("disjoint_users manifest has overlapping user sets")

    def to_jsonable(self):
        return {
            "train_images": list(self.train_images),
            "val_images": list(self.val_images),
            "test_images": list(self.test_images),
            "train_users": list(self.train_users),
            "test_users": list(self.test_users),
            "mode": self.mode,
            "seed": self.seed,
        }

    @staticmethod
    def from_jsonable(obj):
        return SplitManifest(
            train_images=tuple(obj["train_images"]),
            val_images=tuple(obj["val_images"]),
            test_images=tuple(obj["test_images"]),
            train_users=tuple(obj["train_users"]),
            test_users=tuple(obj["test_users"]),
            mode=obj["mode"],
            seed=int(obj["seed"]),
        )


def split_images(table, ratios, seed):
    """Deterministic image partition; rounding remainder goes to train."""
    r_train, r_val, r_test = ratios
    if min(r_train, r_val, r_test) <= 0:
        raise ValueError("split ratios must be positive")
    if abs(r_train + r_val + r_test - 1.0) > 1e-9:
        raise ValueError("split ratios must sum to 1")
    ids = list(table.image_ids)
    n = len(ids)
    n_val = round(n * r_val)
    n_test = round(n * r_test)
    n_train = n - n_val - n_test
    if min(n_train, n_val, n_test) < 1:
        raise TooFewImages(f"cannot split {n} images at ratios {ratios}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    shuffled = [ids[i] for i in perm]
    users = tuple(table.rater_ids)
    return SplitManifest(
        train_images=shuffled[:n_train],
        val_images=shuffled[n_train:n_train + n_val],
        test_images=shuffled[n_train + n_val:],
        train_users=users,
        test_users=users,
        mode="shared_users",
        seed=seed,
    )


def split_users_disjoint(table, field, test_values):
    """Partition raters by a trait field: matching values test, the rest train."""
    f = table.schema.field(field)
    test_values = set(test_values)
    if not test_values:
        raise ValueError("test_values must be non-empty")
    test_users, train_users = [], []
    for rid in table.rater_ids:
        value = table.rater(rid).trait_values.get(field)
        key = value if hasattr(f, "categories") else _numeric_key(f, value)
        (test_users if key in test_values else train_users).append(rid)
    if not test_users:
        raise EmptySide("test")
    if not train_users:
        raise EmptySide("train")
    return SplitManifest(train_users=train_users, test_users=test_users,
                         mode="disjoint_users")


def _numeric_key(f, value):
    if value is None:
        return None
    return f.bin_index(value) if hasattr(f, "bin_index") else float(value)


def combine_manifests(image_split, user_split):
    """Image partition from one manifest, user partition from another."""
    return SplitManifest(
        train_images=image_split.train_images,
        val_images=image_split.val_images,
        test_images=image_split.test_images,
        train_users=user_split.train_users,
        test_users=user_split.test_users,
        mode=user_split.mode,
        seed=image_split.seed,
    )


def materialize_sets(table, manifest):
    """(train, val, test) record lists under the manifest's protocol.

    train = train images x train users; val = val images x train users;
    test = test images x test users.
    """
    train_users = set(manifest.train_users)
    test_users = set(manifest.test_users)
    splits = {
        "train": (set(manifest.train_images), train_users),
        "val": (set(manifest.val_images), train_users),
        "test": (set(manifest.test_images), test_users),
    }
    out = []
    for which, (images, users) in splits.items():
        recs = [r for r in table.records
                if r.image_id in images and r.rater_id in users]
        if not recs:
            raise EmptySet(which)
        out.append(recs)
    return tuple(out)
