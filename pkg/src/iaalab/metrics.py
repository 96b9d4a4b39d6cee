"""Distribution distances and correlation metrics.

Two EMD variants coexist on purpose. ``emd_w1`` is the analysis metric:
Wasserstein-1 with the score values themselves as ground metric, so its
magnitude is in score units. ``emd_loss`` is the normalized CDF form used as
the training objective of the standard score-distribution protocol; it is
unit-free and differentiable, which is what the model module needs.
"""

import numpy as np

from .core import assemble_score_distribution
from .errors import DegenerateInput, EmptySide, ScaleMismatch, UnknownField


def _check_same_scale(p, q):
    if p.scale.values != q.scale.values:
        raise ScaleMismatch("distributions live on different score scales")


def emd_w1(p, q, ground="value"):
    """Wasserstein-1 between two score distributions on the same scale.

    ``ground`` selects the ground metric: "value" uses |score difference|
    (default; magnitudes depend on score units), "index" uses |bin index
    difference|.
    """
    _check_same_scale(p, q)
    cdf_gap = np.abs(np.cumsum(p.mass - q.mass))[:-1]
    if ground == "value":
        spacing = np.diff(p.scale.as_array())
    elif ground == "index":
        spacing = np.ones(p.scale.bin_count - 1)
    else:
        raise ValueError(f"unknown ground metric {ground!r}")
    return float(cdf_gap @ spacing)


def emd_loss(p, q, r=2.0):
    """Normalized CDF-r distance, the standard training-loss form of EMD."""
    _check_same_scale(p, q)
    if r < 1:
        raise ValueError("loss exponent r must be >= 1")
    d = p.scale.bin_count
    gap = np.abs(np.cumsum(p.mass - q.mass))
    return float((np.sum(gap ** r) / d) ** (1.0 / r))


def _average_ranks(x):
    """Fractional ranks (1-based); tied values share the average of their ranks."""
    x = np.asarray(x, dtype=float)
    order = np.argsort(x, kind="stable")
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and x[order[j + 1]] == x[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = 0.5 * (i + j) + 1.0
        i = j + 1
    return ranks


def plcc(x, y):
    """Pearson linear correlation; constant input is a typed error, never NaN."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise DegenerateInput("plcc needs two equal-length vectors with n >= 2")
    xc = x - x.mean()
    yc = y - y.mean()
    denom = np.sqrt((xc @ xc) * (yc @ yc))
    if denom == 0:
        raise DegenerateInput("plcc is undefined for a constant vector")
    return float(np.clip((xc @ yc) / denom, -1.0, 1.0))


def srocc(x, y):
    """Spearman rank correlation with average ranks for ties."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise DegenerateInput("srocc needs two equal-length vectors with n >= 2")
    return plcc(_average_ranks(x), _average_ranks(y))


def gini_impurity(p):
    """1 - sum of squared masses; 0 for a one-hot distribution."""
    return float(1.0 - np.sum(p.mass ** 2))


def demographic_gini(table, field):
    """Record-weighted within-group impurity of score distributions.

    Groups are the categories (or bins) a rater's ``field`` value falls into;
    each group's impurity is weighted by its share of records. Lower values
    mean the split separates aesthetic preferences better.
    """
    f = table.schema.field(field)
    groups = {}
    for rec in table.records:
        rater = table.rater(rec.rater_id)
        value = rater.trait_values.get(field)
        if value is None:
            raise UnknownField(field)
        groups.setdefault(_group_key(f, value), []).append(rec.score)
    n = len(table.records)
    total = 0.0
    for scores in groups.values():
        dist = assemble_score_distribution(scores, table.scale)
        total += (len(scores) / n) * gini_impurity(dist)
    return total


def _group_key(f, value):
    # Categorical values group by label; numeric ones by bin so that a
    # continuous trait still yields finitely many groups.
    if hasattr(f, "categories"):
        return value
    if hasattr(f, "bin_index"):
        return f.bin_index(value)
    return f.normalize(value)


def group_emd(table, train_users, test_users, ground="value"):
    """EMD between the pooled score distributions of two user sets."""
    train_scores = [r.score for r in table.records if r.rater_id in set(train_users)]
    test_scores = [r.score for r in table.records if r.rater_id in set(test_users)]
    if not train_scores:
        raise EmptySide("train")
    if not test_scores:
        raise EmptySide("test")
    p = assemble_score_distribution(train_scores, table.scale)
    q = assemble_score_distribution(test_scores, table.scale)
    return emd_w1(p, q, ground=ground)
