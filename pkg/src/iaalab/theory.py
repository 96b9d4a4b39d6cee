"""Executable form of the group-vs-individual loss bound and hull geometry.

For a prediction p and one-hot individual distributions d_1..d_n, the group
loss ||p - mean(d_i)|| never exceeds the individual loss mean ||p - d_i||
(triangle inequality), for any norm and also for scalar scores. The functions
here make that bound checkable instance by instance, plus a randomized sweep,
plus a convex-combination membership test used to verify that every group
average lies inside the hull of its members.
"""

from dataclasses import dataclass

import numpy as np

from .core import ScoreDistribution
from .errors import DimensionMismatch, EmptyGroup, ScaleMismatch

_NORMS = ("l1", "l2")


def _norm(v, norm):
    if norm == "l1":
        return float(np.sum(np.abs(v)))
    return float(np.sqrt(np.sum(v * v)))


def _losses(pred, deltas, norm):
    """Kernel shared by the public ops and the randomized sweep.

    pred: (d,) array; deltas: (n, d) array of one-hot rows (or scalar mode
    with d = 1 and arbitrary values).
    """
    diff_group = pred - deltas.mean(axis=0)
    giaa = _norm(diff_group, norm)
    gaps = pred[None, :] - deltas
    if norm == "l1":
        piaa = float(np.abs(gaps).sum(axis=1).mean())
    else:
        piaa = float(np.sqrt((gaps * gaps).sum(axis=1)).mean())
    return giaa, piaa


def _validate(pred, deltas, norm):
    if norm not in _NORMS:
        raise ValueError(f"norm must be one of {_NORMS}")
    if not deltas:
        raise EmptyGroup("need at least one individual distribution")
    if isinstance(pred, ScoreDistribution):
        for d in deltas:
            if d.scale.values != pred.scale.values:
                raise ScaleMismatch("delta on a different scale than prediction")
            if not d.is_one_hot:
                raise ValueError("individual distributions must be one-hot")
        return pred.mass, np.stack([d.mass for d in deltas])
    # scalar mode: pred is a score, deltas are scores
    return (np.array([float(pred)]),
            np.asarray([[float(d)] for d in deltas]))


def giaa_loss(pred, deltas, norm="l2"):
    """Distance from the prediction to the group-average distribution."""
    p, dm = _validate(pred, deltas, norm)
    return _losses(p, dm, norm)[0]


def piaa_loss(pred, deltas, norm="l2"):
    """Mean distance from the prediction to each individual distribution."""
    p, dm = _validate(pred, deltas, norm)
    return _losses(p, dm, norm)[1]


@dataclass(frozen=True)
class TheoremReport:
    giaa: float
    piaa: float
    holds: bool


def check_theorem(pred, deltas, norm="l2", tol=1e-12):
    """Evaluate both losses on one instance and test giaa <= piaa + tol.

    ``pred`` may be a ScoreDistribution with one-hot deltas, or a plain score
    with a list of scores (scalar mode).
    """
    p, dm = _validate(pred, deltas, norm)
    giaa, piaa = _losses(p, dm, norm)
    return TheoremReport(giaa=giaa, piaa=piaa, holds=giaa <= piaa + tol)


@dataclass(frozen=True)
class SweepReport:
    trials: int
    violations: int
    max_gap: float  # max over trials of giaa - piaa; <= 0 when the bound holds


def theorem_sweep(trials, seed, n_range=(1, 64), d_range=(2, 11),
                  scalar_share=0.2, tol=1e-12):
    """Randomized search for counterexamples to the loss bound.

    Each trial draws a random simplex prediction, random one-hot individuals,
    a random norm and random (n, d); a ``scalar_share`` fraction of trials
    runs in scalar mode instead. Returns the number of violations (gap > tol)
    and the largest observed gap.
    """
    rng = np.random.default_rng(seed)
    ns = rng.integers(n_range[0], n_range[1] + 1, size=trials)
    ds = rng.integers(d_range[0], d_range[1] + 1, size=trials)
    norms = rng.integers(0, 2, size=trials)
    scalar = rng.random(trials) < scalar_share
    max_gap = -np.inf
    violations = 0
    for t in range(trials):
        n = int(ns[t])
        norm = _NORMS[norms[t]]
        if scalar[t]:
            pred = np.array([rng.normal()])
            deltas = rng.normal(size=(n, 1))
        else:
            d = int(ds[t])
            pred = rng.dirichlet(np.ones(d))
            deltas = np.zeros((n, d))
            deltas[np.arange(n), rng.integers(0, d, size=n)] = 1.0
        giaa, piaa = _losses(pred, deltas, norm)
        gap = giaa - piaa
        if gap > max_gap:
            max_gap = gap
        if gap > tol:
            violations += 1
    return SweepReport(trials=trials, violations=violations, max_gap=float(max_gap))


def convex_membership(point, vertices, tol=1e-8, max_iter=10_000):
    """Is ``point`` within ``tol`` (euclidean) of the convex hull of ``vertices``?

    Solves min_w ||V^T w - point||_2 over the simplex with pairwise
    conditional-gradient steps and exact line search. Returns True as soon as
    a convex combination within tol is found; returns False once the duality
    gap certifies the minimum distance exceeds tol.
    """
    V = np.asarray([np.asarray(v, dtype=float) for v in vertices])
    x = np.asarray(point, dtype=float)
    if V.ndim != 2 or V.shape[0] == 0:
        raise DimensionMismatch("vertices must be a non-empty list of vectors")
    if V.shape[1] != x.shape[0]:
        raise DimensionMismatch(
            f"point has dim {x.shape[0]}, vertices have dim {V.shape[1]}")

    # Axis-aligned reject: any coordinate beyond the vertex bounding box by
    # more than tol puts the point provably outside.
    if np.any(x > V.max(axis=0) + tol) or np.any(x < V.min(axis=0) - tol):
        return False

    n = V.shape[0]
    tol_sq = tol * tol
    w = np.full(n, 1.0 / n)  # uniform start: group averages converge instantly
    c = V.T @ w
    for _ in range(max_iter):
        r = c - x
        f = float(r @ r)
        if f <= tol_sq:
            return True
        g = 2.0 * (V @ r)
        s = int(np.argmin(g))
        active = np.flatnonzero(w > 0)
        a = int(active[np.argmax(g[active])])
        gap = float(w @ g - g[s])
        if f - gap > tol_sq:
            return False
        direction = V[s] - V[a]
        denom = float(direction @ direction)
        if denom == 0.0 or gap <= 0.0:
            return f <= tol_sq
        step = min(max(-float(r @ direction) / denom, 0.0), float(w[a]))
        if step == 0.0:
            return f <= tol_sq
        w[s] += step
        w[a] -= step
        c = c + step * direction
    return float((c - x) @ (c - x)) <= tol_sq
