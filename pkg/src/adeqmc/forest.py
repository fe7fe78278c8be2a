"""From-scratch random forest regression for daily LOL / ENS surrogates.

Each surrogate maps a 24-value daily margin vector to a daily outcome.  The
forest exposes per-tree predictions so committee disagreement can drive the
active learning query strategy.  Yearly estimates sum the 365 daily
predictions of a margin year.
"""

import json
from dataclasses import dataclass, asdict

import numpy as np

from . import _kernels
from .scenario import split_days

FOREST_FORMAT_VERSION = 1


@dataclass
class ForestParams:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    features_per_split: int = 8  # ceil(24 / 3)
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        if self.features_per_split < 1:
            raise ValueError("features_per_split must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValueError("max_depth must be >= 1 or None")


class Forest:
    """A fitted ensemble of regression trees (immutable once built).

    Trees are stored flattened: per-node feature index (-1 for leaves),
    threshold, left/right child offsets local to each tree, and leaf value.
    `offsets[t]` is the root index of tree t.
    """

    def __init__(self, params, feature, threshold, left, right, value, offsets):
        self.params = params
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.value = value
        self.offsets = offsets

    @property
    def n_trees(self):
        return self.offsets.size - 1

    def _as_matrix(self, days):
        days = np.asarray(days, dtype=np.float64)
        if days.ndim == 1:
            days = days.reshape(1, -1)
        return days

    def committee_predictions(self, day):
        """Per-tree predictions for one daily trace, in tree order."""
        X = self._as_matrix(day)
        return _kernels.forest_predict_all(
            self.feature, self.threshold, self.left, self.right,
            self.value, self.offsets, X,
        )[:, 0]

    def committee_matrix(self, days):
        """Per-tree predictions for a (n, 24) batch; shape (n_trees, n)."""
        X = self._as_matrix(days)
        return _kernels.forest_predict_all(
            self.feature, self.threshold, self.left, self.right,
            self.value, self.offsets, X,
        )

    def predict(self, day):
        """Committee mean for one daily trace."""
        return float(self.committee_predictions(day).mean())

    def predict_batch(self, days):
        return self.committee_matrix(days).mean(axis=0)

    def committee_std(self, day):
        """Population standard deviation of the per-tree predictions."""
        return float(self.committee_predictions(day).std())

    def committee_std_batch(self, days):
        return self.committee_matrix(days).std(axis=0)

    def save(self, path):
        """Serialize to a versioned npz with byte-order-fixed dtypes."""
        params_json = json.dumps(asdict(self.params)).encode("utf-8")
        np.savez(
            path,
            format_version=np.array([FOREST_FORMAT_VERSION], dtype="<i4"),
            params_json=np.frombuffer(params_json, dtype="<u1"),
            feature=self.feature.astype("<i4"),
            threshold=self.threshold.astype("<f8"),
            left=self.left.astype("<i4"),
            right=self.right.astype("<i4"),
            value=self.value.astype("<f8"),
            offsets=self.offsets.astype("<i8"),
        )

    @classmethod
    def load(cls, path):
        with np.load(path) as data:
            version = int(data["format_version"][0])
            if version != FOREST_FORMAT_VERSION:
                raise ValueError(f"unsupported forest format version {version}")
            params = ForestParams(**json.loads(bytes(data["params_json"]).decode("utf-8")))
            return cls(
                params=params,
                feature=data["feature"].astype(np.int32),
                threshold=data["threshold"].astype(np.float64),
                left=data["left"].astype(np.int32),
                right=data["right"].astype(np.int32),
                value=data["value"].astype(np.float64),
                offsets=data["offsets"].astype(np.int64),
            )


def fit(X, y, params, rng):
    """Fit a random forest on rows X (n, n_features) with labels y.

    Each tree trains on a bootstrap resample (or the full data when
    bootstrap is off) with its own feature-subsampling seed; both are drawn
    from `rng` in fixed order, so results are reproducible and independent
    of any tree-level parallelism.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = X.shape[0]
    if n < 1:
        raise ValueError("cannot fit a forest on an empty dataset")
    if y.shape != (n,):
        raise ValueError("label vector length does not match X")
    n_sub = min(params.features_per_split, X.shape[1])
    max_depth = -1 if params.max_depth is None else params.max_depth
    seeds = rng.integers(0, 2**31 - 1, size=params.n_trees)
    if params.bootstrap:
        boots = rng.integers(0, n, size=(params.n_trees, n))
    else:
        boots = np.tile(np.arange(n), (params.n_trees, 1))
    feats, thrs, lefts, rights, vals = [], [], [], [], []
    offsets = np.zeros(params.n_trees + 1, dtype=np.int64)
    for t in range(params.n_trees):
        f, th, le, ri, va = _kernels.build_tree(
            X, y, boots[t], max_depth, params.min_samples_leaf, n_sub, seeds[t]
        )
        feats.append(f)
        thrs.append(th)
        lefts.append(le)
        rights.append(ri)
        vals.append(va)
        offsets[t + 1] = offsets[t] + f.size
    return Forest(
        params=params,
        feature=np.concatenate(feats),
        threshold=np.concatenate(thrs),
        left=np.concatenate(lefts),
        right=np.concatenate(rights),
        value=np.concatenate(vals),
        offsets=offsets,
    )


@dataclass
class YearlyEstimate:
    """Surrogate yearly outputs (continuous, unlike the exact model)."""

    lol: float
    ens: float


def predict_year(forest_lol, forest_ens, margin):
    """Sum the daily surrogate predictions over the 365 days of a margin year."""
    days = split_days(margin)
    return YearlyEstimate(
        lol=float(forest_lol.predict_batch(days).sum()),
        ens=float(forest_ens.predict_batch(days).sum()),
    )


def _pearson(a, b):
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    if a.std() == 0.0 or b.std() == 0.0:
        return float("nan")
    return float(np.corrcoef(a, b)[0, 1])


def surrogate_metrics(forest_lol, forest_ens, daily_X, daily_lol, daily_ens,
                      yearly_margins, yearly_lol, yearly_ens):
    """Daily RMSE and yearly Pearson correlation against the exact model.

    Zero-variance reference outputs make the correlation undefined; it is
    reported as NaN in that case.
    """
    daily_X = np.asarray(daily_X, float)
    if daily_X.shape[0] == 0 or len(yearly_margins) == 0:
        raise ValueError("test sets must be non-empty")
    pred_lol = forest_lol.predict_batch(daily_X)
    pred_ens = forest_ens.predict_batch(daily_X)
    rmse_lol = float(np.sqrt(np.mean((pred_lol - daily_lol) ** 2)))
    rmse_ens = float(np.sqrt(np.mean((pred_ens - daily_ens) ** 2)))
    year_pred_lol = np.empty(len(yearly_margins))
    year_pred_ens = np.empty(len(yearly_margins))
    for i, margin in enumerate(yearly_margins):
        est = predict_year(forest_lol, forest_ens, margin)
        year_pred_lol[i] = est.lol
        year_pred_ens[i] = est.ens
    return {
        "rmse_lol": rmse_lol,
        "rmse_ens": rmse_ens,
        "corr_lol": _pearson(year_pred_lol, yearly_lol),
        "corr_ens": _pearson(year_pred_ens, yearly_ens),
    }
