"""Day-indexed labeled datasets: CSV ingestion, min-max scaling, splits and a
synthetic generator.

Labels: 0 = fault, 1 = normal.
"""

import csv
import math
from dataclasses import dataclass, field, replace
from statistics import NormalDist

import numpy as np

FAULT, NORMAL = 0, 1
DROP_MARK = "drop-it"


class DataError(ValueError):
    """Raised for malformed or inconsistent input data."""


@dataclass(frozen=True)
class Sample:
    features: np.ndarray
    label: int
    day: int


@dataclass(frozen=True)
class ScalerParams:
    minimum: np.ndarray
    maximum: np.ndarray

    def __post_init__(self):
        if self.minimum.shape != self.maximum.shape:
            raise ValueError("minimum and maximum must have the same shape")
        if np.any(self.minimum > self.maximum):
            raise ValueError("minimum exceeds maximum for some feature")


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Dataset:
    """Immutable table of samples stored column-wise.

    ``features`` is (N, F) float64, ``labels`` and ``days`` are length-N
    integer arrays. ``day_count`` is the number of days the data spans,
    which may exceed the largest day present after filtering.
    """

    features: np.ndarray
    labels: np.ndarray
    days: np.ndarray
    day_count: int = 0
    feature_names: tuple = ()
    scaler: ScalerParams | None = None

    def __post_init__(self):
        feats = _frozen(self.features, np.float64)
        if feats.ndim != 2:
            feats = feats.reshape(len(feats), -1)
        labels = _frozen(self.labels, np.int64).reshape(-1)
        days = _frozen(self.days, np.int64).reshape(-1)
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "days", days)
        n = feats.shape[0]
        if labels.shape[0] != n or days.shape[0] != n:
            raise DataError("features, labels and days must have the same length")
        if not np.all(np.isfinite(feats)):
            raise DataError("features must be finite")
        if n and not np.all((labels == 0) | (labels == 1)):
            raise DataError("labels must be 0 or 1")
        if n and days.min() < 1:
            raise DataError("day indices must be >= 1")
        day_count = self.day_count or (int(days.max()) if n else 0)
        if n and days.max() > day_count:
            raise DataError(f"day {days.max()} exceeds day_count {day_count}")
        object.__setattr__(self, "day_count", int(day_count))
        names = tuple(self.feature_names) or tuple(f"f{i + 1:02d}" for i in range(feats.shape[1]))
        if len(names) != feats.shape[1]:
            raise DataError("feature_names does not match the feature count")
        object.__setattr__(self, "feature_names", names)

    @property
    def feature_count(self):
        return self.features.shape[1]

    def __len__(self):
        return self.features.shape[0]

    def __getitem__(self, i):
        return Sample(self.features[i], int(self.labels[i]), int(self.days[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.day_count == other.day_count
                and self.feature_names == other.feature_names
                and np.array_equal(self.features, other.features)
                and np.array_equal(self.labels, other.labels)
                and np.array_equal(self.days, other.days))

    def take(self, index):
        """Sub-dataset of the given row indices (or boolean mask), order as given."""
        return replace(self, features=self.features[index], labels=self.labels[index],
                       days=self.days[index])

    def class_counts(self):
        return np.bincount(self.labels, minlength=2)


@dataclass(frozen=True)
class CsvSchema:
    """Column mapping for CSV input. ``features=None`` takes every other column in header order."""

    day: str = "day"
    label: str = "label"
    drop: str | None = "drop"
    drop_value: str = DROP_MARK
    features: tuple | None = None


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    seed: int = 0
    stratified: bool = True
    # split each day separately (seeded by day) so that day windows nest
    per_day: bool = False

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def load_csv(path, schema=CsvSchema()):
    """Read a day-indexed CSV, dropping rows marked ``drop-it``.

    Row numbers in error messages count the header as line 1.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except FileNotFoundError as exc:
        raise DataError(f"{path}: file not found") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file, header row required") from None
        index = {name: i for i, name in enumerate(header)}
        for col in (schema.day, schema.label):
            if col not in index:
                raise DataError(f"{path}: missing required column {col!r}")
        drop_col = schema.drop if schema.drop in index else None
        reserved = {schema.day, schema.label, drop_col}
        if schema.features is None:
            feat_names = [h for h in header if h not in reserved]
        else:
            feat_names = list(schema.features)
            missing = [f for f in feat_names if f not in index]
            if missing:
                raise DataError(f"{path}: missing feature columns {missing}")
        if not feat_names:
            raise DataError(f"{path}: no feature columns")
        feat_idx = [index[f] for f in feat_names]

        feats, labels, days = [], [], []
        for line, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataError(f"{path}: row {line}: expected {len(header)} columns, found {len(row)}")
            if drop_col is not None and row[index[drop_col]].strip() == schema.drop_value:
                continue
            label = row[index[schema.label]].strip()
            if label not in ("0", "1"):
                raise DataError(f"{path}: row {line}: unknown label value {label!r}")
            day = row[index[schema.day]].strip()
            try:
                day = int(day)
            except ValueError:
                raise DataError(f"{path}: row {line}: day must be an integer, got {day!r}") from None
            if day < 1:
                raise DataError(f"{path}: row {line}: day must be >= 1, got {day}")
            values = []
            for name, i in zip(feat_names, feat_idx):
                cell = row[i].strip()
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}: row {line}: non-numeric value {cell!r} in column {name!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: row {line}: non-finite value {cell!r} in column {name!r}")
                values.append(v)
            feats.append(values)
            labels.append(int(label))
            days.append(day)
    feats = np.array(feats, dtype=np.float64).reshape(len(feats), len(feat_names))
    return Dataset(feats, labels, days, feature_names=tuple(feat_names))


def write_csv(data, path):
    """Write ``data`` in the schema ``load_csv`` reads (day, label, features...)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["day", "label", *data.feature_names])
        for x, y, d in zip(data.features, data.labels, data.days):
            writer.writerow([int(d), int(y), *(repr(float(v)) for v in x)])


def fit_scaler(train):
    if len(train) == 0:
        raise DataError("cannot fit a scaler on an empty dataset")
    return ScalerParams(train.features.min(axis=0).copy(), train.features.max(axis=0).copy())


def scale_features(x, scaler):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != scaler.minimum.shape[0]:
        raise DataError(f"scaler has {scaler.minimum.shape[0]} features, data has {x.shape[-1]}")
    span = scaler.maximum - scaler.minimum
    constant = span == 0
    out = (x - scaler.minimum) / np.where(constant, 1.0, span)
    out[..., constant] = 0.0
    return np.clip(out, 0.0, 1.0)


def apply_scaler(data, scaler):
    """Min-max scale to [0, 1]; constant features become 0, out-of-range values clamp."""
    return replace(data, features=scale_features(data.features, scaler), scaler=scaler)


def _stratified_counts(labels, n_train):
    classes, counts = np.unique(labels, return_counts=True)
    n = counts.sum()
    exact = counts * (n_train / n)
    take = np.floor(exact).astype(int)
    # largest remainder; ties go to the lower class
    order = sorted(range(len(classes)), key=lambda i: (-(exact[i] - take[i]), i))
    for i in order[:n_train - take.sum()]:
        take[i] += 1
    return dict(zip(classes.tolist(), take.tolist()))


def _split_indices(labels, fraction, stratified, rng):
    n = len(labels)
    n_train = int(math.floor(fraction * n + 0.5))
    if stratified:
        train_idx = []
        for cls, k in _stratified_counts(labels, n_train).items():
            members = np.flatnonzero(labels == cls)
            train_idx.append(rng.permutation(members)[:k])
        train_idx = np.concatenate(train_idx)
    else:
        train_idx = rng.permutation(n)[:n_train]
    mask = np.zeros(n, dtype=bool)
    mask[train_idx] = True
    return mask


def split(data, spec=SplitSpec()):
    """Seeded train/test partition; both halves keep the original row order."""
    if len(data) == 0:
        raise DataError("cannot split an empty dataset")
    if spec.per_day:
        mask = np.zeros(len(data), dtype=bool)
        for day in np.unique(data.days):
            rows = np.flatnonzero(data.days == day)
            rng = np.random.default_rng([spec.seed, int(day)])
            mask[rows] = _split_indices(data.labels[rows], spec.train_fraction, spec.stratified, rng)
    else:
        rng = np.random.default_rng(spec.seed)
        mask = _split_indices(data.labels, spec.train_fraction, spec.stratified, rng)
    return data.take(mask), data.take(~mask)


def cumulative_through_day(data, d):
    if not 1 <= d <= data.day_count:
        raise DataError(f"day {d} outside 1..{data.day_count}")
    return data.take(data.days <= d)


def only_day(data, d):
    if not 1 <= d <= data.day_count:
        raise DataError(f"day {d} outside 1..{data.day_count}")
    return data.take(data.days == d)


def separation_for_bayes_error(error):
    """Mean distance between two unit-variance Gaussians whose equal-prior Bayes error is ``error``."""
    if not 0 < error < 0.5:
        raise ValueError("error must lie in (0, 0.5)")
    return 2.0 * NormalDist().inv_cdf(1.0 - error)


@dataclass(frozen=True)
class SyntheticSpec:
    """Two isotropic unit-variance Gaussian classes in ``feature_count`` dimensions.

    The class means sit ``class_separation`` apart along a seeded unit
    direction. Both means move by ``drift_rate`` per day along a second
    seeded direction. Per day the fault class gets
    ``floor(samples_per_day / (1 + imbalance_ratio))`` rows and the normal
    class the rest.
    """

    feature_count: int = 31
    days: int = 10
    samples_per_day: int = 300
    imbalance_ratio: float = 3.0
    class_separation: float = field(default_factory=lambda: separation_for_bayes_error(0.05))
    drift_rate: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("feature_count", "days", "samples_per_day"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.imbalance_ratio < 1:
            raise ValueError("imbalance_ratio must be >= 1")
        if self.class_separation < 0:
            raise ValueError("class_separation must be >= 0")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @property
    def faults_per_day(self):
        return int(math.floor(self.samples_per_day / (1.0 + self.imbalance_ratio)))


def generate_synthetic(spec=SyntheticSpec(), **overrides):
    if overrides:
        spec = replace(spec, **overrides)
    rng = np.random.default_rng(spec.seed)
    f = spec.feature_count

    def unit(v):
        return v / np.linalg.norm(v)

    axis = unit(rng.standard_normal(f))
    drift_dir = unit(rng.standard_normal(f))
    n_fault = spec.faults_per_day
    n_normal = spec.samples_per_day - n_fault
    labels_day = np.array([FAULT] * n_fault + [NORMAL] * n_normal)

    feats, labels, days = [], [], []
    for day in range(1, spec.days + 1):
        shift = spec.drift_rate * (day - 1) * drift_dir
        centers = np.where(labels_day[:, None] == NORMAL, 0.5, -0.5) * spec.class_separation * axis
        x = centers + shift + rng.standard_normal((spec.samples_per_day, f))
        order = rng.permutation(spec.samples_per_day)
        feats.append(x[order])
        labels.append(labels_day[order])
        days.append(np.full(spec.samples_per_day, day))
    return Dataset(np.concatenate(feats), np.concatenate(labels), np.concatenate(days),
                   day_count=spec.days)
