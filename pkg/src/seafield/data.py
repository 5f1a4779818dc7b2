"""Dataset loading, splitting, normalization, windowing and synthesis.

A dataset directory holds ``values.csv`` (header of node ids, one row per
timestamp), ``timestamps.csv`` (ISO-8601, one per row), an optional
``adjacency.csv`` (N x N), an optional ``mask.csv`` (0/1) and a ``meta`` file
of ``key=value`` lines (``name``, ``granularity_minutes``).
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator, Optional, Sequence

import numpy as np

from .timefeatures import coords_for_window

WEEKEND_AMPLITUDE = 0.6


class DatasetError(ValueError):
    """Raised for malformed or inconsistent dataset inputs."""


class DegenerateInputError(ValueError):
    """Raised when normalization statistics are undefined (zero variance)."""


@dataclass(frozen=True, eq=False)
class TimeSeriesDataset:
    values: np.ndarray
    timestamps: np.ndarray
    granularity: int
    mask: Optional[np.ndarray] = None
    adjacency: Optional[np.ndarray] = None
    name: str = "dataset"

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DatasetError(f"values must be 2-D (T x N), got shape {values.shape}")
        stamps = np.asarray(self.timestamps, dtype="datetime64[s]")
        if stamps.shape != (values.shape[0],):
            raise DatasetError(
                f"{stamps.shape[0]} timestamps for {values.shape[0]} value rows")
        if self.granularity <= 0:
            raise DatasetError("granularity must be positive")
        if len(stamps) > 1:
            steps = np.diff(stamps).astype(np.int64)
            if np.any(steps != self.granularity * 60):
                raise DatasetError(
                    f"timestamps are not uniformly spaced at {self.granularity} min")
        if self.mask is None:
            mask = values != 0
        else:
            mask = np.asarray(self.mask, dtype=bool)
            if mask.shape != values.shape:
                raise DatasetError(
                    f"mask shape {mask.shape} does not match values {values.shape}")
            values = np.where(mask, values, 0.0)
        adjacency = self.adjacency
        if adjacency is not None:
            adjacency = np.asarray(adjacency, dtype=np.float64)
            n = values.shape[1]
            if adjacency.shape != (n, n):
                raise DatasetError(
                    f"adjacency shape {adjacency.shape} does not match {n} nodes")
            if np.any(adjacency < 0):
                raise DatasetError("adjacency entries must be nonnegative")
            adjacency.setflags(write=False)
        values.setflags(write=False)
        mask.setflags(write=False)
        stamps.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "timestamps", stamps)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "adjacency", adjacency)

    @property
    def num_steps(self) -> int:
        return self.values.shape[0]

    @property
    def num_nodes(self) -> int:
        return self.values.shape[1]

    def __len__(self):
        return self.num_steps

    def slice(self, start: int, stop: int) -> "TimeSeriesDataset":
        return replace(self, values=self.values[start:stop],
                       timestamps=self.timestamps[start:stop],
                       mask=self.mask[start:stop])


def _read_meta(path: Path) -> dict:
    meta = {}
    for line in path.read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise DatasetError(f"bad meta line {line!r}")
        meta[key.strip()] = value.strip()
    return meta


def _read_matrix(path: Path, header: bool) -> tuple[list[str], np.ndarray]:
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    names = rows.pop(0) if header else []
    try:
        data = np.array([[float(x) for x in row] for row in rows if row], dtype=np.float64)
    except ValueError as exc:
        raise DatasetError(f"{path.name}: {exc}") from None
    return names, data


def load_dataset(path) -> TimeSeriesDataset:
    root = Path(path)
    for required in ("values.csv", "timestamps.csv", "meta"):
        if not (root / required).is_file():
            raise DatasetError(f"missing {required} in {root}")
    meta = _read_meta(root / "meta")
    if "granularity_minutes" not in meta:
        raise DatasetError("meta lacks granularity_minutes")
    names, values = _read_matrix(root / "values.csv", header=True)
    if values.ndim != 2 or values.shape[1] != len(names):
        raise DatasetError("values.csv rows do not match the header width")
    lines = (root / "timestamps.csv").read_text(encoding="utf-8").split()
    try:
        stamps = np.array(lines, dtype="datetime64[s]")
    except ValueError as exc:
        raise DatasetError(f"timestamps.csv: {exc}") from None
    mask = adjacency = None
    if (root / "mask.csv").is_file():
        mask = _read_matrix(root / "mask.csv", header=False)[1] != 0
    if (root / "adjacency.csv").is_file():
        adjacency = _read_matrix(root / "adjacency.csv", header=False)[1]
    return TimeSeriesDataset(values=values, timestamps=stamps,
                             granularity=int(meta["granularity_minutes"]),
                             mask=mask, adjacency=adjacency,
                             name=meta.get("name", root.name))


def save_dataset(dataset: TimeSeriesDataset, path, node_ids: Sequence[str] | None = None):
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    node_ids = node_ids or [str(i) for i in range(dataset.num_nodes)]
    with (root / "values.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(node_ids)
        writer.writerows([repr(float(v)) for v in row] for row in dataset.values)
    (root / "timestamps.csv").write_text(
        "".join(f"{t}\n" for t in dataset.timestamps.astype(str)), encoding="utf-8")
    if not np.array_equal(dataset.mask, dataset.values != 0):
        np.savetxt(root / "mask.csv", dataset.mask.astype(int), fmt="%d", delimiter=",")
    if dataset.adjacency is not None:
        with (root / "adjacency.csv").open("w", newline="", encoding="utf-8") as fh:
            csv.writer(fh).writerows([repr(float(v)) for v in row] for row in dataset.adjacency)
    (root / "meta").write_text(
        f"name={dataset.name}\ngranularity_minutes={dataset.granularity}\n", encoding="utf-8")


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.7
    val_fraction: float = 0.1
    test_fraction: float = 0.2

    def __post_init__(self):
        fractions = (self.train_fraction, self.val_fraction, self.test_fraction)
        if min(fractions) <= 0 or abs(sum(fractions) - 1) > 1e-9:
            raise ValueError(f"split fractions must be positive and sum to 1: {fractions}")


def split(dataset: TimeSeriesDataset, spec: SplitSpec = SplitSpec(), min_length: int = 24):
    """Contiguous train/val/test views; boundaries at floor(fraction * T)."""
    T = dataset.num_steps
    # small epsilon so that e.g. 0.7 * 100 = 70.00000000000001 floors as intended
    n_train = int(np.floor(spec.train_fraction * T + 1e-9))
    n_val = int(np.floor((spec.train_fraction + spec.val_fraction) * T + 1e-9)) - n_train
    bounds = [0, n_train, n_train + n_val, T]
    parts = tuple(dataset.slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]))
    for label, part in zip(("train", "val", "test"), parts):
        if part.num_steps < min_length:
            raise DatasetError(
                f"{label} split has {part.num_steps} steps, fewer than {min_length}")
    return parts


@dataclass(frozen=True)
class NormStats:
    mean: float
    std: float

    def transform(self, x):
        return (x - self.mean) / self.std

    def inverse(self, x):
        return x * self.std + self.mean


def normalize(dataset: TimeSeriesDataset, stats: NormStats | None = None):
    """Z-score observed cells; masked cells keep their 0 sentinel."""
    if stats is None:
        observed = dataset.values[dataset.mask]
        if observed.size == 0:
            raise DegenerateInputError("no observed cells to fit normalization")
        std = float(observed.std())
        if std == 0:
            raise DegenerateInputError("observed values have zero variance")
        stats = NormStats(float(observed.mean()), std)
    scaled = np.where(dataset.mask, stats.transform(dataset.values), 0.0)
    return replace(dataset, values=scaled, mask=dataset.mask), stats


def denormalize(dataset: TimeSeriesDataset, stats: NormStats) -> TimeSeriesDataset:
    raw = np.where(dataset.mask, stats.inverse(dataset.values), 0.0)
    return replace(dataset, values=raw, mask=dataset.mask)


@dataclass
class WindowSample:
    history: np.ndarray
    target: np.ndarray
    target_mask: np.ndarray
    history_coords: np.ndarray
    target_start_index: int


@dataclass
class WindowSet:
    """Sliding windows over one split, materialized lazily per batch.

    History channels are ``[value, time_of_day, day_of_week(, weekend)]``.
    """
    dataset: TimeSeriesDataset
    history_len: int = 12
    horizon: int = 12
    weekend: bool = False
    coords: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        need = self.history_len + self.horizon
        if self.dataset.num_steps < need:
            raise DatasetError(
                f"{self.dataset.num_steps} steps cannot hold a window of {need}")
        self.coords = coords_for_window(self.dataset.timestamps, weekend=self.weekend)

    def __len__(self):
        return self.dataset.num_steps - self.history_len - self.horizon + 1

    @property
    def num_nodes(self) -> int:
        return self.dataset.num_nodes

    @property
    def in_channels(self) -> int:
        return 1 + self.coords.shape[1]

    def batch(self, starts):
        """Arrays for window start indices: history (B,T_h,N,C), target (B,T_f,N),
        target mask (B,T_f,N) and history coordinates (B,T_h,k)."""
        starts = np.asarray(starts, dtype=np.int64)
        hist_idx = starts[:, None] + np.arange(self.history_len)
        tgt_idx = starts[:, None] + self.history_len + np.arange(self.horizon)
        values = self.dataset.values
        coords = self.coords[hist_idx]
        n = values.shape[1]
        history = np.concatenate(
            [values[hist_idx][..., None],
             np.broadcast_to(coords[:, :, None, :], coords.shape[:2] + (n, coords.shape[2]))],
            axis=-1)
        return history, values[tgt_idx], self.dataset.mask[tgt_idx], coords

    def __getitem__(self, i: int) -> WindowSample:
        if not 0 <= i < len(self):
            raise IndexError(i)
        history, target, mask, coords = self.batch([i])
        return WindowSample(history[0], target[0], mask[0], coords[0], i + self.history_len)

    def __iter__(self) -> Iterator[WindowSample]:
        for i in range(len(self)):
            yield self[i]


def make_windows(dataset: TimeSeriesDataset, history_len: int = 12, horizon: int = 12,
                 weekend: bool = False) -> WindowSet:
    return WindowSet(dataset, history_len, horizon, weekend)


def synthesize_seasonal(num_nodes: int = 20, days: int = 28, granularity: int = 5,
                        noise_std: float = 0.1, seed: int = 0,
                        start: str = "2012-03-05T00:00") -> TimeSeriesDataset:
    """Synthetic multivariate series with daily and weekly seasonality.

    Each node mixes a unit-amplitude daily sinusoid and its quadrature with
    node-specific weights, on top of a node-specific positive level. Weekend
    days damp the daily swing to 0.6 of its weekday amplitude.
    """
    if days < 14:
        raise ValueError("need at least 14 days for weekly seasonality")
    rng = np.random.default_rng(seed)
    steps = days * 1440 // granularity
    stamps = np.datetime64(start, "s") + np.arange(steps) * np.timedelta64(granularity * 60, "s")
    coords = coords_for_window(stamps, weekend=True)
    phase = 2 * np.pi * coords[:, 0]
    swing = np.where(coords[:, 2] > 0, WEEKEND_AMPLITUDE, 1.0)

    level = rng.uniform(4.0, 8.0, num_nodes)
    angle = rng.uniform(0, 2 * np.pi, num_nodes)
    gain = rng.uniform(0.6, 1.0, num_nodes)
    daily = np.sin(phase[:, None] + angle[None, :]) * gain[None, :]
    values = level[None, :] + swing[:, None] * daily
    values = values + noise_std * rng.standard_normal(values.shape)
    return TimeSeriesDataset(values=values, timestamps=stamps, granularity=granularity,
                             name=f"synthetic-{num_nodes}x{days}d")
