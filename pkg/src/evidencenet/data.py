"""Tabular data loading, whitening, and seeded train/test splitting.

The regression table is expected in the classic UCI housing layout:
14 numeric columns per row (13 features followed by one target), either
whitespace- or comma-separated, with an optional single header line.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

N_FEATURES = 13
N_COLUMNS = N_FEATURES + 1


class DataError(ValueError):
    """Raised for malformed input tables or invalid whitening requests."""


@dataclass(frozen=True)
class RawTable:
    """Parsed numeric table, original units."""

    values: np.ndarray  # (n_rows, 14)

    @property
    def n_rows(self) -> int:
        return self.values.shape[0]

    @property
    def n_cols(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class Dataset:
    """Whitened features/targets plus the per-column stats to undo it.

    Whitening uses the population (1/n) standard deviation so each
    whitened column has exactly zero mean and unit variance over the
    rows it was computed from.
    """

    features: np.ndarray      # (n, 13), whitened
    targets: np.ndarray       # (n,), whitened
    column_means: np.ndarray  # (14,), original units
    column_stds: np.ndarray   # (14,), original units (population)

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    def subset(self, indices) -> "Dataset":
        """View of the given rows; whitening stats are carried unchanged."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.features[idx], self.targets[idx],
                       self.column_means, self.column_stds)

    def unwhiten_features(self, features: np.ndarray) -> np.ndarray:
        return features * self.column_stds[:N_FEATURES] + self.column_means[:N_FEATURES]

    def unwhiten_targets(self, targets: np.ndarray) -> np.ndarray:
        return targets * self.column_stds[N_FEATURES] + self.column_means[N_FEATURES]


@dataclass(frozen=True)
class SplitPlan:
    """Deterministic 50/50 split of row indices.

    ``train_idx`` and ``test_idx`` are disjoint, each of size
    ``floor(n/2)``, and are a pure function of
    ``(n, master_seed, split_index)``.
    """

    master_seed: int
    split_index: int
    train_idx: np.ndarray
    test_idx: np.ndarray


def load_table(path) -> RawTable:
    """Parse a 14-column numeric table.

    Accepts whitespace- or comma-separated rows.  A non-numeric first
    line is treated as a CSV header and skipped.  Any other parse
    failure raises :class:`DataError` naming the offending line.
    """
    rows = []
    with open(path) as fh:
        lines = fh.readlines()
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        sep = "," if "," in line else None
        fields = [f.strip() for f in line.split(sep) if f.strip()]
        try:
            row = [float(f) for f in fields]
        except ValueError:
            if lineno == 1:
                continue  # header line
            raise DataError(f"{path}: line {lineno}: could not parse numeric row")
        if len(row) != N_COLUMNS:
            raise DataError(
                f"{path}: line {lineno}: expected {N_COLUMNS} columns, got {len(row)}")
        rows.append(row)
    if not rows:
        raise DataError(f"{path}: no data rows found")
    return RawTable(np.asarray(rows, dtype=np.float64))


def whiten(table: RawTable) -> Dataset:
    """Whiten every column to zero mean and unit (population) variance."""
    values = table.values
    means = values.mean(axis=0)
    stds = values.std(axis=0)  # population convention, ddof=0
    zero = np.flatnonzero(stds == 0.0)
    if zero.size:
        raise DataError(f"cannot whiten: column {zero[0]} has zero variance")
    white = (values - means) / stds
    return Dataset(features=white[:, :N_FEATURES], targets=white[:, N_FEATURES],
                   column_means=means, column_stds=stds)


def _split_rng(master_seed: int, split_index: int) -> np.random.Generator:
    # Philox is counter-based: the (master_seed, split_index) key alone
    # pins the whole stream, independent of call order elsewhere.
    return np.random.Generator(np.random.Philox(key=[master_seed, split_index]))


def make_splits(n: int, master_seed: int, k: int) -> list[SplitPlan]:
    """Generate ``k`` deterministic 50/50 partitions of ``range(n)``.

    Each partition is a Fisher-Yates shuffle of ``0..n-1`` keyed by
    ``(master_seed, split_index)``; the first ``floor(n/2)`` indices
    train, the next ``floor(n/2)`` test (one row unused when n is odd).
    """
    if n < 2:
        raise ValueError(f"need at least 2 rows to split, got {n}")
    if k < 1:
        raise ValueError(f"need at least 1 split, got {k}")
    half = n // 2
    plans = []
    for split_index in range(k):
        perm = _split_rng(master_seed, split_index).permutation(n)
        plans.append(SplitPlan(master_seed=master_seed, split_index=split_index,
                               train_idx=perm[:half].copy(),
                               test_idx=perm[half:2 * half].copy()))
    return plans
