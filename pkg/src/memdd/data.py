"""Dataset files, chronological splitting, sliding windows and min-max scaling.

``ts-cls v1`` classification format (UTF-8, LF)::

    ts-cls v1 T=<int> D=<int> C=<int>
    <label>\t<T*D space-separated decimals, time-major, channel-minor>
    ...

Regression CSV: a header row of variable names, then one row of ``D``
decimals per timestep in chronological order.
"""

from __future__ import annotations

import csv
import math
import re
from dataclasses import dataclass, field

import numpy as np


class ParseError(ValueError):
    def __init__(self, path, line: int, msg: str):
        super().__init__(f"{path}:{line}: {msg}")
        self.path = path
        self.line = line


class NotFittedError(RuntimeError):
    pass


_HEADER = re.compile(r"^ts-cls v1 T=(\d+) D=(\d+) C=(\d+)$")


@dataclass
class ClassificationDataset:
    T: int
    D: int
    C: int
    labels: np.ndarray           # (N,) int64
    X: np.ndarray                # (N, T, D)

    def __len__(self) -> int:
        return self.labels.shape[0]

    @property
    def samples(self):
        return list(zip(self.labels.tolist(), self.X))

    def zscore(self) -> "ClassificationDataset":
        """Per-series, per-channel z-normalization (constant channels become 0)."""
        mu = self.X.mean(axis=1, keepdims=True)
        sd = self.X.std(axis=1, keepdims=True)
        Z = np.where(sd > 0, (self.X - mu) / np.where(sd > 0, sd, 1.0), 0.0)
        return ClassificationDataset(self.T, self.D, self.C, self.labels.copy(), Z)

    def permuted(self, order) -> "ClassificationDataset":
        order = np.asarray(order)
        return ClassificationDataset(self.T, self.D, self.C, self.labels[order], self.X[order])


def parse_classification_file(path) -> ClassificationDataset:
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().split("\n")
    m = _HEADER.match(lines[0].strip()) if lines else None
    if not m:
        raise ParseError(path, 1, f"bad header {lines[0]!r}; expected 'ts-cls v1 T=<int> D=<int> C=<int>'")
    T, D, C = (int(g) for g in m.groups())
    labels, rows = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        head, sep, body = line.partition("\t")
        if not sep:
            raise ParseError(path, lineno, "expected '<label>\\t<values>'")
        try:
            label = int(head)
        except ValueError:
            raise ParseError(path, lineno, f"label {head!r} is not an integer") from None
        if not 0 <= label < C:
            raise ParseError(path, lineno, f"label {label} outside [0, {C})")
        parts = body.split()
        if len(parts) != T * D:
            raise ParseError(path, lineno, f"expected {T * D} values, found {len(parts)}")
        try:
            vals = [float(v) for v in parts]
        except ValueError as e:
            raise ParseError(path, lineno, str(e)) from None
        labels.append(label)
        rows.append(vals)
    X = np.array(rows, dtype=np.float64).reshape(len(rows), T, D)
    return ClassificationDataset(T, D, C, np.array(labels, dtype=np.int64), X)


def format_classification(ds: ClassificationDataset) -> str:
    out = [f"ts-cls v1 T={ds.T} D={ds.D} C={ds.C}"]
    for label, series in zip(ds.labels, ds.X):
        out.append(f"{int(label)}\t" + " ".join(repr(float(v)) for v in series.ravel()))
    return "\n".join(out) + "\n"


def write_classification_file(ds: ClassificationDataset, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_classification(ds))


def _label_key(label: str):
    # numeric labels compare by value ("1" and "1.0" are one class) and sort first
    try:
        return (0, float(label), "")
    except ValueError:
        return (1, 0.0, label)


def _read_ucr(src, delimiter):
    """Rows of ``(raw label, [[channel values] ...])`` from a UCR txt or ``.ts`` file."""
    out = []
    in_data = None
    with open(src, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("@"):
                in_data = line.lower() == "@data"
                continue
            try:
                if in_data is not None:
                    # .ts layout: channels separated by ':', label last
                    *chans, label = line.split(":")
                    out.append((label.strip(), [[float(v) for v in c.split(",")] for c in chans]))
                else:
                    parts = line.replace(",", " ").split() if delimiter is None else line.split(delimiter)
                    out.append((parts[0], [[float(v) for v in parts[1:]]]))
            except ValueError as e:
                raise ParseError(src, lineno, str(e)) from None
    return out


def ucr_to_tscls(src, dst, delimiter=None) -> ClassificationDataset:
    """Convert a UCR/UEA archive file to ``ts-cls v1``.

    Accepts the classic text layout (label first, then values) and the ``.ts``
    layout (``@`` header, then ``v,v,...[:v,v,...]:label`` per line). Labels
    are mapped to ``0..C-1`` in sorted order.
    """
    rows = _read_ucr(src, delimiter)
    if not rows:
        raise ParseError(src, 0, "no samples found")
    D = len(rows[0][1])
    T = len(rows[0][1][0])
    if any(len(ch) != D or any(len(c) != T for c in ch) for _, ch in rows):
        raise ParseError(src, 0, "series have unequal lengths or channel counts")
    classes = sorted({_label_key(lab) for lab, _ in rows})
    index = {c: i for i, c in enumerate(classes)}
    X = np.array([ch for _, ch in rows], dtype=np.float64).transpose(0, 2, 1)
    ds = ClassificationDataset(T, D, len(classes),
                               np.array([index[_label_key(lab)] for lab, _ in rows], dtype=np.int64), X)
    write_classification_file(ds, dst)
    return ds


# ---------------------------------------------------------------------------
# regression
# ---------------------------------------------------------------------------


@dataclass
class RegressionSeries:
    values: np.ndarray                # (N, D), chronological
    names: list = field(default_factory=list)

    @property
    def N(self) -> int:
        return self.values.shape[0]

    @property
    def D(self) -> int:
        return self.values.shape[1]


def parse_regression_csv(path) -> RegressionSeries:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError(path, 1, "missing header row")
    names = [n.strip() for n in rows[0]]
    D = len(names)
    values = []
    for i, row in enumerate(rows[1:], start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != D:
            raise ParseError(path, i, f"row has {len(row)} cells, header has {D}")
        try:
            vals = [float(c) for c in row]
        except ValueError:
            raise ParseError(path, i, f"non-numeric cell in {row!r}") from None
        if not all(math.isfinite(v) for v in vals):
            raise ParseError(path, i, "non-finite value")
        values.append(vals)
    return RegressionSeries(np.array(values, dtype=np.float64).reshape(len(values), D), names)


def chronological_split(series, train_fraction: float = 0.7):
    """First ``floor(N * train_fraction)`` rows for training, the rest for testing."""
    values = series.values if isinstance(series, RegressionSeries) else np.asarray(series)
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie strictly between 0 and 1")
    N = values.shape[0]
    if N < 2:
        raise ValueError(f"need at least 2 rows to split, got {N}")
    cut = math.floor(N * train_fraction)
    return values[:cut], values[cut:]


@dataclass
class WindowedDataset:
    L: int
    P: int
    inputs: np.ndarray    # (n, L, D)
    targets: np.ndarray   # (n, P, D)

    def __len__(self) -> int:
        return self.inputs.shape[0]

    def flat_targets(self) -> np.ndarray:
        return self.targets.reshape(len(self), -1)


def make_windows(segment, L: int, P: int) -> WindowedDataset:
    """All contiguous (L inputs, next P targets) windows; ``N' - L - P + 1`` of them."""
    seg = np.asarray(segment, dtype=np.float64)
    if seg.ndim == 1:
        seg = seg[:, None]
    if L < 1 or P < 1:
        raise ValueError("L and P must be >= 1")
    n = seg.shape[0] - L - P + 1
    if n < 1:
        raise ValueError(f"segment of length {seg.shape[0]} too short: need at least L+P={L + P} rows")
    idx = np.arange(n)[:, None]
    inputs = seg[idx + np.arange(L)]
    targets = seg[idx + L + np.arange(P)]
    return WindowedDataset(L, P, inputs, targets)


class Normalizer:
    """Per-variable min-max scaling to [0, 1], fitted on training rows only."""

    def __init__(self):
        self.lo = None
        self.hi = None

    def fit(self, train) -> "Normalizer":
        train = np.asarray(train, dtype=np.float64)
        if train.ndim == 1:
            train = train[:, None]
        if train.shape[0] == 0:
            raise ValueError("cannot fit a normalizer on zero rows")
        self.lo = train.min(axis=0)
        self.hi = train.max(axis=0)
        return self

    def _check(self):
        if self.lo is None:
            raise NotFittedError("normalizer used before fit")

    def apply(self, x) -> np.ndarray:
        self._check()
        x = np.asarray(x, dtype=np.float64)
        span = self.hi - self.lo
        safe = np.where(span > 0, span, 1.0)
        return np.where(span > 0, (x - self.lo) / safe, 0.0)

    def invert(self, y) -> np.ndarray:
        self._check()
        y = np.asarray(y, dtype=np.float64)
        span = self.hi - self.lo
        return np.where(span > 0, y * span + self.lo, self.lo)


def fit_normalizer(train) -> Normalizer:
    return Normalizer().fit(train)


@dataclass
class RegressionTask:
    """Normalized train/test windows built from one chronological series."""

    train: WindowedDataset
    test: WindowedDataset
    normalizer: Normalizer


def build_regression_task(series, L: int, P: int, train_fraction: float = 0.7) -> RegressionTask:
    train_seg, test_seg = chronological_split(series, train_fraction)
    norm = fit_normalizer(train_seg)
    return RegressionTask(
        make_windows(norm.apply(train_seg), L, P),
        make_windows(norm.apply(test_seg), L, P),
        norm,
    )
