"""Matched score tables: parsing, splitting, synthesis and correlation.

A matched table holds one row per comparison event. Every row carries a
score from each matcher plus the genuine/impostor label, which is what
lets a cascade be replayed on real joint scores.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

GENUINE = 1
IMPOSTOR = 0


class ScoreFormatError(ValueError):
    """Raised for malformed wide-CSV input; carries the 1-based line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class InsufficientRowsError(ValueError):
    pass


class NotPSDError(ValueError):
    pass


def _frozen(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class ScoreSet:
    """Class-conditional scores of a single matcher."""

    genuine: np.ndarray
    impostor: np.ndarray

    def __post_init__(self):
        gen = _frozen(np.ravel(self.genuine), float)
        imp = _frozen(np.ravel(self.impostor), float)
        if gen.size == 0 or imp.size == 0:
            raise ValueError("ScoreSet needs at least one genuine and one impostor score")
        if not (np.all(np.isfinite(gen)) and np.all(np.isfinite(imp))):
            raise ValueError("ScoreSet scores must be finite")
        object.__setattr__(self, "genuine", gen)
        object.__setattr__(self, "impostor", imp)
        object.__setattr__(self, "_gen_sorted", _frozen(np.sort(gen), float))
        object.__setattr__(self, "_imp_sorted", _frozen(np.sort(imp), float))

    @property
    def genuine_sorted(self) -> np.ndarray:
        return self._gen_sorted

    @property
    def impostor_sorted(self) -> np.ndarray:
        return self._imp_sorted

    def __eq__(self, other):
        if not isinstance(other, ScoreSet):
            return NotImplemented
        return np.array_equal(self.genuine, other.genuine) and np.array_equal(
            self.impostor, other.impostor
        )


@dataclass(frozen=True, eq=False)
class MatchedScoreTable:
    """Comparison events with one score per matcher and a class label.

    Stored column-wise: ``scores`` has shape ``(n_rows, n_matchers)`` and
    ``labels`` is a boolean array that is True for genuine rows.
    """

    matcher_names: tuple[str, ...]
    ids: tuple[str, ...]
    labels: np.ndarray
    scores: np.ndarray

    def __post_init__(self):
        names = tuple(str(n) for n in self.matcher_names)
        if not names:
            raise ValueError("a score table needs at least one matcher")
        if any(not n for n in names):
            raise ValueError("matcher names must be non-empty")
        if len(set(names)) != len(names):
            raise ValueError(f"matcher names must be unique: {names}")
        ids = tuple(str(i) for i in self.ids)
        labels = _frozen(np.asarray(self.labels).astype(bool), bool)
        scores = np.array(self.scores, dtype=float)
        if scores.size == 0:
            scores = scores.reshape(0, len(names))
        if scores.ndim != 2 or scores.shape[1] != len(names):
            raise ValueError(
                f"score matrix shape {scores.shape} does not match {len(names)} matchers"
            )
        if not (len(ids) == labels.shape[0] == scores.shape[0]):
            raise ValueError("ids, labels and score rows differ in length")
        if not np.all(np.isfinite(scores)):
            raise ValueError("all scores must be finite")
        scores.flags.writeable = False
        object.__setattr__(self, "matcher_names", names)
        object.__setattr__(self, "ids", ids)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "scores", scores)

    def __len__(self) -> int:
        return len(self.ids)

    def __eq__(self, other):
        if not isinstance(other, MatchedScoreTable):
            return NotImplemented
        return (
            self.matcher_names == other.matcher_names
            and self.ids == other.ids
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.scores, other.scores)
        )

    @property
    def n_genuine(self) -> int:
        return int(self.labels.sum())

    @property
    def n_impostor(self) -> int:
        return int(len(self) - self.labels.sum())

    def rows(self) -> Iterator[tuple[str, int, tuple[float, ...]]]:
        for i, row_id in enumerate(self.ids):
            label = GENUINE if self.labels[i] else IMPOSTOR
            yield row_id, label, tuple(float(s) for s in self.scores[i])

    def column(self, matcher: str) -> np.ndarray:
        try:
            j = self.matcher_names.index(matcher)
        except ValueError:
            raise KeyError(f"unknown matcher {matcher!r}; table has {list(self.matcher_names)}")
        return self.scores[:, j]

    def subset(self, index) -> "MatchedScoreTable":
        index = np.asarray(index)
        if index.dtype == bool:
            index = np.flatnonzero(index)
        index = index.astype(int)
        return MatchedScoreTable(
            self.matcher_names,
            tuple(self.ids[i] for i in index),
            self.labels[index],
            self.scores[index],
        )

    def require_both_classes(self, what: str = "table") -> None:
        if self.n_genuine == 0 or self.n_impostor == 0:
            raise ValueError(
                f"{what} needs genuine and impostor rows "
                f"(has {self.n_genuine} genuine, {self.n_impostor} impostor)"
            )

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update("\x1f".join(self.matcher_names).encode())
        h.update("\x1f".join(self.ids).encode())
        h.update(np.ascontiguousarray(self.labels).tobytes())
        h.update(np.ascontiguousarray(self.scores, dtype="<f8").tobytes())
        return h.hexdigest()


def parse_score_table(text) -> MatchedScoreTable:
    """Parse the wide CSV layout ``id,label,<matcher1>,<matcher2>,...``.

    ``text`` may be a string or a text stream. Labels are ``1`` (genuine)
    or ``0`` (impostor); anything else is an error.
    """
    stream = io.StringIO(text) if isinstance(text, str) else text
    reader = csv.reader(stream)
    try:
        header = next(reader)
    except StopIteration:
        raise ScoreFormatError("empty input, expected a header", 1)
    header = [h.strip() for h in header]
    if len(header) < 3 or header[0] != "id" or header[1] != "label":
        raise ScoreFormatError(
            "header must be 'id,label,<matcher>,...' with at least one matcher", 1
        )
    names = header[2:]
    if any(not n for n in names):
        raise ScoreFormatError("empty matcher name in header", 1)
    if len(set(names)) != len(names):
        raise ScoreFormatError("duplicate matcher name in header", 1)

    ids, labels, rows = [], [], []
    for record in reader:
        line = reader.line_num
        if not record or (len(record) == 1 and not record[0].strip()):
            continue
        if len(record) != len(header):
            raise ScoreFormatError(
                f"expected {len(header)} fields, got {len(record)}", line
            )
        label = record[1].strip()
        if label == "1":
            labels.append(True)
        elif label == "0":
            labels.append(False)
        else:
            raise ScoreFormatError(f"unknown label {label!r} (expected 0 or 1)", line)
        values = []
        for name, raw in zip(names, record[2:]):
            try:
                v = float(raw)
            except ValueError:
                raise ScoreFormatError(f"non-numeric score {raw!r} for {name}", line)
            if not math.isfinite(v):
                raise ScoreFormatError(f"non-finite score {raw!r} for {name}", line)
            values.append(v)
        ids.append(record[0])
        rows.append(values)

    scores = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return MatchedScoreTable(tuple(names), tuple(ids), np.array(labels, dtype=bool), scores)


def read_score_table(path) -> MatchedScoreTable:
    with open(path, newline="", encoding="utf-8") as f:
        return parse_score_table(f)


def format_score_table(table: MatchedScoreTable) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["id", "label", *table.matcher_names])
    for row_id, label, scores in table.rows():
        writer.writerow([row_id, label, *(repr(s) for s in scores)])
    return out.getvalue()


def write_score_table(table: MatchedScoreTable, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(format_score_table(table))


def split_table(
    table: MatchedScoreTable, n_genuine_train: int, n_impostor_train: int, seed: int
) -> tuple[MatchedScoreTable, MatchedScoreTable]:
    """Random per-class partition into a training and a probe table.

    Both halves keep the input row order.
    """
    gen_idx = np.flatnonzero(table.labels)
    imp_idx = np.flatnonzero(~table.labels)
    if n_genuine_train < 0 or n_impostor_train < 0:
        raise ValueError("training counts must be non-negative")
    if n_genuine_train > gen_idx.size:
        raise InsufficientRowsError(
            f"requested {n_genuine_train} genuine training rows, only {gen_idx.size} available"
        )
    if n_impostor_train > imp_idx.size:
        raise InsufficientRowsError(
            f"requested {n_impostor_train} impostor training rows, only {imp_idx.size} available"
        )
    rng = np.random.default_rng(seed)
    train_gen = rng.choice(gen_idx, size=n_genuine_train, replace=False)
    train_imp = rng.choice(imp_idx, size=n_impostor_train, replace=False)
    in_train = np.zeros(len(table), dtype=bool)
    in_train[train_gen] = True
    in_train[train_imp] = True
    return table.subset(np.flatnonzero(in_train)), table.subset(np.flatnonzero(~in_train))


def column_score_set(table: MatchedScoreTable, matcher: str) -> ScoreSet:
    col = table.column(matcher)
    return ScoreSet(col[table.labels], col[~table.labels])


@dataclass(frozen=True, eq=False)
class CorrelationMatrix:
    matcher_names: tuple[str, ...]
    entries: np.ndarray

    def __getitem__(self, pair: tuple[str, str]) -> float:
        a, b = pair
        return float(
            self.entries[self.matcher_names.index(a), self.matcher_names.index(b)]
        )

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["matcher", *self.matcher_names])
        for name, row in zip(self.matcher_names, self.entries):
            writer.writerow([name, *(repr(float(v)) for v in row)])
        return out.getvalue()


def correlation_matrix(table: MatchedScoreTable, pooling: str = "pooled") -> CorrelationMatrix:
    """Pearson correlation between every pair of matcher columns.

    ``pooling`` selects the rows used: ``"pooled"`` (all rows, default),
    ``"genuine"`` or ``"impostor"``.
    """
    if pooling == "pooled":
        data = table.scores
    elif pooling == "genuine":
        data = table.scores[table.labels]
    elif pooling == "impostor":
        data = table.scores[~table.labels]
    else:
        raise ValueError(f"unknown pooling {pooling!r}")
    if data.shape[0] < 2:
        raise ValueError("correlation needs at least two rows")
    centred = data - data.mean(axis=0)
    ss = np.einsum("ij,ij->j", centred, centred)
    flat = [n for n, s in zip(table.matcher_names, ss) if s == 0.0]
    if flat:
        raise ValueError(f"zero-variance score column(s): {flat}")
    norm = centred / np.sqrt(ss)
    r = np.clip(norm.T @ norm, -1.0, 1.0)
    r = (r + r.T) / 2.0
    np.fill_diagonal(r, 1.0)
    r.flags.writeable = False
    return CorrelationMatrix(table.matcher_names, r)


# --- synthetic generation -------------------------------------------------


def _check_correlation(corr: np.ndarray, n: int, what: str, tol: float = 1e-10) -> np.ndarray:
    """Validate a correlation matrix and return a factor L with L @ L.T == corr."""
    if corr.shape != (n, n):
        raise ValueError(f"{what} correlation must be {n}x{n}, got {corr.shape}")
    if not np.array_equal(corr, corr.T):
        raise ValueError(f"{what} correlation matrix is not symmetric")
    if not np.all(np.diag(corr) == 1.0):
        raise ValueError(f"{what} correlation matrix needs a unit diagonal")
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        pass
    # Singular but PSD (e.g. duplicated matchers at r = 1): factor through eigh.
    w, v = np.linalg.eigh(corr)
    if w.min() < -tol:
        raise NotPSDError(
            f"{what} correlation matrix is not positive semidefinite "
            f"(smallest eigenvalue {w.min():.3g})"
        )
    return v * np.sqrt(np.clip(w, 0.0, None))


@dataclass(frozen=True, eq=False)
class SynthSpec:
    """Gaussian marginals per class and matcher, joined by a Gaussian copula."""

    matcher_names: tuple[str, ...]
    genuine_mean: Sequence[float]
    genuine_std: Sequence[float]
    impostor_mean: Sequence[float]
    impostor_std: Sequence[float]
    correlation: np.ndarray | None = None
    n_genuine: int = 1000
    n_impostor: int = 10000
    genuine_correlation: np.ndarray | None = None
    impostor_correlation: np.ndarray | None = None
    _factors: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        names = tuple(self.matcher_names)
        m = len(names)
        if m == 0 or len(set(names)) != m or any(not n for n in names):
            raise ValueError("matcher names must be unique and non-empty")
        object.__setattr__(self, "matcher_names", names)
        for attr in ("genuine_mean", "genuine_std", "impostor_mean", "impostor_std"):
            arr = np.asarray(getattr(self, attr), dtype=float)
            if arr.shape != (m,):
                raise ValueError(f"{attr} needs one value per matcher")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{attr} must be finite")
            object.__setattr__(self, attr, _frozen(arr, float))
        if np.any(self.genuine_std <= 0) or np.any(self.impostor_std <= 0):
            raise ValueError("standard deviations must be positive")
        if int(self.n_genuine) < 1 or int(self.n_impostor) < 1:
            raise ValueError("sample counts must be positive")
        shared = np.eye(m) if self.correlation is None else np.asarray(self.correlation, float)
        for cls, own in (("genuine", self.genuine_correlation), ("impostor", self.impostor_correlation)):
            corr = _frozen(shared if own is None else np.asarray(own, float), float)
            object.__setattr__(self, f"{cls}_correlation", corr)
            self._factors[cls] = _check_correlation(corr, m, cls)
        object.__setattr__(self, "correlation", _frozen(shared, float))

    @classmethod
    def from_dict(cls, doc: dict) -> "SynthSpec":
        names = doc["matchers"]
        gen, imp = doc["genuine"], doc["impostor"]
        return cls(
            matcher_names=tuple(names),
            genuine_mean=gen["mean"],
            genuine_std=gen["std"],
            impostor_mean=imp["mean"],
            impostor_std=imp["std"],
            correlation=doc.get("correlation"),
            genuine_correlation=gen.get("correlation"),
            impostor_correlation=imp.get("correlation"),
            n_genuine=int(doc["n_genuine"]),
            n_impostor=int(doc["n_impostor"]),
        )

    @classmethod
    def from_json(cls, text: str) -> "SynthSpec":
        return cls.from_dict(json.loads(text))

    def to_dict(self) -> dict:
        return {
            "matchers": list(self.matcher_names),
            "n_genuine": int(self.n_genuine),
            "n_impostor": int(self.n_impostor),
            "correlation": self.correlation.tolist(),
            "genuine": {
                "mean": self.genuine_mean.tolist(),
                "std": self.genuine_std.tolist(),
                "correlation": self.genuine_correlation.tolist(),
            },
            "impostor": {
                "mean": self.impostor_mean.tolist(),
                "std": self.impostor_std.tolist(),
                "correlation": self.impostor_correlation.tolist(),
            },
        }


def synth_generate(spec: SynthSpec, seed: int) -> MatchedScoreTable:
    """Draw a matched table: genuine rows first, then impostor rows."""
    rng = np.random.default_rng(seed)
    m = len(spec.matcher_names)
    blocks = []
    for cls, n, mean, std in (
        ("genuine", int(spec.n_genuine), spec.genuine_mean, spec.genuine_std),
        ("impostor", int(spec.n_impostor), spec.impostor_mean, spec.impostor_std),
    ):
        z = rng.standard_normal((n, m)) @ spec._factors[cls].T
        blocks.append(mean + std * z)
    n_g, n_i = int(spec.n_genuine), int(spec.n_impostor)
    ids = tuple(f"g{i}" for i in range(n_g)) + tuple(f"i{i}" for i in range(n_i))
    labels = np.concatenate([np.ones(n_g, bool), np.zeros(n_i, bool)])
    return MatchedScoreTable(spec.matcher_names, ids, labels, np.vstack(blocks))


def table_from_matrices(matrices: dict[str, np.ndarray]) -> MatchedScoreTable:
    """Build a matched table from per-matcher square similarity matrices.

    Entry ``(i, j)`` compares probe sample ``i`` with enrolled template
    ``j``; the diagonal holds genuine comparisons. All matrices must share
    one shape so that cell ``(i, j)`` is the same comparison event in each.
    """
    names = tuple(matrices)
    mats = [np.asarray(matrices[n], dtype=float) for n in names]
    shape = mats[0].shape
    if len(shape) != 2 or shape[0] != shape[1]:
        raise ValueError(f"score matrix for {names[0]} is not square: {shape}")
    if any(m.shape != shape for m in mats):
        raise ValueError("all score matrices must have the same shape")
    n = shape[0]
    ii, jj = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    ids = tuple(f"{a}:{b}" for a, b in zip(ii, jj))
    scores = np.column_stack([m.ravel() for m in mats])
    return MatchedScoreTable(names, ids, ii == jj, scores)
