"""Empirical ROC curves and the zeroFAR / zeroFRR operational points.

Conventions used throughout the package:

* a score is accepted when it is strictly greater than the threshold, so
  ``FAR(t) = #{impostor > t} / #impostor``;
* at the final decision anything not accepted is rejected, so
  ``FRR(t) = #{genuine <= t} / #genuine``;
* an intermediate stage rejects only scores strictly below its lower
  threshold, which lets the lower threshold sit exactly on the smallest
  genuine score while keeping the stage's genuine rejection rate at zero.
"""

from __future__ import annotations

import csv
import enum
import io
import json
import warnings
from dataclasses import dataclass

import numpy as np

from .scores import ScoreSet


class CalibrationWarning(UserWarning):
    """Data is legal but degenerate or too small to trust."""


class PointKind(str, enum.Enum):
    ZERO_FAR = "zeroFAR"
    ZERO_FRR = "zeroFRR"
    GENERIC = "generic"


@dataclass(frozen=True)
class OperationalPoint:
    threshold: float
    far: float
    frr: float
    kind: PointKind = PointKind.GENERIC

    def __post_init__(self):
        object.__setattr__(self, "kind", PointKind(self.kind))
        if self.kind is PointKind.ZERO_FAR and self.far != 0.0:
            raise ValueError("a zeroFAR point must have far == 0")
        if self.kind is PointKind.ZERO_FRR and self.frr != 0.0:
            raise ValueError("a zeroFRR point must have frr == 0")

    def to_dict(self) -> dict:
        return {
            "threshold": float(self.threshold),
            "far": float(self.far),
            "frr": float(self.frr),
            "kind": self.kind.value,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "OperationalPoint":
        return cls(float(doc["threshold"]), float(doc["far"]), float(doc["frr"]), doc["kind"])


def _count_above(sorted_scores: np.ndarray, t) -> np.ndarray:
    return sorted_scores.size - np.searchsorted(sorted_scores, t, side="right")


def _count_at_or_below(sorted_scores: np.ndarray, t) -> np.ndarray:
    return np.searchsorted(sorted_scores, t, side="right")


def far_at(scores: ScoreSet, threshold: float) -> float:
    """Fraction of impostor scores strictly above ``threshold``."""
    imp = scores.impostor_sorted
    return float(_count_above(imp, threshold) / imp.size)


def frr_at(scores: ScoreSet, threshold: float) -> float:
    """Fraction of genuine scores at or below ``threshold``."""
    gen = scores.genuine_sorted
    return float(_count_at_or_below(gen, threshold) / gen.size)


@dataclass(frozen=True, eq=False)
class RocCurve:
    """Step ROC: parallel arrays sorted by ascending threshold.

    The constructor checks ordering, range and monotonicity only. Curves
    from :func:`build_roc` additionally start at (far=1, frr=0) and end at
    (far=0, frr=1); cascade curves need not.
    """

    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray

    def __post_init__(self):
        t = np.array(self.thresholds, dtype=float)
        far = np.array(self.far, dtype=float)
        frr = np.array(self.frr, dtype=float)
        if not (t.ndim == far.ndim == frr.ndim == 1 and t.size == far.size == frr.size):
            raise ValueError("thresholds, far and frr must be equal-length vectors")
        if t.size == 0:
            raise ValueError("a ROC curve needs at least one point")
        if np.any(np.diff(t) < 0):
            raise ValueError("thresholds must be sorted ascending")
        for name, v in (("far", far), ("frr", frr)):
            if np.any(v < 0) or np.any(v > 1) or not np.all(np.isfinite(v)):
                raise ValueError(f"{name} values must lie in [0, 1]")
        if np.any(np.diff(far) > 0):
            raise ValueError("far must be non-increasing in threshold")
        if np.any(np.diff(frr) < 0):
            raise ValueError("frr must be non-decreasing in threshold")
        for name, v in (("thresholds", t), ("far", far), ("frr", frr)):
            v.flags.writeable = False
            object.__setattr__(self, name, v)

    def __len__(self) -> int:
        return self.thresholds.size

    def __eq__(self, other):
        if not isinstance(other, RocCurve):
            return NotImplemented
        return (
            np.array_equal(self.thresholds, other.thresholds)
            and np.array_equal(self.far, other.far)
            and np.array_equal(self.frr, other.frr)
        )

    def points(self):
        return list(zip(self.thresholds.tolist(), self.far.tolist(), self.frr.tolist()))

    def rates_at(self, threshold):
        """(far, frr) at arbitrary threshold(s) by previous-point step lookup.

        Exact for curves from :func:`build_roc`: counts only change at
        observed scores, so between stored thresholds the rates hold.
        Below the first stored threshold the trivial (1, 0) point applies.
        """
        t = np.asarray(threshold, dtype=float)
        idx = np.searchsorted(self.thresholds, t, side="right") - 1
        safe = np.clip(idx, 0, None)
        far = np.where(idx >= 0, self.far[safe], 1.0)
        frr = np.where(idx >= 0, self.frr[safe], 0.0)
        if far.ndim == 0:
            return float(far), float(frr)
        return far, frr

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["threshold", "far", "frr"])
        for t, a, r in self.points():
            writer.writerow([repr(t), repr(a), repr(r)])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text) -> "RocCurve":
        stream = io.StringIO(text) if isinstance(text, str) else text
        reader = csv.DictReader(stream)
        if reader.fieldnames is None or not {"threshold", "far", "frr"} <= set(reader.fieldnames):
            raise ValueError("curve CSV needs columns threshold,far,frr")
        rows = [(float(r["threshold"]), float(r["far"]), float(r["frr"])) for r in reader]
        if not rows:
            raise ValueError("curve CSV has no rows")
        t, a, r = zip(*rows)
        return cls(np.array(t), np.array(a), np.array(r))

    def to_list(self) -> list[dict]:
        return [{"threshold": t, "far": a, "frr": r} for t, a, r in self.points()]

    def to_json(self) -> str:
        return json.dumps(self.to_list())

    @classmethod
    def from_list(cls, items: list[dict]) -> "RocCurve":
        return cls(
            np.array([p["threshold"] for p in items], dtype=float),
            np.array([p["far"] for p in items], dtype=float),
            np.array([p["frr"] for p in items], dtype=float),
        )

    @classmethod
    def from_json(cls, text: str) -> "RocCurve":
        return cls.from_list(json.loads(text))


def build_roc(scores: ScoreSet) -> RocCurve:
    """ROC with one point per distinct score plus a sentinel at each end."""
    gen, imp = scores.genuine_sorted, scores.impostor_sorted
    distinct = np.unique(np.concatenate([gen, imp]))
    t = np.concatenate([[distinct[0] - 1.0], distinct, [distinct[-1] + 1.0]])
    far = _count_above(imp, t) / imp.size
    frr = _count_at_or_below(gen, t) / gen.size
    return RocCurve(t, far, frr)


def zero_frr_point(scores: ScoreSet) -> OperationalPoint:
    """Lower stage threshold: the smallest genuine score.

    With the strict ``score < lower`` reject rule no training genuine is
    rejected; the reported far is the impostor fraction that escapes
    rejection (scores >= the threshold), i.e. the zeroFRR value.
    """
    lower = float(scores.genuine_sorted[0])
    imp = scores.impostor_sorted
    far = (imp.size - np.searchsorted(imp, lower, side="left")) / imp.size
    return OperationalPoint(lower, float(far), 0.0, PointKind.ZERO_FRR)


def zero_far_point(scores: ScoreSet) -> OperationalPoint:
    """Upper stage threshold: the largest impostor score.

    Accepting only ``score > upper`` admits no training impostor; the
    reported frr is the genuine fraction not accepted, the zeroFAR value.
    """
    upper = float(scores.impostor_sorted[-1])
    return OperationalPoint(upper, 0.0, frr_at(scores, upper), PointKind.ZERO_FAR)


def _anchored(curve: RocCurve) -> tuple[np.ndarray, np.ndarray]:
    far = np.concatenate([[1.0], curve.far, [0.0]])
    frr = np.concatenate([[0.0], curve.frr, [1.0]])
    return far, frr


def auc(curve: RocCurve) -> float:
    """Trapezoidal area under (far, 1 - frr).

    The curve is anchored at the trivial operating points (1, 0) and
    (0, 1) so that curves which do not span the whole FAR axis (cascade
    curves) are closed; for :func:`build_roc` output the anchors add no
    area.
    """
    far, frr = _anchored(curve)
    tpr = 1.0 - frr
    return float(np.sum((far[:-1] - far[1:]) * (tpr[:-1] + tpr[1:]) / 2.0))


def eer(curve: RocCurve) -> float:
    """Equal error rate of a step ROC.

    Returns the common value where far == frr at some point. Otherwise the
    two steps cross between consecutive points a, b (far > frr at a,
    far < frr at b) and the midpoint of the crossing interval
    ``[max(far_b, frr_a), min(far_a, frr_b)]`` is returned.
    """
    far, frr = _anchored(curve)
    d = far - frr
    exact = np.flatnonzero(d == 0)
    if exact.size:
        return float(far[exact[0]])
    b = int(np.argmax(d < 0))
    a = b - 1
    lo = max(far[b], frr[a])
    hi = min(far[a], frr[b])
    return float((lo + hi) / 2.0)


def warn_if_degenerate(name: str, lower: OperationalPoint, upper: OperationalPoint) -> bool:
    """Warn when a stage forwards every impostor or every genuine comparison."""
    classes = [c for c, v in (("impostor", lower.far), ("genuine", upper.frr)) if v == 1.0]
    if classes:
        warnings.warn(
            f"matcher {name!r}: the stage forwards every {' and every '.join(classes)} "
            f"comparison (zeroFRR={lower.far}, zeroFAR={upper.frr}) and contributes a "
            "factor of 1 on that side",
            CalibrationWarning,
            stacklevel=3,
        )
        return True
    return False
