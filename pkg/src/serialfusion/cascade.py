"""Serial matcher chains: calibration, analytic ROC prediction, ordering.

Every stage but the last has an uncertainty region ``[lower, upper]``
placed at its zeroFRR and zeroFAR points. A subject reaches the final
matcher only by being forwarded by every earlier stage, so the whole
chain's error rates factor into

    FAR(t) = prod(zeroFRR_i) * FAR_last(t)
    FRR(t) = prod(zeroFAR_i) * FRR_last(t)

where zeroFRR_i (zeroFAR_i) is the impostor (genuine) forward probability
of stage i.
"""

from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .roc import (
    CalibrationWarning,
    OperationalPoint,
    PointKind,
    RocCurve,
    auc,
    build_roc,
    eer,
    warn_if_degenerate,
    zero_far_point,
    zero_frr_point,
)
from .scores import MatchedScoreTable, column_score_set

MODEL_FORMAT = "serialfusion.cascade/1"
SMALL_SAMPLE = 10


@dataclass(frozen=True)
class StageConfig:
    matcher: str
    lower: OperationalPoint
    upper: OperationalPoint

    def __post_init__(self):
        if self.lower.kind is not PointKind.ZERO_FRR:
            raise ValueError("stage lower point must be a zeroFRR point")
        if self.upper.kind is not PointKind.ZERO_FAR:
            raise ValueError("stage upper point must be a zeroFAR point")

    @property
    def zero_frr(self) -> float:
        """Impostor forward probability (FAR at the lower threshold)."""
        return self.lower.far

    @property
    def zero_far(self) -> float:
        """Genuine forward probability (FRR at the upper threshold)."""
        return self.upper.frr

    @property
    def degenerate(self) -> bool:
        return self.zero_frr == 1.0 or self.zero_far == 1.0

    @property
    def empty_region(self) -> bool:
        # Only when training classes are separable: nothing is forwarded.
        return self.lower.threshold > self.upper.threshold

    def to_dict(self) -> dict:
        return {
            "matcher": self.matcher,
            "lower": self.lower.to_dict(),
            "upper": self.upper.to_dict(),
            "degenerate": self.degenerate,
            "empty_region": self.empty_region,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "StageConfig":
        return cls(
            doc["matcher"],
            OperationalPoint.from_dict(doc["lower"]),
            OperationalPoint.from_dict(doc["upper"]),
        )


def exact_product(values: Iterable[float]) -> float:
    """Correctly rounded product, independent of the order of ``values``."""
    return float(math.prod((Fraction(v) for v in values), start=Fraction(1)))


@dataclass(frozen=True, eq=False)
class CascadeModel:
    stages: tuple[StageConfig, ...]
    last_matcher: str
    last_roc: RocCurve
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ValueError("a cascade needs at least two matchers")
        if len(set(self.chain)) != len(self.chain):
            raise ValueError(f"chain has repeated matchers: {self.chain}")

    @property
    def chain(self) -> tuple[str, ...]:
        return tuple(s.matcher for s in self.stages) + (self.last_matcher,)

    @property
    def g_factor(self) -> float:
        """Product of zeroFRR values: impostor probability of reaching the last stage."""
        return exact_product(s.zero_frr for s in self.stages)

    @property
    def h_factor(self) -> float:
        """Product of zeroFAR values: genuine probability of reaching the last stage."""
        return exact_product(s.zero_far for s in self.stages)

    def __eq__(self, other):
        if not isinstance(other, CascadeModel):
            return NotImplemented
        return (
            self.stages == other.stages
            and self.last_matcher == other.last_matcher
            and self.last_roc == other.last_roc
            and self.provenance == other.provenance
        )

    def to_dict(self) -> dict:
        return {
            "format": MODEL_FORMAT,
            "chain": list(self.chain),
            "stages": [s.to_dict() for s in self.stages],
            "last_matcher": self.last_matcher,
            "last_roc": self.last_roc.to_list(),
            "g_factor": self.g_factor,
            "h_factor": self.h_factor,
            "provenance": self.provenance,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, doc: dict) -> "CascadeModel":
        if doc.get("format") != MODEL_FORMAT:
            raise ValueError(f"not a cascade model document (format={doc.get('format')!r})")
        return cls(
            tuple(StageConfig.from_dict(s) for s in doc["stages"]),
            doc["last_matcher"],
            RocCurve.from_list(doc["last_roc"]),
            doc.get("provenance", ""),
        )

    @classmethod
    def from_json(cls, text: str) -> "CascadeModel":
        return cls.from_dict(json.loads(text))


def calibrate(train: MatchedScoreTable, chain: Sequence[str]) -> CascadeModel:
    """Fit stage thresholds and the last-stage ROC on training data."""
    chain = tuple(chain)
    if len(chain) < 2:
        raise ValueError(f"a cascade needs at least two matchers, got {list(chain)}")
    if len(set(chain)) != len(chain):
        raise ValueError(f"chain has repeated matchers: {list(chain)}")
    missing = [m for m in chain if m not in train.matcher_names]
    if missing:
        raise KeyError(f"unknown matcher(s) {missing}; table has {list(train.matcher_names)}")
    train.require_both_classes("training table")
    if train.n_genuine < SMALL_SAMPLE or train.n_impostor < SMALL_SAMPLE:
        warnings.warn(
            f"small training sample ({train.n_genuine} genuine, {train.n_impostor} impostor); "
            "zeroFAR/zeroFRR estimates will be coarse",
            CalibrationWarning,
            stacklevel=2,
        )

    stages = []
    for name in chain[:-1]:
        scores = column_score_set(train, name)
        lower, upper = zero_frr_point(scores), zero_far_point(scores)
        warn_if_degenerate(name, lower, upper)
        stages.append(StageConfig(name, lower, upper))
    last = chain[-1]
    return CascadeModel(
        tuple(stages), last, build_roc(column_score_set(train, last)), train.fingerprint()
    )


@dataclass(frozen=True, eq=False)
class PredictedRoc:
    thresholds: np.ndarray
    far: np.ndarray
    frr: np.ndarray
    g_factor: float
    h_factor: float

    def as_curve(self) -> RocCurve:
        return RocCurve(self.thresholds, self.far, self.frr)


def predict_roc(model: CascadeModel) -> PredictedRoc:
    """Whole-chain ROC at every threshold of the last matcher's curve."""
    g, h = model.g_factor, model.h_factor
    roc = model.last_roc
    far = g * roc.far
    frr = h * roc.frr
    return PredictedRoc(roc.thresholds, far, frr, g, h)


def predicted_rates(model: CascadeModel, last_threshold) -> tuple:
    """Predicted (far, frr) at arbitrary last-stage threshold(s)."""
    far_n, frr_n = model.last_roc.rates_at(last_threshold)
    return model.g_factor * far_n, model.h_factor * frr_n


def heuristic_order(metrics: Mapping[str, tuple[float, float]]) -> list[str]:
    """Order matchers from worst to best so the strongest one runs last.

    ``metrics`` maps matcher name to ``(auc, eer)``. Ranking is by auc,
    then by lower eer, then by name.
    """
    if len(metrics) < 2:
        raise ValueError("need at least two matchers to order")
    return sorted(metrics, key=lambda m: (metrics[m][0], -metrics[m][1], m))


def matcher_metrics(table: MatchedScoreTable, matchers: Iterable[str] | None = None) -> dict:
    out = {}
    for name in matchers or table.matcher_names:
        curve = build_roc(column_score_set(table, name))
        out[name] = (auc(curve), eer(curve))
    return out


def enumerate_chains(matchers: Iterable[str], length: int) -> list[tuple[str, ...]]:
    """All ordered selections of ``length`` distinct matchers."""
    names = sorted(set(matchers))
    if not 2 <= length <= len(names):
        raise ValueError(f"chain length must be in [2, {len(names)}], got {length}")
    return list(itertools.permutations(names, length))


@dataclass(frozen=True)
class RankedChain:
    chain: tuple[str, ...]
    auc: float
    g_factor: float
    h_factor: float


def rank_chains(train: MatchedScoreTable, chains: Iterable[Sequence[str]]) -> list[RankedChain]:
    """Rank chains by predicted-ROC auc, best first; ties broken by chain name."""
    ranked = []
    for chain in chains:
        pred = predict_roc(calibrate(train, chain))
        ranked.append(RankedChain(tuple(chain), auc(pred.as_curve()), pred.g_factor, pred.h_factor))
    ranked.sort(key=lambda r: (-r.auc, r.chain))
    return ranked
