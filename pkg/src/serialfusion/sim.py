"""Replay a calibrated cascade on matched probe scores."""

from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass

import numpy as np

from .cascade import CascadeModel, StageConfig
from .roc import RocCurve
from .scores import MatchedScoreTable


class Decision(str, enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    FORWARD = "forward"


def decide_stage(score: float, stage: StageConfig) -> Decision:
    """Accept above the upper threshold, reject below the lower, else forward.

    Both thresholds belong to the uncertainty region. If the region is
    empty (lower > upper) a score between them is accepted: the upper
    test runs first.
    """
    if score > stage.upper.threshold:
        return Decision.ACCEPT
    if score < stage.lower.threshold:
        return Decision.REJECT
    return Decision.FORWARD


@dataclass(frozen=True)
class StageCounts:
    matcher: str
    genuine_accepted: int = 0
    genuine_rejected: int = 0
    genuine_forwarded: int = 0
    impostor_accepted: int = 0
    impostor_rejected: int = 0
    impostor_forwarded: int = 0

    @property
    def genuine_inflow(self) -> int:
        return self.genuine_accepted + self.genuine_rejected + self.genuine_forwarded

    @property
    def impostor_inflow(self) -> int:
        return self.impostor_accepted + self.impostor_rejected + self.impostor_forwarded


@dataclass(frozen=True)
class CascadeRunResult:
    last_threshold: float
    far: float
    frr: float
    n_genuine: int
    n_impostor: int
    stages: tuple[StageCounts, ...]
    mean_stages_used: float

    @property
    def impostors_reaching_last(self) -> int:
        return self.stages[-1].impostor_inflow

    @property
    def genuines_reaching_last(self) -> int:
        return self.stages[-1].genuine_inflow

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["stages"] = [asdict(s) for s in self.stages]
        return doc

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def _score_matrix(model: CascadeModel, probe: MatchedScoreTable) -> np.ndarray:
    missing = [m for m in model.chain if m not in probe.matcher_names]
    if missing:
        raise KeyError(f"probe table lacks matcher column(s) {missing}")
    probe.require_both_classes("probe table")
    return np.column_stack([probe.column(m) for m in model.chain])


def _walk_front(model: CascadeModel, scores: np.ndarray, labels: np.ndarray):
    """Run the non-final stages; returns per-stage counts and the surviving mask."""
    alive = np.ones(scores.shape[0], bool)
    counts = []
    stages_used = np.zeros(scores.shape[0])
    for j, st in enumerate(model.stages):
        s = scores[:, j]
        stages_used += alive
        acc = alive & (s > st.upper.threshold)
        rej = alive & ~acc & (s < st.lower.threshold)
        fwd = alive & ~acc & ~rej
        counts.append(
            dict(
                matcher=st.matcher,
                genuine_accepted=int(np.sum(acc & labels)),
                genuine_rejected=int(np.sum(rej & labels)),
                genuine_forwarded=int(np.sum(fwd & labels)),
                impostor_accepted=int(np.sum(acc & ~labels)),
                impostor_rejected=int(np.sum(rej & ~labels)),
                impostor_forwarded=int(np.sum(fwd & ~labels)),
            )
        )
        alive = fwd
    stages_used += alive
    return counts, alive, stages_used


def run_cascade(model: CascadeModel, probe: MatchedScoreTable, last_threshold: float) -> CascadeRunResult:
    """Walk every probe row through the chain at one final threshold."""
    scores = _score_matrix(model, probe)
    labels = probe.labels
    counts, alive, used = _walk_front(model, scores, labels)
    last = scores[:, -1]
    acc = alive & (last > last_threshold)
    rej = alive & ~acc
    counts.append(
        dict(
            matcher=model.last_matcher,
            genuine_accepted=int(np.sum(acc & labels)),
            genuine_rejected=int(np.sum(rej & labels)),
            genuine_forwarded=0,
            impostor_accepted=int(np.sum(acc & ~labels)),
            impostor_rejected=int(np.sum(rej & ~labels)),
            impostor_forwarded=0,
        )
    )
    stages = tuple(StageCounts(**c) for c in counts)
    n_gen, n_imp = probe.n_genuine, probe.n_impostor
    far = sum(c.impostor_accepted for c in stages) / n_imp
    frr = sum(c.genuine_rejected for c in stages) / n_gen
    return CascadeRunResult(
        float(last_threshold), far, frr, n_gen, n_imp, stages, float(used.mean())
    )


def threshold_grid(spec: str, values) -> np.ndarray:
    """Threshold grid from ``"scores"`` or ``"uniform:K"``.

    ``scores`` uses every distinct value plus one sentinel below and one
    above; ``uniform:K`` spaces K points over [min, max] of ``values``.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("cannot build a grid from no scores")
    if spec == "scores":
        distinct = np.unique(values)
        return np.concatenate([[distinct[0] - 1.0], distinct, [distinct[-1] + 1.0]])
    if spec.startswith("uniform:"):
        try:
            k = int(spec.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad grid spec {spec!r}")
        if k < 1:
            raise ValueError("uniform grid needs at least one point")
        return np.linspace(values.min(), values.max(), k)
    raise ValueError(f"unknown grid spec {spec!r}; use 'scores' or 'uniform:K'")


def empirical_roc(model: CascadeModel, probe: MatchedScoreTable, thresholds=None) -> RocCurve:
    """Measured chain ROC over a grid of final-stage thresholds.

    Equivalent to calling :func:`run_cascade` per threshold; the
    threshold-independent front of the chain is evaluated once.
    """
    scores = _score_matrix(model, probe)
    labels = probe.labels
    if thresholds is None:
        thresholds = threshold_grid("scores", scores[:, -1])
    t = np.sort(np.asarray(thresholds, dtype=float).ravel())
    if t.size == 0:
        raise ValueError("empty threshold grid")
    counts, alive, _ = _walk_front(model, scores, labels)
    front_acc_imp = sum(c["impostor_accepted"] for c in counts)
    front_rej_gen = sum(c["genuine_rejected"] for c in counts)
    last = scores[:, -1]
    imp_last = np.sort(last[alive & ~labels])
    gen_last = np.sort(last[alive & labels])
    acc_imp = imp_last.size - np.searchsorted(imp_last, t, side="right")
    rej_gen = np.searchsorted(gen_last, t, side="right")
    far = (front_acc_imp + acc_imp) / probe.n_impostor
    frr = (front_rej_gen + rej_gen) / probe.n_genuine
    return RocCurve(t, far, frr)


@dataclass(frozen=True)
class DivergenceReport:
    max_abs_dfar: float
    mean_abs_dfar: float
    n_frr_grid: int
    max_abs_dfrr: float
    mean_abs_dfrr: float
    n_far_grid: int

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)


def far_at_frr(curve: RocCurve, frr_values) -> np.ndarray:
    """Lowest FAR reached with FRR <= each value (previous-point steps)."""
    idx = np.searchsorted(curve.frr, frr_values, side="right") - 1
    return curve.far[np.clip(idx, 0, None)]


def frr_at_far(curve: RocCurve, far_values) -> np.ndarray:
    """Lowest FRR reached with FAR <= each value (previous-point steps)."""
    rev_far = curve.far[::-1]
    rev_frr = curve.frr[::-1]
    idx = np.searchsorted(rev_far, far_values, side="right") - 1
    return rev_frr[np.clip(idx, 0, None)]


def _common_grid(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    lo, hi = max(a.min(), b.min()), min(a.max(), b.max())
    grid = np.unique(np.concatenate([a, b]))
    return grid[(grid >= lo) & (grid <= hi)]


def compare_rocs(a: RocCurve, b: RocCurve) -> DivergenceReport:
    """FAR gap on a shared FRR grid and FRR gap on a shared FAR grid."""
    frr_grid = _common_grid(a.frr, b.frr)
    far_grid = _common_grid(a.far, b.far)
    dfar = np.abs(far_at_frr(a, frr_grid) - far_at_frr(b, frr_grid))
    dfrr = np.abs(frr_at_far(a, far_grid) - frr_at_far(b, far_grid))

    def stats(d):
        return (float(d.max()), float(d.mean())) if d.size else (0.0, 0.0)

    return DivergenceReport(*stats(dfar), int(frr_grid.size), *stats(dfrr), int(far_grid.size))
