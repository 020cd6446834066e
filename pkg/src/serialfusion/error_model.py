"""Estimation-error model for the cascade prediction.

Two error sources are modelled for the non-final stages:

``alpha``
    the forward-probability values (zeroFRR, zeroFAR) are off by a rate
    displacement, e.g. because the class distributions were estimated
    from too few samples;
``epsilon``
    the thresholds are misplaced, so a stage that should reject no
    genuine (accept no impostor) actually does so at rate ``epsilon``.

To first order the chain's error rates then move by
``dFAR = +/- alpha * FAR_last(t) + epsilon`` for two matchers. Longer
chains use the first-order expansion of the product over stages.
"""

from __future__ import annotations

import csv
import enum
import io
from dataclasses import dataclass

import numpy as np

from .cascade import CascadeModel, PredictedRoc, exact_product
from .roc import OperationalPoint, PointKind, RocCurve
from .scores import MatchedScoreTable


class Sign(str, enum.Enum):
    PLUS = "plus"
    MINUS = "minus"
    BOTH = "both"


def _unit(sign) -> float:
    sign = Sign(sign)
    if sign is Sign.BOTH:
        raise ValueError("a single sign (plus or minus) is required here")
    return 1.0 if sign is Sign.PLUS else -1.0


@dataclass(frozen=True)
class ErrorParams:
    """Error amounts applied equally to the zeroFAR and zeroFRR values.

    With ``relative=True`` the ``alpha`` field is a fraction of each
    stage's own zero value (``alpha_j = alpha * zero_j``) instead of an
    absolute rate. ``stage_alphas`` overrides alpha per non-final stage
    with absolute rates.
    """

    alpha: float = 0.0
    epsilon: float = 0.0
    sign: Sign = Sign.BOTH
    relative: bool = False
    stage_alphas: tuple[float, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "sign", Sign(self.sign))
        values = [self.alpha, self.epsilon, *(self.stage_alphas or ())]
        if any(not (0.0 <= v < 1.0) for v in values):
            raise ValueError(f"alpha and epsilon must lie in [0, 1), got {values}")
        if self.stage_alphas is not None:
            object.__setattr__(self, "stage_alphas", tuple(float(a) for a in self.stage_alphas))

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "epsilon": self.epsilon,
            "sign": self.sign.value,
            "relative": self.relative,
            "stage_alphas": None if self.stage_alphas is None else list(self.stage_alphas),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "ErrorParams":
        stage = doc.get("stage_alphas")
        return cls(
            float(doc.get("alpha", 0.0)),
            float(doc.get("epsilon", 0.0)),
            doc.get("sign", "both"),
            bool(doc.get("relative", False)),
            None if stage is None else tuple(stage),
        )


def _alpha_for(zero_value: float, params: ErrorParams, stage: int | None = None) -> float:
    if params.stage_alphas is not None and stage is not None:
        return params.stage_alphas[stage]
    return params.alpha * zero_value if params.relative else params.alpha


def perturb_point(
    point: OperationalPoint, params: ErrorParams, sign
) -> tuple[OperationalPoint, bool]:
    """Displace a zeroFRR/zeroFAR point by alpha and epsilon.

    Returns the displaced point (kind ``generic``) and whether any rate
    had to be clamped into [0, 1].
    """
    s = _unit(sign)
    if point.kind is PointKind.ZERO_FRR:
        moved, other = point.far + s * _alpha_for(point.far, params), params.epsilon
        far, frr = moved, other
    elif point.kind is PointKind.ZERO_FAR:
        moved, other = point.frr + s * _alpha_for(point.frr, params), params.epsilon
        far, frr = other, moved
    else:
        raise ValueError("only zeroFRR and zeroFAR points can be perturbed")
    if params.alpha == 0.0 and params.epsilon == 0.0 and params.stage_alphas is None:
        return point, False
    cfar, cfrr = min(max(far, 0.0), 1.0), min(max(frr, 0.0), 1.0)
    clamped = (cfar, cfrr) != (far, frr)
    return OperationalPoint(point.threshold, cfar, cfrr, PointKind.GENERIC), clamped


def _stage_alphas(model: CascadeModel, params: ErrorParams):
    far_side = [_alpha_for(s.zero_frr, params, j) for j, s in enumerate(model.stages)]
    frr_side = [_alpha_for(s.zero_far, params, j) for j, s in enumerate(model.stages)]
    return far_side, frr_side


def _first_order(alphas, zeros, s: float) -> float:
    # sum_j s*alpha_j * prod_{i != j} zero_i ; equals s*alpha for one stage.
    total = 0.0
    for j, a in enumerate(alphas):
        total += s * a * exact_product(z for i, z in enumerate(zeros) if i != j)
    return total


def delta_roc(model: CascadeModel, params: ErrorParams, last_threshold, sign=None):
    """First-order displacement (dFAR, dFRR) of the predicted chain rates.

    ``sign`` defaults to ``params.sign``, which must then be plus or minus.
    Accepts a scalar or an array of last-stage thresholds.
    """
    s = _unit(params.sign if sign is None else sign)
    far_n, frr_n = model.last_roc.rates_at(last_threshold)
    a_far, a_frr = _stage_alphas(model, params)
    k_far = _first_order(a_far, [st.zero_frr for st in model.stages], s)
    k_frr = _first_order(a_frr, [st.zero_far for st in model.stages], s)
    return k_far * far_n + params.epsilon, k_frr * frr_n + params.epsilon


@dataclass(frozen=True, eq=False)
class ErrorBand:
    thresholds: np.ndarray
    far: np.ndarray
    far_low: np.ndarray
    far_high: np.ndarray
    frr: np.ndarray
    frr_low: np.ndarray
    frr_high: np.ndarray
    params: ErrorParams
    clamped: np.ndarray

    def contains(self, far, frr) -> np.ndarray:
        far, frr = np.asarray(far), np.asarray(frr)
        return (
            (self.far_low <= far) & (far <= self.far_high)
            & (self.frr_low <= frr) & (frr <= self.frr_high)
        )

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["threshold", "far", "far_low", "far_high", "frr", "frr_low", "frr_high"])
        cols = (self.thresholds, self.far, self.far_low, self.far_high,
                self.frr, self.frr_low, self.frr_high)
        for row in zip(*(c.tolist() for c in cols)):
            writer.writerow([repr(v) for v in row])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text) -> "ErrorBand":
        stream = io.StringIO(text) if isinstance(text, str) else text
        rows = list(csv.DictReader(stream))
        col = {k: np.array([float(r[k]) for r in rows]) for k in rows[0]}
        return cls(col["threshold"], col["far"], col["far_low"], col["far_high"],
                   col["frr"], col["frr_low"], col["frr_high"], ErrorParams(),
                   np.zeros(len(rows), bool))


def band(
    prediction: PredictedRoc, model: CascadeModel, params: ErrorParams, clamp: bool = True
) -> ErrorBand:
    """Interval around every predicted point covering both alpha signs.

    The upper edge is ``predicted + dPlus``. The lower edge is
    ``predicted + dMinus``, or the predicted value itself when epsilon
    outweighs the negative alpha term, so the prediction always lies
    inside its band.
    """
    t = prediction.thresholds
    dfar_p, dfrr_p = delta_roc(model, params, t, Sign.PLUS)
    dfar_m, dfrr_m = delta_roc(model, params, t, Sign.MINUS)
    far, frr = prediction.far, prediction.frr
    far_low = np.minimum(far, far + dfar_m)
    far_high = np.maximum(far, far + dfar_p)
    frr_low = np.minimum(frr, frr + dfrr_m)
    frr_high = np.maximum(frr, frr + dfrr_p)
    raw = (far_low, far_high, frr_low, frr_high)
    clamped = np.zeros(t.shape, bool)
    if clamp:
        clipped = tuple(np.clip(v, 0.0, 1.0) for v in raw)
        for before, after in zip(raw, clipped):
            clamped |= before != after
        raw = clipped
    return ErrorBand(t, far, raw[0], raw[1], frr, raw[2], raw[3], params, clamped)


@dataclass(frozen=True)
class StageError:
    matcher: str
    zero_frr_train: float
    zero_frr_probe: float
    zero_far_train: float
    zero_far_probe: float
    genuine_rejected: float
    impostor_accepted: float

    @property
    def alpha_frr_side(self) -> float:
        return self.zero_frr_probe - self.zero_frr_train

    @property
    def alpha_far_side(self) -> float:
        return self.zero_far_probe - self.zero_far_train


@dataclass(frozen=True)
class ErrorEstimate:
    params: ErrorParams
    stages: tuple[StageError, ...]

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "stages": [
                {
                    "matcher": s.matcher,
                    "zero_frr_train": s.zero_frr_train,
                    "zero_frr_probe": s.zero_frr_probe,
                    "zero_far_train": s.zero_far_train,
                    "zero_far_probe": s.zero_far_probe,
                    "genuine_rejected": s.genuine_rejected,
                    "impostor_accepted": s.impostor_accepted,
                }
                for s in self.stages
            ],
        }


def estimate_params(model: CascadeModel, probe: MatchedScoreTable) -> ErrorEstimate:
    """Measure alpha and epsilon of the calibrated stages on probe data.

    Per stage, at the stored thresholds: epsilon terms are the probe
    genuine rate below the lower threshold and the probe impostor rate
    above the upper one; alpha terms are the deviations of the probe
    forward rates from the stored zero values. ``epsilon`` and ``alpha``
    are the means of these terms (alpha of their absolute values); the
    sign follows the summed signed deviation.
    """
    missing = [m for m in model.chain if m not in probe.matcher_names]
    if missing:
        raise KeyError(f"probe table lacks matcher column(s) {missing}")
    probe.require_both_classes("probe table")
    rows = []
    for st in model.stages:
        col = probe.column(st.matcher)
        gen, imp = col[probe.labels], col[~probe.labels]
        rows.append(
            StageError(
                st.matcher,
                st.zero_frr,
                float(np.mean(imp >= st.lower.threshold)),
                st.zero_far,
                float(np.mean(gen <= st.upper.threshold)),
                float(np.mean(gen < st.lower.threshold)),
                float(np.mean(imp > st.upper.threshold)),
            )
        )
    eps_terms = [v for r in rows for v in (r.genuine_rejected, r.impostor_accepted)]
    dev = [v for r in rows for v in (r.alpha_frr_side, r.alpha_far_side)]
    params = ErrorParams(
        alpha=float(np.mean(np.abs(dev))),
        epsilon=float(np.mean(eps_terms)),
        sign=Sign.PLUS if sum(dev) >= 0 else Sign.MINUS,
    )
    return ErrorEstimate(params, tuple(rows))


def corrected_roc(prediction: PredictedRoc, model: CascadeModel, params: ErrorParams, sign=None):
    """Predicted curve shifted by the first-order displacement, clamped to [0, 1]."""
    dfar, dfrr = delta_roc(model, params, prediction.thresholds, sign)
    far = np.clip(prediction.far + dfar, 0.0, 1.0)
    frr = np.clip(prediction.frr + dfrr, 0.0, 1.0)
    return RocCurve(prediction.thresholds, far, frr)
