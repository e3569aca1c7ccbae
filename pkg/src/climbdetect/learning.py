"""Model fitting, threshold calibration and cross-validation.

Per-sensor Gamma hypothesis models are fitted on the concatenated annotated
signals; detection thresholds and the fusion weight are then grid-searched
against the performance coefficient c = TP/P - FP/N (twice the ROC distance
to the chance diagonal).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cusum import (BinaryStateSeries, DetectionConfig, SensorModel,
                    detect_from_increments, log_likelihood_ratio,
                    relabel_segments)
from .errors import DegenerateTruth, MissingState
from .gamma_model import HypothesisModel, fit_mle
from .orientation import ImuRecording, angular_velocity_norm, linear_acceleration
from .series import (ALL_SITES, H0, H1, AnnotationTrack, SensorSite,
                     SignalSeries, rasterize_track)

MIN_STATE_SAMPLES = 30

ALPHA_MODES = ("acc", "ang", "fused")


@dataclass
class SensorChannels:
    """The two detection inputs for one sensor: acceleration and angular-velocity norms."""

    acc: SignalSeries
    ang: SignalSeries


@dataclass
class LabeledClimb:
    """One climb's per-sensor signals with synchronized annotations."""

    climb_id: str
    channels: dict[SensorSite, SensorChannels]
    annotations: dict[SensorSite, AnnotationTrack] = field(default_factory=dict)
    recordings: dict[SensorSite, ImuRecording] = field(default_factory=dict)

    @classmethod
    def from_recordings(cls, climb_id: str,
                        recordings: dict[SensorSite, ImuRecording],
                        annotations: dict[SensorSite, AnnotationTrack] | None = None,
                        beta: float = 0.1) -> "LabeledClimb":
        channels = {
            site: SensorChannels(acc=linear_acceleration(rec, beta),
                                 ang=angular_velocity_norm(rec))
            for site, rec in recordings.items()
        }
        return cls(climb_id=climb_id, channels=channels,
                   annotations=dict(annotations or {}), recordings=dict(recordings))


def default_lambda_grid(n: int = 20, low: float = 0.1, high: float = 1000.0) -> np.ndarray:
    """Log-spaced threshold candidates, used for both lambda axes."""
    return np.geomspace(low, high, n)


def default_alpha_grid(step: float = 0.1) -> np.ndarray:
    return np.round(np.arange(0.0, 1.0 + step / 2, step), 10)


def _state_labels(climb: LabeledClimb, site: SensorSite) -> np.ndarray:
    ann = climb.annotations.get(site)
    if ann is None:
        raise MissingState(f"no annotation for site {site.value} in climb {climb.climb_id}")
    ch = climb.channels[site]
    return rasterize_track(ann, ch.acc.t0, ch.acc.dt, len(ch.acc))


def fit_models(climbs: list[LabeledClimb], site: SensorSite,
               ) -> tuple[HypothesisModel, HypothesisModel]:
    """Fit the (acc, ang) hypothesis models for one site on pooled climbs."""
    acc_parts, ang_parts, label_parts = [], [], []
    for climb in climbs:
        ch = climb.channels[site]
        acc_parts.append(ch.acc.values)
        ang_parts.append(ch.ang.values)
        label_parts.append(_state_labels(climb, site))
    acc = np.concatenate(acc_parts)
    ang = np.concatenate(ang_parts)
    labels = np.concatenate(label_parts)
    models = []
    for values in (acc, ang):
        params = []
        for state in (H0, H1):
            selected = values[labels == state]
            if len(selected) < MIN_STATE_SAMPLES:
                raise MissingState(
                    f"state H{state} has {len(selected)} samples at {site.value}; "
                    f"need {MIN_STATE_SAMPLES}")
            params.append(fit_mle(selected))
        models.append(HypothesisModel(h0=params[0], h1=params[1]))
    return models[0], models[1]


def _confusion(pred: np.ndarray, truth: np.ndarray) -> tuple[int, int, int, int]:
    """(TP, FP, P, N) with H1 as the positive class."""
    pred = pred.astype(bool)
    truth = truth.astype(bool)
    tp = int(np.count_nonzero(pred & truth))
    fp = int(np.count_nonzero(pred & ~truth))
    p = int(np.count_nonzero(truth))
    return tp, fp, p, len(truth) - p


def performance_coefficient(pred: BinaryStateSeries, truth) -> float:
    """c = TP/P - FP/N in [-1, 1]; truth is an AnnotationTrack or label array."""
    if isinstance(truth, AnnotationTrack):
        truth = rasterize_track(truth, pred.t0, pred.dt, len(pred.states))
    truth = np.asarray(truth)
    if len(truth) != len(pred.states):
        raise ValueError("prediction and truth must share the sample grid")
    tp, fp, p, n = _confusion(pred.states, truth)
    if p == 0 or n == 0:
        raise DegenerateTruth("truth must contain both states")
    return tp / p - fp / n


@dataclass
class _SitePrep:
    """Per-climb precomputations reused across grid cells."""

    l_acc: np.ndarray
    l_ang: np.ndarray
    truth: np.ndarray


def _prepare(climbs: list[LabeledClimb], site: SensorSite,
             models: tuple[HypothesisModel, HypothesisModel]) -> list[_SitePrep]:
    acc_model, ang_model = models
    prep = []
    for climb in climbs:
        ch = climb.channels[site]
        prep.append(_SitePrep(
            l_acc=log_likelihood_ratio(ch.acc.values, acc_model),
            l_ang=log_likelihood_ratio(ch.ang.values, ang_model),
            truth=_state_labels(climb, site)))
    return prep


def _pooled_score(prep: list[_SitePrep], alpha: float,
                  lambda0: float, lambda1: float) -> float:
    """c over the concatenated climbs; detections are onset-backdated."""
    tp = fp = p = n = 0
    for item in prep:
        inc = alpha * item.l_acc + (1.0 - alpha) * item.l_ang
        raw = detect_from_increments(inc, lambda0, lambda1, H0)
        states = relabel_segments(raw).states
        dtp, dfp, dp, dn = _confusion(states, item.truth)
        tp += dtp
        fp += dfp
        p += dp
        n += dn
    if p == 0 or n == 0:
        raise DegenerateTruth("truth must contain both states")
    return tp / p - fp / n


def optimize_thresholds(climbs: list[LabeledClimb], site: SensorSite,
                        models: tuple[HypothesisModel, HypothesisModel],
                        alpha: float, lambda_grid=None,
                        ) -> tuple[float, float, float]:
    """Exhaustive (lambda0, lambda1) search maximizing the pooled coefficient.

    Ties prefer the larger lambda1, then the larger lambda0 (fewer alarms).
    """
    if lambda_grid is None:
        lambda_grid = default_lambda_grid()
    lambda_grid = np.asarray(lambda_grid, dtype=float)
    if lambda_grid.size == 0:
        raise ValueError("empty threshold grid")
    prep = _prepare(climbs, site, models)
    best = (-np.inf, np.nan, np.nan)
    for lam1 in lambda_grid:
        for lam0 in lambda_grid:
            c = _pooled_score(prep, alpha, float(lam0), float(lam1))
            if c >= best[0]:
                best = (c, float(lam0), float(lam1))
    return best[1], best[2], best[0]


def optimize_alpha(climbs: list[LabeledClimb], site: SensorSite,
                   models: tuple[HypothesisModel, HypothesisModel],
                   alpha_grid=None, lambda_grid=None,
                   ) -> tuple[float, float, float, float]:
    """Nested search over the fusion weight, then the thresholds."""
    if alpha_grid is None:
        alpha_grid = default_alpha_grid()
    best = (-np.inf, np.nan, np.nan, np.nan)
    for alpha in np.asarray(alpha_grid, dtype=float):
        lam0, lam1, c = optimize_thresholds(climbs, site, models, float(alpha), lambda_grid)
        if c > best[0]:
            best = (c, float(alpha), lam0, lam1)
    return best[1], best[2], best[3], best[0]


@dataclass
class ModeResult:
    """Cross-validation outcome for one (sensor, alpha-mode) pair."""

    score: float
    optimal_score: float
    lambda0: float
    lambda1: float
    alpha: float
    fold_scores: list[float] = field(default_factory=list)
    fold_optimal: list[float] = field(default_factory=list)


@dataclass
class EvaluationReport:
    """Per (sensor site, alpha-mode) cross-validation scores and parameters."""

    entries: dict[tuple[SensorSite, str], ModeResult] = field(default_factory=dict)


def _mode_alphas(mode: str) -> np.ndarray | None:
    if mode == "acc":
        return np.array([1.0])
    if mode == "ang":
        return np.array([0.0])
    return None  # fused: full alpha grid


def learn_sensor_models(climbs: list[LabeledClimb], mode: str = "fused",
                        alpha_grid=None, lambda_grid=None,
                        sites=None) -> tuple[dict[SensorSite, SensorModel], dict[SensorSite, float]]:
    """Fit models and calibrate thresholds/alpha on all given climbs."""
    if sites is None:
        sites = [s for s in ALL_SITES if all(s in c.channels for c in climbs)]
    grid = _mode_alphas(mode)
    if grid is None:
        grid = default_alpha_grid() if alpha_grid is None else alpha_grid
    sensor_models: dict[SensorSite, SensorModel] = {}
    scores: dict[SensorSite, float] = {}
    for site in sites:
        models = fit_models(climbs, site)
        alpha, lam0, lam1, c = optimize_alpha(climbs, site, models, grid, lambda_grid)
        sensor_models[site] = SensorModel(
            acc=models[0], ang=models[1],
            config=DetectionConfig(lambda0=lam0, lambda1=lam1, alpha=alpha))
        scores[site] = c
    return sensor_models, scores


def score_climb(climb: LabeledClimb, site: SensorSite, model: SensorModel) -> float:
    """Apply a learned sensor model to one climb and score it against its annotation."""
    prep = _prepare([climb], site, (model.acc, model.ang))
    return _pooled_score(prep, model.config.alpha,
                         model.config.lambda0, model.config.lambda1)


def cross_validate(climbs: list[LabeledClimb], alpha_grid=None, lambda_grid=None,
                   sites=None, modes=ALPHA_MODES,
                   refit_full: bool = True) -> EvaluationReport:
    """Leave-one-climb-out evaluation for every sensor and alpha mode.

    For each held-out climb the models and parameters are learned on the
    remaining climbs and scored on the held-out one; the per-fold optimal
    score repeats the learning on the held-out climb itself, bounding what
    the detector could achieve. Reported parameters come from a final fit on
    all climbs (skipped for speed when ``refit_full`` is false).
    """
    if len(climbs) < 2:
        raise ValueError("cross-validation needs at least 2 climbs")
    if sites is None:
        sites = [s for s in ALL_SITES if all(s in c.channels for c in climbs)]
    report = EvaluationReport()
    for site in sites:
        fold_scores = {mode: [] for mode in modes}
        fold_optimal = {mode: [] for mode in modes}
        for held_idx, held in enumerate(climbs):
            train = [c for i, c in enumerate(climbs) if i != held_idx]
            train_models = fit_models(train, site)
            held_models = fit_models([held], site)
            held_prep_train = _prepare([held], site, train_models)
            for mode in modes:
                grid = _mode_alphas(mode)
                if grid is None:
                    grid = default_alpha_grid() if alpha_grid is None else alpha_grid
                alpha, lam0, lam1, _ = optimize_alpha(train, site, train_models,
                                                      grid, lambda_grid)
                fold_scores[mode].append(
                    _pooled_score(held_prep_train, alpha, lam0, lam1))
                _, _, _, c_opt = optimize_alpha([held], site, held_models,
                                                grid, lambda_grid)
                fold_optimal[mode].append(c_opt)
        for mode in modes:
            if refit_full:
                full_models = fit_models(climbs, site)
                grid = _mode_alphas(mode)
                if grid is None:
                    grid = default_alpha_grid() if alpha_grid is None else alpha_grid
                alpha, lam0, lam1, _ = optimize_alpha(climbs, site, full_models,
                                                      grid, lambda_grid)
            else:
                alpha = lam0 = lam1 = float("nan")
            report.entries[(site, mode)] = ModeResult(
                score=float(np.mean(fold_scores[mode])),
                optimal_score=float(np.mean(fold_optimal[mode])),
                lambda0=lam0, lambda1=lam1, alpha=alpha,
                fold_scores=fold_scores[mode],
                fold_optimal=fold_optimal[mode])
    return report
