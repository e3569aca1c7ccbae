"""Synthetic labeled climbs with Gamma-distributed signal norms.

Ground-truth generator for end-to-end tests: per-site binary state plans
drive Gamma emissions for both detection channels, with annotations that
mirror the plan exactly. All randomness derives from a single seed through
numpy's PCG64 via spawned SeedSequence substreams, one per (site, purpose),
so runs are reproducible across platforms.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifier import FullBodyState
from .errors import InvalidPlan
from .gamma_model import GammaParams, HypothesisModel
from .learning import LabeledClimb, SensorChannels
from .orientation import GRAVITY, ImuRecording
from .series import ALL_SITES, H0, H1, LIMBS, AnnotationTrack, SensorSite, SignalSeries
from .sync import shift_annotations

# Earth magnetic field direction seen by an identity-orientation sensor
# (north component with downward dip).
MAG_FIELD = np.array([0.5, 0.0, -np.sqrt(3.0) / 2.0])


@dataclass
class StatePlan:
    """Per-site schedule of (duration_seconds, state) segments."""

    segments: dict[SensorSite, list[tuple[float, int]]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.segments:
            raise InvalidPlan("plan has no sites")
        for site, segs in self.segments.items():
            if not segs:
                raise InvalidPlan(f"no segments for {site.value}")
            for duration, state in segs:
                if duration <= 0:
                    raise InvalidPlan(f"non-positive duration {duration} for {site.value}")
                if state not in (H0, H1):
                    raise InvalidPlan(f"unknown state {state!r}")

    def duration(self, site: SensorSite) -> float:
        return sum(d for d, _ in self.segments[site])


def default_models() -> dict[SensorSite, tuple[HypothesisModel, HypothesisModel]]:
    """Well-separated emission models, shared by all sites."""
    acc = HypothesisModel(h0=GammaParams(2.0, 0.05), h1=GammaParams(3.0, 1.0))
    ang = HypothesisModel(h0=GammaParams(2.0, 0.04), h1=GammaParams(2.5, 0.8))
    return {site: (acc, ang) for site in ALL_SITES}


def random_plan(duration: float, rng: np.random.Generator,
                mean_dwell: tuple[float, float] = (6.0, 4.0),
                min_dwell: float = 1.0,
                sites=ALL_SITES) -> StatePlan:
    """Independent alternating H0/H1 schedules with exponential dwell times."""
    segments = {}
    for site in sites:
        segs = []
        remaining = duration
        state = H0
        while remaining > 0:
            dwell = max(min_dwell, float(rng.exponential(mean_dwell[state])))
            dwell = min(dwell, remaining)
            segs.append((dwell, state))
            remaining -= dwell
            state = 1 - state
        segments[site] = segs
    return StatePlan(segments=segments)


def plan_from_script(script: list[tuple[float, FullBodyState]],
                     rng: np.random.Generator | None = None) -> StatePlan:
    """Derive consistent limb/pelvis plans from a full-body state script.

    Hold interaction and traction need at least one moving limb; the moving
    subset is drawn from ``rng`` (first limb when rng is None).
    """
    segments = {site: [] for site in ALL_SITES}
    for duration, state in script:
        if duration <= 0:
            raise InvalidPlan(f"non-positive script duration {duration}")
        state = FullBodyState(state)
        pelvis = H1 if state in (FullBodyState.POSTURAL_REGULATION,
                                 FullBodyState.TRACTION) else H0
        if state in (FullBodyState.HOLD_INTERACTION, FullBodyState.TRACTION):
            if rng is None:
                moving = {LIMBS[0]}
            else:
                k = int(rng.integers(1, len(LIMBS) + 1))
                moving = set(rng.choice(len(LIMBS), size=k, replace=False))
                moving = {LIMBS[i] for i in moving}
        else:
            moving = set()
        for limb in LIMBS:
            segments[limb].append((duration, H1 if limb in moving else H0))
        segments[SensorSite.PELVIS].append((duration, pelvis))
    return StatePlan(segments=segments)


def _raster_states(segs: list[tuple[float, int]], sample_rate: float) -> np.ndarray:
    total = sum(d for d, _ in segs)
    n = int(round(total * sample_rate))
    labels = np.zeros(n, dtype=np.uint8)
    edge = 0.0
    for duration, state in segs:
        i0 = int(round(edge * sample_rate))
        edge += duration
        i1 = min(n, int(round(edge * sample_rate)))
        labels[i0:i1] = state
    return labels


def _intervals(segs: list[tuple[float, int]]) -> list[tuple[float, float, int]]:
    out = []
    edge = 0.0
    for duration, state in segs:
        out.append((edge, edge + duration, state))
        edge += duration
    return out


def simulate(plan: StatePlan,
             models: dict[SensorSite, tuple[HypothesisModel, HypothesisModel]] | None = None,
             sample_rate: float = 100.0, seed: int = 0,
             climb_id: str = "sim", triaxial: bool = False) -> LabeledClimb:
    """Draw a labeled climb from the plan's scheduled Gamma emissions.

    With ``triaxial`` set, matching IMU recordings are generated as well:
    the gravity-free acceleration norm is distributed per model and given a
    random direction, the sensor is held at identity orientation, and
    gravity plus the magnetic field are added in the sensor frame.
    """
    if models is None:
        models = default_models()
    missing = [s.value for s in plan.segments if s not in models]
    if missing:
        raise InvalidPlan(f"no models for sites: {missing}")
    root = np.random.SeedSequence(seed)
    site_seeds = dict(zip(sorted(plan.segments, key=lambda s: s.value),
                          root.spawn(len(plan.segments))))
    channels: dict[SensorSite, SensorChannels] = {}
    annotations: dict[SensorSite, AnnotationTrack] = {}
    recordings: dict[SensorSite, ImuRecording] = {}
    dt = 1.0 / sample_rate
    for site, segs in plan.segments.items():
        rng = np.random.default_rng(site_seeds[site])
        labels = _raster_states(segs, sample_rate)
        n = len(labels)
        acc_model, ang_model = models[site]
        series = {}
        for name, model in (("acc", acc_model), ("ang", ang_model)):
            v0 = rng.gamma(model.h0.k, model.h0.theta, n)
            v1 = rng.gamma(model.h1.k, model.h1.theta, n)
            series[name] = np.where(labels == H1, v1, v0)
        channels[site] = SensorChannels(
            acc=SignalSeries(0.0, dt, series["acc"]),
            ang=SignalSeries(0.0, dt, series["ang"]))
        annotations[site] = AnnotationTrack(site=site, intervals=_intervals(segs))
        if triaxial:
            def random_directions(count):
                v = rng.normal(size=(count, 3))
                return v / np.linalg.norm(v, axis=1, keepdims=True)

            accel = random_directions(n) * series["acc"][:, None]
            accel[:, 2] += GRAVITY
            gyro = random_directions(n) * series["ang"][:, None]
            recordings[site] = ImuRecording(
                site=site, sample_rate=sample_rate, t=dt * np.arange(n),
                accel=accel, gyro=gyro, mag=np.tile(MAG_FIELD, (n, 1)))
    return LabeledClimb(climb_id=climb_id, channels=channels,
                        annotations=annotations, recordings=recordings)


def inject_delay(climb: LabeledClimb, delay: float) -> LabeledClimb:
    """Shift annotations off the sensor clock by ``delay`` seconds."""
    durations = [len(ch.acc) * ch.acc.dt for ch in climb.channels.values()]
    if durations and abs(delay) >= min(durations) / 2:
        raise ValueError(f"delay {delay} too large for recording duration")
    annotations = {site: shift_annotations(ann, delay)
                   for site, ann in climb.annotations.items()}
    return LabeledClimb(climb_id=climb.climb_id, channels=climb.channels,
                        annotations=annotations, recordings=climb.recordings)
