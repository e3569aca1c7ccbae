"""Full-body state classification and per-limb sub-state refinement.

Combines the five per-sensor binary detections into one of four exclusive
full-body states, splits each limb's mobile periods into Use / Change /
Exploration episodes relative to the traction phases, and counts
exploratory versus performatory movements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .cusum import BinaryStateSeries
from .errors import LengthMismatch
from .series import LIMBS, SensorSite

DEFAULT_MIN_EPISODE_SECONDS = 0.1


class FullBodyState(IntEnum):
    IMMOBILITY = 0
    POSTURAL_REGULATION = 1
    HOLD_INTERACTION = 2
    TRACTION = 3


class LimbSubState(IntEnum):
    IMMOBILITY = 0
    USE = 1
    CHANGE = 2
    EXPLORATION = 3


@dataclass
class ActivityTimeline:
    """Per-sample full-body states plus per-limb sub-state tracks."""

    t0: float
    dt: float
    full_body: np.ndarray
    limb_substates: dict[SensorSite, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.full_body = np.asarray(self.full_body, dtype=np.uint8)
        for site, track in self.limb_substates.items():
            track = np.asarray(track, dtype=np.uint8)
            if len(track) != len(self.full_body):
                raise LengthMismatch(f"sub-state track for {site.value} has wrong length")
            self.limb_substates[site] = track


@dataclass
class LimbCounts:
    exploratory: int
    performatory: int

    @property
    def ratio(self) -> float:
        """Exploratory/performatory episode ratio; inf or nan sentinels at zero denominators."""
        if self.performatory == 0:
            return math.inf if self.exploratory else math.nan
        return self.exploratory / self.performatory


@dataclass
class ExplorationReport:
    counts: dict[SensorSite, LimbCounts] = field(default_factory=dict)


def full_body_state(limbs, pelvis: int) -> FullBodyState:
    """Truth table over the four limb states and the pelvis state."""
    any_limb = any(int(s) == 1 for s in limbs)
    if pelvis:
        return FullBodyState.TRACTION if any_limb else FullBodyState.POSTURAL_REGULATION
    return FullBodyState.HOLD_INTERACTION if any_limb else FullBodyState.IMMOBILITY


def _full_body_array(limb_states: list[np.ndarray], pelvis: np.ndarray) -> np.ndarray:
    any_limb = np.zeros(len(pelvis), dtype=bool)
    for states in limb_states:
        any_limb |= states.astype(bool)
    pelvis = pelvis.astype(bool)
    out = np.full(len(pelvis), FullBodyState.IMMOBILITY, dtype=np.uint8)
    out[~any_limb & pelvis] = FullBodyState.POSTURAL_REGULATION
    out[any_limb & ~pelvis] = FullBodyState.HOLD_INTERACTION
    out[any_limb & pelvis] = FullBodyState.TRACTION
    return out


def episodes(states: np.ndarray) -> list[tuple[int, int]]:
    """Maximal runs of 1 as (start, end) index pairs, end exclusive."""
    padded = np.concatenate([[0], np.asarray(states, dtype=np.int8), [0]])
    diff = np.diff(padded)
    starts = np.flatnonzero(diff == 1)
    ends = np.flatnonzero(diff == -1)
    return list(zip(starts.tolist(), ends.tolist()))


def suppress_short_episodes(states: np.ndarray, min_samples: int) -> np.ndarray:
    """Merge mobile episodes shorter than ``min_samples`` into the immobile context."""
    out = np.asarray(states, dtype=np.uint8).copy()
    if min_samples > 1:
        for start, end in episodes(out):
            if end - start < min_samples:
                out[start:end] = 0
    return out


def limb_substates(limb: np.ndarray, full_body: np.ndarray) -> np.ndarray:
    """Sub-state per sample for one limb.

    Mobile episodes overlapping any traction sample are Use; for each
    traction onset the non-Use episode ending latest strictly before it is
    Change; every other mobile episode, including those after the last
    onset, is Exploration. A traction onset with no preceding episode simply
    yields no Change.
    """
    limb = np.asarray(limb, dtype=np.uint8)
    full_body = np.asarray(full_body, dtype=np.uint8)
    if len(limb) != len(full_body):
        raise LengthMismatch("limb and full-body series must have equal length")
    traction = full_body == FullBodyState.TRACTION
    out = np.full(len(limb), LimbSubState.IMMOBILITY, dtype=np.uint8)
    eps = episodes(limb)
    labels = [None] * len(eps)
    for i, (start, end) in enumerate(eps):
        if traction[start:end].any():
            labels[i] = LimbSubState.USE
    onsets = np.flatnonzero(traction & ~np.concatenate([[False], traction[:-1]]))
    for onset in onsets:
        best = None
        for i, (start, end) in enumerate(eps):
            if labels[i] == LimbSubState.USE or end > onset:
                continue
            if best is None or end > eps[best][1]:
                best = i
        if best is not None:
            labels[best] = LimbSubState.CHANGE
    for i, (start, end) in enumerate(eps):
        out[start:end] = labels[i] if labels[i] is not None else LimbSubState.EXPLORATION
    return out


def classify(detections: dict[SensorSite, BinaryStateSeries],
             min_episode_duration: float = DEFAULT_MIN_EPISODE_SECONDS) -> ActivityTimeline:
    """Build the activity timeline from the five per-sensor detections.

    All series are aligned to the pelvis grid by nearest-sample lookup and
    de-chattered before the full-body pass; the minimum episode duration
    affects episode counts and is echoed in report provenance.
    """
    pelvis = detections[SensorSite.PELVIS]
    n = len(pelvis.states)
    t_grid = pelvis.t0 + pelvis.dt * np.arange(n)
    min_samples = int(round(min_episode_duration / pelvis.dt))

    def aligned(series: BinaryStateSeries) -> np.ndarray:
        idx = np.rint((t_grid - series.t0) / series.dt).astype(int)
        idx = np.clip(idx, 0, len(series.states) - 1)
        return suppress_short_episodes(series.states[idx], min_samples)

    limb_states = {site: aligned(detections[site]) for site in LIMBS if site in detections}
    if len(limb_states) != len(LIMBS):
        missing = [s.value for s in LIMBS if s not in detections]
        raise LengthMismatch(f"missing limb detections: {missing}")
    pelvis_states = aligned(pelvis)
    full_body = _full_body_array(list(limb_states.values()), pelvis_states)
    substates = {site: limb_substates(states, full_body)
                 for site, states in limb_states.items()}
    return ActivityTimeline(t0=pelvis.t0, dt=pelvis.dt,
                            full_body=full_body, limb_substates=substates)


def exploration_report(timeline: ActivityTimeline) -> ExplorationReport:
    """Episode counts per limb: Exploration + Change versus Use."""
    report = ExplorationReport()
    for site, track in timeline.limb_substates.items():
        exploratory = len(episodes(track == LimbSubState.EXPLORATION)) \
            + len(episodes(track == LimbSubState.CHANGE))
        performatory = len(episodes(track == LimbSubState.USE))
        report.counts[site] = LimbCounts(exploratory=exploratory,
                                         performatory=performatory)
    return report
