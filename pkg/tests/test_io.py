import numpy as np
import pytest

from climbdetect import io
from climbdetect.classifier import ActivityTimeline, ExplorationReport, LimbCounts
from climbdetect.cusum import (BinaryStateSeries, DetectionConfig,
                               HypothesisModel, SensorModel)
from climbdetect.gamma_model import GammaParams
from climbdetect.orientation import ImuRecording
from climbdetect.series import ALL_SITES, LIMBS, AnnotationTrack, SensorSite
from climbdetect.sync import TrajectorySeries


def make_recording(n=200, rate=100.0, site=SensorSite.RIGHT_HAND, mag=True):
    rng = np.random.default_rng(0)
    t = np.arange(n) / rate
    return ImuRecording(
        site=site, sample_rate=rate, t=t,
        accel=rng.normal(0, 1, (n, 3)) + [0, 0, 9.81],
        gyro=rng.normal(0, 0.5, (n, 3)),
        mag=rng.normal(0, 0.3, (n, 3)) + [0.5, 0, -0.8] if mag else None)


class TestRecordingCsv:
    def test_roundtrip(self, tmp_path):
        rec = make_recording()
        path = tmp_path / "c1_rh.csv"
        io.write_recording_csv(path, rec)
        back = io.read_recording_csv(path)
        assert back.site == SensorSite.RIGHT_HAND
        np.testing.assert_allclose(back.t, rec.t, atol=1e-12)
        np.testing.assert_allclose(back.accel, rec.accel)
        np.testing.assert_allclose(back.gyro, rec.gyro)
        np.testing.assert_allclose(back.mag, rec.mag)

    def test_site_from_filename(self, tmp_path):
        for site in ALL_SITES:
            path = tmp_path / f"climb-03_{site.value}.csv"
            io.write_recording_csv(path, make_recording(n=10, site=site))
            assert io.read_recording_csv(path).site == site

    def test_zero_mag_treated_as_absent(self, tmp_path):
        rec = make_recording(mag=False)
        path = tmp_path / "c1_lh.csv"
        io.write_recording_csv(path, rec)
        assert io.read_recording_csv(path).mag is None

    def test_gyro_degrees_autoconverted(self, tmp_path):
        rec = make_recording()
        deg = ImuRecording(site=rec.site, sample_rate=rec.sample_rate, t=rec.t,
                           accel=rec.accel, gyro=np.rad2deg(rec.gyro),
                           mag=rec.mag)
        path = tmp_path / "c1_rh.csv"
        io.write_recording_csv(path, deg)
        back = io.read_recording_csv(path)
        np.testing.assert_allclose(back.gyro, rec.gyro, atol=1e-10)

    def test_jittered_clock_resampled(self, tmp_path):
        rec = make_recording()
        jitter = np.random.default_rng(1).uniform(-0.002, 0.002, len(rec.t))
        jitter[0] = jitter[-1] = 0.0
        wobbly = ImuRecording(site=rec.site, sample_rate=rec.sample_rate,
                              t=rec.t + jitter, accel=rec.accel,
                              gyro=rec.gyro, mag=rec.mag)
        path = tmp_path / "c1_rh.csv"
        io.write_recording_csv(path, wobbly)
        back = io.read_recording_csv(path)
        np.testing.assert_allclose(np.diff(back.t), np.diff(back.t)[0], atol=1e-9)

    def test_gap_flagged_with_warning(self, tmp_path):
        rec = make_recording()
        t = rec.t.copy()
        t[100:] += 0.5  # half-second dropout
        gappy = ImuRecording(site=rec.site, sample_rate=rec.sample_rate, t=t,
                             accel=rec.accel, gyro=rec.gyro, mag=rec.mag)
        path = tmp_path / "c1_rh.csv"
        io.write_recording_csv(path, gappy)
        with pytest.warns(UserWarning, match="gap"):
            back = io.read_recording_csv(path)
        assert back.gap_indices


class TestAnnotationsJson:
    def test_roundtrip(self, tmp_path):
        annotations = {
            site: AnnotationTrack(site=site,
                                  intervals=[(0.0, 2.5, 0), (2.5, 7.25, 1),
                                             (7.25, 10.0, 0)])
            for site in ALL_SITES}
        path = tmp_path / "c1_annotations.json"
        io.write_annotations_json(path, annotations)
        back = io.read_annotations_json(path)
        assert set(back) == set(ALL_SITES)
        for site in ALL_SITES:
            assert back[site].intervals == annotations[site].intervals


class TestModelJson:
    def model(self):
        return SensorModel(
            acc=HypothesisModel(h0=GammaParams(2.0, 0.05), h1=GammaParams(3.0, 1.0)),
            ang=HypothesisModel(h0=GammaParams(1.5, 0.04), h1=GammaParams(2.5, 0.8)),
            config=DetectionConfig(lambda0=12.5, lambda1=30.0, alpha=0.7))

    def test_roundtrip(self, tmp_path):
        models = {site: self.model() for site in ALL_SITES}
        path = tmp_path / "model.json"
        io.write_model_json(path, models, provenance={"climbs": ["c1"]})
        back = io.read_model_json(path)
        assert back == models

    def test_deterministic_bytes(self, tmp_path):
        models = {site: self.model() for site in ALL_SITES}
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        io.write_model_json(a, models)
        io.write_model_json(b, models)
        assert a.read_bytes() == b.read_bytes()


class TestDetectionCsv:
    def test_roundtrip(self, tmp_path):
        series = BinaryStateSeries(
            t0=0.5, dt=0.01,
            states=np.array([0, 0, 1, 1, 1, 0], np.uint8),
            change_points=[(2, 1), (5, 0)], onsets=[1, 4])
        path = tmp_path / "det.csv"
        io.write_detection_csv(path, series)
        back = io.read_detection_csv(path)
        assert back.t0 == pytest.approx(series.t0)
        assert back.dt == pytest.approx(series.dt)
        np.testing.assert_array_equal(back.states, series.states)
        assert back.change_points == series.change_points
        assert back.onsets == series.onsets


class TestTimelineCsv:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(2)
        n = 50
        timeline = ActivityTimeline(
            t0=0.0, dt=0.02,
            full_body=rng.integers(0, 4, n).astype(np.uint8),
            limb_substates={site: rng.integers(0, 4, n).astype(np.uint8)
                            for site in LIMBS})
        path = tmp_path / "timeline.csv"
        io.write_timeline_csv(path, timeline)
        back = io.read_timeline_csv(path)
        np.testing.assert_array_equal(back.full_body, timeline.full_body)
        for site in LIMBS:
            np.testing.assert_array_equal(back.limb_substates[site],
                                          timeline.limb_substates[site])


class TestReportJson:
    def test_nonfinite_ratio_written_as_null(self, tmp_path):
        report = ExplorationReport(counts={
            SensorSite.RIGHT_HAND: LimbCounts(exploratory=2, performatory=1),
            SensorSite.LEFT_HAND: LimbCounts(exploratory=3, performatory=0),
            SensorSite.RIGHT_FOOT: LimbCounts(exploratory=0, performatory=0),
        })
        path = tmp_path / "report.json"
        io.write_report_json(path, report)
        import json
        doc = json.loads(path.read_text())
        assert doc["limbs"]["rh"]["ratio"] == 2.0
        assert doc["limbs"]["lh"]["ratio"] is None
        assert doc["limbs"]["rf"]["ratio"] is None


class TestTrajectoryCsv:
    def test_roundtrip(self, tmp_path):
        rng = np.random.default_rng(3)
        traj = TrajectorySeries(t0=1.0, dt=0.04, x=rng.normal(0, 1, 100),
                                y=rng.normal(0, 1, 100))
        path = tmp_path / "traj.csv"
        io.write_trajectory_csv(path, traj)
        back = io.read_trajectory_csv(path)
        assert back.t0 == pytest.approx(1.0)
        assert back.dt == pytest.approx(0.04)
        np.testing.assert_allclose(back.x, traj.x)
        np.testing.assert_allclose(back.y, traj.y)
