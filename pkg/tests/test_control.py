import json

import numpy as np
import pytest
from hypothesis import given, settings

from qfeedback.actuator import actuator_update, has_direction
from qfeedback.cloning import clone
from qfeedback.config import ConfigError, LoopConfig, TrajectoryRecord
from qfeedback.control import (
    CSV_COLUMNS,
    export_trajectory,
    format_trajectory,
    load_trajectory,
    run_clone_loop,
    run_scenario,
)
from qfeedback.core import (
    DensityOperator,
    PureState,
    RngStream,
    apply_unitary,
    bloch_vector,
    fidelity,
    haar_random_state,
    state_from_bloch,
)
from qfeedback.plant import apply_noise
from qfeedback.recognition import GateSignal
from qfeedback.teleport import BellOutcome
from strategies import kets

R2 = 1 / np.sqrt(2)
UP = PureState([1, 0])


def clone_cfg(**kw):
    base = {"scenario": "clone", "initial_alpha": 0.6, "initial_beta": 0.8, "cycles": 10,
            "seed": 3, "cloner": {"N": 2, "M": 1}, "recognizer": {"d0": 0.1}}
    base.update(kw)
    return LoopConfig.from_dict(base)


class TestActuator:
    def test_aligned_is_identity(self):
        u = actuator_update(UP.to_density(), UP)
        np.testing.assert_allclose(u.matrix, np.eye(2), atol=1e-12)

    def test_shrunken_copy_drives_exactly(self):
        psi = PureState([0.6, 0.8])
        fb = clone(psi, 2).copies[1]
        out = apply_unitary(psi, actuator_update(fb, UP), [0])
        assert fidelity(UP, out) == pytest.approx(1.0, abs=1e-9)

    def test_rotation_angle(self):
        psi = PureState([0.6, 0.8])
        u = actuator_update(clone(psi, 2).copies[0], UP).matrix
        # |tr U| = 2 cos(angle / 2); angle is the polar angle of psi
        angle = np.arccos(bloch_vector(psi).z)
        assert abs(np.trace(u)) == pytest.approx(2 * np.cos(angle / 2), abs=1e-12)

    def test_maximally_mixed(self):
        rho = DensityOperator.maximally_mixed()
        assert not has_direction(rho)
        np.testing.assert_allclose(actuator_update(rho, UP).matrix, np.eye(2))

    def test_antialigned(self):
        down = PureState([0, 1])
        out = apply_unitary(down, actuator_update(down.to_density(), UP), [0])
        assert fidelity(UP, out) == pytest.approx(1.0, abs=1e-12)

    def test_antialigned_target_on_x_axis(self):
        plus, minus = PureState([R2, R2]), PureState([R2, -R2])
        out = apply_unitary(minus, actuator_update(minus.to_density(), plus), [0])
        assert fidelity(plus, out) == pytest.approx(1.0, abs=1e-12)

    @settings(max_examples=80, deadline=None)
    @given(kets(1), kets(1))
    def test_direction_matching(self, psi, target):
        fb = clone(psi, 3).copies[0]
        out = apply_unitary(psi, actuator_update(fb, target), [0])
        assert fidelity(target, out) == pytest.approx(1.0, abs=1e-9)


class TestNoise:
    def test_none_is_identity(self, rng):
        cfg = clone_cfg()
        psi = PureState([0.6, 0.8])
        assert apply_noise(psi, cfg.noise, rng) is psi

    def test_average_is_depolarizing(self):
        cfg = clone_cfg(noise={"kind": "depolarizing", "p": 0.4})
        psi = PureState([0.6, 0.8j])
        gen = RngStream(8)
        n = 20000
        avg = sum(apply_noise(psi, cfg.noise, gen).projector() for _ in range(n)) / n
        expected = 0.6 * psi.projector() + 0.4 * np.eye(2) / 2
        np.testing.assert_allclose(avg, expected, atol=0.015)


class TestConfig:
    def test_defaults(self):
        cfg = LoopConfig.from_dict({"scenario": "clone"})
        assert cfg.cloner.total_copies == 4 and cfg.recognizer.mode == "oracle"

    def test_complex_pairs(self):
        cfg = LoopConfig.from_dict({"scenario": "teleport", "initial_alpha": [0, R2],
                                    "initial_beta": R2})
        np.testing.assert_allclose(cfg.initial_state().amplitudes, [1j * R2, R2])

    @pytest.mark.parametrize("data", [
        {"scenario": "clone", "typo": 1},
        {"scenario": "clone", "cloner": {"N": 2, "M": 1, "K": 4}},
        {"scenario": "clone", "initial_alpha": 0.6, "initial_beta": 0.6},
        {"scenario": "clone", "cloner": {"N": 4, "M": 4}},
        {"scenario": "clone", "recognizer": {"d0": 0}},
        {"scenario": "clone", "recognizer": {"mode": "guess"}},
        {"scenario": "teleport", "channel": {"delay": -1}},
        {"scenario": "teleport", "noise": {"kind": "depolarizing", "p": 1.0}},
        {"scenario": "warp"},
        {"scenario": "clone", "cycles": 0},
        {"scenario": "clone", "seed": -4},
        {"initial_alpha": 1},
    ])
    def test_rejects(self, data):
        with pytest.raises(ConfigError):
            LoopConfig.from_dict(data)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            LoopConfig.load(tmp_path / "absent.json")

    def test_env_seed_fallback(self, monkeypatch):
        monkeypatch.setenv("QFEEDBACK_SEED", "42")
        assert LoopConfig.from_dict({"scenario": "clone"}).seed == 42
        assert LoopConfig.from_dict({"scenario": "clone", "seed": 5}).seed == 5

    def test_bases_count_checked(self):
        with pytest.raises(ConfigError):
            clone_cfg(recognizer={"bases": [[[1, 0], [0, 1]]]})


class TestCloneLoop:
    def test_converges_in_one_cycle(self):
        r = run_clone_loop(clone_cfg())[0]
        assert r.recognizer_max_distance == pytest.approx(0, abs=1e-12)
        assert r.gate_signal is GateSignal.On
        assert r.fidelity_to_target == pytest.approx(1.0, abs=1e-9)
        assert r.bell_outcome is None

    def test_direct_matrix_check(self):
        # brute force: rotate (0.6, 0.8) about y by minus its polar angle
        theta = 2 * np.arctan2(0.8, 0.6)
        ry = np.array([[np.cos(-theta / 2), -np.sin(-theta / 2)],
                       [np.sin(-theta / 2), np.cos(-theta / 2)]])
        assert abs((ry @ [0.6, 0.8])[0]) ** 2 == pytest.approx(1.0)
        assert run_clone_loop(clone_cfg(cycles=1))[0].fidelity_to_target == pytest.approx(
            1.0, abs=1e-9)

    def test_fixed_point(self):
        records = run_clone_loop(clone_cfg(initial_alpha=1, initial_beta=0))
        assert all(r.fidelity_to_target == pytest.approx(1.0, abs=1e-12) for r in records)
        assert all(r.gate_signal is GateSignal.On for r in records)

    def test_measured_mode_gate_blocks_actuator(self):
        records = run_clone_loop(clone_cfg(cycles=60, recognizer={"d0": 0.5, "mode": "measured"}))
        off = [r for r in records if r.gate_signal is GateSignal.Off]
        assert off, "expected at least one disagreeing cycle"
        for r in off:
            assert r.recognizer_max_distance == pytest.approx(R2, abs=1e-12)
            assert r.actuator_applied is False
        assert any(r.actuator_applied for r in records)

    def test_per_copy_bases(self):
        cfg = clone_cfg(recognizer={"d0": 2.0, "bases": [[[1, 0], [0, 1]],
                                                          [[R2, R2], [R2, -R2]]]})
        r = run_clone_loop(cfg)[0]
        assert r.recognizer_max_distance > 0.1

    def test_open_loop_baseline(self):
        records = run_clone_loop(clone_cfg(), feedback=False)
        assert not any(r.actuator_applied for r in records)
        assert all(r.fidelity_to_target == pytest.approx(0.36) for r in records)

    def test_depolarizing_feedback_beats_baseline(self):
        for seed in range(5):
            cfg = clone_cfg(seed=seed, noise={"kind": "depolarizing", "p": 0.2})
            fb = [r.fidelity_to_target for r in run_clone_loop(cfg)][1:10]
            base = [r.fidelity_to_target for r in run_clone_loop(cfg, feedback=False)][1:10]
            assert np.median(fb) > np.median(base)

    def test_dispatch(self):
        assert run_scenario(clone_cfg(cycles=2))[0].gate_signal is GateSignal.On

    def test_rejects_teleport_config(self):
        with pytest.raises(ConfigError):
            run_clone_loop(clone_cfg(scenario="teleport"))


def sample_records():
    return [
        TrajectoryRecord(1, 0.123456789123, BellOutcome.PhiPlus, None, None, True),
        TrajectoryRecord(2, 1.0, None, 0.70710678118, GateSignal.Off, False),
    ]


class TestExport:
    def test_csv_layout(self, tmp_path):
        path = export_trajectory(sample_records()[:1], "csv", tmp_path / "t.csv")
        lines = path.read_text().splitlines()
        assert lines[0] == ",".join(CSV_COLUMNS)
        assert lines[0] == "cycle,fidelity_to_target,bell_outcome,max_distance,gate_signal,actuator_applied"
        assert lines[1] == "1,0.123456789,PhiPlus,,,true"
        assert len(lines) == 2

    def test_csv_roundtrip(self, tmp_path):
        path = export_trajectory(sample_records(), "csv", tmp_path / "t.csv")
        assert load_trajectory(path) == [r.rounded() for r in sample_records()]

    def test_json_roundtrip(self, tmp_path):
        path = export_trajectory(sample_records(), "json", tmp_path / "t.json")
        data = json.loads(path.read_text())
        assert set(data[0]) == set(CSV_COLUMNS)
        assert data[1]["max_distance"] == 0.707106781
        assert load_trajectory(path) == [r.rounded() for r in sample_records()]

    def test_deterministic_bytes(self, tmp_path):
        a = export_trajectory(run_clone_loop(clone_cfg(
            noise={"kind": "depolarizing", "p": 0.1})), "csv", tmp_path / "a.csv")
        b = export_trajectory(run_clone_loop(clone_cfg(
            noise={"kind": "depolarizing", "p": 0.1})), "csv", tmp_path / "b.csv")
        assert a.read_bytes() == b.read_bytes()

    def test_empty(self):
        with pytest.raises(ValueError):
            format_trajectory([], "csv")

    def test_unknown_format(self):
        with pytest.raises(ValueError):
            format_trajectory(sample_records(), "xml")

    def test_unwritable(self, tmp_path):
        with pytest.raises(OSError):
            export_trajectory(sample_records(), "csv", tmp_path / "missing" / "t.csv")


def test_state_from_bloch_roundtrip(rng):
    for _ in range(20):
        psi = haar_random_state(1, rng)
        assert fidelity(psi, state_from_bloch(bloch_vector(psi).as_array())) == pytest.approx(1)
