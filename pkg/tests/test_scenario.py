import json

import numpy as np
import pytest

from magsweep.scenario import (
    M19_MOMENT,
    MineSource,
    Scenario,
    SurveyRecord,
    dipole_field,
    fixed_corner_scenario,
    generate_random_scenario,
    motor_field,
    read_survey_csv,
    serpentine_path,
    simulate,
    write_survey_csv,
)


def scalar_dipole(m, src, obs):
    """Independent scalar evaluation of the point-dipole formula (nT)."""
    rx, ry, rz = (obs[i] - src[i] for i in range(3))
    r = (rx * rx + ry * ry + rz * rz) ** 0.5
    ux, uy, uz = rx / r, ry / r, rz / r
    dot = m[0] * ux + m[1] * uy + m[2] * uz
    return [100.0 * (3.0 * u * dot - mi) / r**3 for u, mi in zip((ux, uy, uz), m)]


class TestDipoleField:
    def test_on_axis(self):
        b = dipole_field([0, 0, 1], [0, 0, 0], [0, 0, 1])
        assert np.allclose(b, [0, 0, 200.0], rtol=1e-12)

    def test_equatorial(self):
        b = dipole_field([0, 0, 1], [0, 0, 0], [1, 0, 0])
        assert np.allclose(b, [0, 0, -100.0], rtol=1e-12)

    def test_m19_overhead(self):
        # frozen from the scalar oracle: observer 0.60 m above an M19 mine
        expected = scalar_dipole(list(M19_MOMENT), [0, 0, 0], [0, 0, 0.6])
        assert np.allclose(expected,
                           [150.92592592592592, -40.27777777777777, -312.96296296296293])
        b = dipole_field(M19_MOMENT, [0, 0, 0], [0, 0, 0.6])
        assert np.allclose(b, expected, rtol=1e-12)

    def test_coincident_raises(self):
        with pytest.raises(ValueError):
            dipole_field([0, 0, 1], [1, 2, 3], [1, 2, 3])

    def test_inverse_cube_decay(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            m = rng.normal(size=3)
            ray = rng.normal(size=3)
            b1 = dipole_field(m, np.zeros(3), ray)
            b2 = dipole_field(m, np.zeros(3), 2.0 * ray)
            ratio = np.linalg.norm(b1) / np.linalg.norm(b2)
            assert abs(ratio - 8.0) <= 8.0 * 1e-9

    def test_vectorized_matches_loop(self):
        rng = np.random.default_rng(3)
        obs = rng.normal(size=(50, 3)) + 5.0
        m = rng.normal(size=3)
        batch = dipole_field(m, np.zeros(3), obs)
        for i in range(50):
            assert np.allclose(batch[i], dipole_field(m, np.zeros(3), obs[i]))


class TestMotorField:
    def _motor(self, amplitude=0.040, chirp=1.0, axis=(0, 0, 1.0), phase=np.pi / 2):
        from magsweep.scenario import BASE_FREQUENCIES, Motor, MotorComponent, MotorComponentKind
        comp = MotorComponent(
            kind=MotorComponentKind.INDUCED_FIELD,
            base_frequency=BASE_FREQUENCIES[MotorComponentKind.INDUCED_FIELD],
            chirp_factor=chirp,
            moment_amplitude=amplitude,
            axis=np.asarray(axis, dtype=float),
            phase=phase,
        )
        return Motor(np.zeros(3), [comp])

    def test_peak_amplitude_at_10cm(self):
        # full 0.040 A.m^2 moment 0.10 m away on-axis: 2*100*0.04/1e-3 = 8000 nT
        motor = self._motor(phase=np.pi / 2)  # sin term = 1 at t = 0
        b = motor_field(motor, np.zeros(3), [0, 0, 0.10], t=0.0, duration=100.0)
        assert np.allclose(np.linalg.norm(b[0]), 8000.0, rtol=1e-9)

    def test_zero_crossing(self):
        motor = self._motor(phase=0.0)
        b = motor_field(motor, np.zeros(3), [0, 0, 0.10], t=0.0, duration=100.0)
        assert np.allclose(b, 0.0, atol=1e-12)

    def test_degenerate_chirp_constant_frequency(self):
        motor = self._motor(chirp=1.0, phase=0.0)
        comp = motor.components[0]
        t = np.linspace(0.0, 50.0, 5001)
        m = comp.moment(t, duration=100.0)
        expected = 0.040 * np.sin(2 * np.pi * comp.base_frequency * t)
        assert np.allclose(m[:, 2], expected, atol=1e-12)

    def test_chirp_ends_at_scaled_frequency(self):
        # phase increment near t=T corresponds to chirp_factor * base_frequency
        motor = self._motor(chirp=5.0, phase=0.0)
        comp = motor.components[0]
        T, dt = 100.0, 1e-4
        m = comp.moment(np.array([T - dt, T]), duration=T)
        dphi = (np.arcsin(m[1, 2] / 0.040) - np.arcsin(m[0, 2] / 0.040))
        f_inst = abs(dphi) / (2 * np.pi * dt)
        assert f_inst == pytest.approx(5.0 * comp.base_frequency, rel=1e-3)


class TestSerpentinePath:
    def test_default_duration_and_sampling(self):
        path = serpentine_path()
        assert path.total_length == pytest.approx(100.0)
        times, pos = path.sample()
        assert len(times) == 10000
        assert np.allclose(np.diff(times), 0.01)
        # 1 cm spatial step
        steps = np.linalg.norm(np.diff(pos, axis=0), axis=1)
        assert np.allclose(steps, 0.01, atol=1e-9)

    def test_two_lines(self):
        path = serpentine_path(grid_size=4.0, n_lines=2)
        assert len(path.waypoints) == 4
        assert path.total_length == pytest.approx(4.0 + 4.0 + 4.0)

    def test_constant_altitude(self):
        path = serpentine_path(altitude=1.5)
        _, pos = path.sample()
        assert np.allclose(pos[:, 2], 1.5)


class TestScenarioGeneration:
    def test_determinism(self):
        a = generate_random_scenario(123)
        b = generate_random_scenario(123)
        assert a.to_dict() == b.to_dict()

    def test_mine_separation_and_depth(self):
        for seed in range(15):
            scn = generate_random_scenario(seed, n_mines=6)
            xy = np.array([m.position[:2] for m in scn.mines])
            for i in range(len(xy)):
                for j in range(i + 1, len(xy)):
                    assert np.hypot(*(xy[i] - xy[j])) >= 2.0
            for m in scn.mines:
                assert -0.15 <= m.position[2] <= 0.0
                assert np.allclose(m.moment, M19_MOMENT)

    def test_random_mine_count_range(self):
        counts = {len(generate_random_scenario(s).mines) for s in range(40)}
        assert counts <= {3, 4, 5, 6}
        assert len(counts) > 1

    def test_motor_parameter_ranges(self):
        scn = generate_random_scenario(5)
        assert len(scn.motors) == 4
        for motor in scn.motors:
            assert len(motor.components) == 3
            for c in motor.components:
                assert 1.0 <= c.chirp_factor <= 5.0
                assert 0.010 <= c.moment_amplitude <= 0.040
                assert np.linalg.norm(c.axis) == pytest.approx(1.0)

    def test_corner_scenario_layout(self):
        scn = fixed_corner_scenario(9, altitude=0.5)
        xy = sorted(tuple(m.position[:2]) for m in scn.mines)
        assert xy == [(2.0, 2.0), (2.0, 8.0), (8.0, 2.0), (8.0, 8.0)]
        assert scn.path.altitude == 0.5

    def test_corner_scenario_seed_stable_across_altitude(self):
        lo = fixed_corner_scenario(4, altitude=0.5)
        hi = fixed_corner_scenario(4, altitude=3.0)
        lo_d, hi_d = lo.to_dict(), hi.to_dict()
        assert lo_d["mines"] == hi_d["mines"]
        assert lo_d["motors"] == hi_d["motors"]
        assert lo_d["path"]["altitude"] != hi_d["path"]["altitude"]


def quiet_scenario(seed=0, **kwargs):
    """Scenario with zero motors/noise for superposition checks."""
    scn = generate_random_scenario(seed, **kwargs)
    scn.motors = []
    scn.noise_sigma = 0.0
    return scn


class TestSimulate:
    def test_empty_scene_is_background(self):
        scn = quiet_scenario(1)
        scn.mines = []
        rec = simulate(scn)
        assert np.allclose(rec.b1, scn.background_field)
        assert np.allclose(rec.b2, scn.background_field)
        assert np.allclose(rec.truth1, scn.background_field)

    def test_motor_only_superposition_oracle(self):
        scn = generate_random_scenario(2)
        scn.mines = []
        scn.noise_sigma = 0.0
        rec = simulate(scn)
        interference = rec.b1 - scn.background_field
        # spot-check samples against a scalar per-component superposition
        times, body = scn.path.sample()
        for i in (0, 137, 4096, 9999):
            expected = np.zeros(3)
            for motor in scn.motors:
                for comp in motor.components:
                    m = comp.moment(times[i], scn.path.duration)[0]
                    expected += scalar_dipole(m, body[i] + motor.offset, body[i])
            assert np.allclose(interference[i], expected, rtol=1e-10, atol=1e-9)

    def test_mine_superposition_exact(self):
        a = quiet_scenario(3, n_mines=3)
        b = quiet_scenario(4, n_mines=3)
        both = quiet_scenario(3, n_mines=3)
        both.mines = a.mines + b.mines
        fa = simulate(a).b1
        fb = simulate(b).b1
        fab = simulate(both).b1
        bg = a.background_field
        assert np.allclose(fab - bg, (fa - bg) + (fb - bg), rtol=1e-9)

    def test_determinism_and_geometry(self):
        scn = generate_random_scenario(11)
        r1 = simulate(scn)
        r2 = simulate(scn)
        for name in ("times", "positions1", "positions2", "b1", "b2", "truth1"):
            assert np.array_equal(getattr(r1, name), getattr(r2, name))
        sep = np.linalg.norm(r1.positions1 - r1.positions2, axis=1)
        assert np.allclose(sep, 0.10)

    def test_interference_magnitude_scale(self):
        # motor terms near the sensors sit in the kilo-nT range
        scn = generate_random_scenario(6)
        scn.mines = []
        scn.noise_sigma = 0.0
        rec = simulate(scn)
        resid = np.linalg.norm(rec.b1 - scn.background_field, axis=1)
        assert 1000.0 < resid.max() < 60000.0


class TestSerialization:
    def test_scenario_json_round_trip(self, tmp_path):
        scn = generate_random_scenario(21)
        p = tmp_path / "scn.json"
        scn.save(p)
        back = Scenario.load(p)
        assert back.to_dict() == scn.to_dict()

    def test_scenario_unknown_key_rejected(self, tmp_path):
        scn = generate_random_scenario(22)
        data = scn.to_dict()
        data["bogus"] = 1
        p = tmp_path / "scn.json"
        p.write_text(json.dumps(data))
        with pytest.raises(ValueError, match="bogus"):
            Scenario.load(p)

    def test_survey_csv_round_trip(self, tmp_path):
        scn = generate_random_scenario(23, n_mines=3)
        rec = simulate(scn)
        p = tmp_path / "survey.csv"
        write_survey_csv(rec, p, header_lines=["seed=23"])
        back = read_survey_csv(p)
        assert np.array_equal(back.times, rec.times)
        assert np.array_equal(back.b1, rec.b1)
        assert np.array_equal(back.b2, rec.b2)
        assert np.array_equal(back.truth1, rec.truth1)
        assert np.array_equal(back.positions1, rec.positions1)
        assert np.allclose(back.positions2, rec.positions2)
