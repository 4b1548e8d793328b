"""Synthetic dual-magnetometer UAV survey scenarios.

Builds randomized minefield surveys: point-dipole landmines buried under a
10 m x 10 m grid, a quadcopter flying a serpentine path with two
magnetometers (one in the motor plane, one 10 cm below), chirped motor
interference, a static background field, and white sensor noise.

Units: meters, seconds, Hz, nanotesla, A.m^2.  World frame is x/y on the
ground plane, z up; buried sources have z <= 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

# mu0/4pi * (A.m^2 / m^3) expressed in nT
_DIPOLE_NT = 100.0

#: Magnetic moment of an M19 minimum-metal anti-tank mine, A.m^2.
M19_MOMENT = np.array([-0.326, 0.087, -0.338])

#: Static background field: 50 uT at 60 degrees inclination, nT.
DEFAULT_BACKGROUND = 50000.0 * np.array([0.5, 0.0, -np.sqrt(3.0) / 2.0])

DEFAULT_NOISE_SIGMA = 10.0      # nT, per axis
MOTOR_SQUARE_SIDE = 0.10        # m
SENSOR_SEPARATION = 0.10        # m, sensor 2 below sensor 1
MIN_MINE_SEPARATION = 2.0       # m, horizontal
MAX_MINE_DEPTH = 0.15           # m
CHIRP_RANGE = (1.0, 5.0)
AMPLITUDE_RANGE = (0.010, 0.040)  # A.m^2
DEFAULT_GRID_SIZE = 10.0        # m
DEFAULT_N_LINES = 9
DEFAULT_ALTITUDE = 0.5          # m
DEFAULT_SPEED = 1.0             # m/s
DEFAULT_SAMPLE_RATE = 100.0     # Hz


class MotorComponentKind(Enum):
    """Interference mechanisms of a brushless motor."""

    MECHANICAL_ROTATION = "mechanical_rotation"
    PERMANENT_MAGNET = "permanent_magnet"
    INDUCED_FIELD = "induced_field"


#: Base interference frequency per mechanism, Hz.
BASE_FREQUENCIES = {
    MotorComponentKind.MECHANICAL_ROTATION: 0.055,
    MotorComponentKind.PERMANENT_MAGNET: 0.39,
    MotorComponentKind.INDUCED_FIELD: 2.0,
}


def dipole_field(moment, source_pos, obs_pos):
    """Magnetic field of a point dipole, in nT.

    Parameters
    ----------
    moment : array, shape (3,) or (n, 3)
        Dipole moment in A.m^2.
    source_pos, obs_pos : array, shape (3,) or (n, 3)
        Source and observation positions in meters.  Arguments broadcast
        against each other.

    Returns
    -------
    array, shape (3,) or (n, 3)

    Raises
    ------
    ValueError
        If any observation point coincides with its source.
    """
    moment = np.asarray(moment, dtype=float)
    r = np.asarray(obs_pos, dtype=float) - np.asarray(source_pos, dtype=float)
    squeeze = r.ndim == 1 and moment.ndim == 1
    r = np.atleast_2d(r)
    m = np.atleast_2d(moment)
    dist = np.linalg.norm(r, axis=-1, keepdims=True)
    if np.any(dist == 0.0):
        raise ValueError("observation point coincides with dipole source")
    rhat = r / dist
    proj = np.sum(m * rhat, axis=-1, keepdims=True)
    b = _DIPOLE_NT * (3.0 * rhat * proj - m) / dist**3
    return b[0] if squeeze else b


@dataclass
class MotorComponent:
    """One spectral component of a motor's stray field."""

    kind: MotorComponentKind
    base_frequency: float
    chirp_factor: float
    moment_amplitude: float
    axis: np.ndarray
    phase: float

    def moment(self, t, duration):
        """Time-varying dipole moment, shape (n, 3).

        The instantaneous frequency ramps linearly from ``base_frequency``
        to ``base_frequency * chirp_factor`` over ``duration``.
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        f0 = self.base_frequency
        ramp = (self.chirp_factor - 1.0) / (2.0 * duration) if duration > 0 else 0.0
        arg = 2.0 * np.pi * f0 * (t + ramp * t**2) + self.phase
        return np.outer(self.moment_amplitude * np.sin(arg), self.axis)


@dataclass
class Motor:
    """Motor at a body-frame offset with its three interference components."""

    offset: np.ndarray
    components: list[MotorComponent]


@dataclass
class MineSource:
    """Buried dipole source: position (m, z <= 0) and moment (A.m^2)."""

    position: np.ndarray
    moment: np.ndarray


@dataclass
class FlightPath:
    """Constant-speed polyline flight at fixed altitude."""

    waypoints: np.ndarray      # (n, 3)
    speed: float               # m/s
    sample_rate: float         # Hz
    altitude: float            # m

    def __post_init__(self):
        self.waypoints = np.asarray(self.waypoints, dtype=float)
        if self.speed <= 0 or self.sample_rate <= 0:
            raise ValueError("speed and sample_rate must be positive")
        if len(self.waypoints) < 2:
            raise ValueError("need at least two waypoints")
        seg = np.diff(self.waypoints, axis=0)
        if np.any(np.linalg.norm(seg, axis=1) == 0.0):
            raise ValueError("consecutive waypoints must be distinct")

    @property
    def total_length(self):
        return float(np.sum(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1)))

    @property
    def duration(self):
        return self.total_length / self.speed

    def sample(self):
        """Sample the path at the configured rate.

        Returns ``(times, positions)`` with times ``k / sample_rate`` for
        ``k = 0 .. floor(duration * sample_rate) - 1``.
        """
        n = int(np.floor(self.duration * self.sample_rate + 1e-9))
        times = np.arange(n) / self.sample_rate
        seg = np.diff(self.waypoints, axis=0)
        seg_len = np.linalg.norm(seg, axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg_len)])
        s = np.minimum(times * self.speed, cum[-1] * (1.0 - 1e-12))
        idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
        frac = (s - cum[idx]) / seg_len[idx]
        positions = self.waypoints[idx] + frac[:, None] * seg[idx]
        return times, positions


@dataclass
class Scenario:
    """Complete description of one simulated survey."""

    mines: list[MineSource]
    motors: list[Motor]
    path: FlightPath
    sensor1_offset: np.ndarray
    sensor2_offset: np.ndarray
    noise_sigma: float
    background_field: np.ndarray
    seed: int

    def to_dict(self):
        return {
            "seed": int(self.seed),
            "noise_sigma": float(self.noise_sigma),
            "background_field": [float(v) for v in self.background_field],
            "sensor1_offset": [float(v) for v in self.sensor1_offset],
            "sensor2_offset": [float(v) for v in self.sensor2_offset],
            "mines": [
                {
                    "position": [float(v) for v in m.position],
                    "moment": [float(v) for v in m.moment],
                }
                for m in self.mines
            ],
            "motors": [
                {
                    "offset": [float(v) for v in mot.offset],
                    "components": [
                        {
                            "kind": c.kind.value,
                            "base_frequency": float(c.base_frequency),
                            "chirp_factor": float(c.chirp_factor),
                            "moment_amplitude": float(c.moment_amplitude),
                            "axis": [float(v) for v in c.axis],
                            "phase": float(c.phase),
                        }
                        for c in mot.components
                    ],
                }
                for mot in self.motors
            ],
            "path": {
                "waypoints": [[float(v) for v in w] for w in self.path.waypoints],
                "speed": float(self.path.speed),
                "sample_rate": float(self.path.sample_rate),
                "altitude": float(self.path.altitude),
            },
        }

    @classmethod
    def from_dict(cls, data):
        _check_keys(data, {"seed", "noise_sigma", "background_field", "sensor1_offset",
                           "sensor2_offset", "mines", "motors", "path"}, "scenario")
        _check_keys(data["path"], {"waypoints", "speed", "sample_rate", "altitude"},
                    "scenario.path")
        mines = []
        for m in data["mines"]:
            _check_keys(m, {"position", "moment"}, "scenario.mines[]")
            mines.append(MineSource(np.array(m["position"], dtype=float),
                                    np.array(m["moment"], dtype=float)))
        motors = []
        for mot in data["motors"]:
            _check_keys(mot, {"offset", "components"}, "scenario.motors[]")
            comps = []
            for c in mot["components"]:
                _check_keys(c, {"kind", "base_frequency", "chirp_factor",
                                "moment_amplitude", "axis", "phase"},
                            "scenario.motors[].components[]")
                comps.append(MotorComponent(
                    kind=MotorComponentKind(c["kind"]),
                    base_frequency=float(c["base_frequency"]),
                    chirp_factor=float(c["chirp_factor"]),
                    moment_amplitude=float(c["moment_amplitude"]),
                    axis=np.array(c["axis"], dtype=float),
                    phase=float(c["phase"]),
                ))
            motors.append(Motor(np.array(mot["offset"], dtype=float), comps))
        path = FlightPath(
            waypoints=np.array(data["path"]["waypoints"], dtype=float),
            speed=float(data["path"]["speed"]),
            sample_rate=float(data["path"]["sample_rate"]),
            altitude=float(data["path"]["altitude"]),
        )
        return cls(
            mines=mines,
            motors=motors,
            path=path,
            sensor1_offset=np.array(data["sensor1_offset"], dtype=float),
            sensor2_offset=np.array(data["sensor2_offset"], dtype=float),
            noise_sigma=float(data["noise_sigma"]),
            background_field=np.array(data["background_field"], dtype=float),
            seed=int(data["seed"]),
        )

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class SurveyRecord:
    """Time-aligned survey series.

    ``truth1`` is the interference- and noise-free field at sensor 1
    (background plus mine dipoles), the reference the cleaning stages are
    judged against.
    """

    times: np.ndarray
    positions1: np.ndarray
    positions2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    truth1: np.ndarray

    def __len__(self):
        return len(self.times)


def _check_keys(data, allowed, where):
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown key(s) in {where}: {sorted(unknown)}")
    missing = allowed - set(data)
    if missing:
        raise ValueError(f"missing key(s) in {where}: {sorted(missing)}")


def motor_field(motor, uav_pos, obs_offset, t, duration):
    """Stray field of one motor at ``uav_pos + obs_offset``, in nT.

    Sums the dipole fields of the motor's components with their chirped
    sinusoidal moments; the source sits at ``uav_pos + motor.offset``.
    ``uav_pos`` may be a single position or one per time sample.
    """
    t = np.atleast_1d(np.asarray(t, dtype=float))
    uav_pos = np.asarray(uav_pos, dtype=float)
    if uav_pos.ndim == 1:
        uav_pos = np.broadcast_to(uav_pos, (len(t), 3))
    source = uav_pos + np.asarray(motor.offset, dtype=float)
    obs = uav_pos + np.asarray(obs_offset, dtype=float)
    total = np.zeros((len(t), 3))
    for comp in motor.components:
        total += dipole_field(comp.moment(t, duration), source, obs)
    return total


def serpentine_path(grid_size=DEFAULT_GRID_SIZE, n_lines=DEFAULT_N_LINES,
                    altitude=DEFAULT_ALTITUDE, speed=DEFAULT_SPEED,
                    sample_rate=DEFAULT_SAMPLE_RATE):
    """Boustrophedon survey path over a square grid.

    ``n_lines`` parallel passes spaced ``grid_size / (n_lines - 1)`` apart,
    joined by connectors flown at the same speed.  The defaults cover the
    10 m grid in exactly 100 s at 1 m/s (1 cm between samples at 100 Hz).
    """
    if n_lines < 2:
        raise ValueError("n_lines must be >= 2")
    if grid_size <= 0 or altitude <= 0 or speed <= 0 or sample_rate <= 0:
        raise ValueError("grid_size, altitude, speed, sample_rate must be positive")
    spacing = grid_size / (n_lines - 1)
    waypoints = []
    for i in range(n_lines):
        y = i * spacing
        xs = (0.0, grid_size) if i % 2 == 0 else (grid_size, 0.0)
        waypoints.append([xs[0], y, altitude])
        waypoints.append([xs[1], y, altitude])
    return FlightPath(np.array(waypoints), speed, sample_rate, altitude)


def _default_motors(rng):
    """Four motors in a 10 cm square, random component parameters.

    One chirp factor is drawn per scenario and shared by every component:
    the rotation-locked interference mechanisms all ride the same motor
    speed profile, so acceleration rescales the whole comb together and
    the three spectral bands keep their separation.  Amplitude, axis and
    phase are drawn per component.
    """
    half = MOTOR_SQUARE_SIDE / 2.0
    chirp = rng.uniform(*CHIRP_RANGE)
    motors = []
    for sx, sy in ((-1, -1), (-1, 1), (1, -1), (1, 1)):
        comps = []
        for kind in MotorComponentKind:
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            comps.append(MotorComponent(
                kind=kind,
                base_frequency=BASE_FREQUENCIES[kind],
                chirp_factor=chirp,
                moment_amplitude=rng.uniform(*AMPLITUDE_RANGE),
                axis=axis,
                phase=rng.uniform(0.0, 2.0 * np.pi),
            ))
        motors.append(Motor(np.array([sx * half, sy * half, 0.0]), comps))
    return motors


def _place_mines(rng, n_mines, grid_size, max_attempts=10000):
    """Uniform mine placement with a 2 m horizontal separation floor."""
    placed = []
    attempts = 0
    while len(placed) < n_mines:
        if attempts >= max_attempts:
            raise RuntimeError(
                f"could not place {n_mines} mines with {MIN_MINE_SEPARATION} m "
                f"separation after {max_attempts} attempts")
        attempts += 1
        xy = rng.uniform(0.0, grid_size, size=2)
        if all(np.hypot(*(xy - p)) >= MIN_MINE_SEPARATION for p in placed):
            placed.append(xy)
    mines = []
    for xy in placed:
        depth = rng.uniform(0.0, MAX_MINE_DEPTH)
        mines.append(MineSource(np.array([xy[0], xy[1], -depth]), M19_MOMENT.copy()))
    return mines


def generate_random_scenario(rng_seed, n_mines=None, grid_size=DEFAULT_GRID_SIZE,
                             n_lines=DEFAULT_N_LINES, altitude=DEFAULT_ALTITUDE,
                             speed=DEFAULT_SPEED, sample_rate=DEFAULT_SAMPLE_RATE,
                             noise_sigma=DEFAULT_NOISE_SIGMA):
    """Randomized survey scenario, fully determined by ``rng_seed``.

    ``n_mines`` defaults to a uniform draw from 3..6.  Mines get uniform
    positions (>= 2 m apart), depths in [0, 0.15] m, and the M19 moment;
    motor chirps, amplitudes, axes and phases are drawn from their
    operating ranges.
    """
    rng = np.random.default_rng([rng_seed, 0])
    if n_mines is None:
        n_mines = int(rng.integers(3, 7))
    elif not 1 <= n_mines:
        raise ValueError("n_mines must be positive")
    if grid_size < MIN_MINE_SEPARATION * (np.ceil(np.sqrt(n_mines)) - 1):
        raise ValueError("grid too small for requested mine count at 2 m separation")
    mines = _place_mines(rng, n_mines, grid_size)
    motors = _default_motors(rng)
    path = serpentine_path(grid_size, n_lines, altitude, speed, sample_rate)
    return Scenario(
        mines=mines,
        motors=motors,
        path=path,
        sensor1_offset=np.zeros(3),
        sensor2_offset=np.array([0.0, 0.0, -SENSOR_SEPARATION]),
        noise_sigma=noise_sigma,
        background_field=DEFAULT_BACKGROUND.copy(),
        seed=int(rng_seed),
    )


def fixed_corner_scenario(rng_seed, altitude, grid_size=DEFAULT_GRID_SIZE,
                          n_lines=DEFAULT_N_LINES, speed=DEFAULT_SPEED,
                          sample_rate=DEFAULT_SAMPLE_RATE,
                          noise_sigma=DEFAULT_NOISE_SIGMA):
    """Four surface mines at the corners of a centered 6 m square.

    Motor parameters are drawn from ``rng_seed`` exactly as in
    :func:`generate_random_scenario`, independent of ``altitude``, so a
    fixed seed reproduces the same interference at every height.
    """
    rng = np.random.default_rng([rng_seed, 0])
    half = 3.0
    cx = grid_size / 2.0
    mines = [
        MineSource(np.array([cx + sx * half, cx + sy * half, 0.0]), M19_MOMENT.copy())
        for sx, sy in ((-1, -1), (-1, 1), (1, -1), (1, 1))
    ]
    motors = _default_motors(rng)
    path = serpentine_path(grid_size, n_lines, altitude, speed, sample_rate)
    return Scenario(
        mines=mines,
        motors=motors,
        path=path,
        sensor1_offset=np.zeros(3),
        sensor2_offset=np.array([0.0, 0.0, -SENSOR_SEPARATION]),
        noise_sigma=noise_sigma,
        background_field=DEFAULT_BACKGROUND.copy(),
        seed=int(rng_seed),
    )


def simulate(scenario):
    """Run one survey and return the recorded series.

    Per sample and sensor: background + mine dipole fields + motor stray
    fields + N(0, noise_sigma) per axis.  Noise is drawn from a stream
    keyed on ``(seed, 1)`` so reruns are bit-identical.
    """
    times, body = scenario.path.sample()
    duration = scenario.path.duration
    positions1 = body + scenario.sensor1_offset
    positions2 = body + scenario.sensor2_offset

    def mine_sum(obs):
        total = np.zeros_like(obs)
        for mine in scenario.mines:
            total += dipole_field(mine.moment, mine.position, obs)
        return total

    def motor_sum(sensor_offset):
        total = np.zeros((len(times), 3))
        for motor in scenario.motors:
            total += motor_field(motor, body, sensor_offset, times, duration)
        return total

    truth1 = scenario.background_field + mine_sum(positions1)
    clean2 = scenario.background_field + mine_sum(positions2)
    rng = np.random.default_rng([scenario.seed, 1])
    noise1 = rng.normal(0.0, scenario.noise_sigma, positions1.shape)
    noise2 = rng.normal(0.0, scenario.noise_sigma, positions2.shape)
    b1 = truth1 + motor_sum(scenario.sensor1_offset) + noise1
    b2 = clean2 + motor_sum(scenario.sensor2_offset) + noise2
    return SurveyRecord(times, positions1, positions2, b1, b2, truth1)


_CSV_COLUMNS = "t,x1,y1,z1,b1x,b1y,b1z,b2x,b2y,b2z,tx,ty,tz"


def write_survey_csv(record, path, header_lines=()):
    """Write a survey as CSV (columns: t, sensor-1 position, b1, b2, truth1).

    ``header_lines`` are emitted as leading ``#`` comments.
    """
    data = np.column_stack([record.times, record.positions1, record.b1,
                            record.b2, record.truth1])
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write(_CSV_COLUMNS + "\n")
        for row in data:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


def read_survey_csv(path):
    """Read a survey CSV written by :func:`write_survey_csv`.

    Sensor-2 positions are reconstructed from the standard 10 cm vertical
    separation (they are not stored in the file format).
    """
    with open(path) as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    if not lines or lines[0].strip() != _CSV_COLUMNS:
        raise ValueError(f"unexpected survey CSV header in {path}")
    data = np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])
    positions1 = data[:, 1:4]
    positions2 = positions1 + np.array([0.0, 0.0, -SENSOR_SEPARATION])
    return SurveyRecord(data[:, 0], positions1, positions2,
                        data[:, 4:7], data[:, 7:10], data[:, 10:13])
