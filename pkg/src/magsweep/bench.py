"""Monte Carlo benchmarks over the cleaner x detector method matrix.

Benchmark 1: randomized mine placements, pooled detection metrics per
method combination.  Benchmark 2: fixed corner mines swept over UAV
altitude with an identical seed list per altitude.  Simulations are
independent and seeded, so results are reproducible bit-for-bit at any
worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import dsp, metrics, rude, scenario as scn_mod
from .localize import ConfusionCounts, detect_positions, score_detections
from .waicup import clean_vector

RUDE_CONFIDENCE_THRESHOLD = 0.7
HARD_THRESHOLD_BENCH1 = 50.0   # nT
HARD_THRESHOLD_BENCH2 = 25.0   # nT
LOWPASS_CUTOFF = 0.5           # Hz
DEFAULT_ALTITUDES = tuple(np.arange(0.5, 3.01, 0.25).round(2))


class Cleaner(Enum):
    WAICUP = "waicup"
    LOWPASS = "lowpass"


class Detector(Enum):
    RUDE = "rude"
    THRESHOLD = "threshold"


@dataclass(frozen=True)
class MethodCombo:
    """One cleaning/detection pairing and its detector parameter."""

    cleaner: Cleaner
    detector: Detector
    detector_param: float

    def __post_init__(self):
        if self.detector_param <= 0:
            raise ValueError("detector_param must be positive")

    @property
    def label(self):
        return f"{self.cleaner.value}+{self.detector.value}"


def default_combos(hard_threshold=HARD_THRESHOLD_BENCH1,
                   rude_threshold=RUDE_CONFIDENCE_THRESHOLD):
    """The four evaluated combinations."""
    return (
        MethodCombo(Cleaner.WAICUP, Detector.RUDE, rude_threshold),
        MethodCombo(Cleaner.WAICUP, Detector.THRESHOLD, hard_threshold),
        MethodCombo(Cleaner.LOWPASS, Detector.RUDE, rude_threshold),
        MethodCombo(Cleaner.LOWPASS, Detector.THRESHOLD, hard_threshold),
    )


@dataclass
class BenchmarkResult:
    """Per-simulation rows plus pooled metrics per method combination."""

    rows: list
    pooled: dict
    config: dict

    def rho_means(self):
        """Mean correlation per cleaner (NaN-free rows only)."""
        out = {}
        for cleaner in Cleaner:
            vals = [r["rho"] for r in self.rows
                    if r["cleaner"] == cleaner.value and np.isfinite(r["rho"])]
            out[cleaner.value] = float(np.mean(vals)) if vals else float("nan")
        return out


def clean_record(record, cleaner, sample_rate):
    """Apply a cleaning method; returns the cleaned field magnitude."""
    if cleaner is Cleaner.WAICUP:
        cleaned = clean_vector(record.b1, record.b2, sample_rate)
    elif cleaner is Cleaner.LOWPASS:
        cleaned = np.column_stack([
            dsp.lowpass(record.b1[:, axis], LOWPASS_CUTOFF, sample_rate)
            for axis in range(3)
        ])
    else:
        raise ValueError(f"unknown cleaner {cleaner}")
    return np.linalg.norm(cleaned, axis=1)


def run_pipeline(scenario, combos, rude_windows=rude.DEFAULT_WINDOW_LENGTHS,
                 rude_nu=rude.DEFAULT_NU):
    """Simulate one scenario and score every requested method combination."""
    record = scn_mod.simulate(scenario)
    sample_rate = scenario.path.sample_rate
    truth_mag = np.linalg.norm(record.truth1, axis=1)
    cleaned_mags = {}
    rho = {}
    for cleaner in {c.cleaner for c in combos}:
        mag = clean_record(record, cleaner, sample_rate)
        cleaned_mags[cleaner] = mag
        rho[cleaner] = metrics.pearson(mag, truth_mag)
    rows = []
    for combo in combos:
        mag = cleaned_mags[combo.cleaner]
        deviation = mag - np.median(mag)
        if combo.detector is Detector.RUDE:
            conf = rude.confidence(deviation, rude_windows, nu=rude_nu)
            clusters = detect_positions(record, conf.scores, combo.detector_param)
        else:
            clusters = detect_positions(record, np.abs(deviation),
                                        combo.detector_param)
        counts, errors = score_detections(clusters, scenario.mines)
        rows.append({
            "seed": scenario.seed,
            "altitude": float(scenario.path.altitude),
            "cleaner": combo.cleaner.value,
            "detector": combo.detector.value,
            "detector_param": float(combo.detector_param),
            "tp": counts.tp,
            "fp": counts.fp,
            "fn": counts.fn,
            "rho": rho[combo.cleaner],
            "errors": [round(e, 12) for e in errors],
        })
    return rows


def _bench1_sim(args):
    seed, combo_specs, rude_nu = args
    combos = [MethodCombo(Cleaner(c), Detector(d), p) for c, d, p in combo_specs]
    scenario = scn_mod.generate_random_scenario(seed)
    return run_pipeline(scenario, combos, rude_nu=rude_nu)


def _bench2_sim(args):
    seed, altitude, combo_specs, rude_nu = args
    combos = [MethodCombo(Cleaner(c), Detector(d), p) for c, d, p in combo_specs]
    scenario = scn_mod.fixed_corner_scenario(seed, altitude)
    return run_pipeline(scenario, combos, rude_nu=rude_nu)


def _run_tasks(fn, tasks, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, tasks, chunksize=1))
    return [fn(t) for t in tasks]


def _pool_rows(rows, combos):
    pooled = {}
    for combo in combos:
        sel = [r for r in rows if r["cleaner"] == combo.cleaner.value
               and r["detector"] == combo.detector.value]
        counts = ConfusionCounts(
            tp=sum(r["tp"] for r in sel),
            fp=sum(r["fp"] for r in sel),
            fn=sum(r["fn"] for r in sel),
        )
        rhos = [r["rho"] for r in sel if np.isfinite(r["rho"])]
        errors = [e for r in sel for e in r["errors"]]
        pooled[combo.label] = metrics.MetricsReport.from_counts(
            counts,
            pearson_rho=float(np.mean(rhos)) if rhos else float("nan"),
            localization_errors=errors,
        )
    return pooled


def run_benchmark1(n_sims=50, base_seed=1000, combos=None, workers=1,
                   rude_nu=rude.DEFAULT_NU):
    """Randomized-placement benchmark: seeds base_seed .. base_seed+n-1."""
    if n_sims < 1:
        raise ValueError("n_sims must be >= 1")
    combos = tuple(combos) if combos is not None else default_combos()
    combo_specs = tuple((c.cleaner.value, c.detector.value, c.detector_param)
                        for c in combos)
    tasks = [(base_seed + i, combo_specs, rude_nu) for i in range(n_sims)]
    results = _run_tasks(_bench1_sim, tasks, workers)
    rows = [row for sim_rows in results for row in sim_rows]
    config = {"benchmark": 1, "n_sims": n_sims, "base_seed": base_seed,
              "combos": [c.label for c in combos], "rude_nu": rude_nu}
    return BenchmarkResult(rows, _pool_rows(rows, combos), config)


def run_benchmark2(altitudes=DEFAULT_ALTITUDES, sims_per_altitude=5,
                   base_seed=2000, combos=None, workers=1,
                   rude_nu=rude.DEFAULT_NU):
    """Altitude sweep with the corner-mine layout.

    The same seed list is reused at every altitude, so mine and motor
    conditions are identical across heights.
    """
    if not len(altitudes):
        raise ValueError("altitudes must be nonempty")
    combos = tuple(combos) if combos is not None else \
        default_combos(hard_threshold=HARD_THRESHOLD_BENCH2)
    combo_specs = tuple((c.cleaner.value, c.detector.value, c.detector_param)
                        for c in combos)
    tasks = [(base_seed + j, float(alt), combo_specs, rude_nu)
             for alt in altitudes for j in range(sims_per_altitude)]
    results = _run_tasks(_bench2_sim, tasks, workers)
    rows = [row for sim_rows in results for row in sim_rows]
    config = {"benchmark": 2, "altitudes": [float(a) for a in altitudes],
              "sims_per_altitude": sims_per_altitude, "base_seed": base_seed,
              "combos": [c.label for c in combos], "rude_nu": rude_nu}
    return BenchmarkResult(rows, _pool_rows(rows, combos), config)


def altitude_summary(result):
    """Per-(altitude, combo) pooled F1 and mean correlation for a sweep."""
    out = []
    altitudes = sorted({r["altitude"] for r in result.rows})
    combos = sorted({(r["cleaner"], r["detector"]) for r in result.rows})
    for alt in altitudes:
        for cleaner, detector in combos:
            sel = [r for r in result.rows if r["altitude"] == alt
                   and r["cleaner"] == cleaner and r["detector"] == detector]
            counts = ConfusionCounts(
                tp=sum(r["tp"] for r in sel),
                fp=sum(r["fp"] for r in sel),
                fn=sum(r["fn"] for r in sel),
            )
            rhos = [r["rho"] for r in sel if np.isfinite(r["rho"])]
            out.append({
                "altitude": alt,
                "cleaner": cleaner,
                "detector": detector,
                "f1": metrics.f1(counts),
                "recall": metrics.recall(counts),
                "precision": metrics.precision(counts),
                "rho_mean": float(np.mean(rhos)) if rhos else float("nan"),
            })
    return out
