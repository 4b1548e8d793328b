"""Wavelet-domain two-sensor interference cancellation (WAIC-UP).

Both magnetometers see the same ambient signal but different shares of
the platform's stray field.  Differencing the two wavelet spectra
isolates the interference; a per-scale gain estimated from correlation
sums then lets the ambient spectrum be reconstructed and inverted back
to the time domain.

The gain is estimated as a complex ratio: with several simultaneous
sources mixing into each channel, the interference seen by the second
sensor is a phase-rotated copy of the first sensor's, and a real gain
cannot absorb that rotation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dsp import WaveletSpectrum, cwt, default_scales, icwt

#: scales with an estimated gain this close to 1 carry no usable
#: interference contrast and are passed through untouched
DEGENERACY_EPS = 1e-2

#: samples of mirrored guard band added per side before the transform
EDGE_PAD = 2500
#: cosine-taper length fading the guard band to zero at its far end
EDGE_TAPER = 500


@dataclass
class GainProfile:
    """Per-scale interference gain between the two sensors."""

    scales: np.ndarray
    k_hat: np.ndarray       # complex per scale
    degenerate: np.ndarray  # True where the estimate is unusable

    def __post_init__(self):
        if not (len(self.scales) == len(self.k_hat) == len(self.degenerate)):
            raise ValueError("scales, k_hat, degenerate must have equal length")


def estimate_gain(w1, w2, eps=DEGENERACY_EPS):
    """Estimate the per-scale interference gain between two spectra.

    For each scale the difference spectrum D = W2 - W1 isolates the
    interference; the gain is the correlation ratio
    sum(conj(D) W2) / sum(conj(D) W1).  A scale is flagged degenerate
    when the denominator is negligible against |D||W1| or the gain is
    within ``eps`` of one (no contrast to exploit).
    """
    if w1.coefficients.shape != w2.coefficients.shape:
        raise ValueError("spectra must have matching shapes")
    if not np.array_equal(w1.scales, w2.scales):
        raise ValueError("spectra must share the same scale bank")
    d = w2.coefficients - w1.coefficients
    num = np.sum(np.conj(d) * w2.coefficients, axis=1)
    den = np.sum(np.conj(d) * w1.coefficients, axis=1)
    d_norm = np.linalg.norm(d, axis=1)
    w1_norm = np.linalg.norm(w1.coefficients, axis=1)
    floor = eps * d_norm * w1_norm
    with np.errstate(divide="ignore", invalid="ignore"):
        k_hat = np.where(den != 0.0, num / den, np.inf + 0.0j)
    degenerate = (np.abs(den) <= floor) | (np.abs(k_hat - 1.0) < eps)
    k_hat = np.where(degenerate, 1.0 + 0.0j, k_hat)
    return GainProfile(w1.scales.copy(), k_hat, degenerate)


def reconstruct(w1, w2, gains):
    """Recover the ambient spectrum from the pair and the gain profile.

    Non-degenerate scales solve the two-sensor mixing for the common
    signal, X = (K W1 - W2) / (K - 1); degenerate scales pass through the
    average of the two inputs, which keeps noise down where there is no
    interference to remove.
    """
    if w1.coefficients.shape != w2.coefficients.shape:
        raise ValueError("spectra must have matching shapes")
    if len(gains.k_hat) != len(w1.scales):
        raise ValueError("gain profile does not match the scale bank")
    a, b = w1.coefficients, w2.coefficients
    k = gains.k_hat[:, None]
    safe_k = np.where(gains.degenerate[:, None], 2.0, k)  # placeholder divisor
    combined = np.where(gains.degenerate[:, None],
                        0.5 * (a + b),
                        (safe_k * a - b) / (safe_k - 1.0))
    return WaveletSpectrum(w1.scales.copy(), combined, w1.sample_rate)


def _extend(x, pad, taper):
    """Mirror ``x`` by ``pad`` samples per side, fading the far ends to zero.

    The extension is one fixed linear operator, so applying it to both
    channels of a pair preserves their mixing relation exactly; it exists
    to keep the transform's circular wrap-around from leaking a seam
    transient into the gain sums.
    """
    if pad == 0:
        return x
    left = x[pad:0:-1].copy()
    right = x[-2:-pad - 2:-1].copy()
    if taper:
        ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(taper) / taper)
        left[:taper] *= ramp
        right[-taper:] *= ramp[::-1]
    return np.concatenate([left, x, right])


def clean_channel_pair(b1, b2, sample_rate, scales=None, eps=DEGENERACY_EPS,
                       edge_pad=EDGE_PAD):
    """Remove platform interference from one scalar channel pair.

    Returns the reconstructed ambient series, with the mean of ``b1``
    restored (the wavelet transform is zero-mean).
    """
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    if b1.shape != b2.shape or b1.ndim != 1:
        raise ValueError("channel pair must be 1-D arrays of equal length")
    n = len(b1)
    mean1 = b1.mean()
    pad = int(min(n - 1, edge_pad))
    taper = min(EDGE_TAPER, pad // 2)
    e1 = _extend(b1 - mean1, pad, taper)
    e2 = _extend(b2 - b2.mean(), pad, taper)
    if scales is None:
        scales = default_scales(len(e1))
    w1 = cwt(e1, scales, sample_rate)
    w2 = cwt(e2, scales, sample_rate)
    gains = estimate_gain(w1, w2, eps=eps)
    ambient = icwt(reconstruct(w1, w2, gains))
    return ambient[pad:pad + n] + mean1


def clean_vector(b1, b2, sample_rate, scales=None, eps=DEGENERACY_EPS,
                 edge_pad=EDGE_PAD):
    """Run :func:`clean_channel_pair` independently on each vector axis."""
    b1 = np.asarray(b1, dtype=float)
    b2 = np.asarray(b2, dtype=float)
    if b1.shape != b2.shape or b1.ndim != 2 or b1.shape[1] != 3:
        raise ValueError("expected matching (n, 3) arrays")
    cleaned = np.empty_like(b1)
    for axis in range(3):
        cleaned[:, axis] = clean_channel_pair(b1[:, axis], b2[:, axis],
                                              sample_rate, scales, eps, edge_pad)
    return cleaned
