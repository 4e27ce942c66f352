"""Reconstruction of the measurable signatures from click records:
arrival-time distributions, the full cross-correlation g2, detector-noise
subtraction, conditional emission probabilities, the Gaussian
emission-profile deconvolution, occupancy statistics, and the
transform-limited linewidth.

All estimators work on plain click lists and are pure functions; the
diagnostic ``origin`` tags must never influence a result (they exist only
so tests can build ground-truth oracles).
"""

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import least_squares

from .experiment import ClickRecord
from .model import PulseSequence

TWO_LN2_OVER_PI = 2.0 * math.log(2.0) / math.pi


class NormalizationError(ValueError):
    """Correlation normalization undefined (a detector has no counts)."""


class PeakWindowError(ValueError):
    """Requested peak integration windows overlap."""


class DegenerateProfileError(RuntimeError):
    """Peak areas carry no lag dependence; the profile width is unbounded."""


class FitError(RuntimeError):
    pass


@dataclass(frozen=True)
class ArrivalHistogram:
    """Click distribution over time-within-period."""

    bin_width: float
    centers: np.ndarray
    counts: np.ndarray


@dataclass(frozen=True)
class CorrelationHistogram:
    """Binned cross-correlation of the two detector streams.

    ``counts`` are raw pair counts per lag bin; ``normalized`` is the g2
    estimate (counts scaled so uncorrelated streams give 1).  After noise
    subtraction ``noise_floor`` holds the flat accidental level in g2
    units and ``normalized_noise_sub`` the excess correlation.
    """

    bin_width: float
    lags: np.ndarray
    counts: np.ndarray
    normalized: np.ndarray
    n1: int
    n2: int
    acquisition_time: float
    noise_floor: float = 0.0
    normalized_noise_sub: np.ndarray | None = None

    @property
    def norm_factor(self) -> float:
        """g2 units per raw count in one bin."""
        return self.acquisition_time / (self.n1 * self.n2 * self.bin_width)

    def counts_noise_subtracted(self) -> np.ndarray:
        sub = self.normalized_noise_sub
        if sub is None:
            sub = self.normalized
        return sub / self.norm_factor


@dataclass(frozen=True)
class EmissionProfileFit:
    """Gaussian emission-probability profile amp * exp(-(z/sigma_z)^2)."""

    amplitude: float
    sigma_z: float
    residual: float

    def __post_init__(self):
        if not 0.0 <= self.amplitude <= 1.0:
            raise ValueError("amplitude must lie in [0, 1]")
        if self.sigma_z <= 0:
            raise ValueError("sigma_z must be positive")


@dataclass(frozen=True)
class Calibration:
    """Normalization inputs for the conditional-probability estimator."""

    n_photon_events: float
    splitter_ratio: float = 0.5


def _click_times(clicks: list[ClickRecord]) -> np.ndarray:
    return np.array([c.t for c in clicks])


def strongly_coupled_clicks(clicks: list[ClickRecord], interaction_time: float,
                            min_clicks: int = 2) -> list[ClickRecord]:
    """Clicks belonging to bursts of >= min_clicks within one interaction
    window (single-linkage clustering with gap < interaction_time).

    Solitary clicks are the signature of weakly coupled atoms or dark
    counts; bursts come from strongly coupled atoms.
    """
    if not clicks:
        return []
    ordered = sorted(clicks, key=lambda c: c.t_ns)
    out = []
    cluster = [ordered[0]]
    for c in ordered[1:]:
        if (c.t_ns - cluster[-1].t_ns) * 1e-9 < interaction_time:
            cluster.append(c)
        else:
            if len(cluster) >= min_clicks:
                out.extend(cluster)
            cluster = [c]
    if len(cluster) >= min_clicks:
        out.extend(cluster)
    return out


def arrival_histogram(clicks: list[ClickRecord], seq: PulseSequence,
                      bin_width: float,
                      strong_interaction_time: float | None = None,
                      strong_min_clicks: int = 2) -> ArrivalHistogram:
    """Fold click times modulo the pulse period into bins.

    With ``strong_interaction_time`` set, only clicks from bursts of
    >= strong_min_clicks within that window are kept.
    """
    if bin_width <= 0:
        raise ValueError("bin_width must be positive")
    if strong_interaction_time is not None:
        clicks = strongly_coupled_clicks(clicks, strong_interaction_time,
                                         strong_min_clicks)
    nbins = max(1, int(round(seq.period / bin_width)))
    edges = np.linspace(0.0, seq.period, nbins + 1)
    if clicks:
        folded = _click_times(clicks) % seq.period
        counts, _ = np.histogram(folded, bins=edges)
    else:
        counts = np.zeros(nbins, dtype=np.int64)
    centers = 0.5 * (edges[:-1] + edges[1:])
    return ArrivalHistogram(bin_width=seq.period / nbins, centers=centers,
                            counts=counts.astype(np.int64))


def cross_correlation(clicks: list[ClickRecord], bin_width: float,
                      max_lag: float,
                      acquisition_time: float | None = None) -> CorrelationHistogram:
    """Full D1 x D2 cross-correlation histogram.

    Every pair of clicks (one per detector) within the lag range is
    counted (no start/stop restriction); lag = t_D1 - t_D2.  The
    normalization divides by the uncorrelated-pair expectation
    N1 * N2 * bin_width / T, so independent Poisson streams give
    g2 = 1.
    """
    if bin_width <= 0 or max_lag <= 0:
        raise ValueError("bin_width and max_lag must be positive")
    t1 = np.sort(np.array([c.t for c in clicks if c.detector == 0]))
    t2 = np.sort(np.array([c.t for c in clicks if c.detector == 1]))
    if t1.size == 0 or t2.size == 0:
        raise NormalizationError("both detectors need counts to normalize g2")
    times = _click_times(clicks)
    span = times.max() - times.min()
    if span < 2 * max_lag:
        raise ValueError("clicks must span at least 2 * max_lag")
    if acquisition_time is None:
        acquisition_time = float(span)

    nside = int(round(max_lag / bin_width))
    edge_max = (nside + 0.5) * bin_width
    edges = np.linspace(-edge_max, edge_max, 2 * nside + 2)
    counts = np.zeros(2 * nside + 1, dtype=np.int64)
    lo = np.searchsorted(t2, t1 - edge_max, side="left")
    hi = np.searchsorted(t2, t1 + edge_max, side="right")
    lengths = hi - lo
    # flatten all in-window (t1, t2) index pairs without a Python loop
    for start in range(0, t1.size, 65536):
        stop = min(start + 65536, t1.size)
        lens = lengths[start:stop]
        total = int(lens.sum())
        if total == 0:
            continue
        offsets = np.concatenate([[0], np.cumsum(lens)[:-1]])
        flat = np.arange(total)
        idx2 = np.repeat(lo[start:stop], lens) + flat - np.repeat(offsets, lens)
        lags = np.repeat(t1[start:stop], lens) - t2[idx2]
        c, _ = np.histogram(lags, bins=edges)
        counts += c

    centers = np.arange(-nside, nside + 1) * bin_width
    norm = acquisition_time / (t1.size * t2.size * bin_width)
    return CorrelationHistogram(
        bin_width=bin_width, lags=centers, counts=counts,
        normalized=counts * norm, n1=int(t1.size), n2=int(t2.size),
        acquisition_time=float(acquisition_time))


def subtract_noise(h: CorrelationHistogram, dark_rates: tuple[float, float],
                   signal_rates: tuple[float, float],
                   acquisition_time: float) -> CorrelationHistogram:
    """Subtract the flat accidental floor caused by detector noise.

    The floor counts every pair with at least one dark member
    (dark x signal both ways plus dark x dark), expressed in g2 units of
    the total-rate normalization.  Resulting bins may be negative
    (statistical fluctuation); they are kept as-is.
    """
    d1, d2 = dark_rates
    s1, s2 = signal_rates
    if min(d1, d2, s1, s2) < 0:
        raise ValueError("rates must be >= 0")
    r1, r2 = s1 + d1, s2 + d2
    if r1 <= 0 or r2 <= 0:
        raise NormalizationError("total rates must be positive")
    floor = (d1 * s2 + s1 * d2 + d1 * d2) / (r1 * r2)
    return replace(h, noise_floor=floor,
                   normalized_noise_sub=h.normalized - floor)


def peak_area(h: CorrelationHistogram, center: float, halfwidth: float,
              noise_subtracted: bool = True) -> float:
    """Integrated (noise-subtracted) pair counts in |lag - center| <= halfwidth."""
    mask = np.abs(h.lags - center) <= halfwidth + 1e-15
    vals = h.counts_noise_subtracted() if noise_subtracted else h.counts
    return float(np.sum(vals[mask]))


def conditional_probabilities(h: CorrelationHistogram, seq: PulseSequence,
                              n_pulses_max: int, calibration: Calibration,
                              peak_halfwidth: float | None = None) -> np.ndarray:
    """P(detected photon in pulse i+k | detected photon in pulse i) for
    k = 1 .. n_pulses_max.

    Estimator: coincidences in the two side peaks at +-k periods
    (integrated over +-peak_halfwidth, noise-subtracted), divided by
    2 r (1-r) to undo the detector-pair blindness of the D1 x D2
    correlation, divided by the total number of conditioning photon
    events.  Validated against a brute-force pair-counting oracle.
    """
    if peak_halfwidth is None:
        peak_halfwidth = seq.pump_duration
    if 2.0 * peak_halfwidth > seq.period - h.bin_width:
        raise PeakWindowError(
            f"peak windows of halfwidth {peak_halfwidth} overlap at period "
            f"{seq.period}")
    if h.lags[-1] < n_pulses_max * seq.period + peak_halfwidth:
        raise ValueError("histogram max_lag too small for n_pulses_max")
    r = calibration.splitter_ratio
    if not 0.0 < r < 1.0:
        raise ValueError("splitter_ratio must be in (0, 1)")
    if calibration.n_photon_events <= 0:
        raise ValueError("n_photon_events must be positive")
    out = np.empty(n_pulses_max)
    for k in range(1, n_pulses_max + 1):
        area = (peak_area(h, k * seq.period, peak_halfwidth)
                + peak_area(h, -k * seq.period, peak_halfwidth))
        out[k - 1] = area / (2.0 * r * (1.0 - r)) / calibration.n_photon_events
    return out


def emission_peak_model(lags_k: np.ndarray, amplitude: float, sigma_z: float,
                        velocity: float, period: float) -> np.ndarray:
    """Expected conditional probability at pulse lag k for a Gaussian
    emission profile amp * exp(-(z/sigma)^2).

    For an atom crossing at constant velocity the pulses sample z
    uniformly, so the conditional is the normalized Gaussian overlap
    E[P(z) P(z + k v T)] / E[P(z)] = (amp/sqrt(2)) exp(-(k v T)^2 / (2 sigma^2)).
    """
    d = np.asarray(lags_k, dtype=float) * velocity * period
    return amplitude / math.sqrt(2.0) * np.exp(-(d ** 2) / (2.0 * sigma_z ** 2))


def deconvolve_pemit(peak_areas: np.ndarray, velocity: float, period: float,
                     lags_k: np.ndarray | None = None) -> EmissionProfileFit:
    """Recover the Gaussian emission profile from the comb peak areas.

    ``peak_areas`` are the conditional probabilities at pulse lags
    1..len(peak_areas) (or explicit ``lags_k``).  Least-squares fit of
    (amplitude, sigma_z) in the closed-form Gaussian-overlap model.
    """
    areas = np.asarray(peak_areas, dtype=float)
    if areas.size < 3:
        raise ValueError("need at least 3 peak areas")
    if velocity <= 0 or period <= 0:
        raise ValueError("velocity and period must be positive")
    if lags_k is None:
        lags_k = np.arange(1, areas.size + 1, dtype=float)
    lags_k = np.asarray(lags_k, dtype=float)
    if np.ptp(areas) < 1e-12 * max(1.0, np.max(np.abs(areas))):
        raise DegenerateProfileError(
            "all peak areas equal: sigma_z is unbounded")

    d = lags_k * velocity * period
    pos = areas > 0
    if np.count_nonzero(pos) >= 2:
        # log-linear seed: ln area = ln(A/sqrt(2)) - d^2 / (2 sigma^2)
        coef = np.polyfit(d[pos] ** 2, np.log(areas[pos]), 1)
        slope, intercept = coef[0], coef[1]
        sigma0 = math.sqrt(0.5 / -slope) if slope < 0 else np.max(np.abs(d))
        amp0 = min(1.0, math.exp(intercept) * math.sqrt(2.0))
    else:
        sigma0, amp0 = np.max(np.abs(d)), 0.1

    def resid(p):
        return emission_peak_model(lags_k, p[0], p[1], velocity, period) - areas

    fit = least_squares(resid, x0=[max(amp0, 1e-6), max(sigma0, 1e-9)],
                        bounds=([0.0, 1e-12], [1.0, np.inf]))
    if not fit.success:
        raise FitError(f"profile fit did not converge: {fit.message}")
    residual = float(np.sqrt(2.0 * fit.cost))
    return EmissionProfileFit(amplitude=float(fit.x[0]),
                              sigma_z=float(fit.x[1]), residual=residual)


def occupancy_statistics(flux: float, interaction_time: float) -> tuple[float, float]:
    """Poisson window occupancy: (P(exactly one atom), P(more than one)).

    lambda = flux * interaction_time; p_one = lambda e^-lambda,
    p_many = 1 - e^-lambda (1 + lambda).
    """
    if flux < 0 or interaction_time < 0:
        raise ValueError("inputs must be >= 0")
    lam = flux * interaction_time
    p_one = lam * math.exp(-lam)
    p_many = 1.0 - math.exp(-lam) * (1.0 + lam)
    return p_one, p_many


def transform_limited_linewidth(fwhm_duration: float) -> float:
    """FWHM linewidth (Hz) of a transform-limited Gaussian pulse of the
    given intensity FWHM duration: delta_nu = (2 ln 2 / pi) / tau."""
    if fwhm_duration <= 0:
        raise ValueError("duration must be positive")
    return TWO_LN2_OVER_PI / fwhm_duration


def fwhm(x: np.ndarray, y: np.ndarray) -> float:
    """Full width at half maximum of a sampled single-peaked curve, with
    linear interpolation at the half-maximum crossings."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.size < 3:
        raise ValueError("need at least 3 samples")
    ipk = int(np.argmax(y))
    half = y[ipk] / 2.0
    if y[ipk] <= 0:
        raise ValueError("curve has no positive peak")
    left = None
    for i in range(ipk, 0, -1):
        if y[i - 1] <= half <= y[i]:
            frac = (half - y[i - 1]) / (y[i] - y[i - 1])
            left = x[i - 1] + frac * (x[i] - x[i - 1])
            break
    right = None
    for i in range(ipk, y.size - 1):
        if y[i] >= half >= y[i + 1]:
            frac = (y[i] - half) / (y[i] - y[i + 1])
            right = x[i] + frac * (x[i + 1] - x[i])
            break
    if left is None or right is None:
        raise ValueError("half-maximum crossing not bracketed by samples")
    return right - left
