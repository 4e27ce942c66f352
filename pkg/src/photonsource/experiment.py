"""Monte Carlo model of the full apparatus.

Atoms arrive as a homogeneous Poisson process and fall through the
Gaussian cavity mode; while an atom is inside its interaction window it
is driven by the periodic pump/recycle sequence.  The coupling is frozen
per pulse period at the value of the mode profile at that pulse's pump
midpoint (the atom moves slowly compared to one period), the internal
state carries over between periods, and cavity quantum jumps become
photon emissions.  Each emission survives detection with the quantum
efficiency, is routed to one of two detectors by the beam splitter, and
is timestamped on the detector's discrete time grid.  Independent Poisson
dark counts are added per detector.

The standing-wave and magnetic-sublevel structure are not resolved: they
are absorbed into a single averaging factor on the peak coupling, whose
default (1.0 applied to the configured average g) reproduces the
reference coupling on axis.

Everything is keyed by counter-based streams: per-transit trajectory and
detection streams plus global arrival/dark-count streams, so a run is
byte-identical for a given (config, seed) regardless of worker count.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .hilbert import basis_state
from .model import PulseSequence, SystemParams
from .rng import derive_key, philox, uniforms
from .trajectory import _KernelInputs

ORIGIN_SIGNAL = "signal"
ORIGIN_DARK = "dark"
DETECTOR_NAMES = ("D1", "D2")


@dataclass(frozen=True)
class ApparatusParams:
    """Apparatus constants; defaults follow the reference experiment."""

    flux: float = 3400.0              # atoms/s entering the mode
    waist_w0: float = 35e-6           # TEM00 waist (m)
    velocity: float = 2.0             # fall velocity (m/s)
    interaction_time: float = 17.5e-6 # effective coupling window (s)
    quantum_efficiency: float = 0.5
    dark_count_rate: float = 50.0     # counts/s per detector (not a measured value)
    time_resolution: float = 8e-9     # detector timestamp grid (s)
    splitter_ratio: float = 0.5       # probability of routing to D1
    coupling_averaging: float = 1.0   # standing-wave / sublevel averaging factor
    aperture_waists: float = 2.0      # transverse sampling half-width, in waists

    def __post_init__(self):
        for name in ("flux", "waist_w0", "velocity", "interaction_time",
                     "dark_count_rate", "time_resolution"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("quantum_efficiency", "splitter_ratio"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.waist_w0 > 0 and self.velocity > 0:
            if self.interaction_time > 2.0 * (2.0 * self.waist_w0 / self.velocity):
                raise ValueError(
                    "interaction_time exceeds twice the geometric crossing "
                    "time 2 w0 / v; check waist/velocity consistency")
        res_ns = self.time_resolution * 1e9
        if abs(res_ns - round(res_ns)) > 1e-9 or round(res_ns) < 1:
            raise ValueError("time_resolution must be a whole number of ns")

    @property
    def resolution_ns(self) -> int:
        return int(round(self.time_resolution * 1e9))


@dataclass(frozen=True)
class AtomTransit:
    """One atom crossing: window start time, transverse offsets, and the
    peak coupling its trajectory can reach (at closest approach)."""

    t_arrival: float
    x_offset: float
    y_offset: float
    g_effective: float


@dataclass(frozen=True, order=True)
class ClickRecord:
    """One detector event on the quantized time grid (integer ns)."""

    t_ns: int
    detector: int              # 0 = D1, 1 = D2
    origin: str = ORIGIN_SIGNAL

    @property
    def t(self) -> float:
        return self.t_ns * 1e-9

    @property
    def detector_name(self) -> str:
        return DETECTOR_NAMES[self.detector]


def coupling_profile(waist_w0: float, x_offset: float, y_offset: float,
                     z: float, g_peak: float, averaging: float = 1.0) -> float:
    """Atom-cavity coupling at transverse offset x and vertical position z.

    Gaussian in x and z with the mode waist; the position along the cavity
    axis (y) only enters through the averaging factor.
    """
    if waist_w0 <= 0:
        raise ValueError("waist must be positive")
    return g_peak * averaging * math.exp(-(x_offset**2 + z**2) / waist_w0**2)


def sample_transits(app: ApparatusParams, run_duration: float, seed: int,
                    g_peak: float | None = None) -> list[AtomTransit]:
    """Poisson atom arrivals over [0, run_duration] with uniform transverse
    offsets across the sampling aperture.

    Windows that started before t = 0 but still overlap the run are
    included, so occupancy statistics are stationary from t = 0 on.
    """
    if run_duration < 0:
        raise ValueError("run_duration must be >= 0")
    if g_peak is None:
        g_peak = SystemParams().g
    if app.flux == 0.0 or run_duration == 0.0:
        return []
    gen = philox(seed, "transits")
    t_first = -app.interaction_time
    span = run_duration - t_first
    arrivals = []
    t = t_first
    block = max(64, int(app.flux * span * 1.2) + 64)
    while True:
        gaps = gen.exponential(1.0 / app.flux, size=block)
        for gap in gaps:
            t += gap
            if t > run_duration:
                break
            arrivals.append(t)
        if t > run_duration:
            break
    half = app.aperture_waists * app.waist_w0
    transits = []
    for t_arr in arrivals:
        x = gen.uniform(-half, half)
        y = gen.uniform(-half, half)
        g_eff = coupling_profile(app.waist_w0, x, y, 0.0, g_peak,
                                 app.coupling_averaging)
        transits.append(AtomTransit(t_arr, x, y, g_eff))
    return transits


def occupancy_from_transits(transits: list[AtomTransit],
                            interaction_time: float,
                            duration: float) -> tuple[float, float, float]:
    """Fractions of [0, duration] covered by (>=1, exactly 1, >=2) atoms."""
    events = []
    for tr in transits:
        a = max(tr.t_arrival, 0.0)
        b = min(tr.t_arrival + interaction_time, duration)
        if b > a:
            events.append((a, 1))
            events.append((b, -1))
    events.sort()
    t_prev = 0.0
    n = 0
    occ1 = occ2 = 0.0
    for t, delta in events:
        if n >= 1:
            occ1 += t - t_prev
        if n >= 2:
            occ2 += t - t_prev
        n += delta
        t_prev = t
    if n >= 1:
        occ1 += duration - t_prev
    if n >= 2:
        occ2 += duration - t_prev
    return occ1 / duration, (occ1 - occ2) / duration, occ2 / duration


def _included_pulses(tr: AtomTransit, seq: PulseSequence, app: ApparatusParams,
                     params: SystemParams) -> tuple[list[int], list[float]]:
    """Period indices whose pump midpoint falls inside the transit window
    (and inside the transverse aperture), with the frozen coupling each."""
    T = seq.period
    mid = seq.pump_start_offset + 0.5 * seq.pump_duration
    t_lo = tr.t_arrival
    t_hi = tr.t_arrival + app.interaction_time
    t_center = tr.t_arrival + 0.5 * app.interaction_time
    k_lo = max(0, math.ceil((t_lo - mid) / T))
    k_hi = math.floor((t_hi - mid) / T)
    half = app.aperture_waists * app.waist_w0
    ks, gs = [], []
    for k in range(k_lo, k_hi + 1):
        t_mid = k * T + mid
        z = app.velocity * (t_mid - t_center)
        if abs(z) > half:
            continue
        ks.append(k)
        gs.append(coupling_profile(app.waist_w0, tr.x_offset, tr.y_offset, z,
                                   params.g, app.coupling_averaging))
    return ks, gs


def simulate_transits(transits: list[AtomTransit], params: SystemParams,
                      seq: PulseSequence, app: ApparatusParams,
                      run_duration: float, seed: int,
                      step_ns: float = 2.0, workers: int = 1):
    """Detection-chain simulation for an explicit list of transits.

    Returns (clicks, info).  Atoms are prepared in |u,0> at the start of
    their first included pulse period; the internal state carries across
    the periods of one transit.  Overlapping atoms evolve independently
    and their clicks are merged (the overlap count is reported in info).
    """
    if seq.n_pulses is not None:
        raise ValueError("the experiment drives periodically; "
                         "seq.n_pulses must be None")
    T = seq.period
    inputs = _KernelInputs(params, seq)
    space = params.space
    psi0 = basis_state(space, "u", 0).data

    pulse_plan = [_included_pulses(tr, seq, app, params) for tr in transits]
    n_tr = len(transits)
    n_pulse_units = sum(len(ks) for ks, _ in pulse_plan)

    S = np.tile(psi0[:, None], (1, n_tr)).astype(complex)
    rng_state = np.array(
        [derive_key(seed, "traj", i) for i in range(n_tr)], dtype=np.uint64)
    thresholds = -np.ones(n_tr)
    emissions = [[] for _ in range(n_tr)]
    dt = step_ns * 1e-9

    max_rounds = max((len(ks) for ks, _ in pulse_plan), default=0)
    worst_top_fock = 0.0
    for rnd in range(max_rounds):
        idx = np.array([i for i in range(n_tr) if len(pulse_plan[i][0]) > rnd],
                       dtype=np.int64)
        if idx.size == 0:
            continue
        S_sub = np.ascontiguousarray(S[:, idx])
        g_sub = np.array([pulse_plan[i][1][rnd] for i in idx])
        rng_sub = rng_state[idx].copy()
        thr_sub = thresholds[idx].copy()
        jt, jch, jn, top = inputs.evolve(S_sub, g_sub, rng_sub, thr_sub,
                                         0.0, T, dt, workers=workers)
        if top.size:
            worst_top_fock = max(worst_top_fock, float(top.max()))
        S[:, idx] = S_sub
        rng_state[idx] = rng_sub
        thresholds[idx] = thr_sub
        for j, i in enumerate(idx):
            k = pulse_plan[i][0][rnd]
            base = k * T
            for m in range(jn[j]):
                if jch[j, m] == 0:
                    emissions[i].append(base + jt[j, m])

    res_ns = app.resolution_ns
    horizon_ns = int(math.floor(run_duration * 1e9))
    clicks = []
    n_emitted = 0
    n_detected = 0
    for i in range(n_tr):
        if not emissions[i]:
            continue
        det_key = derive_key(seed, "det", i)
        u = uniforms(det_key, np.arange(2 * len(emissions[i])))
        for j, t_em in enumerate(emissions[i]):
            n_emitted += 1
            if u[2 * j] >= app.quantum_efficiency:
                continue
            n_detected += 1
            det = 0 if u[2 * j + 1] < app.splitter_ratio else 1
            t_ns = (int(math.floor(t_em * 1e9)) // res_ns) * res_ns
            if 0 <= t_ns <= horizon_ns:
                clicks.append(ClickRecord(t_ns, det, ORIGIN_SIGNAL))

    for det in (0, 1):
        if app.dark_count_rate <= 0:
            continue
        gen = philox(seed, "dark", det)
        n_dark = gen.poisson(app.dark_count_rate * run_duration)
        t_dark = np.sort(gen.uniform(0.0, run_duration, size=n_dark))
        for t_d in t_dark:
            t_ns = (int(math.floor(t_d * 1e9)) // res_ns) * res_ns
            if t_ns <= horizon_ns:
                clicks.append(ClickRecord(t_ns, det, ORIGIN_DARK))

    clicks.sort(key=lambda c: (c.t_ns, c.detector, c.origin))

    windows = sorted((tr.t_arrival, tr.t_arrival + app.interaction_time)
                     for tr in transits)
    n_overlap = sum(1 for (a1, b1), (a2, b2) in zip(windows[:-1], windows[1:])
                    if a2 < b1)
    info = {
        "n_transits": n_tr,
        "n_pulse_units": n_pulse_units,
        "n_emitted": n_emitted,
        "n_detected": n_detected,
        "n_dark": sum(1 for c in clicks if c.origin == ORIGIN_DARK),
        "n_overlapping_transits": n_overlap,
        "max_top_fock_population": worst_top_fock,
    }
    return clicks, info


def simulate_run(params: SystemParams, seq: PulseSequence,
                 app: ApparatusParams, run_duration: float, seed: int,
                 step_ns: float = 2.0, workers: int = 1,
                 return_info: bool = False):
    """Full simulated run: sampled transits plus the detection chain.

    Deterministic for a given (config, seed); the worker count only sets
    concurrency.  Returns the click list, or (clicks, info) if
    ``return_info`` is set.
    """
    transits = sample_transits(app, run_duration, seed, g_peak=params.g)
    clicks, info = simulate_transits(transits, params, seq, app, run_duration,
                                     seed, step_ns=step_ns, workers=workers)
    if return_info:
        return clicks, info
    return clicks
