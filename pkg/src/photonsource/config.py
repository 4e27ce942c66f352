"""Run configuration: a flat, human-readable key=value format with dotted
section names.

Units are chosen so reference values transcribe verbatim: every *_mhz key
is a frequency in MHz of (omega / 2 pi), every *_us key a time in
microseconds.  Parsing and serialization are exact inverses (canonical
key order, shortest round-trip float formatting), so
parse(serialize(parse(text))) is a fixed point.
"""

import math
from dataclasses import dataclass, field

from .experiment import ApparatusParams
from .model import PulseSequence, SystemParams

TWO_PI = 2.0 * math.pi
MHZ = 1e6
US = 1e-6


class ConfigError(ValueError):
    """Invalid or unknown configuration content; carries the key name."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"config key {key!r}: {message}")


@dataclass(frozen=True)
class AnalysisParams:
    """Knobs of the analysis pipeline (all times in seconds)."""

    bin_width: float = 0.1e-6
    max_lag: float = 40.0e-6
    arrival_bin: float = 0.1e-6
    peak_halfwidth: float = 2.0e-6
    strong_min_clicks: int = 2
    n_conditional_pulses: int = 6

    def __post_init__(self):
        if self.bin_width <= 0 or self.max_lag <= 0 or self.arrival_bin <= 0:
            raise ValueError("analysis bin widths and max lag must be positive")
        if self.n_conditional_pulses < 1:
            raise ValueError("n_conditional_pulses must be >= 1")


@dataclass(frozen=True)
class RunConfig:
    system: SystemParams = field(default_factory=SystemParams)
    pulses: PulseSequence = field(default_factory=PulseSequence)
    apparatus: ApparatusParams = field(default_factory=ApparatusParams)
    analysis: AnalysisParams = field(default_factory=AnalysisParams)
    run_duration: float = 1.0
    master_seed: int = 20020901
    trajectory_count: int = 5000
    workers: int = 1
    step_ns: float = 2.0
    output_directory: str = "out"


# key -> (getter from RunConfig, setter kwargs-bucket, converter pair)
def _freq(x_mhz: float) -> float:
    return TWO_PI * x_mhz * MHZ


def _freq_inv(omega: float) -> float:
    return omega / (TWO_PI * MHZ)


def _time(x_us: float) -> float:
    return x_us * US


def _time_inv(t: float) -> float:
    return t / US


_IDENT = (lambda x: x, lambda x: x)
_FREQ = (_freq, _freq_inv)
_TIME = (_time, _time_inv)
_LEN_UM = (lambda x: x * 1e-6, lambda x: x * 1e6)

# (section, field, config key, (to-internal, to-config), python type)
_SCHEMA = [
    ("system", "g", "system.g_mhz", _FREQ, float),
    ("system", "omega_p0", "system.pump_peak_mhz", _FREQ, float),
    ("system", "omega_r0", "system.recycle_peak_mhz", _FREQ, float),
    ("system", "delta_p", "system.pump_detuning_mhz", _FREQ, float),
    ("system", "delta_c", "system.cavity_detuning_mhz", _FREQ, float),
    ("system", "gamma", "system.gamma_mhz", _FREQ, float),
    ("system", "kappa", "system.kappa_mhz", _FREQ, float),
    ("system", "branch_u", "system.branch_to_u", _IDENT, float),
    ("system", "delta_r", "system.recycle_laser_detuning_mhz", _FREQ, float),
    ("system", "n_max", "system.n_max", _IDENT, int),
    ("pulses", "pump_duration", "pulses.pump_us", _TIME, float),
    ("pulses", "recycle_duration", "pulses.recycle_us", _TIME, float),
    ("pulses", "period", "pulses.period_us", _TIME, float),
    ("pulses", "pump_start_offset", "pulses.pump_start_us", _TIME, float),
    ("pulses", "recycle_start_offset", "pulses.recycle_start_us", _TIME, float),
    ("pulses", "shape", "pulses.shape", _IDENT, str),
    ("apparatus", "flux", "apparatus.flux_per_s", _IDENT, float),
    ("apparatus", "waist_w0", "apparatus.waist_um", _LEN_UM, float),
    ("apparatus", "velocity", "apparatus.velocity_m_per_s", _IDENT, float),
    ("apparatus", "interaction_time", "apparatus.interaction_time_us", _TIME, float),
    ("apparatus", "quantum_efficiency", "apparatus.quantum_efficiency", _IDENT, float),
    ("apparatus", "dark_count_rate", "apparatus.dark_counts_per_s", _IDENT, float),
    ("apparatus", "time_resolution", "apparatus.time_resolution_us", _TIME, float),
    ("apparatus", "splitter_ratio", "apparatus.splitter_ratio", _IDENT, float),
    ("apparatus", "coupling_averaging", "apparatus.coupling_averaging", _IDENT, float),
    ("apparatus", "aperture_waists", "apparatus.aperture_waists", _IDENT, float),
    ("analysis", "bin_width", "analysis.bin_width_us", _TIME, float),
    ("analysis", "max_lag", "analysis.max_lag_us", _TIME, float),
    ("analysis", "arrival_bin", "analysis.arrival_bin_us", _TIME, float),
    ("analysis", "peak_halfwidth", "analysis.peak_halfwidth_us", _TIME, float),
    ("analysis", "strong_min_clicks", "analysis.strong_min_clicks", _IDENT, int),
    ("analysis", "n_conditional_pulses", "analysis.n_conditional_pulses", _IDENT, int),
    ("run", "run_duration", "run.duration_us", _TIME, float),
    ("run", "master_seed", "run.master_seed", _IDENT, int),
    ("run", "trajectory_count", "run.trajectory_count", _IDENT, int),
    ("run", "workers", "run.workers", _IDENT, int),
    ("run", "step_ns", "run.step_ns", _IDENT, float),
    ("run", "output_directory", "run.output_directory", _IDENT, str),
]

_BY_KEY = {entry[2]: entry for entry in _SCHEMA}

_SECTION_TYPES = {
    "system": SystemParams,
    "pulses": PulseSequence,
    "apparatus": ApparatusParams,
    "analysis": AnalysisParams,
}


def parse_config(text: str) -> RunConfig:
    """Parse key=value lines into a RunConfig; '#' starts a comment.

    Unknown keys, unparseable values, and invalid field combinations raise
    ConfigError naming the offending key.
    """
    buckets: dict[str, dict] = {s: {} for s in _SECTION_TYPES}
    buckets["run"] = {}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(line, f"line {lineno}: expected 'key = value'")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in _BY_KEY:
            raise ConfigError(key, f"line {lineno}: unknown key")
        if key in seen:
            raise ConfigError(key, f"line {lineno}: duplicate key")
        seen.add(key)
        section, fname, _, (to_internal, _), pytype = _BY_KEY[key]
        try:
            if pytype is str:
                parsed = value
            else:
                parsed = pytype(value)
        except ValueError:
            raise ConfigError(key, f"line {lineno}: cannot parse "
                                    f"{value!r} as {pytype.__name__}") from None
        buckets[section][fname] = to_internal(parsed)

    sections = {}
    for sname, cls in _SECTION_TYPES.items():
        try:
            sections[sname] = cls(**buckets[sname])
        except ValueError as exc:
            raise ConfigError(sname + ".*", str(exc)) from None
    run = buckets["run"]
    try:
        return RunConfig(system=sections["system"], pulses=sections["pulses"],
                         apparatus=sections["apparatus"],
                         analysis=sections["analysis"], **run)
    except (TypeError, ValueError) as exc:
        raise ConfigError("run.*", str(exc)) from None


def _emit_float(x: float, to_internal, to_config) -> str:
    """Config-unit decimal whose parse maps back to x exactly.

    Unit conversion is not exactly invertible in floats, so search the
    ulp neighborhood of the mathematical inverse for an exact preimage;
    one exists whenever x itself came from parsing.
    """
    v = float(to_config(x))
    if to_internal(v) == x:
        return repr(v)
    for direction in (math.inf, -math.inf):
        cand = v
        for _ in range(4):
            cand = math.nextafter(cand, direction)
            if to_internal(cand) == x:
                return repr(cand)
    return repr(v)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parse(serialize(parse(text))) == parse(text)."""
    lines = []
    for section, fname, key, (to_internal, to_config), pytype in _SCHEMA:
        if section == "run":
            value = getattr(cfg, fname)
        else:
            value = getattr(getattr(cfg, section), fname)
        if pytype is float:
            out = _emit_float(float(value), to_internal, to_config)
        else:
            out = value
        lines.append(f"{key} = {out}")
    return "\n".join(lines) + "\n"


def load_config(path) -> RunConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
