"""Counter-based random number streams.

Every random quantity in a run is drawn from a stream keyed by
(master_seed, *tokens).  Streams are independent of execution order,
worker count, and each other, which is what makes simulation output
byte-identical across schedulings.

Two flavors:

* splitmix64 streams: a 64-bit state advanced by a fixed increment with a
  bijective output mix, i.e. output(i) = mix(seed + i * gamma).  Used
  inside the compiled trajectory kernel (one stream per trajectory) and
  for vectorized stateless draws.
* numpy Philox generators keyed by the same derivation, for sequential
  sampling of the experiment-level processes (atom arrivals, dark
  counts).
"""

import hashlib

import numpy as np

_GAMMA = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_U53 = float(1 << 53)


def _mix(z: np.uint64) -> np.uint64:
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


def _token_to_u64(token) -> np.uint64:
    if isinstance(token, (int, np.integer)):
        return np.uint64(int(token) & 0xFFFFFFFFFFFFFFFF)
    if isinstance(token, str):
        digest = hashlib.blake2b(token.encode(), digest_size=8).digest()
        return np.uint64(int.from_bytes(digest, "little"))
    raise TypeError(f"stream tokens must be int or str, got {type(token)!r}")


def derive_key(master_seed: int, *tokens) -> np.uint64:
    """Deterministic 64-bit stream key from a master seed and tokens."""
    with np.errstate(over="ignore"):
        s = _mix(np.uint64(master_seed & 0xFFFFFFFFFFFFFFFF) + _GAMMA)
        for tok in tokens:
            s = _mix((s ^ _token_to_u64(tok)) + _GAMMA)
    return s


def uniforms(key: np.uint64, counters: np.ndarray) -> np.ndarray:
    """Stateless uniforms in [0, 1): value i depends only on (key, counters[i])."""
    with np.errstate(over="ignore"):
        z = key + (np.asarray(counters, dtype=np.uint64) + np.uint64(1)) * _GAMMA
        z = _mix(z)
    return (z >> np.uint64(11)).astype(np.float64) / _U53


def splitmix_next(state: np.uint64) -> tuple[np.uint64, float]:
    """Advance a splitmix64 state; returns (new_state, uniform in [0,1))."""
    with np.errstate(over="ignore"):
        state = state + _GAMMA
        z = _mix(state)
    return state, float(z >> np.uint64(11)) / _U53


def philox(master_seed: int, *tokens) -> np.random.Generator:
    """Philox-backed generator keyed by (master_seed, tokens)."""
    k0 = int(derive_key(master_seed, *tokens, "philox-lo"))
    k1 = int(derive_key(master_seed, *tokens, "philox-hi"))
    return np.random.Generator(np.random.Philox(key=(k1 << 64) | k0))
