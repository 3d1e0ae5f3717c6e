"""Counter-based random numbers for reproducible trajectories.

Every draw is a pure function of a 4-part key (master_seed, stream_id,
step, substep): the key is folded through a splitmix64-style finalizer
(Stafford's mix13), one round per key part.  There is no hidden state,
so trajectories can be replayed, split across workers, or resumed from
any step and the bytes come out identical on every platform.

Substep lanes within one step are allocated as follows:

    0 .. m-1        activation draws
    m .. 2m-1       transport draws
    2m              copycat cluster choice
    LANE_FREE       standalone RngStream draws (mu_sample etc.)

The numba kernels reimplement ``mix64`` on uint64; ``tests/test_rng.py``
checks the two implementations agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass, field

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
LANE_FREE = 0xF1EE

# 2^-53; (raw >> 11) * U53 is the standard 53-bit uniform in [0, 1)
U53 = 1.0 / 9007199254740992.0


def mix64(z: int) -> int:
    """Stafford mix13 finalizer; bijective on 64-bit integers."""
    z &= MASK64
    z ^= z >> 30
    z = (z * 0xBF58476D1CE4E5B9) & MASK64
    z ^= z >> 27
    z = (z * 0x94D049BB133111EB) & MASK64
    z ^= z >> 31
    return z


def raw64(master_seed: int, stream_id: int, step: int, substep: int) -> int:
    """The 64-bit output for one key.  GOLDEN offsets keep 0-keys off the
    finalizer's 0 -> 0 fixed point."""
    h = mix64((master_seed + GOLDEN) & MASK64)
    h = mix64((h ^ stream_id) + GOLDEN)
    h = mix64((h ^ step) + GOLDEN)
    return mix64((h ^ substep) + GOLDEN)


def u01(master_seed: int, stream_id: int, step: int, substep: int) -> float:
    """Uniform float in [0, 1) with 53 random bits."""
    return (raw64(master_seed, stream_id, step, substep) >> 11) * U53


@dataclass
class RngStream:
    """A named stream of draws under one master seed.

    ``stream_id`` separates trajectories of an ensemble; the internal
    counter advances by one per kernel step (or per standalone draw), so
    identical (master_seed, stream_id) always replays identically.
    """

    master_seed: int
    stream_id: int = 0
    counter: int = field(default=0, repr=False)

    def take_step_index(self) -> int:
        """Reserve the next step index; the kernel keys its substep draws
        off this value."""
        t = self.counter
        self.counter += 1
        return t

    def next_u01(self) -> float:
        """One standalone uniform draw on the reserved lane."""
        return u01(self.master_seed, self.stream_id, self.take_step_index(), LANE_FREE)

    def spawn(self, stream_id: int) -> "RngStream":
        """Fresh stream under the same master seed."""
        return RngStream(self.master_seed, stream_id)
