"""Counter-based random streams.

Every random draw in the package comes from a Philox generator keyed by
(seed, purpose, index). Streams are a pure function of the key, so a Monte
Carlo run splits into per-sample streams that do not depend on how samples
are distributed over worker processes: same seed means bit-identical output
for any worker count.
"""

import numpy as np

# Purpose words keep independent uses of the same (seed, index) pair apart.
CONFIGURATION = 0
AUX_MARKS = 1
SHARP_NOISE = 2
AUX_PATH = 3
SYNTHETIC = 4

_INDEX_BITS = 56
_INDEX_MASK = (1 << _INDEX_BITS) - 1


def stream(seed, purpose, index):
    """Generator for stream `index` of the given purpose under `seed`.

    seed must fit in an unsigned 64-bit word and index in 56 bits.
    """
    seed = int(seed)
    index = int(index)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed {seed} outside unsigned 64-bit range")
    if not 0 <= index <= _INDEX_MASK:
        raise ValueError(f"stream index {index} outside 56-bit range")
    word = (int(purpose) << _INDEX_BITS) | index
    key = np.array([seed, word], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))
