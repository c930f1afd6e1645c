import zlib

import numpy as np


def _as_int(key):
    if isinstance(key, (int, np.integer)):
        return int(key) & 0xFFFFFFFF
    return zlib.crc32(str(key).encode("utf-8"))


def derive_seed(seed, *keys) -> int:
    """Deterministic 32-bit child seed from a parent seed and any hashable keys.

    Work items seeded this way give identical results under any scheduling.
    """
    entropy = [_as_int(seed)] + [_as_int(k) for k in keys]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])
