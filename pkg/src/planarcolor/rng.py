"""Counter-based random streams.

One Philox generator per (seed, module, purpose) triple: adding a new purpose
never perturbs the draws of existing ones, so golden tests stay stable as the
package grows.
"""

import hashlib

import numpy as np


def stream(seed, module, purpose):
    """A fresh ``numpy.random.Generator`` for the given (seed, module, purpose)."""
    if not isinstance(seed, (int, np.integer)):
        raise TypeError(f"seed must be an integer, got {type(seed).__name__}")
    tag = f"{int(seed)}:{module}:{purpose}".encode()
    key = int.from_bytes(hashlib.sha256(tag).digest()[:16], "little")
    return np.random.Generator(np.random.Philox(key=key))
