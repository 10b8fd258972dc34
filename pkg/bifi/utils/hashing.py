import hashlib
import json

import numpy as np


def config_key(record: dict) -> str:
    """Stable SHA-256 of a JSON-serializable solver description."""
    return hashlib.sha256(json.dumps(record, sort_keys=True).encode()).hexdigest()


def params_key(z) -> str:
    """Exact bytes of a parameter vector; equal floats give equal keys."""
    return np.ascontiguousarray(z, dtype="<f8").tobytes().hex()
