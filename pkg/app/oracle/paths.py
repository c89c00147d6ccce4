from typing import Dict, Optional

import numpy as np

from app.core.config import get_settings
from app.core.errors import InvalidParameter, SizeOverflow
from app.models.walk import WalkSpec
from app.walk.oqrw import Path


def enumerate_path_distribution(spec: WalkSpec, length: int, cap: Optional[int] = None) -> Dict[Path, float]:
    """Exact probability of every label path i_0 → … → i_length, by explicit Kraus chains."""
    if length < 0:
        raise InvalidParameter(f"length must be >= 0, got {length}")
    cap = cap if cap is not None else get_settings().enumeration_cap
    size = spec.dim_position ** (length + 1)
    if size > cap:
        raise SizeOverflow(f"{size} paths of length {length} exceed the enumeration cap {cap}", size=size, cap=cap)

    frontier = {(label,): spec.rho[j] for j, label in enumerate(spec.labels)}
    for _ in range(length):
        extended = {}
        for path, sigma in frontier.items():
            j = spec.index(path[-1])
            for i, label in enumerate(spec.labels):
                b = spec.transitions[j, i]
                extended[path + (label,)] = b @ sigma @ b.conj().T
        frontier = extended
    return {path: float(np.real(np.trace(sigma))) for path, sigma in frontier.items()}
