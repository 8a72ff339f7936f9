import math
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from modpoly.engine import compute_phi, default_policy
from modpoly.halfplane import PrecisionPolicy


class PhiCache:
    """Lazily computed modular polynomials, shared across the whole session."""

    def __init__(self):
        self._base = {}
        self._check = {}

    def get(self, N: int):
        if N not in self._base:
            self._base[N] = compute_phi(N, jobs=2)
        return self._base[N]

    def get_recheck(self, N: int):
        """The same polynomial recomputed at 1.5x the default base precision."""
        if N not in self._check:
            pol = default_policy(N)
            pol15 = PrecisionPolicy(base_bits=math.ceil(1.5 * pol.base_bits),
                                    retry_factor=pol.retry_factor,
                                    max_retries=pol.max_retries)
            self._check[N] = compute_phi(N, policy=pol15, jobs=2)
        return self._check[N]


@pytest.fixture(scope="session")
def phi_cache():
    return PhiCache()
