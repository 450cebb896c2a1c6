"""Seed handling shared by the samplers."""

import numpy as np

from .errors import ValidationError


def checked_rng(seed: int | None) -> np.random.Generator:
    """A fresh generator, rejecting seeds numpy would choke on."""
    if seed is not None:
        if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool) or seed < 0:
            raise ValidationError(f"seed must be a non-negative integer, got {seed!r}")
    return np.random.default_rng(seed)
