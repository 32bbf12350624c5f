"""Two spread estimates for sampled coefficient series."""
from __future__ import annotations

import numpy as np

from ..numdiff import smooth


def _stack(samples) -> np.ndarray:
    return np.stack([getattr(s, "values", s) for s in samples])


def uq_std_over_samples(samples) -> np.ndarray:
    """Std across samples at each time point, averaged over time: ``[n_terms, d]``."""
    values = _stack(samples)
    # shifting by the first sample leaves the std unchanged and makes identical samples exactly 0
    return (values - values[:1]).std(axis=0).mean(axis=0)


def uq_std_over_time(samples, smooth_window: int = 51) -> np.ndarray:
    """Per sample: remove a centered moving-average mean, take the std over
    time; then average over samples. Returns ``[n_terms, d]``."""
    values = _stack(samples)
    window = min(smooth_window, values.shape[1] - (1 - values.shape[1] % 2))
    resid = values - smooth(values, window, axis=1)
    return resid.std(axis=1).mean(axis=0)
