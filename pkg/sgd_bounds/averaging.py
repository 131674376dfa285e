"""
Averaging Module
Numerically stable weighted running means for geometrically growing weights

The weights (1 - a*gamma)^-(t+1) overflow float64 after a few thousand steps,
so neither W_T nor w_t is ever formed. Instead the mixing rate
rho_t = w_t / W_t is carried through the ratio recurrence

    W_t / w_t = 1 + (w_{t-1} / w_t) * (W_{t-1} / w_{t-1})

evaluated in log space, and the mean is updated as m <- (1 - rho) m + rho v.
"""
import math
from typing import Optional, Union

import numpy as np

ArrayLike = Union[float, np.ndarray]


def log_weights_from(weights) -> np.ndarray:
    """
    Convert plain non-negative weights to log-weights (-inf for zeros)

    Args:
        weights: Sequence of non-negative finite reals

    Returns:
        float64 array of log-weights
    """
    w = np.asarray(weights, dtype=np.float64)
    if w.ndim != 1:
        raise ValueError(f"weights must be one-dimensional, got shape {w.shape}")
    if np.any(~np.isfinite(w)) or np.any(w < 0):
        raise ValueError("weights must be finite and non-negative")
    with np.errstate(divide="ignore"):
        return np.log(w)


def averaging_rates(log_weights) -> np.ndarray:
    """
    Mixing rates rho_t = w_t / W_t for a whole schedule

    Zero weights get rho_t = 0, so those entries never touch the mean.
    The accumulation log W_t = logaddexp(log W_{t-1}, log w_t) is the log form
    of the ratio recurrence above.

    Args:
        log_weights: Log-weights, -inf marking zero weight

    Returns:
        Array of rates in [0, 1]
    """
    lw = np.asarray(log_weights, dtype=np.float64)
    if not np.any(np.isfinite(lw)):
        raise ValueError("at least one weight must be positive")
    log_w_total = np.logaddexp.accumulate(lw)
    rates = np.zeros_like(lw)
    positive = np.isfinite(lw)
    rates[positive] = np.exp(lw[positive] - log_w_total[positive])
    # the first positive weight always resets the mean exactly
    rates[np.argmax(positive)] = 1.0
    return np.minimum(rates, 1.0)


class OnlineWeightedMean:
    """Streaming weighted mean of scalars or arrays with log-space weights"""

    def __init__(self):
        self.mean: Optional[ArrayLike] = None
        self.count = 0
        self._log_w_last: Optional[float] = None
        self._log_ratio = 0.0  # log(W_t / w_t) for the last positive weight

    def next_rate(self, log_w: float) -> float:
        """
        Advance the ratio recurrence by one weight and return rho_t

        Args:
            log_w: Log of the incoming weight (-inf for zero)

        Returns:
            rho_t, 0.0 when the weight is zero
        """
        if log_w == -math.inf:
            return 0.0
        if self._log_w_last is None:
            self._log_ratio = 0.0
        else:
            self._log_ratio = float(
                np.logaddexp(0.0, self._log_w_last - log_w + self._log_ratio)
            )
        self._log_w_last = log_w
        return math.exp(-self._log_ratio)

    def update(self, value: ArrayLike, log_w: float) -> None:
        """Fold one value with weight exp(log_w) into the mean"""
        rho = self.next_rate(log_w)
        if rho == 0.0:
            return
        self.count += 1
        if self.mean is None or rho >= 1.0:
            self.mean = np.array(value, dtype=np.float64, copy=True)
        else:
            self.mean = (1.0 - rho) * self.mean + rho * np.asarray(value, dtype=np.float64)

    @property
    def empty(self) -> bool:
        return self.mean is None
