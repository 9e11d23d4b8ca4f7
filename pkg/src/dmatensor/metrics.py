"""Prediction-accuracy metrics over held-out configurations.

Two complementary measures:

* ``nmse`` — total squared prediction error divided by total measured
  energy.  Sensitive to any constant (configuration-independent) offset.
* ``zeta`` — per matrix entry, the standard deviation of the measured
  values across configurations divided by the standard deviation of the
  prediction error, averaged over entries.  Removing the per-entry mean
  makes it blind to constant offsets, which matters because the direct
  channel (and its estimate) is exactly such an offset.

Conventions: standard deviations use the population formula over the
configuration index with the complex mean removed,
``sqrt(mean |x - mean(x)|^2)``.  Both metrics are reported in dB with the
amplitude-ratio convention for zeta (``20 log10`` of the averaged ratio)
and the power convention for NMSE (``10 log10``); a perfect prediction at
SNR s then yields ``nmse_db ~ -s`` and ``zeta_db ~ s``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateInputError


@dataclass(frozen=True)
class MetricReport:
    """NMSE and zeta for one prediction run."""

    nmse: float
    nmse_db: float
    zeta_db: float
    per_entry_zeta: np.ndarray   # linear ratios, +inf where the error SD is zero
    q_count: int
    inf_entry_count: int


def _check_shapes(h_meas: np.ndarray, h_pred: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    h_meas = np.asarray(h_meas, dtype=complex)
    h_pred = np.asarray(h_pred, dtype=complex)
    if h_meas.shape != h_pred.shape:
        raise ValueError(f"shape mismatch: {h_meas.shape} vs {h_pred.shape}")
    if h_meas.ndim != 3:
        raise ValueError("expected N_U x N_F x Q stacks")
    return h_meas, h_pred


def nmse(h_meas: np.ndarray, h_pred: np.ndarray) -> float:
    """Total squared error over total measured energy (linear, >= 0)."""
    h_meas, h_pred = _check_shapes(h_meas, h_pred)
    denom = float(np.sum(np.abs(h_meas) ** 2))
    if denom == 0.0:
        raise DegenerateInputError("measured tensor has zero energy")
    return float(np.sum(np.abs(h_meas - h_pred) ** 2)) / denom


def _sd_over_q(x: np.ndarray) -> np.ndarray:
    centered = x - x.mean(axis=2, keepdims=True)
    return np.sqrt(np.mean(np.abs(centered) ** 2, axis=2))


def zeta(h_meas: np.ndarray, h_pred: np.ndarray) -> tuple[float, np.ndarray]:
    """Offset-insensitive accuracy in dB plus the per-entry linear ratios.

    Entries whose error SD is zero (a perfect fit up to an offset) are
    reported as +inf and excluded from the average; if every entry is
    excluded the overall value is +inf as well.
    """
    h_meas, h_pred = _check_shapes(h_meas, h_pred)
    if h_meas.shape[2] < 2:
        raise DegenerateInputError("zeta needs at least two configurations")
    sd_meas = _sd_over_q(h_meas)
    sd_err = _sd_over_q(h_meas - h_pred)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = sd_meas / sd_err
    ratio = np.where(sd_err == 0.0, np.inf, ratio)
    finite = np.isfinite(ratio)
    if not np.any(finite):
        return float("inf"), ratio
    zeta_lin = float(np.mean(ratio[finite]))
    return 20.0 * np.log10(zeta_lin), ratio


def evaluate(h_meas: np.ndarray, h_pred: np.ndarray) -> MetricReport:
    """Compute both metrics at once for reporting."""
    value = nmse(h_meas, h_pred)
    zeta_db, per_entry = zeta(h_meas, h_pred)
    with np.errstate(divide="ignore"):
        value_db = 10.0 * np.log10(value) if value > 0 else float("-inf")
    return MetricReport(
        nmse=value,
        nmse_db=float(value_db),
        zeta_db=float(zeta_db),
        per_entry_zeta=per_entry,
        q_count=h_meas.shape[2],
        inf_entry_count=int(np.sum(~np.isfinite(per_entry))),
    )


def align_scalar(
    a_hat: np.ndarray,
    b_hat: np.ndarray,
    a_true: np.ndarray,
    b_true: np.ndarray,
) -> tuple[complex, float, float]:
    """Resolve the reciprocal scalar ambiguity against ground truth.

    Returns the ``g`` minimizing ``||a_true - g a_hat||_F`` together with the
    aligned relative errors of ``g a_hat`` and ``b_hat / g``.  Only
    meaningful for diagnostics on synthetic data; predictions never need it.
    """
    a_hat = np.asarray(a_hat, dtype=complex)
    b_hat = np.asarray(b_hat, dtype=complex)
    a_true = np.asarray(a_true, dtype=complex)
    b_true = np.asarray(b_true, dtype=complex)
    if a_hat.shape != a_true.shape or b_hat.shape != b_true.shape:
        raise ValueError("shape mismatch between estimates and ground truth")
    denom = float(np.sum(np.abs(a_hat) ** 2))
    if denom == 0.0:
        raise DegenerateInputError("a_hat has zero norm")
    g = complex(np.sum(np.conj(a_hat) * a_true) / denom)
    if g == 0:
        raise DegenerateInputError("estimates are orthogonal to ground truth")
    res_a = float(np.linalg.norm(a_true - g * a_hat) / np.linalg.norm(a_true))
    res_b = float(np.linalg.norm(b_true - b_hat / g) / np.linalg.norm(b_true))
    return g, res_a, res_b
