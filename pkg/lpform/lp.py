"""
Linear prediction solvers working on a single analysis frame.

All error sums follow the covariance convention: the forward error runs over
n in [p, N) and the backward error over n in [0, N - p), so no sample outside
the frame is ever used.
"""
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import FrameError, WeightError

CONDITION_LIMIT = 1e12
RIDGE_SCALE = 1e-9
ENERGY_FLOOR = 1e-12


@dataclass(frozen=True)
class LpModel:
    """
    Coefficients a_1..a_p of A(z) = 1 + sum_k a_k z^-k and the prediction
    error energy attained by them. `degenerate` marks silent frames and
    systems that needed the ridge fallback.
    """
    order: int
    coefficients: np.ndarray
    residual_energy: float
    degenerate: bool = False

    @property
    def polynomial(self):
        return np.concatenate(([1.0], self.coefficients))


@dataclass(frozen=True)
class NormalSystem:
    matrix: np.ndarray
    rhs: np.ndarray

    @property
    def order(self):
        return len(self.rhs)


def _as_frame(frame, order):
    frame = np.asarray(frame, dtype=np.float64)
    if frame.ndim != 1:
        raise FrameError(f"A frame needs to be one-dimensional, got shape {frame.shape}.")
    if order < 1:
        raise FrameError(f"Prediction order needs to be at least 1, got {order}.")
    if len(frame) <= 2 * order:
        raise FrameError(
            f"Frame too short: {len(frame)} samples for order {order}, "
            f"need more than {2 * order}."
        )
    return frame


def _as_weights(weights, n_samples):
    if weights is None:
        return np.ones(n_samples)
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (n_samples,):
        raise WeightError(
            f"Weights need one value per frame sample ({n_samples}), got shape {weights.shape}."
        )
    if np.any(weights < 0):
        raise WeightError("Weights need to be nonnegative.")
    return weights


def _lagged(frame, order, direction):
    """
    Regressors and targets of the prediction error.
    forward:  target x[n],  regressors x[n-1] .. x[n-p],  n in [p, N)
    backward: target x[n],  regressors x[n+1] .. x[n+p],  n in [0, N - p)
    """
    windows = np.lib.stride_tricks.sliding_window_view(frame, order + 1)
    if direction == 'forward':
        return windows[:, order - 1::-1], windows[:, order]
    if direction == 'backward':
        return windows[:, 1:], windows[:, 0]
    raise ValueError(f"Unknown prediction direction {direction!r}")


def _direction_weights(weights, order, direction):
    return weights[order:] if direction == 'forward' else weights[:len(weights) - order]


def partial_system(frame, order, direction, weights=None):
    """
    One prediction direction of the (weighted) normal equations:
    matrix[i][k] = sum_n w_n x_{n-+i} x_{n-+k}, rhs[i] = -sum_n w_n x_{n-+i} x_n.
    """
    frame = _as_frame(frame, order)
    weights = _as_weights(weights, len(frame))
    regressors, target = _lagged(frame, order, direction)
    weighted = regressors * _direction_weights(weights, order, direction)[:, np.newaxis]
    return NormalSystem(weighted.T @ regressors, -(weighted.T @ target))


def _symmetric(matrix):
    return 0.5 * (matrix + matrix.T)


def build_cov_system(frame, order):
    """Normal equations of the classic covariance method (forward error only)."""
    forward = partial_system(frame, order, 'forward')
    return NormalSystem(_symmetric(forward.matrix), forward.rhs)


def build_fb_system(frame, order, weights=None):
    """
    Normal equations of (weighted) forward-backward prediction. Without
    weights every w_n is 1 and the system is the plain forward-backward one.
    :param weights: one nonnegative weight per frame sample, or None
    """
    frame = _as_frame(frame, order)
    weights = _as_weights(weights, len(frame))
    forward = partial_system(frame, order, 'forward', weights)
    backward = partial_system(frame, order, 'backward', weights)
    return NormalSystem(
        _symmetric(forward.matrix + backward.matrix),
        forward.rhs + backward.rhs,
    )


def solve_normal_system(system):
    """
    Solves matrix . a = rhs with a symmetric indefinite factorization.
    Ill-conditioned (condition number above 1e12) or singular systems are
    retried with a ridge of 1e-9 * trace / p on the diagonal.
    :return: (coefficients, degenerate)
    """
    matrix, rhs = system.matrix, system.rhs
    order = system.order
    try:
        condition = np.linalg.cond(matrix)
    except np.linalg.LinAlgError:
        condition = np.inf

    if np.isfinite(condition) and condition <= CONDITION_LIMIT:
        try:
            return scipy.linalg.solve(matrix, rhs, assume_a='sym'), False
        except (np.linalg.LinAlgError, ValueError):
            pass

    ridge = RIDGE_SCALE * np.trace(matrix) / order
    if not np.isfinite(ridge) or ridge <= 0:
        return np.zeros(order), True

    regularized = matrix + ridge * np.eye(order)
    try:
        coefficients = scipy.linalg.solve(regularized, rhs, assume_a='sym')
    except (np.linalg.LinAlgError, ValueError):
        coefficients = scipy.linalg.lstsq(regularized, rhs)[0]
    return coefficients, True


def prediction_error(frame, coefficients, direction):
    frame = np.asarray(frame, dtype=np.float64)
    coefficients = np.asarray(coefficients, dtype=np.float64)
    regressors, target = _lagged(frame, len(coefficients), direction)
    return target + regressors @ coefficients


def forward_error_energy(frame, coefficients):
    """sum over n in [p, N) of (x_n + sum_k a_k x_{n-k})^2"""
    return float(np.sum(prediction_error(frame, coefficients, 'forward') ** 2))


def fb_error_energy(frame, coefficients, weights=None):
    """
    Combined forward and backward error energy, each term weighted by w_n.
    Without weights this is the plain forward-backward criterion.
    """
    frame = np.asarray(frame, dtype=np.float64)
    order = len(coefficients)
    weights = _as_weights(weights, len(frame))
    forward = prediction_error(frame, coefficients, 'forward')
    backward = prediction_error(frame, coefficients, 'backward')
    return float(
        np.sum(_direction_weights(weights, order, 'forward') * forward ** 2)
        + np.sum(_direction_weights(weights, order, 'backward') * backward ** 2)
    )


def _is_silent(frame):
    return float(np.dot(frame, frame)) < ENERGY_FLOOR


def _silent_model(order):
    return LpModel(order, np.zeros(order), 0.0, degenerate=True)


def lp_cov(frame, order):
    """Covariance-method LP (LP-COV)."""
    frame = _as_frame(frame, order)
    if _is_silent(frame):
        return _silent_model(order)

    coefficients, degenerate = solve_normal_system(build_cov_system(frame, order))
    return LpModel(order, coefficients, forward_error_energy(frame, coefficients), degenerate)


def weighted_lp_fb(frame, order, weights=None):
    """
    Weighted forward-backward LP in the covariance setting. The residual
    energy is the attained weighted combined error.
    """
    frame = _as_frame(frame, order)
    weights = _as_weights(weights, len(frame))
    if _is_silent(frame):
        return _silent_model(order)

    coefficients, degenerate = solve_normal_system(build_fb_system(frame, order, weights))
    return LpModel(
        order,
        coefficients,
        fb_error_energy(frame, coefficients, weights),
        degenerate,
    )


def lp_fb(frame, order):
    """Forward-backward covariance LP."""
    return weighted_lp_fb(frame, order, None)
