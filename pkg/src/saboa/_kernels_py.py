"""Pure numpy implementation of the per-round aggregation kernels.

Same signatures and in-place semantics as the compiled ``_kernels`` module,
which is preferred when it is importable.
"""

import numpy as np


def squint_step(points, grad, theta, eta, log_prior, log_eta, A, r, weights, theta_out):
    """One aggregation round, all outputs written in place.

    r[k]       = grad . (theta - points[k])
    A[k, i]   += eta[i] r[k] - (eta[i] r[k])^2
    weights[k] ∝ sum_i exp(log_prior[k] + log_eta[i] + A[k, i])
    theta_out  = weights @ points

    Returns the normalizing total; callers treat a non-finite or zero total
    as underflow.
    """
    np.subtract(np.dot(grad, theta), points @ grad, out=r)
    x = np.multiply.outer(r, eta)
    x -= x * x
    A += x
    total = normalize_log_weights(A, log_prior, log_eta, weights)
    np.dot(weights, points, out=theta_out)
    return total


def normalize_log_weights(A, log_prior, log_eta, weights):
    with np.errstate(invalid="ignore", divide="ignore"):
        z = A + log_eta
        z += log_prior[:, None]
        z -= z.max()
        np.exp(z, out=z)
        w = z.sum(axis=1)
        total = float(w.sum())
        np.divide(w, total, out=weights)
    return total


def linear_regrets(points, grad, theta, r):
    np.subtract(np.dot(grad, theta), points @ grad, out=r)
