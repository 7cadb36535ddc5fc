"""Finite-difference gradient oracle.

Central differences over every scalar parameter, compared against the
analytic gradients produced by one backward pass. Meant to run on
float64 parameters; float32 rounding drowns the signal.
"""

from __future__ import annotations

import numpy as np

from .tensor import backward


def grad_check(f, params, h=1e-3):
    """Max relative error between analytic and central-difference gradients.

    ``f(params)`` must return a scalar Tensor rebuilt from the current
    parameter values on every call. Relative error per scalar is
    |analytic - cd| / max(|analytic|, |cd|, 1e-8).
    """
    for p in params:
        if p.data.dtype != np.float64:
            raise ValueError("grad_check requires float64 parameters")
        p.grad = None

    loss = f(params)
    backward(loss)
    analytic = [p.grad.copy() if p.grad is not None else np.zeros_like(p.data) for p in params]

    worst = 0.0
    for p, ga in zip(params, analytic):
        flat = p.data.reshape(-1)
        gflat = ga.reshape(-1)
        for i in range(flat.size):
            saved = flat[i]
            flat[i] = saved + h
            up = f(params).item()
            flat[i] = saved - h
            down = f(params).item()
            flat[i] = saved
            cd = (up - down) / (2.0 * h)
            err = abs(gflat[i] - cd) / max(abs(gflat[i]), abs(cd), 1e-8)
            if err > worst:
                worst = err
    return worst
