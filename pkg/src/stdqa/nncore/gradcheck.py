"""Independent gradient verification by central finite differences."""

from __future__ import annotations

from .params import Parameter


def grad_check(loss_fn, params: list[Parameter], step: float = 1e-5) -> float:
    """Compare analytic gradients with (f(x+d) - f(x-d)) / 2d per coordinate.

    ``loss_fn(params)`` must return the scalar loss and leave the analytic
    gradient of that loss in each parameter's ``grad`` (zeroing first).
    Returns the maximum relative error, with |a - n| normalized by
    max(|a|, |n|, 1e-8).
    """
    loss_fn(params)
    analytic = [p.grad.copy() for p in params]
    max_err = 0.0
    for p, a in zip(params, analytic):
        flat = p.value.reshape(-1)
        a_flat = a.reshape(-1)
        for k in range(flat.size):
            orig = flat[k]
            flat[k] = orig + step
            f_plus = loss_fn(params)
            flat[k] = orig - step
            f_minus = loss_fn(params)
            flat[k] = orig
            numeric = (f_plus - f_minus) / (2.0 * step)
            denom = max(abs(a_flat[k]), abs(numeric), 1e-8)
            err = abs(a_flat[k] - numeric) / denom
            if err > max_err:
                max_err = err
    # restore gradients for the checked point
    loss_fn(params)
    return max_err
