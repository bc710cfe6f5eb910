"""Central finite differences used as the gradient oracle in tests."""

import numpy as np

STEP = 1e-5


def numeric_grad(f, param: np.ndarray, after=lambda: None, step: float = STEP) -> np.ndarray:
    """d f / d param by central differences, perturbing ``param`` in place."""
    grad = np.zeros_like(param)
    flat = param.reshape(-1)
    g = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + step
        after()
        hi = f()
        flat[i] = orig - step
        after()
        lo = f()
        flat[i] = orig
        after()
        g[i] = (hi - lo) / (2 * step)
    return grad


def rel_error(analytic, numeric) -> float:
    """``||analytic - numeric|| / max(||analytic||, ||numeric||)`` (0 when both vanish)."""
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    if denom == 0.0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denom)
