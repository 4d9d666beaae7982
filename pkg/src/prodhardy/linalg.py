"""Small dense linear-algebra helpers."""
import numpy as np


class ConvergenceError(RuntimeError):
    pass


def power_iteration(apply, apply_adjoint, shape, *, tol=1e-6, max_iter=500,
                    seed=0, x0=None):
    """Largest singular value of a linear map given by its action and adjoint.

    Iterates x <- A^T A x / |A^T A x| and stops once the estimate |A x|
    changes by less than ``tol`` relative. ``shape`` is the input shape.
    """
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape) if x0 is None else np.array(x0, dtype=float)
    nx = np.linalg.norm(x)
    if nx == 0:
        return 0.0
    x /= nx
    est = 0.0
    for _ in range(max_iter):
        y = apply(x)
        new = float(np.linalg.norm(y))
        if new == 0.0:
            return 0.0
        if abs(new - est) <= tol * new:
            return new
        est = new
        x = apply_adjoint(y)
        x /= np.linalg.norm(x)
    raise ConvergenceError(f"power iteration did not converge in {max_iter} steps")


def matrix_norm2(A, **kw):
    """Spectral norm of an explicit matrix by power iteration."""
    A = np.asarray(A)
    if not A.any():
        return 0.0
    return power_iteration(lambda v: A @ v, lambda v: A.T @ v, A.shape[1], **kw)
