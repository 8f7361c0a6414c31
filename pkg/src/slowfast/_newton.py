"""Small damped Newton solver shared by the slow-manifold and reduction code."""

import numpy as np

from .errors import NewtonDivergence, SingularJacobian


def newton(fun, z0, tol=1e-12, maxiter=50, max_halvings=8, singular_tol=1e-14):
    """Solve ``F(z) = 0`` where ``fun(z) -> (F, J)``.

    Full steps are tried first; if the residual norm does not decrease the
    step is halved up to ``max_halvings`` times before giving up.  Returns
    ``(z, residual_norm, iterations)``.
    """
    z = np.array(z0, dtype=float)
    f, jac = fun(z)
    norm = np.max(np.abs(f))
    for it in range(maxiter):
        if norm < tol:
            return z, norm, it
        scale = max(1.0, np.max(np.abs(jac)))
        try:
            if abs(np.linalg.det(jac / scale)) < singular_tol:
                raise np.linalg.LinAlgError
            dz = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            raise SingularJacobian(f"singular Jacobian at {z}") from None
        lam = 1.0
        for _ in range(max_halvings + 1):
            trial = z - lam * dz
            f_new, jac_new = fun(trial)
            norm_new = np.max(np.abs(f_new))
            if np.isfinite(norm_new) and norm_new < norm:
                break
            lam *= 0.5
        else:
            # roundoff floor: the full step is already at machine precision
            if np.max(np.abs(dz)) <= 1e-15 * max(1.0, np.max(np.abs(z))):
                return z, norm, it
            raise NewtonDivergence(f"residual {norm:.3e} not decreasing at {z}")
        z, f, jac, norm = trial, f_new, jac_new, norm_new
    if norm < tol:
        return z, norm, maxiter
    raise NewtonDivergence(f"no convergence in {maxiter} iterations (residual {norm:.3e})")
