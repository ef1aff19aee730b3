"""Damped least squares (Levenberg-Marquardt) with box bounds."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionMismatch, NotConverged, SingularJacobian


@dataclass
class FitResult:
    model_id: str
    param_names: tuple
    params: np.ndarray
    covariance: np.ndarray
    chi2_reduced: float
    n_iterations: int
    converged: bool
    cost_history: list = field(default_factory=list)

    @property
    def stderr(self):
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))

    def as_dict(self):
        return dict(zip(self.param_names, map(float, self.params)))

    def to_json_dict(self):
        return {
            "model_id": self.model_id,
            "params": self.as_dict(),
            "stderr": dict(zip(self.param_names, map(float, self.stderr))),
            "covariance": self.covariance.tolist(),
            "chi2_reduced": float(self.chi2_reduced),
            "n_iterations": int(self.n_iterations),
            "converged": bool(self.converged),
        }


def lm_fit(model, x, y, sigma, p0, max_iter=200, xtol=1e-10, ftol=1e-10,
           absolute_sigma=True):
    """Minimize sum(((y - f(x; p)) / sigma)^2) from ``p0``.

    Parameters are internally divided by ``max(|p0|, 1e-300)`` (or 1 for zero
    entries) so that the isotropic damping term acts on comparable scales.
    Damping starts at 1e-3 * max(diag J^T J), is doubled on a rejected step and
    divided by 3 on an accepted one. Bounds are enforced by clamping; a
    parameter sitting on a bound whose gradient points outward is frozen for
    that iteration.

    Convergence requires both the relative step and the relative cost
    decrease to fall below ``xtol`` and ``ftol``; a rejected step that is
    already below ``xtol`` also terminates (no further progress possible).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    sigma = np.broadcast_to(np.asarray(sigma, dtype=float), y.shape).copy()
    p = np.asarray(p0, dtype=float).copy()
    if not (x.shape == y.shape == sigma.shape) or x.ndim != 1:
        raise DimensionMismatch(f"x{x.shape}, y{y.shape}, sigma{sigma.shape} must be equal 1-D")
    if p.shape != (model.n_params,):
        raise DimensionMismatch(f"expected {model.n_params} parameters, got {p.size}")
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    if not model.within_bounds(p):
        raise ValueError("p0 lies outside the model bounds")
    if x.size <= model.n_params:
        raise DimensionMismatch(f"{x.size} points cannot constrain {model.n_params} parameters")

    lower = np.asarray(model.lower, dtype=float)
    upper = np.asarray(model.upper, dtype=float)
    scale = np.where(p != 0, np.abs(p), 1.0)
    w = 1.0 / sigma

    def residual(pp):
        return (y - model(x, pp)) * w

    def jac_scaled(pp):
        return model.jacobian(x, pp) * w[:, None] * scale[None, :]

    r = residual(p)
    cost = float(r @ r)
    J = jac_scaled(p)
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[-1] <= 1e-13 * sv[0] or not np.all(np.isfinite(sv)):
        raise SingularJacobian("Jacobian is rank deficient at the starting point")

    A = J.T @ J
    lam = 1e-3 * float(np.max(np.diag(A)))
    history = [cost]
    converged = cost == 0.0
    it = 0
    while not converged and it < max_iter:
        it += 1
        g = J.T @ r
        at_lo = (p <= lower) & (g < 0)
        at_hi = (p >= upper) & (g > 0)
        free = ~(at_lo | at_hi)
        step = np.zeros_like(p)
        if np.any(free):
            Af = A[np.ix_(free, free)] + lam * np.eye(int(free.sum()))
            try:
                step[free] = np.linalg.solve(Af, g[free])
            except np.linalg.LinAlgError:
                step[free] = np.linalg.lstsq(Af, g[free], rcond=None)[0]
        trial = np.clip(p + step * scale, lower, upper)
        du = (trial - p) / scale
        rel_step = np.linalg.norm(du) / (np.linalg.norm(p / scale) + xtol)
        r_trial = residual(trial)
        cost_trial = float(r_trial @ r_trial)
        if np.isfinite(cost_trial) and cost_trial <= cost:
            rel_drop = (cost - cost_trial) / cost if cost > 0 else 0.0
            p, r, cost = trial, r_trial, cost_trial
            history.append(cost)
            J = jac_scaled(p)
            A = J.T @ J
            lam /= 3.0
            if cost == 0.0 or (rel_step < xtol and rel_drop < ftol):
                converged = True
        else:
            lam *= 2.0
            if rel_step < xtol:
                converged = True

    dof = x.size - model.n_params
    chi2_red = cost / dof
    Jp = model.jacobian(x, p) * w[:, None]
    try:
        cov = np.linalg.inv(Jp.T @ Jp)
    except np.linalg.LinAlgError:
        cov = np.linalg.pinv(Jp.T @ Jp)
    if not absolute_sigma:
        cov = cov * chi2_red
    cov = 0.5 * (cov + cov.T)
    result = FitResult(model.model_id, model.param_names, p, cov, chi2_red, it, converged,
                       history)
    if not converged:
        raise NotConverged(f"no convergence within {max_iter} iterations", result)
    return result
