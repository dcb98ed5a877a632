"""Shared least-squares machinery and the uniform fit report."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import least_squares

MAX_ITERATIONS = 200
XTOL = 1e-10


@dataclass
class FitResult:
    """Estimated parameters, their standard errors and fit diagnostics.

    ``stderr`` is empty unless ``converged``. ``derived`` holds quantities
    computed from the fitted parameters (e.g. Q_int), with their standard
    errors under ``derived_stderr``.
    """

    params: dict
    stderr: dict
    residual_norm: float
    converged: bool
    iterations: int = 0
    message: str = ""
    derived: dict = field(default_factory=dict)
    derived_stderr: dict = field(default_factory=dict)
    covariance: np.ndarray | None = field(default=None, repr=False)

    def __getitem__(self, name):
        if name in self.params:
            return self.params[name]
        return self.derived[name]

    def error(self, name):
        if name in self.stderr:
            return self.stderr[name]
        return self.derived_stderr.get(name)

    def to_dict(self) -> dict:
        return {
            "params": {**_clean(self.params), **_clean(self.derived)},
            "stderr": {**_clean(self.stderr), **_clean(self.derived_stderr)},
            "residual_norm": _num(self.residual_norm),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "message": self.message,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False) + "\n"

    def save(self, path):
        Path(path).write_text(self.to_json())

    @classmethod
    def from_dict(cls, doc) -> "FitResult":
        return cls(params=dict(doc["params"]), stderr=dict(doc.get("stderr", {})),
                   residual_norm=doc["residual_norm"], converged=doc["converged"],
                   iterations=doc.get("iterations", 0), message=doc.get("message", ""))


def _num(x):
    x = float(x)
    return x if math.isfinite(x) else None


def _clean(d):
    return {k: _num(v) for k, v in d.items()}


def not_converged(names, message, residual_norm=math.nan, params=None) -> FitResult:
    params = params or {n: math.nan for n in names}
    return FitResult(params=dict(params), stderr={}, residual_norm=residual_norm,
                     converged=False, message=message)


def covariance(jac, residuals, n_params):
    """Jacobian-based covariance scaled by the reduced chi-square.

    Returns None when J^T J is numerically singular.
    """
    jac = np.asarray(jac, dtype=float)
    dof = max(jac.shape[0] - n_params, 1)
    s2 = float(np.sum(np.asarray(residuals) ** 2)) / dof
    # scale columns before inverting; parameters differ by many decades
    norms = np.linalg.norm(jac, axis=0)
    if np.any(norms == 0) or not np.all(np.isfinite(jac)):
        return None
    js = jac / norms
    _, sv, vt = np.linalg.svd(js, full_matrices=False)
    if sv[-1] <= sv[0] * 1e-12:
        return None
    inv = (vt.T / sv**2) @ vt
    return s2 * inv / np.outer(norms, norms)


def levenberg_marquardt(residual, x0, names, *, residual_threshold=math.inf,
                        x_scale="jac", diff_step=None, jac="2-point") -> FitResult:
    """Minimize ||residual(x)||^2 with MINPACK's Levenberg-Marquardt.

    Convergence requires optimizer success, a finite non-singular
    covariance and a residual norm at or below ``residual_threshold``.
    """
    n = len(x0)
    try:
        sol = least_squares(residual, np.asarray(x0, dtype=float), method="lm",
                            jac=jac, xtol=XTOL, ftol=XTOL, gtol=1e-15,
                            max_nfev=MAX_ITERATIONS * (n + 1), x_scale=x_scale,
                            diff_step=diff_step)
    except (ValueError, np.linalg.LinAlgError) as exc:
        return not_converged(names, f"optimizer failed: {exc}")
    r = sol.fun
    rnorm = float(np.linalg.norm(r))
    params = dict(zip(names, map(float, sol.x)))
    cov = covariance(sol.jac, r, n) if np.all(np.isfinite(sol.x)) else None
    iterations = int(math.ceil(sol.nfev / (n + 1)))
    msg = sol.message
    ok = bool(sol.success) and math.isfinite(rnorm) and cov is not None
    if cov is None:
        msg = "singular Jacobian at optimum; parameters not identifiable"
    if rnorm > residual_threshold:
        ok = False
        msg = f"residual norm {rnorm:.3g} above threshold {residual_threshold:.3g}"
    stderr = dict(zip(names, map(float, np.sqrt(np.abs(np.diag(cov)))))) if ok else {}
    return FitResult(params, stderr, rnorm, ok, iterations, msg,
                     covariance=cov if ok else None)


def predicted_stderr(model, params, x, sigma, names=None, step=1e-7):
    """Standard errors a fit would report for noise ``sigma`` on exact data.

    Linearized: sigma * sqrt(diag((J^T J)^-1)) with J the model Jacobian
    at ``params`` by central differences. A dict of params gives a dict back.
    """
    if isinstance(params, dict):
        names = names or list(params)
        params = list(params.values())
    p = np.asarray(params, dtype=float)
    cols = []
    for i in range(p.size):
        h = step * max(abs(p[i]), 1.0)
        up, dn = p.copy(), p.copy()
        up[i] += h
        dn[i] -= h
        cols.append((model(x, *up) - model(x, *dn)) / (2 * h))
    J = np.column_stack(cols)
    se = sigma * np.sqrt(np.diag(np.linalg.inv(J.T @ J)))
    return dict(zip(names, se)) if names else se
