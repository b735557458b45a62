"""Poisson quasi-likelihood evaluation, maximization and sandwich covariance.

The quasi-log-likelihood of a mean path is sum_t (Y_t log lam_t - lam_t); it
is maximized over the constrained parameter space of a model (non-negative
coefficients, intercept bounded below, coefficient sums bounded away from 1)
by deterministic multi-start SLSQP with analytic gradients, followed by a
projected Fisher-scoring polish that drives the projected-gradient norm of the
per-observation objective below ``tol_grad``.  Tolerances apply to the mean
(per-observation) objective.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import linalg as spla
from scipy.optimize import minimize

from .errors import DomainError, OptimFailure, SingularInformation
from .model import (
    C_LOWER,
    EPS_MARGIN,
    ModelSpec,
    ParamVector,
    as_count_series,
    build_regressors,
    constraint_halfspaces,
    lambda_path,
    mean_path_layout,
)

__all__ = ["FitOptions", "FitResult", "SandwichInfo", "quasi_loglik", "quasi_score", "fit", "sandwich"]

_WALL = 1e6  # objective wall used for transiently infeasible feedback sums


@dataclass(frozen=True)
class FitOptions:
    """Optimizer controls; tolerances are on the per-observation objective."""

    n_starts: int = 5
    tol_grad: float = 1e-6
    tol_obj: float = 1e-9
    max_iter: int = 500
    alpha0_cap: Optional[float] = None
    extra_starts: tuple = ()

    def __post_init__(self):
        if self.n_starts < 1:
            raise DomainError("n_starts must be >= 1")


@dataclass(frozen=True)
class SandwichInfo:
    """Robust covariance pieces, embedded to the full layout dimension."""

    J_hat: np.ndarray
    I_hat: np.ndarray
    Sigma_hat: np.ndarray
    std_errors: np.ndarray


@dataclass(frozen=True)
class FitResult:
    spec: ModelSpec
    theta_hat: ParamVector
    loglik: float
    grad_norm: float
    iterations: int
    converged: bool
    n_used: int
    flags: tuple[str, ...] = ()
    sandwich: Optional[SandwichInfo] = None

    def to_json(self) -> dict:
        out = {
            "theta": [float(v) for v in self.theta_hat.to_array()],
            "loglik": float(self.loglik),
            "converged": bool(self.converged),
            "grad_norm": float(self.grad_norm),
        }
        if self.sandwich is not None:
            out["std_errors"] = [float(v) for v in self.sandwich.std_errors]
        return out


def quasi_loglik(spec: ModelSpec, theta: ParamVector, y) -> float:
    """sum_t (Y_t log lam_t - lam_t) along the truncated mean recursion."""
    arr = as_count_series(y)
    path = lambda_path(spec, theta, arr)
    lam = path.lambdas
    return float(arr @ np.log(lam) - lam.sum())


def quasi_score(spec: ModelSpec, theta: ParamVector, y) -> np.ndarray:
    """Gradient sum_t (Y_t/lam_t - 1) d lam_t/d theta, zero outside the active set."""
    arr = as_count_series(y)
    path = lambda_path(spec, theta, arr, want_grads=True)
    w = arr / path.lambdas - 1.0
    score = path.grads.T @ w
    inactive = sorted(frozenset(range(1, spec.d)) - spec.active)
    score[inactive] = 0.0
    return score


# ---------------------------------------------------------------------------
# Constrained maximization
# ---------------------------------------------------------------------------

class _Problem:
    """One model/series pair prepared for optimization over the free coordinates."""

    def __init__(self, spec: ModelSpec, y: np.ndarray, opts: FitOptions):
        self.spec = spec
        self.y = y
        self.n = len(y)
        self.reg = build_regressors(spec.form, y)
        self.free = [0] + sorted(spec.active)
        self.nf = len(self.free)
        self.fb_free = [i for i, li in enumerate(self.free) if li in self.reg.fb_idx]
        ybar = float(y.mean())
        if opts.alpha0_cap is not None:
            a0_cap = opts.alpha0_cap
        elif spec.family.kind == "bernoulli":
            a0_cap = 1.0 - EPS_MARGIN
        else:
            a0_cap = max(5.0, 10.0 * (ybar + 1.0))
        self.lb = np.zeros(self.nf)
        self.lb[0] = C_LOWER
        self.ub = np.full(self.nf, 1.0 - EPS_MARGIN)
        self.ub[0] = a0_cap
        self.halfspaces = [
            (a[self.free], cap) for a, cap in constraint_halfspaces(spec)
        ]
        self.ybar = ybar

    def embed(self, z: np.ndarray) -> np.ndarray:
        layout = np.zeros(self.reg.d)
        layout[self.free] = z
        return layout

    def full_eval(self, z: np.ndarray):
        """Mean loglik, its gradient on free coords, and the path pieces."""
        fb_sum = z[self.fb_free].sum() if self.fb_free else 0.0
        if fb_sum >= 1.0 - 0.5 * EPS_MARGIN:
            viol = fb_sum - (1.0 - EPS_MARGIN)
            g = np.zeros(self.nf)
            g[self.fb_free] = -_WALL
            return -_WALL * (1.0 + viol), g, None, None
        lam, G, _ = mean_path_layout(
            self.reg, self.embed(z), self.spec.family.kind, True
        )
        lam = np.maximum(lam, 1e-12)
        ll = float(self.y @ np.log(lam) - lam.sum()) / self.n
        w = self.y / lam - 1.0
        grad = (G.T @ w)[self.free] / self.n
        return ll, grad, lam, G

    def neg_obj(self, z: np.ndarray):
        ll, g, _, _ = self.full_eval(z)
        return -ll, -g

    def project(self, x: np.ndarray) -> np.ndarray:
        """Projection onto the box intersected with the constraint half-spaces."""
        z = np.clip(x, self.lb, self.ub)
        for _ in range(8):
            moved = False
            for a, cap in self.halfspaces:
                if a @ z > cap + 1e-15:
                    z = self._project_halfspace_box(z, a, cap)
                    moved = True
            if not moved:
                return z
        return z

    def _project_halfspace_box(self, x, a, cap):
        # clip(x - mu*a) meets a'z = cap for some mu >= 0; bisect on mu.
        lo, hi = 0.0, 1.0
        while a @ np.clip(x - hi * a, self.lb, self.ub) > cap and hi < 1e8:
            hi *= 2.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if a @ np.clip(x - mid * a, self.lb, self.ub) > cap:
                lo = mid
            else:
                hi = mid
        return np.clip(x - hi * a, self.lb, self.ub)

    def projected_gradient(self, z: np.ndarray, grad: np.ndarray) -> np.ndarray:
        t = 1e-6
        return (self.project(z + t * grad) - z) / t

    def slsqp_constraints(self):
        cons = []
        for a, cap in self.halfspaces:
            cons.append(
                {
                    "type": "ineq",
                    "fun": (lambda zz, a=a, cap=cap: cap - a @ zz),
                    "jac": (lambda zz, a=a: -a),
                }
            )
        return cons


def _rd_sequence(k: int, dim: int) -> np.ndarray:
    # R_d quasi-random sequence (generalized golden ratio).
    phi = 2.0
    for _ in range(32):
        phi = (1.0 + phi) ** (1.0 / (dim + 1))
    alpha = np.array([phi ** -(j + 1) for j in range(dim)])
    return (0.5 + k * alpha) % 1.0


def _starting_points(prob: _Problem, opts: FitOptions) -> list[np.ndarray]:
    nf, dim = prob.nf, prob.nf - 1
    starts = []
    # method-of-moments style point: stationary mean roughly matches ybar
    z = np.empty(nf)
    z[0] = max(prob.ybar * (1.0 - 0.1 * dim), 0.0)
    z[1:] = 0.1
    starts.append(prob.project(z))
    scale = max(prob.ybar, 0.3)
    lo0 = max(C_LOWER, 0.1 * scale)
    hi0 = min(max(2.0 * scale, 1.0), prob.ub[0])
    for k in range(1, opts.n_starts):
        u = _rd_sequence(k, nf + 1)
        z = np.empty(nf)
        z[0] = lo0 * (hi0 / max(lo0, 1e-12)) ** u[0]
        if dim:
            total = 0.10 + 0.75 * u[1]
            w = u[2 : 2 + dim] + 0.05
            z[1:] = total * w / w.sum()
        starts.append(prob.project(z))
    for extra in opts.extra_starts:
        arr = np.asarray(extra, dtype=float)
        if arr.shape == (prob.reg.d,):
            arr = arr[prob.free]
        if arr.shape == (nf,):
            starts.append(prob.project(arr))
    return starts


def _fisher_polish(prob: _Problem, z: np.ndarray, opts: FitOptions):
    """Projected Fisher-scoring steps until the projected gradient is small."""
    ll, g, lam, G = prob.full_eval(z)
    iters = 0
    for _ in range(60):
        pg = prob.projected_gradient(z, g)
        if np.linalg.norm(pg) <= opts.tol_grad or lam is None:
            break
        Gf = G[:, prob.free]
        Jbar = (Gf.T @ (Gf / lam[:, None])) / prob.n
        try:
            direction = np.linalg.solve(Jbar + 1e-10 * np.eye(prob.nf), g)
        except np.linalg.LinAlgError:
            direction = g
        improved = False
        for step in (1.0, 0.5, 0.25, 0.1, 0.03, 0.01):
            z_new = prob.project(z + step * direction)
            ll_new, g_new, lam_new, G_new = prob.full_eval(z_new)
            if ll_new > ll + 1e-14:
                z, ll, g, lam, G = z_new, ll_new, g_new, lam_new, G_new
                improved = True
                break
        iters += 1
        if not improved:
            break
    pg = prob.projected_gradient(z, g)
    return z, ll, float(np.linalg.norm(pg)), iters


def fit(spec: ModelSpec, y, opts: FitOptions = FitOptions()) -> FitResult:
    """Maximize the quasi-log-likelihood over the model's constrained space.

    Deterministic multi-start (method-of-moments point, fixed low-discrepancy
    points, plus a zero-feedback cascade start for feedback models and any
    ``opts.extra_starts``); the best local maximizer is polished and returned
    with diagnostics.  Raises OptimFailure when no start yields a finite
    maximizer.
    """
    arr = as_count_series(y)
    n = len(arr)
    if n < spec.dim + 1:
        raise DomainError(f"need at least {spec.dim + 1} observations to fit {spec.label}")
    flags: list[str] = []
    if spec.dim >= 1 and arr.min() == arr.max():
        flags.append("degenerate_data")

    prob = _Problem(spec, arr, opts)
    fb_active = spec.active & frozenset(prob.reg.fb_idx)
    if not fb_active:
        # no free feedback coefficient: the mean is linear in theta, the
        # objective concave, and every start reaches the same maximizer
        opts = dataclasses.replace(opts, n_starts=min(opts.n_starts, 2))
    starts = _starting_points(prob, opts)

    # cascade start: optimum of the same model with feedback pinned to zero
    if fb_active:
        reduced = ModelSpec(spec.family, spec.form, spec.active - fb_active)
        sub = fit(reduced, arr, dataclasses.replace(opts, extra_starts=(), n_starts=1))
        starts.append(prob.project(sub.theta_hat.to_array()[prob.free]))

    cons = prob.slsqp_constraints()
    bounds = list(zip(prob.lb, prob.ub))
    results = []
    with warnings.catch_warnings():
        # scipy warns when SLSQP clips a trial point back into the bounds
        warnings.filterwarnings(
            "ignore", message="Values in x were outside bounds", category=RuntimeWarning
        )
        for idx, z0 in enumerate(starts):
            res = minimize(
                prob.neg_obj,
                z0,
                jac=True,
                method="SLSQP",
                bounds=bounds,
                constraints=cons,
                options={"maxiter": opts.max_iter, "ftol": opts.tol_obj},
            )
            if np.isfinite(res.fun):
                results.append((-res.fun, -idx, res))
    if not results:
        raise OptimFailure(f"no optimizer start converged for {spec.label}")

    _, _, best = max(results, key=lambda t: (t[0], t[1]))
    z, ll_mean, grad_norm, polish_iters = _fisher_polish(prob, prob.project(best.x), opts)

    theta_hat = ParamVector.from_array(spec.form, prob.embed(z))
    _, _, was_clamped = mean_path_layout(prob.reg, prob.embed(z), spec.family.kind, False)
    if was_clamped:
        flags.append("clamped")
    return FitResult(
        spec=spec,
        theta_hat=theta_hat,
        loglik=ll_mean * n,
        grad_norm=grad_norm,
        iterations=int(best.nit) + polish_iters,
        converged=grad_norm <= opts.tol_grad,
        n_used=n,
        flags=tuple(flags),
    )


# ---------------------------------------------------------------------------
# Sandwich covariance
# ---------------------------------------------------------------------------

def sandwich(spec: ModelSpec, fit_result: FitResult, y) -> FitResult:
    """Attach the robust covariance J^-1 I J^-1 and standard errors to a fit.

    J and I are computed on the free coordinates at theta_hat and embedded
    back into the full layout with zero rows/columns for inactive ones.
    Raises SingularInformation when J is numerically singular.
    """
    if not fit_result.converged:
        raise DomainError("sandwich requires a converged fit")
    arr = as_count_series(y)
    n = len(arr)
    path = lambda_path(spec, fit_result.theta_hat, arr, want_grads=True)
    lam = path.lambdas
    free = [0] + sorted(spec.active)
    Gf = path.grads[:, free]
    J = (Gf.T @ (Gf / lam[:, None])) / n
    res2 = (arr - lam) ** 2
    I = (Gf.T @ (Gf * (res2 / lam**2)[:, None])) / n
    J = 0.5 * (J + J.T)
    I = 0.5 * (I + I.T)
    if not np.all(np.isfinite(J)) or np.linalg.cond(J) > 1e12:
        raise SingularInformation(
            f"information matrix for {spec.label} has condition number > 1e12"
        )
    flags = fit_result.flags
    try:
        cf = spla.cho_factor(J)
    except np.linalg.LinAlgError:
        cf = spla.cho_factor(J + 1e-10 * np.eye(len(free)))
        flags = flags + ("jittered",)
    Jinv = spla.cho_solve(cf, np.eye(len(free)))
    Sigma = Jinv @ I @ Jinv
    Sigma = 0.5 * (Sigma + Sigma.T)
    se = np.sqrt(np.maximum(np.diag(Sigma), 0.0) / n)

    d = spec.d
    ix = np.ix_(free, free)
    J_full = np.zeros((d, d))
    I_full = np.zeros((d, d))
    S_full = np.zeros((d, d))
    se_full = np.zeros(d)
    J_full[ix], I_full[ix], S_full[ix], se_full[free] = J, I, Sigma, se
    info = SandwichInfo(J_full, I_full, S_full, se_full)
    return dataclasses.replace(fit_result, sandwich=info, flags=flags)
