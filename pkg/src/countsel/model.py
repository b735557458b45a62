"""Model specifications, parameter spaces and the conditional-mean recursion.

Two dynamic forms are supported for the conditional mean of a count series:

* ``Ingarch(p, q)``:  lam_t = a0 + sum_i a_i Y_{t-i} + sum_j b_j lam_{t-j}
* ``Knot(knots)``:    lam_t = a0 + a1 Y_{t-1} + a2 lam_{t-1}
                              + sum_k c_k (Y_{t-1} - xi_k)^+

Both are linear in the parameter vector given the data, with an autoregressive
feedback part, so the mean path and its parameter derivatives are computed by
the same linear-filter machinery.  Unobserved pre-sample counts are taken to be
zero and pre-sample means are set to the zero-data fixed point
a0 / (1 - sum of feedback coefficients).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np
from scipy.signal import lfilter, lfiltic

from .errors import ConstraintViolation, ContractionViolation, DomainError

# Numeric guards for the open constraints of the parameter space.
C_LOWER = 1e-4        # lower bound on the intercept and on every mean value
EPS_MARGIN = 1e-6     # margin kept between coefficient sums and 1

__all__ = [
    "C_LOWER",
    "EPS_MARGIN",
    "EmissionFamily",
    "Ingarch",
    "Knot",
    "DynamicForm",
    "ModelSpec",
    "ParamVector",
    "MeanPath",
    "ValidatedPair",
    "validate",
    "lambda_path",
    "knot_basis",
    "moment_condition_nb",
    "contraction_pair",
    "stationarity_margin",
    "as_count_series",
]


@dataclass(frozen=True)
class EmissionFamily:
    """Conditional distribution tag: Poisson, NegBinomial(r) or Bernoulli."""

    kind: str
    r: Optional[int] = None

    _KINDS = ("poisson", "negbinomial", "bernoulli")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise DomainError(f"unknown emission family {self.kind!r}")
        if self.kind == "negbinomial":
            if self.r is None or int(self.r) != self.r or self.r < 1:
                raise DomainError("NegBinomial requires an integer r >= 1")
            object.__setattr__(self, "r", int(self.r))
        elif self.r is not None:
            raise DomainError(f"family {self.kind!r} takes no r parameter")

    @classmethod
    def poisson(cls) -> "EmissionFamily":
        return cls("poisson")

    @classmethod
    def negbinomial(cls, r: int) -> "EmissionFamily":
        return cls("negbinomial", r)

    @classmethod
    def bernoulli(cls) -> "EmissionFamily":
        return cls("bernoulli")

    @property
    def label(self) -> str:
        if self.kind == "negbinomial":
            return f"negbinomial({self.r})"
        return self.kind


@dataclass(frozen=True)
class Ingarch:
    """INGARCH(p, q) dynamic form: p count lags, q mean-feedback lags."""

    p: int
    q: int

    def __post_init__(self):
        if self.p < 0 or self.q < 0 or int(self.p) != self.p or int(self.q) != self.q:
            raise DomainError("Ingarch orders must be non-negative integers")

    @property
    def d(self) -> int:
        return 1 + self.p + self.q

    @property
    def label(self) -> str:
        return f"ingarch({self.p},{self.q})"


@dataclass(frozen=True)
class Knot:
    """Piecewise-linear form with integer knots, one count lag and optional feedback."""

    knots: tuple[int, ...]
    with_feedback: bool = True

    def __post_init__(self):
        knots = tuple(int(k) for k in self.knots)
        if any(k < 0 for k in knots):
            raise DomainError("knots must be non-negative integers")
        if any(a >= b for a, b in zip(knots, knots[1:])):
            raise DomainError("knots must be strictly increasing")
        object.__setattr__(self, "knots", knots)

    @property
    def K(self) -> int:
        return len(self.knots)

    @property
    def d(self) -> int:
        return 2 + (1 if self.with_feedback else 0) + self.K

    @property
    def label(self) -> str:
        fb = "fb" if self.with_feedback else "nofb"
        return f"knot[{','.join(map(str, self.knots))};{fb}]"


DynamicForm = Union[Ingarch, Knot]


@dataclass(frozen=True)
class ModelSpec:
    """A member of the model collection: emission family, dynamic form, active set.

    ``active`` indexes the free non-intercept coefficients in the fixed layout
    (intercept, count-lag coefficients, feedback coefficients, knot
    coefficients).  Coefficients outside ``active`` are structurally zero.  The
    intercept (index 0) is always free and never part of ``active``.
    """

    family: EmissionFamily
    form: DynamicForm
    active: frozenset[int] = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        d = self.form.d
        if self.active is None:
            object.__setattr__(self, "active", frozenset(range(1, d)))
        else:
            active = frozenset(int(i) for i in self.active)
            if not active <= frozenset(range(1, d)):
                raise DomainError("active set must be a subset of {1..d-1}")
            object.__setattr__(self, "active", active)

    @property
    def d(self) -> int:
        return self.form.d

    @property
    def dim(self) -> int:
        """Model dimension |m|: the number of free non-intercept coefficients."""
        return len(self.active)

    @property
    def label(self) -> str:
        return f"{self.family.label}-{self.form.label}"

    def descriptor(self) -> dict:
        """JSON-stable description of the model."""
        out: dict = {"family": self.family.label}
        if isinstance(self.form, Ingarch):
            out.update(form="ingarch", p=self.form.p, q=self.form.q)
        else:
            out.update(
                form="knot",
                knots=list(self.form.knots),
                feedback=self.form.with_feedback,
            )
        if self.active != frozenset(range(1, self.d)):
            out["active"] = sorted(self.active)
        return out

    def order_key(self) -> tuple:
        """Deterministic ordering key for tie-breaks: lexicographic (p, q) or knot set."""
        if isinstance(self.form, Ingarch):
            return (0, self.form.p, self.form.q, tuple(sorted(self.active)))
        return (1, self.form.K, self.form.knots, tuple(sorted(self.active)))


@dataclass(frozen=True)
class ParamVector:
    """Parameters in the fixed layout: intercept, lag, feedback, knot coefficients."""

    alpha0: float
    alphas: tuple[float, ...] = ()
    betas: tuple[float, ...] = ()
    knot_coefs: tuple[float, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "alpha0", float(self.alpha0))
        object.__setattr__(self, "alphas", tuple(float(a) for a in self.alphas))
        object.__setattr__(self, "betas", tuple(float(b) for b in self.betas))
        object.__setattr__(self, "knot_coefs", tuple(float(c) for c in self.knot_coefs))

    def to_array(self) -> np.ndarray:
        return np.array(
            (self.alpha0,) + self.alphas + self.betas + self.knot_coefs, dtype=float
        )

    @classmethod
    def from_array(cls, form: DynamicForm, values) -> "ParamVector":
        values = np.asarray(values, dtype=float)
        if values.shape != (form.d,):
            raise DomainError(
                f"expected {form.d} parameters for {form.label}, got {values.size}"
            )
        if isinstance(form, Ingarch):
            p, q = form.p, form.q
            return cls(values[0], tuple(values[1 : 1 + p]), tuple(values[1 + p :]))
        nfb = 1 if form.with_feedback else 0
        return cls(
            values[0],
            (values[1],),
            tuple(values[2 : 2 + nfb]),
            tuple(values[2 + nfb :]),
        )

    @property
    def nonintercept_sum(self) -> float:
        return sum(self.alphas) + sum(self.betas) + sum(self.knot_coefs)


@dataclass(frozen=True)
class MeanPath:
    """Conditional-mean path lam_1..lam_n with optional parameter gradients."""

    lambdas: np.ndarray
    grads: Optional[np.ndarray] = None
    clamped: bool = False

    def __post_init__(self):
        self.lambdas.flags.writeable = False
        if self.grads is not None:
            self.grads.flags.writeable = False


@dataclass(frozen=True)
class ValidatedPair:
    spec: ModelSpec
    theta: ParamVector


def knot_basis(y: float, xi: float) -> float:
    """Positive-part basis (y - xi)^+."""
    return max(float(y) - float(xi), 0.0)


def stationarity_margin(theta: ParamVector) -> float:
    """1 minus the sum of all non-intercept coefficients; positive iff stationary."""
    return 1.0 - theta.nonintercept_sum


def contraction_pair(theta: ParamVector) -> tuple[float, float]:
    """Lipschitz pair (a, b): a multiplies |y - y'|, b multiplies |lam - lam'|.

    For the knot form a = a1 + sum of knot coefficients and b is the feedback
    coefficient; for INGARCH(1,1) it reduces to (alpha1, beta1).
    """
    return (sum(theta.alphas) + sum(theta.knot_coefs), sum(theta.betas))


def moment_condition_nb(a: float, b: float, r: int) -> bool:
    """Second-moment sufficient condition (a+b)^2 + a^2/r < 1 for the NB model.

    Requires the contraction condition a + b < 1; raises ContractionViolation
    otherwise.
    """
    if a < 0 or b < 0:
        raise DomainError("contraction coefficients must be non-negative")
    if int(r) != r or r < 1:
        raise DomainError("r must be a positive integer")
    if a + b >= 1:
        raise ContractionViolation(f"a + b = {a + b} >= 1")
    return (a + b) ** 2 + a * a / r < 1.0


def as_count_series(y) -> np.ndarray:
    """Coerce to a 1-d array of non-negative integers (returned as float64)."""
    arr = np.asarray(y, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise DomainError("a count series must be a non-empty 1-d sequence")
    if not np.all(np.isfinite(arr)) or np.any(arr < 0) or np.any(arr != np.floor(arr)):
        raise DomainError("count series values must be non-negative integers")
    return arr


# ---------------------------------------------------------------------------
# Layout and regressors
# ---------------------------------------------------------------------------

def _check_shape(form: DynamicForm, theta: ParamVector) -> None:
    if isinstance(form, Ingarch):
        ok = (
            len(theta.alphas) == form.p
            and len(theta.betas) == form.q
            and len(theta.knot_coefs) == 0
        )
    else:
        ok = (
            len(theta.alphas) == 1
            and len(theta.betas) == (1 if form.with_feedback else 0)
            and len(theta.knot_coefs) == form.K
        )
    if not ok:
        raise ConstraintViolation(
            "shape", f"parameter layout does not match form {form.label}"
        )


@dataclass(frozen=True)
class _Regressors:
    """Data-only part of the recursion for one (form, series) pair.

    ``X`` holds the non-feedback regressors; column j belongs to layout index
    ``col_idx[j]``.  ``fb_idx`` are the layout indices of the feedback
    coefficients (in lag order 1..q).  ``x_worst`` is the value of each X
    column when every count equals 1 (used for the Bernoulli mean bound).
    """

    X: np.ndarray
    col_idx: tuple[int, ...]
    fb_idx: tuple[int, ...]
    x_worst: np.ndarray
    d: int


def _shift(y: np.ndarray, lag: int, fill: float = 0.0) -> np.ndarray:
    out = np.full(y.shape, fill)
    if lag < len(y):
        out[lag:] = y[: len(y) - lag]
    return out


def build_regressors(form: DynamicForm, y: np.ndarray) -> _Regressors:
    n = len(y)
    if isinstance(form, Ingarch):
        cols = [np.ones(n)] + [_shift(y, i) for i in range(1, form.p + 1)]
        col_idx = tuple(range(form.p + 1))
        fb_idx = tuple(range(form.p + 1, form.d))
        x_worst = np.ones(form.p + 1)
    else:
        yprev = _shift(y, 1)
        cols = [np.ones(n), yprev]
        cols += [np.maximum(yprev - xi, 0.0) for xi in form.knots]
        nfb = 1 if form.with_feedback else 0
        # layout: intercept 0, lag 1, feedback 2 (if any), knots afterwards
        col_idx = (0, 1) + tuple(2 + nfb + k for k in range(form.K))
        fb_idx = (2,) if form.with_feedback else ()
        x_worst = np.array([1.0, 1.0] + [max(1.0 - xi, 0.0) for xi in form.knots])
    return _Regressors(np.column_stack(cols), col_idx, fb_idx, x_worst, form.d)


def constraint_halfspaces(spec: ModelSpec) -> list[tuple[np.ndarray, float]]:
    """Linear constraints a'theta <= cap implied by the parameter space.

    Always contains the stationarity constraint (sum of non-intercept
    coefficients <= 1 - EPS_MARGIN); for the Bernoulli family additionally the
    worst-case mean bound on binary data.
    """
    d = spec.d
    a_station = np.ones(d)
    a_station[0] = 0.0
    out = [(a_station, 1.0 - EPS_MARGIN)]
    if spec.family.kind == "bernoulli":
        reg = build_regressors(spec.form, np.zeros(1))
        a = np.zeros(d)
        a[list(reg.col_idx)] = reg.x_worst
        a[list(reg.fb_idx)] = 1.0
        out.append((a, 1.0 - EPS_MARGIN))
    return out


def validate(spec: ModelSpec, theta: ParamVector) -> ValidatedPair:
    """Check every parameter invariant for the given form and family.

    Raises ConstraintViolation naming the first failed invariant; returns the
    pair unchanged when all hold.
    """
    _check_shape(spec.form, theta)
    layout = theta.to_array()
    if theta.alpha0 < C_LOWER:
        raise ConstraintViolation("intercept", f"alpha0 must be >= {C_LOWER}")
    if np.any(layout < 0):
        raise ConstraintViolation("nonnegative", "coefficients must be non-negative")
    inactive = sorted(frozenset(range(1, spec.d)) - spec.active)
    if any(layout[i] != 0.0 for i in inactive):
        raise ConstraintViolation(
            "inactive_zero", f"coefficients outside the active set {sorted(spec.active)} must be zero"
        )
    if theta.nonintercept_sum > 1.0 - EPS_MARGIN:
        raise ConstraintViolation(
            "stationarity",
            f"sum of non-intercept coefficients {theta.nonintercept_sum} exceeds {1 - EPS_MARGIN}",
        )
    if spec.family.kind == "bernoulli":
        a, cap = constraint_halfspaces(spec)[1]
        if float(a @ layout) > cap:
            raise ConstraintViolation(
                "bernoulli_mean", "worst-case conditional mean reaches 1 on binary data"
            )
    return ValidatedPair(spec, theta)


# ---------------------------------------------------------------------------
# Mean recursion
# ---------------------------------------------------------------------------

def mean_path_layout(
    reg: _Regressors,
    layout: np.ndarray,
    family_kind: str,
    want_grads: bool,
) -> tuple[np.ndarray, Optional[np.ndarray], bool]:
    """Mean path and gradients from a layout vector; no validation.

    Fast path uses linear filtering; a scalar loop handles the Bernoulli clamp
    when some mean leaves [C_LOWER, 1 - C_LOWER].
    """
    q = len(reg.fb_idx)
    n = reg.X.shape[0]
    c = layout[list(reg.col_idx)]
    u = reg.X @ c
    alpha0 = layout[0]
    if q == 0:
        lam = u
        lam_tilde = alpha0
    else:
        fb = layout[list(reg.fb_idx)]
        fb_sum = fb.sum()
        lam_tilde = alpha0 / (1.0 - fb_sum)
        ar = np.concatenate(([1.0], -fb))
        zi = lfiltic([1.0], ar, [lam_tilde] * q)
        lam, _ = lfilter([1.0], ar, u, zi=zi)

    clamp = family_kind == "bernoulli" and (
        lam.min() < C_LOWER or lam.max() > 1.0 - C_LOWER
    )
    if clamp:
        return _mean_path_clamped(reg, layout, want_grads)

    if not want_grads:
        return lam, None, False

    G = np.zeros((n, reg.d))
    if q == 0:
        for j, li in enumerate(reg.col_idx):
            G[:, li] = reg.X[:, j]
        return lam, G, False

    dtilde_a0 = 1.0 / (1.0 - fb_sum)
    dtilde_fb = alpha0 / (1.0 - fb_sum) ** 2
    for j, li in enumerate(reg.col_idx):
        init = dtilde_a0 if li == 0 else 0.0
        zi = lfiltic([1.0], ar, [init] * q)
        G[:, li], _ = lfilter([1.0], ar, reg.X[:, j], zi=zi)
    lam_ext = np.concatenate((np.full(q, lam_tilde), lam))
    for jlag, li in enumerate(reg.fb_idx, start=1):
        inp = lam_ext[q - jlag : q - jlag + n]
        zi = lfiltic([1.0], ar, [dtilde_fb] * q)
        G[:, li], _ = lfilter([1.0], ar, inp, zi=zi)
    return lam, G, False


def _mean_path_clamped(
    reg: _Regressors, layout: np.ndarray, want_grads: bool
) -> tuple[np.ndarray, Optional[np.ndarray], bool]:
    # Scalar recursion with the Bernoulli clamp; a clamped mean is a constant,
    # so its gradient row is zero and downstream steps use the clamped value.
    q = len(reg.fb_idx)
    n = reg.X.shape[0]
    d = reg.d
    c = layout[list(reg.col_idx)]
    u = reg.X @ c
    alpha0 = layout[0]
    fb = layout[list(reg.fb_idx)]
    fb_sum = fb.sum()
    lam_tilde = alpha0 / (1.0 - fb_sum) if q else alpha0

    lam_pad = np.empty(q + n)
    lam_pad[:q] = lam_tilde
    G_pad = np.zeros((q + n, d))
    if q:
        G_pad[:q, 0] = 1.0 / (1.0 - fb_sum)
        G_pad[:q, list(reg.fb_idx)] = alpha0 / (1.0 - fb_sum) ** 2
    lo, hi = C_LOWER, 1.0 - C_LOWER
    hit = False
    for t in range(n):
        v = u[t]
        for j in range(q):
            v += fb[j] * lam_pad[q + t - 1 - j]
        g = np.zeros(d)
        for jidx, li in enumerate(reg.col_idx):
            g[li] = reg.X[t, jidx]
        for j, li in enumerate(reg.fb_idx):
            g += fb[j] * G_pad[q + t - 1 - j]
            g[li] += lam_pad[q + t - 1 - j]
        if v < lo or v > hi:
            v = min(max(v, lo), hi)
            g[:] = 0.0
            hit = True
        lam_pad[q + t] = v
        G_pad[q + t] = g
    lam = lam_pad[q:].copy()
    G = G_pad[q:].copy() if want_grads else None
    return lam, G, hit


def lambda_path(
    spec: ModelSpec, theta: ParamVector, y, want_grads: bool = False
) -> MeanPath:
    """Conditional-mean path lam_1..lam_n for the observed series.

    Pre-sample counts are zero and pre-sample means equal the zero-data fixed
    point a0 / (1 - sum of feedback coefficients).  With ``want_grads`` the
    derivative d lam_t / d theta is computed by differentiating the same
    recursion, including the fixed-point initialization's dependence on theta.
    """
    validate(spec, theta)
    arr = as_count_series(y)
    reg = build_regressors(spec.form, arr)
    lam, G, clamped = mean_path_layout(reg, theta.to_array(), spec.family.kind, want_grads)
    return MeanPath(lam, G, clamped)


def worst_case_mean(spec: ModelSpec, theta: ParamVector) -> float:
    """Supremum of the conditional mean over binary data (fixed point at Y = 1)."""
    reg = build_regressors(spec.form, np.zeros(1))
    layout = theta.to_array()
    c_worst = float(reg.x_worst @ layout[list(reg.col_idx)])
    fb_sum = float(layout[list(reg.fb_idx)].sum())
    return c_worst / (1.0 - fb_sum)
