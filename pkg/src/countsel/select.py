"""Penalized model selection over finite collections.

Every model in the collection is fitted once by quasi-maximum likelihood; the
penalized criterion -2 * loglik + kappa_n * |m| is then evaluated per penalty
and the argmin is returned.  The fits are shared across penalties, so loglik
values in the tables are identical whichever penalty is used.  |m| counts the
free non-intercept coefficients; the intercept is present in every model, so
its contribution would only shift all criteria by a constant.
"""

from __future__ import annotations

import dataclasses
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import AllFitsFailed, CountselError, DomainError
from .model import EmissionFamily, Ingarch, Knot, ModelSpec, as_count_series
from .qmle import FitOptions, FitResult, fit

__all__ = [
    "Penalty",
    "penalty_value",
    "criterion",
    "enumerate_ingarch",
    "enumerate_knots",
    "ModelRow",
    "SelectionResult",
    "select",
    "select_with_penalties",
    "embed_layout",
]


@dataclass(frozen=True)
class Penalty:
    """Regularization sequence kappa_n: log n, n^delta with delta in (0,1), or custom."""

    kind: str
    delta: Optional[float] = None
    fn: Optional[Callable[[int], float]] = None
    name: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("logn", "pow", "custom"):
            raise DomainError(f"unknown penalty kind {self.kind!r}")
        if self.kind == "pow" and not (self.delta is not None and 0.0 < self.delta < 1.0):
            raise DomainError("PowerN requires delta in (0, 1)")
        if self.kind == "custom" and self.fn is None:
            raise DomainError("custom penalty requires a callable")

    @classmethod
    def log_n(cls) -> "Penalty":
        return cls("logn")

    @classmethod
    def power(cls, delta: float) -> "Penalty":
        return cls("pow", delta=delta)

    @classmethod
    def custom(cls, fn: Callable[[int], float], name: str = "custom") -> "Penalty":
        return cls("custom", fn=fn, name=name)

    @classmethod
    def parse(cls, text: str) -> "Penalty":
        """Parse 'logn' or 'pow:DELTA' (e.g. 'pow:0.3333')."""
        t = text.strip().lower()
        if t == "logn":
            return cls.log_n()
        if t.startswith("pow:"):
            try:
                return cls.power(float(t[4:]))
            except ValueError:
                raise DomainError(f"bad penalty spec {text!r}") from None
        raise DomainError(f"bad penalty spec {text!r}; use 'logn' or 'pow:DELTA'")

    @property
    def label(self) -> str:
        if self.kind == "logn":
            return "log n"
        if self.kind == "pow":
            return f"n^{self.delta:.4g}"
        return self.name or "custom"


def penalty_value(p: Penalty, n: int) -> float:
    """kappa_n for the given sample size; must satisfy 0 < kappa_n < n."""
    if int(n) != n or n < 1:
        raise DomainError("n must be a positive integer")
    if p.kind == "logn":
        if n < 2:
            raise DomainError("log n penalty requires n >= 2")
        return math.log(n)
    if p.kind == "pow":
        return float(n) ** p.delta
    value = float(p.fn(n))
    if not 0.0 < value < n:
        raise DomainError(f"custom penalty must satisfy 0 < kappa_n < n, got {value} at n={n}")
    return value


def criterion(loglik: float, dim: int, kappa: float) -> float:
    """Penalized contrast -2 * loglik + kappa * dim."""
    if dim < 0:
        raise DomainError("model dimension must be non-negative")
    return -2.0 * loglik + kappa * dim


def enumerate_ingarch(family: EmissionFamily, p_max: int, q_max: int) -> list[ModelSpec]:
    """All INGARCH(p, q) specs with contiguous lags, (p, q) in {0..p_max} x {0..q_max}."""
    if p_max < 0 or q_max < 0:
        raise DomainError("p_max and q_max must be non-negative")
    return [
        ModelSpec(family, Ingarch(p, q))
        for p in range(p_max + 1)
        for q in range(q_max + 1)
    ]


def enumerate_knots(r: int, K_max: int, candidates: Sequence[int]) -> list[ModelSpec]:
    """All knot models with knot sets of size 0..K_max drawn from the candidates.

    Every spec keeps the count lag and the mean feedback term, so the model
    dimension is 2 + K; the K = 0 spec is the plain NB-INGARCH(1,1).
    """
    cands = tuple(int(c) for c in candidates)
    if any(a >= b for a, b in zip(cands, cands[1:])):
        raise DomainError("knot candidates must be strictly increasing")
    if K_max < 0 or K_max > len(cands):
        raise DomainError("K_max must be between 0 and the number of candidates")
    family = EmissionFamily.negbinomial(r)
    specs = []
    for K in range(K_max + 1):
        for knots in itertools.combinations(cands, K):
            specs.append(ModelSpec(family, Knot(knots, with_feedback=True)))
    return specs


@dataclass(frozen=True)
class ModelRow:
    model: ModelSpec
    dim: int
    loglik: float
    criterion: float
    fit: Optional[FitResult]
    failed: bool = False
    failure: str = ""


@dataclass(frozen=True)
class SelectionResult:
    table: tuple[ModelRow, ...]
    chosen: int
    penalty: Penalty
    kappa: float
    n: int

    @property
    def chosen_row(self) -> ModelRow:
        return self.table[self.chosen]

    def to_json(self) -> dict:
        rows = []
        for row in self.table:
            rows.append(
                {
                    "model": row.model.descriptor(),
                    "dim": row.dim,
                    "loglik": None if row.failed else float(row.loglik),
                    "criterion": None if row.failed else float(row.criterion),
                    "converged": bool(row.fit.converged) if row.fit else False,
                }
            )
        return {
            "penalty": self.penalty.label,
            "kappa": float(self.kappa),
            "n": self.n,
            "models": rows,
            "chosen": self.chosen_row.model.descriptor(),
        }

    def to_text(self) -> str:
        lines = [
            f"penalty {self.penalty.label}  (kappa = {self.kappa:.6g}, n = {self.n})",
            f"{'model':<28} {'dim':>3} {'loglik':>14} {'criterion':>14}",
        ]
        for i, row in enumerate(self.table):
            mark = "*" if i == self.chosen else " "
            if row.failed:
                lines.append(f"{mark}{row.model.label:<27} {row.dim:>3} {'failed':>14} {'inf':>14}")
            else:
                lines.append(
                    f"{mark}{row.model.label:<27} {row.dim:>3} {row.loglik:>14.4f} {row.criterion:>14.4f}"
                )
        return "\n".join(lines)


def embed_layout(sub: ModelSpec, src: np.ndarray, target: ModelSpec) -> Optional[np.ndarray]:
    """Layout vector for ``target`` carrying a sub-model's coefficients, zeros elsewhere."""
    if type(sub.form) is not type(target.form):
        return None
    out = np.zeros(target.d)
    if isinstance(sub.form, Ingarch):
        p_s, q_s = sub.form.p, sub.form.q
        p_t, q_t = target.form.p, target.form.q
        if p_s > p_t or q_s > q_t:
            return None
        out[0] = src[0]
        out[1 : 1 + p_s] = src[1 : 1 + p_s]
        out[1 + p_t : 1 + p_t + q_s] = src[1 + p_s : 1 + p_s + q_s]
        return out
    if not set(sub.form.knots) <= set(target.form.knots):
        return None
    if sub.form.with_feedback != target.form.with_feedback:
        return None
    nfb = 1 if target.form.with_feedback else 0
    out[: 2 + nfb] = src[: 2 + nfb]
    pos = {xi: 2 + nfb + i for i, xi in enumerate(target.form.knots)}
    for i, xi in enumerate(sub.form.knots):
        out[pos[xi]] = src[2 + nfb + i]
    return out


def _is_submodel(sub: ModelSpec, sup: ModelSpec) -> bool:
    if isinstance(sub.form, Ingarch) and isinstance(sup.form, Ingarch):
        return sub.form.p <= sup.form.p and sub.form.q <= sup.form.q
    if isinstance(sub.form, Knot) and isinstance(sup.form, Knot):
        return (
            set(sub.form.knots) <= set(sup.form.knots)
            and sub.form.with_feedback == sup.form.with_feedback
        )
    return False


def select_with_penalties(
    collection: Sequence[ModelSpec],
    y,
    penalties: Sequence[Penalty],
    opts: FitOptions = FitOptions(),
) -> list[SelectionResult]:
    """Fit every model once, then select per penalty over the shared fits.

    Models are fitted in increasing dimension order, warm-starting each from
    its best already-fitted sub-model, which keeps nested log-likelihoods
    monotone.  Failed fits get +inf criterion and a failure flag; the result
    tables keep the enumeration order of the collection.
    """
    if not collection:
        raise DomainError("empty model collection")
    arr = as_count_series(y)
    n = len(arr)
    if n < max(m.dim for m in collection) + 1:
        raise DomainError("series is too short for the largest model in the collection")
    if not penalties:
        raise DomainError("at least one penalty is required")

    order = sorted(range(len(collection)), key=lambda i: (collection[i].dim, i))
    fits: dict[int, Optional[FitResult]] = {}
    failures: dict[int, str] = {}
    for i in order:
        spec = collection[i]
        warm = []
        best_sub = None
        for j, sub_fit in fits.items():
            if sub_fit is None or not _is_submodel(collection[j], spec):
                continue
            if best_sub is None or sub_fit.loglik > best_sub[1].loglik:
                best_sub = (collection[j], sub_fit)
        if best_sub is not None:
            start = embed_layout(best_sub[0], best_sub[1].theta_hat.to_array(), spec)
            if start is not None:
                warm.append(start)
        try:
            fits[i] = fit(
                spec,
                arr,
                dataclasses.replace(opts, extra_starts=tuple(opts.extra_starts) + tuple(warm)),
            )
        except CountselError as exc:
            fits[i] = None
            failures[i] = f"{type(exc).__name__}: {exc}"

    if all(f is None for f in fits.values()):
        raise AllFitsFailed("every model in the collection failed to fit")

    results = []
    for pen in penalties:
        kappa = penalty_value(pen, n)
        rows = []
        for i, spec in enumerate(collection):
            f = fits[i]
            if f is None:
                rows.append(ModelRow(spec, spec.dim, math.nan, math.inf, None, True, failures[i]))
            else:
                rows.append(
                    ModelRow(spec, spec.dim, f.loglik, criterion(f.loglik, spec.dim, kappa), f)
                )
        chosen = min(
            range(len(rows)),
            key=lambda i: (rows[i].criterion, rows[i].dim, rows[i].model.order_key(), i),
        )
        results.append(SelectionResult(tuple(rows), chosen, pen, kappa, n))
    return results


def select(
    collection: Sequence[ModelSpec],
    y,
    penalty: Penalty,
    opts: FitOptions = FitOptions(),
) -> SelectionResult:
    """Fit the collection and return the penalized-criterion argmin for one penalty."""
    return select_with_penalties(collection, y, [penalty], opts)[0]
