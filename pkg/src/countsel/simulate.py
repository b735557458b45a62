"""Trajectory simulation for the supported count models.

Randomness comes from numpy's counter-based Philox generator keyed by a 64-bit
seed, so replications seeded as ``base_seed + index`` are independent streams
and every draw is reproducible.  Negative binomial draws use
``Generator.negative_binomial`` with success probability p = r / (r + lam)
(internally a Gamma-Poisson mixture), giving conditional mean lam and
conditional variance lam + lam^2 / r.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataFormatError, DomainError
from .model import (
    EmissionFamily,
    Ingarch,
    ModelSpec,
    ParamVector,
    as_count_series,
    validate,
)

__all__ = ["SimConfig", "make_rng", "sample_emission", "simulate", "write_csv", "read_csv"]

DEFAULT_BURN_IN = 500


@dataclass(frozen=True)
class SimConfig:
    """Length kept, burn-in discarded, and the 64-bit seed."""

    n: int
    burn_in: int = DEFAULT_BURN_IN
    seed: int = 0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError("n must be a positive integer")
        if int(self.burn_in) != self.burn_in or self.burn_in < 0:
            raise DomainError("burn_in must be a non-negative integer")


def make_rng(seed: int) -> np.random.Generator:
    """Counter-based Philox generator keyed by the given seed."""
    return np.random.Generator(np.random.Philox(seed))


def sample_emission(family: EmissionFamily, lam: float, rng: np.random.Generator) -> int:
    """One draw with conditional mean ``lam`` from the given family."""
    if family.kind == "poisson":
        if lam <= 0:
            raise DomainError("Poisson mean must be positive")
        return int(rng.poisson(lam))
    if family.kind == "negbinomial":
        if lam <= 0:
            raise DomainError("negative binomial mean must be positive")
        p = family.r / (family.r + lam)
        return int(rng.negative_binomial(family.r, p))
    if not 0.0 < lam < 1.0:
        raise DomainError(f"Bernoulli mean must lie in (0, 1), got {lam}")
    return int(rng.random() < lam)


def simulate(spec: ModelSpec, theta: ParamVector, cfg: SimConfig) -> np.ndarray:
    """Simulate burn_in + n steps of the joint recursion and keep the last n.

    The recursion starts from zero pre-sample counts and the zero-data fixed
    point for pre-sample means; identical inputs give an identical series.
    """
    validate(spec, theta)
    rng = make_rng(cfg.seed)
    total = cfg.burn_in + cfg.n
    out = np.empty(total, dtype=np.int64)
    fam = spec.family
    a0 = theta.alpha0

    if isinstance(spec.form, Ingarch):
        p, q = spec.form.p, spec.form.q
        al = theta.alphas
        be = theta.betas
        lam_tilde = a0 / (1.0 - sum(be)) if q else a0
        y_hist = [0.0] * p          # y_hist[i] = Y_{t-1-i}
        lam_hist = [lam_tilde] * q  # lam_hist[j] = lam_{t-1-j}
        for t in range(total):
            lam = a0
            for i in range(p):
                lam += al[i] * y_hist[i]
            for j in range(q):
                lam += be[j] * lam_hist[j]
            yv = sample_emission(fam, lam, rng)
            out[t] = yv
            if p:
                y_hist = [float(yv)] + y_hist[:-1]
            if q:
                lam_hist = [lam] + lam_hist[:-1]
    else:
        form = spec.form
        a1 = theta.alphas[0]
        a2 = theta.betas[0] if form.with_feedback else 0.0
        coefs = theta.knot_coefs
        knots = form.knots
        lam_prev = a0 / (1.0 - a2) if form.with_feedback else a0
        y_prev = 0.0
        for t in range(total):
            lam = a0 + a1 * y_prev + a2 * lam_prev
            for k in range(len(knots)):
                lam += coefs[k] * max(y_prev - knots[k], 0.0)
            yv = sample_emission(fam, lam, rng)
            out[t] = yv
            y_prev = float(yv)
            lam_prev = lam

    return out[cfg.burn_in :]


def write_csv(y, path, header: bool = False) -> None:
    """Write a count series as one integer per line, optional single header ``y``."""
    arr = as_count_series(y)
    with open(path, "w") as fh:
        if header:
            fh.write("y\n")
        for v in arr:
            fh.write(f"{int(v)}\n")


def read_csv(path) -> np.ndarray:
    """Read a series written by :func:`write_csv`; errors carry the line number."""
    values = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            text = raw.strip()
            if not text:
                continue
            if lineno == 1 and text == "y":
                continue
            try:
                v = int(text)
            except ValueError:
                raise DataFormatError(lineno, f"expected an integer, got {text!r}") from None
            if v < 0:
                raise DataFormatError(lineno, f"negative count {v}")
            values.append(v)
    if not values:
        raise DataFormatError(1, "no observations found")
    return np.asarray(values, dtype=np.int64)
