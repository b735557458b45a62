"""Seeded replication experiments: selection-frequency tables and coverage.

Replication r of an experiment simulates one trajectory with seed
``base_seed + r``, runs the penalized selection over the collection (fits are
shared across penalties) and classifies the outcome against the truth.
Experiments are fully deterministic given their configuration; failed
replications are excluded from the frequency denominator and reported
separately.
"""

from __future__ import annotations

import enum
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Union

import numpy as np

from .errors import CountselError, DomainError, FamilyMismatch
from .model import EmissionFamily, Ingarch, Knot, ModelSpec, ParamVector, validate
from .qmle import FitOptions, fit, sandwich
from .select import Penalty, embed_layout, enumerate_ingarch, enumerate_knots, select_with_penalties
from .simulate import DEFAULT_BURN_IN, SimConfig, simulate

__all__ = [
    "OutcomeClass",
    "classify_outcome",
    "IngarchCollection",
    "KnotCollection",
    "ExperimentConfig",
    "FrequencyTable",
    "run_experiment",
    "CoverageReport",
    "coverage_study",
    "PRESETS",
    "preset",
]

DEFAULT_BASE_SEED = 1000
DEFAULT_PENALTIES = (Penalty.log_n(), Penalty.power(1.0 / 3.0))
DEFAULT_SIZES = (500, 1000, 2000)
DESK_REPLICATIONS = 50
FULL_REPLICATIONS = 100


class OutcomeClass(enum.Enum):
    UNDERFIT = "underfit"
    EXACT = "exact"
    OVER_OR_WRONG = "over_or_wrong"


def classify_outcome(chosen: ModelSpec, truth: ModelSpec) -> OutcomeClass:
    """Outcome of one selection run against the true model.

    INGARCH collections: exact on spec equality, underfit when the chosen
    dimension is smaller, over-or-wrong otherwise.  Knot collections compare
    the number of knots only (knot locations do not matter for the class).
    """
    if type(chosen.form) is not type(truth.form) or chosen.family != truth.family:
        raise FamilyMismatch(
            f"cannot classify {chosen.label} against truth {truth.label}"
        )
    if isinstance(chosen.form, Knot):
        if chosen.form.K < truth.form.K:
            return OutcomeClass.UNDERFIT
        if chosen.form.K == truth.form.K:
            return OutcomeClass.EXACT
        return OutcomeClass.OVER_OR_WRONG
    if chosen == truth:
        return OutcomeClass.EXACT
    if chosen.dim < truth.dim:
        return OutcomeClass.UNDERFIT
    return OutcomeClass.OVER_OR_WRONG


@dataclass(frozen=True)
class IngarchCollection:
    family: EmissionFamily
    p_max: int
    q_max: int

    def build(self) -> list[ModelSpec]:
        return enumerate_ingarch(self.family, self.p_max, self.q_max)

    @property
    def kind(self) -> str:
        return "ingarch"

    def describe(self) -> dict:
        return {"kind": "ingarch", "family": self.family.label, "p_max": self.p_max, "q_max": self.q_max}


@dataclass(frozen=True)
class KnotCollection:
    r: int
    K_max: int
    candidates: tuple[int, ...]

    def build(self) -> list[ModelSpec]:
        return enumerate_knots(self.r, self.K_max, self.candidates)

    @property
    def kind(self) -> str:
        return "knot"

    def describe(self) -> dict:
        return {"kind": "knot", "r": self.r, "K_max": self.K_max, "candidates": list(self.candidates)}


Collection = Union[IngarchCollection, KnotCollection]


@dataclass(frozen=True)
class ExperimentConfig:
    truth_spec: ModelSpec
    truth_theta: ParamVector
    collection: Collection
    penalties: tuple[Penalty, ...] = DEFAULT_PENALTIES
    sample_sizes: tuple[int, ...] = DEFAULT_SIZES
    replications: int = DESK_REPLICATIONS
    base_seed: int = DEFAULT_BASE_SEED
    burn_in: int = DEFAULT_BURN_IN
    fit_options: FitOptions = field(default_factory=FitOptions)

    def __post_init__(self):
        if self.replications < 1:
            raise DomainError("replications must be >= 1")
        validate(self.truth_spec, self.truth_theta)


@dataclass(frozen=True)
class Cell:
    counts: tuple[int, int, int]  # (underfit, exact, over_or_wrong)
    failures: int

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def freqs(self) -> tuple[float, float, float]:
        t = self.total
        if t == 0:
            return (0.0, 0.0, 0.0)
        return tuple(c / t for c in self.counts)  # type: ignore[return-value]


_ROW_LABELS = {
    "ingarch": ("|m^| < |m*|", "m^ = m*", "|m^| >= |m*|, m^ != m*"),
    "knot": ("K^ < K*", "K^ = K*", "K^ > K*"),
}


@dataclass(frozen=True)
class FrequencyTable:
    kind: str
    sample_sizes: tuple[int, ...]
    penalty_labels: tuple[str, ...]
    cells: dict[tuple[str, int], Cell]
    replications: int
    base_seed: int

    def cell(self, penalty_label: str, n: int) -> Cell:
        return self.cells[(penalty_label, n)]

    def freq(self, penalty_label: str, n: int, outcome: OutcomeClass) -> float:
        idx = [OutcomeClass.UNDERFIT, OutcomeClass.EXACT, OutcomeClass.OVER_OR_WRONG].index(outcome)
        return self.cell(penalty_label, n).freqs[idx]

    def to_json(self) -> dict:
        cells = {}
        for (label, n), cell in self.cells.items():
            cells[f"{label}|{n}"] = {
                "counts": list(cell.counts),
                "freqs": [float(f) for f in cell.freqs],
                "failures": cell.failures,
            }
        return {
            "kind": self.kind,
            "sample_sizes": list(self.sample_sizes),
            "penalties": list(self.penalty_labels),
            "replications": self.replications,
            "base_seed": self.base_seed,
            "cells": cells,
        }

    def serialize(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    def to_text(self) -> str:
        labels = _ROW_LABELS[self.kind]
        width = max(12, max(len(p) for p in self.penalty_labels) + 2)
        head1 = " " * 26
        head2 = " " * 26
        for n in self.sample_sizes:
            group = f"n={n}"
            head1 += f"{group:<{width * len(self.penalty_labels)}}"
            for p in self.penalty_labels:
                head2 += f"{p:<{width}}"
        lines = [head1.rstrip(), head2.rstrip()]
        for row_i, label in enumerate(labels):
            line = f"{label:<26}"
            for n in self.sample_sizes:
                for p in self.penalty_labels:
                    line += f"{self.cell(p, n).freqs[row_i]:<{width}.2f}"
            lines.append(line.rstrip())
        fail_line = f"{'failures':<26}"
        for n in self.sample_sizes:
            for p in self.penalty_labels:
                fail_line += f"{self.cell(p, n).failures:<{width}d}"
        lines.append(fail_line.rstrip())
        return "\n".join(lines)


def _replication_outcomes(cfg: ExperimentConfig, n: int, rep: int):
    """Outcome per penalty for one replication, or None on failure."""
    collection = cfg.collection.build()
    sim = SimConfig(n=n, burn_in=cfg.burn_in, seed=cfg.base_seed + rep)
    y = simulate(cfg.truth_spec, cfg.truth_theta, sim)
    try:
        selections = select_with_penalties(collection, y, cfg.penalties, cfg.fit_options)
    except CountselError:
        return None
    return tuple(
        classify_outcome(sel.chosen_row.model, cfg.truth_spec) for sel in selections
    )


def _worker(args):
    cfg, n, rep = args
    return _replication_outcomes(cfg, n, rep)


def _resolve_workers(workers: Optional[int]) -> int:
    if workers is not None:
        return max(1, workers)
    try:
        return max(1, int(os.environ.get("COUNTSEL_THREADS", "1")))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig, workers: Optional[int] = None) -> FrequencyTable:
    """Selection-frequency table over seeded replications of the experiment.

    ``workers`` (default: the COUNTSEL_THREADS environment variable, else 1)
    runs replications in parallel processes; results are reduced in
    replication order, so the table does not depend on the worker count.
    Custom penalties with non-picklable callables force the serial path.
    """
    labels = tuple(p.label for p in cfg.penalties)
    counts = {
        (label, n): [0, 0, 0] for n in cfg.sample_sizes for label in labels
    }
    failures = {n: 0 for n in cfg.sample_sizes}
    outcome_idx = {
        OutcomeClass.UNDERFIT: 0,
        OutcomeClass.EXACT: 1,
        OutcomeClass.OVER_OR_WRONG: 2,
    }
    tasks = [(n, rep) for n in cfg.sample_sizes for rep in range(cfg.replications)]
    n_workers = _resolve_workers(workers)
    if any(p.kind == "custom" for p in cfg.penalties):
        n_workers = 1
    if n_workers > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            outcomes = list(pool.map(_worker, [(cfg, n, rep) for n, rep in tasks]))
    else:
        outcomes = [_replication_outcomes(cfg, n, rep) for n, rep in tasks]
    for (n, _rep), result in zip(tasks, outcomes):
        if result is None:
            failures[n] += 1
            continue
        for pen, outcome in zip(cfg.penalties, result):
            counts[(pen.label, n)][outcome_idx[outcome]] += 1
    cells = {
        key: Cell(tuple(c), failures[key[1]]) for key, c in counts.items()
    }
    return FrequencyTable(
        kind=cfg.collection.kind,
        sample_sizes=tuple(cfg.sample_sizes),
        penalty_labels=labels,
        cells=cells,
        replications=cfg.replications,
        base_seed=cfg.base_seed,
    )


@dataclass(frozen=True)
class CoverageReport:
    """Per-free-coordinate coverage of the truth by theta_hat +- 1.96 se."""

    free_indices: tuple[int, ...]
    coverage: np.ndarray
    z_mean: np.ndarray
    z_var: np.ndarray
    used: int
    failures: int

    def to_json(self) -> dict:
        return {
            "free_indices": list(self.free_indices),
            "coverage": [float(c) for c in self.coverage],
            "z_mean": [float(v) for v in self.z_mean],
            "z_var": [float(v) for v in self.z_var],
            "used": self.used,
            "failures": self.failures,
        }


def coverage_study(
    truth_spec: ModelSpec,
    truth_theta: ParamVector,
    n: int,
    replications: int,
    base_seed: int = DEFAULT_BASE_SEED,
    spec_fit: Optional[ModelSpec] = None,
    burn_in: int = DEFAULT_BURN_IN,
    opts: FitOptions = FitOptions(),
) -> CoverageReport:
    """Empirical coverage of nominal 95% sandwich intervals across replications."""
    if replications < 1:
        raise DomainError("replications must be >= 1")
    validate(truth_spec, truth_theta)
    if spec_fit is None:
        spec_fit = truth_spec
    star = embed_layout(truth_spec, truth_theta.to_array(), spec_fit)
    if star is None:
        raise DomainError("truth is not representable within spec_fit")
    free = [0] + sorted(spec_fit.active)
    star_free = star[free]
    covered = np.zeros(len(free))
    zs = []
    failures = 0
    for rep in range(replications):
        y = simulate(truth_spec, truth_theta, SimConfig(n=n, burn_in=burn_in, seed=base_seed + rep))
        try:
            f = sandwich(spec_fit, fit(spec_fit, y, opts), y)
        except CountselError:
            failures += 1
            continue
        se = f.sandwich.std_errors[free]
        if np.any(se <= 0):
            failures += 1
            continue
        est = f.theta_hat.to_array()[free]
        covered += np.abs(est - star_free) <= 1.96 * se
        zs.append((est - star_free) / se)
    used = replications - failures
    if used == 0:
        raise DomainError("all replications failed")
    z_arr = np.array(zs)
    return CoverageReport(
        free_indices=tuple(free),
        coverage=covered / used,
        z_mean=z_arr.mean(axis=0),
        z_var=z_arr.var(axis=0, ddof=1) if used > 1 else np.zeros(len(free)),
        used=used,
        failures=failures,
    )


def _ingarch_preset(name, family, p, q, theta, p_max=5, q_max=5):
    spec = ModelSpec(family, Ingarch(p, q))
    return name, (spec, ParamVector(*theta), IngarchCollection(family, p_max, q_max))


def _knot_preset(name, r):
    family = EmissionFamily.negbinomial(r)
    spec = ModelSpec(family, Knot((2,), with_feedback=True))
    theta = ParamVector(1.0, (0.2,), (0.15,), (0.35,))
    return name, (spec, theta, KnotCollection(r, 3, (1, 2, 3, 4)))


PRESETS: dict[str, tuple[ModelSpec, ParamVector, Collection]] = dict(
    [
        _ingarch_preset("model-a", EmissionFamily.poisson(), 2, 0, (0.5, (0.3, 0.25), ())),
        _ingarch_preset("model-b", EmissionFamily.poisson(), 1, 1, (1.0, (0.3,), (0.45,))),
        _ingarch_preset("model-c", EmissionFamily.bernoulli(), 2, 0, (0.15, (0.25, 0.2), ())),
        _ingarch_preset("model-d", EmissionFamily.bernoulli(), 1, 1, (0.1, (0.35,), (0.4,))),
        _knot_preset("knots-r1", 1),
        _knot_preset("knots-r8", 8),
    ]
)


def preset(name: str) -> tuple[ModelSpec, ParamVector, Collection]:
    try:
        return PRESETS[name]
    except KeyError:
        raise DomainError(
            f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}"
        ) from None
