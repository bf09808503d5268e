"""Genetic programming over pipeline chains.

Individuals are pipeline specs scored by mean cross-validated metric.
Each generation keeps its single best individual and fills the rest by
tournament selection followed by crossover, mutation or plain
reproduction. Scores are cached by canonical spec, and every pipeline fit
is seeded from the search seed and a hash of the spec, so results do not
depend on evaluation order or thread count.
"""

from __future__ import annotations

import copy
import hashlib
import json
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import registry as reg
from .corpus import Dataset, FoldPlan, make_rng, stratified_kfold
from .deadline import Deadline
from .errors import ConfigError, ConvergenceWarning, EvaluationTimeout, SearchError
from .metrics import confusion_matrix, multiclass_report
from .pipeline import PipelineSpec, chain, fit_pipeline, predict_pipeline, spec_problems

METRICS = ("accuracy", "f1_micro", "f1_macro")
OperatorRegistry = dict  # kind -> registry.OperatorInfo


@dataclass(frozen=True)
class SearchConfig:
    population_size: int = 100
    generations: int = 100
    eval_timeout_seconds: float = 300.0
    metric: str = "accuracy"
    cv_folds: int = 5
    seed: int = 0
    mutation_rate: float = 0.9
    crossover_rate: float = 0.1
    max_transform_stages: int = 3
    tournament_size: int = 3

    def __post_init__(self):
        if self.population_size < 2:
            raise ConfigError("population_size must be >= 2")
        if self.generations < 0:
            raise ConfigError("generations must be >= 0")
        if self.metric not in METRICS:
            raise ConfigError(f"metric must be one of {METRICS}, got {self.metric!r}")
        for name in ("mutation_rate", "crossover_rate"):
            if not 0 <= getattr(self, name) <= 1:
                raise ConfigError(f"{name} must lie in [0, 1]")
        if self.mutation_rate + self.crossover_rate > 1 + 1e-12:
            raise ConfigError("mutation_rate + crossover_rate must not exceed 1")
        if self.max_transform_stages < 1:
            raise ConfigError("max_transform_stages must be >= 1")
        if self.tournament_size < 1:
            raise ConfigError("tournament_size must be >= 1")


@dataclass
class Genome:
    spec: PipelineSpec
    fitness: float | None = None
    eval_status: str | None = None  # ok | timeout | error; None until evaluated
    message: str = ""

    @property
    def complexity(self) -> int:
        return self.spec.complexity

    @property
    def evaluated(self):
        return self.eval_status is not None

    def cleared(self) -> "Genome":
        return Genome(self.spec)


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_spec: str
    n_ok: int
    n_timeout: int
    n_error: int
    seconds: float


@dataclass
class SearchLog:
    records: list[GenerationRecord] = field(default_factory=list)
    seed: int = 0

    @property
    def best_fitness(self) -> list[float]:
        return [r.best_fitness for r in self.records]

    def to_json(self, include_timing: bool = False) -> str:
        """Structured export; wall-clock is left out unless asked for so
        same-seed runs export identical bytes."""
        rows = []
        for r in self.records:
            d = asdict(r)
            if not include_timing:
                d.pop("seconds")
            rows.append(d)
        return json.dumps({"seed": self.seed, "generations": rows}, indent=1) + "\n"


# variation ---------------------------------------------------------------

def _pick(rng, seq):
    return seq[int(rng.integers(len(seq)))]


def _random_params(rng, registry, kind):
    return {name: _pick(rng, grid) for name, grid in sorted(registry[kind].grid.items())}


def _transforms_of(spec: PipelineSpec) -> list[tuple[str, dict]]:
    return [(n.kind, dict(n.params)) for n in spec.stages()[:-1]]


def _classifier_of(spec: PipelineSpec) -> tuple[str, dict]:
    return spec.root.kind, dict(spec.root.params)


def random_genome(rng, registry: OperatorRegistry = reg.REGISTRY, max_stages: int = 3) -> Genome:
    """CountVectorize, up to ``max_stages - 1`` random transforms, random classifier."""
    stages = [("CountVectorize", _random_params(rng, registry, "CountVectorize"))]
    for _ in range(int(rng.integers(max_stages))):
        kind = _pick(rng, reg.INNER_TRANSFORMS)
        stages.append((kind, _random_params(rng, registry, kind)))
    kind = _pick(rng, reg.CLASSIFIERS)
    stages.append((kind, _random_params(rng, registry, kind)))
    return Genome(chain(stages))


def _resample_param(rng, registry, stage):
    kind, params = stage
    name = _pick(rng, sorted(params))
    grid = registry[kind].grid[name]
    choices = [v for v in grid if v != params[name]] or list(grid)
    params = dict(params)
    params[name] = _pick(rng, choices)
    return kind, params


def mutate(g: Genome, rng, registry: OperatorRegistry = reg.REGISTRY,
           max_stages: int = 3) -> Genome:
    """Apply one random structural or hyperparameter change."""
    transforms = _transforms_of(g.spec)
    clf = _classifier_of(g.spec)
    moves = ["param", "replace"]
    if len(transforms) < max_stages:
        moves.append("insert")
    if len(transforms) > 1:
        moves.append("delete")
    move = _pick(rng, moves)
    if move == "param":
        stages = transforms + [clf]
        i = int(rng.integers(len(stages)))
        stages[i] = _resample_param(rng, registry, stages[i])
        return Genome(chain(stages))
    if move == "insert":
        pos = int(rng.integers(1, len(transforms) + 1))
        kind = _pick(rng, reg.INNER_TRANSFORMS)
        transforms.insert(pos, (kind, _random_params(rng, registry, kind)))
    elif move == "delete":
        del transforms[int(rng.integers(1, len(transforms)))]
    else:
        # slot 0 (CountVectorize) has no same-role alternative
        i = int(rng.integers(1, len(transforms) + 1))
        if i == len(transforms):
            kind = _pick(rng, [k for k in reg.CLASSIFIERS if k != clf[0]])
            clf = (kind, _random_params(rng, registry, kind))
        else:
            kind = _pick(rng, [k for k in reg.INNER_TRANSFORMS if k != transforms[i][0]])
            transforms[i] = (kind, _random_params(rng, registry, kind))
    return Genome(chain(transforms + [clf]))


def crossover(a: Genome, b: Genome, rng, max_stages: int = 3) -> Genome:
    """``a``'s classifier over ``a``'s transforms up to a cut, then ``b``'s after it."""
    ta, tb = _transforms_of(a.spec), _transforms_of(b.spec)
    cut = int(rng.integers(1, max(len(ta), len(tb)) + 1))
    child = (ta[:cut] + tb[cut:])[:max_stages]
    return Genome(chain(child + [_classifier_of(a.spec)]))


def genome_problems(g: Genome, registry=reg.REGISTRY, max_stages: int = 3) -> list[str]:
    problems = spec_problems(g.spec)
    n_transforms = g.complexity - 1
    if n_transforms > max_stages:
        problems.append(f"{n_transforms} transform stages exceed {max_stages}")
    if (g.fitness is not None) != (g.eval_status == "ok"):
        problems.append("fitness must be present exactly when eval_status is ok")
    return problems


# fitness -----------------------------------------------------------------

def spec_seed(seed: int, spec: PipelineSpec) -> int:
    digest = hashlib.sha256(spec.key().encode()).digest()
    return (seed ^ int.from_bytes(digest[:8], "little")) & (2**63 - 1)


def score(y_true, y_pred, k: int, metric: str) -> float:
    rep = multiclass_report(confusion_matrix(y_true, y_pred, k))
    return {"accuracy": rep.accuracy, "f1_micro": rep.micro_f1, "f1_macro": rep.macro_f1}[metric]


def evaluate_fitness(g: Genome, ds: Dataset, plan: FoldPlan, metric: str = "accuracy",
                     timeout_s: float | None = 300.0, seed: int = 0) -> Genome:
    """Mean fold score, every stage refit on each training split.

    Never raises for pipeline failures; they land in ``eval_status``.
    """
    if metric not in METRICS:
        raise ConfigError(f"metric must be one of {METRICS}, got {metric!r}")
    deadline = Deadline(timeout_s)
    fit_seed = spec_seed(seed, g.spec)
    k = len(ds.label_names)
    scores = []
    try:
        for train, valid in plan.folds:
            deadline.check()
            fp = fit_pipeline(g.spec, ds.subset(train), fit_seed, deadline=deadline)
            deadline.check()
            pred, _ = predict_pipeline(fp, [ds.documents[i] for i in valid])
            scores.append(score(ds.y[valid], pred, k, metric))
    except EvaluationTimeout as exc:
        return Genome(g.spec, None, "timeout", str(exc))
    except Exception as exc:  # noqa: BLE001 - any stage failure disqualifies the individual
        return Genome(g.spec, None, "error", f"{type(exc).__name__}: {exc}")
    return Genome(g.spec, float(np.mean(scores)), "ok")


# search loop -------------------------------------------------------------

def _rank_key(g: Genome):
    # higher fitness, then fewer stages, then canonical text: a total order
    return (-g.fitness, g.complexity, g.spec.key())


def _tournament(rng, eligible: list[Genome], size: int) -> Genome:
    picks = rng.integers(len(eligible), size=size)
    return min((eligible[int(i)] for i in picks), key=_rank_key)


class _Evaluator:
    def __init__(self, cfg: SearchConfig, ds: Dataset, plan: FoldPlan, threads: int):
        self.cfg, self.ds, self.plan, self.threads = cfg, ds, plan, threads
        self.cache: dict[str, Genome] = {}

    def _one(self, g):
        return evaluate_fitness(g, self.ds, self.plan, self.cfg.metric,
                                self.cfg.eval_timeout_seconds, self.cfg.seed)

    def __call__(self, population: list[Genome]) -> list[Genome]:
        todo = {}
        for g in population:
            key = g.spec.key()
            if key not in self.cache and key not in todo:
                todo[key] = g
        pending = list(todo.values())
        if self.threads > 1 and len(pending) > 1:
            with ThreadPoolExecutor(self.threads) as pool:
                results = list(pool.map(self._one, pending))
        else:
            results = [self._one(g) for g in pending]
        for key, res in zip(todo, results):
            self.cache[key] = res
        return [copy.copy(self.cache[g.spec.key()]) for g in population]


def run_search(cfg: SearchConfig, ds: Dataset, threads: int = 1, progress=None):
    """Evolve pipelines and refit the best one on all of ``ds``.

    Generation 0 is the random initial population; ``cfg.generations``
    rounds of breeding follow. Returns ``(FittedPipeline, SearchLog, Genome)``.
    """
    if len(np.unique(ds.y)) < 2 or len(ds) < 2 * cfg.cv_folds:
        raise SearchError(f"need >= 2 classes and >= {2 * cfg.cv_folds} rows")
    plan = stratified_kfold(ds, cfg.cv_folds, cfg.seed)
    rng = make_rng(cfg.seed)
    evaluate = _Evaluator(cfg, ds, plan, threads)
    log = SearchLog(seed=cfg.seed)
    stages = cfg.max_transform_stages
    population = [random_genome(rng, reg.REGISTRY, stages) for _ in range(cfg.population_size)]
    best = None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ConvergenceWarning)
        for gen in range(cfg.generations + 1):
            t0 = time.perf_counter()
            population = evaluate(population)
            eligible = [g for g in population if g.eval_status == "ok"]
            if not eligible:
                if gen == 0:
                    reasons = sorted({g.message for g in population})[:3]
                    raise SearchError(f"no valid individual in generation 0: {reasons}")
                raise SearchError(f"generation {gen} lost every valid individual")
            best = min(eligible, key=_rank_key)
            status = [g.eval_status for g in population]
            record = GenerationRecord(
                gen, best.fitness, float(np.mean([g.fitness for g in eligible])),
                best.spec.summary(), status.count("ok"), status.count("timeout"),
                status.count("error"), time.perf_counter() - t0,
            )
            log.records.append(record)
            if progress is not None:
                progress(record)
            if gen == cfg.generations:
                break
            offspring = [best]
            while len(offspring) < cfg.population_size:
                r = rng.random()
                if r < cfg.crossover_rate:
                    a = _tournament(rng, eligible, cfg.tournament_size)
                    b = _tournament(rng, eligible, cfg.tournament_size)
                    child = crossover(a, b, rng, stages)
                elif r < cfg.crossover_rate + cfg.mutation_rate:
                    child = mutate(_tournament(rng, eligible, cfg.tournament_size), rng,
                                   reg.REGISTRY, stages)
                else:
                    child = _tournament(rng, eligible, cfg.tournament_size).cleared()
                offspring.append(child)
            population = offspring
        fitted = fit_pipeline(best.spec, ds, spec_seed(cfg.seed, best.spec), threads=threads)
    return fitted, log, best


def baseline_spec() -> PipelineSpec:
    return chain([("CountVectorize", {"min_df": 1}), ("LogisticRegression", {"C": 1.0})],
                 "baseline")
