import copy

import numpy as np
import pytest

from conftest import make_corpus
from textpipes.corpus import Dataset, make_rng, stratified_kfold
from textpipes.errors import ConfigError, SearchError
from textpipes.evolve import (Genome, SearchConfig, baseline_spec, crossover, evaluate_fitness,
                              genome_problems, mutate, random_genome, run_search)
from textpipes.pipeline import chain, predict_pipeline, preset
from textpipes.registry import REGISTRY


def test_minimal_random_genome():
    rng = make_rng(0)
    for _ in range(50):
        g = random_genome(rng, REGISTRY, max_stages=1)
        assert len(g.spec.kinds) == 2 and g.spec.kinds[0] == "CountVectorize"


def test_random_genome_deterministic():
    a = [random_genome(make_rng(5)).spec.key() for _ in range(3)]
    r1, r2 = make_rng(5), make_rng(5)
    assert [random_genome(r1).spec.key() for _ in range(20)] == \
           [random_genome(r2).spec.key() for _ in range(20)]
    assert len(set(a)) == 1


def test_closure_over_ten_thousand_operations():
    rng = make_rng(123)
    pool = [random_genome(rng) for _ in range(30)]
    for g in pool:
        assert genome_problems(g) == []
    for i in range(10_000):
        op = i % 3
        if op == 0:
            g = random_genome(rng)
        elif op == 1:
            g = mutate(pool[int(rng.integers(len(pool)))], rng)
        else:
            a, b = (pool[int(j)] for j in rng.integers(len(pool), size=2))
            g = crossover(a, b, rng)
        assert genome_problems(g) == [], g.spec.summary()
        assert g.fitness is None and g.eval_status is None
        pool[int(rng.integers(len(pool)))] = g


def test_mutate_never_inserts_at_max_length():
    rng = make_rng(1)
    full = Genome(preset("subtask2"))  # three transforms
    for _ in range(300):
        child = mutate(full, rng, REGISTRY, max_stages=3)
        assert child.complexity <= full.complexity


def test_mutation_and_crossover_reproducible():
    g, h = Genome(preset("subtask2")), Genome(preset("subtask1"))
    r1, r2 = make_rng(8), make_rng(8)
    seq1 = [mutate(g, r1).spec.key() for _ in range(30)] + [crossover(g, h, r1).spec.key()
                                                              for _ in range(30)]
    seq2 = [mutate(g, r2).spec.key() for _ in range(30)] + [crossover(g, h, r2).spec.key()
                                                              for _ in range(30)]
    assert seq1 == seq2


def test_self_crossover_is_identity():
    rng = make_rng(2)
    for _ in range(100):
        g = random_genome(rng)
        assert crossover(g, g, rng).spec.key() == g.spec.key()


def test_search_config_validation():
    with pytest.raises(ConfigError):
        SearchConfig(population_size=1)
    with pytest.raises(ConfigError):
        SearchConfig(mutation_rate=0.8, crossover_rate=0.3)
    with pytest.raises(ConfigError):
        SearchConfig(metric="auc")
    cfg = SearchConfig()
    assert (cfg.population_size, cfg.generations, cfg.eval_timeout_seconds) == (100, 100, 300.0)


@pytest.fixture
def token_corpus():
    # label is exactly the presence of one token
    rng = np.random.default_rng(0)
    docs, labels = [], []
    for i in range(100):
        words = [f"f{j}" for j in rng.integers(0, 30, 6)]
        if i % 2:
            words.append("zz")
        docs.append(" ".join(words))
        labels.append(i % 2)
    return Dataset(docs, labels, ["0", "1"])


def test_fitness_on_token_corpus(token_corpus):
    plan = stratified_kfold(token_corpus, 5, 0)
    g = evaluate_fitness(Genome(baseline_spec()), token_corpus, plan, "accuracy", None)
    assert g.eval_status == "ok" and g.fitness >= 0.95
    again = evaluate_fitness(Genome(baseline_spec()), token_corpus, plan, "accuracy", None)
    assert again.fitness == g.fitness


def test_zero_timeout(token_corpus):
    plan = stratified_kfold(token_corpus, 5, 0)
    g = evaluate_fitness(Genome(baseline_spec()), token_corpus, plan, "accuracy", 0)
    assert g.eval_status == "timeout" and g.fitness is None


def test_timeout_leaves_shared_state_intact(token_corpus):
    plan = stratified_kfold(token_corpus, 5, 0)
    before_docs = list(token_corpus.documents)
    before_plan = copy.deepcopy(plan.folds)
    heavy = Genome(preset("subtask1"))
    res = evaluate_fitness(heavy, token_corpus, plan, "accuracy", 0.01)
    assert res.eval_status == "timeout"
    assert token_corpus.documents == before_docs
    for (a, b), (c, d) in zip(plan.folds, before_plan):
        assert np.array_equal(a, c) and np.array_equal(b, d)
    ok = evaluate_fitness(Genome(baseline_spec()), token_corpus, plan, "accuracy", None)
    assert ok.eval_status == "ok"


def test_error_status_is_captured():
    ds = Dataset(["aa bb", "cc dd", "aa cc", "bb dd"], [0, 1, 0, 1], ["0", "1"])
    plan = stratified_kfold(ds, 2, 0)
    bad = Genome(chain([("CountVectorize", {"min_df": 5}), ("SelectPercentile", {"percentile": 6}),
                        ("LogisticRegression", {"C": 1.0})]))
    res = evaluate_fitness(bad, ds, plan, "accuracy", None)
    assert res.eval_status == "error" and "ConfigError" in res.message


def small_search(threads=1, seed=3):
    cfg = SearchConfig(population_size=6, generations=3, cv_folds=3, seed=seed, metric="f1_macro",
                       max_transform_stages=2)
    return run_search(cfg, make_corpus(60, n_classes=3), threads=threads)


def test_search_elitism_determinism_and_threads():
    fp, log, best = small_search()
    fitness = log.best_fitness
    assert all(b >= a for a, b in zip(fitness, fitness[1:]))
    assert len(log.records) == 4
    fp2, log2, best2 = small_search(threads=4)
    assert log.to_json() == log2.to_json()
    assert best.spec.key() == best2.spec.key()
    docs = make_corpus(30, seed=7, n_classes=3).documents
    assert np.array_equal(predict_pipeline(fp, docs)[1], predict_pipeline(fp2, docs)[1])


def test_search_rejects_tiny_data():
    ds = Dataset(["a"] * 5, [0, 1, 0, 1, 0], ["0", "1"])
    with pytest.raises(SearchError):
        run_search(SearchConfig(population_size=2, generations=1), ds)


def test_search_all_invalid_generation_zero():
    cfg = SearchConfig(population_size=4, generations=1, cv_folds=2, eval_timeout_seconds=0)
    with pytest.raises(SearchError):
        run_search(cfg, make_corpus(20))
