import numpy as np
import pytest

from smellkit.detectors import DetectorTool
from smellkit.evaluation import ConfusionMatrix
from smellkit.protocol import (
    HIST_FE_BETA_GRID,
    HIST_GC_ALPHA_GRID,
    AntiPattern,
    DetectorPipeline,
    MlpPipeline,
    MlpSearchSpace,
    TreeSearchSpace,
    VotePipeline,
    build_artifacts,
    detector_verdicts,
    leave_one_out,
    make_pipeline,
    mlp_inner_loo_mcc,
    random_search,
    tune_detectors,
    DetectorParams,
)
from smellkit.synth import SynthParams, as_labeled, generate_corpus


MIN_RATE = 10.0**-2.5


def small_corpus(seed=0, systems=3, classes=40):
    params = SynthParams(n_classes=classes, n_commits=60)
    return [as_labeled(s) for s in generate_corpus(seed, systems, params)]


def test_mlp_search_space_respects_published_ranges():
    rng = np.random.default_rng(0)
    space = MlpSearchSpace()
    for _ in range(300):
        hp = space.sample(rng)
        assert MIN_RATE <= hp.eta <= 1.0
        assert MIN_RATE <= hp.l2 <= 1.0
        assert hp.gamma in {float(g) for g in range(1, 11)}
        assert 1 <= len(hp.hidden_sizes) <= 3
        previous = 100
        for size in hp.hidden_sizes:
            assert 4 <= size <= previous
            previous = size


def test_tree_search_space_respects_published_ranges():
    rng = np.random.default_rng(1)
    space = TreeSearchSpace()
    for _ in range(300):
        hp = space.sample(rng)
        assert hp.max_features in ("sqrt", "log2", "all")
        assert hp.max_depth in set(range(10, 101, 10))
        assert 1 <= hp.min_samples_leaf <= 5
        assert 1e-4 <= hp.min_samples_split <= 1e-1


def test_detector_grids_match_published_ranges():
    assert HIST_GC_ALPHA_GRID[0] == 0.0 and HIST_GC_ALPHA_GRID[-1] == 20.0
    assert len(HIST_GC_ALPHA_GRID) == 41
    assert HIST_FE_BETA_GRID[0] == 100 and HIST_FE_BETA_GRID[-1] == 300
    assert len(HIST_FE_BETA_GRID) == 41


def test_random_search_single_trial_returns_that_sample():
    space = MlpSearchSpace()
    rng = np.random.default_rng(99)
    expected = space.sample(rng)
    got = random_search(space, [], trials=1, seed=99, evaluate_config=lambda hp, arts, t: 0.0)
    assert got == expected


def test_random_search_returns_dominant_configuration():
    class RiggedSpace:
        def __init__(self):
            self.count = 0

        def sample(self, rng):
            self.count += 1
            return f"config-{self.count}"

    def evaluate(config, arts, trial):
        return 1.0 if config == "config-4" else 0.1 * trial / 100.0

    got = random_search(RiggedSpace(), [], trials=8, seed=0, evaluate_config=evaluate)
    assert got == "config-4"


def test_random_search_deterministic():
    space = TreeSearchSpace()
    evaluate = lambda hp, arts, t: hp.min_samples_split
    a = random_search(space, [], trials=20, seed=5, evaluate_config=evaluate)
    b = random_search(space, [], trials=20, seed=5, evaluate_config=evaluate)
    assert a == b


def test_detector_tuning_improves_or_matches_defaults():
    corpus = small_corpus()
    arts = [build_artifacts(s) for s in corpus]
    for pattern in AntiPattern:
        tuned = tune_detectors(arts, pattern)
        if pattern is AntiPattern.GOD_CLASS:
            assert tuned.hist_gc_alpha in HIST_GC_ALPHA_GRID
        else:
            assert tuned.hist_fe_beta in HIST_FE_BETA_GRID
            assert all(1 <= t <= 5 for t in (tuned.t_atfd, tuned.t_laa, tuned.t_fdp))


def test_leave_one_out_requires_two_systems():
    corpus = small_corpus(systems=1)
    with pytest.raises(ValueError):
        leave_one_out(corpus, DetectorPipeline(AntiPattern.GOD_CLASS, DetectorTool.HIST), trials=1)


def test_leave_one_out_overall_is_fold_sum():
    corpus = small_corpus(systems=3)
    report = leave_one_out(corpus, DetectorPipeline(AntiPattern.GOD_CLASS, DetectorTool.RULE_CARD), trials=1)
    total = ConfusionMatrix()
    for result in report.per_system.values():
        total = total + result.matrix
    assert report.overall_matrix == total
    assert set(report.per_system) == {s.system_id for s in corpus}


def test_leave_one_out_identical_systems_score_identically():
    base = small_corpus(systems=1)[0]
    import dataclasses

    clone = dataclasses.replace(base, system_id="clone")
    report = leave_one_out([base, clone], DetectorPipeline(AntiPattern.FEATURE_ENVY, DetectorTool.RULE_CARD), trials=1)
    a, b = report.per_system.values()
    assert a.matrix == b.matrix


class AlwaysNegativePipeline:
    pattern = AntiPattern.GOD_CLASS
    name = "never"

    def tune(self, train_arts, trials, seed):
        return None

    def fit(self, train_arts, config, seed):
        return None

    def predict(self, fitted, art):
        return [False] * len(art.instances(self.pattern))


def test_always_negative_pipeline_has_zero_recall():
    report = leave_one_out(small_corpus(systems=2), AlwaysNegativePipeline(), trials=1)
    assert report.overall.scores.recall == 0.0
    assert report.overall.scores.precision is None


class LeakCanaryPipeline:
    """Flags everything iff the held-out system leaked into tune/fit."""

    pattern = AntiPattern.GOD_CLASS
    name = "canary"

    def __init__(self):
        self.seen = []

    def tune(self, train_arts, trials, seed):
        return {art.system.system_id for art in train_arts}

    def fit(self, train_arts, config, seed):
        assert config == {art.system.system_id for art in train_arts}
        return config

    def predict(self, fitted, art):
        leaked = art.system.system_id in fitted
        self.seen.append((art.system.system_id, sorted(fitted)))
        return [leaked] * len(art.instances(self.pattern))


def test_leave_one_out_never_leaks_the_held_out_system():
    corpus = small_corpus(systems=4)
    pipeline = LeakCanaryPipeline()
    report = leave_one_out(corpus, pipeline, trials=1)
    # if the held-out system had been visible during tuning/fitting, the
    # canary would flood that fold with positive predictions
    assert report.overall_matrix.m_pos == 0
    for held_id, train_ids in pipeline.seen:
        assert held_id not in train_ids
        assert len(train_ids) == 3


def test_mlp_pipeline_leave_one_out_smoke():
    corpus = small_corpus(systems=3, classes=50)
    pipeline = MlpPipeline(AntiPattern.GOD_CLASS, dtype=np.float32)
    report = leave_one_out(corpus, pipeline, trials=2, seed=0)
    assert set(report.per_system) == {s.system_id for s in corpus}
    assert -1.0 <= report.overall.scores.mcc <= 1.0


def test_vote_pipeline_and_fixed_k():
    corpus = small_corpus(systems=3)
    tuned = leave_one_out(corpus, VotePipeline(AntiPattern.GOD_CLASS), trials=1, seed=0)
    fixed = leave_one_out(corpus, VotePipeline(AntiPattern.GOD_CLASS, k=1), trials=1, seed=0)
    assert set(tuned.per_system) == set(fixed.per_system)


def test_vote_union_and_intersection_semantics():
    corpus = small_corpus(systems=2)
    arts = [build_artifacts(s) for s in corpus]
    params = DetectorParams()
    for pattern in AntiPattern:
        for art in arts:
            rows = [detector_verdicts(art, pattern, tool, params) for tool in DetectorTool]
            from smellkit.baselines import vote

            for column in zip(*rows):
                assert vote(column, 1) == any(column)
                assert vote(column, 3) == all(column)
                assert (not vote(column, 2)) or vote(column, 1)
                assert (not vote(column, 3)) or vote(column, 2)


def test_mlp_inner_loo_reference_path():
    corpus = small_corpus(systems=2, classes=30)
    arts = [build_artifacts(s) for s in corpus]
    from smellkit.mlp import HyperParams

    hp = HyperParams(eta=0.1, l2=0.01, gamma=4.0, hidden_sizes=(8,))
    value = mlp_inner_loo_mcc(hp, arts, AntiPattern.GOD_CLASS, seed=0, trial=0, dtype=np.float64)
    assert -1.0 <= value <= 1.0


def test_make_pipeline_names():
    for method in ("mlp", "vote", "asci", "rule-card", "hist", "jdeodorant"):
        pipeline = make_pipeline(method, AntiPattern.GOD_CLASS)
        assert pipeline.pattern is AntiPattern.GOD_CLASS
    with pytest.raises(ValueError):
        make_pipeline("magic", AntiPattern.GOD_CLASS)
