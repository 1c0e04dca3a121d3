"""Evaluation protocol: random hyper-parameter search and leave-one-out CV.

One system is held out per fold; the remaining systems drive both the
hyper-parameter search (an inner leave-one-out where each candidate
configuration trains for 100 epochs per inner fold and is scored by the MCC
of the merged validation predictions) and the final fit (120 epochs with
learning-rate decay, ten-member boosting). Detector thresholds are tuned by
exhaustive grid on the training systems; they need no training, so no inner
split is involved.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .baselines import (
    TreeHyperParams,
    asci_build_training,
    select_detector,
    train_asci,
    tree_predict,
    tree_train,
    vote,
)
from .config import DetectorConfig
from .detectors import DETECTOR_ORDER, DetectorTool, decor_god_class, foreign_data_stats
from .evaluation import ConfusionMatrix, EvalReport, scores
from .features import (
    Instance,
    build_system_context,
    extract_feature_envy_instances,
    extract_god_class_instances,
    standardize_fit,
)
from .history import class_cochange_ratio, method_cochange_ratio
from .mlp import (
    ENSEMBLE_SIZE,
    HyperParams,
    MlpEnsemble,
    MlpModel,
    _forward_arrays,
    boosted_predict_matrix,
    fast_train_arrays,
    forward,
    train,
)
from .synth import LabeledSystem


class AntiPattern(str, Enum):
    GOD_CLASS = "god_class"
    FEATURE_ENVY = "feature_envy"


INNER_EPOCHS = 100  # per tuning iteration
FINAL_EPOCHS = 120  # final fit, decay kicks in after epoch 100


# ---------------------------------------------------------------------------
# Search spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MlpSearchSpace:
    """Log-uniform learning rate and L2 weight over 10^-[0, 2.5]; integer
    gamma in [1, 10]; 1..3 hidden layers sized uniformly in [4, 100] with
    each layer capped by the previous one."""

    def sample(self, rng: np.random.Generator) -> HyperParams:
        eta = float(10.0 ** -rng.uniform(0.0, 2.5))
        l2 = float(10.0 ** -rng.uniform(0.0, 2.5))
        gamma = float(rng.integers(1, 11))
        n_layers = int(rng.integers(1, 4))
        sizes = []
        upper = 100
        for _ in range(n_layers):
            size = int(rng.integers(4, upper + 1))
            sizes.append(size)
            upper = size
        return HyperParams(eta=eta, l2=l2, gamma=gamma, hidden_sizes=tuple(sizes))


@dataclass(frozen=True)
class TreeSearchSpace:
    """Uniform feature-sampling mode and integer ranges; log-uniform split
    fraction over 10^-[1, 4]."""

    def sample(self, rng: np.random.Generator) -> TreeHyperParams:
        return TreeHyperParams(
            max_features=("sqrt", "log2", "all")[int(rng.integers(3))],
            max_depth=int(rng.integers(1, 11)) * 10,
            min_samples_leaf=int(rng.integers(1, 6)),
            min_samples_split=float(10.0 ** -rng.uniform(1.0, 4.0)),
        )


HIST_GC_ALPHA_GRID = tuple(round(0.5 * i, 1) for i in range(41))  # 0..20 % by 0.5
HIST_FE_BETA_GRID = tuple(100 + 5 * i for i in range(41))  # 100..300 % by 5
INCODE_THRESHOLD_GRID = tuple(range(1, 6))  # 1..5 for each of T_ATFD, T_LAA, T_FDP


@dataclass(frozen=True)
class DetectorParams:
    hist_gc_alpha: float = 10.0
    hist_fe_beta: float = 150.0
    t_atfd: int = 3
    t_laa: int = 3
    t_fdp: int = 3


# ---------------------------------------------------------------------------
# Per-system precomputation
# ---------------------------------------------------------------------------


@dataclass
class SystemArtifacts:
    """Labeled instances plus threshold-independent detector signals."""

    system: LabeledSystem
    gc_instances: list[Instance]
    fe_instances: list[Instance]
    gc_entities: list[str]
    gc_decor: set[str]
    gc_cochange: dict[str, float]
    gc_concept_flag: set[str]
    fe_method_stats: dict[str, object]
    fe_cochange: dict[object, float]
    fe_move: set[object]

    def instances(self, pattern: AntiPattern) -> list[Instance]:
        return self.gc_instances if pattern is AntiPattern.GOD_CLASS else self.fe_instances

    def labels(self, pattern: AntiPattern) -> list[int]:
        return [inst.label for inst in self.instances(pattern)]


def build_artifacts(system: LabeledSystem, config: DetectorConfig = DetectorConfig()) -> SystemArtifacts:
    ctx = build_system_context(system.model, system.history, config)
    gc_instances = extract_god_class_instances(ctx, system.god_classes)
    fe_instances = extract_feature_envy_instances(ctx, system.feature_envy)
    gc_entities = [inst.entity for inst in gc_instances]
    decor = decor_god_class(system.model, config, ctx.profiles, ctx.thresholds)
    cochange = {name: class_cochange_ratio(name, system.history) for name in gc_entities}
    concept_flag = {name for name in gc_entities if len(ctx.concepts[name]) >= 1}
    method_ids = {pair.method_id for pair in ctx.candidates}
    method_stats = {mid: foreign_data_stats(system.model.method(mid)) for mid in method_ids}
    fe_cochange = {
        pair: method_cochange_ratio(pair.method_id, pair.envied_class, system.history, config.cochange_cap)
        for pair in ctx.candidates
    }
    fe_move = {pair for pair in ctx.candidates if ctx.move_report.suggested(pair)}
    return SystemArtifacts(
        system=system,
        gc_instances=gc_instances,
        fe_instances=fe_instances,
        gc_entities=gc_entities,
        gc_decor=decor,
        gc_cochange=cochange,
        gc_concept_flag=concept_flag,
        fe_method_stats=method_stats,
        fe_cochange=fe_cochange,
        fe_move=fe_move,
    )


def detector_verdicts(
    art: SystemArtifacts, pattern: AntiPattern, tool: DetectorTool, params: DetectorParams
) -> list[bool]:
    """Verdict vector aligned with the system's instance order."""
    if pattern is AntiPattern.GOD_CLASS:
        if tool is DetectorTool.RULE_CARD:
            return [name in art.gc_decor for name in art.gc_entities]
        if tool is DetectorTool.HIST:
            limit = params.hist_gc_alpha / 100.0
            return [art.gc_cochange[name] > limit for name in art.gc_entities]
        return [name in art.gc_concept_flag for name in art.gc_entities]
    pairs = [inst.entity for inst in art.fe_instances]
    if tool is DetectorTool.RULE_CARD:
        out = []
        for pair in pairs:
            stats = art.fe_method_stats[pair.method_id]
            out.append(
                stats.envied_class == pair.envied_class
                and stats.foreign_atfd > params.t_atfd
                and stats.own_share < 1.0 / params.t_laa
                and stats.fdp <= params.t_fdp
            )
        return out
    if tool is DetectorTool.HIST:
        limit = 1.0 + params.hist_fe_beta / 100.0
        return [art.fe_cochange[pair] > limit for pair in pairs]
    return [pair in art.fe_move for pair in pairs]


def merged_detector_mcc(
    arts: list[SystemArtifacts], pattern: AntiPattern, tool: DetectorTool, params: DetectorParams
) -> float:
    matrix = ConfusionMatrix()
    for art in arts:
        matrix = matrix + ConfusionMatrix.from_predictions(
            art.labels(pattern), detector_verdicts(art, pattern, tool, params)
        )
    return scores(matrix).mcc


def tune_detectors(arts: list[SystemArtifacts], pattern: AntiPattern) -> DetectorParams:
    """Exhaustive grid over the published ranges, maximizing merged MCC on the
    given systems; first grid point wins ties for determinism."""
    params = DetectorParams()
    if pattern is AntiPattern.GOD_CLASS:
        best = None
        for alpha in HIST_GC_ALPHA_GRID:
            mcc = merged_detector_mcc(arts, pattern, DetectorTool.HIST, replace(params, hist_gc_alpha=alpha))
            if best is None or mcc > best[0]:
                best = (mcc, alpha)
        return replace(params, hist_gc_alpha=best[1])
    best_beta = None
    for beta in HIST_FE_BETA_GRID:
        mcc = merged_detector_mcc(arts, pattern, DetectorTool.HIST, replace(params, hist_fe_beta=beta))
        if best_beta is None or mcc > best_beta[0]:
            best_beta = (mcc, beta)
    best_incode = None
    for t_atfd in INCODE_THRESHOLD_GRID:
        for t_laa in INCODE_THRESHOLD_GRID:
            for t_fdp in INCODE_THRESHOLD_GRID:
                candidate = replace(params, t_atfd=t_atfd, t_laa=t_laa, t_fdp=t_fdp)
                mcc = merged_detector_mcc(arts, pattern, DetectorTool.RULE_CARD, candidate)
                if best_incode is None or mcc > best_incode[0]:
                    best_incode = (mcc, t_atfd, t_laa, t_fdp)
    return DetectorParams(
        hist_fe_beta=best_beta[1],
        t_atfd=best_incode[1],
        t_laa=best_incode[2],
        t_fdp=best_incode[3],
    )


# ---------------------------------------------------------------------------
# Random search
# ---------------------------------------------------------------------------


def random_search(space, inner_systems, trials, seed, evaluate_config):
    """Sample `trials` configurations and return the one with the best score
    from `evaluate_config(config, inner_systems, trial_index)`; ties keep the
    earlier trial. Deterministic given the seed."""
    rng = np.random.default_rng(seed)
    best = None
    for trial in range(trials):
        config = space.sample(rng)
        score = evaluate_config(config, inner_systems, trial)
        if best is None or score > best[0]:
            best = (score, config)
    if best is None:
        raise ValueError("random_search needs at least one trial")
    return best[1]


def mlp_inner_loo_mcc(
    hp: HyperParams,
    arts: list[SystemArtifacts],
    pattern: AntiPattern,
    seed,
    trial: int,
    dtype=np.float64,
) -> float:
    """Inner leave-one-out: train 100 epochs on all-but-one system, predict the
    held-out one, merge every fold's predictions into a single MCC."""
    matrix = ConfusionMatrix()
    for fold, val_art in enumerate(arts):
        train_instances = [
            inst for art in arts if art is not val_art for inst in art.instances(pattern)
        ]
        model = train(
            train_instances,
            hp,
            seed=(_seed_int(seed), trial, fold),
            epochs=INNER_EPOCHS,
            dtype=dtype,
        )
        X = np.array([inst.features.values for inst in val_art.instances(pattern)], dtype=dtype)
        probs = forward(model, X)
        matrix = matrix + ConfusionMatrix.from_predictions(
            val_art.labels(pattern), [p > 0.5 for p in probs]
        )
    return scores(matrix).mcc


def _seed_int(seed) -> int:
    if isinstance(seed, tuple):
        value = 0
        for part in seed:
            value = value * 1_000_003 + int(part)
        return value & 0x7FFFFFFF
    return int(seed)


def _instance_matrix(instances: list[Instance], dtype) -> tuple[np.ndarray, np.ndarray]:
    X = np.array([inst.features.values for inst in instances], dtype=dtype)
    y = np.array([inst.label for inst in instances], dtype=dtype)
    return X, y


def _fit_standardizer(X: np.ndarray):
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    scale = np.where(stds > 0, stds, 1.0)
    return means, stds, scale


def _prepare_inner_folds(arts: list[SystemArtifacts], pattern: AntiPattern, dtype):
    """Standardized (train, validation) arrays for every inner fold, computed
    once per outer fold and reused by all search trials."""
    raw = [_instance_matrix(art.instances(pattern), dtype) for art in arts]
    folds = []
    for v in range(len(arts)):
        X_train = np.concatenate([X for i, (X, _) in enumerate(raw) if i != v])
        y_train = np.concatenate([y for i, (_, y) in enumerate(raw) if i != v])
        means, _, scale = _fit_standardizer(X_train)
        X_val, y_val = raw[v]
        folds.append(
            (
                ((X_train - means) / scale).astype(dtype),
                y_train,
                ((X_val - means) / scale).astype(dtype),
                y_val,
            )
        )
    return folds


def _fast_inner_mcc(hp: HyperParams, folds, seed, trial: int, dtype) -> float:
    """Score one configuration: each inner fold trains INNER_EPOCHS epochs on
    its precomputed arrays; merged validation predictions give the MCC.
    A prediction is positive exactly when the logit is positive."""
    matrix = ConfusionMatrix()
    for fold, (X_train, y_train, X_val, y_val) in enumerate(folds):
        weights, biases = fast_train_arrays(
            X_train,
            y_train,
            hp,
            seed=(_seed_int(seed), trial, fold),
            epochs=INNER_EPOCHS,
            dtype=dtype,
        )
        _, z = _forward_arrays(weights, biases, X_val)
        matrix = matrix + ConfusionMatrix.from_predictions(y_val > 0.5, z > 0.0)
    return scores(matrix).mcc


# ---------------------------------------------------------------------------
# Pipelines
# ---------------------------------------------------------------------------


class MlpPipeline:
    """The learned aggregator: tuned by random search, fitted as a ten-member
    boosted ensemble. Fold training and member training run vectorized."""

    name = "mlp"

    def __init__(self, pattern: AntiPattern, dtype=np.float64):
        self.pattern = pattern
        self.dtype = dtype

    def tune(self, train_arts, trials, seed) -> HyperParams:
        folds = _prepare_inner_folds(train_arts, self.pattern, self.dtype)
        return random_search(
            MlpSearchSpace(),
            train_arts,
            trials,
            seed,
            lambda hp, arts, trial: _fast_inner_mcc(hp, folds, seed, trial, self.dtype),
        )

    def fit(self, train_arts, hp: HyperParams, seed) -> MlpEnsemble:
        instances = [inst for art in train_arts for inst in art.instances(self.pattern)]
        norm_stats = standardize_fit([inst.features for inst in instances])
        X, y = _instance_matrix(instances, self.dtype)
        means = np.asarray(norm_stats.means, dtype=self.dtype)
        stds = np.asarray(norm_stats.stds, dtype=self.dtype)
        scale = np.where(stds > 0, stds, 1.0).astype(self.dtype)
        Xs = (X - means) / scale
        schema = instances[0].features.schema
        members = []
        for member in range(ENSEMBLE_SIZE):
            weights, biases = fast_train_arrays(
                Xs,
                y,
                hp,
                seed=(_seed_int(seed), member),
                epochs=FINAL_EPOCHS,
                dtype=self.dtype,
            )
            members.append(
                MlpModel(schema=schema, hyper=hp, weights=weights, biases=biases, norm_stats=norm_stats)
            )
        return MlpEnsemble(members=members, norm_stats=norm_stats)

    def predict(self, ensemble: MlpEnsemble, art: SystemArtifacts) -> list[bool]:
        X = np.array([inst.features.values for inst in art.instances(self.pattern)], dtype=self.dtype)
        probs = boosted_predict_matrix(ensemble, X)
        return [p > 0.5 for p in probs]


class DetectorPipeline:
    """A standalone detector family, grid-tuned on the training systems."""

    def __init__(self, pattern: AntiPattern, tool: DetectorTool):
        self.pattern = pattern
        self.tool = tool
        self.name = tool.value.lower()

    def tune(self, train_arts, trials, seed) -> DetectorParams:
        return tune_detectors(train_arts, self.pattern)

    def fit(self, train_arts, params: DetectorParams, seed) -> DetectorParams:
        return params

    def predict(self, params: DetectorParams, art: SystemArtifacts) -> list[bool]:
        return detector_verdicts(art, self.pattern, self.tool, params)


class VotePipeline:
    """Policy-k vote over the three tuned detectors; k itself is tuned unless
    pinned at construction."""

    name = "vote"

    def __init__(self, pattern: AntiPattern, k: int | None = None):
        self.pattern = pattern
        self.fixed_k = k

    def _verdict_matrix(self, art, params):
        return [
            detector_verdicts(art, self.pattern, tool, params) for tool in DETECTOR_ORDER
        ]

    def tune(self, train_arts, trials, seed):
        params = tune_detectors(train_arts, self.pattern)
        if self.fixed_k is not None:
            return (params, self.fixed_k)
        best = None
        for k in (1, 2, 3):
            matrix = ConfusionMatrix()
            for art in train_arts:
                verdict_rows = self._verdict_matrix(art, params)
                merged = [vote(column, k) for column in zip(*verdict_rows)]
                matrix = matrix + ConfusionMatrix.from_predictions(art.labels(self.pattern), merged)
            mcc = scores(matrix).mcc
            if best is None or mcc > best[0]:
                best = (mcc, k)
        return (params, best[1])

    def fit(self, train_arts, config, seed):
        return config

    def predict(self, config, art: SystemArtifacts) -> list[bool]:
        params, k = config
        verdict_rows = self._verdict_matrix(art, params)
        return [vote(column, k) for column in zip(*verdict_rows)]


class AsciPipeline:
    """Detector-selecting decision tree over the same feature vectors,
    boosted over ten seeds."""

    name = "asci"

    def __init__(self, pattern: AntiPattern):
        self.pattern = pattern

    def _features(self, arts):
        return np.array(
            [inst.features.values for art in arts for inst in art.instances(self.pattern)],
            dtype=np.float64,
        )

    def _verdicts_by_tool(self, arts, params):
        return {
            tool: [
                v
                for art in arts
                for v in detector_verdicts(art, self.pattern, tool, params)
            ]
            for tool in DETECTOR_ORDER
        }

    def tune(self, train_arts, trials, seed):
        params = tune_detectors(train_arts, self.pattern)

        def evaluate(hp: TreeHyperParams, arts, trial) -> float:
            matrix = ConfusionMatrix()
            for fold, val_art in enumerate(arts):
                fit_arts = [a for a in arts if a is not val_art]
                X = self._features(fit_arts)
                labels = [label for a in fit_arts for label in a.labels(self.pattern)]
                verdicts = self._verdicts_by_tool(fit_arts, params)
                tool_labels, _ = asci_build_training(labels, verdicts)
                tree = tree_train(X, tool_labels, hp, seed=(_seed_int(seed), trial, fold))
                val_X = self._features([val_art])
                val_verdicts = self._verdicts_by_tool([val_art], params)
                preds = [
                    bool(val_verdicts[tree_predict(tree, val_X[i])][i]) for i in range(len(val_X))
                ]
                matrix = matrix + ConfusionMatrix.from_predictions(val_art.labels(self.pattern), preds)
            return scores(matrix).mcc

        hp = random_search(TreeSearchSpace(), train_arts, trials, seed, evaluate)
        return (params, hp)

    def fit(self, train_arts, config, seed) -> tuple:
        params, hp = config
        X = self._features(train_arts)
        labels = [label for art in train_arts for label in art.labels(self.pattern)]
        verdicts = self._verdicts_by_tool(train_arts, params)
        model = train_asci(X, labels, verdicts, hp, seed=_seed_int(seed))
        return (params, model)

    def predict(self, config, art: SystemArtifacts) -> list[bool]:
        params, model = config
        X = self._features([art])
        verdicts = self._verdicts_by_tool([art], params)
        out = []
        for i in range(len(X)):
            tool = select_detector(model.trees, X[i])
            out.append(bool(verdicts[tool][i]))
        return out


# ---------------------------------------------------------------------------
# Leave-one-out evaluation
# ---------------------------------------------------------------------------


def leave_one_out(
    systems_or_arts,
    pipeline,
    trials: int = 200,
    seed=0,
    config: DetectorConfig = DetectorConfig(),
) -> EvalReport:
    """Hold each system out in turn: tune on the rest, fit on the rest,
    evaluate on the held-out system. Needs at least two systems."""
    arts = _as_artifacts(systems_or_arts, config)
    if len(arts) < 2:
        raise ValueError("leave-one-out needs at least two systems")
    matrices = {}
    for index, held in enumerate(arts):
        train_arts = [a for a in arts if a is not held]
        fold_seed = (_seed_int(seed), index)
        tuned = pipeline.tune(train_arts, trials, fold_seed)
        fitted = pipeline.fit(train_arts, tuned, fold_seed)
        predictions = pipeline.predict(fitted, held)
        matrices[held.system.system_id] = ConfusionMatrix.from_predictions(
            held.labels(pipeline.pattern), predictions
        )
    return EvalReport.from_matrices(matrices)


def _as_artifacts(systems_or_arts, config) -> list[SystemArtifacts]:
    out = []
    for item in systems_or_arts:
        out.append(item if isinstance(item, SystemArtifacts) else build_artifacts(item, config))
    return out


def make_pipeline(method: str, pattern: AntiPattern, dtype=np.float64, k: int | None = None):
    if method == "mlp":
        return MlpPipeline(pattern, dtype=dtype)
    if method == "vote":
        return VotePipeline(pattern, k=k)
    if method == "asci":
        return AsciPipeline(pattern)
    if method in ("rule_card", "rule-card"):
        return DetectorPipeline(pattern, DetectorTool.RULE_CARD)
    if method == "hist":
        return DetectorPipeline(pattern, DetectorTool.HIST)
    if method == "jdeodorant":
        return DetectorPipeline(pattern, DetectorTool.JDEODORANT)
    raise ValueError(f"unknown method: {method!r}")


def benchmark(
    systems, pattern: AntiPattern, methods, trials: int = 200, seed=0, dtype=np.float64
) -> dict[str, EvalReport]:
    """Leave-one-out reports for several methods over shared artifacts."""
    arts = [build_artifacts(s) for s in systems]
    reports = {}
    for method in methods:
        pipeline = make_pipeline(method, pattern, dtype=dtype)
        reports[method] = leave_one_out(arts, pipeline, trials=trials, seed=seed)
    return reports
