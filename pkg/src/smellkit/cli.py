"""Command-line interface.

Subcommands: detect, train, tune, evaluate, oracle-merge, synth, baseline,
convert-log. Validation problems in any input exit with status 2.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .code_model import derive_accessor_flags, load_code_facts
from .config import DetectorConfig
from .errors import SmellkitError
from .evaluation import report_table
from .features import (
    build_system_context,
    entity_key,
    extract_feature_envy_instances,
    extract_god_class_instances,
)
from .history import ChangeHistory, convert_git_name_only_log, load_history
from .mlp import HyperParams, boosted_predict, load_ensemble, save_ensemble, train_ensemble
from .oracle import oracle_merge, read_ballots, write_labels
from .protocol import (
    AntiPattern,
    MlpSearchSpace,
    _fast_inner_mcc,
    _prepare_inner_folds,
    build_artifacts,
    leave_one_out,
    make_pipeline,
    random_search,
)
from .synth import SynthParams, generate_corpus, read_corpus, write_corpus

PATTERNS = {"god-class": AntiPattern.GOD_CLASS, "feature-envy": AntiPattern.FEATURE_ENVY}


def _read(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _write_out(text: str, out: str | None):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_system(facts_path: str, history_path: str | None):
    model = derive_accessor_flags(load_code_facts(_read(facts_path)))
    if history_path:
        history = load_history(_read(history_path))
    else:
        history = ChangeHistory(system_id=model.system_id, commits=())
    return model, history


def _detect(args) -> int:
    pattern = PATTERNS[args.pattern]
    config = DetectorConfig.from_file(args.config) if args.config else DetectorConfig()
    model, history = _load_system(args.facts, args.history)
    ensemble = load_ensemble(args.model)
    ctx = build_system_context(model, history, config)
    if pattern is AntiPattern.GOD_CLASS:
        instances = extract_god_class_instances(ctx)
    else:
        instances = extract_feature_envy_instances(ctx)
    lines = ["entity,probability,flagged"]
    for inst in instances:
        probability, flagged = boosted_predict(ensemble, inst.features)
        lines.append(f'"{entity_key(inst.entity)}",{probability:.6f},{int(flagged)}')
    _write_out("\n".join(lines) + "\n", args.out)
    return 0


def _extract_corpus_instances(corpus_dir: str, pattern: AntiPattern):
    instances = []
    for system in read_corpus(corpus_dir):
        art = build_artifacts(system)
        instances.extend(art.instances(pattern))
    return instances


def _train(args) -> int:
    pattern = PATTERNS[args.pattern]
    hp = HyperParams.from_dict(json.loads(_read(args.hp)))
    instances = _extract_corpus_instances(args.corpus, pattern)
    ensemble = train_ensemble(instances, hp, seed=args.seed)
    save_ensemble(ensemble, args.out)
    print(f"trained ensemble on {len(instances)} instances -> {args.out}")
    return 0


def _tune(args) -> int:
    pattern = PATTERNS[args.pattern]
    systems = read_corpus(args.corpus)
    arts = [build_artifacts(s) for s in systems]
    folds = _prepare_inner_folds(arts, pattern, np.float32)
    hp = random_search(
        MlpSearchSpace(),
        arts,
        args.trials,
        args.seed,
        lambda candidate, _arts, trial: _fast_inner_mcc(candidate, folds, args.seed, trial, np.float32),
    )
    text = json.dumps(hp.to_dict(), indent=1) + "\n"
    _write_out(text, args.out)
    return 0


def _evaluate(args) -> int:
    pattern = PATTERNS[args.pattern]
    systems = read_corpus(args.corpus)
    pipeline = make_pipeline(args.method, pattern, dtype=np.float32)
    report = leave_one_out(systems, pipeline, trials=args.trials, seed=args.seed)
    _write_out(report_table(report), args.out)
    return 0


def _oracle_merge(args) -> int:
    labels = oracle_merge(read_ballots(_read(args.ballots)))
    _write_out(write_labels(labels), args.out)
    return 0


def _synth(args) -> int:
    params = SynthParams(
        n_classes=args.classes,
        god_class_rate=args.god_rate,
        feature_envy_rate=args.fe_rate,
        n_commits=args.commits,
    )
    corpus = generate_corpus(args.seed, args.systems, params)
    write_corpus(corpus, args.out)
    print(f"wrote {len(corpus)} systems to {args.out}")
    return 0


def _baseline(args) -> int:
    pattern = PATTERNS[args.pattern]
    systems = read_corpus(args.corpus)
    if args.baseline_method == "vote":
        pipeline = make_pipeline("vote", pattern, k=args.k)
    else:
        pipeline = make_pipeline("asci", pattern)
    report = leave_one_out(systems, pipeline, trials=args.trials, seed=args.seed)
    _write_out(report_table(report), args.out)
    return 0


def _convert_log(args) -> int:
    _write_out(convert_git_name_only_log(_read(args.log), args.system_id), args.out)
    return 0


def _verdicts(args) -> int:
    from .detectors import DETECTOR_ORDER
    from .protocol import DetectorParams, detector_verdicts
    from .synth import LabeledSystem

    pattern = PATTERNS[args.pattern]
    config = DetectorConfig.from_file(args.config) if args.config else DetectorConfig()
    model, history = _load_system(args.facts, args.history)
    system = LabeledSystem(
        system_id=model.system_id, model=model, history=history, god_classes=set(), feature_envy=set()
    )
    art = build_artifacts(system, config)
    params = DetectorParams(
        hist_gc_alpha=config.hist_gc_alpha,
        hist_fe_beta=config.hist_fe_beta,
        t_atfd=config.t_atfd,
        t_laa=config.t_laa,
        t_fdp=config.t_fdp,
    )
    lines = ["tool,anti_pattern,entity,flagged"]
    entities = [entity_key(inst.entity) for inst in art.instances(pattern)]
    for tool in DETECTOR_ORDER:
        flags = detector_verdicts(art, pattern, tool, params)
        for entity, flagged in zip(entities, flags):
            lines.append(f'{tool.value},{pattern.value},"{entity}",{int(flagged)}')
    _write_out("\n".join(lines) + "\n", args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="smellkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="flag entities of one system with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--facts", required=True)
    p.add_argument("--history")
    p.add_argument("--pattern", required=True, choices=PATTERNS)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=_detect)

    p = sub.add_parser("train", help="train the boosted MLP ensemble on a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--pattern", required=True, choices=PATTERNS)
    p.add_argument("--hp", required=True, help="hyper-parameter JSON file")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_train)

    p = sub.add_parser("tune", help="random hyper-parameter search with inner leave-one-out")
    p.add_argument("--corpus", required=True)
    p.add_argument("--pattern", required=True, choices=PATTERNS)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_tune)

    p = sub.add_parser("evaluate", help="leave-one-out evaluation over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--pattern", required=True, choices=PATTERNS)
    p.add_argument("--loocv", action="store_true", help="leave-one-out protocol (the default and only mode)")
    p.add_argument("--method", default="mlp", choices=["mlp", "vote", "asci", "rule-card", "hist", "jdeodorant"])
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=_evaluate)

    p = sub.add_parser("oracle-merge", help="merge reviewer ballots into labels")
    p.add_argument("--ballots", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_oracle_merge)

    p = sub.add_parser("synth", help="generate a labeled synthetic corpus")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--classes", type=int, default=200)
    p.add_argument("--systems", type=int, default=8)
    p.add_argument("--god-rate", type=float, default=0.05)
    p.add_argument("--fe-rate", type=float, default=0.05)
    p.add_argument("--commits", type=int, default=250)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_synth)

    p = sub.add_parser("baseline", help="evaluate a competing ensemble method")
    baseline_sub = p.add_subparsers(dest="baseline_method", required=True)
    for method in ("vote", "asci"):
        bp = baseline_sub.add_parser(method)
        bp.add_argument("--corpus", required=True)
        bp.add_argument("--pattern", required=True, choices=PATTERNS)
        if method == "vote":
            bp.add_argument("--k", type=int, default=None, help="fixed vote policy; tuned when omitted")
        bp.add_argument("--trials", type=int, default=200)
        bp.add_argument("--seed", type=int, default=0)
        bp.add_argument("--out")
        bp.set_defaults(func=_baseline)

    p = sub.add_parser("convert-log", help="convert `git log --name-only` output to the history format")
    p.add_argument("--log", required=True)
    p.add_argument("--system-id", required=True)
    p.add_argument("--out")
    p.set_defaults(func=_convert_log)

    p = sub.add_parser("verdicts", help="standalone detector verdicts for one system")
    p.add_argument("--facts", required=True)
    p.add_argument("--history")
    p.add_argument("--pattern", required=True, choices=PATTERNS)
    p.add_argument("--config")
    p.add_argument("--out")
    p.set_defaults(func=_verdicts)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SmellkitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
