"""Command-line surface: stats, attack-gen, train, recommend, evaluate, report.

Runs are driven by an INI-style config file (flat key = value pairs in
sections) so that every run can be archived and reproduced exactly. All
file outputs are written atomically (temp file + rename) and accompanied
by a manifest recording the resolved config, derived seeds and artifact
hashes. Exit codes: 0 success, 1 runtime/data error, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import dataclasses
import hashlib
import io
import json
import logging
import os
import sys
import tempfile

from . import __version__
from .attacks import AttackError, AttackKind, AttackSpec, generate
from .classifiers import TrainConfig, TrainingError, save_model, train_classifier
from .corpus import CorpusError, build_vocabulary, corpus_stats, parse_dataset_file, serialize_corpus
from .evaluation import EvaluationError, RunConfig, improvement_vs_baseline, run_pipeline
from .recommender import EmbeddingError, build_profiles, compute_top_k_lists, deterministic_embeddings

log = logging.getLogger("tagsec")


class ConfigError(ValueError):
    """Invalid or unknown configuration content (exit code 2)."""


# section -> key -> (parser, default); None default means required when used
_SCHEMA = {
    "dataset": {
        "path": (str, None),
    },
    "attack": {
        "kind": (str, "overload"),
        "ratio": (float, 0.1),
        "popular_tag_pool": (int, 75),
        "popular_resource_pool": (int, 100),
        "max_size": (int, 50),
        "bogus_resource": (str, "bogus-item"),
        "target_resource": (str, ""),
        "seed": (int, 0),
    },
    "train": {
        "classifier": (str, "nb"),
        "seed": (int, 0),
        "learning_rate": (float, 0.001),
        "batch_size": (int, 32),
        "max_epochs": (int, 100),
        "early_stop_tolerance": (float, 0.01),
        "validation_split": (float, 0.1),
        "svm_c": (float, 1.0),
        "svm_iterations": (int, 200),
        "svm_learning_rate": (float, 0.5),
        "nb_smoothing": (float, 1.0),
        "nn_embed_dim": (int, 25),
        "nn_hidden_dim": (int, 200),
        "nn_dense_dim": (int, 50),
        "sequence_length": (int, 50),
        "nn_dtype": (str, "float32"),
    },
    "run": {
        "classifiers": (str, "none"),
        "injection_ratios": (str, "0.001,0.005,0.01,0.05,0.10"),
        "training_fake_ratio": (float, 0.30),
        "folds": (int, 10),
        "repetitions": (int, 5),
        "k": (int, 15),
        "master_seed": (int, 0),
        "embedding_dim": (int, 50),
        "user_sample": (str, ""),
    },
    "output": {
        "dir": (str, "out"),
    },
}


def load_config(path) -> dict:
    """Parse and validate the config file against the schema, filling defaults."""
    parser = configparser.ConfigParser()
    read = parser.read(path, encoding="utf-8")
    if not read:
        raise ConfigError(f"config file {path!r} not found or unreadable")
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _SCHEMA[section]:
                raise ConfigError(f"unknown config key {key!r} in section [{section}]")
    resolved: dict[str, dict] = {}
    for section, keys in _SCHEMA.items():
        resolved[section] = {}
        for key, (cast, default) in keys.items():
            if parser.has_option(section, key):
                raw = parser.get(section, key)
                try:
                    resolved[section][key] = cast(raw)
                except ValueError as exc:
                    raise ConfigError(f"config key {key!r} in [{section}]: cannot parse {raw!r}") from exc
            else:
                resolved[section][key] = default
    return resolved


def _require(cfg: dict, section: str, key: str):
    value = cfg[section][key]
    if value is None:
        raise ConfigError(f"config key {key!r} in [{section}] is required for this command")
    return value


def _attack_kind(name: str) -> AttackKind:
    try:
        return AttackKind(name.lower())
    except ValueError:
        raise ConfigError(f"unknown attack kind {name!r} (expected overload or piggyback)") from None


def _train_config(cfg: dict, seed_override=None) -> TrainConfig:
    t = cfg["train"]
    return TrainConfig(
        seed=seed_override if seed_override is not None else t["seed"],
        learning_rate=t["learning_rate"],
        batch_size=t["batch_size"],
        max_epochs=t["max_epochs"],
        early_stop_tolerance=t["early_stop_tolerance"],
        validation_split=t["validation_split"],
        svm_c=t["svm_c"],
        svm_iterations=t["svm_iterations"],
        svm_learning_rate=t["svm_learning_rate"],
        nb_smoothing=t["nb_smoothing"],
        nn_embed_dim=t["nn_embed_dim"],
        nn_hidden_dim=t["nn_hidden_dim"],
        nn_dense_dim=t["nn_dense_dim"],
        sequence_length=t["sequence_length"],
        nn_dtype=t["nn_dtype"],
    )


def _ratio_list(raw: str) -> tuple[float, ...]:
    try:
        ratios = tuple(float(x) for x in raw.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse injection ratio list {raw!r}") from exc
    if not ratios:
        raise ConfigError("injection ratio list is empty")
    return ratios


# ---------------------------------------------------------------------------
# atomic output helpers
# ---------------------------------------------------------------------------

def _atomic_write(path: str, data: str) -> str:
    """Write text atomically; returns the sha256 of the written bytes."""
    payload = data.encode("utf-8")
    directory = os.path.dirname(path) or "."
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(payload)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return hashlib.sha256(payload).hexdigest()


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_manifest(out_dir: str, command: str, config: dict, seeds: dict, artifacts: dict) -> None:
    manifest = {
        "tool": {"name": "tagsec", "version": __version__},
        "command": command,
        "config": config,
        "seeds": seeds,
        "artifacts": artifacts,
    }
    _atomic_write(os.path.join(out_dir, "manifest.json"), _json_text(manifest))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_stats(args) -> int:
    corpus = parse_dataset_file(args.dataset)
    print(json.dumps(corpus_stats(corpus), indent=2, sort_keys=True))
    return 0


def _spec_from_config(cfg: dict, ratio: float, seed: int) -> AttackSpec:
    a = cfg["attack"]
    return AttackSpec(
        kind=_attack_kind(a["kind"]),
        injection_ratio=ratio,
        popular_tag_pool=a["popular_tag_pool"],
        popular_resource_pool=a["popular_resource_pool"],
        max_size=a["max_size"],
        bogus_resource=a["bogus_resource"],
        target_resource=a["target_resource"] or None,
        seed=seed,
    )


def cmd_attack_gen(args) -> int:
    cfg = load_config(args.config)
    out_dir = args.out or cfg["output"]["dir"]
    corpus = parse_dataset_file(_require(cfg, "dataset", "path"))
    spec = _spec_from_config(cfg, cfg["attack"]["ratio"], cfg["attack"]["seed"])
    batch = generate(corpus, spec)
    log.info("generated %d bogus folksonomies (%s)", len(batch), spec.kind.value)

    artifacts = {}
    artifacts["batch.tsv"] = _atomic_write(
        os.path.join(out_dir, "batch.tsv"), serialize_corpus(batch.folksonomies)
    )
    sidecar = {
        "kind": spec.kind.value,
        "ratio": spec.injection_ratio,
        "seed": spec.seed,
        "popular_tag_pool": spec.popular_tag_pool,
        "popular_resource_pool": spec.popular_resource_pool,
        "max_size": spec.max_size,
        "bogus_resource": spec.bogus_resource,
        "target_resource": batch.target_resource,
        "count": len(batch),
    }
    artifacts["batch-manifest.json"] = _atomic_write(
        os.path.join(out_dir, "batch-manifest.json"), _json_text(sidecar)
    )
    _write_manifest(out_dir, "attack-gen", cfg, {"attack": spec.seed}, artifacts)
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    out_dir = args.out or cfg["output"]["dir"]
    kind = args.classifier or cfg["train"]["classifier"]
    if kind not in ("nb", "svm", "nn"):
        raise ConfigError(f"unknown classifier {kind!r} (expected nb, svm or nn)")
    train_cfg = _train_config(cfg, seed_override=args.seed)

    corpus = parse_dataset_file(_require(cfg, "dataset", "path"))
    spec = _spec_from_config(cfg, cfg["run"]["training_fake_ratio"], cfg["attack"]["seed"])
    batch = generate(corpus, spec)
    training = tuple(corpus.folksonomies) + batch.folksonomies
    vocab = build_vocabulary(corpus)
    log.info("training %s on %d folksonomies (%d bogus)", kind, len(training), len(batch))
    model = train_classifier(kind, training, vocab, train_cfg)

    model_path = os.path.join(out_dir, f"model-{kind}.json")
    os.makedirs(out_dir, exist_ok=True)
    save_model(model, model_path)
    with open(model_path, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    _write_manifest(
        out_dir, "train", cfg,
        {"train": train_cfg.seed, "training_batch": spec.seed},
        {os.path.basename(model_path): digest},
    )
    return 0


def cmd_recommend(args) -> int:
    cfg = load_config(args.config)
    out_dir = args.out or cfg["output"]["dir"]
    corpus = parse_dataset_file(_require(cfg, "dataset", "path"))
    table = deterministic_embeddings(
        sorted(corpus.tag_frequency), dimension=cfg["run"]["embedding_dim"],
        seed=cfg["run"]["master_seed"],
    )
    users, resources = build_profiles(corpus, table)
    lists = compute_top_k_lists(users, resources, cfg["run"]["k"])
    payload = {
        user: [{"resource": r, "similarity": s} for r, s in lst.entries]
        for user, lst in lists.items()
    }
    artifacts = {
        "recommendations.json": _atomic_write(
            os.path.join(out_dir, "recommendations.json"), _json_text(payload)
        )
    }
    _write_manifest(out_dir, "recommend", cfg, {"embeddings": cfg["run"]["master_seed"]}, artifacts)
    return 0


def _classifier_list(raw: str) -> list[str | None]:
    out: list[str | None] = []
    for item in raw.split(","):
        name = item.strip().lower()
        if not name:
            continue
        if name == "none":
            out.append(None)
        elif name in ("nb", "svm", "nn", "oracle", "constant-legit"):
            out.append(name)
        else:
            raise ConfigError(f"unknown classifier {name!r} in [run] classifiers")
    if not out:
        raise ConfigError("[run] classifiers resolves to an empty list")
    return out


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    out_dir = args.out or cfg["output"]["dir"]
    corpus = parse_dataset_file(_require(cfg, "dataset", "path"))
    run = cfg["run"]
    user_sample = int(run["user_sample"]) if run["user_sample"] else None
    classifiers = _classifier_list(run["classifiers"])
    reports = {}
    for kind in classifiers:
        run_cfg = RunConfig(
            attack_kind=_attack_kind(cfg["attack"]["kind"]),
            injection_ratios=_ratio_list(run["injection_ratios"]),
            training_fake_ratio=run["training_fake_ratio"],
            folds=run["folds"],
            repetitions=run["repetitions"],
            k=run["k"],
            classifier=kind,
            master_seed=run["master_seed"],
            embedding_dim=run["embedding_dim"],
            user_sample=user_sample,
            popular_tag_pool=cfg["attack"]["popular_tag_pool"],
            popular_resource_pool=cfg["attack"]["popular_resource_pool"],
            max_size=cfg["attack"]["max_size"],
            bogus_resource=cfg["attack"]["bogus_resource"],
            target_resource=cfg["attack"]["target_resource"] or None,
            train_config=_train_config(cfg),
        )
        log.info("evaluating classifier=%s attack=%s", kind or "none", run_cfg.attack_kind.value)
        reports[kind] = run_pipeline(corpus, run_cfg)
    if None in reports:
        for kind, report in reports.items():
            if kind is not None:
                report.baseline_delta = improvement_vs_baseline(report, reports[None])

    payload = {
        "runs": [reports[k].to_dict() for k in reports],
    }
    artifacts = {
        "report.json": _atomic_write(os.path.join(out_dir, "report.json"), _json_text(payload))
    }
    _write_manifest(out_dir, "evaluate", cfg, {"master": run["master_seed"]}, artifacts)
    return 0


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def cmd_report(args) -> int:
    with open(args.report, "r", encoding="utf-8") as fh:
        payload = json.load(fh)
    out_dir = args.out or "."
    runs = payload.get("runs", [])

    def name(run):
        return run["classifier"] or "none"

    classification_rows, population_rows, rank_rows, delta_rows = [], [], [], []
    for run in runs:
        attack = run["attack_kind"]
        cls = run.get("classification")
        if cls:
            for class_name in ("legit", "bogus"):
                m = cls[class_name]
                classification_rows.append(
                    [name(run), attack, class_name, m["precision"], m["recall"], m["f1"]]
                )
            classification_rows.append([name(run), attack, "overall", "", "", cls["overall_f"]])
        for ratio in run["injection_ratios"]:
            impact = run["impact"][str(ratio)]
            population_rows.append(
                [name(run), attack, ratio, impact["affected_population"],
                 "" if impact["piggyback_dominance"] is None else impact["piggyback_dominance"]]
            )
            rank_rows.append(
                [name(run), attack, ratio,
                 "" if impact["avg_bogus_rank"] is None else impact["avg_bogus_rank"]]
            )
            delta = (run.get("baseline_delta") or {}).get(str(ratio))
            if delta:
                delta_rows.append(
                    [name(run), attack, ratio, delta["population_reduction"],
                     "" if delta["rank_increase"] is None else delta["rank_increase"]]
                )

    files = {
        "classification_f.csv": _csv_text(
            ["classifier", "attack", "class", "precision", "recall", "f_score"], classification_rows
        ),
        "population.csv": _csv_text(
            ["classifier", "attack", "ratio", "affected_population", "piggyback_dominance"],
            population_rows,
        ),
        "rank.csv": _csv_text(["classifier", "attack", "ratio", "avg_bogus_rank"], rank_rows),
        "deltas.csv": _csv_text(
            ["classifier", "attack", "ratio", "population_reduction", "rank_increase"], delta_rows
        ),
    }
    for filename, text in files.items():
        _atomic_write(os.path.join(out_dir, filename), text)
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tagsec",
        description="Simulate profile-injection attacks on a tag-based recommender and evaluate countermeasures.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", help="dataset statistics as JSON on stdout")
    p.add_argument("dataset")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("attack-gen", help="generate a bogus folksonomy batch")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_attack_gen)

    p = sub.add_parser("train", help="train a classifier and save the model")
    p.add_argument("--config", required=True)
    p.add_argument("--classifier", choices=["nb", "svm", "nn"], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("recommend", help="emit top-k lists for every user")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_recommend)

    p = sub.add_parser("evaluate", help="run the full evaluation pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("report", help="emit per-figure CSV plot data from a report")
    p.add_argument("report")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("TAGSEC_LOG_LEVEL", "WARNING").upper())
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (CorpusError, AttackError, TrainingError, EvaluationError, EmbeddingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 1
    except json.JSONDecodeError as exc:
        print(f"malformed JSON input: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
