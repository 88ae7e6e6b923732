"""Evaluation protocol: train countermeasures, sweep attack sizes, measure impact.

For each repetition (with seeds derived from the master seed) the pipeline
generates a training bogus batch, runs stratified k-fold cross-validation
of the configured classifier, then for each injection ratio generates a
fresh, independently seeded attack batch, injects it, filters the merged
corpus through the trained model, rebuilds profiles from the surviving
folksonomies and measures who ends up with the bogus resource in their
top-k list. Classification metrics average over folds and repetitions;
impact metrics average over repetitions.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .attacks import AttackKind, AttackSpec, generate, inject
from .classifiers import TrainConfig, classify_corpus, train_classifier
from .corpus import Corpus, CorpusError, Folksonomy, Label, build_vocabulary, sample_users
from .recommender import TopKList, build_profiles, compute_top_k_lists, deterministic_embeddings, rank_of


class EvaluationError(ValueError):
    """Invalid evaluation configuration or inputs."""


# seed-stream identifiers for deriving independent child seeds
_STREAM_SAMPLE = 1
_STREAM_TRAIN_BATCH = 2
_STREAM_FOLDS = 3
_STREAM_TRAINER = 4
_STREAM_ATTACK = 5
_STREAM_EMBED = 6


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one evaluation run (one attack, one classifier or none)."""

    attack_kind: AttackKind
    injection_ratios: tuple[float, ...] = (0.001, 0.005, 0.01, 0.05, 0.10)
    training_fake_ratio: float = 0.30
    folds: int = 10
    repetitions: int = 5
    k: int = 15
    classifier: str | None = None
    master_seed: int = 0
    embedding_dim: int = 50
    user_sample: int | None = None
    popular_tag_pool: int = 75
    popular_resource_pool: int = 100
    max_size: int = 50
    bogus_resource: str = "bogus-item"
    target_resource: str | None = None
    train_config: TrainConfig = field(default_factory=TrainConfig)

    def __post_init__(self):
        if not self.injection_ratios or any(not 0 < r <= 1 for r in self.injection_ratios):
            raise EvaluationError("injection ratios must be a non-empty list within (0, 1]")
        if not 0 < self.training_fake_ratio <= 1:
            raise EvaluationError("training fake ratio must lie in (0, 1]")
        if self.folds < 2:
            raise EvaluationError("cross-validation needs at least 2 folds")
        if self.repetitions < 1:
            raise EvaluationError("at least one repetition is required")
        if self.k < 1:
            raise EvaluationError("k must be at least 1")

    def signature(self) -> dict:
        """Everything that must match between comparable runs except the classifier."""
        sig = dataclasses.asdict(self)
        sig["attack_kind"] = self.attack_kind.value
        sig["injection_ratios"] = list(self.injection_ratios)
        sig.pop("classifier")
        return sig


def _derive_seed(master: int, *path: int) -> int:
    return int(np.random.SeedSequence([master, *path]).generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# classification metrics
# ---------------------------------------------------------------------------

def f_score(p: float, r: float) -> float:
    """Harmonic mean of precision and recall; 0 when both are 0."""
    if p + r == 0:
        return 0.0
    return 2.0 * p * r / (p + r)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class ClassificationMetrics:
    legit: ClassMetrics
    bogus: ClassMetrics
    overall_f: float
    confusion: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "legit": dataclasses.asdict(self.legit),
            "bogus": dataclasses.asdict(self.bogus),
            "overall_f": self.overall_f,
            "confusion": dict(self.confusion),
        }


def metrics_from_confusion(confusion: dict) -> ClassificationMetrics:
    """Per-class precision/recall/F and support-weighted overall F."""
    ll = confusion["legit_as_legit"]
    lb = confusion["legit_as_bogus"]
    bl = confusion["bogus_as_legit"]
    bb = confusion["bogus_as_bogus"]
    n_legit, n_bogus = ll + lb, bl + bb

    def prf(tp, fp, fn):
        p = tp / (tp + fp) if tp + fp else 0.0
        r = tp / (tp + fn) if tp + fn else 0.0
        return ClassMetrics(precision=p, recall=r, f1=f_score(p, r))

    legit = prf(ll, bl, lb)
    bogus = prf(bb, lb, bl)
    overall = (n_legit * legit.f1 + n_bogus * bogus.f1) / (n_legit + n_bogus)
    return ClassificationMetrics(legit=legit, bogus=bogus, overall_f=overall, confusion=dict(confusion))


def confusion_metrics(predicted: Sequence[Label], truth: Sequence[Label]) -> ClassificationMetrics:
    """Metrics with bogus as the positive class of the bogus row and vice versa."""
    if len(predicted) != len(truth):
        raise EvaluationError(f"length mismatch: {len(predicted)} predictions, {len(truth)} labels")
    if not (Label.LEGITIMATE in truth and Label.BOGUS in truth):
        raise EvaluationError("ground truth must contain both classes")
    confusion = {"legit_as_legit": 0, "legit_as_bogus": 0, "bogus_as_legit": 0, "bogus_as_bogus": 0}
    for pred, true in zip(predicted, truth):
        true_name = "legit" if true is Label.LEGITIMATE else "bogus"
        pred_name = "legit" if pred is Label.LEGITIMATE else "bogus"
        confusion[f"{true_name}_as_{pred_name}"] += 1
    return metrics_from_confusion(confusion)


def weighted_overall_f(f_legit: float, f_bogus: float, support_legit: float, support_bogus: float) -> float:
    """Support-weighted mean of the two per-class F scores."""
    total = support_legit + support_bogus
    return (support_legit * f_legit + support_bogus * f_bogus) / total


def _mean_classification(metrics: Sequence[ClassificationMetrics]) -> ClassificationMetrics:
    def mean(getter):
        return float(np.mean([getter(m) for m in metrics]))

    total_confusion: dict[str, int] = {}
    for m in metrics:
        for key, val in m.confusion.items():
            total_confusion[key] = total_confusion.get(key, 0) + val
    return ClassificationMetrics(
        legit=ClassMetrics(
            precision=mean(lambda m: m.legit.precision),
            recall=mean(lambda m: m.legit.recall),
            f1=mean(lambda m: m.legit.f1),
        ),
        bogus=ClassMetrics(
            precision=mean(lambda m: m.bogus.precision),
            recall=mean(lambda m: m.bogus.recall),
            f1=mean(lambda m: m.bogus.f1),
        ),
        overall_f=mean(lambda m: m.overall_f),
        confusion=total_confusion,
    )


# ---------------------------------------------------------------------------
# impact metrics
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ImpactMetrics:
    affected_population: float
    avg_bogus_rank: float | None
    piggyback_dominance: float | None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def affected_population(lists: Iterable[TopKList], bogus: str) -> int:
    """Users whose top-k list contains the bogus resource."""
    return sum(1 for lst in lists if rank_of(bogus, lst) is not None)


def avg_bogus_rank(lists: Iterable[TopKList], bogus: str):
    """Mean 1-based rank among affected users; None when nobody is affected."""
    ranks = [r for r in (rank_of(bogus, lst) for lst in lists) if r is not None]
    if not ranks:
        return None
    return float(np.mean(ranks))


def piggyback_dominance(lists: Iterable[TopKList], bogus: str, target: str) -> int:
    """Users for whom the bogus resource outranks the target (absent target = rank inf)."""
    count = 0
    for lst in lists:
        rb = rank_of(bogus, lst)
        if rb is None:
            continue
        rt = rank_of(target, lst)
        if rt is None or rb < rt:
            count += 1
    return count


# ---------------------------------------------------------------------------
# cross-validation
# ---------------------------------------------------------------------------

def stratified_folds(fs: Sequence[Folksonomy], folds: int, seed: int) -> list[list[int]]:
    """Index partition into `folds` label-stratified folds."""
    by_class: dict[Label, list[int]] = {Label.LEGITIMATE: [], Label.BOGUS: []}
    for i, f in enumerate(fs):
        if f.label not in by_class:
            raise EvaluationError("cross-validation data must be labeled")
        by_class[f.label].append(i)
    if min(len(v) for v in by_class.values()) < folds:
        raise EvaluationError(
            f"each class needs at least {folds} folksonomies for {folds}-fold stratification"
        )
    rng = np.random.default_rng(seed)
    out: list[list[int]] = [[] for _ in range(folds)]
    for idx in by_class.values():
        order = rng.permutation(len(idx))
        for j, pos in enumerate(order):
            out[j % folds].append(idx[pos])
    return [sorted(f) for f in out]


# ---------------------------------------------------------------------------
# the pipeline
# ---------------------------------------------------------------------------

@dataclass
class EvaluationReport:
    attack_kind: str
    classifier: str | None
    injection_ratios: tuple[float, ...]
    config_signature: dict
    classification: ClassificationMetrics | None
    classification_per_fold: list[dict]
    impact: dict[float, ImpactMetrics]
    baseline_delta: dict[float, dict] | None = None

    def to_dict(self) -> dict:
        return {
            "attack_kind": self.attack_kind,
            "classifier": self.classifier,
            "injection_ratios": list(self.injection_ratios),
            "config_signature": self.config_signature,
            "classification": self.classification.to_dict() if self.classification else None,
            "classification_per_fold": self.classification_per_fold,
            "impact": {str(r): m.to_dict() for r, m in self.impact.items()},
            "baseline_delta": (
                {str(r): d for r, d in self.baseline_delta.items()} if self.baseline_delta else None
            ),
        }


def _attack_spec(cfg: RunConfig, ratio: float, bogus_resource: str, seed: int) -> AttackSpec:
    return AttackSpec(
        kind=cfg.attack_kind,
        injection_ratio=ratio,
        popular_tag_pool=cfg.popular_tag_pool,
        popular_resource_pool=cfg.popular_resource_pool,
        max_size=cfg.max_size,
        bogus_resource=bogus_resource,
        target_resource=cfg.target_resource,
        seed=seed,
    )


def run_pipeline(base: Corpus, cfg: RunConfig) -> EvaluationReport:
    """Execute the full protocol; deterministic for a fixed master seed."""
    if any(f.label is not Label.LEGITIMATE for f in base):
        raise EvaluationError("base corpus must be entirely legitimate")

    fold_metrics_all: list[ClassificationMetrics] = []
    per_fold_records: list[dict] = []
    impact_acc: dict[float, list[ImpactMetrics]] = {r: [] for r in cfg.injection_ratios}

    for rep in range(cfg.repetitions):
        corpus_r = base
        if cfg.user_sample is not None:
            corpus_r = sample_users(base, cfg.user_sample, _derive_seed(cfg.master_seed, _STREAM_SAMPLE, rep))
        vocab = build_vocabulary(corpus_r)
        table = deterministic_embeddings(
            vocab.tags, dimension=cfg.embedding_dim, seed=_derive_seed(cfg.master_seed, _STREAM_EMBED)
        )

        impact_model = None
        if cfg.classifier is not None:
            train_spec = _attack_spec(
                cfg, cfg.training_fake_ratio, cfg.bogus_resource + "-train",
                _derive_seed(cfg.master_seed, _STREAM_TRAIN_BATCH, rep),
            )
            train_batch = generate(corpus_r, train_spec)
            training = tuple(corpus_r.folksonomies) + train_batch.folksonomies
            folds = stratified_folds(training, cfg.folds, _derive_seed(cfg.master_seed, _STREAM_FOLDS, rep))
            for fold_i, held_out in enumerate(folds):
                held = set(held_out)
                train_fs = [training[i] for i in range(len(training)) if i not in held]
                test_fs = [training[i] for i in held_out]
                trainer_cfg = dataclasses.replace(
                    cfg.train_config, seed=_derive_seed(cfg.master_seed, _STREAM_TRAINER, rep, fold_i)
                )
                model = train_classifier(cfg.classifier, train_fs, vocab, trainer_cfg)
                metrics = confusion_metrics(model.predict_labels(test_fs), [f.label for f in test_fs])
                fold_metrics_all.append(metrics)
                per_fold_records.append(
                    {"repetition": rep, "fold": fold_i, "confusion": dict(metrics.confusion)}
                )
                if fold_i == 0:
                    impact_model = model  # reused for the injection sweep of this repetition

        for ratio_idx, ratio in enumerate(cfg.injection_ratios):
            spec = _attack_spec(
                cfg, ratio, cfg.bogus_resource,
                _derive_seed(cfg.master_seed, _STREAM_ATTACK, rep, ratio_idx),
            )
            batch = generate(corpus_r, spec)
            merged = inject(corpus_r, batch)
            if impact_model is not None:
                filtered, _ = classify_corpus(impact_model, merged)
            else:
                filtered = merged
            user_profiles, resource_profiles = build_profiles(filtered, table)
            legit_users = set(corpus_r.users)
            lists = [
                lst for user, lst in compute_top_k_lists(user_profiles, resource_profiles, cfg.k).items()
                if user in legit_users
            ]
            pop = affected_population(lists, cfg.bogus_resource)
            rank = avg_bogus_rank(lists, cfg.bogus_resource)
            dom = None
            if cfg.attack_kind is AttackKind.PIGGYBACK:
                dom = piggyback_dominance(lists, cfg.bogus_resource, batch.target_resource)
            impact_acc[ratio].append(
                ImpactMetrics(affected_population=float(pop), avg_bogus_rank=rank, piggyback_dominance=dom)
            )

    impact: dict[float, ImpactMetrics] = {}
    for ratio, reps in impact_acc.items():
        ranks = [m.avg_bogus_rank for m in reps if m.avg_bogus_rank is not None]
        doms = [m.piggyback_dominance for m in reps if m.piggyback_dominance is not None]
        impact[ratio] = ImpactMetrics(
            affected_population=float(np.mean([m.affected_population for m in reps])),
            avg_bogus_rank=float(np.mean(ranks)) if ranks else None,
            piggyback_dominance=float(np.mean(doms)) if doms else None,
        )

    return EvaluationReport(
        attack_kind=cfg.attack_kind.value,
        classifier=cfg.classifier,
        injection_ratios=cfg.injection_ratios,
        config_signature=cfg.signature(),
        classification=_mean_classification(fold_metrics_all) if fold_metrics_all else None,
        classification_per_fold=per_fold_records,
        impact=impact,
    )


def improvement_vs_baseline(with_cls: EvaluationReport, without: EvaluationReport) -> dict[float, dict]:
    """Per-ratio population reduction and rank increase of a classifier run vs None."""
    if without.classifier is not None:
        raise EvaluationError("baseline report must come from a classifier-less run")
    if with_cls.config_signature != without.config_signature:
        raise EvaluationError("reports are not comparable: configurations differ beyond the classifier")
    deltas: dict[float, dict] = {}
    for ratio in with_cls.injection_ratios:
        m_with, m_without = with_cls.impact[ratio], without.impact[ratio]
        rank_increase = None
        if m_with.avg_bogus_rank is not None and m_without.avg_bogus_rank is not None:
            rank_increase = m_with.avg_bogus_rank - m_without.avg_bogus_rank
        deltas[ratio] = {
            "population_reduction": m_without.affected_population - m_with.affected_population,
            "rank_increase": rank_increase,
        }
    return deltas
