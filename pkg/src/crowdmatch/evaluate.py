"""Retrieval evaluation against gold links: hit@k, MRR, rank histogram, and
the mean similarity of correctly retrieved issues.

The experiment runner walks every gold-linked review through the normal match
pipeline and aggregates in review-id order, so reports are deterministic.
Every report re-counts its own hit rate from the per-review rows as a
self-consistency check before it leaves this module.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from .enrich import Enricher
from .errors import BackendUnavailable, EmptyGoldSet, EmptyText, MissingResult, ZeroVector
from .match import MatchOptions, MatchPipeline, MatchResult
from .model import GoldLink
from .providers import ProviderRegistry
from .vectors import format_percent
from .workspace import Workspace


def _gold_rank(result: MatchResult, gold_iid: int, k: int) -> Optional[tuple[int, float]]:
    """(rank, similarity) of the gold issue within the first k candidates."""
    for cand in result.candidates[:k]:
        if cand.issue_iid == gold_iid:
            return cand.rank, cand.similarity
    return None


def _check_inputs(gold: Sequence[GoldLink], results: Mapping[str, MatchResult]) -> None:
    if not gold:
        raise EmptyGoldSet("no gold links to evaluate against")
    for link in gold:
        if link.review_id not in results:
            raise MissingResult(f"no match result for review {link.review_id!r}")


def hit_at_k(
    gold: Sequence[GoldLink], results: Mapping[str, MatchResult], k: int
) -> tuple[int, float]:
    """How many gold issues appear among the first k candidates, and the rate."""
    _check_inputs(gold, results)
    hits = 0
    for link in gold:
        if _gold_rank(results[link.review_id], link.issue_iid, k) is not None:
            hits += 1
    return hits, hits / len(gold)


def rank_stats(
    gold: Sequence[GoldLink], results: Mapping[str, MatchResult], k: int
) -> tuple[dict[int, int], Optional[float], float]:
    """Histogram of gold ranks, mean similarity at the hits, and MRR.

    Misses contribute 0 to MRR; the mean similarity is absent when nothing
    hit at all.
    """
    _check_inputs(gold, results)
    histogram: dict[int, int] = {}
    sims: list[float] = []
    reciprocal_sum = 0.0
    for link in gold:
        found = _gold_rank(results[link.review_id], link.issue_iid, k)
        if found is None:
            continue
        rank, sim = found
        histogram[rank] = histogram.get(rank, 0) + 1
        sims.append(sim)
        reciprocal_sum += 1.0 / rank
    mean_sim = sum(sims) / len(sims) if sims else None
    return histogram, mean_sim, reciprocal_sum / len(gold)


@dataclass(frozen=True)
class PerReviewOutcome:
    review_id: str
    gold_iid: int
    rank: Optional[int] = None
    similarity: Optional[float] = None
    filtered_out: bool = False
    error: Optional[str] = None

    def to_record(self) -> dict:
        rec: dict = {"review_id": self.review_id, "gold_iid": self.gold_iid}
        if self.rank is not None:
            rec["rank"] = self.rank
        if self.similarity is not None:
            rec["similarity"] = self.similarity
        if self.filtered_out:
            rec["filtered_out"] = True
        if self.error is not None:
            rec["error"] = self.error
        return rec

    @classmethod
    def from_record(cls, rec: dict) -> "PerReviewOutcome":
        return cls(
            review_id=rec["review_id"],
            gold_iid=int(rec["gold_iid"]),
            rank=rec.get("rank"),
            similarity=rec.get("similarity"),
            filtered_out=rec.get("filtered_out", False),
            error=rec.get("error"),
        )


@dataclass(frozen=True)
class EvalReport:
    provider_id: str
    k: int
    n_gold: int
    n_hits: int
    hit_rate: float
    mrr: float
    correct_rank_histogram: dict[int, int]
    mean_similarity_of_correct: Optional[float]
    per_review: tuple[PerReviewOutcome, ...]
    filtered_out: int = 0
    embed_failures: tuple[tuple[str, str], ...] = ()

    def __post_init__(self) -> None:
        # Self-consistency: the headline numbers must agree with the rows.
        recount = sum(1 for row in self.per_review if row.rank is not None)
        if recount != self.n_hits:
            raise AssertionError(f"hit recount {recount} != n_hits {self.n_hits}")
        if self.n_gold and abs(self.hit_rate - self.n_hits / self.n_gold) > 1e-12:
            raise AssertionError("hit_rate does not equal n_hits / n_gold")
        if sum(self.correct_rank_histogram.values()) != self.n_hits:
            raise AssertionError("rank histogram does not sum to n_hits")

    def to_dict(self) -> dict:
        return {
            "provider_id": self.provider_id,
            "k": self.k,
            "n_gold": self.n_gold,
            "n_hits": self.n_hits,
            "hit_rate": self.hit_rate,
            "hit_rate_percent": format_percent(self.hit_rate),
            "mrr": self.mrr,
            "correct_rank_histogram": {str(r): c for r, c in
                                       sorted(self.correct_rank_histogram.items())},
            "mean_similarity_of_correct": self.mean_similarity_of_correct,
            "per_review": [row.to_record() for row in self.per_review],
            "filtered_out": self.filtered_out,
            "embed_failures": [list(pair) for pair in self.embed_failures],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "EvalReport":
        return cls(
            provider_id=data["provider_id"],
            k=int(data["k"]),
            n_gold=int(data["n_gold"]),
            n_hits=int(data["n_hits"]),
            hit_rate=float(data["hit_rate"]),
            mrr=float(data["mrr"]),
            correct_rank_histogram={
                int(r): int(c) for r, c in data["correct_rank_histogram"].items()
            },
            mean_similarity_of_correct=data.get("mean_similarity_of_correct"),
            per_review=tuple(PerReviewOutcome.from_record(r) for r in data["per_review"]),
            filtered_out=int(data.get("filtered_out", 0)),
            embed_failures=tuple(
                (key, msg) for key, msg in data.get("embed_failures", ())
            ),
        )


def run_experiment(
    workspace: Workspace,
    provider_id: str,
    registry: ProviderRegistry,
    opts: Optional[MatchOptions] = None,
    enricher: Optional[Enricher] = None,
) -> EvalReport:
    """Match every gold-linked review and aggregate the retrieval metrics.

    Reviews whose embedding failed are excluded from the rates and listed
    under embed_failures; reviews suppressed by a class filter count as
    misses and are flagged.
    """
    opts = opts if opts is not None else MatchOptions(provider_id=provider_id)
    if opts.provider_id != provider_id:
        opts = replace(opts, provider_id=provider_id)
    registry.get(provider_id)  # fail fast on unknown providers

    gold_by_review = workspace.gold_links()
    if not gold_by_review:
        raise EmptyGoldSet("workspace has no gold links")
    reviews = workspace.load_reviews()
    pipeline = MatchPipeline(workspace, registry, enricher)

    results: dict[str, MatchResult] = {}
    scored_gold: list[GoldLink] = []
    outcomes: list[PerReviewOutcome] = []
    failures: list[tuple[str, str]] = []
    n_filtered = 0

    for review_id in sorted(gold_by_review):
        link = gold_by_review[review_id]
        review = reviews.get(review_id)
        if review is None:
            failures.append((review_id, "review missing from workspace"))
            continue
        try:
            result = pipeline.match_stored(review, opts)
        except (EmptyText, ZeroVector, BackendUnavailable) as exc:
            failures.append((review_id, str(exc)))
            continue
        results[review_id] = result
        scored_gold.append(link)
        if result.filtered_out:
            n_filtered += 1
            outcomes.append(
                PerReviewOutcome(review_id=review_id, gold_iid=link.issue_iid, filtered_out=True)
            )
            continue
        found = _gold_rank(result, link.issue_iid, opts.k)
        if found is None:
            outcomes.append(PerReviewOutcome(review_id=review_id, gold_iid=link.issue_iid))
        else:
            rank, sim = found
            outcomes.append(
                PerReviewOutcome(
                    review_id=review_id, gold_iid=link.issue_iid, rank=rank, similarity=sim
                )
            )

    if not scored_gold:
        raise EmptyGoldSet("every gold-linked review failed to embed")

    n_hits, hit_rate = hit_at_k(scored_gold, results, opts.k)
    histogram, mean_sim, mrr = rank_stats(scored_gold, results, opts.k)
    return EvalReport(
        provider_id=provider_id,
        k=opts.k,
        n_gold=len(scored_gold),
        n_hits=n_hits,
        hit_rate=hit_rate,
        mrr=mrr,
        correct_rank_histogram=histogram,
        mean_similarity_of_correct=mean_sim,
        per_review=tuple(outcomes),
        filtered_out=n_filtered,
        embed_failures=tuple(failures),
    )


@dataclass(frozen=True)
class ProviderComparison:
    reports: dict[str, EvalReport]
    baseline: str
    deltas: dict[str, float] = field(default_factory=dict)  # provider -> hit_rate - baseline's

    def to_dict(self) -> dict:
        return {
            "baseline": self.baseline,
            "reports": {pid: report.to_dict() for pid, report in self.reports.items()},
            "deltas": dict(self.deltas),
        }


def compare_providers(
    workspace: Workspace,
    provider_ids: Sequence[str],
    registry: ProviderRegistry,
    opts: Optional[MatchOptions] = None,
    enricher: Optional[Enricher] = None,
) -> ProviderComparison:
    """Run the same experiment once per provider and diff the hit rates."""
    if len(provider_ids) < 2:
        raise ValueError("comparison needs at least two provider ids")
    reports: dict[str, EvalReport] = {}
    for pid in provider_ids:
        base = opts if opts is not None else MatchOptions(provider_id=pid)
        reports[pid] = run_experiment(workspace, pid, registry, base, enricher)
    baseline = provider_ids[0]
    deltas = {
        pid: reports[pid].hit_rate - reports[baseline].hit_rate for pid in provider_ids
    }
    return ProviderComparison(reports=reports, baseline=baseline, deltas=deltas)


def render_report_table(report: EvalReport) -> str:
    """Human-readable summary table for terminals."""
    lines = [
        f"provider           {report.provider_id}",
        f"k                  {report.k}",
        f"gold reviews       {report.n_gold}",
        f"hits               {report.n_hits}",
        f"hit rate           {format_percent(report.hit_rate)}%",
        f"mrr                {report.mrr:.3f}",
    ]
    if report.mean_similarity_of_correct is not None:
        lines.append(
            f"mean correct sim   {format_percent(report.mean_similarity_of_correct)}%"
        )
    if report.correct_rank_histogram:
        ranks = ", ".join(
            f"rank {r}: {c}" for r, c in sorted(report.correct_rank_histogram.items())
        )
        lines.append(f"correct ranks      {ranks}")
    if report.filtered_out:
        lines.append(f"filtered out       {report.filtered_out} (count as misses)")
    if report.embed_failures:
        lines.append(f"embed failures     {len(report.embed_failures)} (excluded from rates)")
        for key, msg in report.embed_failures:
            lines.append(f"    {key}: {msg}")
    return "\n".join(lines)
