"""Command-line surface.

Exit codes: 0 success, 1 usage error, 2 data/provider error, 3 network error.
With --format json every command, including error paths, writes valid JSON to
stdout; human-readable messages go to stderr.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Optional

import click

from .collect import IssueCollector
from .enrich import Enricher, RemoteClassifierAdapter, RemoteTranslationAdapter, TranslationCache
from .errors import (
    AuthFailure,
    BackendUnavailable,
    CrowdMatchError,
    NetworkFailure,
    ProviderUnavailable,
)
from .evaluate import compare_providers, render_report_table, run_experiment
from .importer import import_reviews
from .match import MatchOptions, MatchPipeline, match_payload
from .model import ReviewClass
from .providers import (
    ProviderRegistry,
    SentenceEmbeddingProvider,
    RemoteEmbeddingAdapter,
    default_registry,
)
from .vectors import format_percent
from .workspace import Workspace

NETWORK_ERRORS = (NetworkFailure, AuthFailure, BackendUnavailable, ProviderUnavailable)

CLASS_ALIASES = {
    "bug": ReviewClass.BUG_REPORT,
    "bug_report": ReviewClass.BUG_REPORT,
    "feature": ReviewClass.FEATURE_REQUEST,
    "feature_request": ReviewClass.FEATURE_REQUEST,
    "irrelevant": ReviewClass.IRRELEVANT,
}


def _parse_classes(values: tuple[str, ...]) -> Optional[frozenset[ReviewClass]]:
    if not values:
        return None
    classes = set()
    for value in values:
        try:
            classes.add(CLASS_ALIASES[value.lower()])
        except KeyError:
            raise click.BadParameter(
                f"unknown class {value!r}; use one of {sorted(CLASS_ALIASES)}"
            ) from None
    return frozenset(classes)


def _validate_threshold(ctx, param, value):
    if value is not None and not -1.0 <= value <= 1.0:
        raise click.BadParameter("threshold must lie in [-1, 1]")
    return value


def _validate_top_k(ctx, param, value):
    if value is not None and value < 1:
        raise click.BadParameter("top-k must be >= 1")
    return value


class AppContext:
    """Lazily wired application services shared by the subcommands."""

    def __init__(self, workspace_path: Path, output_format: str,
                 translate_url: Optional[str], classify_url: Optional[str],
                 embed_url: Optional[str], embed_model: str, embed_dim: int):
        self.workspace_path = Path(workspace_path)
        self.output_format = output_format
        self._translate_url = translate_url
        self._classify_url = classify_url
        self._embed_url = embed_url
        self._embed_model = embed_model
        self._embed_dim = embed_dim
        self._workspace: Optional[Workspace] = None
        self._registry: Optional[ProviderRegistry] = None

    @property
    def workspace(self) -> Workspace:
        if self._workspace is None:
            self._workspace = Workspace.init(self.workspace_path)
        return self._workspace

    @property
    def registry(self) -> ProviderRegistry:
        if self._registry is None:
            self._registry = default_registry()
            if self._embed_url:
                adapter = RemoteEmbeddingAdapter(
                    self._embed_url, self._embed_model, dim=self._embed_dim
                )
                self._registry.register(SentenceEmbeddingProvider(adapter))
        return self._registry

    def provider(self, provider_id: str):
        # "st:<model>" ids load the local sentence-transformers runtime on demand.
        try:
            return self.registry.get(provider_id)
        except CrowdMatchError:
            if provider_id.startswith("st:"):
                from .providers import SentenceTransformersAdapter

                adapter = SentenceTransformersAdapter(provider_id[len("st:"):])
                provider = SentenceEmbeddingProvider(adapter)
                self.registry.register(provider)
                return provider
            raise

    def enricher(self) -> Enricher:
        translator = (
            RemoteTranslationAdapter(self._translate_url) if self._translate_url else None
        )
        classifier = (
            RemoteClassifierAdapter(self._classify_url) if self._classify_url else None
        )
        cache = TranslationCache(self.workspace.translation_cache_path())
        return Enricher(translator=translator, classifier=classifier, cache=cache)

    def emit(self, payload: dict, table: str) -> None:
        if self.output_format == "json":
            click.echo(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True))
        else:
            click.echo(table)


@click.group()
@click.option(
    "--workspace",
    "workspace_path",
    envvar="CROWDMATCH_WORKSPACE",
    default="workspace",
    show_default=True,
    type=click.Path(path_type=Path),
    help="Workspace directory (env: CROWDMATCH_WORKSPACE).",
)
@click.option("--format", "output_format", type=click.Choice(["table", "json"]),
              default="table", show_default=True, help="Output format.")
@click.option("--translate-url", envvar="CROWDMATCH_TRANSLATE_URL", default=None,
              help="Base URL of a translation endpoint.")
@click.option("--classify-url", envvar="CROWDMATCH_CLASSIFY_URL", default=None,
              help="Base URL of a classifier endpoint.")
@click.option("--embed-url", envvar="CROWDMATCH_EMBED_URL", default=None,
              help="Base URL of a remote embedding endpoint.")
@click.option("--embed-model", default="default", show_default=True,
              help="Model name sent to the remote embedding endpoint.")
@click.option("--embed-dim", default=384, show_default=True,
              help="Vector size expected from the remote embedding endpoint.")
@click.pass_context
def cli(ctx, workspace_path, output_format, translate_url, classify_url,
        embed_url, embed_model, embed_dim):
    """Match user reviews against issue-tracker entries by embedding similarity."""
    ctx.obj = AppContext(
        workspace_path, output_format, translate_url, classify_url,
        embed_url, embed_model, embed_dim,
    )


@cli.command("collect-issues")
@click.argument("project_ref")
@click.option("--auth-token", envvar="CROWDMATCH_AUTH_TOKEN", default=None,
              help="Tracker token (header PRIVATE-TOKEN); omit for public projects.")
@click.option("--translate-to", default=None, help="Translate issue titles on collection.")
@click.pass_obj
def collect_issues_cmd(app: AppContext, project_ref, auth_token, translate_to):
    """Page through a tracker project and store its issues."""
    enricher = app.enricher() if translate_to else None
    collector = IssueCollector()
    count = collector.collect(
        app.workspace, project_ref, auth_token=auth_token,
        translate_to=translate_to, enricher=enricher,
    )
    app.emit({"collected": count}, f"collected {count} issues")


@cli.command("import-reviews")
@click.argument("file", type=click.Path(exists=True, dir_okay=False, path_type=Path))
@click.option("--fmt", type=click.Choice(["csv", "jsonl"]), default="csv", show_default=True)
@click.option("--lang", default="en", show_default=True, help="Default language tag for rows.")
@click.pass_obj
def import_reviews_cmd(app: AppContext, file, fmt, lang):
    """Import user reviews (and any gold issue links) from a file."""
    report = import_reviews(app.workspace, file, fmt=fmt, lang=lang)
    app.emit(
        {"reviews": report.reviews, "gold_links": report.gold_links},
        f"imported {report.reviews} reviews, {report.gold_links} gold links",
    )


@cli.command("seed-demo")
@click.pass_obj
def seed_demo_cmd(app: AppContext):
    """Load the bundled demo corpus (12 issues, 6 gold-linked reviews)."""
    from .demo import seed_mini_corpus

    report = seed_mini_corpus(app.workspace)
    app.emit(
        {"reviews": report.reviews, "gold_links": report.gold_links},
        f"seeded demo corpus: {report.reviews} reviews, {report.gold_links} gold links",
    )


@cli.command("embed")
@click.option("--kind", type=click.Choice(["issues", "reviews"]), required=True)
@click.option("--provider", "provider_id", default="ref-384", show_default=True)
@click.pass_obj
def embed_cmd(app: AppContext, kind, provider_id):
    """Embed every issue/review that lacks an up-to-date vector."""
    provider = app.provider(provider_id)
    report = app.workspace.upsert_embeddings(provider, kind.rstrip("s"))
    payload = {
        "embedded": report.embedded,
        "skipped": report.skipped,
        "failures": [{"key": key, "error": msg} for key, msg in report.failures],
    }
    lines = [f"embedded {report.embedded}, skipped {report.skipped} up-to-date"]
    for key, msg in report.failures:
        lines.append(f"  failed {key}: {msg}")
    app.emit(payload, "\n".join(lines))


def _match_table(payload: dict) -> str:
    if payload["filtered_out"]:
        return f"review class {payload['label']}: filtered out, no candidates"
    if not payload["candidates"]:
        return "no candidates (threshold too high or empty corpus)"
    lines = []
    if payload["translated_text"] and payload["translated_text"] != payload["query_text"]:
        lines.append(f"translated: {payload['translated_text']}")
    if payload["label"]:
        lines.append(f"class: {payload['label']}")
    lines.append(f"{'rank':>4}  {'iid':>5}  {'sim':>6}  title")
    for cand in payload["candidates"]:
        title = cand["title_translated"] or cand["title"] or "<unknown issue>"
        lines.append(
            f"{cand['rank']:>4}  {cand['issue_iid']:>5}  {format_percent(cand['similarity']):>5}%  {title}"
        )
    return "\n".join(lines)


@cli.command("match")
@click.option("--text", default=None, help="One review text; omit to read lines from stdin.")
@click.option("--lang", default="en", show_default=True)
@click.option("--provider", "provider_id", default="ref-384", show_default=True)
@click.option("--top-k", default=5, show_default=True, callback=_validate_top_k)
@click.option("--threshold", type=float, default=None, callback=_validate_threshold,
              help="Minimum cosine similarity in [-1, 1]; omit to disable.")
@click.option("--translate-to", default=None)
@click.option("--filter-class", "filter_classes", multiple=True,
              help="Match only reviews of these classes (repeatable).")
@click.pass_obj
def match_cmd(app: AppContext, text, lang, provider_id, top_k, threshold,
              translate_to, filter_classes):
    """Suggest the most similar issues for a review.

    Without --text, reads reviews one per line and answers each immediately;
    an empty line (or EOF) exits.
    """
    opts = MatchOptions(
        provider_id=provider_id,
        k=top_k,
        threshold=threshold,
        translate_to=translate_to,
        classify_filter=_parse_classes(filter_classes),
    )
    app.provider(provider_id)
    pipeline = MatchPipeline(app.workspace, app.registry, app.enricher())
    issues = app.workspace.load_issues()

    def run_one(review_text: str) -> None:
        result = pipeline.match_text(review_text, opts, lang=lang)
        payload = match_payload(result, issues)
        app.emit(payload, _match_table(payload))

    if text is not None:
        run_one(text)
        return
    if sys.stdin.isatty():
        click.echo("enter one review per line; empty line quits", err=True)
    for line in sys.stdin:
        line = line.rstrip("\n")
        if not line.strip():
            break
        run_one(line)


@cli.command("eval")
@click.option("--provider", "provider_id", default="ref-384", show_default=True)
@click.option("--top-k", default=5, show_default=True, callback=_validate_top_k)
@click.option("--threshold", type=float, default=None, callback=_validate_threshold)
@click.option("--translate-to", default=None)
@click.option("--filter-class", "filter_classes", multiple=True)
@click.pass_obj
def eval_cmd(app: AppContext, provider_id, top_k, threshold, translate_to, filter_classes):
    """Score the provider against the workspace's gold links (hit@k, MRR)."""
    app.provider(provider_id)
    opts = MatchOptions(
        provider_id=provider_id,
        k=top_k,
        threshold=threshold,
        translate_to=translate_to,
        classify_filter=_parse_classes(filter_classes),
    )
    report = run_experiment(app.workspace, provider_id, app.registry, opts, app.enricher())
    app.workspace.save_eval_report(report.to_dict(), provider_id)
    app.emit(report.to_dict(), render_report_table(report))


@cli.command("compare")
@click.option("--providers", "providers_csv", required=True,
              help="Comma-separated provider ids, first one is the baseline.")
@click.option("--top-k", default=5, show_default=True, callback=_validate_top_k)
@click.option("--threshold", type=float, default=None, callback=_validate_threshold)
@click.option("--translate-to", default=None)
@click.pass_obj
def compare_cmd(app: AppContext, providers_csv, top_k, threshold, translate_to):
    """Run the evaluation once per provider and diff the hit rates."""
    provider_ids = [p.strip() for p in providers_csv.split(",") if p.strip()]
    if len(provider_ids) < 2:
        raise click.BadParameter("--providers needs at least two comma-separated ids")
    for pid in provider_ids:
        app.provider(pid)
    opts = MatchOptions(k=top_k, threshold=threshold, translate_to=translate_to)
    comparison = compare_providers(
        app.workspace, provider_ids, app.registry, opts, app.enricher()
    )
    lines = [f"{'provider':<40} {'hit rate':>9} {'delta':>8}"]
    for pid in provider_ids:
        report = comparison.reports[pid]
        delta = comparison.deltas[pid]
        lines.append(
            f"{pid:<40} {format_percent(report.hit_rate):>8}% {delta:>+8.3f}"
        )
    app.emit(comparison.to_dict(), "\n".join(lines))


@cli.command("serve")
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui-dir", type=click.Path(path_type=Path), default=None,
              help="Directory of built UI assets to serve at /.")
@click.option("--cors-origin", multiple=True, help="Allowed CORS origin (repeatable).")
@click.pass_obj
def serve_cmd(app: AppContext, port, host, ui_dir, cors_origin):
    """Run the HTTP JSON API (and optionally the triage UI)."""
    import uvicorn

    from .service import create_app

    api = create_app(
        app.workspace_path,
        registry=app.registry,
        enricher_factory=app.enricher,
        ui_dir=ui_dir,
        cors_origins=list(cors_origin),
    )
    uvicorn.run(api, host=host, port=port, log_level="info")


def _wants_json(argv: list[str]) -> bool:
    if "--format" in argv:
        idx = argv.index("--format")
        return idx + 1 < len(argv) and argv[idx + 1] == "json"
    return "--format=json" in argv


def _emit_error(argv: list[str], code: str, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    if _wants_json(argv):
        click.echo(json.dumps({"error": {"code": code, "message": message}}, sort_keys=True))


def main(argv: Optional[list[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.ClickException as exc:
        _emit_error(argv, "usage", exc.format_message())
        return 1
    except click.exceptions.Abort:
        _emit_error(argv, "aborted", "aborted")
        return 1
    except NETWORK_ERRORS as exc:
        _emit_error(argv, exc.code, str(exc))
        return 3
    except CrowdMatchError as exc:
        _emit_error(argv, exc.code, str(exc))
        return 2


if __name__ == "__main__":
    sys.exit(main())
