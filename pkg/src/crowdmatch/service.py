"""HTTP JSON API over one workspace, for the triage UI and other clients.

Every error body parses as {"status": int, "code": str, "message": str}.
Reads run against immutable snapshots; writes (triage, lazy index builds) are
serialized through the workspace writer lock and the pipeline build guard.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Callable, Optional

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse

from .enrich import Enricher, TranslationCache
from .errors import (
    BackendUnavailable,
    CrowdMatchError,
    EmptyText,
    NoEmbeddings,
    ProviderUnavailable,
    UnknownIssue,
    UnknownProvider,
    UnknownReview,
)
from .match import MatchOptions, MatchPipeline, match_payload
from .model import Review, ReviewClass, TriageDecision, TriageKind
from .providers import ProviderRegistry, default_registry
from .workspace import Workspace, review_id_for_text

logger = logging.getLogger(__name__)

PAGE_SIZE = 50

_CLASS_ALIASES = {
    "bug": ReviewClass.BUG_REPORT,
    "bug_report": ReviewClass.BUG_REPORT,
    "feature": ReviewClass.FEATURE_REQUEST,
    "feature_request": ReviewClass.FEATURE_REQUEST,
    "irrelevant": ReviewClass.IRRELEVANT,
}

_DECISIONS = {
    "linked": TriageKind.LINKED,
    "new_issue": TriageKind.NEW_ISSUE_NEEDED,
    "dismissed": TriageKind.DISMISSED,
}


class _BadRequest(CrowdMatchError):
    code = "invalid_body"


def _error_response(status: int, code: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status,
        content={"status": status, "code": code, "message": message},
    )


_STATUS_BY_ERROR = (
    (_BadRequest, 400),
    (EmptyText, 400),
    (UnknownProvider, 409),
    (NoEmbeddings, 409),
    (UnknownIssue, 404),
    (UnknownReview, 404),
    (ProviderUnavailable, 502),
    (BackendUnavailable, 502),
)


def _status_for(exc: CrowdMatchError) -> int:
    for err_type, status in _STATUS_BY_ERROR:
        if isinstance(exc, err_type):
            return status
    return 500


def create_app(
    workspace_path: Path,
    registry: Optional[ProviderRegistry] = None,
    enricher_factory: Optional[Callable[[], Enricher]] = None,
    ui_dir: Optional[Path] = None,
    cors_origins: Optional[list[str]] = None,
) -> FastAPI:
    workspace = Workspace.init(Path(workspace_path))
    registry = registry if registry is not None else default_registry()
    if enricher_factory is not None:
        enricher = enricher_factory()
    else:
        enricher = Enricher(cache=TranslationCache(workspace.translation_cache_path()))
    pipeline = MatchPipeline(workspace, registry, enricher)

    app = FastAPI(title="crowdmatch", docs_url="/api/docs", openapi_url="/api/openapi.json")

    if cors_origins:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware,
            allow_origins=cors_origins,
            allow_methods=["*"],
            allow_headers=["*"],
        )

    @app.exception_handler(CrowdMatchError)
    async def crowdmatch_error_handler(request: Request, exc: CrowdMatchError):
        return _error_response(_status_for(exc), exc.code, str(exc))

    @app.exception_handler(RequestValidationError)
    async def validation_error_handler(request: Request, exc: RequestValidationError):
        return _error_response(400, "invalid_body", str(exc.errors()[:1]))

    def _require(condition: bool, message: str) -> None:
        if not condition:
            raise _BadRequest(message)

    @app.post("/api/match")
    async def api_match(body: dict):
        _require(isinstance(body, dict), "body must be a JSON object")
        text = body.get("text")
        _require(isinstance(text, str) and bool(text.strip()), "'text' must be a non-empty string")
        k = body.get("k", 5)
        _require(isinstance(k, int) and k >= 1, "'k' must be an integer >= 1")
        threshold = body.get("threshold")
        if threshold is not None:
            _require(
                isinstance(threshold, (int, float)) and -1.0 <= float(threshold) <= 1.0,
                "'threshold' must lie in [-1, 1]",
            )
            threshold = float(threshold)
        provider_id = body.get("provider", "ref-384")
        lang = body.get("lang", "en")
        translate_to = body.get("translate_to")
        raw_filter = body.get("classify_filter")
        classify_filter = None
        if raw_filter is not None:
            _require(isinstance(raw_filter, list), "'classify_filter' must be a list of class names")
            classes = set()
            for name in raw_filter:
                _require(
                    isinstance(name, str) and name.lower() in _CLASS_ALIASES,
                    f"unknown review class {name!r}",
                )
                classes.add(_CLASS_ALIASES[name.lower()])
            classify_filter = frozenset(classes)

        opts = MatchOptions(
            provider_id=provider_id,
            k=k,
            threshold=threshold,
            translate_to=translate_to,
            classify_filter=classify_filter,
        )
        result = pipeline.match_text(text, opts, lang=lang)
        return match_payload(result, workspace.load_issues())

    @app.post("/api/triage", status_code=201)
    async def api_triage(body: dict):
        _require(isinstance(body, dict), "body must be a JSON object")
        decision_raw = body.get("decision")
        _require(
            isinstance(decision_raw, str) and decision_raw in _DECISIONS,
            f"'decision' must be one of {sorted(_DECISIONS)}",
        )
        decision_kind = _DECISIONS[decision_raw]
        issue_iid = body.get("issue_iid")
        if decision_kind is TriageKind.LINKED:
            _require(isinstance(issue_iid, int) and issue_iid > 0,
                     "'linked' needs a positive integer 'issue_iid'")
        else:
            _require(issue_iid is None, f"decision {decision_raw!r} must not carry an issue_iid")

        review_id = body.get("review_id")
        review_text = body.get("review_text")
        _require(
            (review_id is None) != (review_text is None),
            "exactly one of 'review_id' or 'review_text' is required",
        )
        if review_text is not None:
            _require(isinstance(review_text, str) and bool(review_text.strip()),
                     "'review_text' must be a non-empty string")
            review_id = review_id_for_text(review_text)
            if review_id not in workspace.load_reviews():
                workspace.save_review(
                    Review(
                        id=review_id,
                        original_text=review_text,
                        original_lang=body.get("lang", "en"),
                        source="triage",
                    )
                )

        decision = TriageDecision(
            review_id=review_id,
            decision=decision_kind,
            issue_iid=issue_iid,
            decided_by=body.get("decided_by", "api"),
        )
        stored = workspace.record_triage(decision)
        return stored.to_record()

    @app.get("/api/stats")
    async def api_stats():
        stats = workspace.stats()
        stats["providers"] = registry.list_providers()
        stats["last_eval"] = workspace.latest_eval_report()
        return stats

    @app.get("/api/issues")
    async def api_issues(query: str = "", page: int = 1):
        _require(page >= 1, "'page' must be >= 1")
        issues = workspace.load_issues()
        needle = query.strip().lower()
        selected = []
        for iid in sorted(issues):
            issue = issues[iid]
            shown_title = issue.title_translated or issue.title
            if needle and needle not in shown_title.lower():
                continue
            selected.append(
                {
                    "iid": issue.iid,
                    "title": issue.title,
                    "title_translated": issue.title_translated,
                    "state": issue.state.value,
                    "labels": list(issue.labels),
                    "url": issue.url,
                }
            )
        start = (page - 1) * PAGE_SIZE
        return {
            "issues": selected[start : start + PAGE_SIZE],
            "page": page,
            "page_size": PAGE_SIZE,
            "total": len(selected),
        }

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
