"""Issue collection from a GitLab-style REST tracker.

Pages through GET {base}/api/v4/projects/{id}/issues at 100 records per page,
following the X-Next-Page response header until it runs out. Every page is
upserted into the workspace as soon as it arrives, so an interrupted run
keeps its progress and a re-run converges to the same final state.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol
from urllib.parse import quote, urlsplit

from .enrich import Enricher
from .errors import AuthFailure, NetworkFailure, RateLimited
from .model import Issue, IssueState, parse_timestamp, utc_now
from .workspace import Workspace

logger = logging.getLogger(__name__)

PER_PAGE = 100
DEFAULT_HOST = "https://gitlab.com"


@dataclass
class HttpResponse:
    status: int
    headers: dict[str, str] = field(default_factory=dict)
    body: object = None

    def header(self, name: str) -> Optional[str]:
        for key, value in self.headers.items():
            if key.lower() == name.lower():
                return value
        return None


class HttpTransport(Protocol):
    def get(self, url: str, headers: dict[str, str], params: dict[str, str]) -> HttpResponse: ...


class RequestsTransport:
    """Default transport over a pooled requests session."""

    def __init__(self, session=None, timeout: float = 30.0):
        import requests

        self._session = session if session is not None else requests.Session()
        self._timeout = timeout

    def get(self, url: str, headers: dict[str, str], params: dict[str, str]) -> HttpResponse:
        import requests

        try:
            resp = self._session.get(url, headers=headers, params=params, timeout=self._timeout)
        except requests.RequestException as exc:
            raise NetworkFailure(f"GET {url} failed: {exc}") from exc
        try:
            body = resp.json() if resp.content else None
        except ValueError:
            body = None
        return HttpResponse(status=resp.status_code, headers=dict(resp.headers), body=body)


def resolve_project_ref(project_ref: str) -> str:
    """Turn a project reference into the issues listing URL.

    Accepted forms: a full '/api/v4/projects/...' URL, 'https://host/group/proj',
    'group/proj' (assumes gitlab.com), or a bare numeric project id.
    """
    ref = project_ref.strip().rstrip("/")
    if "/api/v4/projects/" in ref:
        return ref if ref.endswith("/issues") else ref + "/issues"
    if ref.startswith("http://") or ref.startswith("https://"):
        parts = urlsplit(ref)
        base = f"{parts.scheme}://{parts.netloc}"
        project = quote(parts.path.strip("/"), safe="")
        return f"{base}/api/v4/projects/{project}/issues"
    if ref.isdigit():
        return f"{DEFAULT_HOST}/api/v4/projects/{ref}/issues"
    return f"{DEFAULT_HOST}/api/v4/projects/{quote(ref, safe='')}/issues"


def _issue_from_payload(payload: dict, translate_to: Optional[str],
                        enricher: Optional[Enricher]) -> Issue:
    state_raw = payload.get("state", "open")
    state = IssueState.CLOSED if state_raw == "closed" else IssueState.OPEN
    created = payload.get("created_at")
    title = payload["title"]
    title_translated = None
    if translate_to is not None and enricher is not None:
        # Source language is unknown at collection time; the adapter detects it.
        title_translated = enricher.translate(title, "auto", translate_to)
    return Issue(
        iid=int(payload["iid"]),
        title=title,
        title_translated=title_translated,
        description=payload.get("description"),
        labels=tuple(payload.get("labels", ())),
        state=state,
        url=payload.get("web_url"),
        created_at=parse_timestamp(created) if created else utc_now(),
    )


class IssueCollector:
    """Tracker client with pagination, auth, and rate-limit handling."""

    def __init__(
        self,
        transport: Optional[HttpTransport] = None,
        sleep: Callable[[float], None] = time.sleep,
        max_rate_limit_retries: int = 5,
    ):
        self._transport = transport if transport is not None else RequestsTransport()
        self._sleep = sleep
        self._max_rate_limit_retries = max_rate_limit_retries

    def _fetch_page(self, url: str, headers: dict[str, str], page: int) -> HttpResponse:
        retries = 0
        while True:
            resp = self._transport.get(
                url, headers=headers, params={"per_page": str(PER_PAGE), "page": str(page)}
            )
            if resp.status in (401, 403):
                raise AuthFailure(f"tracker rejected credentials (HTTP {resp.status})")
            if resp.status == 429:
                if retries >= self._max_rate_limit_retries:
                    raise RateLimited(f"still rate-limited after {retries} retries")
                delay = float(resp.header("Retry-After") or "1")
                logger.info("rate limited on page %d, waiting %.1fs", page, delay)
                self._sleep(delay)
                retries += 1
                continue
            if resp.status >= 400:
                raise NetworkFailure(f"tracker returned HTTP {resp.status} for page {page}")
            if not isinstance(resp.body, list):
                raise NetworkFailure(f"tracker sent a non-list body for page {page}")
            return resp

    def collect(
        self,
        workspace: Workspace,
        project_ref: str,
        auth_token: Optional[str] = None,
        translate_to: Optional[str] = None,
        enricher: Optional[Enricher] = None,
    ) -> int:
        """Collect all issues (open and closed) into the workspace; returns the count.

        Upserts are per page, so partial progress survives failures and
        re-running is idempotent.
        """
        url = resolve_project_ref(project_ref)
        headers = {"PRIVATE-TOKEN": auth_token} if auth_token else {}
        page = 1
        total = 0
        while True:
            resp = self._fetch_page(url, headers, page)
            issues = []
            for payload in resp.body:
                try:
                    issues.append(_issue_from_payload(payload, translate_to, enricher))
                except (KeyError, ValueError) as exc:
                    logger.warning("skipping malformed issue payload on page %d: %s", page, exc)
            workspace.upsert_issues(issues)
            total += len(issues)
            next_page = resp.header("X-Next-Page")
            if not next_page:
                break
            page = int(next_page)
        return total
