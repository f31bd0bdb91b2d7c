"""Shared fixtures: stub providers/adapters, recorded HTTP transports, an
in-process JSON endpoint server, and deterministic corpus builders."""

from __future__ import annotations

import json
import random
import threading
from datetime import datetime, timedelta, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

from crowdmatch.collect import HttpResponse
from crowdmatch.errors import ProviderUnavailable
from crowdmatch.model import GoldLink, Issue, LinkOrigin, Review, ReviewClass
from crowdmatch.vectors import EmbeddingVector
from crowdmatch.workspace import Workspace

FIXTURES_DIR = Path(__file__).parent / "fixtures"


class StubVectorProvider:
    """Provider returning pre-set vectors per exact text; raises on unknown text."""

    def __init__(self, provider_id: str, dim: int, table: dict[str, list[float]]):
        self.provider_id = provider_id
        self.dim = dim
        self._table = table

    def embed(self, text: str) -> EmbeddingVector:
        values = self._table[text]
        return EmbeddingVector(provider_id=self.provider_id, dim=self.dim, values=tuple(values))


class RecordedTranslationAdapter:
    """Replays recorded (source, target, text) -> text translations."""

    def __init__(self, table: dict[tuple[str, str, str], str], provider_name: str = "recorded"):
        self.provider_name = provider_name
        self._table = table
        self.calls = 0

    def translate(self, text: str, source: str, target: str) -> str:
        self.calls += 1
        try:
            return self._table[(source, target, text)]
        except KeyError:
            raise ProviderUnavailable(f"no recording for {source}->{target}: {text!r}") from None


class OfflineTranslationAdapter:
    provider_name = "offline"

    def translate(self, text: str, source: str, target: str) -> str:
        raise ProviderUnavailable("adapter is offline")


class RecordedClassifierAdapter:
    def __init__(self, table: dict[str, ReviewClass]):
        self._table = table

    def classify(self, text: str) -> ReviewClass:
        return self._table[text]


class FixtureTransport:
    """Replays recorded tracker pages; optionally fails after page N or rate-limits."""

    def __init__(self, exchanges: list[dict], fail_after_page: int | None = None):
        self._by_page = {int(e["params"]["page"]): e for e in exchanges}
        self._fail_after_page = fail_after_page
        self.requests: list[dict] = []

    def get(self, url: str, headers: dict, params: dict) -> HttpResponse:
        self.requests.append({"url": url, "headers": dict(headers), "params": dict(params)})
        page = int(params["page"])
        if self._fail_after_page is not None and page > self._fail_after_page:
            from crowdmatch.errors import NetworkFailure

            raise NetworkFailure("simulated connection drop")
        exchange = self._by_page[page]
        return HttpResponse(
            status=exchange.get("status", 200),
            headers=dict(exchange.get("headers", {})),
            body=exchange.get("body"),
        )


class LocalJsonServer:
    """Tiny threaded HTTP server; routes map 'POST /path' to handler(body)->(status, body)."""

    def __init__(self, routes: dict):
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self):
                length = int(self.headers.get("Content-Length", "0"))
                try:
                    body = json.loads(self.rfile.read(length) or b"{}")
                except json.JSONDecodeError:
                    body = {}
                handler = outer.routes.get(f"POST {self.path}")
                if handler is None:
                    status, payload = 404, {"error": "no such route"}
                else:
                    status, payload = handler(body)
                data = json.dumps(payload).encode("utf-8")
                self.send_response(status)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(data)))
                self.end_headers()
                self.wfile.write(data)

            def log_message(self, *args):
                pass

        self.routes = routes
        self._server = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)

    @property
    def base_url(self) -> str:
        host, port = self._server.server_address
        return f"http://{host}:{port}"

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._server.shutdown()
        self._server.server_close()


def tracker_pages(n_issues: int, per_page: int = 100, start_iid: int = 1) -> list[dict]:
    """Recorded-exchange shaped pages for a project with n_issues issues."""
    base = datetime(2024, 1, 1, tzinfo=timezone.utc)
    pages = []
    iid = start_iid
    page_no = 1
    remaining = n_issues
    while remaining > 0 or page_no == 1:
        count = min(per_page, remaining)
        body = []
        for _ in range(count):
            body.append(
                {
                    "iid": iid,
                    "title": f"Tracker issue {iid} needs attention",
                    "description": f"Autogenerated description for issue {iid}.",
                    "labels": ["imported"],
                    "state": "opened" if iid % 3 else "closed",
                    "web_url": f"https://tracker.example/proj/-/issues/{iid}",
                    "created_at": (base + timedelta(hours=iid)).isoformat(),
                }
            )
            iid += 1
        remaining -= count
        headers = {"X-Next-Page": str(page_no + 1)} if remaining > 0 else {"X-Next-Page": ""}
        pages.append(
            {
                "params": {"per_page": str(per_page), "page": str(page_no)},
                "status": 200,
                "headers": headers,
                "body": body,
            }
        )
        page_no += 1
    return pages


def load_recorded_pages(name: str) -> list[dict]:
    return json.loads((FIXTURES_DIR / name).read_text(encoding="utf-8"))


# ---------------------------------------------------------------------------
# Benchmark corpus: 574 issues, 69 reviews, 23 gold links, built so the
# reference hashing provider ranks exactly 13 gold issues into the top five.
# ---------------------------------------------------------------------------

_ADJECTIVES = [
    "crimson", "amber", "cobalt", "ivory", "jade", "umber", "teal", "coral",
    "slate", "olive", "maroon", "ochre", "indigo", "sepia", "azure", "pearl",
    "bronze", "copper", "silver", "golden", "violet", "scarlet", "emerald",
    "sable", "tawny",
]
_COMPONENTS = [
    "toolbar", "sidebar", "importer", "exporter", "scheduler", "notifier",
    "uploader", "downloader", "profile", "dashboard", "calendar", "gallery",
    "composer", "inbox", "archive", "ledger", "tracker", "planner", "editor",
    "viewer", "scanner", "recorder", "mixer", "router",
]
# Reserved vocabulary for gold pairs; never used in filler titles.
_GOLD_NOUNS = [
    "odometer", "saddlebag", "handlebar", "kickstand", "derailleur", "pannier",
    "sprocket", "crankset", "mudguard", "freewheel", "headlamp", "reflector",
    "chainring", "dynamo", "tachometer", "speedline", "cadence", "gearshift",
    "pedalarm", "wheelhub", "spokeset", "valvecap", "brakepad",
]
_GOLD_AREAS = [
    "startup", "checkout", "signup", "logbook", "billing", "syncing", "export",
    "replay", "overlay", "summary", "ranking", "routing", "mapping", "pairing",
    "backup", "restore", "capture", "preview", "upload", "history", "badges",
    "streaks", "rewards",
]

N_BENCH_ISSUES = 574
N_BENCH_REVIEWS = 69
N_BENCH_GOLD = 23
N_BENCH_HITS = 13
_DECOY_IIDS = (550, 551, 552, 553, 554)


def benchmark_issue_titles() -> dict[int, str]:
    rng = random.Random(20240601)
    titles: dict[int, str] = {}
    for i in range(1, N_BENCH_GOLD + 1):
        noun, area = _GOLD_NOUNS[i - 1], _GOLD_AREAS[i - 1]
        if i <= N_BENCH_HITS:
            titles[i] = f"Crash in {noun} {area} screen"
        else:
            titles[i] = f"Improve {noun} {area} handling"
    for iid in _DECOY_IIDS:
        titles[iid] = f"Overall experience feedback summary {iid}"
    for iid in range(1, N_BENCH_ISSUES + 1):
        if iid in titles:
            continue
        adj = rng.choice(_ADJECTIVES)
        comp = rng.choice(_COMPONENTS)
        titles[iid] = f"Update {adj} {comp} module"
    return titles


def benchmark_reviews() -> list[tuple[str, str, int | None]]:
    """(review_id, text, gold_iid) rows; first 23 carry gold links."""
    rows: list[tuple[str, str, int | None]] = []
    for i in range(1, N_BENCH_GOLD + 1):
        rid = f"r{i:02d}"
        noun, area = _GOLD_NOUNS[i - 1], _GOLD_AREAS[i - 1]
        if i <= N_BENCH_HITS:
            text = f"App crashes while using the {noun} {area} screen"
        else:
            text = f"Honestly the overall experience feedback left here is negative {i}"
        rows.append((rid, text, i))
    for i in range(N_BENCH_GOLD + 1, N_BENCH_REVIEWS + 1):
        rows.append((f"r{i:02d}", f"General remark number {i} about everyday usage", None))
    return rows


def build_benchmark_workspace(root: Path) -> Workspace:
    ws = Workspace.init(root, project="benchmark-fixture")
    base = datetime(2024, 5, 1, tzinfo=timezone.utc)
    titles = benchmark_issue_titles()
    issues = [
        Issue(
            iid=iid,
            title=title,
            url=f"https://tracker.example/bike/-/issues/{iid}",
            created_at=base + timedelta(hours=iid),
        )
        for iid, title in sorted(titles.items())
    ]
    ws.upsert_issues(issues)
    reviews = []
    links = []
    for rid, text, gold in benchmark_reviews():
        reviews.append(Review(id=rid, original_text=text, original_lang="en", source="fixture"))
        if gold is not None:
            links.append(GoldLink(review_id=rid, issue_iid=gold, origin=LinkOrigin.IMPORTED))
    ws.add_reviews(reviews, links)
    return ws


def write_benchmark_reviews_csv(path: Path) -> None:
    lines = ["id,text,lang,issue_iid"]
    for rid, text, gold in benchmark_reviews():
        quoted = '"' + text.replace('"', '""') + '"'
        lines.append(f"{rid},{quoted},en,{gold if gold is not None else ''}")
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Contrast fixture: two stub providers over one workspace, provider A hitting
# 3 of 23 gold reviews and provider B 13 of 23, to check comparison reports.
# ---------------------------------------------------------------------------


def _basis(dim: int, axis: int, value: float = 1.0) -> list[float]:
    values = [0.0] * dim
    values[axis] = value
    return values


def build_contrast_fixture(root: Path):
    """Workspace + (provider_a, provider_b) stubs with exact 3/23 and 13/23 hits."""
    dim = 2 * N_BENCH_GOLD
    ws = Workspace.init(root, project="contrast-fixture")

    review_rows = [(f"r{i:02d}", f"survey review number {i}", i) for i in range(1, N_BENCH_GOLD + 1)]
    issue_titles = {i: f"survey issue number {i}" for i in range(1, N_BENCH_GOLD + 1)}
    for iid in (900, 901, 902, 903, 904):
        issue_titles[iid] = f"survey decoy issue {iid}"

    ws.upsert_issues([Issue(iid=iid, title=t) for iid, t in sorted(issue_titles.items())])
    ws.add_reviews(
        [Review(id=rid, original_text=text, original_lang="en") for rid, text, _ in review_rows],
        [GoldLink(review_id=rid, issue_iid=gold) for rid, _, gold in review_rows],
    )

    everywhere = [0.0] * dim
    for i in range(N_BENCH_GOLD):
        everywhere[2 * i] = 1.0

    def provider_table(n_hits: int) -> dict[str, list[float]]:
        table: dict[str, list[float]] = {}
        for i in range(1, N_BENCH_GOLD + 1):
            table[f"survey review number {i}"] = _basis(dim, 2 * (i - 1))
            if i <= n_hits:
                table[f"survey issue number {i}"] = _basis(dim, 2 * (i - 1))
            else:
                table[f"survey issue number {i}"] = _basis(dim, 2 * (i - 1) + 1)
        for iid in (900, 901, 902, 903, 904):
            table[f"survey decoy issue {iid}"] = list(everywhere)
        return table

    provider_a = StubVectorProvider("fixture-a", dim, provider_table(3))
    provider_b = StubVectorProvider("fixture-b", dim, provider_table(13))
    return ws, provider_a, provider_b
