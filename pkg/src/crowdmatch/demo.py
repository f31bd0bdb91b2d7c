"""Bundled demo corpus: 12 media-player issues, 6 gold-linked user reviews.

Small enough to read in one sitting, rich enough that the reference provider
ranks 4 of the 6 gold issues into the top five. Used by the test suite and
the README quickstart.
"""

from __future__ import annotations

import json
import tempfile
from importlib import resources
from pathlib import Path

from .importer import ImportReport, import_reviews
from .model import Issue
from .workspace import Workspace


def seed_mini_corpus(workspace: Workspace) -> ImportReport:
    """Load the bundled issues and reviews into a workspace."""
    data = resources.files("crowdmatch.data").joinpath("mini_corpus")
    issues = [
        Issue.from_record(json.loads(line))
        for line in data.joinpath("issues.jsonl").read_text("utf-8").splitlines()
        if line.strip()
    ]
    workspace.upsert_issues(issues)

    csv_text = data.joinpath("reviews.csv").read_text("utf-8")
    with tempfile.TemporaryDirectory() as tmp:
        csv_path = Path(tmp) / "reviews.csv"
        csv_path.write_text(csv_text, encoding="utf-8")
        return import_reviews(workspace, csv_path, fmt="csv", lang="en")
