"""crowdmatch: link user reviews to issue-tracker entries by embedding similarity."""

from .errors import CrowdMatchError
from .match import MatchOptions, MatchPipeline, build_index, query_top_k
from .model import GoldLink, Issue, MatchCandidate, Review, ReviewClass, TriageDecision
from .providers import ProviderRegistry, default_registry
from .vectors import EmbeddingVector, cosine_similarity, l2_normalize, mean_pool
from .workspace import Workspace

__version__ = "0.1.0"

__all__ = [
    "CrowdMatchError",
    "EmbeddingVector",
    "GoldLink",
    "Issue",
    "MatchCandidate",
    "MatchOptions",
    "MatchPipeline",
    "ProviderRegistry",
    "Review",
    "ReviewClass",
    "TriageDecision",
    "Workspace",
    "build_index",
    "cosine_similarity",
    "default_registry",
    "l2_normalize",
    "mean_pool",
    "query_top_k",
    "__version__",
]
