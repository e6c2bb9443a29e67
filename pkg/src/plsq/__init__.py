"""plsq: interactive clarification engine for ambiguous text-to-SQL questions."""

from .corpus import CandidateCache, Corpus, Task, load_candidate_cache, load_corpus
from .engine import (
    Candidate,
    DecisionVariable,
    EngineConfig,
    Meaning,
    SessionState,
    apply_decision,
    apply_selection,
    characteristic_groups,
    information_gain,
    init_session,
    is_terminal,
    predicted_features,
    rank_variables,
    undo,
)
from .errors import PlsqError
from .executor import ResultTable, execute, functionally_equal, table_similarity
from .features import AtomicFeature, extract_features
from .llm import SamplingConfig, generate_candidates, validate_candidates
from .schema import DatabaseSpec, database_from_dict
from .sqlparser import canonical_sql, parse_sql

__version__ = "0.1.0"
