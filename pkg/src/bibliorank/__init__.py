"""Bibliometric university-ranking indicators over delimited publication corpora."""

from .assignment import (
    AssignmentConfig,
    AssignmentLink,
    AssignmentTable,
    Thesaurus,
    assign_corpus,
    author_link_strength,
    match_round1,
    match_round2,
)
from .corpus import (
    Address,
    AuthorName,
    CitationGraph,
    Corpus,
    DocType,
    InclusionConfig,
    Publication,
    countable_citations,
    inclusion_weight,
    parse_corpus,
)
from .geo import GeoTable, collaboration_distance_km, geodesic_km
from .indicators import (
    CountingScheme,
    IndicatorReport,
    compute_collab_indicators,
    compute_mcs,
    compute_mncs,
    compute_p,
    compute_pp_top,
    institution_weight,
    pearson_correlation,
)
from .normalization import CellTable, build_cells, normalized_score, top_membership
from .oracle import oracle_all_indicators, oracle_indicator
from .ranking import (
    RankingConfig,
    export_csv,
    generate_report,
    select_universities,
)
from .stability import StabilityInterval, bootstrap_interval, bootstrap_intervals
from .synthkit import SynthBundle, SynthParams, generate, write_bundle
from .textnorm import normalize_org_name

__version__ = "0.1.0"
