"""Multi-aspect pathway mining toolkit.

Event logs are modelled as multi-aspect graphs whose nodes are activity
tuples (one value per perspective plus an ordinal position).  On top of
that model the package provides a time-aware pathway dissimilarity, an
overlapping clustering step, centrality-based node relevance scoring and
threshold-driven model simplification, exposed through an HTTP service
and a thin CLI client.
"""

from .clustering import (ClusterSet, average_linkage_dendrogram,
                         cophenetic_correlation, detect_overlapping_communities,
                         similarity_graph)
from .cohort_filter import (FilterThresholds, FrequencyTable, filter_events,
                            matched_control_sample, select_cohort,
                            select_typical_codes)
from .dissimilarity import (DissimParams, DissimilarityMatrix, dissimilarity,
                            normalized_dissimilarity, pairwise_matrix)
from .eventlog import Event, EventLog, ParseConfig, parse_event_log
from .mag import Mag, Pathway, aggregate_digraph, build_mag
from .model_export import (ModelViewDoc, RenderOptions, export_dot,
                           filter_by_relevance, render_model)
from .relevance import (CentralityBundle, RelevanceParams, base_relevance,
                        base_relevance_map, compute_bundle, final_relevance,
                        parameter_sweep, relevance)

__version__ = "0.1.0"

__all__ = [
    "ClusterSet", "average_linkage_dendrogram", "cophenetic_correlation",
    "detect_overlapping_communities", "similarity_graph",
    "FilterThresholds", "FrequencyTable", "filter_events",
    "matched_control_sample", "select_cohort", "select_typical_codes",
    "DissimParams", "DissimilarityMatrix", "dissimilarity",
    "normalized_dissimilarity", "pairwise_matrix",
    "Event", "EventLog", "ParseConfig", "parse_event_log",
    "Mag", "Pathway", "aggregate_digraph", "build_mag",
    "ModelViewDoc", "RenderOptions", "export_dot", "filter_by_relevance",
    "render_model",
    "CentralityBundle", "RelevanceParams", "base_relevance",
    "base_relevance_map", "compute_bundle", "final_relevance",
    "parameter_sweep", "relevance",
    "__version__",
]
