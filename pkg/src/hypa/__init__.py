"""Path anomaly detection with hypergeometric ensembles of De Bruijn graphs."""
from .corpus import (FirstOrderGraph, ParseError, PathCorpus, ValidationError, count_subpaths,
                     induce_graph, parse_ngram, read_ngram)
from .debruijn import (KOrderGraph, build_korder, leading_eigenvalue, path_count_bound_check,
                       possible_edges, transition_matrix)
from .ensemble import (ScoreTable, XiMatrix, classify, compute_hypa, expected_degrees, fit_xi,
                       hypa_score, hypa_scores, hypergeom_logpmf, init_xi, sample_ensemble)

__version__ = "0.1.0"
