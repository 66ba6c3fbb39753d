"""Rank/histogram representation of i.i.d. series and the d_theta
distance, with clustering algorithms and evaluation harnesses."""

from .cluster import (APResult, Dendrogram, KMeansResult, Partition,
                      affinity_propagation, ari, hc_cluster, kmeanspp)
from .metrics import (DistanceMatrix, Embedding, GaussianParams, dep_distance_sq,
                      dist_distance_sq, distance_matrix, gnpr_distance, gnpr_embedding,
                      gpr_distance_matrix, gpr_gaussian_distance, l2_distance_empirical,
                      l2_distance_matrix, l2_gaussian_closed_form, pearson_distance,
                      pearson_distance_matrix, pearson_to_spearman_gaussian)
from .panel import Panel, read_panel_csv, write_panel_csv
from .representation import (BinnedDensity, GnprRepresentation, Grid, RankMatrix,
                             build_representation, empirical_margins, histogram_density,
                             shared_grid)
from .synth import (Laplace, LabeledPanel, Normal, StudentT3, SyntheticSpec, generate,
                    preset, sample)

__version__ = "0.1.0"

__all__ = [
    "APResult", "BinnedDensity", "Dendrogram", "DistanceMatrix", "Embedding",
    "GaussianParams", "GnprRepresentation", "Grid", "KMeansResult", "LabeledPanel",
    "Laplace", "Normal", "Panel", "Partition", "RankMatrix", "StudentT3",
    "SyntheticSpec", "affinity_propagation", "ari", "build_representation",
    "dep_distance_sq", "dist_distance_sq", "distance_matrix", "empirical_margins",
    "generate", "gnpr_distance", "gnpr_embedding", "gpr_distance_matrix",
    "gpr_gaussian_distance", "hc_cluster", "histogram_density", "kmeanspp",
    "l2_distance_empirical", "l2_distance_matrix", "l2_gaussian_closed_form",
    "pearson_distance", "pearson_distance_matrix", "pearson_to_spearman_gaussian",
    "preset", "read_panel_csv", "sample", "shared_grid", "write_panel_csv",
]
