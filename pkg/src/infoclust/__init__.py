"""Information-transfer influence graphs and clustering for linear stochastic systems."""

__version__ = "0.1.0"

from .errors import (ConvergenceError, DataError, InfoclustError, NumericalDomainError,
                     SingularBlockError)
from .statespace import (LinearModel, SubspacePartition, covariance_step, schur_complement,
                         spectral_radius, steady_state_covariance)
from .simulate import (TimeSeries, make_oscillator_network, make_three_state, oscillator_groups,
                       simulate_linear)
from .koopman import fit_frozen, fit_koopman, freeze_dataset, snapshots
from .infotransfer import (TransferMatrix, conditional_entropy_term, linear_transfer,
                           model_transfer_matrix, steady_state_transfer, transfer_from_data,
                           transfer_matrix)
from .influence import InfluenceGraph, build_influence_graph, export_graph, influence_distance
from .clustering import (ClusterLabels, Dendrogram, hierarchical_cluster, kmeans_cluster,
                         spectral_clustering, spectral_embedding, symmetrize_affinity,
                         symmetrize_distance)
