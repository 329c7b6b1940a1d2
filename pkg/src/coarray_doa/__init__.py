"""Coarray DOA estimation for sparse linear arrays.

Standard and finite-sample-corrected coarray models, list-based ML OMP and
baseline sparse solvers, SS-MUSIC, and the OSPA metric.
"""
from .coarray import (CoarrayModel, CoarrayVector, dctm, edctm, eta_prime_estimated,
                      eta_prime_exact, eta_prime_moments_oracle)
from .dictionary import AngularGrid, Dictionary, build_dictionary, build_grid
from .geometry import (ArrayGeometry, CoarrayIndex, GeometryKind, UnsupportedGeometryError,
                       build_geometry, coarray_index, coarray_select, load_geometry)
from .metrics import ospa_aggregate, ospa_single_trial
from .numerics import (Projector, RankDeficientError, hermitian_eig, ml_log_score, ml_score,
                       projector, restricted_least_squares)
from .recovery import RecoveryResult, cosamp, extract_doas, iht, lbml_omp, omp, romp
from .signal_model import (CouplingModel, SnapshotSet, SourceScene, coupling_matrix,
                           simulate_snapshots, steering_matrix)
from .subspace import MusicSpectrum, contiguous_segment, ss_music

__version__ = "0.1.0"
