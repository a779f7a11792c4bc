"""Diffusion-map embeddings with kernel scale selection.

Functional core by topic: ``numerics`` (dense substrate), ``diffusion``
(kernels and embeddings), ``baselines`` (pre-existing scale selectors),
``intrinsic`` (dimension estimation), ``manifold`` (feature scaling against
the intrinsic dimension), ``classification`` (label-aware criteria),
``datasets`` (generators, evaluation, I/O).  ``estimators`` exposes
scikit-learn style wrappers; ``cli`` the command-line tool.
"""

from .baselines import (ScaleSelection, kernel_sum_curve, maxmin_scale,
                        singer_grid, singer_range, std_scaling, zelnik_kernel,
                        zelnik_scales)
from .classification import (CriterionCurve, LabeledDataset, class_gap,
                             class_width, criterion_sweep,
                             embedding_scatter_ratio, generalized_eigengap,
                             sweep_grid, within_class_transition)
from .datasets import (AlignmentResult, CvReport, cross_validate,
                       embed_in_noise, embedding_mse, gen_gaussian_mixture,
                       gen_spiral_classes, gen_swiss_roll, knn_classify,
                       load_labeled_csv, load_matrix_csv, loo_knn_accuracy,
                       procrustes_align, save_matrix_csv, save_report)
from .diffusion import (Embedding, KernelPair, diffusion_distance, dm_embed,
                        gaussian_kernel, scaled_kernel)
from .errors import (DataError, DegenerateKernelError, InvalidInputError,
                     NumericError, SelectionFailedError)
from .estimators import DiffusionMap, IntrinsicDimension, ScaleSelector
from .intrinsic import (DancoStats, DimEstimate, danco, ml_dimension,
                        neighbor_angles, normalized_closest_distance,
                        sample_unit_ball, vm_fit)
from .manifold import (ManifoldScaling, correlation_feature_permutation,
                       kernel_dimension, manifold_feature_scaling,
                       optimize_pair, scaled_kernel_sum)
from .numerics import (EigenSystem, knn_indices, make_rng, median_sq_dist,
                       pairwise_sq_dist, pearson_corr, sym_eig)

__version__ = "0.1.0"
