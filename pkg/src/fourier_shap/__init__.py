"""Exact and spectral SHAP attributions on discrete product spaces, with error bounds."""
from types import ModuleType as _ModuleType

from .errors import (BasisConstructionError, CoalitionLimitError, DataError, DenseLimitError,
                     DimensionError, FitError, FourierShapError, KernelRecursionError,
                     KernelShapDegenerateError, MeasureSupportError, NumericError, ParameterError,
                     SchemaError, SpectrumError)
from .gp import (KernelOperator, ReadoutNetwork, TailStatistics, estimate_epsilon,
                 expected_residual_trace, expected_shap_bound, finite_width_bound,
                 gaussian_expectation, gaussian_w2, high_probability_bound, kl_coefficients,
                 kl_sample, laurent_massart_thresholds, moment_matched_epsilon, nngp_gram,
                 nngp_kernel, tail_statistics, tail_weights_sq)
from .measure import (BASIS_CONVENTION, FeatureSpace, ProductMeasure, TensorBasis,
                      build_coordinate_basis, evaluate_tensor_atom, inner_product, load_measure,
                      order, save_measure, support)
from .shap import (Attribution, FrequencyWeights, brute_force_shap, coalition_value,
                   fourier_shap, frequency_weights, kernel_shap, shapley_weights,
                   truncation_bound)
from .spectral import (DensePredictor, Selector, SparseFourierModel, forward_transform,
                       inverse_transform, load_model, parseval_norm, random_sparse_model,
                       save_model, truncate)

__version__ = "0.1.0"

__all__ = [name for name, obj in list(globals().items())
           if not name.startswith("_") and not isinstance(obj, _ModuleType)]
