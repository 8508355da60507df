"""Koopman operator fits for systems with inputs and control.

The estimators regress lifted snapshot data onto one-step-ahead targets by
truncated-SVD pseudoinverse. ``fit_dmd``, ``fit_dmdc`` and ``fit_kic`` work on
identity observables; ``fit_kic_lifted`` works on monomial dictionaries with a
separate output space.
"""
from .data import SnapshotSet, Trajectory, build_derivative_pair, build_pair, build_trio, load_csv, save_csv
from .errors import (ClosureError, DimensionError, InsufficientDataError, KicError, MissingInputError,
                     ModelLoadError, ParseError, SpecError, WrongEstimatorError)
from .estimators import Dither, FitOptions, KicMode, build_lifted, fit_dmd, fit_dmdc, fit_kic, fit_kic_lifted
from .models import (KoopmanModel, ShapeKind, TimeMode, eigenfunction_eval, load_model, predict, save_model,
                     spectral_predict)
from .numkernel import DEFAULT_TRUNCATION, TruncationRule, eig, pinv, svd
from .observables import ObservableSpec, ObservableTerm, lift

__all__ = [
    "SnapshotSet", "Trajectory", "build_derivative_pair", "build_pair", "build_trio", "load_csv", "save_csv",
    "ClosureError", "DimensionError", "InsufficientDataError", "KicError", "MissingInputError",
    "ModelLoadError", "ParseError", "SpecError", "WrongEstimatorError",
    "Dither", "FitOptions", "KicMode", "build_lifted", "fit_dmd", "fit_dmdc", "fit_kic", "fit_kic_lifted",
    "KoopmanModel", "ShapeKind", "TimeMode", "eigenfunction_eval", "load_model", "predict", "save_model",
    "spectral_predict",
    "DEFAULT_TRUNCATION", "TruncationRule", "eig", "pinv", "svd",
    "ObservableSpec", "ObservableTerm", "lift",
]
