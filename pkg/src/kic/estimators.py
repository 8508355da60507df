"""DMD, DMDc and KIC operator fits by pseudoinverse regression."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import noise
from .data import SnapshotSet, Trajectory, build_derivative_pair
from .errors import DimensionError, InsufficientDataError, MissingInputError, SpecError, WrongEstimatorError
from .models import Diagnostics, KoopmanModel, TimeMode, row_residuals
from .numkernel import DEFAULT_TRUNCATION, TruncationRule, pinv_from, svd
from .observables import ObservableSpec, lift, restriction_indices


class KicMode(str, Enum):
    """How the future input enters the target snapshots.

    ``WITH_INPUT_DYNAMICS`` regresses ``u_{k+1}`` too (square operator);
    ``NO_INPUT_DYNAMICS`` sets it to zero, which drops those rows.
    """

    WITH_INPUT_DYNAMICS = "with-input-dynamics"
    NO_INPUT_DYNAMICS = "no-input-dynamics"


@dataclass(frozen=True)
class Dither:
    amplitude: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError(f"dither amplitude must be positive, got {self.amplitude}")

    def sequence(self, n_rows: int, n_cols: int) -> np.ndarray:
        return noise.dither(self.amplitude, self.seed, n_rows, n_cols)


@dataclass(frozen=True)
class FitOptions:
    truncation: TruncationRule = DEFAULT_TRUNCATION
    time_mode: TimeMode = TimeMode.DISCRETE
    dither: Dither | None = None

    def __post_init__(self):
        object.__setattr__(self, "time_mode", TimeMode(self.time_mode))


def _regress(target: np.ndarray, omega: np.ndarray, opts: FitOptions):
    if omega.shape[1] < 1:
        raise InsufficientDataError("need at least one snapshot column")
    factors = svd(omega, opts.truncation)
    G = target @ pinv_from(factors, omega.shape)
    diagnostics = Diagnostics(
        row_residuals=tuple(float(r) for r in row_residuals(target, G @ omega)),
        rank=factors.rank,
        rank_deficient=factors.rank < omega.shape[0],
    )
    return G, diagnostics


def _dithered_omega(ss: SnapshotSet, opts: FitOptions) -> np.ndarray:
    if opts.dither is None or not ss.n_gamma:
        return ss.omega
    upsilon = ss.Upsilon + opts.dither.sequence(ss.n_gamma, ss.m)
    return np.vstack([ss.Y, upsilon])


def _identity_specs(n_y: int, n_gamma: int, square: bool):
    spec_in = ObservableSpec.identity(n_y, n_gamma)
    spec_out = spec_in if square else ObservableSpec.identity(n_y, n_gamma, with_inputs=False)
    return spec_in, spec_out


def fit_dmd(ss: SnapshotSet, opts: FitOptions | None = None) -> KoopmanModel:
    """Exact DMD: ``A = Z pinv(Y)``."""
    opts = opts or FitOptions()
    if ss.n_gamma:
        raise WrongEstimatorError("snapshot set carries inputs; use fit_dmdc or fit_kic")
    G, diagnostics = _regress(ss.Z, ss.Y, opts)
    spec_in, spec_out = _identity_specs(ss.n_y, 0, square=True)
    return KoopmanModel(G, spec_in, spec_out, ss.n_y, 0, opts.time_mode, ss.dt, diagnostics)


def fit_dmdc(ss: SnapshotSet, opts: FitOptions | None = None) -> KoopmanModel:
    """DMD with control: ``[A B] = Z pinv([Y; Upsilon])``. ``Xi`` is ignored."""
    opts = opts or FitOptions()
    if ss.Upsilon is None:
        raise MissingInputError("fit_dmdc needs an input block (Upsilon)")
    G, diagnostics = _regress(ss.Z, _dithered_omega(ss, opts), opts)
    spec_in, spec_out = _identity_specs(ss.n_y, ss.n_gamma, square=ss.n_gamma == 0)
    return KoopmanModel(G, spec_in, spec_out, ss.n_y, ss.n_gamma, opts.time_mode, ss.dt, diagnostics)


def fit_kic(ss: SnapshotSet, mode: KicMode, opts: FitOptions | None = None) -> KoopmanModel:
    """Koopman with inputs and control on identity observables.

    ``WITH_INPUT_DYNAMICS`` returns the square ``G = [Z; Xi] pinv([Y; Upsilon])``
    whose blocks ``G11, G12, G21, G22`` come from :meth:`KoopmanModel.blocks`.
    ``NO_INPUT_DYNAMICS`` is the DMDc operator.
    """
    opts = opts or FitOptions()
    mode = KicMode(mode)
    if ss.Upsilon is None:
        raise MissingInputError("fit_kic needs an input block (Upsilon)")
    if mode is KicMode.NO_INPUT_DYNAMICS:
        return fit_dmdc(ss, opts)
    if ss.Xi is None:
        raise MissingInputError("with-input-dynamics mode needs future inputs (Xi)")
    G, diagnostics = _regress(ss.delta, _dithered_omega(ss, opts), opts)
    spec_in, spec_out = _identity_specs(ss.n_y, ss.n_gamma, square=True)
    return KoopmanModel(G, spec_in, spec_out, ss.n_y, ss.n_gamma, opts.time_mode, ss.dt, diagnostics)


@dataclass(frozen=True, eq=False)
class LiftedData:
    """Lifted snapshots ready for regression.

    ``input_spec`` is reordered so the output terms lead; ``snapshots.Y`` holds
    those leading rows, ``snapshots.Upsilon`` the rest, and ``snapshots.Z`` the
    output terms one step later (or their derivatives).
    """

    snapshots: SnapshotSet
    input_spec: ObservableSpec
    output_spec: ObservableSpec
    dithered_omega: np.ndarray = field(repr=False)


def build_lifted(traj: Trajectory, input_spec: ObservableSpec, output_spec: ObservableSpec,
                 mode: KicMode, opts: FitOptions | None = None, derivatives=None) -> LiftedData:
    opts = opts or FitOptions()
    mode = KicMode(mode)
    if input_spec.n_x != traj.n_x:
        raise SpecError(f"input spec is over {input_spec.n_x} state(s), trajectory has {traj.n_x}")
    if output_spec.n_x != input_spec.n_x or output_spec.n_u != input_spec.n_u:
        raise SpecError("input and output specs are over different variables")
    if input_spec.n_u and traj.n_u not in (0, input_spec.n_u):
        raise SpecError(f"input spec is over {input_spec.n_u} input(s), trajectory has {traj.n_u}")
    idx = restriction_indices(input_spec, output_spec)
    order = idx + [k for k in range(len(input_spec)) if k not in idx]
    spec_in = input_spec.subset(order)
    p = len(output_spec)

    X = traj.states
    U = traj.inputs if input_spec.n_u else None
    rest = spec_in.subset(range(p, len(spec_in))) if len(spec_in) > p else None

    def dithered(u_block):
        if u_block is None or opts.dither is None:
            return u_block
        return u_block + opts.dither.sequence(*u_block.shape)

    if opts.time_mode is TimeMode.CONTINUOUS:
        if derivatives is None:
            raise MissingInputError("continuous fits need derivative data of the output terms")
        derivatives = np.asarray(derivatives, dtype=np.float64)
        if derivatives.ndim == 1:
            derivatives = derivatives[np.newaxis, :]
        if derivatives.shape != (p, traj.n_samples):
            raise DimensionError(
                f"derivatives must be ({p}, {traj.n_samples}) for {p} output terms, got {derivatives.shape}"
            )
        clean = lift(spec_in, X, U)
        omega_used = lift(spec_in, X, dithered(U))
        lifted = Trajectory(clean[:p], clean[p:] if rest is not None else None, dt=traj.dt, id=traj.id)
        ss = build_derivative_pair(lifted, derivatives)
    else:
        if traj.n_samples < 2:
            raise InsufficientDataError("need at least 2 samples for a discrete fit")
        U_cur = U[:, :-1] if U is not None else None
        if U is None:
            U_next = None
        elif mode is KicMode.WITH_INPUT_DYNAMICS:
            U_next = U[:, 1:]
        else:
            U_next = np.zeros_like(U[:, 1:])
        clean = lift(spec_in, X[:, :-1], U_cur)
        omega_used = lift(spec_in, X[:, :-1], dithered(U_cur))
        Z = lift(output_spec, X[:, 1:], U_next)
        ss = SnapshotSet(clean[:p], Z, clean[p:] if rest is not None else None, dt=traj.dt)
    return LiftedData(ss, spec_in, output_spec, omega_used)


def fit_kic_lifted(traj: Trajectory, input_spec: ObservableSpec, output_spec: ObservableSpec,
                   mode: KicMode = KicMode.NO_INPUT_DYNAMICS, opts: FitOptions | None = None,
                   derivatives=None) -> KoopmanModel:
    """Fit ``K`` mapping lifted input-space data onto output-space targets.

    Discrete fits target the output terms one sample later; in
    ``NO_INPUT_DYNAMICS`` mode those targets are evaluated with zero input.
    Continuous fits target ``derivatives``, one row per output term, sampled
    alongside ``traj``. The returned model's ``input_spec`` lists the output
    terms first, so ``K`` has shape ``(len(output_spec), len(input_spec))``.

    Dictionary closure is not checked: a term whose update is not linear in
    the dictionary still gets its least-squares row, and
    ``model.diagnostics.row_residuals`` shows how badly it fits.
    """
    opts = opts or FitOptions()
    data = build_lifted(traj, input_spec, output_spec, mode, opts, derivatives)
    ss = data.snapshots
    G, diagnostics = _regress(ss.Z, data.dithered_omega, opts)
    return KoopmanModel(G, data.input_spec, output_spec, ss.n_y, ss.n_gamma,
                        opts.time_mode, traj.dt, diagnostics)
