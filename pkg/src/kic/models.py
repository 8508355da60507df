"""Fitted Koopman models: spectra, eigenfunctions, prediction and JSON persistence."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from . import numkernel
from .data import SnapshotSet
from .errors import ClosureError, DimensionError, MissingInputError, ModelLoadError, SpecError
from .observables import ObservableSpec

SCHEMA_VERSION = 1
_RESIDUAL_FLOOR = 1e-300


class TimeMode(str, Enum):
    DISCRETE = "discrete"
    CONTINUOUS = "continuous"


class ShapeKind(str, Enum):
    SQUARE = "square"
    RECTANGULAR = "rectangular"


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigen-triplets of a square operator or singular triplets of a rectangular one.

    Square: ``values`` are eigenvalues, ``right_modes`` solve ``G v = lam v`` and
    ``left_modes`` solve ``w^H G = lam w^H``. Rectangular: ``values`` are singular
    values with ``G v_j = sigma_j q_j``, ``left_modes`` holding ``q_j`` and
    ``right_modes`` holding ``v_j``. Modes are columns.
    """

    kind: ShapeKind
    values: np.ndarray
    right_modes: np.ndarray
    left_modes: np.ndarray

    @property
    def eigenvalues(self) -> np.ndarray:
        if self.kind is not ShapeKind.SQUARE:
            raise AttributeError("rectangular operators have singular values, not eigenvalues")
        return self.values

    @property
    def singular_values(self) -> np.ndarray:
        if self.kind is not ShapeKind.RECTANGULAR:
            raise AttributeError("square operators expose eigenvalues; use numkernel.svd for singular values")
        return self.values


def decompose(operator: np.ndarray) -> SpectralDecomposition:
    p, q = operator.shape
    if p == q:
        ed = numkernel.eig(operator)
        return SpectralDecomposition(ShapeKind.SQUARE, ed.eigenvalues, ed.right_vectors, ed.left_vectors)
    f = numkernel.svd(operator, numkernel.TruncationRule.exact())
    return SpectralDecomposition(
        ShapeKind.RECTANGULAR, f.singular_values,
        f.right_vectors.astype(complex), f.left_vectors.astype(complex),
    )


@dataclass(frozen=True)
class Diagnostics:
    """Training-fit diagnostics.

    ``row_residuals`` are relative per-row residuals of the regression that
    produced the operator; ``rank`` is the retained rank of the regressor
    matrix and ``rank_deficient`` is set when it falls short of full row rank.
    """

    row_residuals: tuple[float, ...] = ()
    rank: int | None = None
    rank_deficient: bool = False

    @property
    def max_residual(self) -> float:
        return max(self.row_residuals, default=float("nan"))


@dataclass(frozen=True, eq=False)
class KoopmanModel:
    """A fitted operator together with the dictionaries it maps between.

    ``operator`` is ``(p, q)``: it acts on ``q`` lifted input-space values and
    returns ``p`` output-space values. ``n_y`` and ``n_gamma`` split the input
    space into its leading output-aligned block and the trailing input block.
    """

    operator: np.ndarray
    input_spec: ObservableSpec
    output_spec: ObservableSpec
    n_y: int
    n_gamma: int
    time_mode: TimeMode = TimeMode.DISCRETE
    dt: float = 1.0
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    spectral: SpectralDecomposition | None = None

    def __post_init__(self):
        G = np.array(self.operator, dtype=np.float64)
        if G.ndim != 2:
            raise DimensionError(f"operator must be 2-D, got shape {G.shape}")
        G.setflags(write=False)
        object.__setattr__(self, "operator", G)
        object.__setattr__(self, "time_mode", TimeMode(self.time_mode))
        p, q = G.shape
        if len(self.output_spec) != p or len(self.input_spec) != q:
            raise DimensionError(
                f"operator {G.shape} does not match specs ({len(self.output_spec)} outputs, "
                f"{len(self.input_spec)} inputs)"
            )
        if self.n_y + self.n_gamma != q:
            raise DimensionError(f"n_y + n_gamma = {self.n_y + self.n_gamma}, operator has {q} columns")
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if self.spectral is None:
            object.__setattr__(self, "spectral", decompose(G))

    @property
    def shape_kind(self) -> ShapeKind:
        p, q = self.operator.shape
        return ShapeKind.SQUARE if p == q else ShapeKind.RECTANGULAR

    @property
    def p(self) -> int:
        return self.operator.shape[0]

    @property
    def q(self) -> int:
        return self.operator.shape[1]

    @property
    def A(self) -> np.ndarray:
        return self.operator[: min(self.n_y, self.p), : self.n_y]

    @property
    def B(self) -> np.ndarray:
        return self.operator[: min(self.n_y, self.p), self.n_y:]

    def blocks(self) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """``(G11, G12, G21, G22)`` of a square operator split at ``n_y``."""
        if self.shape_kind is not ShapeKind.SQUARE:
            raise DimensionError("block view needs a square operator")
        G, n = self.operator, self.n_y
        return G[:n, :n], G[:n, n:], G[n:, :n], G[n:, n:]

    @property
    def spectral_radius(self) -> float:
        if self.shape_kind is ShapeKind.SQUARE:
            return float(np.max(np.abs(self.spectral.values), initial=0.0))
        if self.p <= self.n_y:
            A = self.operator[:, : self.p]
            return float(np.max(np.abs(np.linalg.eigvals(A)), initial=0.0))
        return float("nan")

    def to_dict(self) -> dict:
        sp = self.spectral
        spectral = {
            "kind": sp.kind.value,
            ("eigenvalues" if sp.kind is ShapeKind.SQUARE else "singular_values"): _encode_complex(sp.values),
            "right_modes": _encode_complex(sp.right_modes),
            "left_modes": _encode_complex(sp.left_modes),
        }
        d = self.diagnostics
        return {
            "schema_version": SCHEMA_VERSION,
            "shape_kind": self.shape_kind.value,
            "operator": self.operator.tolist(),
            "dims": {"p": self.p, "q": self.q, "n_y": self.n_y, "n_gamma": self.n_gamma},
            "input_spec": self.input_spec.to_dict(),
            "output_spec": self.output_spec.to_dict(),
            "time_mode": self.time_mode.value,
            "dt": self.dt,
            "diagnostics": {
                "row_residuals": list(d.row_residuals),
                "rank": d.rank,
                "rank_deficient": d.rank_deficient,
            },
            "spectral": spectral,
        }


def _encode_complex(a: np.ndarray):
    a = np.asarray(a)
    if a.ndim == 1:
        return [[float(v.real), float(v.imag)] for v in a.astype(complex)]
    return [_encode_complex(row) for row in a]


def _decode_complex(obj) -> np.ndarray:
    arr = np.asarray(obj, dtype=np.float64)
    if arr.shape[-1] != 2:
        raise ModelLoadError("complex arrays must be stored as [re, im] pairs")
    return arr[..., 0] + 1j * arr[..., 1]


# -- spectral queries ----------------------------------------------------------


def eigenfunction_eval(model: KoopmanModel, z, scaled: bool = False) -> np.ndarray:
    """Eigenfunction values at a lifted input-space column ``z``.

    Square operators give ``phi_j(z) = <z, w_j> = w_j^H z`` with the stored
    unit left modes; with ``scaled=True`` each value is divided by
    ``w_j^H v_j`` so that ``sum_j phi_j(z) v_j = z``. Rectangular operators
    give ``<z, v_j> = v_j^H z`` with the right singular modes.
    """
    z = np.asarray(z, dtype=complex).reshape(-1)
    if z.shape[0] != model.q:
        raise DimensionError(f"z has length {z.shape[0]}, model input space has {model.q}")
    sp = model.spectral
    if sp.kind is ShapeKind.RECTANGULAR:
        return sp.right_modes.conj().T @ z
    phi = sp.left_modes.conj().T @ z
    if scaled:
        phi = phi / np.einsum("ij,ij->j", sp.left_modes.conj(), sp.right_modes)
    return phi


def spectral_predict(model: KoopmanModel, z0, steps: int) -> np.ndarray:
    """Advance a square model by summing its mode expansion.

    Discrete models use ``z_k = sum_j lam_j^k c_j v_j``; continuous models use
    the forward-Euler multipliers ``1 + dt*lam_j``. Only meaningful for
    diagonalizable operators.
    """
    if model.shape_kind is not ShapeKind.SQUARE:
        raise DimensionError("spectral expansion needs a square operator")
    sp = model.spectral
    c = eigenfunction_eval(model, z0, scaled=True)
    mult = sp.values if model.time_mode is TimeMode.DISCRETE else 1.0 + model.dt * sp.values
    k = np.arange(steps + 1)
    powers = mult[:, np.newaxis] ** k[np.newaxis, :]
    return (sp.right_modes @ (c[:, np.newaxis] * powers)).real


# -- prediction ----------------------------------------------------------------


def _rebuild_plan(model: KoopmanModel, have_inputs: bool):
    """How to obtain each input-space term from an output vector and an input column.

    Returns a list of ``("carry", out_index)`` or ``("eval", term)``, plus the
    output index of every raw state variable that the ``eval`` terms need.
    Pure-input terms come from supplied inputs when available. Other terms
    are carried from an identical output term if one exists, and otherwise
    rebuilt from raw state variables that the outputs carry as identities.
    """
    spec_in, spec_out = model.input_spec, model.output_spec
    by_powers = {t.powers: k for k, t in enumerate(spec_out.terms)}
    raw_state: dict[int, int] = {}
    for k, t in enumerate(spec_out.terms):
        if not t.touches_inputs and t.degree == 1:
            raw_state.setdefault(t.state_powers.index(1), k)
    raw_input: dict[int, int] = {}
    for k, t in enumerate(spec_out.terms):
        if not t.touches_states and t.degree == 1:
            raw_input.setdefault(t.input_powers.index(1), k)

    plan = []
    for term in spec_in.terms:
        if not term.touches_states and have_inputs:
            plan.append(("eval", term))
            continue
        if term.powers in by_powers:
            plan.append(("carry", by_powers[term.powers]))
            continue
        need_x = [i for i, pw in enumerate(term.state_powers) if pw and i not in raw_state]
        need_u = [j for j, pw in enumerate(term.input_powers) if pw and not have_inputs and j not in raw_input]
        if need_x:
            names = ", ".join(f"x{i + 1}" for i in need_x)
            raise ClosureError(
                f"term {term.label!r} cannot be rebuilt: outputs do not carry {names}"
            )
        if need_u:
            raise MissingInputError(f"term {term.label!r} needs inputs; none were supplied")
        plan.append(("eval", term))
    return plan, raw_state, raw_input


def predict(model: KoopmanModel, x0, inputs=None, steps: int = 1, relift: bool = False) -> np.ndarray:
    """Iterate the model from output-space values ``x0``.

    Each step lifts the current outputs (and the supplied input column) into
    the model's input space, applies the operator, and reads the next outputs.
    Continuous models take a forward-Euler step ``y + dt * G z``. Returns
    ``(p, steps + 1)`` with ``x0`` as the first column.

    ``inputs`` is ``(n_u, >= steps)`` in raw input variables. Square models
    whose outputs include the inputs may omit it and evolve the inputs
    themselves.

    With ``relift=True`` every state-only monomial output whose variables are
    carried as raw-state outputs is recomputed from them after each step, so
    the outputs stay on the lifted manifold. Euler steps in lifted
    coordinates otherwise drift from Euler steps in the raw state by
    ``O(dt^2)`` per step.
    """
    steps = int(steps)
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    x0 = np.asarray(x0, dtype=np.float64).reshape(-1)
    if x0.shape[0] != model.p:
        raise DimensionError(f"x0 has length {x0.shape[0]}, model outputs {model.p} values")
    if steps == 0:
        return x0[:, np.newaxis].copy()
    n_u = model.input_spec.n_u
    U = None
    if inputs is not None and n_u:
        U = np.asarray(inputs, dtype=np.float64)
        if U.ndim == 1:
            U = U[np.newaxis, :]
        if U.shape[0] != n_u or U.shape[1] < steps:
            raise DimensionError(f"inputs must be ({n_u}, >= {steps}), got {U.shape}")
    plan, raw_state, raw_input = _rebuild_plan(model, U is not None)

    relift_rows = [
        (row, t) for row, t in enumerate(model.output_spec.terms)
        if relift and t.kind == "monomial" and not t.touches_inputs
        and all(i in raw_state for i, pw in enumerate(t.state_powers) if pw)
    ]
    G = model.operator
    out = np.empty((model.p, steps + 1))
    out[:, 0] = x0
    n_x = model.input_spec.n_x
    y = x0.copy()
    for k in range(steps):
        x = np.zeros((n_x, 1))
        for i, row in raw_state.items():
            x[i, 0] = y[row]
        if U is not None:
            u = U[:, k:k + 1]
        else:
            u = np.zeros((n_u, 1))
            for j, row in raw_input.items():
                u[j, 0] = y[row]
        z = np.empty(model.q)
        for idx, (how, what) in enumerate(plan):
            z[idx] = y[what] if how == "carry" else what.evaluate(x, u)[0]
        y = G @ z if model.time_mode is TimeMode.DISCRETE else y + model.dt * (G @ z)
        if relift:
            x_next = np.zeros((n_x, 1))
            for i, row in raw_state.items():
                x_next[i, 0] = y[row]
            for row, term in relift_rows:
                y[row] = term.evaluate(x_next, None)[0]
        out[:, k + 1] = y
    return out


def check_rebuildable(model: KoopmanModel, have_inputs: bool) -> None:
    """Raise the error :func:`predict` would raise for this input situation."""
    _rebuild_plan(model, have_inputs)


def reconstruct_residual(model: KoopmanModel, ss: SnapshotSet) -> np.ndarray:
    """Relative residual of each output row, ``|T_r - (G Omega)_r| / |T_r|``.

    ``Omega = [Y; Upsilon]`` and the targets ``T`` are the first ``p`` rows of
    ``[Z; Xi]``.
    """
    omega, delta = ss.omega, ss.delta
    if omega.shape[0] != model.q:
        raise DimensionError(f"Omega has {omega.shape[0]} rows, model expects {model.q}")
    if delta.shape[0] < model.p:
        raise DimensionError(f"Delta has {delta.shape[0]} rows, model predicts {model.p}")
    return row_residuals(delta[: model.p], model.operator @ omega)


def row_residuals(target: np.ndarray, fitted: np.ndarray) -> np.ndarray:
    err = np.linalg.norm(target - fitted, axis=1)
    return err / np.maximum(np.linalg.norm(target, axis=1), _RESIDUAL_FLOOR)


# -- persistence ---------------------------------------------------------------

_TOP_FIELDS = {"schema_version", "shape_kind", "operator", "dims", "input_spec", "output_spec",
               "time_mode", "dt", "diagnostics", "spectral"}
_REQUIRED = _TOP_FIELDS - {"diagnostics", "spectral"}


def _check_fields(d: dict, allowed: set, where: str):
    if not isinstance(d, dict):
        raise ModelLoadError(f"{where} must be a JSON object")
    extra = set(d) - allowed
    if extra:
        raise ModelLoadError(f"unknown field(s) in {where}: {', '.join(sorted(extra))}")


def model_from_dict(d: dict) -> KoopmanModel:
    _check_fields(d, _TOP_FIELDS, "model")
    missing = _REQUIRED - set(d)
    if missing:
        raise ModelLoadError(f"missing field(s): {', '.join(sorted(missing))}")
    if d["schema_version"] != SCHEMA_VERSION:
        raise ModelLoadError(f"unsupported schema_version {d['schema_version']!r}; expected {SCHEMA_VERSION}")
    _check_fields(d["dims"], {"p", "q", "n_y", "n_gamma"}, "dims")
    try:
        operator = np.array(d["operator"], dtype=np.float64)
        dims = d["dims"]
        if operator.shape != (dims["p"], dims["q"]):
            raise ModelLoadError(f"operator shape {operator.shape} disagrees with dims {dims}")
        diag = d.get("diagnostics") or {}
        _check_fields(diag, {"row_residuals", "rank", "rank_deficient"}, "diagnostics")
        diagnostics = Diagnostics(
            tuple(float(v) for v in diag.get("row_residuals", ())),
            diag.get("rank"),
            bool(diag.get("rank_deficient", False)),
        )
        spectral = None
        if d.get("spectral") is not None:
            spectral = _spectral_from_dict(d["spectral"])
        model = KoopmanModel(
            operator=operator,
            input_spec=ObservableSpec.from_dict(d["input_spec"]),
            output_spec=ObservableSpec.from_dict(d["output_spec"]),
            n_y=int(dims["n_y"]),
            n_gamma=int(dims["n_gamma"]),
            time_mode=TimeMode(d["time_mode"]),
            dt=float(d["dt"]),
            diagnostics=diagnostics,
            spectral=spectral,
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelLoadError):
            raise
        if isinstance(exc, (SpecError, DimensionError)):
            raise ModelLoadError(str(exc)) from None
        raise ModelLoadError(f"schema violation: {exc!r}") from None
    if model.shape_kind.value != d["shape_kind"]:
        raise ModelLoadError(f"shape_kind {d['shape_kind']!r} disagrees with operator shape")
    return model


def _spectral_from_dict(s: dict) -> SpectralDecomposition:
    kind = ShapeKind(s.get("kind"))
    key = "eigenvalues" if kind is ShapeKind.SQUARE else "singular_values"
    _check_fields(s, {"kind", key, "right_modes", "left_modes"}, "spectral")
    values = _decode_complex(s[key])
    if kind is ShapeKind.RECTANGULAR:
        values = values.real.copy()
    return SpectralDecomposition(kind, values, _decode_complex(s["right_modes"]), _decode_complex(s["left_modes"]))


def save_model(model: KoopmanModel, path) -> None:
    # json writes floats with repr(), which round-trips every double exactly
    Path(path).write_text(json.dumps(model.to_dict(), indent=1) + "\n", encoding="utf-8")


def load_model(path) -> KoopmanModel:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ModelLoadError(f"not valid JSON: {exc}") from None
    return model_from_dict(d)
