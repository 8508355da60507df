"""Trajectories, snapshot matrices and the trajectory CSV format."""
from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, InsufficientDataError, MissingInputError, ParseError

_DT_RTOL = 1e-9


def _frozen_matrix(a, name: str) -> np.ndarray:
    a = np.array(a, dtype=np.float64)
    if a.ndim == 1:
        a = a[np.newaxis, :]
    if a.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-ordered samples: ``states`` is ``(n_x, m+1)``, ``inputs`` is ``(n_u, m+1)``."""

    states: np.ndarray
    inputs: np.ndarray | None = None
    dt: float = 1.0
    id: str = ""
    t0: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "states", _frozen_matrix(self.states, "states"))
        if self.inputs is not None:
            inputs = _frozen_matrix(self.inputs, "inputs")
            if inputs.shape[1] != self.states.shape[1]:
                raise DimensionError(
                    f"inputs have {inputs.shape[1]} samples but states have {self.states.shape[1]}"
                )
            object.__setattr__(self, "inputs", inputs)
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive, got {self.dt}")
        object.__setattr__(self, "dt", float(self.dt))

    @property
    def n_x(self) -> int:
        return self.states.shape[0]

    @property
    def n_u(self) -> int:
        return 0 if self.inputs is None else self.inputs.shape[0]

    @property
    def n_samples(self) -> int:
        return self.states.shape[1]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_samples)


@dataclass(frozen=True, eq=False)
class SnapshotSet:
    """Paired snapshot matrices.

    ``Omega = [Y; Upsilon]`` holds current measurements and ``Delta = [Z; Xi]``
    the matching future ones (or time derivatives). Absent input blocks are
    ``None``; a zero-row block is allowed and distinct from absence.
    """

    Y: np.ndarray
    Z: np.ndarray
    Upsilon: np.ndarray | None = None
    Xi: np.ndarray | None = None
    dt: float = 1.0

    def __post_init__(self):
        Y = _frozen_matrix(self.Y, "Y")
        Z = _frozen_matrix(self.Z, "Z")
        if Y.shape != Z.shape:
            raise DimensionError(f"Y {Y.shape} and Z {Z.shape} must share a shape")
        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "Z", Z)
        m = Y.shape[1]
        for name in ("Upsilon", "Xi"):
            block = getattr(self, name)
            if block is None:
                continue
            block = np.array(block, dtype=np.float64)
            if block.ndim == 1:
                block = block[np.newaxis, :] if block.size else block.reshape(0, m)
            if block.ndim != 2 or block.shape[1] != m:
                raise DimensionError(f"{name} must have {m} columns, got shape {block.shape}")
            block.setflags(write=False)
            object.__setattr__(self, name, block)
        if self.Upsilon is None and self.Xi is not None:
            raise DimensionError("Xi given without Upsilon")
        if self.Xi is not None and self.Xi.shape != self.Upsilon.shape:
            raise DimensionError(f"Upsilon {self.Upsilon.shape} and Xi {self.Xi.shape} must share a shape")

    @property
    def n_y(self) -> int:
        return self.Y.shape[0]

    @property
    def n_gamma(self) -> int:
        return 0 if self.Upsilon is None else self.Upsilon.shape[0]

    @property
    def m(self) -> int:
        return self.Y.shape[1]

    @property
    def omega(self) -> np.ndarray:
        if self.Upsilon is None:
            return self.Y
        return np.vstack([self.Y, self.Upsilon])

    @property
    def delta(self) -> np.ndarray:
        if self.Xi is None:
            return self.Z
        return np.vstack([self.Z, self.Xi])


def _as_list(traj) -> list[Trajectory]:
    trajs = [traj] if isinstance(traj, Trajectory) else list(traj)
    if not trajs:
        raise InsufficientDataError("no trajectories given")
    dt = trajs[0].dt
    for t in trajs[1:]:
        if abs(t.dt - dt) > _DT_RTOL * dt:
            raise DimensionError(f"trajectories disagree on dt ({dt} vs {t.dt})")
        if t.n_x != trajs[0].n_x or t.n_u != trajs[0].n_u:
            raise DimensionError("trajectories disagree on state or input dimension")
    for t in trajs:
        if t.n_samples < 2:
            raise InsufficientDataError(
                f"trajectory {t.id!r} has {t.n_samples} sample(s); at least 2 are needed"
            )
    return trajs


def build_pair(traj: Trajectory | Iterable[Trajectory]) -> SnapshotSet:
    """Shifted pair ``Y = x_0..x_{m-1}``, ``Z = x_1..x_m``.

    Several trajectories are concatenated pair by pair; no pair straddles two
    trajectories.
    """
    trajs = _as_list(traj)
    Y = np.hstack([t.states[:, :-1] for t in trajs])
    Z = np.hstack([t.states[:, 1:] for t in trajs])
    return SnapshotSet(Y, Z, dt=trajs[0].dt)


def build_trio(traj: Trajectory | Iterable[Trajectory], include_future_input: bool) -> SnapshotSet:
    """Shifted pair plus inputs; ``Xi`` holds ``u_{k+1}`` only when asked for."""
    trajs = _as_list(traj)
    if any(t.inputs is None for t in trajs):
        raise MissingInputError("build_trio needs trajectories with inputs")
    pair = build_pair(trajs)
    upsilon = np.hstack([t.inputs[:, :-1] for t in trajs])
    xi = np.hstack([t.inputs[:, 1:] for t in trajs]) if include_future_input else None
    return SnapshotSet(pair.Y, pair.Z, upsilon, xi, dt=pair.dt)


def build_derivative_pair(traj: Trajectory, derivs) -> SnapshotSet:
    """Unshifted pair for continuous-time fits: ``Y`` = states, ``Z`` = their derivatives.

    Inputs, when present, become ``Upsilon`` over the same samples.
    """
    derivs = np.asarray(derivs, dtype=np.float64)
    if derivs.ndim == 1:
        derivs = derivs[np.newaxis, :]
    if derivs.shape != traj.states.shape:
        raise DimensionError(f"derivatives {derivs.shape} must match states {traj.states.shape}")
    return SnapshotSet(traj.states, derivs, traj.inputs, None, dt=traj.dt)


# -- CSV ---------------------------------------------------------------------

_COL = re.compile(r"^([xu])([1-9][0-9]*)$")


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def dumps_csv(traj: Trajectory) -> str:
    header = ["t"] + [f"x{i + 1}" for i in range(traj.n_x)] + [f"u{j + 1}" for j in range(traj.n_u)]
    lines = [",".join(header)]
    times = traj.times
    for k in range(traj.n_samples):
        row = [_fmt(times[k])] + [_fmt(v) for v in traj.states[:, k]]
        if traj.inputs is not None:
            row += [_fmt(v) for v in traj.inputs[:, k]]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def save_csv(traj: Trajectory, path) -> None:
    """Write ``t,x1..,u1..`` rows with 17 significant digits and LF endings."""
    Path(path).write_text(dumps_csv(traj), encoding="utf-8", newline="")


def _parse_header(header: Sequence[str]) -> tuple[int, int]:
    if not header or header[0].strip() != "t":
        raise ParseError("header must start with 't'", line=1)
    n_x = n_u = 0
    for name in header[1:]:
        match = _COL.match(name.strip())
        if not match:
            raise ParseError(f"unrecognised column {name!r}", line=1)
        kind, idx = match.group(1), int(match.group(2))
        if kind == "x":
            if n_u or idx != n_x + 1:
                raise ParseError(f"column {name!r} out of order", line=1)
            n_x += 1
        else:
            if idx != n_u + 1:
                raise ParseError(f"column {name!r} out of order", line=1)
            n_u += 1
    if n_x == 0:
        raise ParseError("header has no state columns", line=1)
    return n_x, n_u


def loads_csv(text: str, id: str = "") -> Trajectory:
    rows = list(csv.reader(io.StringIO(text.replace("\r\n", "\n"))))
    if not rows:
        raise ParseError("empty file", line=1)
    n_x, n_u = _parse_header(rows[0])
    width = 1 + n_x + n_u
    values = []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != width:
            raise ParseError(f"expected {width} fields, found {len(row)}", line=lineno)
        try:
            values.append([float(cell) for cell in row])
        except ValueError:
            bad = next(c for c in row if not _is_float(c))
            raise ParseError(f"non-numeric value {bad!r}", line=lineno) from None
    if not values:
        raise ParseError("no data rows", line=2)
    data = np.array(values)
    t = data[:, 0]
    dt = 1.0
    if len(t) > 1:
        dt = t[1] - t[0]
        if not dt > 0:
            raise ParseError("time column must be increasing", line=3)
        steps = np.diff(t)
        tol = _DT_RTOL * dt + 4 * np.finfo(float).eps * np.max(np.abs(t))
        bad = np.flatnonzero(np.abs(steps - dt) > tol)
        if bad.size:
            raise ParseError("nonuniform time spacing", line=int(bad[0]) + 3)
    inputs = data[:, 1 + n_x:].T if n_u else None
    return Trajectory(data[:, 1:1 + n_x].T, inputs, dt=dt, id=id, t0=float(t[0]))


def load_csv(path) -> Trajectory:
    """Read a trajectory; a file without ``u`` columns is autonomous."""
    path = Path(path)
    return loads_csv(path.read_text(encoding="utf-8"), id=path.stem)


def _is_float(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True
