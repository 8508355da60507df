"""Benchmark systems with known answers.

* ``linear``: ``x1+ = mu*x1``, ``x2+ = lam*x2 + delta*u`` (discrete, dt = 1).
* ``slow manifold``: ``x1' = mu*x1``, ``x2' = lam*(x2 - x1^2) + delta*u``,
  integrated by forward Euler and returned with exact derivatives of the
  lifted signals ``(x1, x2, x1^2)``.
* ``sir``: SIR with births, deaths and vaccination, forward Euler.

Each simulator returns :class:`~kic.data.Trajectory` objects and is fully
determined by its arguments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import noise
from .data import Trajectory
from .errors import DimensionError
from .observables import ObservableSpec, ObservableTerm


@dataclass(frozen=True)
class LinearExampleParams:
    mu: float = 0.1
    lam: float = 1.5
    delta: float = 1.0


@dataclass(frozen=True)
class SlowManifoldParams:
    mu: float = 2.0
    lam: float = 0.5
    delta: float = 2.0


@dataclass(frozen=True)
class SirParams:
    beta: float = 10.0
    nu: float = 1.0
    mu: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if min(self.beta, self.nu, self.mu, self.gamma) < 0:
            raise ValueError("SIR rates must be nonnegative")


@dataclass(frozen=True)
class InputPolicy:
    """Scalar input generator.

    Build with the classmethods. For ``feedback`` the recorded input is the
    command ``-gain * x[state_index]``; when ``dither`` is positive the plant
    receives the command plus the seeded probe from :func:`kic.noise.dither`,
    the same sequence a fit with ``Dither(dither, seed)`` adds back to its
    regressors.
    """

    kind: str
    variance: float = 0.0
    seed: int = 0
    gain: float = 0.0
    state_index: int = 0
    dither: float = 0.0
    rate: float = 0.0
    u0: float = 0.0
    low: float = 0.0
    high: float = 0.0
    values: tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.kind not in ("zero", "gaussian", "uniform", "feedback", "exp_decay", "sequence"):
            raise ValueError(f"unknown input policy {self.kind!r}")
        if self.variance < 0:
            raise ValueError("variance must be nonnegative")
        if self.dither < 0:
            raise ValueError("dither must be nonnegative")
        if self.high < self.low:
            raise ValueError("uniform policy needs low <= high")
        object.__setattr__(self, "values", tuple(float(v) for v in self.values))

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def gaussian(cls, variance: float, seed: int = 0):
        return cls("gaussian", variance=variance, seed=seed)

    @classmethod
    def uniform(cls, low: float, high: float, seed: int = 0):
        return cls("uniform", low=low, high=high, seed=seed)

    @classmethod
    def feedback(cls, gain: float, state_index: int, dither: float = 0.0, seed: int = 0):
        return cls("feedback", gain=gain, state_index=state_index, dither=dither, seed=seed)

    @classmethod
    def exp_decay(cls, rate: float, u0: float = 1.0):
        return cls("exp_decay", rate=rate, u0=u0)

    @classmethod
    def sequence(cls, values):
        return cls("sequence", values=tuple(values))

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> InputPolicy:
        """``zero``, ``gaussian:VAR``, ``uniform:LO:HI``, ``feedback:K[:INDEX[:DITHER]]``,
        ``expdecay:R[:U0]`` or ``sequence:V1;V2;...`` (indices are 1-based)."""
        head, *args = text.strip().split(":")
        head = head.lower()
        try:
            if head == "zero" and not args:
                return cls.zero()
            if head == "gaussian" and len(args) == 1:
                return cls.gaussian(float(args[0]), seed)
            if head == "uniform" and len(args) == 2:
                return cls.uniform(float(args[0]), float(args[1]), seed)
            if head == "feedback" and 1 <= len(args) <= 3:
                index = int(args[1]) - 1 if len(args) > 1 else 0
                dither = float(args[2]) if len(args) > 2 else 0.0
                return cls.feedback(float(args[0]), index, dither, seed)
            if head in ("expdecay", "exp_decay") and 1 <= len(args) <= 2:
                return cls.exp_decay(float(args[0]), float(args[1]) if len(args) > 1 else 1.0)
            if head == "sequence" and len(args) == 1:
                return cls.sequence(float(v) for v in args[0].split(";") if v.strip())
        except ValueError as exc:
            raise ValueError(f"bad input policy {text!r}: {exc}") from None
        raise ValueError(f"bad input policy {text!r}")


class _InputStream:
    """Per-step (recorded, applied) input values for one simulation."""

    def __init__(self, policy: InputPolicy, steps: int, dt: float):
        self.policy = policy
        self.steps = steps
        n = steps + 1
        self._draws = None
        if policy.kind == "gaussian":
            self._draws = noise.generator(policy.seed).normal(0.0, math.sqrt(policy.variance), size=n)
        elif policy.kind == "uniform":
            self._draws = noise.generator(policy.seed).uniform(policy.low, policy.high, size=n)
        elif policy.kind == "exp_decay":
            factor = 1.0 - policy.rate * dt
            self._draws = np.empty(n)
            u = policy.u0
            for k in range(n):
                self._draws[k] = u
                u = u * factor
        elif policy.kind == "sequence":
            if len(policy.values) < steps:
                raise DimensionError(f"sequence has {len(policy.values)} values, {steps} steps requested")
            vals = list(policy.values[:n])
            vals += [0.0] * (n - len(vals))
            self._draws = np.array(vals)
        self._probe = None
        if policy.kind == "feedback" and policy.dither > 0:
            self._probe = noise.dither(policy.dither, policy.seed, 1, n)[0]

    def __call__(self, k: int, x: np.ndarray) -> tuple[float, float]:
        kind = self.policy.kind
        if kind == "zero":
            return 0.0, 0.0
        if kind == "feedback":
            command = -self.policy.gain * x[self.policy.state_index]
            applied = command + (self._probe[k] if self._probe is not None else 0.0)
            return command, applied
        v = float(self._draws[k])
        return v, v


def input_sequence(policy: InputPolicy, steps: int, dt: float = 1.0) -> np.ndarray:
    """The first ``steps`` recorded inputs of a state-independent policy."""
    if policy.kind == "feedback":
        raise ValueError("feedback inputs depend on the state; simulate the plant instead")
    stream = _InputStream(policy, steps, dt)
    return np.array([stream(k, None)[0] for k in range(steps)], dtype=np.float64)


def _check_steps(steps):
    if int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps}")
    return int(steps)


def simulate_linear(params: LinearExampleParams = LinearExampleParams(),
                    policy: InputPolicy | None = None, x0=(5.0, 2.0), steps: int = 6) -> Trajectory:
    """Iterate the decoupled linear map ``steps`` times (``steps + 1`` samples)."""
    steps = _check_steps(steps)
    policy = policy or InputPolicy.zero()
    x = np.array(x0, dtype=np.float64)
    if x.shape != (2,):
        raise DimensionError("x0 must have 2 entries")
    stream = _InputStream(policy, steps, 1.0)
    X = np.empty((2, steps + 1))
    U = np.empty((1, steps + 1))
    for k in range(steps + 1):
        X[:, k] = x
        recorded, applied = stream(k, x)
        U[0, k] = recorded
        x = np.array([params.mu * x[0], params.lam * x[1] + params.delta * applied])
    return Trajectory(X, U, dt=1.0, id="linear1")


def slow_manifold_field(params: SlowManifoldParams, x: np.ndarray, u: float) -> np.ndarray:
    return np.array([params.mu * x[0], params.lam * (x[1] - x[0] * x[0]) + params.delta * u])


def simulate_slow_manifold(params: SlowManifoldParams = SlowManifoldParams(),
                           policy: InputPolicy | None = None, x0=(5.0, 2.0), steps: int = 14,
                           dt: float = 0.01) -> tuple[Trajectory, np.ndarray]:
    """Forward-Euler samples plus exact derivatives of ``(x1, x2, x1^2)`` at each sample.

    The derivative at sample ``k`` uses the input recorded there. The default
    input is seeded Gaussian noise of variance 0.01 so that the input column
    of the regression is not degenerate.
    """
    steps = _check_steps(steps)
    if not dt > 0:
        raise ValueError("dt must be positive")
    policy = policy or InputPolicy.gaussian(0.01, seed=0)
    x = np.array(x0, dtype=np.float64)
    if x.shape != (2,):
        raise DimensionError("x0 must have 2 entries")
    stream = _InputStream(policy, steps, dt)
    X = np.empty((2, steps + 1))
    U = np.empty((1, steps + 1))
    D = np.empty((3, steps + 1))
    for k in range(steps + 1):
        X[:, k] = x
        recorded, applied = stream(k, x)
        U[0, k] = recorded
        f = slow_manifold_field(params, x, applied)
        D[:, k] = (f[0], f[1], 2.0 * x[0] * f[0])
        x = x + dt * f
    return Trajectory(X, U, dt=dt, id="slowmanifold"), D


def sir_field(params: SirParams, s: np.ndarray, vacc: float) -> np.ndarray:
    S, I, R = s
    return np.array([
        -params.beta * S * I + params.nu * (S + I + R) - params.mu * S - vacc,
        params.beta * S * I - params.gamma * I - params.mu * I,
        params.gamma * I - params.mu * R + vacc,
    ])


def simulate_sir(params: SirParams = SirParams(), vacc_policy: InputPolicy | None = None,
                 s0i0r0=(0.99, 0.01, 0.0), steps: int = 400, dt: float = 0.01) -> Trajectory:
    """Forward-Euler SIR run with vaccination as the input.

    Vaccination is clipped at zero. The default policy draws it uniformly from
    ``[0, 0.005]`` each step (seed 0).
    """
    steps = _check_steps(steps)
    if not dt > 0:
        raise ValueError("dt must be positive")
    s = np.array(s0i0r0, dtype=np.float64)
    if s.shape != (3,):
        raise DimensionError("initial condition must have 3 entries (S, I, R)")
    if abs(s.sum() - 1.0) > 1e-9:
        raise ValueError(f"S + I + R must equal 1, got {s.sum()!r}")
    policy = vacc_policy or InputPolicy.uniform(0.0, 0.005, seed=0)
    stream = _InputStream(policy, steps, dt)
    X = np.empty((3, steps + 1))
    U = np.empty((1, steps + 1))
    for k in range(steps + 1):
        X[:, k] = s
        recorded, applied = stream(k, s)
        vacc = max(applied, 0.0)
        U[0, k] = max(recorded, 0.0)
        s = s + dt * sir_field(params, s, vacc)
    return Trajectory(X, U, dt=dt, id="sir")


# -- benchmark dictionaries and known operators ----------------------------------


def slow_manifold_specs() -> tuple[ObservableSpec, ObservableSpec]:
    """Input space ``{x1, x2, x1^2, u1}`` and output space ``{x1, x2, x1^2}``."""
    spec_in = ObservableSpec.parse("x1,x2,x1^2,u1", n_x=2, n_u=1)
    return spec_in, spec_in.subset(range(3))


def sir_specs(with_si_output: bool = False) -> tuple[ObservableSpec, ObservableSpec]:
    """Input space ``{S, I, R, SI, Vacc}``; output ``{S, I, R}`` (plus ``SI`` on request)."""
    terms = (
        ObservableTerm.state(0, 3, 1, "S"),
        ObservableTerm.state(1, 3, 1, "I"),
        ObservableTerm.state(2, 3, 1, "R"),
        ObservableTerm.monomial((1, 1, 0), (0,), "SI"),
        ObservableTerm.input(0, 3, 1, "Vacc"),
    )
    spec_in = ObservableSpec(terms, 3, 1)
    return spec_in, spec_in.subset(range(4 if with_si_output else 3))


def linear_operator(params: LinearExampleParams = LinearExampleParams()) -> np.ndarray:
    """``[A B]`` of the linear example."""
    return np.array([[params.mu, 0.0, 0.0], [0.0, params.lam, params.delta]])


def slow_manifold_operator(params: SlowManifoldParams = SlowManifoldParams()) -> np.ndarray:
    """Continuous-time operator on ``(x1, x2, x1^2, u)``."""
    return np.array([
        [params.mu, 0.0, 0.0, 0.0],
        [0.0, params.lam, -params.lam, params.delta],
        [0.0, 0.0, 2.0 * params.mu, 0.0],
    ])


def sir_operator(params: SirParams = SirParams(), dt: float = 0.01) -> np.ndarray:
    """Forward-Euler map on ``(S, I, R, SI, Vacc)``, the exact answer for :func:`sir_specs`."""
    b, nu, mu, g = params.beta, params.nu, params.mu, params.gamma
    return np.array([
        [1.0 + dt * (nu - mu), dt * nu, dt * nu, -dt * b, -dt],
        [0.0, 1.0 - dt * (g + mu), 0.0, dt * b, 0.0],
        [0.0, dt * g, 1.0 - dt * mu, 0.0, dt],
    ])
