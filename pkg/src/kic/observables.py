"""Observable dictionaries over state and input, and the lifting they define.

Every term is a monomial in the raw state ``x`` and input ``u``; identity terms
are tagged separately so specs read the way they were written. A model keeps
two specs: the input space it acts on and the (possibly smaller) output space
it predicts.
"""
from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DimensionError, MissingInputError, SpecError

STATE_IDENTITY = "state_identity"
INPUT_IDENTITY = "input_identity"
MONOMIAL = "monomial"
_KINDS = (STATE_IDENTITY, INPUT_IDENTITY, MONOMIAL)


def _default_label(state_powers, input_powers) -> str:
    parts = []
    for prefix, powers in (("x", state_powers), ("u", input_powers)):
        for i, p in enumerate(powers):
            if p == 1:
                parts.append(f"{prefix}{i + 1}")
            elif p > 1:
                parts.append(f"{prefix}{i + 1}^{p}")
    return "*".join(parts)


@dataclass(frozen=True)
class ObservableTerm:
    kind: str
    state_powers: tuple[int, ...]
    input_powers: tuple[int, ...]
    label: str

    def __post_init__(self):
        sp = tuple(int(p) for p in self.state_powers)
        ip = tuple(int(p) for p in self.input_powers)
        object.__setattr__(self, "state_powers", sp)
        object.__setattr__(self, "input_powers", ip)
        if self.kind not in _KINDS:
            raise SpecError(f"unknown term kind {self.kind!r}")
        if any(p < 0 for p in sp + ip):
            raise SpecError(f"term {self.label!r} has a negative power")
        if sum(sp) + sum(ip) < 1:
            raise SpecError(f"term {self.label!r} has total degree 0")
        if self.kind == STATE_IDENTITY and (sum(sp) != 1 or sum(ip) != 0 or max(sp) != 1):
            raise SpecError(f"term {self.label!r} is not a state identity")
        if self.kind == INPUT_IDENTITY and (sum(ip) != 1 or sum(sp) != 0 or max(ip) != 1):
            raise SpecError(f"term {self.label!r} is not an input identity")
        if not self.label:
            raise SpecError("term label must be nonempty")

    @classmethod
    def state(cls, i: int, n_x: int, n_u: int = 0, label: str | None = None) -> ObservableTerm:
        if not 0 <= i < n_x:
            raise SpecError(f"state index {i} outside 0..{n_x - 1}")
        sp = tuple(int(k == i) for k in range(n_x))
        return cls(STATE_IDENTITY, sp, (0,) * n_u, label or f"x{i + 1}")

    @classmethod
    def input(cls, j: int, n_x: int, n_u: int, label: str | None = None) -> ObservableTerm:
        if not 0 <= j < n_u:
            raise SpecError(f"input index {j} outside 0..{n_u - 1}")
        ip = tuple(int(k == j) for k in range(n_u))
        return cls(INPUT_IDENTITY, (0,) * n_x, ip, label or f"u{j + 1}")

    @classmethod
    def monomial(cls, state_powers: Sequence[int], input_powers: Sequence[int] = (),
                 label: str | None = None) -> ObservableTerm:
        return cls(MONOMIAL, tuple(state_powers), tuple(input_powers),
                   label or _default_label(state_powers, input_powers))

    @property
    def powers(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        return self.state_powers, self.input_powers

    @property
    def degree(self) -> int:
        return sum(self.state_powers) + sum(self.input_powers)

    @property
    def touches_inputs(self) -> bool:
        return any(self.input_powers)

    @property
    def touches_states(self) -> bool:
        return any(self.state_powers)

    def evaluate(self, X: np.ndarray, U: np.ndarray | None) -> np.ndarray:
        # ascending variable index, one multiply per power: bit-reproducible
        out = None
        for i, p in enumerate(self.state_powers):
            for _ in range(p):
                out = X[i].copy() if out is None else out * X[i]
        for j, p in enumerate(self.input_powers):
            for _ in range(p):
                out = U[j].copy() if out is None else out * U[j]
        return out

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "state_powers": list(self.state_powers),
            "input_powers": list(self.input_powers),
            "label": self.label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ObservableTerm:
        extra = set(d) - {"kind", "state_powers", "input_powers", "label"}
        if extra:
            raise SpecError(f"unknown term field(s): {', '.join(sorted(extra))}")
        try:
            return cls(d["kind"], tuple(d["state_powers"]), tuple(d["input_powers"]), d["label"])
        except KeyError as exc:
            raise SpecError(f"term is missing field {exc.args[0]!r}") from None


@dataclass(frozen=True)
class ObservableSpec:
    """Ordered, finite dictionary of observables; term order is row order."""

    terms: tuple[ObservableTerm, ...]
    n_x: int
    n_u: int = 0

    def __post_init__(self):
        terms = tuple(self.terms)
        object.__setattr__(self, "terms", terms)
        if not terms:
            raise SpecError("an observable spec needs at least one term")
        labels = [t.label for t in terms]
        dupes = sorted({l for l in labels if labels.count(l) > 1})
        if dupes:
            raise SpecError(f"duplicate term label(s): {', '.join(dupes)}")
        for t in terms:
            if len(t.state_powers) != self.n_x or len(t.input_powers) != self.n_u:
                raise SpecError(
                    f"term {t.label!r} is sized for ({len(t.state_powers)}, {len(t.input_powers)}) "
                    f"variables, spec has n_x={self.n_x}, n_u={self.n_u}"
                )

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    @property
    def labels(self) -> list[str]:
        return [t.label for t in self.terms]

    @property
    def touches_inputs(self) -> bool:
        return any(t.touches_inputs for t in self.terms)

    @classmethod
    def identity(cls, n_x: int, n_u: int = 0, with_inputs: bool = True) -> ObservableSpec:
        """``x1..x{n_x}`` followed by ``u1..u{n_u}`` when ``with_inputs``."""
        terms = [ObservableTerm.state(i, n_x, n_u) for i in range(n_x)]
        if with_inputs:
            terms += [ObservableTerm.input(j, n_x, n_u) for j in range(n_u)]
        return cls(tuple(terms), n_x, n_u)

    @classmethod
    def parse(cls, text: str, n_x: int, n_u: int = 0) -> ObservableSpec:
        """Parse the comma-separated mini-grammar, e.g. ``x1,x2,x1^2,u1,x1*u1``.

        Factors are ``x<i>`` or ``u<j>`` (1-based) with an optional ``^k``,
        joined by ``*``. A term's label is its text with spaces removed.
        """
        items = [s.strip() for s in text.split(",")]
        if not text.strip() or any(not s for s in items):
            raise SpecError(f"empty term in spec {text!r}")
        return cls(tuple(parse_term(s, n_x, n_u) for s in items), n_x, n_u)

    def to_dict(self) -> dict:
        return {"n_x": self.n_x, "n_u": self.n_u, "terms": [t.to_dict() for t in self.terms]}

    @classmethod
    def from_dict(cls, d: dict) -> ObservableSpec:
        extra = set(d) - {"n_x", "n_u", "terms"}
        if extra:
            raise SpecError(f"unknown spec field(s): {', '.join(sorted(extra))}")
        try:
            return cls(tuple(ObservableTerm.from_dict(t) for t in d["terms"]), int(d["n_x"]), int(d["n_u"]))
        except KeyError as exc:
            raise SpecError(f"spec is missing field {exc.args[0]!r}") from None

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise SpecError(f"no term labelled {label!r}") from None

    def subset(self, indices: Iterable[int]) -> ObservableSpec:
        return ObservableSpec(tuple(self.terms[i] for i in indices), self.n_x, self.n_u)


_FACTOR = re.compile(r"^([xu])([1-9][0-9]*)(?:\^([0-9]+))?$")


def parse_term(text: str, n_x: int, n_u: int) -> ObservableTerm:
    label = text.replace(" ", "")
    sp, ip = [0] * n_x, [0] * n_u
    for factor in label.split("*"):
        match = _FACTOR.match(factor)
        if not match:
            raise SpecError(f"cannot parse term {text!r}: {factor!r} is not x<i> or u<j>[^k]")
        var, idx, power = match.group(1), int(match.group(2)) - 1, int(match.group(3) or 1)
        if power < 1:
            raise SpecError(f"term {text!r} has a zero power")
        if var == "x":
            if idx >= n_x:
                raise SpecError(f"term {text!r} refers to x{idx + 1} but data has {n_x} state(s)")
            sp[idx] += power
        else:
            if idx >= n_u:
                raise SpecError(f"term {text!r} refers to u{idx + 1} but data has {n_u} input(s)")
            ip[idx] += power
    if sum(sp) == 1 and not any(ip):
        return ObservableTerm(STATE_IDENTITY, tuple(sp), tuple(ip), label)
    if sum(ip) == 1 and not any(sp):
        return ObservableTerm(INPUT_IDENTITY, tuple(sp), tuple(ip), label)
    return ObservableTerm(MONOMIAL, tuple(sp), tuple(ip), label)


def lift(spec: ObservableSpec, X, U=None) -> np.ndarray:
    """Evaluate every term column by column; returns ``(len(spec), m)``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, np.newaxis]
    if X.shape[0] != spec.n_x:
        raise DimensionError(f"state matrix has {X.shape[0]} rows, spec expects {spec.n_x}")
    if U is not None:
        U = np.asarray(U, dtype=np.float64)
        if U.ndim == 1:
            U = U[:, np.newaxis]
        if U.shape != (spec.n_u, X.shape[1]):
            raise DimensionError(f"input matrix has shape {U.shape}, expected {(spec.n_u, X.shape[1])}")
    elif spec.touches_inputs:
        needy = [t.label for t in spec.terms if t.touches_inputs]
        raise MissingInputError(f"terms {', '.join(needy)} need input data")
    out = np.empty((len(spec), X.shape[1]))
    for k, term in enumerate(spec.terms):
        out[k] = term.evaluate(X, U)
    return out


def restriction_indices(input_spec: ObservableSpec, output_spec: ObservableSpec) -> list[int]:
    """Row of each output term inside the lifted input-space matrix, matched by label."""
    where = {label: k for k, label in enumerate(input_spec.labels)}
    missing = [t.label for t in output_spec.terms if t.label not in where]
    if missing:
        raise SpecError(f"output term(s) {', '.join(missing)} not in the input spec")
    for t in output_spec.terms:
        if input_spec.terms[where[t.label]].powers != t.powers:
            raise SpecError(f"term {t.label!r} is defined differently in the two specs")
    return [where[t.label] for t in output_spec.terms]
