"""``kic`` command-line front end.

Subcommands: ``simulate``, ``fit``, ``predict``, ``modes`` and ``verify``.
Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
3 domain error, 4 rank deficiency under ``--strict``.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import bench, models, verify
from .data import Trajectory, build_derivative_pair, build_pair, build_trio, dumps_csv, load_csv
from .errors import KicError
from .estimators import Dither, FitOptions, KicMode, fit_dmd, fit_dmdc, fit_kic, fit_kic_lifted
from .models import TimeMode
from .numkernel import TruncationRule
from .observables import ObservableSpec

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_DOMAIN, EXIT_STRICT = 0, 1, 2, 3, 4

SYSTEMS = ("linear1", "slowmanifold", "sir")
DEFAULT_POLICY = {"linear1": "gaussian:0.01", "slowmanifold": "gaussian:0.01", "sir": "uniform:0:0.005"}


class UsageError(Exception):
    """Bad flag values detected after argparse (exit 2)."""


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _nonneg_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"expected a nonnegative integer, got {v}")
    return v


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text, encoding="utf-8", newline="")
    else:
        sys.stdout.write(text)


def _trajectory_json(traj: Trajectory) -> str:
    payload = {
        "id": traj.id,
        "dt": traj.dt,
        "t": traj.times.tolist(),
        "x": traj.states.tolist(),
        "u": traj.inputs.tolist() if traj.inputs is not None else [],
    }
    return json.dumps(payload) + "\n"


def _render(traj: Trajectory, fmt: str) -> str:
    return _trajectory_json(traj) if fmt == "json" else dumps_csv(traj)


# -- simulate --------------------------------------------------------------------


def simulate(args) -> tuple[Trajectory, np.ndarray | None]:
    """Library call behind ``kic simulate``; returns the trajectory and any derivatives."""
    policy = bench.InputPolicy.parse(args.policy or DEFAULT_POLICY[args.system], seed=args.seed)

    def pick(name, defaults):
        v = getattr(args, name)
        return getattr(defaults, "lam" if name == "lambda_" else name) if v is None else v

    if args.system == "linear1":
        if args.dt not in (None, 1.0):
            raise UsageError("linear1 is a discrete map with dt = 1; drop --dt")
        d = bench.LinearExampleParams()
        params = bench.LinearExampleParams(pick("mu", d), pick("lambda_", d), pick("delta", d))
        return bench.simulate_linear(params, policy, x0=args.x0 or (5.0, 2.0), steps=args.steps), None
    if args.system == "slowmanifold":
        d = bench.SlowManifoldParams()
        params = bench.SlowManifoldParams(pick("mu", d), pick("lambda_", d), pick("delta", d))
        return bench.simulate_slow_manifold(params, policy, x0=args.x0 or (5.0, 2.0), steps=args.steps,
                                            dt=args.dt or 0.01)
    d = bench.SirParams()
    params = bench.SirParams(pick("beta", d), pick("nu", d), pick("mu", d), pick("gamma", d))
    traj = bench.simulate_sir(params, policy, s0i0r0=args.x0 or (0.99, 0.01, 0.0), steps=args.steps,
                              dt=args.dt or 0.01)
    return traj, None


def cmd_simulate(args) -> int:
    if args.deriv_out and args.system != "slowmanifold":
        raise UsageError("--deriv-out is only available for slowmanifold")
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    traj, derivs = simulate(args)
    _emit(_render(traj, args.format), args.out)
    if args.deriv_out:
        _emit(dumps_csv(Trajectory(derivs, dt=traj.dt, id=f"{traj.id}-derivs")), args.deriv_out)
    return EXIT_OK


# -- fit -----------------------------------------------------------------------


def fit(args) -> models.KoopmanModel:
    """Library call behind ``kic fit``."""
    traj = load_csv(args.data)
    dither = Dither(args.dither, args.seed) if args.dither else None
    opts = FitOptions(TruncationRule.parse(args.truncation), TimeMode(args.time_mode), dither)
    derivs = load_csv(args.derivs).states if args.derivs else None
    if opts.time_mode is TimeMode.CONTINUOUS and derivs is None:
        raise UsageError("--time-mode continuous needs --derivs")
    mode = KicMode(args.kic_mode)

    if args.input_spec or args.output_spec:
        if args.estimator != "kic":
            raise UsageError("--input-spec/--output-spec need --estimator kic")
        if not (args.input_spec and args.output_spec):
            raise UsageError("give both --input-spec and --output-spec")
        spec_in = ObservableSpec.parse(args.input_spec, traj.n_x, traj.n_u)
        spec_out = ObservableSpec.parse(args.output_spec, traj.n_x, traj.n_u)
        return fit_kic_lifted(traj, spec_in, spec_out, mode, opts, derivatives=derivs)

    if derivs is not None:
        ss = build_derivative_pair(traj, derivs)
    elif args.estimator == "dmd":
        ss = build_pair(traj)
    else:
        ss = build_trio(traj, include_future_input=mode is KicMode.WITH_INPUT_DYNAMICS)
    if args.estimator == "dmd":
        return fit_dmd(ss, opts)
    if args.estimator == "dmdc":
        return fit_dmdc(ss, opts)
    return fit_kic(ss, mode, opts)


def summary(model: models.KoopmanModel) -> dict:
    diag = model.diagnostics
    return {
        "shape": list(model.operator.shape),
        "shape_kind": model.shape_kind.value,
        "n_y": model.n_y,
        "n_gamma": model.n_gamma,
        "time_mode": model.time_mode.value,
        "dt": model.dt,
        "input_terms": model.input_spec.labels,
        "output_terms": model.output_spec.labels,
        "rank": diag.rank,
        "rank_deficient": diag.rank_deficient,
        "spectral_radius": model.spectral_radius,
        "max_row_residual": diag.max_residual,
        "row_residuals": list(diag.row_residuals),
        "operator": model.operator.tolist(),
    }


def summary_table(model: models.KoopmanModel) -> str:
    s = summary(model)
    rows = [
        ("operator", f"{s['shape'][0]} x {s['shape'][1]} ({s['shape_kind']}, {s['time_mode']}, dt={s['dt']:g})"),
        ("inputs", ", ".join(s["input_terms"])),
        ("outputs", ", ".join(s["output_terms"])),
        ("n_y / n_gamma", f"{s['n_y']} / {s['n_gamma']}"),
        ("rank", f"{s['rank']}" + (" (deficient)" if s["rank_deficient"] else "")),
        ("spectral radius", f"{s['spectral_radius']:.6g}"),
        ("max row residual", f"{s['max_row_residual']:.3e}"),
    ]
    width = max(len(k) for k, _ in rows)
    lines = [f"{k:<{width}}  {v}" for k, v in rows]
    labels = s["output_terms"]
    lw = max(len(l) for l in labels)
    lines.append("")
    for label, row in zip(labels, model.operator):
        lines.append(f"{label:>{lw}} | " + "  ".join(f"{v:12.6g}" for v in row))
    return "\n".join(lines) + "\n"


def cmd_fit(args) -> int:
    model = fit(args)
    if args.strict and model.diagnostics.rank_deficient:
        print(f"error: regressor matrix is rank deficient (rank {model.diagnostics.rank}); "
              "add excitation or --dither", file=sys.stderr)
        return EXIT_STRICT
    report = json.dumps(summary(model), indent=2) + "\n" if args.format == "json" else summary_table(model)
    if args.out:
        models.save_model(model, args.out)
        sys.stdout.write(report)
    else:
        sys.stdout.write(json.dumps(model.to_dict(), indent=2) + "\n")
        sys.stderr.write(report)
    return EXIT_OK


# -- predict -------------------------------------------------------------------


def predict(args) -> Trajectory:
    """Library call behind ``kic predict``."""
    model = models.load_model(args.model)
    if len(args.x0) != model.p:
        raise UsageError(f"--x0 has {len(args.x0)} value(s); the model outputs {model.p} "
                         f"({', '.join(model.output_spec.labels)})")
    n_u = model.input_spec.n_u
    inputs = None
    if args.inputs and args.policy:
        raise UsageError("give --inputs or --policy, not both")
    if args.inputs:
        source = load_csv(args.inputs)
        if source.n_u != n_u:
            raise UsageError(f"{args.inputs} has {source.n_u} input column(s), model needs {n_u}")
        inputs = source.inputs[:, args.input_offset:] if n_u else None
        if inputs is not None and inputs.shape[1] < args.steps:
            raise UsageError(f"{args.inputs} has {inputs.shape[1]} input sample(s) after offset "
                             f"{args.input_offset}, {args.steps} needed")
    elif args.policy:
        policy = bench.InputPolicy.parse(args.policy, seed=args.seed)
        if policy.kind == "feedback":
            raise UsageError("feedback policies need the plant; use --inputs")
        inputs = np.tile(bench.input_sequence(policy, args.steps, model.dt), (n_u, 1)) if n_u else None
    pred = models.predict(model, args.x0, inputs, args.steps, relift=args.relift)
    return Trajectory(pred, dt=model.dt, id="prediction", t0=args.input_offset * model.dt)


def cmd_predict(args) -> int:
    _emit(_render(predict(args), args.format), args.out)
    return EXIT_OK


# -- modes ---------------------------------------------------------------------


def cmd_modes(args) -> int:
    model = models.load_model(args.model)
    sp = model.spectral
    values = sp.values
    if args.format == "json":
        payload = {"kind": sp.kind.value, "values": [[float(v.real), float(v.imag)] for v in values]}
        _emit(json.dumps(payload, indent=2) + "\n", args.out)
        return EXIT_OK
    name = "eigenvalue" if sp.kind is models.ShapeKind.SQUARE else "singular value"
    lines = [f"# {name}s, ordered by modulus", "index,real,imag,modulus"]
    for k, v in enumerate(np.asarray(values, dtype=complex)):
        lines.append(f"{k},{float(v.real)!r},{float(v.imag)!r},{float(abs(v))!r}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


# -- verify --------------------------------------------------------------------


def cmd_verify(args) -> int:
    results = verify.run_all(tolerance_scale=args.tolerance_scale)
    if args.format == "json":
        _emit(json.dumps([r.to_dict() for r in results], indent=2) + "\n", args.out)
    else:
        text = "\n".join(r.line() for r in results)
        passed = sum(r.passed for r in results)
        _emit(f"{text}\n{passed}/{len(results)} checks passed\n", args.out)
    return EXIT_OK if all(r.passed for r in results) else EXIT_VERIFY


# -- parser --------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for every random draw (default 0)")
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--format", choices=("csv", "json"), default="csv", help="output format")

    parser = argparse.ArgumentParser(prog="kic", description="Koopman operator fits for systems with inputs.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("simulate", parents=[common], help="simulate a benchmark system to CSV")
    p.add_argument("system", choices=SYSTEMS)
    p.add_argument("--steps", type=_nonneg_int, required=True, help="number of steps (samples = steps + 1)")
    p.add_argument("--dt", type=float, help="time step (slowmanifold, sir; default 0.01)")
    p.add_argument("--mu", type=float)
    p.add_argument("--lambda", dest="lambda_", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--nu", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--policy", help="zero | gaussian:VAR | uniform:LO:HI | feedback:K[:INDEX[:DITHER]] | "
                                    "expdecay:R[:U0] | sequence:V1;V2;...")
    p.add_argument("--x0", type=_floats, help="initial state, comma-separated")
    p.add_argument("--deriv-out", help="slowmanifold only: write derivatives of x1, x2, x1^2 here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", parents=[common], help="fit a model to trajectory CSV")
    p.add_argument("--data", required=True, help="trajectory CSV")
    p.add_argument("--estimator", choices=("dmd", "dmdc", "kic"), default="kic")
    p.add_argument("--kic-mode", choices=[m.value for m in KicMode], default=KicMode.WITH_INPUT_DYNAMICS.value)
    p.add_argument("--input-spec", help="observables the operator acts on, e.g. x1,x2,x1^2,u1")
    p.add_argument("--output-spec", help="observables the operator predicts, e.g. x1,x2,x1^2")
    p.add_argument("--time-mode", choices=[m.value for m in TimeMode], default=TimeMode.DISCRETE.value)
    p.add_argument("--derivs", help="CSV whose x-columns hold derivatives (continuous fits)")
    p.add_argument("--truncation", default="rel:1e-12", help="exact | rank:R | rel:TAU (default rel:1e-12)")
    p.add_argument("--dither", type=float, default=0.0, help="dither amplitude added to input regressors")
    p.add_argument("--strict", action="store_true", help="exit 4 if the regressors are rank deficient")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("predict", parents=[common], help="iterate a saved model")
    p.add_argument("--model", required=True)
    p.add_argument("--x0", type=_floats, required=True, help="initial output-space values, comma-separated")
    p.add_argument("--steps", type=_nonneg_int, required=True)
    p.add_argument("--inputs", help="trajectory CSV supplying the u-columns")
    p.add_argument("--input-offset", type=_nonneg_int, default=0, help="first input sample to use")
    p.add_argument("--policy", help="input policy instead of --inputs")
    p.add_argument("--relift", action="store_true",
                   help="recompute monomial outputs from the carried states after each step")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("modes", parents=[common], help="list the eigenvalues or singular values of a model")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_modes)

    p = sub.add_parser("verify", parents=[common], help="run the reproduction checks")
    p.add_argument("--tolerance-scale", type=float, default=1.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"kic {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except KicError as exc:
        print(f"kic {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ValueError, OSError) as exc:
        print(f"kic {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
