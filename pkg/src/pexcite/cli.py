"""Command line front-end.

Usage::

    pexcite generate --kind pathological --horizon 126 --dt 0.001 --out w.csv
    pexcite analyze  --signal w.csv --T 4 --beta 0.1
    pexcite diagnose --signal w.csv --T 4 --beta 0.1
    pexcite decompose --signal w.csv --estimate --T 4 --beta 0.1
    pexcite simulate --config sim.json

Every option can also come from ``--config FILE`` (a JSON object keyed by
option name with dashes replaced by underscores, or a manifest written by
an earlier run); flags given on the command line win.  Each run writes
``<command>_manifest.json`` into ``--output-dir`` with the resolved
configuration and the SHA-256 of every input and output file.

Exit codes: 0 pass, 1 analytic failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .adaptive import (AdaptiveProblem, check_affine_set_membership, check_error_regulation,
                       lyapunov_trace, prior_knowledge_target, simulate_gradient_law)
from .errors import DivergenceError, GeometryError, InputError, RangeError
from .estimator import CONSISTENT, estimate_pe_subspace
from .excitation import GramSweep, directional_pe_test, matrix_pe_test
from .geometry import Subspace, complement, pe_decompose
from .io import (atomic_write, dumps, read_signal_csv, sha256_file, table_csv,
                 write_json, write_signal_csv)
from .signals import (TimeGrid, constant, envelope_scale, pathological_pair,
                      sample_sinusoid_mix, stack, zeros)

EXIT_PASS, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
RESIDUAL_TOL = 1e-9
KINDS = ("sinusoid", "pathological", "vanishing", "constant", "zero")

DEFAULTS = {
    "generate": {
        "kind": None, "horizon": None, "dt": 1e-3, "t0": 0.0,
        "freqs": [1.0, 1.0], "amps": [1.0, 1.0], "phases": [0.0, np.pi / 2],
        "mixing": None, "rate": 1.0, "value": [1.0], "q": 1,
        "out": None, "output_dir": ".", "seed": 0,
    },
    "analyze": {"signal": None, "T": None, "beta": None, "t_tail": 0.0,
                "output_dir": ".", "seed": 0},
    "diagnose": {"signal": None, "T": None, "beta": None, "t_tail": 0.0,
                 "eig_tol": 1e-6, "n_dirs": 50, "output_dir": ".", "seed": 0},
    "decompose": {"signal": None, "subspace": None, "estimate": False, "T": None,
                  "beta": None, "t_tail": 0.0, "eig_tol": 1e-6, "output_dir": ".", "seed": 0},
    "simulate": {"signal": None, "psi_true": None, "psi_hat0": None, "gamma": 1.0,
                 "dt": None, "t_end": None, "integrator": "rk4", "tail_fraction": 0.1,
                 "tol": 1e-2, "subspace": None, "membership_tol": None,
                 "output_dir": ".", "seed": 0},
}

REQUIRED = {
    "generate": ("kind", "horizon"),
    "analyze": ("signal", "T", "beta"),
    "diagnose": ("signal", "T", "beta"),
    "decompose": ("signal",),
    "simulate": ("signal", "psi_true", "psi_hat0"),
}


class UsageError(Exception):
    pass


def _common(p):
    p.add_argument("--config", help="JSON config file or an earlier run's manifest")
    p.add_argument("--output-dir", help="where reports and the manifest go")
    p.add_argument("--seed", type=int)


def _window(p):
    p.add_argument("--signal", help="signal CSV (t,w1,...,wq)")
    p.add_argument("--T", type=float, help="window length (s)")
    p.add_argument("--beta", type=float, help="excitation level")
    p.add_argument("--t-tail", type=float, help="first admissible window start (s)")


def build_parser():
    parser = argparse.ArgumentParser(prog="pexcite", description=__doc__.split("\n")[0],
                                     argument_default=argparse.SUPPRESS)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="sample a regressor and write it as CSV",
                       argument_default=argparse.SUPPRESS)
    g.add_argument("--kind", choices=KINDS)
    g.add_argument("--horizon", type=float)
    g.add_argument("--dt", type=float)
    g.add_argument("--t0", type=float)
    g.add_argument("--freqs", type=float, nargs="+")
    g.add_argument("--amps", type=float, nargs="+")
    g.add_argument("--phases", type=float, nargs="+")
    g.add_argument("--mixing", type=json.loads, help="JSON q x m matrix")
    g.add_argument("--rate", type=float, help="envelope decay rate for --kind vanishing")
    g.add_argument("--value", type=float, nargs="+", help="constant vector (constant, pathological)")
    g.add_argument("--q", type=int, help="dimension for --kind zero")
    g.add_argument("--out")
    _common(g)

    a = sub.add_parser("analyze", help="matrix and per-axis PE tests",
                       argument_default=argparse.SUPPRESS)
    _window(a)
    _common(a)

    d = sub.add_parser("diagnose", help="estimate the PE subspace and check regularity",
                       argument_default=argparse.SUPPRESS)
    _window(d)
    d.add_argument("--eig-tol", type=float)
    d.add_argument("--n-dirs", type=int)
    _common(d)

    c = sub.add_parser("decompose", help="split a signal into PE and non-PE coordinates",
                       argument_default=argparse.SUPPRESS)
    _window(c)
    c.add_argument("--subspace", help="JSON subspace W, or {\"W\": ..., \"V\": ...}")
    c.add_argument("--estimate", action="store_true", help="estimate W from the data")
    c.add_argument("--eig-tol", type=float)
    _common(c)

    s = sub.add_parser("simulate", help="run the gradient adaptive law",
                       argument_default=argparse.SUPPRESS)
    s.add_argument("--signal")
    s.add_argument("--psi-true", type=float, nargs="+")
    s.add_argument("--psi-hat0", type=float, nargs="+")
    s.add_argument("--gamma", type=json.loads, help="scalar or JSON matrix")
    s.add_argument("--dt", type=float)
    s.add_argument("--t-end", type=float)
    s.add_argument("--integrator", choices=("rk4", "euler"))
    s.add_argument("--tail-fraction", type=float)
    s.add_argument("--tol", type=float, help="error regulation tolerance")
    s.add_argument("--subspace", help="PE subspace JSON for the membership check")
    s.add_argument("--membership-tol", type=float)
    _common(s)
    return parser


def resolve_config(command, args):
    """Defaults, then the config file, then explicit flags."""
    cfg = dict(DEFAULTS[command])
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if "config" in loaded and "command" in loaded:
            if loaded["command"] != command:
                raise UsageError(f"manifest is for {loaded['command']!r}, not {command!r}")
            loaded = loaded["config"]
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
        cfg.update(loaded)
    cfg.update(flags)
    missing = [k for k in REQUIRED[command] if cfg.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): "
                         + ", ".join("--" + k.replace("_", "-") for k in missing))
    return cfg


def _write_manifest(command, cfg, inputs, outputs):
    out_dir = Path(cfg["output_dir"])
    manifest = {
        "command": command,
        "version": __version__,
        "config": cfg,
        "inputs": {str(p): sha256_file(p) for p in inputs},
        "outputs": {str(p): sha256_file(p) for p in outputs},
    }
    write_json(manifest, out_dir / f"{command}_manifest.json")


def _generate(cfg):
    grid = TimeGrid.from_horizon(cfg["horizon"], cfg["dt"], cfg["t0"])
    kind = cfg["kind"]
    if kind in ("sinusoid", "vanishing"):
        m = len(cfg["freqs"])
        mixing = np.eye(m) if cfg["mixing"] is None else np.asarray(cfg["mixing"], dtype=float)
        w = sample_sinusoid_mix(cfg["freqs"], cfg["amps"], cfg["phases"], mixing.shape[0],
                                mixing, grid)
        if kind == "vanishing":
            w = envelope_scale(w, cfg["rate"])
    elif kind == "pathological":
        w1, w2 = pathological_pair(constant(cfg["value"], grid))
        w = stack(w1, w2)
    elif kind == "constant":
        w = constant(cfg["value"], grid)
    elif kind == "zero":
        w = zeros(cfg["q"], grid)
    else:
        raise UsageError(f"unknown generator {kind!r}")
    return w


def cmd_generate(cfg):
    w = _generate(cfg)
    out = Path(cfg["out"]) if cfg["out"] else Path(cfg["output_dir"]) / "signal.csv"
    write_signal_csv(w, out)
    _write_manifest("generate", cfg, [], [out])
    print(f"wrote {w.q}-dimensional signal with {w.grid.n} samples to {out}")
    return EXIT_PASS


def analyze_signal(w, T, beta, t_tail):
    """The report ``analyze`` prints; also usable from Python."""
    sweep = GramSweep(w)
    mat = matrix_pe_test(sweep, T, t_tail, beta)
    axes = [directional_pe_test(sweep, e, T, t_tail, beta) for e in np.eye(w.q)]
    return {"matrix": mat.to_dict(), "directional": [v.to_dict() for v in axes],
            "pass": mat.passed}


def cmd_analyze(cfg):
    w = read_signal_csv(cfg["signal"])
    report = analyze_signal(w, cfg["T"], cfg["beta"], cfg["t_tail"])
    out = Path(cfg["output_dir"]) / "analyze.json"
    write_json(report, out)
    _write_manifest("analyze", cfg, [cfg["signal"]], [out])
    sys.stdout.write(dumps(report))
    return EXIT_PASS if report["pass"] else EXIT_FAIL


def _summary(rep):
    ev = rep.regular_evidence
    lines = [
        f"degree of PE: {rep.q_pe} (T={rep.T_used:g}, beta={rep.beta_used:g}, t_tail={rep.t_tail:g})",
        "tail Gram eigenvalues: " + ", ".join(f"{x:.6g}" for x in rep.eigenvalues),
    ]
    for col in rep.W_hat.basis.T:
        lines.append("  PE direction: [" + ", ".join(f"{x:+.6f}" for x in col) + "]")
    if ev is not None:
        lines.append(f"regularity: {ev.flag} ({len(ev.witnesses)} witness(es), "
                     f"{ev.n_dirs} directions per probe set, seed {ev.seed})")
        for wit in ev.witnesses:
            lines.append(f"  {wit.kind}: [" + ", ".join(f"{x:+.6f}" for x in wit.direction)
                         + f"] beta*={wit.beta_star:.6g}")
    return "\n".join(lines) + "\n"


def cmd_diagnose(cfg):
    w = read_signal_csv(cfg["signal"])
    rep = estimate_pe_subspace(w, cfg["T"], cfg["t_tail"], cfg["beta"], cfg["eig_tol"],
                               cfg["n_dirs"], cfg["seed"])
    out = Path(cfg["output_dir"]) / "diagnose.json"
    write_json(rep.to_dict(), out)
    _write_manifest("diagnose", cfg, [cfg["signal"]], [out])
    sys.stdout.write(_summary(rep))
    sys.stdout.write(dumps(rep.to_dict()))
    ok = rep.regular_evidence.flag == CONSISTENT and not rep.flagged
    return EXIT_PASS if ok else EXIT_FAIL


def _load_subspaces(path, q):
    with open(path) as fh:
        d = json.load(fh)
    if "W" in d:
        W = Subspace.from_dict(d["W"])
        V = Subspace.from_dict(d["V"]) if d.get("V") is not None else complement(W)
    else:
        W = Subspace.from_dict(d)
        V = complement(W)
    if W.ambient_dim != q:
        raise InputError(f"subspace lives in R^{W.ambient_dim} but the signal in R^{q}")
    return W, V


def cmd_decompose(cfg):
    w = read_signal_csv(cfg["signal"])
    inputs = [cfg["signal"]]
    if cfg["estimate"]:
        if cfg["T"] is None or cfg["beta"] is None:
            raise UsageError("--estimate needs --T and --beta")
        rep = estimate_pe_subspace(w, cfg["T"], cfg["t_tail"], cfg["beta"], cfg["eig_tol"],
                                   n_dirs=0)
        W = rep.W_hat
        V = complement(W)
    elif cfg["subspace"]:
        W, V = _load_subspaces(cfg["subspace"], w.q)
        inputs.append(cfg["subspace"])
    else:
        raise UsageError("decompose needs --subspace or --estimate")
    dec = pe_decompose(w, W, V)
    residual = dec.residual(w)
    out_dir = Path(cfg["output_dir"])
    paths = [out_dir / "w_pe.csv", out_dir / "w_perp.csv", out_dir / "decompose.json"]
    for path, part in zip(paths, (dec.w_pe, dec.w_perp)):
        header = ["t"] + [f"w{i + 1}" for i in range(part.q)]
        atomic_write(path, table_csv(header, np.column_stack([part.times, part.values.T])))
    report = {"W": W.to_dict(), "V": V.to_dict(), "q_pe": W.dim,
              "residual": residual, "residual_tol": RESIDUAL_TOL,
              "pass": residual <= RESIDUAL_TOL}
    write_json(report, paths[2])
    _write_manifest("decompose", cfg, inputs, paths)
    print(f"max relative reconstruction residual: {residual:.3e}")
    return EXIT_PASS if report["pass"] else EXIT_FAIL


def cmd_simulate(cfg):
    w = read_signal_csv(cfg["signal"])
    inputs = [cfg["signal"]]
    problem = AdaptiveProblem(w, cfg["psi_true"], cfg["psi_hat0"], cfg["gamma"])
    dt = cfg["dt"] if cfg["dt"] is not None else w.grid.dt
    t_end = cfg["t_end"] if cfg["t_end"] is not None else w.grid.t_end
    result = simulate_gradient_law(problem, dt, t_end, cfg["integrator"])
    regulated = check_error_regulation(result, cfg["tail_fraction"], cfg["tol"])
    report = {
        "psi_hat_final": result.psi_hat_final,
        "psi_true": problem.psi_true,
        "error_regulated": regulated,
        "tail_max_abs_error": float(np.max(np.abs(
            result.error_trace[result.times >= result.times[-1]
                               - cfg["tail_fraction"] * (result.times[-1] - result.times[0])]))),
        "integrator": result.integrator,
        "dt": result.dt,
    }
    if np.linalg.eigvalsh(problem.gamma_gain)[0] > 0:
        V = lyapunov_trace(result, problem)
        report["lyapunov_max_increase"] = float(max(0.0, np.max(np.diff(V))))
    ok = regulated
    if cfg["subspace"]:
        W, _ = _load_subspaces(cfg["subspace"], w.q)
        inputs.append(cfg["subspace"])
        tol = cfg["membership_tol"] if cfg["membership_tol"] is not None else 10 * cfg["tol"]
        member, dist = check_affine_set_membership(result.psi_hat_final, problem.psi_true, W, tol)
        report["membership"] = {"pass": member, "distance": dist, "tol": tol}
        ok = ok and member
        if problem.is_isotropic:
            target = prior_knowledge_target(problem.psi_hat0, problem.psi_true, W)
            report["retention"] = {
                "target": target,
                "gap": float(np.linalg.norm(result.psi_hat_final - target)),
            }
    out_dir = Path(cfg["output_dir"])
    traj = out_dir / "trajectory.csv"
    header = ["t"] + [f"psi_hat_{i + 1}" for i in range(w.q)] + ["e"]
    atomic_write(traj, table_csv(header, result.to_rows()))
    rep_path = out_dir / "simulate.json"
    report["pass"] = ok
    write_json(report, rep_path)
    _write_manifest("simulate", cfg, inputs, [traj, rep_path])
    sys.stdout.write(dumps(report))
    return EXIT_PASS if ok else EXIT_FAIL


COMMANDS = {
    "generate": cmd_generate,
    "analyze": cmd_analyze,
    "diagnose": cmd_diagnose,
    "decompose": cmd_decompose,
    "simulate": cmd_simulate,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
        return COMMANDS[args.command](cfg)
    except UsageError as exc:
        parser.error(str(exc))
    except DivergenceError as exc:
        print(f"pexcite {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (InputError, RangeError, GeometryError, OSError) as exc:
        print(f"pexcite {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
