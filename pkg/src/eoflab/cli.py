"""Command-line front end.

State files are JSON objects::

    {"dims": [2, 2],
     "matrix": [[[re, im], ...], ...],          # density matrix
     "kets": [[[re, im], ...], ...],            # optional list of kets
     "ensemble": {"probs": [...], "states": [matrix, ...]},  # optional
     "restrict": [1]}                           # optional, 1-based

Reports are JSON on standard output. Everything except the ``timing``
block is a deterministic function of the inputs and the seed.
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .additivity import (
    CaseOneScenario,
    additivity_gap,
    case2_from_decomposition,
    run_case1,
    run_case2,
)
from .core import FactorLayout, basis, density, ket, projector
from .errors import (
    DegeneracyError,
    EoflabError,
    PreconditionError,
    SizeError,
)
from .information import Ensemble, accessible_information
from .optimality import DEFAULT_MODULI, GammaSampling, check_pair
from .oracle import grid_eof, two_qubit_eof, two_qubit_optimal_decomposition
from .solver import SolverConfig, average_entanglement, eof

EXIT_OK, EXIT_PARSE, EXIT_NONCONVERGED, EXIT_DEGENERATE, EXIT_SIZE = 0, 2, 3, 4, 5


class InputError(EoflabError, ValueError):
    """Malformed state or scenario file."""


# ---------------------------------------------------------------- state files

def _complex_array(data, what: str) -> np.ndarray:
    try:
        a = np.asarray(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{what}: entries must be [re, im] pairs") from exc
    if a.ndim < 1 or a.shape[-1] != 2:
        raise InputError(f"{what}: entries must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def _encode(a) -> list:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def load_state_file(path: str | Path) -> dict:
    """Parse and validate a state file into numpy objects."""
    try:
        raw = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read state file {path}: {exc}") from exc
    if not isinstance(raw, dict):
        raise InputError("state file must hold a JSON object")
    out: dict = {"dims": tuple(int(d) for d in raw.get("dims", ()))}
    if "matrix" in raw:
        m = _complex_array(raw["matrix"], "matrix")
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InputError(f"matrix must be square, got shape {m.shape}")
        out["matrix"] = density(m)
    if "kets" in raw:
        out["kets"] = [ket(_complex_array(k, "kets"), normalize=True) for k in raw["kets"]]
    if "ensemble" in raw:
        ens = raw["ensemble"]
        states = np.array([density(_complex_array(s, "ensemble state")) for s in ens["states"]])
        out["ensemble"] = Ensemble(ens["probs"], states)
    for key in ("sigma3", "sigma4"):
        if key in raw:
            out[key] = density(_complex_array(raw[key], key))
    if "restrict" in raw:
        out["restrict"] = [int(x) for x in raw["restrict"]]
    return out


def write_state_file(path: str | Path, dims, matrix=None, kets=None, weights=None) -> None:
    data: dict = {"dims": [int(d) for d in dims]}
    if matrix is not None:
        data["matrix"] = _encode(matrix)
    if kets is not None:
        data["kets"] = [_encode(k) for k in kets]
    if weights is not None:
        data["weights"] = [float(w) for w in weights]
    Path(path).write_text(json.dumps(data, indent=2) + "\n")


# --------------------------------------------------------------- arguments

def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from exc


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _gamma_grid(text: str) -> tuple[int, int]:
    vals = _int_list(text)
    if len(vals) != 2 or vals[0] < 1 or vals[1] < 0:
        raise argparse.ArgumentTypeError("--gamma-grid takes PHASES,RANDOM, e.g. 16,64")
    return vals[0], vals[1]


def _solver_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None,
                   help="random seed (default: $EOFLAB_SEED or 0)")
    p.add_argument("--restarts", type=int, default=16, help="random starts per decomposition size")
    p.add_argument("--tol", type=float, default=1e-7, help="optimizer tolerance")
    p.add_argument("--max-members", type=int, default=None, help="cap on decomposition size")


def _layout_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--dims", type=_int_list, default=None, help="factor dimensions, e.g. 2,2")
    p.add_argument("--restrict", type=_int_list, default=None,
                   help="kept factors, comma-separated, 1-based")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="eoflab", description="Entanglement of formation toolkit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eof", help="entanglement of formation of a state")
    p.add_argument("state")
    _layout_flags(p)
    _solver_flags(p)
    p.add_argument("--decomposition-out", default=None, help="write the argmin as a state file")

    p = sub.add_parser("certify", help="check the pair optimality condition for two kets")
    p.add_argument("state")
    _layout_flags(p)
    p.add_argument("--pair", type=_int_list, default=[1, 2], help="1-based ket indices")
    p.add_argument("--gamma-grid", type=_gamma_grid, default=(16, 64), help="PHASES,RANDOM")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("case1", help="joint value with a product environment on factors 3, 4")
    p.add_argument("state")
    p.add_argument("--env-dims", type=_int_list, default=[2, 2])
    _layout_flags(p)
    _solver_flags(p)

    p = sub.add_parser("case2", help="mixture of two certified product kets")
    p.add_argument("state")
    p.add_argument("--pair", type=_int_list, default=[1, 2], help="1-based member indices")
    p.add_argument("--lambda", dest="lam", type=float, default=0.5)
    p.add_argument("--lambda-sweep", type=_float_list, default=None)
    p.add_argument("--overlap-b", type=float, default=0.0, help="<phi4|phi4_hat>")
    p.add_argument("--overlap-d", type=float, default=0.0, help="<phi3|phi3_hat>")
    p.add_argument("--gamma-grid", type=_gamma_grid, default=(16, 64))
    p.add_argument("--csv-out", default=None)
    _solver_flags(p)

    p = sub.add_parser("gap", help="joint value of a tensor product against the sum")
    p.add_argument("state_a")
    p.add_argument("state_b")
    _layout_flags(p)
    _solver_flags(p)

    p = sub.add_parser("accinfo", help="accessible information of an ensemble")
    p.add_argument("state")
    _solver_flags(p)

    p = sub.add_parser("oracle", help="closed-form two-qubit value and optimal decomposition")
    p.add_argument("state")
    p.add_argument("--grid", type=int, default=None, help="also run the grid oracle at this density")
    p.add_argument("--decomposition-out", default=None, help="write the optimal members as a state file")
    return parser


def _seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    env = os.environ.get("EOFLAB_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError as exc:
        raise InputError(f"EOFLAB_SEED must be an integer, got {env!r}") from exc


def _config(args) -> SolverConfig:
    return SolverConfig(restarts=args.restarts, tol=args.tol, seed=_seed(args),
                        max_members=args.max_members)


def _layout(args, state: dict, dim: int) -> FactorLayout:
    dims = args.dims or state.get("dims") or None
    if not dims:
        side = int(round(np.sqrt(dim)))
        if side * side != dim:
            raise InputError("no dims given and the dimension is not a perfect square")
        dims = (side, side)
    keep = args.restrict or state.get("restrict") or [1]
    if any(k < 1 for k in keep):
        raise InputError("--restrict indices are 1-based")
    layout = FactorLayout(tuple(dims), tuple(k - 1 for k in keep))
    layout.check(dim)
    return layout


def _need(state: dict, key: str, cmd: str):
    if key not in state:
        raise InputError(f"{cmd} needs a '{key}' block in the state file")
    return state[key]


# ---------------------------------------------------------------- commands

def cmd_eof(args) -> tuple[dict, dict, bool]:
    state = load_state_file(args.state)
    rho = _need(state, "matrix", "eof")
    layout = _layout(args, state, rho.shape[0])
    cfg = _config(args)
    res = eof(rho, layout, cfg)
    if args.decomposition_out:
        d = res.decomposition
        write_state_file(args.decomposition_out, layout.dims, rho, d.kets, d.weights)
    config = {"layout": _layout_dict(layout), "solver": _cfg_dict(cfg)}
    return config, res.to_dict(), res.converged


def cmd_certify(args) -> tuple[dict, dict, bool]:
    state = load_state_file(args.state)
    kets = _need(state, "kets", "certify")
    i, j = (k - 1 for k in args.pair)
    if len(kets) <= max(i, j) or min(i, j) < 0:
        raise InputError(f"state file holds {len(kets)} kets, pair {args.pair} requested")
    layout = _layout(args, state, kets[i].size)
    phases, n_random = args.gamma_grid
    sampling = GammaSampling(phases=phases, n_random=n_random, seed=_seed(args))
    cert = check_pair(kets[i], kets[j], layout, sampling)
    config = {"layout": _layout_dict(layout), "pair": list(args.pair),
              "gamma_grid": {"phases": phases, "moduli": list(DEFAULT_MODULI),
                             "random": n_random, "seed": sampling.seed}}
    return config, cert.to_dict(), True


def cmd_case1(args) -> tuple[dict, dict, bool]:
    state = load_state_file(args.state)
    rho = _need(state, "matrix", "case1")
    dims = tuple(args.dims or state.get("dims") or (2, 2))
    if len(dims) != 2:
        raise InputError("case1 expects a state on two factors")
    d3, d4 = args.env_dims
    s3 = state.get("sigma3", projector(basis(d3, 0)))
    s4 = state.get("sigma4", projector(basis(d4, 0)))
    scen = CaseOneScenario(rho, s3, s4, (dims[0], dims[1], s3.shape[0], s4.shape[0]))
    cfg = _config(args)
    rep = run_case1(scen, cfg)
    config = {"dims": list(scen.dims), "restrict": [1, 3], "solver": _cfg_dict(cfg)}
    conv = rep.lhs_result.converged and all(r.converged for r in rep.rhs_results.values())
    return config, rep.to_dict(), conv


def cmd_case2(args) -> tuple[dict, dict, bool]:
    state = load_state_file(args.state)
    rho = _need(state, "matrix", "case2")
    if rho.shape != (4, 4):
        raise InputError("case2 builds its pair from a two-qubit state")
    source = two_qubit_optimal_decomposition(rho)
    i, j = (k - 1 for k in args.pair)
    if len(source) <= max(i, j) or min(i, j) < 0:
        raise InputError(f"optimal decomposition has {len(source)} members, pair {args.pair} requested")
    phases, n_random = args.gamma_grid
    sampling = GammaSampling(phases=phases, n_random=n_random, seed=_seed(args))
    lams = args.lambda_sweep if args.lambda_sweep else [args.lam]
    cfg = _config(args)
    rows, conv = [], True
    base = case2_from_decomposition(source, lams[0], (i, j), args.overlap_b, args.overlap_d, sampling)
    for lam in lams:
        rep = run_case2(base.with_lambda(lam), cfg)
        conv = conv and rep.lhs_result.converged
        rows.append(rep.to_dict())
    if args.csv_out:
        with open(args.csv_out, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["lambda", "lhs", "rhs", "gap"])
            for lam, r in zip(lams, rows):
                w.writerow([repr(lam), repr(r["lhs"]), repr(r["rhs"]), repr(r["gap"])])
    config = {"pair": list(args.pair), "lambdas": lams, "overlap_b": args.overlap_b,
              "overlap_d": args.overlap_d, "certificate_min_margin": base.certificate.min_margin,
              "gamma_grid": {"phases": phases, "random": n_random, "seed": sampling.seed},
              "solver": _cfg_dict(cfg)}
    return config, {"rows": rows}, conv


def cmd_gap(args) -> tuple[dict, dict, bool]:
    sa, sb = load_state_file(args.state_a), load_state_file(args.state_b)
    ra, rb = _need(sa, "matrix", "gap"), _need(sb, "matrix", "gap")
    la = _layout(argparse.Namespace(dims=None, restrict=args.restrict), sa, ra.shape[0])
    lb = _layout(argparse.Namespace(dims=None, restrict=args.restrict), sb, rb.shape[0])
    cfg = _config(args)
    rep = additivity_gap(ra, la, rb, lb, cfg)
    conv = rep.lhs_result.converged and all(r.converged for r in rep.rhs_results.values())
    config = {"layout_a": _layout_dict(la), "layout_b": _layout_dict(lb), "solver": _cfg_dict(cfg)}
    return config, rep.to_dict(), conv


def cmd_accinfo(args) -> tuple[dict, dict, bool]:
    state = load_state_file(args.state)
    ens = _need(state, "ensemble", "accinfo")
    cfg = _config(args)
    res = accessible_information(ens, cfg)
    return {"solver": _cfg_dict(cfg)}, res.to_dict(), res.solver.converged


def cmd_oracle(args) -> tuple[dict, dict, bool]:
    state = load_state_file(args.state)
    rho = _need(state, "matrix", "oracle")
    res = two_qubit_eof(rho)
    d = two_qubit_optimal_decomposition(rho)
    layout = FactorLayout.bipartite(2, 2)
    out = res.to_dict()
    out["decomposition"] = d.to_dict()
    out["decomposition_average"] = average_entanglement(d, layout)
    if args.grid:
        out["grid"] = grid_eof(rho, layout, args.grid).to_dict()
    if args.decomposition_out:
        write_state_file(args.decomposition_out, (2, 2), rho, d.kets, d.weights)
    return {"grid": args.grid}, out, True


COMMANDS = {
    "eof": cmd_eof,
    "certify": cmd_certify,
    "case1": cmd_case1,
    "case2": cmd_case2,
    "gap": cmd_gap,
    "accinfo": cmd_accinfo,
    "oracle": cmd_oracle,
}


def _layout_dict(layout: FactorLayout) -> dict:
    return {"dims": list(layout.dims), "restrict": [k + 1 for k in layout.keep]}


def _cfg_dict(cfg: SolverConfig) -> dict:
    return {"seed": cfg.seed, "restarts": cfg.restarts, "tol": cfg.tol,
            "max_members": cfg.max_members, "max_iter": cfg.max_iter, "max_cycles": cfg.max_cycles}


def _fail(code: int, exc: Exception) -> int:
    print(json.dumps({"error": type(exc).__name__, "message": str(exc), "exit_code": code}),
          file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        config, results, converged = COMMANDS[args.command](args)
    except DegeneracyError as exc:
        return _fail(EXIT_DEGENERATE, exc)
    except PreconditionError as exc:
        return _fail(EXIT_DEGENERATE, exc)
    except SizeError as exc:
        return _fail(EXIT_SIZE, exc)
    except (ValueError, EoflabError, KeyError) as exc:
        return _fail(EXIT_PARSE, exc)
    report = {
        "command": args.command,
        "version": __version__,
        "config": config,
        "results": results,
        "converged": bool(converged),
        "timing": {"seconds": time.perf_counter() - start},
    }
    print(json.dumps(report, indent=2))
    return EXIT_OK if converged else EXIT_NONCONVERGED


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
