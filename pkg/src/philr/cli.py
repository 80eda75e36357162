"""``philr`` command-line front end.

Exit codes: 0 success, 1 verification failure, 2 input or computation error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from .cond import KRONECKER_MAX_N, cond_exact_small, strategy_one, strategy_two
from .core import ComputationError, DimensionMismatch, norm2_exact_small
from .eda import LabeledData, exp_scatter, scatter_factors
from .lowrank import apply, build_phi_family, materialize, norm_estimate_eta
from .matrixio import (read_labeled_csv, read_matrix, read_vector, write_dense,
                       write_sparse)
from .phikernel import expm_dense, phi_dense
from .report import RunReport
from .scr import TOL_MODES, scr_approximate, scr_residual
from .synthetic import synthetic_sparse
from .verify import SUITES, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_INPUT = 0, 1, 2
ORACLE_MAX_N = 400
EDA_ORACLE_MAX_N = 600
SINGULAR_VALUES_MAX_N = 2000


def _Clock(report):
    @contextmanager
    def span(key):
        t = time.perf_counter()
        yield
        report.timings[key] = time.perf_counter() - t
    return span


def _artifact(out, suffix):
    out = Path(out)
    return out.with_name(f"{out.stem}.{suffix}")


def _scr(args, allow_empty):
    A = read_matrix(args.input)
    f = scr_approximate(A, args.tol, args.tol if args.tol_row is None else args.tol_row,
                        max_rank=args.max_rank, tol_mode=args.tol_mode,
                        allow_empty=allow_empty)
    return A, f


def _scr_inputs(args):
    return {"input": str(args.input), "tol": args.tol,
            "tol_row": args.tol if args.tol_row is None else args.tol_row,
            "tol_mode": args.tol_mode, "max_rank": args.max_rank}


def cmd_scr(args):
    rep = RunReport("scr", _scr_inputs(args) | {"singular_values": args.singular_values})
    clock = _Clock(rep)
    with clock("scr"):
        A, f = _scr(args, allow_empty=False)
    with clock("residual"):
        res = scr_residual(A, f)
    rep.outputs.update(shape=list(A.shape), nnz=A.nnz, rank=f.rank,
                       eps_col=f.eps_col, eps_row=f.eps_row, eps_bound=f.eps_bound,
                       residual=res, converged=f.converged,
                       col_indices=f.col_indices, row_indices=f.row_indices)
    if args.singular_values:
        if max(A.shape) > SINGULAR_VALUES_MAX_N:
            raise DimensionMismatch(
                f"singular value table limited to n <= {SINGULAR_VALUES_MAX_N}")
        rep.outputs["singular_values"] = np.linalg.svd(A.toarray(), compute_uv=False)
    if args.out:
        files = {"X": _artifact(args.out, "X.mtx"), "Y": _artifact(args.out, "Y.mtx"),
                 "T": _artifact(args.out, "T.mtx")}
        write_sparse(files["X"], f.X)
        write_sparse(files["Y"], f.Y)
        write_dense(files["T"], f.T)
        rep.outputs["files"] = {k: v.name for k, v in files.items()}
    return rep, EXIT_OK


def cmd_phi(args):
    rep = RunReport("phi", _scr_inputs(args) | {"p": args.p, "ell": args.ell,
                                                "mode": args.mode,
                                                "vector": None if args.vector is None
                                                else str(args.vector)})
    if not 0 <= args.ell <= args.p:
        raise DimensionMismatch(f"ell={args.ell} outside 0..p={args.p}")
    if args.mode == "apply" and args.vector is None:
        raise DimensionMismatch("mode=apply needs --vector")
    clock = _Clock(rep)
    with clock("scr"):
        A, f = _scr(args, allow_empty=True)
    with clock("phi_family"):
        fam = build_phi_family(f, args.p)
    eta, lo, hi = norm_estimate_eta(fam, args.ell)
    rep.outputs.update(n=fam.n, rank=f.rank, eps_col=f.eps_col, eps_row=f.eps_row,
                       eta=eta, eta_lower=lo, eta_upper=hi)
    if args.mode == "apply":
        v = read_vector(args.vector)
        with clock("apply"):
            result = apply(fam, args.ell, v)
        rep.outputs["result"] = result
        if args.out:
            path = _artifact(args.out, "result.mtx")
            write_dense(path, result.reshape(-1, 1))
            rep.outputs["files"] = {"result": path.name}
        return rep, EXIT_OK
    with clock("materialize"):
        dense = materialize(fam, args.ell)
    if fam.n <= ORACLE_MAX_N:
        with clock("dense_oracle"):
            ref = phi_dense(A.toarray(), args.ell)
        rep.outputs["rel_err_f"] = float(np.linalg.norm(dense - ref) / np.linalg.norm(ref))
    if args.out:
        path = _artifact(args.out, "phi.mtx")
        write_dense(path, dense)
        rep.outputs["files"] = {"phi": path.name}
    else:
        rep.outputs["phi"] = dense
    return rep, EXIT_OK


def cmd_cond(args):
    ells = sorted(set(args.ell))
    strategies = {"both": ["one", "two"], "all": ["one", "two", "exact"]}.get(
        args.strategy, [args.strategy])
    rep = RunReport("cond", _scr_inputs(args) | {"ell": ells,
                                                 "strategy": args.strategy,
                                                 "seed": args.seed})
    if min(ells) < 0:
        raise DimensionMismatch("ell must be nonnegative")
    clock = _Clock(rep)
    A = read_matrix(args.input)
    n = A.shape[0]
    if "exact" in strategies and n > KRONECKER_MAX_N:
        raise DimensionMismatch(
            f"exact condition numbers need n <= {KRONECKER_MAX_N}, got n={n}")
    with clock("scr"):
        _, f = _scr(args, allow_empty=True)
    with clock("phi_family"):
        fam = build_phi_family(f, max(ells))
    At = f.to_dense() if "exact" in strategies else None
    # ||X T Y^T||_2 = ||R1 T R2^T||_2 by unitary invariance
    norm_A = norm2_exact_small(fam.R1 @ fam.T @ fam.R2.T) if f.rank else 0.0
    rows = []
    for ell in ells:
        for s in strategies:
            t = time.perf_counter()
            if s == "one":
                est = strategy_one(fam, ell, norm_A)
            elif s == "two":
                est = strategy_two(fam, ell, norm_A, seed=args.seed)
            else:
                est = cond_exact_small(At, ell)
            rep.timings[f"ell={ell} {est.strategy}"] = time.perf_counter() - t
            rows.append({"ell": ell, "strategy": est.strategy,
                         "absolute": est.absolute, "relative": est.relative,
                         "phi_norm": est.phi_norm,
                         "iterations": est.diagnostics.get("iterations"),
                         "converged": est.diagnostics.get("converged", True)})
    rep.outputs.update(n=n, rank=f.rank, norm_A=norm_A, estimates=rows)
    return rep, EXIT_OK


def cmd_eda(args):
    rep = RunReport("eda", {"input": str(args.input), "label_column": args.label_column,
                            "scale_columns": not args.no_scale})
    clock = _Clock(rep)
    data, labels = read_labeled_csv(args.input, args.label_column)
    d = LabeledData.build(data, labels, scale_columns=not args.no_scale)
    with clock("factored"):
        sf = scatter_factors(d)
        fam_B, fam_W = exp_scatter(sf.H_B), exp_scatter(sf.H_W)
    n = d.data.shape[0]
    rep.outputs.update(n=n, m=d.data.shape[1], classes=d.classes,
                       counts=d.counts, between_rank_width=sf.H_B.shape[1],
                       exp_SB_is_identity=not np.any(sf.H_B))
    if n <= EDA_ORACLE_MAX_N:
        eB, eW = materialize(fam_B, 0), materialize(fam_W, 0)
        with clock("dense_oracle"):
            rB, rW = expm_dense(sf.S_B), expm_dense(sf.S_W)
        rep.outputs["err_B"] = float(np.linalg.norm(eB - rB) / np.linalg.norm(rB))
        rep.outputs["err_W"] = float(np.linalg.norm(eW - rW) / np.linalg.norm(rW))
    if args.out:
        files = {}
        for tag, H, fam in (("B", sf.H_B, fam_B), ("W", sf.H_W, fam_W)):
            files[f"H_{tag}"] = _artifact(args.out, f"H_{tag}.mtx")
            files[f"phi1_{tag}"] = _artifact(args.out, f"phi1_{tag}.mtx")
            write_dense(files[f"H_{tag}"], H)
            write_dense(files[f"phi1_{tag}"], fam.phis[1])
        rep.outputs["files"] = {k: v.name for k, v in files.items()}
    return rep, EXIT_OK


def cmd_verify(args):
    rep = RunReport("verify", {"suite": args.suite, "seed": args.seed})
    with _Clock(rep)("verify"):
        checks = run_suite(args.suite, args.seed)
    failed = [c.name for c in checks if not c.passed]
    rep.outputs.update(passed=not failed, total=len(checks), failed=failed,
                       checks=[c.as_dict() for c in checks])
    return rep, EXIT_OK if not failed else EXIT_VERIFY


def cmd_gen(args):
    rep = RunReport("gen", {"n": args.n, "kind": args.kind, "rate": args.rate,
                            "density": args.density, "seed": args.seed})
    A = synthetic_sparse(args.n, args.kind, args.rate, density=args.density,
                         seed=args.seed)
    write_sparse(args.output, A)
    rep.outputs.update(file=str(args.output), nnz=A.nnz)
    return rep, EXIT_OK


def _add_scr_flags(p):
    p.add_argument("input", type=Path, help="Matrix Market file")
    p.add_argument("--tol", type=float, default=1e-5)
    p.add_argument("--tol-row", type=float, default=None,
                   help="row-side tolerance (defaults to --tol)")
    p.add_argument("--tol-mode", choices=TOL_MODES, default="absolute")
    p.add_argument("--max-rank", type=int, default=None)


def build_parser():
    parser = argparse.ArgumentParser(prog="philr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"%(prog)s {RunReport('').version}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scr", help="sparse column-row approximation")
    _add_scr_flags(p)
    p.add_argument("--singular-values", action="store_true",
                   help="include the singular values of A (dense SVD)")
    p.set_defaults(func=cmd_scr)

    p = sub.add_parser("phi", help="phi-functions of the approximation")
    _add_scr_flags(p)
    p.add_argument("--p", type=int, default=4)
    p.add_argument("--ell", type=int, default=0)
    p.add_argument("--mode", choices=("materialize", "apply"), default="materialize")
    p.add_argument("--vector", type=Path, default=None)
    p.set_defaults(func=cmd_phi)

    p = sub.add_parser("cond", help="condition numbers of phi-functions")
    _add_scr_flags(p)
    p.add_argument("--ell", type=int, nargs="+", default=[0])
    p.add_argument("--strategy", choices=("one", "two", "both", "exact", "all"),
                   default="both")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_cond)

    p = sub.add_parser("eda", help="scatter-matrix exponentials from labeled CSV")
    p.add_argument("input", type=Path)
    p.add_argument("--label-column", default="label")
    p.add_argument("--no-scale", action="store_true",
                   help="keep raw sample columns (default scales to unit norm)")
    p.set_defaults(func=cmd_eda)

    p = sub.add_parser("verify", help="run seeded property suites")
    p.add_argument("--suite", choices=SUITES + ("all",), default="all")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("gen", help="write a synthetic decaying-spectrum matrix")
    p.add_argument("output", type=Path)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--kind", choices=("geometric", "algebraic"), default="geometric")
    p.add_argument("--rate", type=float, default=2.0)
    p.add_argument("--density", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen)

    for name in ("scr", "phi", "cond", "eda", "verify", "gen"):
        sub.choices[name].add_argument("--out", type=Path, default=None,
                                       help="report path (JSON); artifacts go next to it")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        rep, code = args.func(args)
    except (ComputationError, ValueError) as exc:
        kind = getattr(exc, "kind", type(exc).__name__)
        print(json.dumps({"command": args.command, "error": kind,
                          "message": str(exc)}), file=sys.stderr)
        return EXIT_INPUT
    text = rep.to_json()
    if args.out:
        try:
            Path(args.out).write_text(text)
        except OSError as exc:
            print(json.dumps({"command": args.command, "error": "io-failure",
                              "message": str(exc)}), file=sys.stderr)
            return EXIT_INPUT
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
