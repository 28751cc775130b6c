"""Command-line entry point.

Exit codes: 0 success, 2 usage or input error, 3 capacity, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from poisson_vqa import decomp
from poisson_vqa.errors import InputError, PoissonVQAError
from poisson_vqa.experiment import (
    DRIVER_PRESETS,
    ExperimentConfig,
    run_solve,
    run_sweep,
    write_solve,
    write_sweep,
)
from poisson_vqa.lattice import (
    banded_toeplitz,
    build_dense_poisson_matrix,
    build_kron_sum_matrix,
    build_system,
    load_source,
)

MATRIX_CHOICES = ("A", "A2", "B", "C", "dD", "tridiag", "pentadiag")


def _bands(text):
    try:
        return [float(t) for t in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bands must be comma-separated numbers, got {text!r}")


def _decomposition(args):
    """Return the operator sum and its directly built dense counterpart (lazily)."""
    m = args.m
    n = 2**m
    if args.matrix in ("tridiag", "pentadiag"):
        want = 3 if args.matrix == "tridiag" else 5
        if args.bands is None or len(args.bands) != want:
            raise InputError(f"--matrix {args.matrix} needs --bands with {want} values")
        offsets = range(-(want // 2), want // 2 + 1)
        direct = lambda: banded_toeplitz(n, dict(zip(offsets, args.bands)))
        fn = decomp.decompose_tridiagonal if want == 3 else decomp.decompose_pentadiagonal
        return fn(*args.bands, m), direct
    if args.matrix == "dD":
        return decomp.decompose_poisson_dD(args.d, m), lambda: build_kron_sum_matrix(args.d, m)
    A = lambda: build_dense_poisson_matrix(m)
    direct = {
        "A": A,
        "A2": lambda: A() @ A(),
        "B": lambda: banded_toeplitz(n, {-2: 1, -1: -4, 0: 6, 1: -4, 2: 1}),
        "C": lambda: np.diag([1.0] + [0.0] * (n - 2) + [1.0]),
    }[args.matrix]
    return decomp.MATRICES[args.matrix](m), direct


def cmd_decompose(args):
    op, direct = _decomposition(args)
    text = json.dumps(op.to_dict())
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    if args.verify:
        residual = float(np.abs(op.to_dense() - direct()).max())
        print(f"verification residual: {residual:g}", file=sys.stderr)
    return 0


def cmd_system(args):
    source = args.source
    if args.source_file:
        source = load_source(args.source_file)
    system = build_system(args.m, source, d=args.d)
    text = system.to_json()
    if args.out:
        Path(args.out).write_text(text + "\n")
    else:
        print(text)
    return 0


def _config(args):
    cfg = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    return cfg.override(
        seed=args.seed,
        backend=args.backend,
        shots=args.shots,
        m=getattr(args, "m", None),
        layers=getattr(args, "layers", None),
        mode=args.mode,
        driver=args.driver,
        out=args.out,
    )


def cmd_solve(args):
    cfg = _config(args)
    run = run_solve(cfg)
    paths = write_solve(cfg, run)
    print(
        f"m={cfg.problem.m} p={run.config['ansatz']['layers']} cost={run.cost_opt:.3e} "
        f"fidelity={run.fidelity:.6f} iterations={run.iterations} -> {paths['json'].parent}"
    )
    return 0


def cmd_sweep(args):
    cfg = _config(args)
    rows, minimal = run_sweep(cfg, jobs=args.jobs)
    paths = write_sweep(cfg, rows, minimal)
    for m, p in minimal.items():
        best = max(r["fidelity"] for r in rows if r["m"] == m)
        print(f"m={m}: minimal layers={p if p is not None else 'not reached'} best fidelity={best:.6f}")
    print(f"-> {paths['csv']}")
    return 0


def cmd_verify(args):
    from poisson_vqa.checks import run_all

    ok = True
    for name, passed, detail in run_all():
        ok &= bool(passed)
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    return 0 if ok else 4


def _common(p):
    p.add_argument("--config", type=Path, help="experiment config (JSON)")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--backend", choices=("exact", "shots"))
    p.add_argument("--shots", type=int)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--mode", choices=("two-per-layer", "per-term"))
    p.add_argument("--driver", choices=DRIVER_PRESETS)


def build_parser():
    parser = argparse.ArgumentParser(prog="poisson-vqa", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="emit a tensor decomposition as JSON")
    p.add_argument("--matrix", choices=MATRIX_CHOICES, required=True)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--bands", type=_bands, help="comma-separated bands, lowest offset first")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("system", help="emit the discretized system as JSON")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--d", type=int, default=1)
    p.add_argument("--source", default="x", help="builtin source: x, one, sin_pi_x")
    p.add_argument("--source-file", type=Path, help="tabulated b vector (JSON)")
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_system)

    p = sub.add_parser("solve", help="run one variational solve")
    _common(p)
    p.add_argument("--m", type=int)
    p.add_argument("--layers", type=int)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="increase layers until the fidelity target is met")
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="run the reconstruction and consistency checks")
    p.set_defaults(func=cmd_verify)
    return parser


def _join_negative_values(argv):
    # "--bands -1,2,-1" would otherwise be parsed as an option
    out = []
    it = iter(argv)
    for tok in it:
        if tok == "--bands":
            out.append(f"--bands={next(it, '')}")
        else:
            out.append(tok)
    return out


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_join_negative_values(argv))
    try:
        return args.func(args)
    except PoissonVQAError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
