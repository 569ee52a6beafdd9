"""
Command-line interface.

    sffbound run <config.json> [--output-dir DIR]
    sffbound verify <config.json>
    sffbound spectrum --model {syk,gue,hamiltonian-file} ... --out spectrum.csv

Exit codes: 0 pass, 1 invalid input or failed validation, 2 bound violation.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .errors import SffBoundError
from .experiment import EXIT_INVALID, OUTPUT_ENV, describe_error, load_config, run, verify
from .io import load_matrix, write_histogram_csv, write_spectrum_csv
from .randommatrix import gue_matrix
from .spectra import diagonalize, dos_histogram
from .syk import build_syk_model


def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="sffbound",
        description="Spectral form factors, mean return probabilities and the bound P_S(t) >= K(t).",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run an experiment config and write CSV/JSON artifacts")
    p.add_argument("config", help="path to a JSON config")
    p.add_argument("--output-dir", help=f"output directory (default: config, then ${OUTPUT_ENV})")
    p.add_argument("--quiet", action="store_true", help="do not print the summary")

    p = sub.add_parser("verify", help="validate channel, projectors and the bound for a config")
    p.add_argument("config", help="path to a JSON config")
    p.add_argument("--json", action="store_true", help="print the full report as JSON")

    p = sub.add_parser("spectrum", help="diagonalize a model and write its eigenvalues")
    p.add_argument("--model", choices=("syk", "gue", "hamiltonian-file"), required=True)
    p.add_argument("--N", type=int, default=10, help="SYK sites")
    p.add_argument("--q", type=int, default=4, help="SYK interaction order")
    p.add_argument("--J", type=float, default=1.0, help="SYK coupling scale")
    p.add_argument("--D", type=int, default=64, help="GUE dimension")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--path", help="Hamiltonian file (.npy or text) for --model hamiltonian-file")
    p.add_argument("--out", required=True, help="output CSV, one eigenvalue per line")
    p.add_argument("--dos-out", help="optional histogram CSV")
    p.add_argument("--bin-width", type=float, default=0.05)
    return ap


def _spectrum(args) -> int:
    if args.model == "syk":
        spec = build_syk_model(args.N, args.q, args.J, args.seed).spectrum
    elif args.model == "gue":
        spec = diagonalize(gue_matrix(args.D, args.seed))
    else:
        if not args.path:
            print("error: --path is required for --model hamiltonian-file", file=sys.stderr)
            return EXIT_INVALID
        spec = diagonalize(load_matrix(args.path))
    write_spectrum_csv(args.out, spec)
    if args.dos_out:
        write_histogram_csv(args.dos_out, dos_histogram(spec, args.bin_width))
    print(f"wrote {spec.dimension} eigenvalues to {args.out}")
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "spectrum":
            return _spectrum(args)
        cfg = load_config(args.config)
        if args.command == "run":
            res = run(cfg, args.output_dir)
            for m in res.messages:
                print(m, file=sys.stderr if res.exit_code else sys.stdout)
            if not args.quiet and res.exit_code != EXIT_INVALID:
                s = res.summary
                print(f"min(P_S - K) = {s['bound']['min_margin']:.6e}  violated = {s['bound']['violated']}")
            return res.exit_code
        res = verify(cfg)
        if args.json:
            print(json.dumps({"exit_code": res.exit_code, "messages": res.messages, "summary": res.summary},
                             indent=2, sort_keys=True, default=str))
        else:
            for m in res.messages:
                print(m)
            v = res.summary["validation"]
            p = v["projectors"]
            print(f"projectors: isometry {p['isometry_residual']:.3e}  orthogonality {p['orthogonality_residual']:.3e}"
                  f"  completeness {p['completeness_residual']:.3e}")
            print(f"channel: kind {v['channel']['kind']}  max|sum A^dag A - 1| {v['channel']['max_deviation']:.3e}")
            print(f"bound: min(P_S - K) = {res.summary['bound']['min_margin']:.6e}")
        return res.exit_code
    except SffBoundError as exc:
        print(f"error: {describe_error(exc)}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
