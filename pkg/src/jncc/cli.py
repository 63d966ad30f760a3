"""Command-line front end.

Subcommands: analyze (diversity report), build (emit alist + sidecar),
simulate (WER sweep), outage (bound sweep), llr-table (precompute MI
tables).  Exit codes: 0 success, 2 configuration error, 3 construction
failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import alist, bounds, codes, harness


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--spec", required=True, help="experiment spec file (key = value)")
    p.add_argument("--seed", type=int, default=None, help="override master seed")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None, help="output path (CSV unless noted)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _load_spec(args) -> harness.ExperimentSpec:
    spec = harness.ExperimentSpec.from_file(args.spec)
    if args.seed is not None:
        spec = harness.ExperimentSpec.from_dict(
            dict(spec.raw) | {"master_seed": str(args.seed)})
    return spec


def _cmd_analyze(args) -> int:
    spec = _load_spec(args)
    report = harness.run_analyze(spec, measure_bec=args.measure_bec, max_e=args.max_e)
    payload = report.as_dict()
    if args.format == "json":
        text = json.dumps(payload, indent=2)
    else:
        text = "\n".join(f"{k}={v}" for k, v in payload.items())
    if args.out:
        open(args.out, "w").write(text + "\n")
    print(text)
    return 0


def _cmd_build(args) -> int:
    spec = _load_spec(args)
    code = harness.build_code(spec)
    stem = args.out or spec.name
    alist.write_alist(code.h, stem + ".alist")
    alist.write_sidecar(code, stem + ".slots")
    print(f"wrote {stem}.alist ({code.h.rows}x{code.h.cols}) and {stem}.slots")
    return 0


def _cmd_simulate(args) -> int:
    spec = _load_spec(args)
    result = harness.run_wer_sweep(spec, threads=args.threads)
    out = args.out or (spec.name + "_wer.csv")
    result.to_csv(out)
    print(f"wrote {out}")
    return 0


def _cmd_outage(args) -> int:
    spec = _load_spec(args)
    dec_table = bounds.MiTable.load(args.mi_table) if args.mi_table else None
    curve = harness.run_bound_sweep(spec, dec_table=dec_table)
    out = args.out or f"{spec.name}_{spec.bound}_outage.csv"
    harness.bound_curve_to_csv(curve, out, spec.spec_hash(), spec.name)
    print(f"wrote {out}")
    return 0


def _cmd_llr_table(args) -> int:
    spec = _load_spec(args)
    if args.kind == "raw":
        table = bounds.MiEstimator().table()
    else:
        if spec.L == spec.K:
            raise harness.ConfigError("decoded table needs a point-to-point code")
        dd = codes.DegreeDistributions(spec.lam, spec.rho)
        p2p = codes.build_p2p_code(dd, spec.L, spec.K, spec.code_seed)
        table = bounds.decoded_mi_table(p2p, samples=args.samples,
                                        seed=spec.master_seed)
    out = args.out or f"{spec.name}_mi_{args.kind}.csv"
    table.save(out, kind=args.kind)
    print(f"wrote {out}")
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="jncc",
                                     description="joint network-channel code toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="diversity metrics of a topology/code")
    _add_common(p)
    p.add_argument("--measure-bec", action="store_true",
                   help="also measure erasure diversity of the built code")
    p.add_argument("--max-e", type=int, default=3)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("build", help="construct the code, emit alist + sidecar")
    _add_common(p)
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("simulate", help="Monte Carlo word-error-rate sweep")
    _add_common(p)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("outage", help="outage-probability bound sweep")
    _add_common(p)
    p.add_argument("--mi-table", default=None,
                   help="precomputed post-decoding MI table (for tightened)")
    p.set_defaults(func=_cmd_outage)

    p = sub.add_parser("llr-table", help="precompute MI lookup tables")
    _add_common(p)
    p.add_argument("--kind", choices=("raw", "decoded"), default="raw")
    p.add_argument("--samples", type=int, default=120,
                   help="codewords per density-capture grid point")
    p.set_defaults(func=_cmd_llr_table)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except harness.ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (codes.ConstructionError, ValueError) as e:
        print(f"construction failure: {e}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
