"""Command-line interface.

Subcommands cover the full pipeline: gen-synthetic, train-codebook,
train-gmm, encode, mi-report, eval, and the scalar dtvd calculator.
Exit codes: 0 success, 2 usage errors, 3 data or format errors, 4 numeric
failures. Diagnostics go to stderr; stdout carries only the documented
outputs (the eval CSV line, dtvd values, optional mi-report counts).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import classify, diagnostics, io, synthetic
from .codebook import train_gmm_em, train_kmeans
from .distdist import Gaussian1D, dtvd_closed_form, mpm_closed_form, tvd_numeric
from .encoders import encode_d3, encode_fv, encode_hybrid, encode_vlad
from .errors import (DegenerateBoundaryError, FormatError,
                     InsufficientDataError, NumericError,
                     TrainingDegenerateError, ValidationError)

_METHODS = ("d3", "vlad", "fv", "hybrid")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="setenc",
        description="Fixed-length discriminative encodings for sets of "
                    "instance vectors.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train-codebook",
                       help="k-means codebook from manifest entities")
    p.add_argument("--manifest", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-gmm",
                       help="diagonal Gaussian mixture from manifest entities")
    p.add_argument("--manifest", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--max-iters", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--out", required=True)

    p = sub.add_parser("encode", help="encode every manifest entity")
    p.add_argument("--method", choices=_METHODS, required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--codebook")
    p.add_argument("--gmm")
    p.add_argument("--no-power-norm", action="store_true")
    p.add_argument("--include-weights", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("mi-report",
                       help="per-dimension mutual information report")
    p.add_argument("--encodings", required=True)
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--quantile-out")
    p.add_argument("--threshold", type=float)

    p = sub.add_parser("eval", help="linear one-vs-rest evaluation")
    p.add_argument("--train-encodings", required=True)
    p.add_argument("--train-manifest", required=True)
    p.add_argument("--test-encodings", required=True)
    p.add_argument("--test-manifest", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-4)
    p.add_argument("--encoder", default="-",
                   help="label for the output CSV line")
    p.add_argument("--k", type=int, default=0,
                   help="label for the output CSV line")

    p = sub.add_parser("dtvd",
                       help="closed-form separation between two normals")
    p.add_argument("--mu-x", type=float, required=True)
    p.add_argument("--sigma-x", type=float, required=True)
    p.add_argument("--mu-y", type=float, required=True)
    p.add_argument("--sigma-y", type=float, required=True)

    p = sub.add_parser("gen-synthetic", help="generate a synthetic corpus")
    p.add_argument("--classes", type=int, required=True)
    p.add_argument("--entities-per-class", type=int, required=True)
    p.add_argument("--vectors-per-entity", type=int, required=True)
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--mode", choices=synthetic.MODES, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--train-fraction", type=float, default=0.0)
    p.add_argument("--out", required=True)

    return parser


def _usage(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 2


def _pooled_vectors(manifest):
    entities = io.load_entities(manifest)
    return np.vstack([inst.vectors for inst in entities])


def _manifest_labels(manifest) -> np.ndarray:
    return np.asarray([label for label, _ in io.load_manifest(manifest)],
                      dtype=np.int64)


def _cmd_train_codebook(args) -> int:
    cb = train_kmeans(_pooled_vectors(args.manifest), args.k, args.seed,
                      max_iters=args.max_iters)
    io.write_codebook(args.out, cb)
    return 0


def _cmd_train_gmm(args) -> int:
    gm = train_gmm_em(_pooled_vectors(args.manifest), args.k, args.seed,
                      max_iters=args.max_iters, tol=args.tol)
    io.write_gmm(args.out, gm)
    return 0


def _cmd_encode(args) -> int:
    if args.method in ("d3", "vlad", "hybrid") and not args.codebook:
        return _usage(f"--method {args.method} requires --codebook")
    if args.method in ("fv", "hybrid") and not args.gmm:
        return _usage(f"--method {args.method} requires --gmm")
    if args.method != "fv" and (args.no_power_norm or args.include_weights):
        return _usage("--no-power-norm and --include-weights apply to "
                      "--method fv only")
    cb = io.read_codebook(args.codebook) if args.codebook else None
    gm = io.read_gmm(args.gmm) if args.gmm else None
    entities = io.load_entities(args.manifest)
    rows = []
    for inst in entities:
        if args.method == "d3":
            enc = encode_d3(inst, cb)
        elif args.method == "vlad":
            enc = encode_vlad(inst, cb)
        elif args.method == "fv":
            enc = encode_fv(inst, gm,
                            include_weights=args.include_weights,
                            power_normalize=not args.no_power_norm)
        else:
            enc = encode_hybrid(inst, [("d3", cb), ("fv", gm)])
        rows.append(enc.values)
    io.write_svec(args.out, np.vstack(rows))
    return 0


def _cmd_mi_report(args) -> int:
    encodings = io.read_svec(args.encodings).astype(np.float64)
    labels = _manifest_labels(args.manifest)
    if labels.shape[0] != encodings.shape[0]:
        raise ValidationError(
            f"{args.encodings} has {encodings.shape[0]} rows but the "
            f"manifest lists {labels.shape[0]} entities")
    report = diagnostics.mi_report(encodings, labels)
    diagnostics.write_mi_csv(report, args.out)
    if args.quantile_out:
        diagnostics.write_quantile_csv(report, args.quantile_out)
    if args.threshold is not None:
        count = report.high_mi_count(args.threshold)
        print(f"high_mi_count,{args.threshold:g},{count}")
    return 0


def _cmd_eval(args) -> int:
    train_x = io.read_svec(args.train_encodings).astype(np.float64)
    train_y = _manifest_labels(args.train_manifest)
    test_x = io.read_svec(args.test_encodings).astype(np.float64)
    test_y = _manifest_labels(args.test_manifest)
    for side, x, y in (("train", train_x, train_y), ("test", test_x, test_y)):
        if x.shape[0] != y.shape[0]:
            raise ValidationError(
                f"{side} encodings have {x.shape[0]} rows but the manifest "
                f"lists {y.shape[0]} entities")
    model = classify.fit_linear_ovr(train_x, train_y, lam=args.lam)
    acc = classify.accuracy(model, test_x, test_y)
    print(f"{args.encoder},{args.k},{acc:.6f}")
    return 0


def _cmd_dtvd(args) -> int:
    px = Gaussian1D(mu=args.mu_x, sigma=args.sigma_x)
    py = Gaussian1D(mu=args.mu_y, sigma=args.sigma_y)
    print(f"dtvd {dtvd_closed_form(px, py):.12g}")
    try:
        mpm = mpm_closed_form(px, py)
        print(f"mpm_threshold {mpm.threshold:.12g}")
        print(f"mpm_kappa {mpm.kappa_star:.12g}")
    except DegenerateBoundaryError:
        print("mpm_threshold nan")
        print("mpm_kappa nan")
    print(f"tvd_numeric {tvd_numeric(px, py):.12g}")
    return 0


def _cmd_gen_synthetic(args) -> int:
    entities = synthetic.generate_entities(
        args.classes, args.entities_per_class, args.vectors_per_entity,
        args.dim, args.mode, args.seed)
    synthetic.write_corpus(args.out, entities,
                           train_fraction=args.train_fraction)
    return 0


_COMMANDS = {
    "train-codebook": _cmd_train_codebook,
    "train-gmm": _cmd_train_gmm,
    "encode": _cmd_encode,
    "mi-report": _cmd_mi_report,
    "eval": _cmd_eval,
    "dtvd": _cmd_dtvd,
    "gen-synthetic": _cmd_gen_synthetic,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (FormatError, ValidationError, InsufficientDataError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (NumericError, TrainingDegenerateError,
            DegenerateBoundaryError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
