"""Command-line interface: ``serialfusion <subcommand> ...``.

Every subcommand that writes ``--out`` also writes ``<out>.manifest.json``
recording the inputs, seed, chain and parameters of the run.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .cascade import (
    CascadeModel,
    calibrate,
    enumerate_chains,
    predict_roc,
    rank_chains,
)
from .error_model import ErrorParams, Sign, band, estimate_params
from .plot import roc_svg
from .roc import RocCurve, auc, build_roc, eer, zero_far_point, zero_frr_point
from .scores import (
    SynthSpec,
    column_score_set,
    correlation_matrix,
    read_score_table,
    split_table,
    synth_generate,
    table_from_matrices,
    write_score_table,
)
from .sim import compare_rocs, empirical_roc, run_cascade, threshold_grid

SUBCOMMANDS = (
    "synth", "corr", "roc", "calibrate", "predict", "simulate", "compare",
    "band", "estimate-errors", "order-search", "plot",
)


class CliError(Exception):
    pass


def _chain(text: str) -> list[str]:
    names = [c.strip() for c in text.split(",") if c.strip()]
    if len(names) < 2:
        raise argparse.ArgumentTypeError("a chain needs at least two comma-separated matchers")
    return names


def _write(path: str, text: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        f.write(text)


def _manifest(args, inputs, outputs, **params) -> None:
    doc = {
        "command": args.command,
        "inputs": [str(p) for p in inputs],
        "seed": getattr(args, "seed", None),
        "chain": getattr(args, "chain", None),
        "parameters": params,
        "outputs": [str(p) for p in outputs],
        "tool_version": __version__,
    }
    _write(f"{outputs[0]}.manifest.json", json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _load_model(path: str) -> CascadeModel:
    return CascadeModel.from_json(Path(path).read_text(encoding="utf-8"))


def _load_curve(path: str) -> RocCurve:
    with open(path, newline="", encoding="utf-8") as f:
        return RocCurve.from_csv(f)


# --- subcommands ------------------------------------------------------------


def cmd_synth(args) -> None:
    if args.from_matrix:
        matrices = {}
        for item in args.from_matrix:
            name, sep, path = item.partition("=")
            if not sep or not name:
                raise CliError(f"--from-matrix expects NAME=PATH, got {item!r}")
            matrices[name] = np.loadtxt(path, ndmin=2)
        table = table_from_matrices(matrices)
        inputs = [item.partition("=")[2] for item in args.from_matrix]
    else:
        if not args.spec:
            raise CliError("synth needs --spec (or --from-matrix)")
        spec = SynthSpec.from_json(Path(args.spec).read_text(encoding="utf-8"))
        table = synth_generate(spec, args.seed)
        inputs = [args.spec]
    write_score_table(table, args.out)
    _manifest(args, inputs, [args.out], rows=len(table))


def cmd_corr(args) -> None:
    table = read_score_table(args.inp[0])
    _write(args.out, correlation_matrix(table, args.pooling).to_csv())
    _manifest(args, args.inp, [args.out], pooling=args.pooling)


def cmd_roc(args) -> None:
    table = read_score_table(args.inp[0])
    scores = column_score_set(table, args.matcher)
    curve = build_roc(scores)
    _write(args.out, curve.to_csv())
    summary = {
        "matcher": args.matcher,
        "auc": auc(curve),
        "eer": eer(curve),
        "zeroFRR": zero_frr_point(scores).to_dict(),
        "zeroFAR": zero_far_point(scores).to_dict(),
    }
    print(json.dumps(summary, indent=1))
    _manifest(args, args.inp, [args.out], matcher=args.matcher)


def cmd_calibrate(args) -> None:
    if not args.chain:
        raise CliError("calibrate needs --chain")
    table = read_score_table(args.inp[0])
    outputs = [args.out]
    split = args.train_genuine is not None or args.train_impostor is not None
    if split:
        if args.train_genuine is None or args.train_impostor is None:
            raise CliError("--train-genuine and --train-impostor go together")
        train, probe = split_table(table, args.train_genuine, args.train_impostor, args.seed)
        probe_out = args.probe_out or str(Path(args.out).with_suffix(".probe.csv"))
        write_score_table(probe, probe_out)
        outputs.append(probe_out)
    else:
        train = table
    model = calibrate(train, args.chain)
    _write(args.out, model.to_json() + "\n")
    _manifest(args, args.inp, outputs, train_genuine=args.train_genuine,
              train_impostor=args.train_impostor)


def cmd_predict(args) -> None:
    model = _load_model(args.model)
    pred = predict_roc(model)
    _write(args.out, pred.as_curve().to_csv())
    print(json.dumps({"g_factor": pred.g_factor, "h_factor": pred.h_factor,
                      "auc": auc(pred.as_curve())}, indent=1))
    _manifest(args, [args.model], [args.out])


def cmd_simulate(args) -> None:
    model = _load_model(args.model)
    probe = read_score_table(args.inp[0])
    if args.threshold is not None:
        _write(args.out, run_cascade(model, probe, args.threshold).to_json() + "\n")
    else:
        grid = threshold_grid(args.grid, probe.column(model.last_matcher))
        _write(args.out, empirical_roc(model, probe, grid).to_csv())
    _manifest(args, [args.model, *args.inp], [args.out], grid=args.grid,
              threshold=args.threshold)


def cmd_compare(args) -> None:
    if len(args.inp) != 2:
        raise CliError("compare needs exactly two --in curve files")
    report = compare_rocs(_load_curve(args.inp[0]), _load_curve(args.inp[1]))
    _write(args.out, report.to_json() + "\n")
    _manifest(args, args.inp, [args.out])


def _error_params(args) -> ErrorParams:
    if args.params:
        doc = json.loads(Path(args.params).read_text(encoding="utf-8"))
        return ErrorParams.from_dict(doc.get("params", doc))
    if args.alpha is not None and args.alpha_rel is not None:
        raise CliError("--alpha and --alpha-rel are mutually exclusive")
    if args.alpha_rel is not None:
        return ErrorParams(args.alpha_rel, args.epsilon, Sign.BOTH, relative=True)
    return ErrorParams(args.alpha or 0.0, args.epsilon, Sign.BOTH)


def cmd_band(args) -> None:
    model = _load_model(args.model)
    params = _error_params(args)
    result = band(predict_roc(model), model, params)
    _write(args.out, result.to_csv())
    if result.clamped.any():
        print(f"note: {int(result.clamped.sum())} band points clamped to [0, 1]", file=sys.stderr)
    _manifest(args, [args.model], [args.out], **params.to_dict())


def cmd_estimate_errors(args) -> None:
    model = _load_model(args.model)
    probe = read_score_table(args.inp[0])
    est = estimate_params(model, probe)
    _write(args.out, json.dumps(est.to_dict(), indent=1) + "\n")
    _manifest(args, [args.model, *args.inp], [args.out])


def cmd_order_search(args) -> None:
    table = read_score_table(args.inp[0])
    matchers = args.chain or list(table.matcher_names)
    length = args.length or len(matchers)
    ranked = rank_chains(table, enumerate_chains(matchers, length))
    lines = ["rank,chain,predicted_auc,g_factor,h_factor"]
    verify = {}
    if args.simulate_top:
        if not args.probe:
            raise CliError("--simulate-top needs --probe")
        probe = read_score_table(args.probe)
        for r in ranked[: args.simulate_top]:
            model = calibrate(table, r.chain)
            verify[r.chain] = auc(empirical_roc(model, probe))
        lines[0] += ",empirical_auc"
    for k, r in enumerate(ranked, 1):
        row = [str(k), "-".join(r.chain), repr(r.auc), repr(r.g_factor), repr(r.h_factor)]
        if args.simulate_top:
            row.append(repr(verify[r.chain]) if r.chain in verify else "")
        lines.append(",".join(row))
    _write(args.out, "\n".join(lines) + "\n")
    inputs = args.inp + ([args.probe] if args.probe else [])
    _manifest(args, inputs, [args.out], length=length, simulate_top=args.simulate_top)


def cmd_plot(args) -> None:
    series = []
    for item in args.inp:
        label, sep, path = item.partition("=")
        if not sep:
            label, path = Path(item).stem, item
        curve = _load_curve(path)
        series.append((label, curve.far, curve.frr))
    band_xyz = None
    if args.band:
        with open(args.band, newline="", encoding="utf-8") as f:
            rows = list(csv.DictReader(f))
        band_xyz = tuple(np.array([float(r[k]) for r in rows]) for k in ("far_low", "far_high", "frr"))
    _write(args.out, roc_svg(series, band=band_xyz, title=args.title or ""))
    _manifest(args, list(args.inp) + ([args.band] if args.band else []), [args.out])


# --- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="serialfusion", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.set_defaults(func=func)
        sp.add_argument("--out", required=True, help="output file")
        sp.add_argument("--seed", type=int, default=0)
        return sp

    sp = add("synth", cmd_synth, "generate a matched score table (or convert score matrices)")
    sp.add_argument("--spec", help="JSON synthetic spec")
    sp.add_argument("--from-matrix", action="append", metavar="NAME=PATH",
                    help="per-matcher square score matrix (diagonal = genuine); repeatable")

    sp = add("corr", cmd_corr, "Pearson correlation matrix between matchers")
    sp.add_argument("--in", dest="inp", action="append", required=True)
    sp.add_argument("--pooling", choices=("pooled", "genuine", "impostor"), default="pooled")

    sp = add("roc", cmd_roc, "ROC curve of one matcher")
    sp.add_argument("--in", dest="inp", action="append", required=True)
    sp.add_argument("--matcher", required=True)

    sp = add("calibrate", cmd_calibrate, "calibrate a cascade on training scores")
    sp.add_argument("--in", dest="inp", action="append", required=True)
    sp.add_argument("--chain", type=_chain)
    sp.add_argument("--train-genuine", type=int)
    sp.add_argument("--train-impostor", type=int)
    sp.add_argument("--probe-out", help="where to write the held-out probe rows when splitting")

    sp = add("predict", cmd_predict, "predicted cascade ROC from a model")
    sp.add_argument("--model", required=True)

    sp = add("simulate", cmd_simulate, "run the cascade on probe scores")
    sp.add_argument("--model", required=True)
    sp.add_argument("--in", dest="inp", action="append", required=True)
    sp.add_argument("--grid", default="scores", help="scores | uniform:K")
    sp.add_argument("--threshold", type=float, help="single last-stage threshold (JSON result)")

    sp = add("compare", cmd_compare, "divergence between two curve CSVs")
    sp.add_argument("--in", dest="inp", action="append", required=True)

    sp = add("band", cmd_band, "alpha/epsilon error band around the prediction")
    sp.add_argument("--model", required=True)
    sp.add_argument("--alpha", type=float, help="absolute rate displacement")
    sp.add_argument("--alpha-rel", type=float, help="displacement as a fraction of each zero value")
    sp.add_argument("--epsilon", type=float, default=0.0)
    sp.add_argument("--params", help="JSON from estimate-errors")

    sp = add("estimate-errors", cmd_estimate_errors, "fit alpha/epsilon on probe scores")
    sp.add_argument("--model", required=True)
    sp.add_argument("--in", dest="inp", action="append", required=True)

    sp = add("order-search", cmd_order_search, "rank chain orderings by predicted auc")
    sp.add_argument("--in", dest="inp", action="append", required=True)
    sp.add_argument("--length", type=int)
    sp.add_argument("--chain", type=_chain, help="restrict the search to these matchers")
    sp.add_argument("--simulate-top", type=int, default=0)
    sp.add_argument("--probe")

    sp = add("plot", cmd_plot, "SVG plot of curve CSVs")
    sp.add_argument("--in", dest="inp", action="append", required=True, metavar="[LABEL=]PATH")
    sp.add_argument("--band")
    sp.add_argument("--title")
    return p


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args.func(args)
    except (CliError, ValueError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"serialfusion {args.command}: error: {msg}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())
