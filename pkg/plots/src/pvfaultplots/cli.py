"""One subcommand per figure kind; input is a pvfaultsig JSON artifact,
output is an image file chosen by extension (.png or .svg)."""

from __future__ import annotations

import argparse
import sys

from .errors import MissingField, PlotError, SchemaMismatch
from .render import PLOT_KINDS, PlotRequest, render

EXIT_OK = 0
EXIT_SCHEMA = 3

_HELP = {
    "importance_bar": "top feature importances from importance.json",
    "cv_search": "CV accuracy vs trees per rule from cv_result.json",
    "shap_summary": "per-class mean |phi| rankings from global_summary.json",
    "metrics_bars": "macro metric bars from plot_metrics.json",
    "waterfall": "local explanation waterfall from an explain artifact",
    "filtered_vs_raw": "raw vs filtered signal traces from a prepare --trace-out artifact",
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pvfaultplots",
                                     description="Render pvfaultsig artifacts to figures")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in PLOT_KINDS:
        p = sub.add_parser(kind.replace("_", "-"), help=_HELP[kind])
        p.add_argument("--input", required=True, help="artifact JSON path")
        p.add_argument("--out", required=True, help="image path (.png or .svg)")
        p.set_defaults(kind=kind)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        out = render(PlotRequest(args.kind, args.input, args.out))
    except (SchemaMismatch, MissingField, PlotError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    print(f"wrote {out}")
    return EXIT_OK


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    sys.exit(main())
