"""Command-line entry point.

Exit codes: 0 success, 2 scenario/validation error, 3 numerical error,
4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from . import __version__, pipeline
from .errors import (ConfigurationError, InadmissibleDataError, InvalidProfileError,
                     MovestabError, NumericalError, PipelineError, ScenarioError)
from .scenario import load_scenario

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

SUBCOMMAND_KINDS = {
    "analyze-map": ("map_analysis",),
    "simulate": ("moving_boundary", "static_boundary"),
    "pointwise": ("static_pointwise",),
    "sweep": ("sweep",),
}


def exit_code(err):
    if isinstance(err, PipelineError):
        return exit_code(err.cause)
    if isinstance(err, OSError):
        return EXIT_IO
    if isinstance(err, (ScenarioError, ConfigurationError, InvalidProfileError,
                        InadmissibleDataError)):
        return EXIT_VALIDATION
    if isinstance(err, NumericalError):
        return EXIT_NUMERICAL
    if isinstance(err, (MovestabError, ValueError)):
        return EXIT_VALIDATION
    return EXIT_NUMERICAL


def build_parser():
    ap = argparse.ArgumentParser(prog="movestab",
                                 description="Wave stabilization on a periodically moving domain")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, outputs=True):
        p.add_argument("--scenario", required=True, metavar="PATH", help="scenario JSON file")
        if outputs:
            p.add_argument("--out", metavar="DIR", help="output directory")
            p.add_argument("--ds", type=float, help="characteristic grid step override")
            p.add_argument("--horizon", type=float, help="simulation horizon override")
            p.add_argument("--no-plot", action="store_true", help="skip SVG figures")
        return p

    common(sub.add_parser("analyze-map", help="rotation number and conjugacy of the boundary map"))
    p = common(sub.add_parser("synthesize", help="tabulate the feedback law over one period"))
    p.add_argument("--mu", type=float, help="damping parameter override")
    common(sub.add_parser("simulate", help="moving or static boundary run"))
    common(sub.add_parser("pointwise", help="interior point damper run"))
    common(sub.add_parser("sweep", help="fan a run out over mu or xi0 values"))
    common(sub.add_parser("validate", help="check a scenario file"), outputs=False)
    return ap


def _run(args):
    s = load_scenario(args.scenario)
    if args.command == "validate":
        print(f"{args.scenario}: valid {s.kind} scenario")
        return EXIT_OK
    s = s.override(ds=args.ds, horizon=args.horizon)
    out = args.out
    plot = not args.no_plot
    if args.command == "synthesize":
        if args.mu is not None:
            s = s.override(mu=args.mu)
        manifest = pipeline.synthesize_feedback(s, out or "movestab_out", plot=plot)
    else:
        if args.command == "analyze-map" and s.kind != "map_analysis":
            s = s.override(kind="map_analysis")
        allowed = SUBCOMMAND_KINDS[args.command]
        if s.kind not in allowed:
            raise ScenarioError(f"subcommand {args.command!r} expects kind in {list(allowed)}, "
                                f"got {s.kind!r}")
        manifest = pipeline.run_scenario(s, out, plot=plot)
    print(json.dumps({"files": manifest["files"], "summary": manifest["summary"]},
                     indent=2, sort_keys=True))
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except Exception as err:  # noqa: BLE001
        code = exit_code(err)
        print(f"movestab: error: {err}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
