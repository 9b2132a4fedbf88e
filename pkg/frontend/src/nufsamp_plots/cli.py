"""Figure rendering CLI for the experiment runner's schema=v1 outputs.

    nufsamp-plots landscape  GRID_CSV MINIMA_JSON OUT_PNG
    nufsamp-plots psd        OUT_PNG --profiles CSV... [--maxima JSON...]
    nufsamp-plots trajectory TRAJ_CSV OUT_PNG
    nufsamp-plots objective  OUT_PNG --trajectories CSV...

Each command prints a JSON summary (marker counts, axis ranges) to stdout.
Exit codes mirror the runner: 0 success, 2 bad inputs or schema mismatch,
3 rendering/i/o failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .plots import plot_landscape, plot_objective, plot_psd, plot_trajectory
from .readers import SchemaError

EXIT_CONFIG = 2
EXIT_FAILURE = 3


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="nufsamp-plots", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("landscape")
    p.add_argument("grid_csv")
    p.add_argument("minima_json")
    p.add_argument("out_image")

    p = sub.add_parser("psd")
    p.add_argument("out_image")
    p.add_argument("--profiles", nargs="+", required=True)
    p.add_argument("--maxima", nargs="*", default=None)

    p = sub.add_parser("trajectory")
    p.add_argument("traj_csv")
    p.add_argument("out_image")

    p = sub.add_parser("objective")
    p.add_argument("out_image")
    p.add_argument("--trajectories", nargs="+", required=True)

    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0

    try:
        if args.command == "landscape":
            summary = plot_landscape(args.grid_csv, args.minima_json, args.out_image)
        elif args.command == "psd":
            summary = plot_psd(args.profiles, args.out_image, args.maxima or None)
        elif args.command == "trajectory":
            summary = plot_trajectory(args.traj_csv, args.out_image)
        else:
            summary = plot_objective(args.trajectories, args.out_image)
    except (SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    print(json.dumps(summary, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
