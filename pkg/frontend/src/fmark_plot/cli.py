"""fmark-plot: render a panel layout of curve CSVs to one figure file."""

from __future__ import annotations

import argparse
import sys

from .panels import load_layout, render_panels


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fmark-plot",
        description="Render envelope curve CSVs as a multi-panel figure")
    parser.add_argument("--layout", required=True, help="JSON layout spec file")
    parser.add_argument("--out", required=True,
                        help="output image path (suffix picks the format; .svg default style)")
    args = parser.parse_args(argv)
    try:
        spec = load_layout(args.layout)
        path = render_panels(spec, args.out)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # pragma: no cover - internal failures
        print(f"internal error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
