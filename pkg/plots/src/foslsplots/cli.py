"""Command line entry: fosls2d-plots <figure-kind> --csv ... --out ..."""

from __future__ import annotations

import argparse
import sys

from .figures import KINDS, PLOTTERS, FigureSpec


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="fosls2d-plots",
        description="Regenerate figures from fosls2d experiment CSV files",
    )
    parser.add_argument("kind", choices=KINDS, help="figure kind")
    parser.add_argument("--csv", required=True, help="input CSV path")
    parser.add_argument("--out", required=True, help="output image path")
    parser.add_argument(
        "--slope-u", type=float, default=2.0,
        help="reference slope exponent for the u panel (loglog only)",
    )
    parser.add_argument(
        "--slope-phi", type=float, default=1.0,
        help="reference slope exponent for the phi panel (loglog only)",
    )
    args = parser.parse_args(argv)
    spec = FigureSpec(
        csv_path=args.csv,
        kind=args.kind,
        out_path=args.out,
        ref_exponents=(args.slope_u, args.slope_phi),
    )
    try:
        sidecar = PLOTTERS[args.kind](spec)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{args.out} (+ {sidecar})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
