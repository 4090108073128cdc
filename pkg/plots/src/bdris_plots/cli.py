"""``bdris-plot <figure> --in <csv> --out <png|svg>``"""

from __future__ import annotations

import argparse
import sys

from .recipes import FIGURES, FigureRecipe, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bdris-plot", description=__doc__)
    parser.add_argument("figure", choices=FIGURES)
    parser.add_argument("--in", dest="input_csv", required=True, help="input CSV")
    parser.add_argument("--out", required=True, help="output image (.png or .svg)")
    log = parser.add_mutually_exclusive_group()
    log.add_argument("--log-y", dest="log_y", action="store_true", default=None)
    log.add_argument("--linear-y", dest="log_y", action="store_false")
    parser.add_argument("--no-band", dest="band", action="store_false",
                        help="skip the min/max shading")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    recipe = FigureRecipe(
        input_csv=args.input_csv,
        figure=args.figure,
        output=args.out,
        log_y=args.log_y,
        band=args.band,
    )
    try:
        result = render(recipe)
    except FileNotFoundError:
        print(f"cannot read {args.input_csv}", file=sys.stderr)
        return 1
    except SchemaError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    print(f"wrote {result.output}" + (" (no data rows)" if result.empty else ""))
    return 0


def entrypoint() -> None:
    sys.exit(main())
