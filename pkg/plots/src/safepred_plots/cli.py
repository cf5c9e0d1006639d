"""Command line: plots <kind> <in.csv> <out-image> [--title ...]"""

from __future__ import annotations

import argparse
import sys

import matplotlib.pyplot as plt

from .render import KINDS, ColumnError, EmptyInputError, PlotJob, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="plots", description="Render evaluation CSVs into figures"
    )
    parser.add_argument("kind", choices=KINDS)
    parser.add_argument("input_csv")
    parser.add_argument("output_image")
    parser.add_argument("--title", default="")
    args = parser.parse_args(argv)

    job = PlotJob(
        kind=args.kind,
        input_csv=args.input_csv,
        output_image=args.output_image,
        title=args.title,
    )
    try:
        fig = render(job)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (ColumnError, EmptyInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    plt.close(fig)
    return 0


if __name__ == "__main__":
    sys.exit(main())
