"""Emit labeled synthetic log datasets as structured CSV files.

Each fixture is a shuffled corpus drawn from a deterministic template pool,
written in the LineId,Content,EventTemplate layout the CLI loader expects.
Useful for exercising `logsift parse --backend offline_oracle` end to end
and as regression inputs that never change between runs.
"""

import argparse
import sys
from pathlib import Path

from logsift.synth import make_dataset, write_structured_csv

# (n_lines, n_templates, seed) triples; small enough to commit, large
# enough that partitioning and caching both have work to do
DEFAULT_SHAPES = [
    (200, 5, 101),
    (600, 12, 202),
    (2000, 20, 303),
]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="fixtures", help="output directory")
    parser.add_argument("--style", choices=["maskable", "alpha", "both"],
                        default="both",
                        help="parameter style: maskable values look like "
                             "numbers/ids, alpha values survive masking")
    parser.add_argument("--shape", action="append", metavar="LINES,TEMPLATES,SEED",
                        help="extra dataset shape, may repeat; replaces the "
                             "defaults when given")
    args = parser.parse_args(argv)

    shapes = DEFAULT_SHAPES
    if args.shape:
        shapes = []
        for shape_arg in args.shape:
            try:
                n_lines, n_templates, seed = (int(x) for x in shape_arg.split(","))
            except ValueError:
                parser.error(f"bad --shape {shape_arg!r}, expected LINES,TEMPLATES,SEED")
            shapes.append((n_lines, n_templates, seed))
    styles = ["maskable", "alpha"] if args.style == "both" else [args.style]

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for n_lines, n_templates, seed in shapes:
        for style in styles:
            dataset = make_dataset(n_lines, n_templates, seed, param_style=style)
            path = out_dir / f"synth_{style}_{n_lines}x{n_templates}_s{seed}.csv"
            write_structured_csv(path, dataset)
            print(f"{path}  lines={dataset.n_lines}  "
                  f"templates={len(dataset.template_pool)}  style={style}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
