"""Convert UCR/UEA archive files to ``ts-cls v1``.

    python scripts/ucr_to_tscls.py ItalyPowerDemand_TRAIN.ts ItalyPowerDemand_TEST.ts --out data/

Accepts both the classic ``.txt``/``.tsv`` layout (label first) and the ``.ts``
layout. Each input ``NAME.ext`` becomes ``<out>/NAME.tscls``. The train and
test files of one dataset must use the same label set, since labels are
re-indexed in sorted order per file.
"""

import argparse
import sys
from pathlib import Path

from memdd.data import ParseError, ucr_to_tscls


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description="UCR/UEA -> ts-cls v1")
    ap.add_argument("files", nargs="+")
    ap.add_argument("--out", default=".")
    ap.add_argument("--delimiter", help="field separator for the classic layout (default: comma or whitespace)")
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for f in args.files:
        src = Path(f)
        dst = out / (src.stem + ".tscls")
        try:
            ds = ucr_to_tscls(src, dst, args.delimiter)
        except (ParseError, OSError) as e:
            print(f"{src}: {e}", file=sys.stderr)
            return 2
        print(f"{dst}: N={len(ds)} T={ds.T} D={ds.D} C={ds.C}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
