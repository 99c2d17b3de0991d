"""Lück agreement sweep: Følner vs quotient ranks for a few elements.

Writes a plot-ready CSV (one row per element and stage) to stdout or --out.
"""

import argparse
import csv
import sys
import warnings

from foelner_rank import QQ, make_group, parse_element
from foelner_rank.rank import folner_rank_image, folner_rank_kernel, quotient_rank

CASES = [
    ("Z^1", "g0 - 1"),
    ("Z^1", "g0 + g0^-1 - 2"),
    ("Z^1 x C2", "1 + t"),
    ("Z^2", "g0 + g1 - 2"),
]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--stages", default="8,16,32", help="Følner indices and moduli")
    ap.add_argument("--out")
    args = ap.parse_args(argv)
    stages = [int(x) for x in args.stages.split(",")]
    fh = open(args.out, "w", newline="") if args.out else sys.stdout
    w = csv.writer(fh)
    w.writerow(["group", "element", "stage", "folner_kernel", "folner_image", "quotient"])
    for spec, text in CASES:
        g = make_group(spec)
        a = parse_element(g, QQ, text)
        ker = folner_rank_kernel(a, stages).values
        img = folner_rank_image(a, stages).values
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            quo = [quotient_rank(a, m if g.rank == 1 else (m,) * g.rank).value for m in stages]
        for n, k, i, q in zip(stages, ker, img, quo):
            w.writerow([spec, text, n, f"{float(k):.6f}", f"{float(i):.6f}", f"{float(q):.6f}"])
    if args.out:
        fh.close()


if __name__ == "__main__":
    main()
