"""Build a Bratteli tiling system, fit harmonic weights, and print the level ranks of an element."""

import argparse

from foelner_rank import QQ, make_group, parse_element
from foelner_rank.embed import cauchy_defect, rank_convergence
from foelner_rank.tiling import build_bratteli_tiling_system, empirical_harmonic, validate_bratteli


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--group", default="Z^1 x C2")
    ap.add_argument("--elem", default="1 + t")
    ap.add_argument("--depth", type=int, default=3)
    ap.add_argument("--H", default="16,32", help="box indices of the harmonic hosts")
    args = ap.parse_args(argv)

    g = make_group(args.group)
    a = parse_element(g, QQ, args.elem)
    s = build_bratteli_tiling_system(g, args.depth)
    h = empirical_harmonic(s, [int(x) for x in args.H.split(",")])
    s = s.with_weights(h.weights)
    rep = validate_bratteli(s.diagram())
    print(f"group {g}, depth {s.depth}, max harmonic residual {rep.max_harmonic_residual}")
    for n in range(1, s.depth + 1):
        sizes = {k: A.size for k, A in s.level(n).items()}
        print(f"  level {n}: sizes {sizes}")
    conv = rank_convergence(a, s, list(range(1, s.depth + 1)))
    print(f"reference rank of {args.elem}: {conv.extra['reference']}")
    for e, gap, bound in zip(conv.estimates, conv.gaps, conv.bounds):
        print(f"  level {e.parameter}: rk_phi = {e.value}  gap {gap}  slack {bound}")
    for i in range(1, s.depth):
        d = cauchy_defect(a, s, i)
        print(f"  cauchy defect {i}->{i + 1}: {d.defect} <= {d.bound}")


if __name__ == "__main__":
    main()
