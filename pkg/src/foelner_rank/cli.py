"""Command-line frontend.

Subcommands ``rank``, ``luck``, ``quasitile``, ``bratteli`` and
``embed-check`` each print one JSON (or CSV) document. Exit codes:
0 ok, 1 usage or parse error, 2 precondition failure, 3 bound violation.

A ``--config FILE`` holds ``key = value`` lines using the long flag names
(``n = 4,8,16``, ``s-mode = r+1``); flags given on the command line win.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from dataclasses import asdict, dataclass, field as dc_field
from fractions import Fraction
from pathlib import Path

from . import embed, rank, tiling
from .errors import BoundViolation, ParseError, PreconditionError
from .fields import field_from_tag
from .folner import folner_set
from .groupring import GroupRingMatrix, parse_element, parse_matrix
from .groups import HEISENBERG, MarkedGroup, cayley_graph, induced_labeled_graph, parse_group, quotient
from .report import (defect_record, dumps_csv, dumps_json, envelope, estimate_record,
                     frac_json, stage_record)

EXIT_OK, EXIT_USAGE, EXIT_PRECONDITION, EXIT_BOUND = 0, 1, 2, 3

# largest Følner set used as an H_k in the internal harmonic schedule
MAX_H = 20000


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    group: str = "Z^1"
    field: str = "QQ"
    elem: str | None = None
    elem2: str | None = None
    matrix: str | None = None
    n_list: list[int] | None = None
    m_list: list[int] | None = None
    i_list: list[int] | None = None
    s_mode: str = "r"
    eps: Fraction = Fraction(1, 5)
    seed: int | None = None
    depth: int = 2
    shapes: list[int] = dc_field(default_factory=lambda: [8, 4])
    disjoint: bool = False
    format: str = "json"
    output: str | None = None

    def validate(self):
        for name in ("n_list", "m_list", "i_list", "shapes"):
            v = getattr(self, name)
            if v is None:
                continue
            if not v:
                raise UsageError(f"{name} must be nonempty")
            if name != "shapes" and any(b <= a for a, b in zip(v, v[1:])):
                raise UsageError(f"{name} must be increasing")
        if not 0 < self.eps < 1:
            raise UsageError("eps must lie in (0, 1)")
        if self.s_mode not in ("r", "r+1"):
            raise UsageError("s-mode must be 'r' or 'r+1'")
        if self.format not in ("json", "csv"):
            raise UsageError("format must be json or csv")
        if self.depth < 1:
            raise UsageError("depth must be >= 1")

    def public(self) -> dict:
        d = asdict(self)
        d.pop("output")
        return d


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in str(text).replace(" ", "").split(",") if t]
    except ValueError as exc:
        raise UsageError(f"bad integer list {text!r}") from exc


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(str(text).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise UsageError(f"bad number {text!r}") from exc


_CONVERT = {
    "n": ("n_list", _int_list), "m": ("m_list", _int_list), "i": ("i_list", _int_list),
    "eps": ("eps", _fraction), "seed": ("seed", int), "depth": ("depth", int),
    "shapes": ("shapes", _int_list), "s_mode": ("s_mode", str), "group": ("group", str),
    "field": ("field", str), "elem": ("elem", str), "elem2": ("elem2", str),
    "matrix": ("matrix", str), "format": ("format", str), "output": ("output", str),
    "elem_file": ("elem_file", str), "matrix_file": ("matrix_file", str),
    "disjoint": ("disjoint", lambda s: str(s).lower() in ("1", "true", "yes")),
}

_ALIASES = {"n_list": "n", "m_list": "m", "i_list": "i"}


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        k, v = line.split("=", 1)
        k = k.strip().replace("-", "_")
        k = _ALIASES.get(k, k)
        if k not in _CONVERT:
            raise UsageError(f"{path}:{lineno}: unknown key {k!r}")
        out[k] = v.strip()
    return out


def build_config(ns: argparse.Namespace) -> RunConfig:
    raw: dict[str, str] = {}
    if ns.config:
        raw.update(read_config_file(ns.config))
    for k in _CONVERT:
        v = getattr(ns, k, None)
        if v is not None:
            raw[k] = v
    cfg = RunConfig()
    for k, v in raw.items():
        if k in ("elem_file", "matrix_file"):
            continue
        attr, conv = _CONVERT[k]
        try:
            setattr(cfg, attr, conv(v))
        except ValueError as exc:
            raise UsageError(f"bad value for {k}: {v!r}") from exc
    for k, attr in (("elem_file", "elem"), ("matrix_file", "matrix")):
        if k in raw:
            try:
                setattr(cfg, attr, Path(raw[k]).read_text().strip())
            except OSError as exc:
                raise UsageError(f"cannot read {raw[k]}: {exc}") from exc
    cfg.validate()
    return cfg


# -- shared plumbing --------------------------------------------------------------

def _group(cfg: RunConfig) -> tuple[MarkedGroup, tuple[int, ...] | None]:
    return parse_group(cfg.group)


def _operand(cfg: RunConfig, g: MarkedGroup):
    f = field_from_tag(cfg.field)
    if cfg.matrix is not None:
        return parse_matrix(g, f, cfg.matrix)
    if cfg.elem is None:
        raise UsageError("an element (--elem/--elem-file) or --matrix is required")
    return parse_element(g, f, cfg.elem)


def _default_n(g: MarkedGroup, big: bool = False) -> list[int]:
    if g.kind == HEISENBERG:
        return [2, 4]
    if g.rank >= 2:
        return [4, 8, 16]
    return [10, 20, 40] if big else [4, 8, 16]


def _window(cfg: RunConfig):
    return cfg.s_mode == "r+1"


def _harmonic_schedule(g: MarkedGroup, system: tiling.BratteliTilingSystem) -> list:
    """H_k: the largest top-level shape, then its Følner dilates while below MAX_H elements."""
    top = max(system.level(system.depth).values(), key=lambda s: s.size)
    out = [top.shape]
    if top.index is not None:
        growth = 4 if g.kind == HEISENBERG else g.rank
        for mult in (2, 4):
            if top.size * mult ** growth > MAX_H:
                break
            out.append(folner_set(g, top.index * mult))
    return out


def _build_system(g: MarkedGroup, cfg: RunConfig) -> tuple[tiling.BratteliTilingSystem,
                                                           tiling.HarmonicResult]:
    system = tiling.build_bratteli_tiling_system(g, cfg.depth, folner_driver=cfg.n_list)
    harm = tiling.empirical_harmonic(system, _harmonic_schedule(g, system))
    return system.with_weights(harm.weights), harm


# -- commands ----------------------------------------------------------------------

def cmd_rank(cfg: RunConfig) -> dict:
    g, _ = _group(cfg)
    x = _operand(cfg, g)
    n_list = cfg.n_list or _default_n(g)
    if isinstance(x, GroupRingMatrix):
        reports = [rank.matrix_rank_estimate(x, n_list, strict=_window(cfg))]
    else:
        reports = [rank.folner_rank_kernel(x, n_list),
                   rank.folner_rank_image(x, n_list, strict=_window(cfg))]
    stages = [estimate_record(e) for r in reports for e in r.estimates]
    finals = {r.method: r.final.value for r in reports}
    return envelope("rank", cfg.public(), stages, final=finals,
                    gaps={r.method: r.gaps for r in reports}, heuristic=True)


def cmd_luck(cfg: RunConfig) -> dict:
    g, modulus = _group(cfg)
    x = _operand(cfg, g)
    moduli = [modulus] if modulus is not None and cfg.m_list is None else (cfg.m_list or [10, 20, 40])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        rep = rank.compare_report(x, cfg.n_list or _default_n(g, big=True), moduli, strict=_window(cfg))
    stages = [estimate_record(e) for e in rep.estimates]
    return envelope("luck", cfg.public(), stages, verdict=rep.verdict, heuristic=True,
                    final_gap=rep.extra["final_gap"], allowed=rep.extra["allowed"],
                    folner_final=rep.extra["folner_final"],
                    quotient_final=rep.extra["quotient_final"])


def cmd_quasitile(cfg: RunConfig) -> dict:
    g, modulus = _group(cfg)
    if modulus is not None:
        q, proj = quotient(g, modulus)
        host = cayley_graph(g, q, proj)
    else:
        host = induced_labeled_graph(g, folner_set(g, (cfg.n_list or [20])[-1]))
    shapes = tiling.box_shapes(g, cfg.shapes)
    t = tiling.quasitile(host, shapes, cfg.eps, disjoint=cfg.disjoint, seed=cfg.seed)
    disj, _ = tiling.check_epsilon_disjoint(t.placements, cfg.eps)
    cov, ratio = tiling.check_epsilon_cover(host, t.placements, cfg.eps)
    stages = [stage_record("quasitile", len(host.out), ratio, len(t.covered), host.n)]
    return envelope("quasitile", cfg.public(), stages,
                    shapes={s.id: {"box": n, "size": s.size} for s, n in zip(shapes, cfg.shapes)},
                    counts=t.counts(), cover_ratio=ratio,
                    epsilon_disjoint="verified" if disj else "not verified",
                    epsilon_cover="verified" if cov else "not verified",
                    tiling=t.to_json())


def cmd_bratteli(cfg: RunConfig) -> dict:
    g, _ = _group(cfg)
    system, harm = _build_system(g, cfg)
    val = tiling.validate_bratteli(system.diagram())
    stages = []
    for k, st in enumerate(harm.stages):
        stages.append(stage_record("harmonic", k, Fraction(st.level), st.level, 1,
                                   size=len(st.H)))
    return envelope(
        "bratteli", cfg.public(), stages, system=system.to_json(),
        invariants=system.check_invariants(),
        validation={"sizes_ok": val.sizes_ok, "harmonic_ok": val.harmonic_ok,
                    "missing_outgoing": val.missing_outgoing,
                    "harmonic_residuals": val.harmonic_residuals,
                    "weight_sums": val.weight_sums,
                    "max_harmonic_residual": val.max_harmonic_residual})


def cmd_embed_check(cfg: RunConfig) -> dict:
    g, _ = _group(cfg)
    a = _operand(cfg, g)
    if isinstance(a, GroupRingMatrix):
        raise UsageError("embed-check takes a group ring element, not a matrix")
    b = parse_element(g, a.field, cfg.elem2) if cfg.elem2 else a
    system, _ = _build_system(g, cfg)
    levels = cfg.i_list or list(range(1, system.depth + 1))
    if max(levels) > system.depth:
        raise PreconditionError(f"level {max(levels)} exceeds built depth {system.depth}")
    stages = []
    for i in levels:
        if i < system.depth:
            stages.append(defect_record(embed.cauchy_defect(a, system, i)))
        stages.append(defect_record(embed.hom_defect(a, b, system, i)))
        stages.append(defect_record(embed.star_defect(a, system, i)))
    conv = embed.rank_convergence(a, system, levels)
    for e, gap, bound, slack in zip(conv.estimates, conv.gaps, conv.bounds,
                                    conv.extra["slack_terms"]):
        stages.append(stage_record(e.method, e.parameter, e.value, e.numerator, e.denominator,
                                   bound, False, gap=frac_json(gap),
                                   slack_terms={k: frac_json(v) for k, v in slack.items()}))
    body = {"reference": conv.extra["reference"], "rank_verdict": conv.verdict}
    if cfg.m_list:
        k = max(levels)
        x = embed.pi_level(a, system, k)
        tilings = []
        for m in cfg.m_list:
            G = embed.sofic_from_quotient(g, m)
            T = embed.tile_sofic(G, system, level=k)
            tilings.append(T)
            d = embed.first_identity_defect(a, G, T)
            stages.append(stage_record("first_identity", m, d.rank_defect, d.rank_diff, d.n,
                                       1 - d.agree_fraction, False,
                                       agree_fraction=frac_json(d.agree_fraction)))
        tau = embed.tau_rank_convergence(x, tilings)
        for e, gap in zip(tau.estimates, tau.gaps):
            stages.append(stage_record("tau_rank", e.parameter, gap, gap.numerator, gap.denominator,
                                       e.bound, False, rank=frac_json(e.value)))
        body["tau_target"] = tau.extra["target"]
    return envelope("embed-check", cfg.public(), stages, **body)


COMMANDS = {"rank": cmd_rank, "luck": cmd_luck, "quasitile": cmd_quasitile,
            "bratteli": cmd_bratteli, "embed-check": cmd_embed_check}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="foelner-rank", description="Exact rank estimators over amenable group algebras.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="key = value file; flags override it")
        s.add_argument("--group", help='e.g. "Z^2", "Z^1 x C2", "H3", "Z^1 % 10"')
        s.add_argument("--field", help="QQ, QQi or GFp (e.g. GF7)")
        s.add_argument("--elem", help='group ring element, e.g. "g0 - 1"')
        s.add_argument("--elem-file", dest="elem_file")
        s.add_argument("--elem2", help="second element for the homomorphism defect")
        s.add_argument("--matrix", help='rows split by ";", entries by ","')
        s.add_argument("--matrix-file", dest="matrix_file")
        s.add_argument("--n", help="Følner indices, comma separated")
        s.add_argument("--m", help="quotient moduli, comma separated")
        s.add_argument("--i", help="tiling-system levels, comma separated")
        s.add_argument("--s-mode", dest="s_mode", help="window radius: r (default) or r+1")
        s.add_argument("--eps")
        s.add_argument("--seed")
        s.add_argument("--depth")
        s.add_argument("--shapes", help="box sizes of tile shapes, comma separated")
        s.add_argument("--disjoint", action="store_const", const="true")
        s.add_argument("--format", choices=("json", "csv"))
        s.add_argument("--output")
    return p


def run(argv: list[str] | None = None) -> tuple[int, str, str]:
    """Run a command; returns (exit code, stdout text, stderr text)."""
    try:
        ns = make_parser().parse_args(argv)
        cfg = build_config(ns)
        doc = COMMANDS[ns.command](cfg)
    except (UsageError, ParseError) as exc:
        return EXIT_USAGE, "", f"error: {exc}\n"
    except BoundViolation as exc:
        return EXIT_BOUND, "", f"bound violation: {exc}\n"
    except (PreconditionError, tiling.BratteliError) as exc:
        return EXIT_PRECONDITION, "", f"precondition failed: {exc}\n"
    text = dumps_csv(doc) if cfg.format == "csv" else dumps_json(doc)
    if cfg.output:
        Path(cfg.output).write_text(text)
        return EXIT_OK, "", ""
    return EXIT_OK, text, ""


def main(argv: list[str] | None = None) -> int:
    code, out, err = run(argv)
    sys.stdout.write(out)
    sys.stderr.write(err)
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
