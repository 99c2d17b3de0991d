"""JSON and CSV serialization of estimates, defects and reports.

Every number is an exact rational written as ``"p/q"`` next to a rounded
decimal, so ``Fraction(record["value"])`` reproduces it exactly.
"""

from __future__ import annotations

import csv
import io
import json
from decimal import Decimal, localcontext
from fractions import Fraction

SCHEMA = "foelner-rank/1"

CSV_COLUMNS = ("command", "method", "stage", "numerator", "denominator", "value",
               "value_decimal", "bound", "bound_decimal", "heuristic")


def frac_json(x) -> str | None:
    if x is None:
        return None
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def decimal_str(x, places: int = 12) -> str | None:
    if x is None:
        return None
    x = Fraction(x)
    with localcontext() as ctx:
        ctx.prec = 60
        d = Decimal(x.numerator) / Decimal(x.denominator)
        return format(d.quantize(Decimal(1).scaleb(-places)), "f")


def stage_record(method: str, stage, value, numerator: int, denominator: int,
                 bound=None, heuristic: bool = False, **extra) -> dict:
    rec = {
        "method": method,
        "stage": stage,
        "numerator": numerator,
        "denominator": denominator,
        "value": frac_json(value),
        "value_decimal": decimal_str(value),
        "bound": frac_json(bound),
        "bound_decimal": decimal_str(bound),
        "heuristic": heuristic,
    }
    rec.update(extra)
    return rec


def estimate_record(e, heuristic: bool = True) -> dict:
    extra = {}
    if e.window is not None:
        extra["window"] = e.window
    if e.k != 1:
        extra["k"] = e.k
    return stage_record(e.method, e.parameter, e.value, e.numerator, e.denominator,
                        e.bound, heuristic and e.method != "quotient", **extra)


def defect_record(d) -> dict:
    v = Fraction(d.defect)
    return stage_record(d.name, d.level, v, v.numerator, v.denominator, d.bound, False,
                        slack_terms={k: frac_json(t) for k, t in d.slack_terms.items()})


def jsonable(x):
    """Recursively convert Fractions (and tuples) into JSON-safe values."""
    if isinstance(x, Fraction):
        return frac_json(x)
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    return x


def envelope(command: str, config: dict, stages: list[dict], **body) -> dict:
    out = {"schema": SCHEMA, "command": command, "config": jsonable(config), "stages": stages}
    out.update({k: jsonable(v) for k, v in body.items()})
    return out


def dumps_json(doc: dict) -> str:
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def dumps_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, extrasaction="ignore", lineterminator="\n")
    w.writeheader()
    for rec in doc.get("stages", []):
        w.writerow({**rec, "command": doc["command"]})
    return buf.getvalue()


def parse_fraction(s: str) -> Fraction:
    return Fraction(s)
