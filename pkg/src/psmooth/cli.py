"""psmooth command line.

Results go to stdout as plain text (default), JSON or CSV; diagnostics go
to stderr.  Exit status: 0 on success, 1 when a computation fails (resource
caps, unexpected arithmetic trouble), 2 for usage errors (bad syntax,
arguments outside the domain of an operation).
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from dataclasses import dataclass, fields
from datetime import datetime, timezone
from pathlib import Path

from psmooth import analytic, localroots, meanvalue, sieve, verify
from psmooth.errors import DomainError, ParseError, PsmoothError, RangeError
from psmooth.polycore.factored import (
    FactoredPoly,
    compute_Q,
    make_effective_balanced,
    salvation_pipeline,
    structural_report,
)
from psmooth.polycore.parse import parse_poly
from psmooth.polycore.poly import Poly, fhb_transform, restrict_to_progression

SCHEMA_VERSION = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


@dataclass
class RunConfig:
    P: int = 10**6
    chunk: int = sieve.DEFAULT_CHUNK
    threads: int = os.cpu_count() or 1
    cache_dir: str = str(Path.home() / ".cache" / "psmooth")
    format: str = "plain"
    seed: int = localroots.DEFAULT_SEED
    prime_table_cap: int = sieve.PRIME_TABLE_CAP
    hensel_cap: int = localroots.HENSEL_CAP

    def __post_init__(self):
        for name in ("P", "chunk", "threads", "prime_table_cap", "hensel_cap"):
            if getattr(self, name) < 1:
                raise DomainError(f"config value {name} must be positive")
        if self.format not in ("json", "csv", "plain"):
            raise DomainError(f"unknown output format {self.format!r}")

    @classmethod
    def from_sources(cls, config_file: str | None, overrides: dict) -> RunConfig:
        """Defaults, then the key=value file, then PSMOOTH_CACHE, then flags."""
        vals: dict = {}
        types = {f.name: f.type for f in fields(cls)}
        if config_file:
            for lineno, line in enumerate(Path(config_file).read_text().splitlines(), 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                key, sep, val = line.partition("=")
                key = key.strip()
                if not sep or key not in types:
                    raise DomainError(f"{config_file}:{lineno}: expected key=value with key in {sorted(types)}")
                vals[key] = val.strip()
        if os.environ.get("PSMOOTH_CACHE"):
            vals["cache_dir"] = os.environ["PSMOOTH_CACHE"]
        vals.update({k: v for k, v in overrides.items() if v is not None})
        conv = {k: (_int(v) if types[k] in ("int", int) else str(v)) for k, v in vals.items()}
        return cls(**conv)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


# ---------------------------------------------------------------------------
# argument parsing helpers


def _int(s) -> int:
    """Integers written as 1000000, 1e6, 10^6 or 10**6."""
    if isinstance(s, int):
        return s
    t = str(s).strip().replace("**", "^")
    try:
        if "^" in t:
            b, e = t.split("^", 1)
            return int(b) ** int(e)
        if any(c in t for c in "eE."):
            v = float(t)
            if v != int(v):
                raise ValueError
            return int(v)
        return int(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {s!r}") from None


def _num(s) -> float:
    t = str(s).strip().replace("**", "^")
    try:
        if "^" in t:
            b, e = t.split("^", 1)
            return float(b) ** float(e)
        return float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {s!r}") from None


def _ints(s: str) -> list[int]:
    return [_int(p) for p in s.split(",") if p.strip()]


def _poly(text: str) -> Poly:
    """A raw polynomial; factored text is expanded."""
    if "[" in text:
        return FactoredPoly.parse(text).expand()
    return parse_poly(text)


def _factored(text: str) -> FactoredPoly:
    return FactoredPoly.parse(text)


# ---------------------------------------------------------------------------
# command implementations; each returns a JSON-ready value or a report


RHO_UMAX_CAP = 100.0  # the table holds 2^10 floats per unit of u


def cmd_rho(a, cfg):
    if a.u > RHO_UMAX_CAP:
        raise RangeError(f"u = {a.u} exceeds the supported range {RHO_UMAX_CAP}")
    return analytic.dickman_rho(a.u, u_max=max(analytic.DEFAULT_UMAX, a.u + 1))


def cmd_rho_table(a, cfg):
    tab = analytic.DickmanTable.build(a.u_max, a.step)
    return {"step": tab.step, "u_max": tab.u_max, "values": [float(v) for v in tab.values]}


def cmd_li(a, cfg):
    return analytic.li_classic(a.x)


def cmd_li_poly(a, cfg):
    F = _factored(a.poly)
    if a.h:
        return analytic.li_poly_weighted(F, a.h, a.x)
    return analytic.li_poly(F, a.x)


def cmd_sigma(a, cfg):
    return localroots.sigma(_poly(a.poly), a.n, cap=cfg.hensel_cap, seed=cfg.seed)


def cmd_sigma_star(a, cfg):
    return localroots.sigma_star(_poly(a.poly), a.n, cap=cfg.hensel_cap, seed=cfg.seed)


def cmd_gvalue(a, cfg):
    return localroots.G_value(_poly(a.poly), a.n, seed=cfg.seed)


def cmd_roots(a, cfg):
    f = _poly(a.poly)
    if a.h is not None:
        return {"h": a.h, "roots": localroots.root_set(f, a.h, cap=cfg.hensel_cap, seed=cfg.seed)}
    if a.p is None:
        raise DomainError("roots needs --p (with optional --nu) or --h")
    table = localroots.hensel_sigma_table(f, a.p, a.nu, cap=cfg.hensel_cap, seed=cfg.seed)
    return [t.as_dict() for t in table]


def cmd_constant(a, cfg):
    v = analytic.singular_series(_factored(a.poly), a.P or cfg.P)
    return v.as_dict()


def cmd_transform(a, cfg):
    if a.kind == "fhb":
        return str(fhb_transform(_poly(a.poly), a.h, a.b))
    if a.kind == "restrict":
        return str(restrict_to_progression(_poly(a.poly), a.q, a.a))
    if a.kind == "salvage":
        F = _factored(a.poly)
        Q = a.q or compute_Q(F)
        return {"Q": Q, "a": a.a, "result": str(salvation_pipeline(F, a.a, Q))}
    F1, t0 = make_effective_balanced(_factored(a.poly))
    return {"result": str(F1), "shift": t0}


def cmd_q_of(a, cfg):
    return compute_Q(_factored(a.poly))


def cmd_structure(a, cfg):
    return structural_report(_factored(a.poly)).as_dict()


def cmd_count(a, cfg):
    ch = cfg.chunk
    k = a.kind
    if k == "smooth":
        return sieve.smooth_count(a.x, a.y, chunk=ch)
    if k == "smooth-ap":
        return sieve.smooth_count_ap(a.x, a.y, a.q, a.a, chunk=ch)
    if k == "poly-smooth":
        return sieve.poly_smooth_count(_factored(a.poly), a.x, a.y, chunk=ch)
    if k == "shifted-prime":
        return sieve.shifted_prime_smooth_count(a.a, a.x, a.y, chunk=ch)
    if k == "prime-values":
        return sieve.prime_values_count(_factored(a.poly), a.x, chunk=ch)
    if k == "prime-ap":
        if a.y is not None:
            return sieve.prime_count_segment_ap(a.x, a.y, a.q, a.a)
        return sieve.prime_count_ap(a.x, a.q, a.a)
    return sieve.M_count(_factored(a.poly), a.x, a.y, chunk=ch)


def cmd_meanvalue(a, cfg):
    k = a.kind
    gs = [meanvalue.mult_fn(g) for g in (a.g or [])]
    P = a.P or cfg.P
    if k == "weighted":
        return meanvalue.weighted_coprime_sum(_factored(a.poly), a.x[0], a.u, P).as_dict()
    if not gs:
        raise DomainError(f"meanvalue {k} needs --g")
    g = gs[0]
    if k == "mg":
        return meanvalue.Mg_sum(g, a.x[0])
    if k == "mg-coprime":
        return meanvalue.Mg_sum_coprime(g, a.x[0], a.q)
    if k == "multisum":
        return meanvalue.coprime_multisum(gs, a.x)
    if k == "c":
        return (meanvalue.c_multi(gs, P) if len(gs) > 1 else meanvalue.c_of_g(g, P)).as_dict()
    if k == "cq":
        return meanvalue.c_q_of_g(g, a.q, P, form=a.form).as_dict()
    return meanvalue.kappa_estimate(g, a.w)


def cmd_verify(a, cfg):
    k = a.kind
    P = a.P or cfg.P
    if k == "identity":
        return verify.check_inclusion_exclusion(_factored(a.poly), a.x[0], a.y)
    if k == "theorem1":
        return verify.theorem_main_experiment(_factored(a.poly), a.x, a.u, P, band=a.band, workers=cfg.threads)
    if k == "theorem2":
        return verify.theorem_prime_experiment(a.a, a.x, a.u, band=a.band, workers=cfg.threads)
    if k == "ap":
        return verify.hypothesis_AP_probe(a.x[0], a.y, a.q, a.a)
    if k == "uh":
        return verify.hypothesis_UH_probe(_factored(a.poly), a.x, P)
    return verify.check_cflb_identity(_factored(a.poly), a.h, a.x[0], P)


def cmd_cache(a, cfg):
    d = Path(cfg.cache_dir)
    if a.kind == "clear":
        removed = sorted(str(p.name) for p in d.glob("primes-*.pspt")) if d.is_dir() else []
        for name in removed:
            (d / name).unlink()
        return {"cache_dir": str(d), "removed": removed}
    d.mkdir(parents=True, exist_ok=True)
    table = sieve.load_or_build(a.limit, d, cap=cfg.prime_table_cap)
    table.self_test()
    return {"cache_dir": str(d), "limit": table.limit, "primes": table.count(table.limit)}


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="psmooth", allow_abbrev=False, description="Smooth values of polynomials: exact counts and constants.")
    ap.add_argument("--config", help="flat key=value RunConfig file")
    ap.add_argument("--format", choices=["json", "csv", "plain"], default=None)
    ap.add_argument("--P", dest="cfg_P", type=_int, default=None, help="default truncation prime")
    ap.add_argument("--chunk", type=_int, default=None)
    ap.add_argument("--threads", type=_int, default=None)
    ap.add_argument("--cache-dir", default=None)
    ap.add_argument("--seed", type=_int, default=None)
    ap.add_argument("--prime-table-cap", type=_int, default=None)
    ap.add_argument("--hensel-cap", type=_int, default=None)
    ap.add_argument("--quiet", action="store_true", help="no progress output")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, **kw):
        p = sub.add_parser(name, **kw)
        p.set_defaults(fn=fn)
        return p

    p = add("rho", cmd_rho, help="Dickman rho(u)")
    p.add_argument("--u", type=_num, required=True)
    p = add("rho-table", cmd_rho_table, help="tabulated rho")
    p.add_argument("--u-max", type=_num, default=analytic.DEFAULT_UMAX)
    p.add_argument("--step", type=_num, default=analytic.DEFAULT_STEP)
    p = add("li", cmd_li, help="logarithmic integral li(x)")
    p.add_argument("--x", type=_num, required=True)
    p = add("li-poly", cmd_li_poly, help="li(F; x), or li_h(f; x) with --h")
    p.add_argument("--poly", required=True)
    p.add_argument("--x", type=_num, required=True)
    p.add_argument("--h", type=_ints, default=None, help="comma separated h_i")
    for name, fn, text in (
        ("sigma", cmd_sigma, "number of roots of F mod n"),
        ("sigma-star", cmd_sigma_star, "sigma*(n) as an exact fraction"),
        ("gvalue", cmd_gvalue, "multiplicative weight g(n) as an exact fraction"),
    ):
        p = add(name, fn, help=text)
        p.add_argument("--poly", required=True)
        p.add_argument("--n", type=_int, required=True)
    p = add("roots", cmd_roots, help="roots mod p^j for j <= nu, or the root set mod h")
    p.add_argument("--poly", required=True)
    p.add_argument("--p", type=_int)
    p.add_argument("--nu", type=_int, default=1)
    p.add_argument("--h", type=_int)
    p = add("constant", cmd_constant, help="truncated singular series C(F)")
    p.add_argument("--poly", required=True)
    p.add_argument("--P", type=_int)
    p = add("transform", cmd_transform, help="fhb, restrict, salvage or effectivize a polynomial")
    p.add_argument("kind", choices=["fhb", "restrict", "salvage", "effectivize"])
    p.add_argument("--poly", required=True)
    p.add_argument("--h", type=_int)
    p.add_argument("--b", type=_int)
    p.add_argument("--q", type=_int)
    p.add_argument("--a", type=_int)
    p = add("q-of", cmd_q_of, help="modulus Q of the salvation construction")
    p.add_argument("--poly", required=True)
    p = add("structure", cmd_structure, help="structural predicates with witnesses")
    p.add_argument("--poly", required=True)
    p = add("count", cmd_count, help="exact sieve counts")
    p.add_argument("kind", choices=["smooth", "smooth-ap", "poly-smooth", "shifted-prime", "prime-values", "prime-ap", "m-count"])
    p.add_argument("--poly")
    p.add_argument("--x", type=_num, required=True)
    p.add_argument("--y", type=_num)
    p.add_argument("--q", type=_int)
    p.add_argument("--a", type=_int)
    p = add("meanvalue", cmd_meanvalue, help="mean values of multiplicative functions")
    p.add_argument("kind", choices=["mg", "mg-coprime", "multisum", "c", "cq", "kappa", "weighted"])
    p.add_argument("--g", action="append", help="one, sigma:<poly>, sigma_star:<poly>, G:<poly>, Gsigma:<poly>, Gsigma_star:<poly>")
    p.add_argument("--x", type=_num, nargs="+")
    p.add_argument("--q", type=_int, default=1)
    p.add_argument("--w", type=_num)
    p.add_argument("--u", type=_num)
    p.add_argument("--poly")
    p.add_argument("--P", type=_int)
    p.add_argument("--form", choices=["quotient", "direct"], default="quotient")
    p = add("verify", cmd_verify, help="experiments and identity checks")
    p.add_argument("kind", choices=["identity", "theorem1", "theorem2", "ap", "uh", "cflb"])
    p.add_argument("--poly")
    p.add_argument("--x", type=_num, nargs="+")
    p.add_argument("--y", type=_num)
    p.add_argument("--u", type=_num, nargs="+")
    p.add_argument("--a", type=_int)
    p.add_argument("--q", type=_int)
    p.add_argument("--h", type=_ints)
    p.add_argument("--P", type=_int)
    p.add_argument("--band", type=_num, default=0.05)
    p = add("cache", cmd_cache, help="prime table cache")
    p.add_argument("kind", choices=["build-primes", "clear"])
    p.add_argument("--limit", type=_int, default=10**7)
    return ap


_REQUIRED = {
    ("transform", "fhb"): ("h", "b"),
    ("transform", "restrict"): ("q", "a"),
    ("transform", "salvage"): ("a",),
    ("count", "smooth"): ("y",),
    ("count", "smooth-ap"): ("y", "q", "a"),
    ("count", "poly-smooth"): ("poly", "y"),
    ("count", "shifted-prime"): ("a", "y"),
    ("count", "prime-values"): ("poly",),
    ("count", "prime-ap"): ("q", "a"),
    ("count", "m-count"): ("poly", "y"),
    ("meanvalue", "mg"): ("x",),
    ("meanvalue", "mg-coprime"): ("x",),
    ("meanvalue", "multisum"): ("x",),
    ("meanvalue", "kappa"): ("w",),
    ("meanvalue", "weighted"): ("poly", "x", "u"),
    ("verify", "identity"): ("poly", "x", "y"),
    ("verify", "theorem1"): ("poly", "x", "u"),
    ("verify", "theorem2"): ("a", "x", "u"),
    ("verify", "ap"): ("x", "y", "q", "a"),
    ("verify", "uh"): ("poly", "x"),
    ("verify", "cflb"): ("poly", "h", "x"),
}


# ---------------------------------------------------------------------------
# output


def _jsonable(v):
    if isinstance(v, verify.ExperimentReport):
        d = v.as_dict()
        d["runtime"] = {k: x for k, x in d["runtime"].items() if k != "elapsed_seconds"}
        return d
    if hasattr(v, "numerator") and not isinstance(v, (int, bool)):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item"):
        return v.item()
    return v


def envelope(command: str, params: dict, result) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "parameters": _jsonable(params),
        "result": _jsonable(result),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }


def _plain(result) -> str:
    if isinstance(result, verify.ExperimentReport):
        lines = [f"{result.experiment}: passed={result.passed}"]
        for r in result.records:
            lines.append(f"  {r.point} exact={r.exact} prediction={r.prediction} abs_error={r.abs_error} "
                         f"normalized={r.normalized_error} passed={r.passed}")
        for r in result.rejected:
            lines.append(f"  rejected {r['point']}: {r['reason']}")
        return "\n".join(lines)
    if isinstance(result, float):
        return repr(result)
    if isinstance(result, dict):
        return "\n".join(f"{k}: {_jsonable(v)}" for k, v in result.items())
    if isinstance(result, list):
        return "\n".join(_plain(x) if not isinstance(x, dict) else json.dumps(_jsonable(x), sort_keys=True) for x in result)
    return str(result)


def _csv(result) -> str:
    if isinstance(result, verify.ExperimentReport):
        return result.to_csv()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(result, dict):
        w.writerow(["key", "value"])
        for k, v in result.items():
            w.writerow([k, json.dumps(_jsonable(v)) if isinstance(v, (list, dict)) else _jsonable(v)])
    elif isinstance(result, list) and result and isinstance(result[0], dict):
        cols = list(result[0])
        w.writerow(cols)
        for row in result:
            w.writerow([json.dumps(row[c]) if isinstance(row[c], list) else row[c] for c in cols])
    else:
        w.writerow(["value"])
        w.writerow([_jsonable(result)])
    return buf.getvalue()


def render(command: str, params: dict, result, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(envelope(command, params, result), indent=2, sort_keys=True)
    if fmt == "csv":
        return _csv(result).rstrip("\n")
    return _plain(result)


def _progress(done: int, total: int) -> None:
    print(f"\rsieved {done}/{total}", end="" if done < total else "\n", file=sys.stderr, flush=True)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        a = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_USAGE
    name = a.command + (f" {a.kind}" if hasattr(a, "kind") else "")
    try:
        for req in _REQUIRED.get((a.command, getattr(a, "kind", None)), ()):
            if getattr(a, req, None) is None:
                raise DomainError(f"{name} needs --{req}")
        cfg = RunConfig.from_sources(
            a.config,
            {"P": a.cfg_P, "chunk": a.chunk, "threads": a.threads, "cache_dir": a.cache_dir, "format": a.format,
             "seed": a.seed, "prime_table_cap": a.prime_table_cap, "hensel_cap": a.hensel_cap},
        )
        if not a.quiet and sys.stderr.isatty():
            sieve.set_progress(_progress)
        t0 = time.perf_counter()
        result = a.fn(a, cfg)
        elapsed = time.perf_counter() - t0
    except (ParseError, DomainError, OSError, argparse.ArgumentTypeError) as e:
        print(f"psmooth {name}: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except PsmoothError as e:
        print(f"psmooth {name}: computation failed: {e}", file=sys.stderr)
        return EXIT_FAIL
    except (ArithmeticError, MemoryError) as e:
        print(f"psmooth {name}: computation failed: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_FAIL
    finally:
        sieve.set_progress(None)
    skip = {"fn", "command", "kind", "config", "quiet", "cfg_P", "chunk", "threads", "cache_dir", "format", "seed",
            "prime_table_cap", "hensel_cap"}
    params = {k: v for k, v in vars(a).items() if k not in skip}
    params = {k: v for k, v in params.items() if v is not None}
    params["config"] = cfg.as_dict()
    params["config"].pop("cache_dir")
    print(render(name, params, result, cfg.format))
    if not a.quiet:
        print(f"[{name}: {elapsed:.3f} s]", file=sys.stderr)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
