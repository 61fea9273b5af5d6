"""Experiment runners comparing exact counts with predicted main terms.

Every runner returns an ExperimentReport.  A report stores its parameters
and, per grid point, the exact quantity, the prediction, the error and the
band it is judged against; pass/fail is recomputed from those numbers only.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from itertools import combinations
from math import gcd, prod
from typing import Callable, Iterable, Sequence

from psmooth.analytic import dickman_rho, li_classic, li_poly, singular_series_exact
from psmooth.errors import DomainError
from psmooth.localroots import G_value, root_set_multi, sigma_star
from psmooth.polycore.factored import FactoredPoly, structural_report
from psmooth.polycore.poly import Poly, restrict_to_progression
from psmooth.sieve import (
    M_count,
    error_term,
    poly_smooth_count,
    prime_count,
    prime_count_segment_ap,
    shifted_prime_smooth_count,
)

SCHEMA_VERSION = 1
KINDS = ("identity", "asymptotic", "probe")
CHECKS = ("abs", "relative", "normalized", "none")


@dataclass
class PointRecord:
    point: dict
    exact: float | int | None
    prediction: float | int | None
    abs_error: float | None = None
    normalized_error: float | None = None
    band: float | None = None
    check: str = "abs"
    passed: bool | None = None
    extra: dict = field(default_factory=dict)

    def judge(self) -> None:
        if self.exact is not None and self.prediction is not None and self.abs_error is None:
            self.abs_error = abs(self.exact - self.prediction)
        if self.check == "none" or self.band is None:
            self.passed = None
            return
        value = {"abs": self.abs_error, "normalized": self.normalized_error}.get(self.check)
        if self.check == "relative":
            value = self.abs_error / abs(self.prediction) if self.prediction else self.abs_error
        self.passed = value is not None and abs(value) <= self.band

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class ExperimentReport:
    experiment: str
    kind: str
    parameters: dict
    records: list[PointRecord] = field(default_factory=list)
    rejected: list[dict] = field(default_factory=list)
    runtime: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool | None:
        verdicts = [r.passed for r in self.records if r.passed is not None]
        if not verdicts:
            return None
        return all(verdicts)

    def as_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "kind": self.kind,
            "parameters": self.parameters,
            "records": [r.as_dict() for r in self.records],
            "rejected": self.rejected,
            "passed": self.passed,
            "runtime": self.runtime,
        }

    def to_json(self, indent: int | None = 2) -> str:
        return json.dumps(self.as_dict(), indent=indent, sort_keys=True, default=_json_default)

    @classmethod
    def from_dict(cls, d: dict) -> ExperimentReport:
        if d.get("schema_version") != SCHEMA_VERSION:
            raise DomainError(f"unsupported report schema version {d.get('schema_version')}")
        rep = cls(d["experiment"], d["kind"], d["parameters"], rejected=d.get("rejected", []), runtime=d.get("runtime", {}))
        rep.records = [PointRecord(**r) for r in d["records"]]
        return rep

    @classmethod
    def from_json(cls, text: str) -> ExperimentReport:
        return cls.from_dict(json.loads(text))

    def rejudge(self) -> ExperimentReport:
        """Recompute every verdict from the stored numbers."""
        for r in self.records:
            r.passed = None
            r.judge()
        return self

    def to_csv(self) -> str:
        keys: list[str] = []
        for r in self.records:
            keys += [k for k in r.point if k not in keys]
        cols = ["experiment", *keys, "exact", "prediction", "abs_error", "normalized_error", "band", "check", "passed"]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in self.records:
            row = [self.experiment, *[r.point.get(k, "") for k in keys]]
            row += [_cell(getattr(r, c)) for c in cols[1 + len(keys):]]
            w.writerow(row)
        return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _json_default(o):
    if isinstance(o, Fraction):
        return str(o)
    if hasattr(o, "item"):
        return o.item()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _finish(rep: ExperimentReport, t0: float) -> ExperimentReport:
    for r in rep.records:
        r.judge()
    rep.runtime = {
        "elapsed_seconds": round(time.perf_counter() - t0, 6),
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    return rep


def _map(fn: Callable, items: Sequence, workers: int) -> list:
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# exact identities


def check_inclusion_exclusion(F: FactoredPoly, x: float, y: float) -> ExperimentReport:
    """Psi(F; x, y) against floor(x) + sum over nonempty factor subsets S of
    (-1)^|S| M(prod S; x, y)."""
    t0 = time.perf_counter()
    rep = ExperimentReport("inclusion_exclusion", "identity", {"F": str(F), "x": x, "y": y})
    if F.content != 1:
        rep.rejected.append({"point": {"x": x, "y": y}, "reason": "F must be primitive"})
        return _finish(rep, t0)
    if not x >= y >= 1:
        rep.rejected.append({"point": {"x": x, "y": y}, "reason": "need x >= y >= 1"})
        return _finish(rep, t0)
    lhs = poly_smooth_count(F, x, y)
    terms = []
    rhs = math.floor(x)
    for k in range(1, F.K + 1):
        for S in combinations(F.polys, k):
            m = M_count(FactoredPoly(1, 1, tuple((g, 1) for g in S)), x, y)
            terms.append({"subset": [str(g) for g in S], "M": m})
            rhs += (-1) ** k * m
    rep.records.append(PointRecord({"x": x, "y": y}, lhs, rhs, band=0, extra={"terms": terms}))
    return _finish(rep, t0)


def _transformed(f: FactoredPoly, hs: Sequence[int], b: int) -> list[Poly]:
    H = prod(hs)
    return [restrict_to_progression(g, H, b).exact_div(h) for g, h in zip(f.polys, hs)]


def _cflb_sides(f: FactoredPoly, hs: Sequence[int], P: int) -> tuple[Fraction, Fraction, list[int]]:
    k = f.K
    bs = root_set_multi(list(f.polys), list(hs))
    left = sum((singular_series_exact(_transformed(f, hs, b), P, k) for b in bs), Fraction(0))
    right = singular_series_exact(list(f.polys), P, k) * G_value(f.expand(), prod(hs))
    for g, h in zip(f.polys, hs):
        right *= sigma_star(g, h)
    return left, right, bs


def check_cflb_identity(f: FactoredPoly, hs: Sequence[int], x: float, P: int, band: float = 1e-5) -> ExperimentReport:
    """sum_{b in R(f; h)} C(f_{h,b}) against C(f) G(f; h_1...h_k) prod sigma*(f_i; h_i),
    both truncated at the same prime P (exact rational arithmetic), and again at 2P."""
    t0 = time.perf_counter()
    hs = [int(h) for h in hs]
    rep = ExperimentReport("cflb_identity", "identity", {"f": str(f), "h": hs, "x": x, "P": P, "band": band})
    rs = structural_report(f)
    bad = [k for k in ("balanced", "effective", "admissible", "exclusive") if not getattr(rs, k)]
    if len(hs) != f.K:
        bad.append(f"need {f.K} moduli, got {len(hs)}")
    if any(h < 1 for h in hs) or any(gcd(a, b) != 1 for a, b in combinations(hs, 2)):
        bad.append("h_i must be pairwise coprime positive integers")
    if bad:
        rep.rejected.append({"point": {"h": hs}, "reason": "preconditions fail: " + ", ".join(bad)})
        return _finish(rep, t0)
    errs = []
    for Pi in (P, 2 * P):
        left, right, bs = _cflb_sides(f, hs, Pi)
        rel = abs(left - right) / right if right else abs(left - right)
        errs.append(float(rel))
        rep.records.append(
            PointRecord(
                {"P": Pi},
                float(left),
                float(right),
                abs_error=float(abs(left - right)),
                band=band,
                check="relative",
                extra={"b": bs, "relative_error": float(rel), "exact_equal": left == right},
            )
        )
    rep.records.append(
        PointRecord({"P": f"{P}->{2 * P}"}, errs[1], errs[0], abs_error=max(errs[1] - errs[0], 0.0), band=0.0,
                    extra={"meaning": "relative error at 2P minus relative error at P, clipped at 0"})
    )
    # informational: the same sum weighted by the logarithmic integrals
    H = prod(hs)
    if x > 0:
        wl = 0.0
        for b in rep.records[0].extra["b"]:
            polys = _transformed(f, hs, b)
            Fb = FactoredPoly(1, 1, tuple((g, 1) for g in polys)) if all(g.lc > 0 for g in polys) else None
            if Fb is not None:
                wl += float(singular_series_exact(polys, P, f.K)) * li_poly(Fb, (x - b) / H)
        rep.parameters["li_weighted_left"] = wl
    return _finish(rep, t0)


# ---------------------------------------------------------------------------
# asymptotic probes


def theorem_main_experiment(
    F: FactoredPoly,
    xs: Iterable[float],
    us: Iterable[float],
    P: int = 10**6,
    band: float = 0.05,
    workers: int = 1,
) -> ExperimentReport:
    """Psi(F; x, x^(1/u))/x against prod_i rho(d_i u) on an (x, u) grid."""
    t0 = time.perf_counter()
    xs, us = list(xs), list(us)
    d = max(F.degrees) if F.factors else 0
    k = sum(1 for di in F.degrees if di == d)
    U = math.inf if d - 1 / k <= 0 else 1 / (d - 1 / k)
    rep = ExperimentReport(
        "theorem_main", "asymptotic",
        {"F": str(F), "x": xs, "u": us, "P": P, "band": band, "degrees": list(F.degrees), "u_max": U if U != math.inf else None},
    )
    pts = []
    for x in xs:
        for u in us:
            if not 0 < u < U:
                rep.rejected.append({"point": {"x": x, "u": u}, "reason": f"u must lie in (0, {U})"})
            else:
                pts.append((x, u))

    def run(pt):
        x, u = pt
        y = x ** (1 / u)
        cnt = poly_smooth_count(F, x, y)
        pred = prod(dickman_rho(di * u) for di in F.degrees)
        ratio = cnt / x
        return PointRecord({"x": x, "u": u}, ratio, pred, normalized_error=(ratio - pred) * math.log(x), band=band,
                           extra={"count": cnt, "y": y})

    rep.records.extend(_map(run, pts, workers))
    return _finish(rep, t0)


def theorem_prime_experiment(
    a: int, xs: Iterable[float], us: Iterable[float], band: float = 0.05, workers: int = 1
) -> ExperimentReport:
    """Phi_a(x, x^(1/u))/pi(x) against rho(u)."""
    t0 = time.perf_counter()
    xs, us = list(xs), list(us)
    rep = ExperimentReport("theorem_prime", "asymptotic", {"a": a, "x": xs, "u": us, "band": band})
    pts = []
    for x in xs:
        for u in us:
            if a == 0:
                rep.rejected.append({"point": {"x": x, "u": u}, "reason": "a must be nonzero"})
            elif not 0 < u < 3:
                rep.rejected.append({"point": {"x": x, "u": u}, "reason": "u must lie in (0, 3)"})
            elif x < 1 + max(a, 0) or prime_count(x) == 0:
                rep.rejected.append({"point": {"x": x, "u": u}, "reason": f"x must be at least {1 + max(a, 0)} with pi(x) > 0"})
            else:
                pts.append((x, u))

    def run(pt):
        x, u = pt
        phi = shifted_prime_smooth_count(a, x, x ** (1 / u))
        pi = prime_count(x)
        ratio = phi / pi
        pred = dickman_rho(u)
        return PointRecord({"x": x, "u": u}, ratio, pred, normalized_error=(ratio - pred) * math.log(x), band=band,
                           extra={"count": phi, "pi": pi})

    rep.records.extend(_map(run, pts, workers))
    return _finish(rep, t0)


def _phi(q: int) -> int:
    from sympy import totient

    return int(totient(q))


def hypothesis_AP_probe(x: float, y: float, q: int, a: int, band: float = 5.0) -> ExperimentReport:
    """pi(x; q, a) - pi(x - y; q, a) against y/(phi(q) log x) and against
    (li(x) - li(x - y))/phi(q); normalised errors scaled by phi(q) log^2 x / y."""
    t0 = time.perf_counter()
    if not 1 <= y <= x:
        raise DomainError("need 1 <= y <= x")
    if q < 1 or gcd(a, q) != 1:
        raise DomainError(f"gcd(a, q) = {gcd(a, q)}; a and q must be coprime")
    rep = ExperimentReport("hypothesis_AP", "probe", {"x": x, "y": y, "q": q, "a": a, "band": band})
    cnt = prime_count_segment_ap(x, y, q, a)
    ph = _phi(q)
    scale = ph * math.log(x) ** 2 / y
    plain = y / (ph * math.log(x))
    li_form = (li_classic(x) - li_classic(x - y)) / ph
    rep.records.append(PointRecord({"form": "plain"}, cnt, plain, normalized_error=(cnt - plain) * scale, check="none"))
    rep.records.append(PointRecord({"form": "li"}, cnt, li_form, normalized_error=(cnt - li_form) * scale, band=band, check="normalized"))
    return _finish(rep, t0)


def hypothesis_UH_probe(F: FactoredPoly, xs: Iterable[float], P: int = 10**6) -> ExperimentReport:
    """E(F; x) and E(F; x) / (C(F) x / log^(K+1) x + 1) over a grid; a trend, not a test.
    For non-admissible F the bound pi(F; x) <= deg F is checked."""
    t0 = time.perf_counter()
    xs = list(xs)
    rep = ExperimentReport("hypothesis_UH", "probe", {"F": str(F), "x": xs, "P": P})
    rs = structural_report(F)
    if not (rs.squarefree and rs.primitive):
        rep.rejected.append({"point": {}, "reason": "F must be squarefree and primitive"})
        return _finish(rep, t0)
    for x in xs:
        e = error_term(F, x, P)
        denom = e.constant * x / math.log(x) ** (F.K + 1) + 1 if x > 1 else 1.0
        pred = e.constant * e.li_value
        if e.constant == 0:
            rec = PointRecord({"x": x}, e.count, F.degree, abs_error=max(e.count - F.degree, 0), band=0,
                              normalized_error=e.error / denom, extra={"admissible": False})
        else:
            rec = PointRecord({"x": x}, e.count, pred, normalized_error=e.error / denom, check="none",
                              extra={"constant": e.constant, "li": e.li_value, "error": e.error})
        rep.records.append(rec)
    return _finish(rep, t0)
