"""Verification campaigns, the real-quadratic class number oracle, configs and reports."""

from __future__ import annotations

import datetime as _dt
import json
import logging
import platform
from dataclasses import dataclass, field, fields
from math import gcd, isqrt

import mpmath
import sympy

from . import __version__
from .abelian_fields import (
    AbelianFieldSpec,
    FieldError,
    admissibility_warning,
    build_field,
    count_p_places,
    delta_subgroup,
    level_context,
    quadratic_field,
)
from .arith import check_odd_prime, field_discriminant, is_fundamental_discriminant, kronecker, valuation
from .circular_units import eta_system
from .kummer_engine import (
    DEFAULT_STOP_RULE,
    DIdealApprox,
    PrimeCache,
    assemble_d_ideal,
    ideal_basis,
    monogeneity_probe,
    norm_compat_check,
    twist_consistency_check,
)
from .padic_core import GroupRingElement, PrecisionError, idempotent
from .stickelberg_lp import (
    lp_consistency_check,
    regularizer_element,
    stickelberg_level,
)

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
SNAP_TOLERANCE = 0.45
ORACLE_BITS = 200
M1_SCOPE = "m = 1 run: a semi-simple-case check only; codescent at m = 1 is not controlled"


class OracleInconclusive(ArithmeticError):
    pass


# ---------------------------------------------------------------------------
# class number oracle


def fundamental_unit(d: int) -> tuple[int, int, int]:
    """Fundamental unit of Q(sqrt(d)), d a fundamental discriminant, as (x, y, norm) with eps = (x + y sqrt(d))/2.

    Walks the continued fraction of omega = (s + sqrt(d))/2 with exact
    (P, Q) arithmetic and returns the first convergent p/q whose
    p - q*omega' has norm +-1.
    """
    if not is_fundamental_discriminant(d) or d < 0:
        raise FieldError(f"{d} is not a positive fundamental discriminant")
    s = d % 2
    r = isqrt(d)
    # alpha = (P + sqrt(d)) / Q
    P, Q = s, 2
    h_prev, h = 0, 1
    k_prev, k = 1, 0
    for _ in range(10 * d + 10):
        a = (P + r) // Q if Q > 0 else -((-(P + r)) // Q) - 1
        h_prev, h = h, a * h + h_prev
        k_prev, k = k, a * k + k_prev
        # h/k is now the next convergent
        norm = h * h - s * h * k + k * k * (s * s - d) // 4
        if norm in (1, -1):
            return 2 * h - k * s, k, norm
        P = a * Q - P
        Q = (d - P * P) // Q
    raise OracleInconclusive(f"no unit found for d={d}")


def class_number_real_quadratic(d: int) -> int:
    """h(Q(sqrt(d))) from the analytic class number formula, snapped to an integer."""
    if not is_fundamental_discriminant(d) or d <= 0:
        raise FieldError(f"{d} is not a positive fundamental discriminant")
    x, y, _ = fundamental_unit(d)
    with mpmath.workprec(ORACLE_BITS):
        log_eps = mpmath.log((x + y * mpmath.sqrt(d)) / 2)
        total = mpmath.mpf(0)
        for a in range(1, d):
            c = kronecker(d, a)
            if c:
                total += c * mpmath.log(mpmath.sin(mpmath.pi * a / d))
        h = -total / (2 * log_eps)
        n = int(mpmath.nint(h))
        if abs(h - n) >= SNAP_TOLERANCE or n < 1:
            raise OracleInconclusive(f"oracle inconclusive: h ~ {mpmath.nstr(h, 10)} for d={d}")
    return n


def p_part(n: int, p: int) -> int:
    return p ** valuation(n, p) if n else 0


# ---------------------------------------------------------------------------
# config and reports


@dataclass
class CampaignConfig:
    p: int = 3
    d: int | None = None
    f: int | None = None
    h: list[int] = field(default_factory=list)
    level: int = 0
    levels: list[int] = field(default_factory=list)
    precision: int | None = None
    m: int = 3
    twists: list[int] = field(default_factory=list)
    k: int = 2
    d_values: list[int] = field(default_factory=list)
    primes: list[int] = field(default_factory=list)
    prime_budget: int = 64
    stop_rule: int = DEFAULT_STOP_RULE
    seed: int = 0
    cache: str | None = None
    labeling: str = "rec"

    _LISTS = ("h", "levels", "twists", "d_values", "primes")

    @classmethod
    def parse_value(cls, key: str, raw: str):
        names = {f.name for f in fields(cls)}
        if key not in names:
            raise ValueError(f"unknown config key {key!r}")
        raw = raw.strip()
        if key in cls._LISTS:
            return parse_int_list(raw)
        if key in ("cache", "labeling"):
            return raw or None
        if raw.lower() in ("", "none"):
            return None
        return int(raw)

    @classmethod
    def from_text(cls, text: str) -> CampaignConfig:
        cfg = cls()
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"config line {lineno}: expected key=value")
            key, raw = line.split("=", 1)
            key = key.strip().replace("-", "_")
            setattr(cfg, key, cls.parse_value(key, raw))
        return cfg

    @classmethod
    def from_file(cls, path: str) -> CampaignConfig:
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read())

    def field_spec(self) -> AbelianFieldSpec:
        if self.f is not None:
            return build_field(self.f, self.h)
        if self.d is not None:
            return quadratic_field(self.d)
        raise ValueError("config needs either d or f (with h)")


def parse_int_list(raw: str) -> list[int]:
    """'2,3,5' or '2..10' (inclusive) or a mix: '2..5,8'."""
    out: list[int] = []
    for part in raw.replace(" ", "").split(","):
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def versions() -> dict:
    return {
        "iwf": __version__,
        "python": platform.python_version(),
        "sympy": sympy.__version__,
        "mpmath": mpmath.__version__,
    }


def make_report(command: str, params: dict, items: list[dict], seed: int, extra: dict | None = None) -> dict:
    primes = sorted({l for it in items for l in it.get("primes", [])})
    counts: dict[str, int] = {}
    for it in items:
        counts[it["verdict"]] = counts.get(it["verdict"], 0) + 1
    report = {
        "schema": SCHEMA_VERSION,
        "command": command,
        "parameters": params,
        "items": items,
        "summary": {"verdicts": dict(sorted(counts.items())), "items": len(items)},
        "provenance": {"seed": seed, "primes_used": primes, "versions": versions()},
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
    }
    if extra:
        report.update(extra)
    return report


def report_json(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, default=str) + "\n"


def strip_timestamp(report: dict) -> dict:
    return {k: v for k, v in report.items() if k != "timestamp"}


def exit_code(report: dict) -> int:
    verdicts = [it["verdict"] for it in report["items"]]
    if any(v in ("mismatch", "fail") for v in verdicts):
        return 1
    if any(v == "inconclusive" for v in verdicts):
        return 3
    return 0


def _open_cache(path: str | None) -> PrimeCache | None:
    return PrimeCache(path) if path else None


# ---------------------------------------------------------------------------
# D-ideal analysis


def _ideal_summary(D: DIdealApprox) -> dict:
    st = D.structure()
    return {
        "precision": D.prec,
        "structure": st.as_dict(),
        "torsion_exponents": list(st.torsion_exponents),
        "torsion_order": st.torsion_order,
        "stabilized": D.stabilized,
        "rows": len(D.rows),
        "history": D.history,
        "primes": D.primes(),
        "skipped_primes": D.skipped,
    }


def stable_torsion(
    ctx,
    eta,
    start_prec: int,
    max_prec: int = 8,
    stop_rule: int = DEFAULT_STOP_RULE,
    prime_budget: int = 64,
    seed: int = 0,
    cache: PrimeCache | None = None,
    max_free: int = 1,
) -> dict:
    """Raise the precision until the torsion part of R/D is the same at a and a+1.

    Exponents equal to the precision are indistinguishable from free summands,
    so we also insist that at most ``max_free`` summands saturate.
    """
    runs = []
    prev = None
    a = start_prec
    while a <= max_prec:
        D, st = assemble_d_ideal(ctx, eta, a, stop_rule=stop_rule, prime_budget=prime_budget, seed=seed, cache=cache)
        runs.append(D)
        if prev is not None:
            Dp = prev
            stp = Dp.structure()
            if (
                Dp.stabilized
                and D.stabilized
                and stp.torsion_exponents == st.torsion_exponents
                and st.saturated <= max_free
            ):
                return {"runs": runs, "torsion_exponents": st.torsion_exponents, "settled": True}
        prev = D
        a += 1
    last = runs[-1].structure()
    return {"runs": runs, "torsion_exponents": last.torsion_exponents, "settled": False}


def extend_runs(runs: list[DIdealApprox], eta, stop_rule: int, prime_budget: int, seed: int, cache) -> None:
    for D in runs:
        assemble_d_ideal(D.ctx, eta, D.prec, stop_rule=stop_rule, prime_budget=prime_budget, seed=seed, cache=cache, extend=D)


def analyze(spec: AbelianFieldSpec, p: int, level: int, precision: int | None = None, stop_rule: int = DEFAULT_STOP_RULE, prime_budget: int = 64, seed: int = 0, cache_path: str | None = None) -> dict:
    check_odd_prime(p)
    prec = level + 2 if precision is None else precision
    ctx = level_context(spec, p, level)
    eta = eta_system(ctx)
    cache = _open_cache(cache_path)
    D, st = assemble_d_ideal(ctx, eta, prec, stop_rule=stop_rule, prime_budget=prime_budget, seed=seed, cache=cache)
    item = {
        "field": str(spec),
        "conductor": spec.conductor,
        "level": level,
        "group_order": ctx.group.order,
        "s": count_p_places(spec, p).s,
        "warning": admissibility_warning(spec, p),
        "heuristic": "Chebotarev sampling; stabilization is not a proof",
        "scope": M1_SCOPE,
        "monogeneity": monogeneity_probe(D),
        "verdict": "pass" if D.stabilized else "inconclusive",
        **_ideal_summary(D),
    }
    params = {"field": spec.key(), "p": p, "level": level, "precision": prec, "stop_rule": stop_rule, "prime_budget": prime_budget}
    return make_report("analyze", params, [item], seed)


# ---------------------------------------------------------------------------
# Gras-type campaign


SINNOTT_NOTE = (
    "compares the torsion of R_0/D_0 with the p-part of h; for composite conductors the "
    "circular-unit index may differ from h by powers of 2, which is invisible for odd p"
)


def gras_item(d: int, p: int, stop_rule: int, prime_budget: int, seed: int, cache) -> dict:
    D = field_discriminant(d)
    spec = quadratic_field(D)
    item: dict = {"d": d, "discriminant": D, "field": str(spec)}
    try:
        h = class_number_real_quadratic(D)
    except OracleInconclusive as exc:
        item.update(verdict="inconclusive", reason=str(exc), primes=[])
        return item
    expected = p_part(h, p)
    item["oracle"] = {"class_number": h, "p_part": expected}
    ctx = level_context(spec, p, 0)
    eta = eta_system(ctx)
    res = stable_torsion(ctx, eta, 2, stop_rule=stop_rule, prime_budget=prime_budget, seed=seed, cache=cache)
    computed = p ** sum(res["torsion_exponents"])
    extended = False
    if res["settled"] and computed > expected:
        # sampled ideals only shrink with more primes; make sure we did not stop early
        extend_runs(res["runs"], eta, 2 * stop_rule, 2 * prime_budget, seed, cache)
        extended = True
        a_runs = res["runs"]
        res["torsion_exponents"] = a_runs[-1].structure().torsion_exponents
        res["settled"] = all(r.stabilized for r in a_runs) and (
            len(a_runs) < 2 or a_runs[-2].structure().torsion_exponents == a_runs[-1].structure().torsion_exponents
        )
        computed = p ** sum(res["torsion_exponents"])
    last = res["runs"][-1]
    item["computed"] = {
        "quotient_torsion_order": computed,
        "torsion_exponents": list(res["torsion_exponents"]),
        "precisions": [r.prec for r in res["runs"]],
        "stabilized": res["settled"],
        "extended_sampling": extended,
        "structure": last.structure().as_dict(),
    }
    item["primes"] = sorted({l for r in res["runs"] for l in r.primes()})
    if not res["settled"]:
        item["verdict"] = "inconclusive"
        item["reason"] = "ideal did not stabilize within the prime budget and precision range"
    else:
        item["verdict"] = "match" if computed == expected else "mismatch"
    return item


def run_gras_check(p: int, d_values, stop_rule: int = DEFAULT_STOP_RULE, prime_budget: int = 64, seed: int = 0, cache_path: str | None = None) -> dict:
    check_odd_prime(p)
    cache = _open_cache(cache_path)
    items = []
    seen: set[int] = set()
    for d in d_values:
        try:
            D = field_discriminant(d)
        except ValueError:
            items.append({"d": d, "verdict": "skipped", "reason": "not squarefree and not a fundamental discriminant"})
            continue
        if D <= 1:
            items.append({"d": d, "verdict": "skipped", "reason": "not a real quadratic field"})
            continue
        if kronecker(D, p) == 1:
            items.append({"d": d, "discriminant": D, "verdict": "skipped", "reason": f"({D}/{p}) = 1: p splits, s = 2"})
            continue
        if D in seen:
            items.append({"d": d, "discriminant": D, "verdict": "skipped", "reason": "duplicate field"})
            continue
        seen.add(D)
        items.append(gras_item(d, p, stop_rule, prime_budget, seed, cache))
    params = {"p": p, "d_values": list(d_values), "stop_rule": stop_rule, "prime_budget": prime_budget}
    return make_report("gras-check", params, items, seed, {"note": SINNOTT_NOTE, "scope": M1_SCOPE})


# ---------------------------------------------------------------------------
# twisted Fitting report over E = F(zeta_p)


def run_fitting_report(spec: AbelianFieldSpec, p: int, n: int, m: int, precision: int | None = None, stop_rule: int = DEFAULT_STOP_RULE, prime_budget: int = 64, seed: int = 0, cache_path: str | None = None) -> dict:
    check_odd_prime(p)
    if m % 2 == 0 or m == 1:
        raise ValueError(f"fitting report needs odd m != 1 (twist hypothesis), got m={m}")
    e_ctx = level_context(spec, p, n, "E")
    prec = e_ctx.kappa_precision if precision is None else precision
    if prec > e_ctx.kappa_precision:
        raise PrecisionError(f"precision {prec} exceeds kappa precision {e_ctx.kappa_precision} at level {n}")
    eta = eta_system(e_ctx)
    cache = _open_cache(cache_path)
    D, _ = assemble_d_ideal(e_ctx, eta, prec, stop_rule=stop_rule, prime_budget=prime_budget, seed=seed, cache=cache, eta_id="eta")
    G = e_ctx.group
    kappa = e_ctx.kappa.at_precision(prec)
    delta = delta_subgroup(e_ctx)
    e_cut = idempotent(m - 1, G, kappa, prec, delta)
    e_target = idempotent(1 - m, G, kappa, prec, delta)
    one = GroupRingElement.one(G, p, prec)
    # (e_{m-1} D)^# sits inside e_{1-m} R; add the complement to read off e_{1-m} R / (e_{m-1} D)^#
    gens = [(e_cut * r.row).galois_inverse() for r in D.rows]
    I = ideal_basis(gens, G, p, prec)
    quotient_basis = ideal_basis([one - e_target], G, p, prec, I.copy())
    st = quotient_basis.quotient_structure()
    twist = twist_consistency_check(e_ctx, m, prec, primes=None, count=max(len(D.rows), 1), seed=seed, eta=eta)
    item = {
        "field": str(spec),
        "E_degree": G.order,
        "delta_order": len(delta),
        "level": n,
        "m": m,
        "precision": prec,
        "computable_factor": {
            "description": "structure of e_{1-m} R / (e_{m-1} D_n(E))^#",
            "structure": st.as_dict(),
            "ideal_log_order": I.log_order(),
        },
        "unresolved_cofactor": "Fitting ideal of the coinvariants of e_{m-1} X'(E_inf)^0; finite under Greenberg's conjecture, not computed",
        "d_ideal": _ideal_summary(D),
        "twist_consistency": twist,
        "primes": sorted(set(D.primes()) | set(twist["primes"])),
        "verdict": "pass" if twist["verdict"] == "pass" and D.stabilized else ("fail" if twist["verdict"] == "fail" else "inconclusive"),
    }
    params = {"field": spec.key(), "p": p, "level": n, "m": m, "precision": prec, "stop_rule": stop_rule, "prime_budget": prime_budget}
    return make_report("fitting-report", params, [item], seed)


# ---------------------------------------------------------------------------
# Stickelberger and L_p reports


def stickelberg_report(f: int, p: int, n: int, labeling: str = "rec", regularizers=None) -> dict:
    stick = stickelberg_level(f, p, n, labeling)
    items = []
    coeffs = {str(a): str(c) for a, c in stick.as_dict().items()}
    up = stickelberg_level(f, p, n + 1, labeling)
    coherent = up.project(stick.group) == stick
    items.append({"check": "norm coherence", "level": n, "verdict": "pass" if coherent else "fail"})
    A = stick.group.modulus
    if regularizers is None:
        regularizers = [c for c in range(2, 4 * A) if gcd(c, 2 * A) == 1][:10]
    for c in regularizers:
        x = regularizer_element(stick.group, c, labeling) * stick
        ok = x.denominators_prime_to(p)
        bad = [str(v) for v in x.coeffs if v.denominator % p == 0][:1]
        items.append({"check": "integrality", "c": c, "verdict": "pass" if ok else "fail", "offending": bad})
    params = {"f": f, "p": p, "level": n, "labeling": labeling, "modulus": A}
    return make_report("stickelberg", params, items, 0, {"coefficients": coeffs})


def lp_report(p: int, m: int, n: int, k: int) -> dict:
    item = lp_consistency_check(p, m, n, k)
    return make_report("lp-check", {"p": p, "m": m, "level": n, "k": k}, [item], 0)


def norm_compat_report(spec: AbelianFieldSpec, p: int, n: int, prec: int, stop_rule: int = DEFAULT_STOP_RULE, prime_budget: int = 64, seed: int = 0) -> dict:
    lo = level_context(spec, p, n)
    hi = level_context(spec, p, n + 1)
    D_lo, _ = assemble_d_ideal(lo, eta_system(lo), prec, stop_rule=stop_rule, prime_budget=prime_budget, seed=seed)
    D_hi, _ = assemble_d_ideal(hi, eta_system(hi), prec, stop_rule=stop_rule, prime_budget=prime_budget, seed=seed)
    res = norm_compat_check(D_hi, D_lo)
    return {"lower": _ideal_summary(D_lo), "upper": _ideal_summary(D_hi), **res}
