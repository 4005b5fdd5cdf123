"""Kummer pairings of circular units against Frobenius elements at auxiliary primes.

For an auxiliary prime l = 1 mod lcm(M, p^a) with a fixed embedding
zeta_M -> z in Z/l, the functional x -> dlog_w(x^((l-1)/p^a)) is a
Frobenius functional on p^a-th power classes. Applied to the Galois orbit
of eta it gives a pairing row  sum_sigma f(sigma^-1 eta) sigma  in
Z/p^a[G_n]. The ideal D_n is the Z/p^a[G_n]-span of such rows; sampling
more primes can only shrink R/D, and we stop after a run of primes that
did not shrink it (a Chebotarev heuristic, not a proof).
"""

from __future__ import annotations

import logging
import os
import random
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator, Sequence

from filelock import FileLock
from sympy import isprime, primitive_root

from .abelian_fields import LevelContext, delta_subgroup
from .arith import has_exact_order, lcm
from .circular_units import CircularUnitWord, DegenerateEvaluation, _zpow_table, eval_with_table
from .padic_core import (
    DomainError,
    GroupRingElement,
    HowellBasis,
    ModuleStructure,
    PrecisionError,
    StructureError,
    idempotent,
    iwasawa_twist,
    project_level,
)

log = logging.getLogger(__name__)

DEFAULT_STOP_RULE = 5
DEFAULT_SEARCH_CAP = 200_000


class ResourceError(RuntimeError):
    pass


@dataclass(frozen=True)
class AuxPrimeData:
    l: int
    modulus: int
    p: int
    prec: int
    z: int
    w: int

    def __post_init__(self) -> None:
        if (self.l - 1) % lcm(self.modulus, self.p**self.prec):
            raise DomainError(f"{self.l} is not 1 mod lcm({self.modulus}, {self.p}^{self.prec})")
        if not has_exact_order(self.z, self.modulus, self.l):
            raise DomainError(f"z = {self.z} does not have exact order {self.modulus} mod {self.l}")
        if not has_exact_order(self.w, self.p**self.prec, self.l):
            raise DomainError(f"w = {self.w} does not have exact order {self.p}^{self.prec} mod {self.l}")

    @cached_property
    def zpow(self) -> list[int]:
        return _zpow_table(self.z, self.modulus, self.l)

    def restrict(self, modulus: int) -> AuxPrimeData:
        """Same prime, embedding of mu_modulus induced by z (modulus | M)."""
        if self.modulus % modulus:
            raise StructureError(f"{modulus} does not divide {self.modulus}")
        return AuxPrimeData(self.l, modulus, self.p, self.prec, pow(self.z, self.modulus // modulus, self.l), self.w)

    def with_embedding(self, t: int) -> AuxPrimeData:
        """Another prime above l: zeta_M -> z^t."""
        return AuxPrimeData(self.l, self.modulus, self.p, self.prec, pow(self.z, t, self.l), self.w)

    def with_generator(self, u: int) -> AuxPrimeData:
        """Another generator w^u of mu_{p^a}."""
        return AuxPrimeData(self.l, self.modulus, self.p, self.prec, self.z, pow(self.w, u, self.l))

    def at_precision(self, prec: int) -> AuxPrimeData:
        if prec > self.prec:
            raise PrecisionError("cannot raise the precision of an auxiliary prime")
        return AuxPrimeData(self.l, self.modulus, self.p, prec, self.z, pow(self.w, self.p ** (self.prec - prec), self.l))

    @property
    def source(self) -> tuple[int, int, int]:
        return (self.l, self.z, self.w)


def aux_prime_step(ctx: LevelContext, prec: int) -> int:
    return lcm(ctx.modulus, ctx.p**prec)


def iter_aux_primes(ctx: LevelContext, prec: int, seed: int = 0, exclude: Iterable[int] = (), cap: int = DEFAULT_SEARCH_CAP) -> Iterator[AuxPrimeData]:
    """Primes l = 1 + kL in increasing k from a seed-dependent start."""
    if prec < 1:
        raise PrecisionError("precision must be >= 1")
    L = aux_prime_step(ctx, prec)
    excluded = set(exclude)
    k = 1 if seed == 0 else random.Random(seed).randrange(1, 10_000)
    pa = ctx.p**prec
    for _ in range(cap):
        l = 1 + k * L
        k += 1
        if l in excluded or not isprime(l):
            continue
        g = primitive_root(l)
        z = pow(g, (l - 1) // ctx.modulus, l)
        w = pow(g, (l - 1) // pa, l)
        yield AuxPrimeData(l, ctx.modulus, ctx.p, prec, z, w)
    raise ResourceError(f"auxiliary prime search cap of {cap} candidates exceeded (step {L})")


def find_aux_primes(ctx: LevelContext, prec: int, count: int, seed: int = 0, exclude: Iterable[int] = (), cap: int = DEFAULT_SEARCH_CAP) -> list[AuxPrimeData]:
    if count < 1:
        raise DomainError("count must be >= 1")
    out = []
    for aux in iter_aux_primes(ctx, prec, seed, exclude, cap):
        out.append(aux)
        if len(out) == count:
            return out
    raise AssertionError("unreachable")


def dlog_mu_pa(w: int, u: int, l: int, p: int, a: int) -> int:
    """k mod p^a with w^k = u mod l, for w of exact order p^a (digit-by-digit Pohlig-Hellman)."""
    q = p**a
    u %= l
    if pow(u, q, l) != 1:
        raise DomainError(f"{u} is not a p-power-order element mod {l}")
    gamma = pow(w, p ** (a - 1), l)
    digits = {}
    x = 1
    for d in range(p):
        digits[x] = d
        x = x * gamma % l
    winv = pow(w, -1, l)
    k = 0
    for i in range(a):
        h = pow(u * pow(winv, k, l) % l, p ** (a - 1 - i), l)
        d = digits.get(h)
        if d is None:
            raise DomainError(f"{u} is not in the subgroup generated by {w} mod {l}")
        k += d * p**i
    return k


@dataclass(frozen=True)
class PairingRow:
    row: GroupRingElement
    source: tuple[int, int, int]
    eta_id: str = "eta"
    twist: int = 1


def pairing_row(eta: CircularUnitWord, aux: AuxPrimeData, ctx: LevelContext, m: int = 1, eta_id: str = "eta") -> PairingRow:
    """Row with coefficient dlog(eval(sigma_t^-1 eta)^((l-1)/p^a)) * kappa(sigma_t)^(m-1) at sigma_t."""
    if aux.modulus != ctx.modulus or eta.modulus != ctx.modulus:
        raise StructureError("auxiliary prime, word and context must share the modulus")
    p, a, l = aux.p, aux.prec, aux.l
    q = p**a
    e = (l - 1) // q
    kvals = None
    if (m - 1) % ((p - 1) * p ** (a - 1)):
        kvals = ctx.kappa.at_precision(a).values if a <= ctx.kappa_precision else None
        if kvals is None:
            raise PrecisionError(
                f"kappa known mod {p}^{ctx.kappa_precision} only; twist at precision {a} needs a deeper level"
            )
    M = ctx.modulus
    coeffs = []
    for i, t in enumerate(ctx.group.labels):
        val = eval_with_table(eta, aux.zpow, l, pow(t, -1, M))
        c = dlog_mu_pa(aux.w, pow(val, e, l), l, p, a)
        if kvals is not None:
            c = c * pow(kvals[i], m - 1, q)
        coeffs.append(c)
    return PairingRow(GroupRingElement(ctx.group, p, a, coeffs), aux.source, eta_id, m)


def ideal_basis(generators: Iterable[GroupRingElement], group, p: int, a: int, basis: HowellBasis | None = None) -> HowellBasis:
    """Z/p^a-span of all Galois translates of the generators."""
    h = basis if basis is not None else HowellBasis(p, a, group.order)
    for x in generators:
        for j in range(group.order):
            h.add(x.translate(j).coeffs)
    return h


class DIdealApprox:
    """A sampled approximation of D_n: rows plus the Howell basis of the ideal they generate."""

    def __init__(self, ctx: LevelContext, prec: int, twist: int = 1):
        self.ctx = ctx
        self.prec = prec
        self.twist = twist
        self.rows: list[PairingRow] = []
        self.basis = HowellBasis(ctx.p, prec, ctx.group.order)
        self.stability = 0
        self.history: list[int] = []  # log_p of |R/D| after each row
        self.stabilized = False
        self.skipped: list[int] = []

    @property
    def full_log_order(self) -> int:
        return self.prec * self.ctx.group.order

    def quotient_log_order(self) -> int:
        return self.full_log_order - self.basis.log_order()

    def add_row(self, row: PairingRow) -> bool:
        """Append a row; return True if the quotient shrank."""
        if row.row.prec != self.prec or row.row.group is not self.ctx.group:
            raise StructureError("row does not match the ideal's ring")
        before = self.quotient_log_order()
        ideal_basis([row.row], self.ctx.group, self.ctx.p, self.prec, self.basis)
        self.rows.append(row)
        after = self.quotient_log_order()
        self.history.append(after)
        if after < before:
            self.stability = 0
            return True
        self.stability += 1
        return False

    def structure(self) -> ModuleStructure:
        return self.basis.quotient_structure()

    def primes(self) -> list[int]:
        return [r.source[0] for r in self.rows]

    def contains(self, x: GroupRingElement) -> bool:
        return self.basis.contains(x.coeffs)

    def canonical(self):
        return self.basis.canonical()


def assemble_d_ideal(
    ctx: LevelContext,
    eta: CircularUnitWord,
    prec: int,
    primes: Sequence[AuxPrimeData] | None = None,
    stop_rule: int = DEFAULT_STOP_RULE,
    prime_budget: int = 64,
    m: int = 1,
    seed: int = 0,
    cache: PrimeCache | None = None,
    eta_id: str = "eta",
    extend: DIdealApprox | None = None,
) -> tuple[DIdealApprox, ModuleStructure]:
    """Sample pairing rows until stop_rule consecutive primes leave R/D unchanged."""
    D = extend if extend is not None else DIdealApprox(ctx, prec, m)
    D.stabilized = False
    used = set(D.primes()) | set(D.skipped)
    if primes is None:
        source: Iterable[AuxPrimeData] = iter_aux_primes(ctx, prec, seed, exclude=used)
    else:
        source = [aux for aux in primes if aux.l not in used]
    tried = 0
    for aux in source:
        if tried >= prime_budget:
            break
        tried += 1
        row = None
        if cache is not None:
            row = cache.lookup(ctx, aux, prec, m, eta_id)
        if row is None:
            try:
                row = pairing_row(eta, aux, ctx, m, eta_id)
            except DegenerateEvaluation:
                log.debug("degenerate evaluation at l=%d, prime skipped", aux.l)
                D.skipped.append(aux.l)
                continue
            if cache is not None:
                cache.store(ctx, aux, row, m, eta_id)
        D.add_row(row)
        if D.stability >= stop_rule:
            D.stabilized = True
            break
    return D, D.structure()


def monogeneity_probe(D: DIdealApprox) -> dict:
    """Look for a single row whose Galois span is the whole sampled ideal."""
    target = D.canonical()
    ctx = D.ctx
    for k, r in enumerate(D.rows):
        h = ideal_basis([r.row], ctx.group, ctx.p, D.prec)
        if h.canonical() == target:
            return {"monogenic": True, "witness_index": k, "witness_prime": r.source[0], "stabilized": D.stabilized}
    return {
        "monogenic": False,
        "message": "no single-row generator at this precision",
        "stabilized": D.stabilized,
    }


def norm_compat_check(D_hi: DIdealApprox, D_lo: DIdealApprox, mapping: Sequence[int] | None = None, extra_rows: Sequence[GroupRingElement] = ()) -> dict:
    """Every row of D_{n+1}, pushed down to G_n, lies in D_n."""
    if D_hi.prec < D_lo.prec:
        raise PrecisionError(f"upper ideal at p^{D_hi.prec} cannot be compared with lower at p^{D_lo.prec}")
    if mapping is None:
        mapping = D_hi.ctx.quotient_map(D_lo.ctx)
    rows = [r.row for r in D_hi.rows] + list(extra_rows)
    verdicts = []
    for r in rows:
        x = project_level(r.reduce(D_lo.prec), D_lo.ctx.group, mapping, check=False)
        verdicts.append(D_lo.contains(x))
    return {"compatible": all(verdicts), "rows_checked": len(verdicts), "failures": verdicts.count(False)}


def twist_consistency_check(
    e_ctx: LevelContext,
    m: int,
    prec: int | None = None,
    primes: Sequence[AuxPrimeData] | None = None,
    count: int = 6,
    seed: int = 0,
    eta: CircularUnitWord | None = None,
) -> dict:
    """Compare e_0 D^(m) (direct twisted rows) with (tw_{m-1}(e_{m-1} D^(1)))^#.

    e_0 = nu/|Delta| is the Delta-invariant cut. Since kappa = omega on Delta,
    the Tate twist carries e_{m-1} to e_0, so the two sides must coincide.
    Both are ideals of Z/p^a[Gal(E_n/Q)] built from the same primes and are
    compared through their canonical Howell forms.
    """
    if e_ctx.kind != "E":
        raise DomainError("twist consistency needs an E-context")
    if m % 2 == 0:
        raise DomainError(f"twist consistency is stated for odd m, got {m}")
    p = e_ctx.p
    prec = e_ctx.kappa_precision if prec is None else prec
    if prec > e_ctx.kappa_precision:
        raise PrecisionError(
            f"precision {prec} exceeds the kappa precision {e_ctx.kappa_precision} at level {e_ctx.n}"
        )
    if eta is None:
        from .circular_units import eta_system

        eta = eta_system(e_ctx)
    if primes is None:
        primes = find_aux_primes(e_ctx, prec, count, seed)
    G = e_ctx.group
    kappa = e_ctx.kappa.at_precision(prec)
    delta = delta_subgroup(e_ctx)
    e_plus = idempotent(m - 1, G, kappa, prec, delta)
    e_zero = idempotent(0, G, kappa, prec, delta)
    rows1, rowsm, used = [], [], []
    for aux in primes:
        try:
            r1 = pairing_row(eta, aux, e_ctx, 1)
            rm = pairing_row(eta, aux, e_ctx, m)
        except DegenerateEvaluation:
            continue
        rows1.append(r1.row)
        rowsm.append(rm.row)
        used.append(aux.l)
    lhs = ideal_basis([e_zero * r for r in rowsm], G, p, prec)
    rhs = ideal_basis([iwasawa_twist(e_plus * r, m - 1, kappa).galois_inverse() for r in rows1], G, p, prec)
    equal = lhs.canonical() == rhs.canonical()
    return {
        "verdict": "pass" if equal else "fail",
        "m": m,
        "precision": prec,
        "level": e_ctx.n,
        "primes": used,
        "lhs_log_order": lhs.log_order(),
        "rhs_log_order": rhs.log_order(),
    }


# ---------------------------------------------------------------------------
# prime cache


@dataclass
class CacheRecord:
    l: int
    z: int
    w: int
    level: int
    precision: int
    row_hex: str
    context: str


def _hex_width(p: int, a: int) -> int:
    return max(1, len(format(p**a - 1, "x")))


def encode_row(coeffs: Sequence[int], p: int, a: int) -> str:
    width = _hex_width(p, a)
    return "".join(format(c, f"0{width}x") for c in coeffs)


def decode_row(text: str, p: int, a: int) -> list[int]:
    width = _hex_width(p, a)
    if len(text) % width:
        raise ValueError("row hex length is not a multiple of the coefficient width")
    return [int(text[i : i + width], 16) for i in range(0, len(text), width)]


def default_cache_path() -> str | None:
    return os.environ.get("IWF_CACHE")


class PrimeCache:
    """Plain-text cache of pairing rows.

    Records are ``l z w level precision hexrow``; a ``# ctx <key>`` line sets
    the context (field, p, kind, twist, word) for the records that follow.
    Appends happen under a file lock so concurrent writers do not interleave.
    """

    def __init__(self, path: str | os.PathLike):
        self.path = os.fspath(path)
        self._lock = FileLock(self.path + ".lock")
        self._records: dict[tuple, CacheRecord] = {}
        self._last_ctx: str | None = None
        self.hits = 0
        self.misses = 0
        self.malformed = 0
        self._load()

    @staticmethod
    def context_key(ctx: LevelContext, m: int, eta_id: str) -> str:
        return f"{ctx.key()};m={m};eta={eta_id}"

    def _load(self) -> None:
        self._records.clear()
        self.malformed = 0
        if not os.path.exists(self.path):
            return
        ctx = None
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                if line.startswith("#"):
                    parts = line[1:].split(None, 1)
                    if len(parts) == 2 and parts[0] == "ctx":
                        ctx = parts[1]
                    continue
                fields = line.split()
                try:
                    if ctx is None or len(fields) != 6:
                        raise ValueError
                    l, z, w, level, prec = (int(x) for x in fields[:5])
                    int(fields[5], 16)
                    if fields[5] != fields[5].lower():
                        raise ValueError
                except ValueError:
                    self.malformed += 1
                    continue
                rec = CacheRecord(l, z, w, level, prec, fields[5], ctx)
                self._records[(ctx, l, z, w, level, prec)] = rec
        self._last_ctx = ctx

    def lookup(self, ctx: LevelContext, aux: AuxPrimeData, prec: int, m: int, eta_id: str) -> PairingRow | None:
        key = (self.context_key(ctx, m, eta_id), aux.l, aux.z, aux.w, ctx.n, prec)
        rec = self._records.get(key)
        if rec is None:
            self.misses += 1
            return None
        coeffs = decode_row(rec.row_hex, ctx.p, prec)
        if len(coeffs) != ctx.group.order:
            self.misses += 1
            return None
        self.hits += 1
        return PairingRow(GroupRingElement(ctx.group, ctx.p, prec, coeffs), aux.source, eta_id, m)

    def store(self, ctx: LevelContext, aux: AuxPrimeData, row: PairingRow, m: int, eta_id: str) -> None:
        ckey = self.context_key(ctx, m, eta_id)
        prec = row.row.prec
        hexrow = encode_row(row.row.coeffs, ctx.p, prec)
        rec = CacheRecord(aux.l, aux.z, aux.w, ctx.n, prec, hexrow, ckey)
        with self._lock:
            # another writer may have appended a different context header meanwhile
            last = self._tail_context()
            with open(self.path, "a", encoding="utf-8") as fh:
                if last != ckey:
                    fh.write(f"# ctx {ckey}\n")
                fh.write(f"{rec.l} {rec.z} {rec.w} {rec.level} {rec.precision} {rec.row_hex}\n")
        self._records[(ckey, aux.l, aux.z, aux.w, ctx.n, prec)] = rec
        self._last_ctx = ckey

    def _tail_context(self) -> str | None:
        if not os.path.exists(self.path):
            return None
        last = None
        with open(self.path, encoding="utf-8") as fh:
            for line in fh:
                if line.startswith("# ctx "):
                    last = line[6:].strip()
        return last

    def inspect(self) -> dict:
        self._load()
        contexts: dict[str, int] = {}
        for rec in self._records.values():
            contexts[rec.context] = contexts.get(rec.context, 0) + 1
        return {
            "path": self.path,
            "records": len(self._records),
            "malformed": self.malformed,
            "contexts": dict(sorted(contexts.items())),
        }

    def gc(self) -> dict:
        """Rewrite the file without duplicates or malformed lines, grouped by context."""
        with self._lock:
            self._load()
            before_malformed = self.malformed
            by_ctx: dict[str, list[CacheRecord]] = {}
            for rec in self._records.values():
                by_ctx.setdefault(rec.context, []).append(rec)
            tmp = self.path + ".tmp"
            with open(tmp, "w", encoding="utf-8") as fh:
                for ckey in sorted(by_ctx):
                    fh.write(f"# ctx {ckey}\n")
                    for rec in sorted(by_ctx[ckey], key=lambda r: (r.level, r.precision, r.l, r.z, r.w)):
                        fh.write(f"{rec.l} {rec.z} {rec.w} {rec.level} {rec.precision} {rec.row_hex}\n")
            os.replace(tmp, self.path)
            self._load()
        return {"records": len(self._records), "dropped_malformed": before_malformed}
