"""Formal words in cyclotomic numbers and their evaluation modulo split primes.

A word  sign * zeta_M^b * prod (1 - zeta_M^a)^(e_a)  is never simplified:
all consumers only look at it modulo auxiliary primes where multiplicative
relations among cyclotomic numbers are invisible anyway.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from math import gcd
from typing import Mapping

from .abelian_fields import LevelContext
from .padic_core import DomainError, StructureError


class DegenerateEvaluation(ArithmeticError):
    """A factor 1 - z^a vanished modulo the auxiliary prime."""


@dataclass(frozen=True)
class CircularUnitWord:
    modulus: int
    sign: int = 1
    root_exponent: int = 0
    support: tuple[tuple[int, int], ...] = ()

    def __post_init__(self) -> None:
        M = self.modulus
        if M < 1:
            raise DomainError(f"modulus must be positive, got {M}")
        if self.sign not in (1, -1):
            raise DomainError("sign must be +1 or -1")
        acc: Counter[int] = Counter()
        for a, e in self.support:
            a %= M
            if a == 0 or gcd(a, M) != 1:
                raise DomainError(f"support key {a} is not a unit mod {M}")
            acc[a] += int(e)
        object.__setattr__(self, "support", tuple(sorted((a, e) for a, e in acc.items() if e)))
        object.__setattr__(self, "root_exponent", self.root_exponent % M)

    @classmethod
    def from_dict(cls, modulus: int, exponents: Mapping[int, int], sign: int = 1, root_exponent: int = 0):
        return cls(modulus, sign, root_exponent, tuple(exponents.items()))

    def as_dict(self) -> dict[int, int]:
        return dict(self.support)

    def _check(self, other: CircularUnitWord) -> None:
        if other.modulus != self.modulus:
            raise StructureError(f"words mod {self.modulus} and {other.modulus} cannot be combined")

    def __mul__(self, other: CircularUnitWord) -> CircularUnitWord:
        self._check(other)
        return CircularUnitWord(
            self.modulus,
            self.sign * other.sign,
            self.root_exponent + other.root_exponent,
            self.support + other.support,
        )

    def __pow__(self, k: int) -> CircularUnitWord:
        return CircularUnitWord(
            self.modulus,
            self.sign**k if k >= 0 else self.sign ** (-k),
            self.root_exponent * k,
            tuple((a, e * k) for a, e in self.support),
        )

    def inverse(self) -> CircularUnitWord:
        return self**-1

    def is_empty(self) -> bool:
        return self.sign == 1 and self.root_exponent == 0 and not self.support


def eta_system(ctx: LevelContext) -> CircularUnitWord:
    """eta_n = prod over the kernel of (1 - zeta_M^t): the norm of 1 - zeta_M to the layer."""
    if ctx.kind == "real" and ctx.spec.degree < 2:
        raise DomainError("eta system needs [F:Q] >= 2; the rational field is degenerate here")
    return CircularUnitWord(ctx.modulus, support=tuple((t, 1) for t in sorted(ctx.kernel)))


def galois_act(t: int, w: CircularUnitWord) -> CircularUnitWord:
    """sigma_t acts by zeta_M -> zeta_M^t."""
    M = w.modulus
    if gcd(t, M) != 1:
        raise DomainError(f"{t} is not a unit mod {M}")
    return CircularUnitWord(M, w.sign, w.root_exponent * t, tuple((a * t, e) for a, e in w.support))


def _zpow_table(z: int, M: int, l: int) -> list[int]:
    tab = [1] * M
    for j in range(1, M):
        tab[j] = tab[j - 1] * z % l
    return tab


def eval_with_table(w: CircularUnitWord, zpow: list[int], l: int, t: int = 1) -> int:
    """Evaluate w with zeta_M -> z^t using a precomputed power table of z."""
    M = w.modulus
    val = (w.sign * zpow[w.root_exponent * t % M]) % l
    for a, e in w.support:
        x = (1 - zpow[a * t % M]) % l
        if x == 0:
            raise DegenerateEvaluation(f"1 - z^{a * t % M} = 0 mod {l}")
        val = val * pow(x, e, l) % l
    return val


def eval_mod_l(w: CircularUnitWord, aux, t: int = 1) -> int:
    """Substitute zeta_M -> z^t (z = aux.z of exact order M) and evaluate mod aux.l."""
    if aux.modulus != w.modulus:
        raise StructureError(f"auxiliary prime is for modulus {aux.modulus}, word is mod {w.modulus}")
    if gcd(t, w.modulus) != 1:
        raise DomainError(f"twist {t} is not a unit mod {w.modulus}")
    return eval_with_table(w, aux.zpow, aux.l, t)


def norm_coherence_check(
    ctx_hi: LevelContext,
    ctx_lo: LevelContext,
    eta_hi: CircularUnitWord,
    eta_lo: CircularUnitWord,
    witnesses,
) -> dict:
    """Compare N_{F_{n+1}/F_n}(eta_{n+1}) with eta_n modulo each witness prime."""
    fiber = ctx_hi.fiber(ctx_lo)
    labels = [ctx_hi.group.labels[i] for i in fiber]
    results = []
    for aux in witnesses:
        if aux.modulus != ctx_hi.modulus:
            results.append({"l": aux.l, "status": "invalid", "reason": "modulus mismatch"})
            continue
        try:
            lhs = 1
            for t in labels:
                lhs = lhs * eval_mod_l(galois_act(t, eta_hi), aux) % aux.l
            rhs = eval_mod_l(eta_lo, aux.restrict(ctx_lo.modulus))
        except DegenerateEvaluation as exc:
            results.append({"l": aux.l, "status": "invalid", "reason": str(exc)})
            continue
        results.append({"l": aux.l, "status": "ok" if lhs == rhs else "fail", "lhs": lhs, "rhs": rhs})
    valid = [r for r in results if r["status"] != "invalid"]
    if not valid:
        verdict = "inconclusive"
    elif all(r["status"] == "ok" for r in valid):
        verdict = "pass"
    else:
        verdict = "fail"
    return {"verdict": verdict, "witnesses": results, "level": ctx_lo.n}
