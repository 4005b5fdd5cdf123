"""Stickelberger elements, zeta-element projections and p-adic L-values.

Stick_n is the exact rational group-ring element  sum (a/A - 1/2) [a]  over
0 < a < A with gcd(a, fp) = 1, A = lcm(f, p) * p^n. Group elements are
labelled by residues. With the default "rec" labelling the element written
[a] is the one with kappa([a]) = a, so coefficients read off directly
by residue; the "arithmetic" labelling moves each coefficient to a^-1, which
gives the classical theta = sum (a/A - 1/2) sigma_a^-1.

Kubota-Leopoldt values come from generalized Bernoulli numbers with exact
rational arithmetic; p-adic reduction only happens at the very end.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from math import comb, gcd

from sympy import primitive_root

from .abelian_fields import LevelContext, level_context, rational_field
from .arith import check_odd_prime, kronecker, lcm, valuation
from .padic_core import (
    DomainError,
    FiniteAbelianGroup,
    GroupRingElement,
    PadicInt,
    PrecisionError,
    StructureError,
    teichmuller,
)


class NonIntegralError(ArithmeticError):
    pass


def frac_mod(x: Fraction, p: int, prec: int) -> int:
    """x in Z_(p) reduced mod p^prec."""
    q = p**prec
    if x.denominator % p == 0:
        raise NonIntegralError(f"{x} is not p-integral for p = {p}")
    return x.numerator * pow(x.denominator, -1, q) % q


def frac_valuation(x: Fraction, p: int) -> int | None:
    if x == 0:
        return None
    return valuation(x.numerator, p) - valuation(x.denominator, p)


# ---------------------------------------------------------------------------
# rational group rings


@lru_cache(maxsize=64)
def unit_group(A: int) -> FiniteAbelianGroup:
    return FiniteAbelianGroup.units_mod(A, name=f"(Z/{A})^*")


class RationalGroupRingElement:
    """Element of Q[(Z/A)^*] with exact Fraction coefficients."""

    __slots__ = ("group", "coeffs")

    def __init__(self, group: FiniteAbelianGroup, coeffs):
        if len(coeffs) != group.order:
            raise StructureError("coefficient vector does not match the group")
        self.group = group
        self.coeffs = tuple(Fraction(c) for c in coeffs)

    @classmethod
    def basis(cls, group, index: int, c=1) -> RationalGroupRingElement:
        v = [Fraction(0)] * group.order
        v[index] = Fraction(c)
        return cls(group, v)

    @classmethod
    def one(cls, group) -> RationalGroupRingElement:
        return cls.basis(group, group.identity)

    def _check(self, other) -> None:
        if other.group is not self.group:
            raise StructureError("elements over different groups")

    def __add__(self, other):
        self._check(other)
        return RationalGroupRingElement(self.group, [x + y for x, y in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        self._check(other)
        return RationalGroupRingElement(self.group, [x - y for x, y in zip(self.coeffs, other.coeffs)])

    def __neg__(self):
        return RationalGroupRingElement(self.group, [-x for x in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return RationalGroupRingElement(self.group, [other * x for x in self.coeffs])
        self._check(other)
        out = [Fraction(0)] * self.group.order
        table = self.group.table
        for i, x in enumerate(self.coeffs):
            if x:
                row = table[i]
                for j, y in enumerate(other.coeffs):
                    if y:
                        out[row[j]] += x * y
        return RationalGroupRingElement(self.group, out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self * other
        return NotImplemented

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalGroupRingElement):
            return NotImplemented
        return self.group is other.group and self.coeffs == other.coeffs

    def __repr__(self) -> str:
        terms = [f"({c})[{self.group.labels[i]}]" for i, c in enumerate(self.coeffs) if c]
        return " + ".join(terms) or "0"

    def coefficient(self, label: int) -> Fraction:
        return self.coeffs[self.group.index(label)]

    def augmentation(self) -> Fraction:
        return sum(self.coeffs, Fraction(0))

    def as_dict(self) -> dict[int, Fraction]:
        return {self.group.labels[i]: c for i, c in enumerate(self.coeffs) if c}

    def relabel_inverse(self) -> RationalGroupRingElement:
        """Move the coefficient at [a] to [a^-1]."""
        out = [Fraction(0)] * self.group.order
        for i, c in enumerate(self.coeffs):
            out[self.group.inverse[i]] = c
        return RationalGroupRingElement(self.group, out)

    def denominators_prime_to(self, p: int) -> bool:
        return all(c.denominator % p for c in self.coeffs)

    def tate_twist(self, m: int, p: int, prec: int) -> RationalGroupRingElement:
        """[a] -> a^m [a], with a taken mod p^prec (the modulus must be divisible by p^prec)."""
        q = p**prec
        if self.group.modulus is None or self.group.modulus % q:
            raise PrecisionError(f"kappa mod {p}^{prec} is not defined on (Z/{self.group.modulus})^*")
        return RationalGroupRingElement(
            self.group, [c * pow(a % q, m, q) for a, c in zip(self.group.labels, self.coeffs)]
        )

    def project(self, target: FiniteAbelianGroup) -> RationalGroupRingElement:
        """Push forward along (Z/A)^* -> target, a quotient of (Z/M)^* with M | A."""
        M = target.modulus
        if M is None or self.group.modulus % M:
            raise StructureError("target is not a quotient of this unit group")
        out = [Fraction(0)] * target.order
        for a, c in zip(self.group.labels, self.coeffs):
            out[target.index_of_residue(a % M)] += c
        return RationalGroupRingElement(target, out)

    def reduce(self, p: int, prec: int) -> GroupRingElement:
        coeffs = []
        for a, c in zip(self.group.labels, self.coeffs):
            if c.denominator % p == 0:
                raise NonIntegralError(f"non-integral zeta projection: coefficient {c} at [{a}]")
            coeffs.append(frac_mod(c, p, prec))
        return GroupRingElement(self.group, p, prec, coeffs)


def stickelberg_modulus(f: int, p: int, n: int) -> int:
    return lcm(f, p) * p**n


def stickelberg_level(f: int, p: int, n: int, labeling: str = "rec") -> RationalGroupRingElement:
    """Stick_n over (Z/A)^*, A = lcm(f, p) p^n, summing over a prime to fp."""
    check_odd_prime(p)
    if labeling not in ("rec", "arithmetic"):
        raise DomainError(f"unknown labeling {labeling!r}")
    A = stickelberg_modulus(f, p, n)
    if A < 3:
        raise DomainError("modulus must be >= 3")
    G = unit_group(A)
    coeffs = [Fraction(0)] * G.order
    for a in range(1, A):
        if gcd(a, f * p) == 1:
            coeffs[G.index_of_residue(a)] += Fraction(a, A) - Fraction(1, 2)
    x = RationalGroupRingElement(G, coeffs)
    return x if labeling == "rec" else x.relabel_inverse()


def conjugation(group: FiniteAbelianGroup) -> RationalGroupRingElement:
    return RationalGroupRingElement.basis(group, group.index_of_residue(-1))


def plus_projector(group) -> RationalGroupRingElement:
    one = RationalGroupRingElement.one(group)
    return (one + conjugation(group)) * Fraction(1, 2)


def minus_projector(group) -> RationalGroupRingElement:
    one = RationalGroupRingElement.one(group)
    return (one - conjugation(group)) * Fraction(1, 2)


def regularizer_element(group, c: int, labeling: str = "rec") -> RationalGroupRingElement:
    """1 - c[c] (rec labelling) or c - sigma_c (arithmetic labelling): both make Stick integral."""
    one = RationalGroupRingElement.one(group)
    idx = group.index_of_residue(c)
    if labeling == "rec":
        return one - RationalGroupRingElement.basis(group, idx, c)
    return one * c - RationalGroupRingElement.basis(group, idx)


def zeta_element(ctx: LevelContext, m: int, prec: int, regularizer: int | None = None) -> GroupRingElement:
    """Image in Z/p^prec[G_n] of Tw_{m-1}((pr_+ - pr_-) Stick_n), optionally times (1 - c[c]).

    (pr_+ - pr_-) acts as complex conjugation. The Tate twist does not invert
    group elements. Raises NonIntegralError if a projected coefficient has p
    in its denominator.
    """
    p, n = ctx.p, ctx.n
    if prec > n + 1:
        raise PrecisionError(f"kappa at level {n} is known mod {p}^{n + 1}; precision {prec} needs a deeper level")
    stick = stickelberg_level(ctx.spec.conductor, p, n)
    G = stick.group
    x = (plus_projector(G) - minus_projector(G)) * stick
    if regularizer is not None:
        if gcd(regularizer, G.modulus) != 1:
            raise DomainError(f"regularizer {regularizer} must be prime to {G.modulus}")
        x = regularizer_element(G, regularizer) * x
    x = x.tate_twist(m - 1, p, prec)
    return x.project(ctx.group).reduce(p, prec)


# ---------------------------------------------------------------------------
# Dirichlet characters and Bernoulli numbers


@lru_cache(maxsize=None)
def bernoulli_number(m: int) -> Fraction:
    """B_m with B_1 = -1/2, from sum_{k<=m} C(m+1, k) B_k = 0."""
    if m == 0:
        return Fraction(1)
    s = sum(comb(m + 1, k) * bernoulli_number(k) for k in range(m))
    return -s / (m + 1)


def bernoulli_polynomial(m: int, x: Fraction) -> Fraction:
    return sum((comb(m, k) * bernoulli_number(k) * x ** (m - k) for k in range(m + 1)), Fraction(0))


@dataclass(frozen=True)
class CyclotomicNumber:
    """sum_e c_e zeta_r^e, kept as a formal combination (no reduction mod the cyclotomic polynomial)."""

    order: int
    coeffs: tuple[tuple[int, Fraction], ...]

    @classmethod
    def from_dict(cls, order: int, d: dict) -> CyclotomicNumber:
        acc: dict[int, Fraction] = {}
        for e, c in d.items():
            e %= order
            acc[e] = acc.get(e, Fraction(0)) + Fraction(c)
        return cls(order, tuple(sorted((e, c) for e, c in acc.items() if c)))

    @classmethod
    def rational(cls, x) -> CyclotomicNumber:
        return cls.from_dict(1, {0: Fraction(x)})

    def as_rational(self) -> Fraction | None:
        if self.order <= 2:
            return sum((c * (-1) ** e for e, c in self.coeffs), Fraction(0))
        if all(e == 0 for e, _ in self.coeffs):
            return sum((c for _, c in self.coeffs), Fraction(0))
        return None

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return CyclotomicNumber.from_dict(self.order, {e: c * other for e, c in self.coeffs})
        r = lcm(self.order, other.order)
        s1, s2 = r // self.order, r // other.order
        acc: dict[int, Fraction] = {}
        for e1, c1 in self.coeffs:
            for e2, c2 in other.coeffs:
                e = (e1 * s1 + e2 * s2) % r
                acc[e] = acc.get(e, Fraction(0)) + c1 * c2
        return CyclotomicNumber.from_dict(r, acc)

    def __add__(self, other):
        r = lcm(self.order, other.order)
        acc: dict[int, Fraction] = {}
        for num in (self, other):
            s = r // num.order
            for e, c in num.coeffs:
                acc[e * s % r] = acc.get(e * s % r, Fraction(0)) + c
        return CyclotomicNumber.from_dict(r, acc)

    def __neg__(self):
        return self * -1

    def __sub__(self, other):
        return self + (-other)

    def __str__(self) -> str:
        q = self.as_rational()
        if q is not None:
            return str(q)
        return " + ".join(f"({c})z{self.order}^{e}" for e, c in self.coeffs)


class DirichletCharacter:
    """A Dirichlet character with values zeta_order^e, stored as a map unit residue -> e."""

    def __init__(self, modulus: int, order: int, exponents: dict[int, int], name: str = ""):
        self.modulus = modulus
        self.order = order
        self.exponents = {a % modulus: e % order for a, e in exponents.items()}
        self.name = name
        units = [a for a in range(modulus) if gcd(a, modulus) == 1] if modulus > 1 else [0]
        if sorted(self.exponents) != units:
            raise StructureError("character must be defined exactly on the units")
        for a in units:
            for b in units:
                if (self.exponents[a] + self.exponents[b] - self.exponents[a * b % modulus]) % order:
                    raise StructureError(f"character is not multiplicative at ({a}, {b})")

    def __repr__(self) -> str:
        return self.name or f"DirichletCharacter(mod {self.modulus}, order | {self.order})"

    def __call__(self, a: int) -> int | None:
        """Exponent e with chi(a) = zeta_order^e, or None when gcd(a, modulus) > 1."""
        return self.exponents.get(a % self.modulus) if gcd(a, self.modulus) == 1 else None

    @classmethod
    def trivial(cls, modulus: int = 1) -> DirichletCharacter:
        units = [a for a in range(modulus) if gcd(a, modulus) == 1] if modulus > 1 else [0]
        return cls(modulus, 1, {a: 0 for a in units}, "1")

    @classmethod
    def quadratic(cls, D: int) -> DirichletCharacter:
        """The Kronecker character a -> (D/a) of modulus |D|."""
        N = abs(D)
        return cls(N, 2, {a: 0 if kronecker(D, a) == 1 else 1 for a in range(1, N) if gcd(a, N) == 1}, f"chi_{D}")

    @classmethod
    def teichmuller_power(cls, p: int, i: int) -> DirichletCharacter:
        """omega^i mod p, via the index with respect to the least primitive root."""
        check_odd_prime(p)
        g = primitive_root(p)
        ind = {}
        x = 1
        for k in range(p - 1):
            ind[x] = k
            x = x * g % p
        return cls(p, p - 1, {a: i * ind[a] for a in range(1, p)}, f"omega^{i}")

    def _lift(self, order: int) -> dict[int, int]:
        s = order // self.order
        return {a: e * s for a, e in self.exponents.items()}

    def __mul__(self, other: DirichletCharacter) -> DirichletCharacter:
        N = lcm(self.modulus, other.modulus)
        r = lcm(self.order, other.order)
        s1, s2 = r // self.order, r // other.order
        units = [a for a in range(N) if gcd(a, N) == 1] if N > 1 else [0]
        ex = {a: self.exponents[a % self.modulus] * s1 + other.exponents[a % other.modulus] * s2 for a in units}
        name = f"{self}*{other}" if self.name and other.name else ""
        return DirichletCharacter(N, r, ex, name)

    def __pow__(self, k: int) -> DirichletCharacter:
        return DirichletCharacter(self.modulus, self.order, {a: e * k for a, e in self.exponents.items()})

    def is_trivial(self) -> bool:
        return all(e == 0 for e in self.exponents.values())

    @property
    def conductor(self) -> int:
        N = self.modulus
        for d in sorted(d for d in range(1, N + 1) if N % d == 0):
            if all(e == 0 for a, e in self.exponents.items() if (a - 1) % d == 0):
                return d
        return N

    def primitive(self) -> DirichletCharacter:
        d = self.conductor
        if d == self.modulus:
            return self
        units = [b for b in range(d) if gcd(b, d) == 1] if d > 1 else [0]
        ex = {}
        for b in units:
            a = next(a for a in range(b, self.modulus + d, d) if gcd(a, self.modulus) == 1)
            ex[b] = self.exponents[a % self.modulus]
        return DirichletCharacter(d, self.order, ex, self.name)

    def parity(self) -> int:
        """0 for even characters, 1 for odd."""
        if self.modulus <= 2:
            return 0
        e = self.exponents[self.modulus - 1]
        return 0 if e == 0 else 1

    def value(self, a: int) -> CyclotomicNumber:
        e = self(a)
        if e is None:
            return CyclotomicNumber.rational(0)
        return CyclotomicNumber.from_dict(self.order, {e: 1})


def generalized_bernoulli(chi: DirichletCharacter, m: int) -> CyclotomicNumber:
    """B_{m,chi} = F^(m-1) sum_{a=1}^{F} chi(a) B_m(a/F), F the modulus of chi."""
    if m < 1:
        raise DomainError("m must be >= 1")
    F = chi.modulus
    acc: dict[int, Fraction] = {}
    for a in range(1, F + 1):
        e = chi(a)
        if e is None:
            continue
        acc[e] = acc.get(e, Fraction(0)) + bernoulli_polynomial(m, Fraction(a, F))
    scale = Fraction(F) ** (m - 1)
    return CyclotomicNumber.from_dict(chi.order, {e: c * scale for e, c in acc.items()})


def padic_root_of_unity(r: int, p: int, prec: int) -> int:
    """Image of zeta_r under the embedding zeta_{p-1} -> omega(g), g the least primitive root."""
    if (p - 1) % r:
        raise DomainError(f"zeta_{r} is not in Z_{p}")
    g = primitive_root(p)
    return pow(teichmuller(g, p, prec).value, (p - 1) // r, p**prec)


def realize(x: CyclotomicNumber, p: int, prec: int) -> tuple[int | None, int | None]:
    """(value mod p^prec or None if non-integral, valuation or None if zero)."""
    q0 = x.as_rational()
    if q0 is not None:
        v = frac_valuation(q0, p)
        if v is not None and v < 0:
            return None, v
        return (frac_mod(q0, p, prec) if q0 else 0), v
    vmin = min(frac_valuation(c, p) for _, c in x.coeffs)
    shift = max(0, -vmin)
    K = prec + shift
    T = padic_root_of_unity(x.order, p, K)
    qK = p**K
    S = 0
    for e, c in x.coeffs:
        S += frac_mod(c * p**shift, p, K) * pow(T, e, qK)
    S %= qK
    if S == 0:
        return 0, None
    vS = valuation(S, p) - shift
    if vS < 0:
        return None, vS
    return (S // p**shift) % p**prec, vS


@dataclass(frozen=True)
class PadicLValue:
    p: int
    prec: int
    value: PadicInt | None
    valuation: int | None
    exact: str
    provenance: str

    @property
    def integral(self) -> bool:
        return self.value is not None

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "precision": self.prec,
            "value": None if self.value is None else self.value.value,
            "valuation": self.valuation,
            "exact": self.exact,
            "integral": self.integral,
            "provenance": self.provenance,
        }


def kubota_leopoldt(p: int, m: int, chi: DirichletCharacter, prec: int) -> PadicLValue:
    """L_p(1-m, chi) = -(1 - psi(p) p^(m-1)) B_{m,psi} / m with psi = chi omega^-m primitive."""
    check_odd_prime(p)
    if m < 1:
        raise DomainError("m must be >= 1")
    psi = (chi * DirichletCharacter.teichmuller_power(p, -m)).primitive()
    euler = CyclotomicNumber.rational(1) - psi.value(p) * p ** (m - 1)
    val = euler * generalized_bernoulli(psi, m) * Fraction(-1, m)
    r, v = realize(val, p, prec)
    prov = f"-(1 - psi(p) p^{m - 1}) B_{{{m},psi}}/{m}, psi = ({chi})*omega^-{m} of conductor {psi.conductor}"
    return PadicLValue(p, prec, None if r is None else PadicInt(p, prec, r), v, str(val), prov)


def choose_regularizer(p: int, m: int, modulus: int) -> int | None:
    """Least c >= 2 prime to the modulus with c^m != 1 mod p (so 1 - c^m is a unit)."""
    for c in range(2, 10 * p + modulus):
        if gcd(c, modulus) == 1 and gcd(c, p) == 1 and pow(c, m, p) != 1:
            return c
    return None


def lp_zeta_side(p: int, m: int, n: int) -> dict:
    """aug(zeta element regularized by c) / (1 - c^m) for F = Q, mod p^(n+1)."""
    prec = n + 1
    q = p**prec
    ctx = level_context(rational_field(), p, n)
    c = choose_regularizer(p, m, p)
    if c is None:
        return {"value": None, "regularizer": None, "reason": "(p-1) | m: 1 - c^m is never a unit"}
    z = zeta_element(ctx, m, prec, regularizer=c)
    value = z.augmentation().value * pow(1 - pow(c, m, q), -1, q) % q
    return {"value": value, "regularizer": c, "precision": prec}


def lp_consistency_check(p: int, m: int, n: int, k: int) -> dict:
    """Compare the finite-level zeta projection with L_p(1-m, omega^m) mod p^k."""
    check_odd_prime(p)
    if k < 0:
        raise DomainError("k must be >= 0")
    if k > n + 1:
        raise PrecisionError(f"precision {k} exceeds the level-{n} accuracy bound {n + 1}")
    report = {"p": p, "m": m, "level": n, "k": k}
    if k == 0:
        report.update(verdict="match", note="no content: comparison mod p^0")
        return report
    zeta = lp_zeta_side(p, m, n)
    kl = kubota_leopoldt(p, m, DirichletCharacter.teichmuller_power(p, m), n + 1)
    report["zeta_side"] = zeta
    report["kubota_leopoldt"] = kl.as_dict()
    if zeta["value"] is None or not kl.integral:
        report.update(verdict="inconclusive", note="non-integral value; compared sides are not both in Z_p")
        return report
    a, b = zeta["value"], kl.value.value
    accuracy = 0
    while accuracy < n + 1 and (a - b) % p ** (accuracy + 1) == 0:
        accuracy += 1
    report["zeta_mod_pk"] = a % p**k
    report["kl_mod_pk"] = b % p**k
    report["observed_accuracy"] = accuracy
    report["verdict"] = "match" if accuracy >= k else "mismatch"
    return report
