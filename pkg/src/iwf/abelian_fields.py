"""Real abelian number fields given by conductor and kernel, and their cyclotomic towers.

A field F is the fixed field of a subgroup H of (Z/f)^* acting on Q(zeta_f).
A level context packages everything needed at layer n of the cyclotomic
Z_p-extension: the working modulus M_n, the Galois group as a quotient of
(Z/M_n)^*, and the cyclotomic character table.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import gcd

from .arith import (
    check_odd_prime,
    euler_phi,
    field_discriminant,
    kronecker,
    lcm,
    prime_divisors,
    valuation,
)
from .padic_core import (
    CharacterTable,
    DomainError,
    FiniteAbelianGroup,
    StructureError,
    check_quotient_map,
    teichmuller,
)


class FieldError(ValueError):
    pass


def _generated_subgroup(gens, f: int) -> frozenset[int]:
    elems = {1 % f}
    frontier = [1 % f]
    while frontier:
        x = frontier.pop()
        for g in gens:
            y = x * g % f
            if y not in elems:
                elems.add(y)
                frontier.append(y)
    return frozenset(elems)


@dataclass(frozen=True)
class AbelianFieldSpec:
    conductor: int
    kernel: frozenset[int]
    generators: tuple[int, ...]
    name: str = ""

    @property
    def degree(self) -> int:
        return euler_phi(self.conductor) // len(self.kernel) if self.conductor > 1 else 1

    def contains_residue(self, t: int) -> bool:
        """Whether sigma_t (t prime to the conductor) fixes F."""
        return t % self.conductor in self.kernel

    def key(self) -> str:
        return f"f={self.conductor};H={','.join(map(str, sorted(self.kernel)))}"

    def __str__(self) -> str:
        return self.name or f"F(f={self.conductor}, [F:Q]={self.degree})"


def rational_field() -> AbelianFieldSpec:
    return AbelianFieldSpec(1, frozenset({0}), (), "Q")


def build_field(f: int, generators, name: str = "") -> AbelianFieldSpec:
    """Validate (f, H) and return the spec of the fixed field of H = <generators>."""
    if f == 1:
        return rational_field()
    if f < 3:
        raise FieldError(f"conductor must be 1 or >= 3, got {f}")
    if f % 4 == 2:
        raise FieldError(f"conductor not minimal: {f} = 2 mod 4")
    gens = tuple(g % f for g in generators)
    for g in gens:
        if gcd(g, f) != 1:
            raise FieldError(f"generator {g} is not a unit mod {f}")
    H = _generated_subgroup(gens, f)
    if (f - 1) not in H:
        raise FieldError(f"not totally real: -1 is not in the kernel mod {f}")
    for q in prime_divisors(f):
        g = f // q
        # kernel of (Z/f)^* -> (Z/g)^*
        ker = [t for t in range(1, f) if gcd(t, f) == 1 and (t - 1) % g == 0] if g > 1 else None
        if ker is None:
            ker = [t for t in range(1, f) if gcd(t, f) == 1]
        if all(t in H for t in ker):
            raise FieldError(f"conductor not minimal: field is defined modulo {g}")
    return AbelianFieldSpec(f, H, gens, name)


def quadratic_field(d: int) -> AbelianFieldSpec:
    """Q(sqrt(d)) for d > 1 squarefree or a positive fundamental discriminant."""
    if d <= 1:
        raise FieldError(f"real quadratic field needs d > 1, got {d}")
    D = field_discriminant(d)
    H = frozenset(t for t in range(1, D) if gcd(t, D) == 1 and kronecker(D, t) == 1)
    return AbelianFieldSpec(D, H, tuple(sorted(H)), f"Q(sqrt({D // 4 if D % 4 == 0 else D}))")


@dataclass(frozen=True)
class SplittingData:
    s: int
    frobenius_order: int | None
    decomposition_order: int
    ramified: bool
    degree: int


def count_p_places(spec: AbelianFieldSpec, p: int) -> SplittingData:
    """Number of primes of F above p, from the decomposition group in (Z/f)^*/H."""
    check_odd_prime(p)
    f = spec.conductor
    deg = spec.degree
    if f == 1:
        return SplittingData(1, 1, 1, False, 1)
    G = FiniteAbelianGroup.units_mod(f, spec.kernel)
    if f % p:
        frob = G.index_of_residue(p)
        k = G.element_order(frob)
        return SplittingData(deg // k, k, k, False, deg)
    d = valuation(f, p)
    N = f // p**d
    # inertia: classes of t = 1 mod N; Frobenius: t = p mod N, t = 1 mod p^d
    inertia = {G.index_of_residue(t) for t in range(1, f) if gcd(t, f) == 1 and (t - 1) % N == 0}
    gens = set(inertia)
    if N > 1:
        t = next(t for t in range(1, f) if (t - p) % N == 0 and (t - 1) % p**d == 0)
        frob = G.index_of_residue(t)
        gens.add(frob)
        frob_order = G.element_order(frob)
    else:
        frob_order = 1
    D = G.subgroup_generated(gens)
    return SplittingData(deg // len(D), frob_order, len(D), True, deg)


def admissibility_warning(spec: AbelianFieldSpec, p: int) -> str | None:
    split = count_p_places(spec, p)
    if split.s != 1:
        return f"admissible pair not guaranteed: s = {split.s} != 1, outputs are heuristic"
    return None


class LevelContext:
    """Layer n of the cyclotomic Z_p-tower over F (kind "real") or over E = F(zeta_p) (kind "E").

    G_n = (Z/M_n)^* / kernel with M_n = lcm(f, p^(n+1)). The kernel is
      real: t mod f in H and t^(p-1) = 1 mod p^(n+1)
      E:    t mod f in H and t = 1 mod p^(n+1)
    kappa is known mod p^(n+1). On E-contexts it is t mod p^(n+1); on real
    contexts the cyclotomic character does not factor through G_n, so kappa
    is its wild part <t> = t * omega(t)^-1.
    """

    def __init__(self, spec: AbelianFieldSpec, p: int, n: int, kind: str = "real"):
        check_odd_prime(p)
        if n < 0:
            raise DomainError(f"level must be >= 0, got {n}")
        if kind not in ("real", "E"):
            raise DomainError(f"unknown context kind {kind!r}")
        self.spec = spec
        self.p = p
        self.n = n
        self.kind = kind
        self.kappa_precision = n + 1
        pn1 = p ** (n + 1)
        self.modulus = lcm(spec.conductor, pn1)
        M = self.modulus
        if kind == "real":
            cond = lambda t: pow(t, p - 1, pn1) == 1  # noqa: E731
        else:
            cond = lambda t: t % pn1 == 1  # noqa: E731
        self.kernel = frozenset(
            t for t in range(1, M) if gcd(t, M) == 1 and spec.contains_residue(t) and cond(t)
        )
        self.group = FiniteAbelianGroup.units_mod(M, self.kernel, name=f"G_{n}")
        self.conj = self.group.index_of_residue(M - 1)

    def __repr__(self) -> str:
        return f"LevelContext({self.spec}, p={self.p}, n={self.n}, kind={self.kind}, |G|={self.group.order})"

    def key(self) -> str:
        return f"{self.spec.key()};p={self.p};kind={self.kind}"

    @property
    def degree(self) -> int:
        return self.group.order

    @cached_property
    def kappa(self) -> CharacterTable:
        p, q = self.p, self.p ** self.kappa_precision
        vals = []
        for t in self.group.labels:
            if self.kind == "E":
                vals.append(t % q)
            else:
                w = teichmuller(t, p, self.kappa_precision).value
                vals.append(t * pow(w, -1, q) % q)
        return CharacterTable(self.group, p, self.kappa_precision, tuple(vals))

    @cached_property
    def p_power_roots_exponent(self) -> int:
        """Largest k with mu_{p^k} inside the field."""
        if self.kind == "real":
            return 0
        k = 0
        while k < self.n + 1 and all((t - 1) % self.p ** (k + 1) == 0 for t in self.kernel):
            k += 1
        return k

    def residue_index(self, t: int) -> int:
        return self.group.index_of_residue(t)

    def quotient_map(self, lower: LevelContext) -> list[int]:
        """Restriction G(this) -> G(lower), as a list of lower indices."""
        if self.modulus % lower.modulus:
            raise StructureError(f"modulus {lower.modulus} does not divide {self.modulus}")
        if not self.kernel_maps_into(lower):
            raise StructureError("lower field is not contained in this field")
        mapping = [lower.residue_index(t % lower.modulus) for t in self.group.labels]
        check_quotient_map(self.group, lower.group, mapping)
        return mapping

    def kernel_maps_into(self, lower: LevelContext) -> bool:
        return all(t % lower.modulus in lower.kernel for t in self.kernel)

    def fiber(self, lower: LevelContext) -> list[int]:
        """Indices of Gal(this/lower): the kernel of the quotient map."""
        mapping = self.quotient_map(lower)
        return [i for i, j in enumerate(mapping) if j == lower.group.identity]


def level_context(spec: AbelianFieldSpec, p: int, n: int, kind: str = "real") -> LevelContext:
    return LevelContext(spec, p, n, kind)


def delta_subgroup(e_ctx: LevelContext) -> list[int]:
    """Indices of Gal(E_n/F_n) inside Gal(E_n/Q)."""
    if e_ctx.kind != "E":
        raise DomainError("delta_subgroup needs an E-context")
    f_ctx = level_context(e_ctx.spec, e_ctx.p, e_ctx.n, "real")
    return e_ctx.fiber(f_ctx)
