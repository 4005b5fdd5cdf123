"""Exact arithmetic in Z/p^a and in group rings Z/p^a[G] of finite abelian groups.

Everything here is immutable. Precision is explicit: a value carries its
(p, a) and operations between different precisions are refused rather than
silently truncated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Callable, Hashable, Iterable, Sequence

from .arith import check_odd_prime, valuation


class StructureError(ValueError):
    """Operands live on different groups, or a map is not what it claims to be."""


class PrecisionError(ValueError):
    """Mixed or insufficient p-adic precision."""


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


# ---------------------------------------------------------------------------
# Z/p^a


@dataclass(frozen=True)
class PadicInt:
    p: int
    prec: int
    value: int

    def __post_init__(self) -> None:
        if self.prec < 1:
            raise PrecisionError(f"precision must be >= 1, got {self.prec}")
        check_odd_prime(self.p)
        object.__setattr__(self, "value", self.value % self.p**self.prec)

    @property
    def modulus(self) -> int:
        return self.p**self.prec

    def _coerce(self, other: PadicInt | int) -> int:
        if isinstance(other, PadicInt):
            if other.p != self.p or other.prec != self.prec:
                raise PrecisionError(
                    f"mixed precision: Z/{self.p}^{self.prec} vs Z/{other.p}^{other.prec}"
                )
            return other.value
        if isinstance(other, int):
            return other
        return NotImplemented

    def _new(self, value: int) -> PadicInt:
        return PadicInt(self.p, self.prec, value)

    def __add__(self, other):
        v = self._coerce(other)
        return self._new(self.value + v)

    __radd__ = __add__

    def __sub__(self, other):
        return self._new(self.value - self._coerce(other))

    def __rsub__(self, other):
        return self._new(self._coerce(other) - self.value)

    def __mul__(self, other):
        return self._new(self.value * self._coerce(other))

    __rmul__ = __mul__

    def __neg__(self):
        return self._new(-self.value)

    def __pow__(self, k: int):
        if k < 0 and not self.is_unit():
            raise DomainError(f"{self.value} is not a unit mod {self.modulus}")
        return self._new(pow(self.value, k, self.modulus))

    def is_unit(self) -> bool:
        return self.value % self.p != 0

    def inverse(self) -> PadicInt:
        return self**-1

    def valuation(self) -> int:
        """Valuation, equal to prec for zero."""
        return self.prec if self.value == 0 else valuation(self.value, self.p)

    def reduce(self, prec: int) -> PadicInt:
        if prec > self.prec:
            raise PrecisionError(f"cannot raise precision from {self.prec} to {prec}")
        return PadicInt(self.p, prec, self.value)

    def __int__(self) -> int:
        return self.value


def teichmuller(u: int, p: int, a: int) -> PadicInt:
    """The (p-1)-st root of unity mod p^a congruent to u mod p."""
    check_odd_prime(p)
    if u % p == 0:
        raise DomainError(f"teichmuller lift undefined for {u}: divisible by {p}")
    q = p**a
    x = u % q
    while True:
        y = pow(x, p, q)
        if y == x:
            return PadicInt(p, a, x)
        x = y


# ---------------------------------------------------------------------------
# Finite abelian groups


class FiniteAbelianGroup:
    """A finite abelian group with a canonical (sorted) enumeration of labels.

    Elements are addressed by index into ``labels``. When the group is a
    quotient of (Z/M)^*, ``modulus`` is set and ``index_of_residue`` maps any
    unit residue to the index of its class.
    """

    def __init__(
        self,
        labels: Sequence[Hashable],
        table: Sequence[Sequence[int]],
        modulus: int | None = None,
        residue_index: dict[int, int] | None = None,
        name: str = "",
    ):
        self.labels = tuple(labels)
        self.table = tuple(tuple(row) for row in table)
        self.modulus = modulus
        self._residue_index = residue_index or {}
        self.name = name
        n = len(self.labels)
        self._index = {lab: i for i, lab in enumerate(self.labels)}
        identities = [i for i in range(n) if all(self.table[i][j] == j for j in range(n))]
        if len(identities) != 1:
            raise StructureError("group must have exactly one identity")
        self.identity = identities[0]
        inv = []
        for i in range(n):
            js = [j for j in range(n) if self.table[i][j] == self.identity]
            if len(js) != 1:
                raise StructureError(f"element {self.labels[i]} has no unique inverse")
            inv.append(js[0])
        self.inverse = tuple(inv)

    # construction helpers

    @classmethod
    def from_operation(
        cls, labels: Iterable[Hashable], op: Callable[[Hashable, Hashable], Hashable], name: str = ""
    ) -> FiniteAbelianGroup:
        labels = sorted(labels)
        index = {lab: i for i, lab in enumerate(labels)}
        table = []
        for x in labels:
            row = []
            for y in labels:
                z = op(x, y)
                if z not in index:
                    raise StructureError(f"not closed: {x}*{y} = {z}")
                row.append(index[z])
            table.append(row)
        return cls(labels, table, name=name)

    @classmethod
    def units_mod(cls, modulus: int, kernel: Iterable[int] | None = None, name: str = "") -> FiniteAbelianGroup:
        """(Z/modulus)^* / kernel, labelled by the least residue of each class."""
        units = [t for t in range(1, modulus + 1) if gcd(t, modulus) == 1]
        units = [t % modulus for t in units]
        units.sort()
        ker = sorted({k % modulus for k in kernel}) if kernel is not None else [1 % modulus]
        residue_index: dict[int, int] = {}
        labels: list[int] = []
        for t in units:
            if t in residue_index:
                continue
            idx = len(labels)
            labels.append(t)
            for k in ker:
                residue_index[t * k % modulus] = idx
        if len(residue_index) != len(units):
            raise StructureError("kernel is not a subgroup of the unit group")
        table = [[residue_index[x * y % modulus] for y in labels] for x in labels]
        return cls(labels, table, modulus=modulus, residue_index=residue_index, name=name)

    @classmethod
    def abstract(cls, invariants: Sequence[int]) -> FiniteAbelianGroup:
        """Z/n1 x Z/n2 x ... with tuple labels."""
        from itertools import product

        labels = list(product(*[range(n) for n in invariants]))
        return cls.from_operation(
            labels, lambda x, y: tuple((a + b) % n for a, b, n in zip(x, y, invariants))
        )

    # queries

    @property
    def order(self) -> int:
        return len(self.labels)

    def __len__(self) -> int:
        return len(self.labels)

    def __repr__(self) -> str:
        tag = f" mod {self.modulus}" if self.modulus else ""
        return f"FiniteAbelianGroup(order={self.order}{tag})"

    def index(self, label: Hashable) -> int:
        return self._index[label]

    def index_of_residue(self, t: int) -> int:
        if self.modulus is None:
            raise StructureError("group is not a quotient of a unit group")
        try:
            return self._residue_index[t % self.modulus]
        except KeyError:
            raise DomainError(f"{t} is not a unit mod {self.modulus}") from None

    def mul(self, i: int, j: int) -> int:
        return self.table[i][j]

    def power(self, i: int, k: int) -> int:
        if k < 0:
            i, k = self.inverse[i], -k
        r = self.identity
        for _ in range(k):
            r = self.table[r][i]
        return r

    def element_order(self, i: int) -> int:
        k, r = 1, i
        while r != self.identity:
            r = self.table[r][i]
            k += 1
        return k

    def subgroup_generated(self, gens: Iterable[int]) -> list[int]:
        elems = {self.identity}
        frontier = [self.identity]
        gens = list(gens)
        while frontier:
            x = frontier.pop()
            for g in gens:
                y = self.table[x][g]
                if y not in elems:
                    elems.add(y)
                    frontier.append(y)
        return sorted(elems)

    def is_homomorphism_to(self, target: FiniteAbelianGroup, mapping: Sequence[int]) -> bool:
        n = self.order
        return all(
            mapping[self.table[i][j]] == target.table[mapping[i]][mapping[j]]
            for i in range(n)
            for j in range(n)
        )


# ---------------------------------------------------------------------------
# Group rings


class GroupRingElement:
    """Element of Z/p^a[G], stored as a dense coefficient vector over G's enumeration."""

    __slots__ = ("group", "p", "prec", "coeffs")

    def __init__(self, group: FiniteAbelianGroup, p: int, prec: int, coeffs: Sequence[int]):
        if len(coeffs) != group.order:
            raise StructureError(f"expected {group.order} coefficients, got {len(coeffs)}")
        if prec < 1:
            raise PrecisionError(f"precision must be >= 1, got {prec}")
        q = p**prec
        self.group = group
        self.p = p
        self.prec = prec
        self.coeffs = tuple(int(c) % q for c in coeffs)

    @classmethod
    def zero(cls, group, p, prec):
        return cls(group, p, prec, [0] * group.order)

    @classmethod
    def one(cls, group, p, prec):
        return cls.basis(group, p, prec, group.identity)

    @classmethod
    def basis(cls, group, p, prec, index: int, coefficient: int = 1):
        c = [0] * group.order
        c[index] = coefficient
        return cls(group, p, prec, c)

    @property
    def modulus(self) -> int:
        return self.p**self.prec

    def _check(self, other: GroupRingElement) -> None:
        if other.group is not self.group:
            raise StructureError("group ring elements over different groups")
        if other.p != self.p or other.prec != self.prec:
            raise PrecisionError(f"mixed precision: p^{self.prec} vs p^{other.prec}")

    def _new(self, coeffs) -> GroupRingElement:
        return GroupRingElement(self.group, self.p, self.prec, coeffs)

    def __add__(self, other: GroupRingElement) -> GroupRingElement:
        self._check(other)
        return self._new([x + y for x, y in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other: GroupRingElement) -> GroupRingElement:
        self._check(other)
        return self._new([x - y for x, y in zip(self.coeffs, other.coeffs)])

    def __neg__(self) -> GroupRingElement:
        return self._new([-x for x in self.coeffs])

    def __mul__(self, other):
        if isinstance(other, int):
            return self._new([other * x for x in self.coeffs])
        if isinstance(other, PadicInt):
            if other.p != self.p or other.prec != self.prec:
                raise PrecisionError("scalar precision differs from group ring precision")
            return self._new([other.value * x for x in self.coeffs])
        self._check(other)
        table = self.group.table
        out = [0] * self.group.order
        y = other.coeffs
        for i, xi in enumerate(self.coeffs):
            if xi:
                row = table[i]
                for j, yj in enumerate(y):
                    if yj:
                        out[row[j]] += xi * yj
        return self._new(out)

    def __rmul__(self, other):
        if isinstance(other, (int, PadicInt)):
            return self.__mul__(other)
        return NotImplemented

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroupRingElement):
            return NotImplemented
        return (
            self.group is other.group
            and self.p == other.p
            and self.prec == other.prec
            and self.coeffs == other.coeffs
        )

    def __hash__(self) -> int:
        return hash((id(self.group), self.p, self.prec, self.coeffs))

    def __repr__(self) -> str:
        terms = [f"{c}*[{self.group.labels[i]}]" for i, c in enumerate(self.coeffs) if c]
        return f"<{' + '.join(terms) or '0'} mod {self.p}^{self.prec}>"

    def __getitem__(self, label) -> int:
        return self.coeffs[self.group.index(label)]

    def is_zero(self) -> bool:
        return not any(self.coeffs)

    def augmentation(self) -> PadicInt:
        return PadicInt(self.p, self.prec, sum(self.coeffs))

    def translate(self, index: int) -> GroupRingElement:
        """Left multiplication by the group element with the given index."""
        out = [0] * self.group.order
        row = self.group.table[index]
        for i, c in enumerate(self.coeffs):
            out[row[i]] = c
        return self._new(out)

    def reduce(self, prec: int) -> GroupRingElement:
        if prec > self.prec:
            raise PrecisionError(f"cannot raise precision from {self.prec} to {prec}")
        return GroupRingElement(self.group, self.p, prec, self.coeffs)

    def galois_inverse(self) -> GroupRingElement:
        """The involution sigma -> sigma^{-1} (written x^# in the literature)."""
        out = [0] * self.group.order
        for i, c in enumerate(self.coeffs):
            out[self.group.inverse[i]] = c
        return self._new(out)

    def as_dict(self) -> dict:
        return {self.group.labels[i]: c for i, c in enumerate(self.coeffs) if c}


@dataclass(frozen=True)
class CharacterTable:
    """Values kappa(sigma) mod p^prec of a multiplicative character on a group."""

    group: FiniteAbelianGroup
    p: int
    prec: int
    values: tuple[int, ...]

    def __post_init__(self) -> None:
        q = self.p**self.prec
        vals = tuple(v % q for v in self.values)
        object.__setattr__(self, "values", vals)
        g = self.group
        if len(vals) != g.order:
            raise StructureError("character table does not cover the group")
        if vals[g.identity] != 1 % q:
            raise StructureError("character is not 1 at the identity")
        for i in range(g.order):
            if vals[i] % self.p == 0:
                raise StructureError(f"character value at {g.labels[i]} is not a unit")
            for j in range(i, g.order):
                if vals[i] * vals[j] % q != vals[g.table[i][j]]:
                    raise StructureError(
                        f"character not multiplicative at ({g.labels[i]}, {g.labels[j]})"
                    )

    def __call__(self, index: int) -> PadicInt:
        return PadicInt(self.p, self.prec, self.values[index])

    def at_precision(self, prec: int) -> CharacterTable:
        """Reduce to a lower precision; higher precision must be re-derived from a deeper level."""
        if prec > self.prec:
            raise PrecisionError(
                f"character only known mod {self.p}^{self.prec}; "
                f"lift to a deeper level for precision {prec}"
            )
        if prec == self.prec:
            return self
        return CharacterTable(self.group, self.p, prec, self.values)


def _kappa_for(x: GroupRingElement, kappa: CharacterTable) -> tuple[int, ...]:
    if kappa.group is not x.group:
        raise StructureError("character table is defined on a different group")
    if kappa.p != x.p:
        raise StructureError("character table is for a different prime")
    return kappa.at_precision(x.prec).values


def iwasawa_twist(x: GroupRingElement, m: int, kappa: CharacterTable) -> GroupRingElement:
    """tw_m: sigma -> kappa(sigma)^m * sigma^{-1}, extended linearly."""
    vals = _kappa_for(x, kappa)
    q = x.modulus
    inv = x.group.inverse
    out = [0] * x.group.order
    for i, c in enumerate(x.coeffs):
        if c:
            out[inv[i]] = c * pow(vals[i], m, q)
    return GroupRingElement(x.group, x.p, x.prec, out)


def tate_twist(x: GroupRingElement, m: int, kappa: CharacterTable) -> GroupRingElement:
    """Tw_m: sigma -> kappa(sigma)^m * sigma (no inversion)."""
    vals = _kappa_for(x, kappa)
    q = x.modulus
    return GroupRingElement(
        x.group, x.p, x.prec, [c * pow(vals[i], m, q) for i, c in enumerate(x.coeffs)]
    )


def idempotent(
    i: int,
    group: FiniteAbelianGroup,
    kappa: CharacterTable,
    prec: int | None = None,
    subgroup: Sequence[int] | None = None,
) -> GroupRingElement:
    """e_i = |D|^{-1} sum_{d in D} omega^{-i}(d) d for the subgroup D (default: whole group).

    omega(d) is the Teichmuller lift of kappa(d); D must have order prime to p.
    """
    p = kappa.p
    prec = kappa.prec if prec is None else prec
    vals = kappa.at_precision(prec).values
    delta = list(range(group.order)) if subgroup is None else list(subgroup)
    if len(delta) % p == 0:
        raise DomainError(f"|Delta| = {len(delta)} is not invertible mod {p}")
    q = p**prec
    scale = pow(len(delta), -1, q)
    out = [0] * group.order
    for d in delta:
        w = teichmuller(vals[d], p, prec).value
        out[d] = scale * pow(w, -i, q)
    return GroupRingElement(group, p, prec, out)


def norm_element(group: FiniteAbelianGroup, subgroup: Sequence[int], p: int, prec: int) -> GroupRingElement:
    out = [0] * group.order
    for d in subgroup:
        out[d] = 1
    return GroupRingElement(group, p, prec, out)


def check_quotient_map(source: FiniteAbelianGroup, target: FiniteAbelianGroup, mapping: Sequence[int]) -> None:
    if len(mapping) != source.order:
        raise StructureError("quotient map must be defined on every source element")
    if set(mapping) != set(range(target.order)):
        raise StructureError("quotient map is not surjective")
    if not source.is_homomorphism_to(target, mapping):
        raise StructureError("quotient map is not a homomorphism")


def project_level(
    x: GroupRingElement, target: FiniteAbelianGroup, mapping: Sequence[int], check: bool = True
) -> GroupRingElement:
    """Push coefficients forward along a surjective homomorphism (fiber sums)."""
    if check:
        check_quotient_map(x.group, target, mapping)
    out = [0] * target.order
    for i, c in enumerate(x.coeffs):
        out[mapping[i]] += c
    return GroupRingElement(target, x.p, x.prec, out)


# ---------------------------------------------------------------------------
# Linear algebra over Z/p^a


@dataclass(frozen=True)
class ModuleStructure:
    """Finite Z/p^a-module  (+) Z/p^{e_i}, exponents sorted descending, zeros dropped."""

    p: int
    prec: int
    exponents: tuple[int, ...]
    rank: int = 0  # number of generators of the ambient free module

    @property
    def order(self) -> int:
        return self.p ** sum(self.exponents)

    @property
    def saturated(self) -> int:
        """How many summands reach the working precision (free in the limit, or too coarse to tell)."""
        return sum(1 for e in self.exponents if e >= self.prec)

    @property
    def torsion_exponents(self) -> tuple[int, ...]:
        return tuple(e for e in self.exponents if e < self.prec)

    @property
    def torsion_order(self) -> int:
        return self.p ** sum(self.torsion_exponents)

    def is_trivial(self) -> bool:
        return not self.exponents

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "precision": self.prec,
            "exponents": list(self.exponents),
            "order_log_p": sum(self.exponents),
            "saturated": self.saturated,
            "torsion_exponents": list(self.torsion_exponents),
        }


@dataclass(frozen=True)
class SmithResult:
    structure: ModuleStructure
    diagonal: tuple[tuple[int, ...], ...]
    U: tuple[tuple[int, ...], ...]
    V: tuple[tuple[int, ...], ...]
    exponents_by_row: tuple[int, ...] = field(default=())


def _val(x: int, p: int, a: int) -> int:
    return a if x == 0 else valuation(x, p)


def smith_normal_form(matrix: Sequence[Sequence[int]], p: int, a: int, nrows: int | None = None) -> SmithResult:
    """Smith form over Z/p^a by minimal-valuation pivoting.

    The cokernel is (Z/p^a)^rows / (column span). Returns U, V with U*M*V = D.
    ``nrows`` is only needed for matrices with no columns.
    """
    q = p**a
    A = [[int(x) % q for x in row] for row in matrix]
    r = len(A) if A else (nrows or 0)
    c = len(A[0]) if A else 0
    U = [[int(i == j) for j in range(r)] for i in range(r)]
    V = [[int(i == j) for j in range(c)] for i in range(c)]
    exps = []
    for t in range(min(r, c)):
        best = None
        for i in range(t, r):
            row = A[i]
            for j in range(t, c):
                if row[j]:
                    v = valuation(row[j], p)
                    if best is None or v < best[0]:
                        best = (v, i, j)
                        if v == 0:
                            break
            if best is not None and best[0] == 0:
                break
        if best is None:
            break
        v, i, j = best
        if i != t:
            A[t], A[i] = A[i], A[t]
            U[t], U[i] = U[i], U[t]
        if j != t:
            for row in A:
                row[t], row[j] = row[j], row[t]
            for row in V:
                row[t], row[j] = row[j], row[t]
        pv = p**v
        unit = A[t][t] // pv
        uinv = pow(unit, -1, q)
        A[t] = [x * uinv % q for x in A[t]]
        U[t] = [x * uinv % q for x in U[t]]
        piv = A[t]
        for i2 in range(t + 1, r):
            f = A[i2][t]
            if f:
                k = f // pv
                A[i2] = [(x - k * y) % q for x, y in zip(A[i2], piv)]
                U[i2] = [(x - k * y) % q for x, y in zip(U[i2], U[t])]
        for j2 in range(t + 1, c):
            f = A[t][j2]
            if f:
                k = f // pv
                for row in A:
                    row[j2] = (row[j2] - k * row[t]) % q
                for row in V:
                    row[j2] = (row[j2] - k * row[t]) % q
        exps.append(v)
    by_row = exps + [a] * (r - len(exps))
    structure = ModuleStructure(p, a, tuple(sorted((e for e in by_row if e), reverse=True)), r)
    return SmithResult(
        structure,
        tuple(tuple(row) for row in A),
        tuple(tuple(row) for row in U),
        tuple(tuple(row) for row in V),
        tuple(by_row),
    )


def mat_mul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]], q: int) -> list[list[int]]:
    if not A:
        return []
    inner = len(B)
    cols = len(B[0]) if B else 0
    return [[sum(A[i][k] * B[k][j] for k in range(inner)) % q for j in range(cols)] for i in range(len(A))]


def det_mod_prime(M: Sequence[Sequence[int]], p: int) -> int:
    n = len(M)
    A = [[x % p for x in row] for row in M]
    det = 1
    for t in range(n):
        piv = next((i for i in range(t, n) if A[i][t]), None)
        if piv is None:
            return 0
        if piv != t:
            A[t], A[piv] = A[piv], A[t]
            det = -det
        det = det * A[t][t] % p
        inv = pow(A[t][t], -1, p)
        for i in range(t + 1, n):
            f = A[i][t] * inv % p
            if f:
                A[i] = [(x - f * y) % p for x, y in zip(A[i], A[t])]
    return det % p


def verify_smith(matrix: Sequence[Sequence[int]], result: SmithResult, p: int, a: int) -> bool:
    """U*M*V equals the returned diagonal, and U, V are invertible mod p."""
    q = p**a
    M = [[x % q for x in row] for row in matrix]
    if not M:
        return True
    prod = mat_mul(mat_mul(result.U, M, q), result.V, q)
    if [list(r) for r in result.diagonal] != prod:
        return False
    for i, row in enumerate(prod):
        for j, x in enumerate(row):
            if i != j and x:
                return False
    return det_mod_prime(result.U, p) != 0 and (not result.V or det_mod_prime(result.V, p) != 0)


class HowellBasis:
    """Incrementally maintained Howell form of a submodule of (Z/p^a)^N.

    Rows are kept with unit-normalised pivots p^v, and the annihilator
    multiple p^(a-v)*row is always reinserted, so reduction decides
    membership and the canonical form decides equality.
    """

    def __init__(self, p: int, a: int, ncols: int):
        self.p = p
        self.a = a
        self.q = p**a
        self.ncols = ncols
        self.pivots: dict[int, tuple[int, list[int]]] = {}  # col -> (valuation, row)

    def copy(self) -> HowellBasis:
        h = HowellBasis(self.p, self.a, self.ncols)
        h.pivots = {j: (v, list(r)) for j, (v, r) in self.pivots.items()}
        return h

    def _reduce(self, x: list[int]) -> tuple[list[int], int | None]:
        """Reduce x against the pivots; return (remainder, first column it could not clear)."""
        q, p = self.q, self.p
        for j in range(self.ncols):
            if x[j] == 0:
                continue
            piv = self.pivots.get(j)
            vx = valuation(x[j], p)
            if piv is not None and vx >= piv[0]:
                k = x[j] // p ** piv[0]
                row = piv[1]
                x = [(xi - k * ri) % q for xi, ri in zip(x, row)]
                continue
            return x, j
        return x, None

    def add(self, vector: Sequence[int]) -> bool:
        """Insert a vector; return True if the span grew."""
        q, p = self.q, self.p
        grew = False
        stack = [[int(c) % q for c in vector]]
        while stack:
            x, j = self._reduce(stack.pop())
            if j is None:
                continue
            grew = True
            vx = valuation(x[j], p)
            unit = x[j] // p**vx
            uinv = pow(unit, -1, q)
            x = [xi * uinv % q for xi in x]
            old = self.pivots.get(j)
            self.pivots[j] = (vx, x)
            if old is not None:
                stack.append(old[1])
            if vx > 0:
                mult = p ** (self.a - vx)
                stack.append([xi * mult % q for xi in x])
        return grew

    def contains(self, vector: Sequence[int]) -> bool:
        x, j = self._reduce([int(c) % self.q for c in vector])
        return j is None

    def log_order(self) -> int:
        """log_p of the number of elements in the span."""
        return sum(self.a - v for v, _ in self.pivots.values())

    def canonical(self) -> tuple[tuple[int, ...], ...]:
        """Unique reduced Howell form, rows ordered by pivot column."""
        q, p = self.q, self.p
        cols = sorted(self.pivots)
        rows = {j: list(self.pivots[j][1]) for j in cols}
        for j in reversed(cols):
            row = rows[j]
            for j2 in cols:
                if j2 <= j:
                    continue
                v2, _ = self.pivots[j2]
                m = p**v2
                k = row[j2] // m
                if k:
                    other = rows[j2]
                    row = [(x - k * y) % q for x, y in zip(row, other)]
            rows[j] = row
        # rows above were reduced against already-reduced rows below, so one pass suffices
        return tuple(tuple(rows[j]) for j in cols)

    def rows(self) -> list[list[int]]:
        return [list(self.pivots[j][1]) for j in sorted(self.pivots)]

    def quotient_structure(self) -> ModuleStructure:
        """Structure of (Z/p^a)^N / span."""
        rows = self.rows()
        if not rows:
            return ModuleStructure(self.p, self.a, (self.a,) * self.ncols, self.ncols)
        cols = [list(col) for col in zip(*rows)]  # generators as columns
        return smith_normal_form(cols, self.p, self.a).structure

    def __eq__(self, other) -> bool:
        if not isinstance(other, HowellBasis):
            return NotImplemented
        return (self.p, self.a, self.ncols) == (other.p, other.a, other.ncols) and self.canonical() == other.canonical()
