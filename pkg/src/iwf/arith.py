"""Small integer helpers shared across the package."""

from __future__ import annotations

from math import gcd

from sympy import factorint, isprime


def valuation(x: int, p: int) -> int:
    """p-adic valuation of a nonzero integer."""
    if x == 0:
        raise ValueError("valuation of zero")
    v = 0
    while x % p == 0:
        x //= p
        v += 1
    return v


def lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


def prime_divisors(n: int) -> list[int]:
    return sorted(factorint(n))


def euler_phi(n: int) -> int:
    result = n
    for q in prime_divisors(n):
        result -= result // q
    return result


def is_squarefree(n: int) -> bool:
    return n > 0 and all(e == 1 for e in factorint(n).values())


def kronecker(a: int, n: int) -> int:
    """Kronecker symbol (a/n) for n > 0."""
    if n <= 0:
        raise ValueError("kronecker symbol needs n > 0")
    result = 1
    while n % 2 == 0:
        n //= 2
        if a % 2 == 0:
            return 0
        if a % 8 in (3, 5):
            result = -result
    # Jacobi symbol for odd n
    a %= n
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def is_fundamental_discriminant(d: int) -> bool:
    if d in (0, 1):
        return False
    if d % 4 == 1:
        return is_squarefree(abs(d))
    if d % 4 == 0:
        m = d // 4
        return m % 4 in (2, 3) and is_squarefree(abs(m))
    return False


def field_discriminant(d: int) -> int:
    """Discriminant of Q(sqrt(d)) for d squarefree (or already fundamental)."""
    if is_fundamental_discriminant(d):
        return d
    if not is_squarefree(d) or d == 1:
        raise ValueError(f"{d} is neither squarefree nor a fundamental discriminant")
    return d if d % 4 == 1 else 4 * d


def multiplicative_order(x: int, n: int) -> int:
    if gcd(x, n) != 1:
        raise ValueError(f"{x} is not a unit mod {n}")
    order = euler_phi(n)
    for q, e in factorint(order).items():
        for _ in range(e):
            if pow(x, order // q, n) == 1:
                order //= q
            else:
                break
    return order


def has_exact_order(x: int, order: int, n: int) -> bool:
    """Certificate check: x^order = 1 and x^(order/q) != 1 for every prime q | order."""
    if pow(x, order, n) != 1:
        return False
    return all(pow(x, order // q, n) != 1 for q in prime_divisors(order)) if order > 1 else True


def check_odd_prime(p: int) -> None:
    if p < 3 or not isprime(p):
        raise ValueError(f"p must be an odd prime, got {p}")
