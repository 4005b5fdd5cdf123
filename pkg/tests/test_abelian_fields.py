from __future__ import annotations

import pytest

from iwf.abelian_fields import (
    FieldError,
    admissibility_warning,
    build_field,
    count_p_places,
    delta_subgroup,
    level_context,
    quadratic_field,
)
from iwf.arith import kronecker
from iwf.padic_core import DomainError


def test_q_sqrt2_from_conductor_and_kernel():
    F = build_field(8, [7])
    assert F.kernel == frozenset({1, 7})
    assert F.degree == 2
    assert quadratic_field(2).kernel == F.kernel


def test_q_sqrt5():
    F = build_field(5, [4])
    assert F.kernel == frozenset({1, 4})
    assert quadratic_field(5).conductor == 5


def test_imaginary_field_rejected():
    with pytest.raises(FieldError, match="not totally real"):
        build_field(8, [3])


def test_non_minimal_conductor_rejected():
    with pytest.raises(FieldError, match="not minimal"):
        build_field(10, [9])
    with pytest.raises(FieldError, match="not minimal"):
        build_field(15, [2, 14])  # kernel contains everything = 1 mod 5: field lives mod 5


def test_level_zero_q_sqrt2_p3():
    ctx = level_context(quadratic_field(2), 3, 0)
    assert ctx.modulus == 24
    assert ctx.group.order == 2
    assert ctx.group.labels == (1, 5)
    assert ctx.kernel == frozenset({1, 7, 17, 23})


def test_level_one_degree():
    assert level_context(quadratic_field(2), 3, 1).group.order == 6
    assert level_context(quadratic_field(2), 3, 1, "E").group.order == 12


def test_kappa_on_e_context_is_t_mod_9():
    ctx = level_context(quadratic_field(2), 3, 1, "E")
    for i, t in enumerate(ctx.group.labels):
        assert ctx.kappa.values[i] == t % 9


def test_kappa_on_real_context_is_wild_part():
    ctx = level_context(quadratic_field(2), 3, 1)
    for v in ctx.kappa.values:
        assert v % 3 == 1


def test_splitting_counts():
    assert count_p_places(quadratic_field(2), 3).s == 1
    assert count_p_places(quadratic_field(5), 11).s == 2
    for d in (2, 3, 5, 7, 13, 17):
        for p in (3, 5, 7, 11, 13):
            D = quadratic_field(d).conductor
            if D % p and kronecker(D, p) == 1:
                assert count_p_places(quadratic_field(d), p).s == 2


def test_admissibility_warning():
    assert admissibility_warning(quadratic_field(2), 3) is None
    assert "s = 2" in admissibility_warning(quadratic_field(5), 11)


def test_quotient_maps_between_levels():
    F = quadratic_field(2)
    hi, lo = level_context(F, 3, 2), level_context(F, 3, 1)
    mapping = hi.quotient_map(lo)
    assert len(mapping) == 18
    assert len(hi.fiber(lo)) == 3


def test_delta_subgroup_order():
    e = level_context(quadratic_field(2), 5, 1, "E")
    assert len(delta_subgroup(e)) == 4
    with pytest.raises(DomainError):
        delta_subgroup(level_context(quadratic_field(2), 5, 1))


def test_p_power_roots_exponent():
    assert level_context(quadratic_field(2), 3, 1, "E").p_power_roots_exponent == 2
    assert level_context(quadratic_field(2), 3, 1).p_power_roots_exponent == 0
