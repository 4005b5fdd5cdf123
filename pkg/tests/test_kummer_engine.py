from __future__ import annotations

import random

import pytest
from sympy import isprime

from iwf.abelian_fields import level_context, quadratic_field
from iwf.arith import lcm, prime_divisors
from iwf.circular_units import CircularUnitWord, eta_system, galois_act
from iwf.kummer_engine import (
    AuxPrimeData,
    DIdealApprox,
    PairingRow,
    PrimeCache,
    assemble_d_ideal,
    decode_row,
    dlog_mu_pa,
    encode_row,
    find_aux_primes,
    monogeneity_probe,
    norm_compat_check,
    pairing_row,
    twist_consistency_check,
)
from iwf.padic_core import DomainError, GroupRingElement, PrecisionError

F2 = quadratic_field(2)
F5 = quadratic_field(5)


# ---- auxiliary primes


def test_smallest_aux_prime_for_q_sqrt2():
    ctx = level_context(F2, 3, 0)
    assert find_aux_primes(ctx, 1, 1)[0].l == 73


def test_aux_prime_exact_orders():
    ctx = level_context(F2, 3, 1)
    for aux in find_aux_primes(ctx, 2, 5):
        for q in prime_divisors(aux.modulus):
            assert pow(aux.z, aux.modulus // q, aux.l) != 1
        assert pow(aux.z, aux.modulus, aux.l) == 1
        assert pow(aux.w, 3, aux.l) != 1 and pow(aux.w, 9, aux.l) == 1


def test_aux_primes_match_independent_sieve():
    ctx = level_context(F5, 5, 0)
    got = [aux.l for aux in find_aux_primes(ctx, 1, 10)]
    L = lcm(ctx.modulus, 5)
    expect = [l for l in range(2, 10_000) if isprime(l) and l % L == 1][:10]
    assert got == expect


def test_seed_changes_prime_sequence_deterministically():
    ctx = level_context(F2, 3, 0)
    a = [x.l for x in find_aux_primes(ctx, 2, 4, seed=11)]
    b = [x.l for x in find_aux_primes(ctx, 2, 4, seed=11)]
    assert a == b
    assert a != [x.l for x in find_aux_primes(ctx, 2, 4, seed=0)]


def test_aux_prime_validation():
    with pytest.raises(DomainError):
        AuxPrimeData(71, 24, 3, 1, 1, 1)


# ---- discrete logs


def test_dlog_examples():
    assert dlog_mu_pa(4, 1, 19, 3, 2) == 0
    assert dlog_mu_pa(4, 4, 19, 3, 2) == 1
    assert dlog_mu_pa(4, 7, 19, 3, 2) == 3


def test_dlog_exhaustive():
    for l, p, a in [(19, 3, 2), (101, 5, 2), (163, 3, 4)]:
        g = next(g for g in range(2, l) if all(pow(g, (l - 1) // q, l) != 1 for q in prime_divisors(l - 1)))
        w = pow(g, (l - 1) // p**a, l)
        for k in range(p**a):
            assert dlog_mu_pa(w, pow(w, k, l), l, p, a) == k


# ---- pairing rows


def test_empty_word_gives_zero_row():
    ctx = level_context(F2, 3, 0)
    aux = find_aux_primes(ctx, 2, 1)[0]
    assert pairing_row(CircularUnitWord(24), aux, ctx).row.is_zero()


def test_pa_th_power_gives_zero_row():
    ctx = level_context(F2, 3, 0)
    eta = eta_system(ctx)
    for aux in find_aux_primes(ctx, 2, 3):
        assert pairing_row(eta**9, aux, ctx).row.is_zero()


def test_row_galois_equivariance():
    ctx = level_context(F2, 3, 1)
    eta = eta_system(ctx)
    rng = random.Random(3)
    for aux in find_aux_primes(ctx, 2, 4):
        base = pairing_row(eta, aux, ctx).row
        for _ in range(3):
            u = rng.choice(ctx.group.labels)
            moved = pairing_row(galois_act(u, eta), aux, ctx).row
            assert moved == base * GroupRingElement.basis(ctx.group, 3, 2, ctx.residue_index(u))


def test_row_precision_beyond_kappa_rejected():
    ctx = level_context(F2, 5, 0, "E")
    aux = find_aux_primes(ctx, 2, 1)[0]
    with pytest.raises(PrecisionError):
        pairing_row(eta_system(ctx), aux, ctx, m=3)


# ---- D-ideals


def test_q_sqrt2_trivial_torsion():
    ctx = level_context(F2, 3, 0)
    D, st = assemble_d_ideal(ctx, eta_system(ctx), 2)
    assert D.stabilized
    assert st.torsion_order == 1


def test_q_sqrt257_three_torsion():
    ctx = level_context(quadratic_field(257), 3, 0)
    D, st = assemble_d_ideal(ctx, eta_system(ctx), 3)
    assert D.stabilized
    assert st.torsion_exponents == (1,)


def test_zero_row_quotient_is_whole_ring():
    ctx = level_context(F2, 3, 0)
    D = DIdealApprox(ctx, 1)
    D.add_row(PairingRow(GroupRingElement.zero(ctx.group, 3, 1), (0, 0, 0)))
    assert D.structure().order == 9


def test_duplicate_row_does_not_change_structure():
    ctx = level_context(F2, 3, 1)
    D, st = assemble_d_ideal(ctx, eta_system(ctx), 2)
    before = D.canonical()
    assert D.add_row(D.rows[0]) is False
    assert D.canonical() == before and D.structure() == st


def test_monogeneity_probe():
    ctx = level_context(F2, 3, 0)
    D, _ = assemble_d_ideal(ctx, eta_system(ctx), 2)
    res = monogeneity_probe(D)
    assert res["monogenic"]
    single = DIdealApprox(ctx, 2)
    single.add_row(D.rows[2])
    assert monogeneity_probe(single)["witness_index"] == 0


def test_monogeneity_agrees_on_disjoint_prime_sets():
    ctx = level_context(F2, 3, 1)
    eta = eta_system(ctx)
    D1, _ = assemble_d_ideal(ctx, eta, 3)
    D2, _ = assemble_d_ideal(ctx, eta, 3, seed=97)
    assert not set(D1.primes()) & set(D2.primes())
    assert D1.canonical() == D2.canonical()
    assert monogeneity_probe(D1)["monogenic"] == monogeneity_probe(D2)["monogenic"]


def test_norm_compatibility_and_corruption():
    lo, hi = level_context(F2, 3, 0), level_context(F2, 3, 1)
    D0, _ = assemble_d_ideal(lo, eta_system(lo), 2)
    D1, _ = assemble_d_ideal(hi, eta_system(hi), 2)
    assert norm_compat_check(DIdealApprox(hi, 2), D0)["compatible"]
    assert norm_compat_check(D1, D0)["compatible"]
    # the identity of G_1 projects to the identity of G_0, which is not in D_0
    bad = GroupRingElement.one(hi.group, 3, 2)
    res = norm_compat_check(D1, D0, extra_rows=[bad])
    assert not res["compatible"] and res["failures"] == 1


# ---- twist consistency


def test_twist_trivial_cases():
    e = level_context(F2, 5, 1, "E")
    assert twist_consistency_check(e, 1, count=3)["verdict"] == "pass"
    # m = 1 + (p - 1) p^(a-1) with a = 1: kappa^(m-1) = 1 mod p
    assert twist_consistency_check(e, 5, prec=1, count=3)["verdict"] == "pass"


@pytest.mark.parametrize("m", [3, 7])
def test_twist_consistency_q_sqrt2_p5(m):
    e = level_context(F2, 5, 1, "E")
    res = twist_consistency_check(e, m, count=6)
    assert res["verdict"] == "pass"
    assert res["lhs_log_order"] == res["rhs_log_order"]


def test_twist_rejects_even_m():
    with pytest.raises(DomainError):
        twist_consistency_check(level_context(F2, 5, 1, "E"), 2)


# ---- cache


def test_row_hex_round_trip():
    coeffs = [0, 5, 124, 17]
    text = encode_row(coeffs, 5, 3)
    assert text == text.lower()
    assert decode_row(text, 5, 3) == coeffs


def test_cache_round_trip(tmp_path):
    path = tmp_path / "primes.txt"
    ctx = level_context(F2, 3, 1)
    eta = eta_system(ctx)
    cache = PrimeCache(path)
    D1, st1 = assemble_d_ideal(ctx, eta, 2, cache=cache)
    assert cache.hits == 0 and cache.misses == len(D1.rows)
    cache2 = PrimeCache(path)
    D2, st2 = assemble_d_ideal(ctx, eta, 2, cache=cache2)
    assert cache2.hits == len(D2.rows)
    assert st1 == st2 and D1.canonical() == D2.canonical()
    info = cache2.inspect()
    assert info["records"] == len(D1.rows) and info["malformed"] == 0


def test_cache_ignores_malformed_and_gc(tmp_path):
    path = tmp_path / "primes.txt"
    ctx = level_context(F2, 3, 0)
    cache = PrimeCache(path)
    assemble_d_ideal(ctx, eta_system(ctx), 2, cache=cache)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write("73 not a record\n")
        fh.write("73 1 1 0 2 ZZ\n")
    cache = PrimeCache(path)
    assert cache.inspect()["malformed"] == 2
    res = cache.gc()
    assert res["dropped_malformed"] == 2
    assert PrimeCache(path).inspect()["malformed"] == 0


def test_euler_factor_vanishing_saturates_f_trivial_characters():
    # 7^4 = 1 mod 25, so Frob_7 is trivial on the level-1 layer and the norm of eta_1 to Q_1 is 1:
    # all five characters trivial on F kill eta
    from iwf.abelian_fields import build_field

    assert pow(7, 4, 25) == 1
    ctx = level_context(build_field(7, [6]), 5, 1)
    D, st = assemble_d_ideal(ctx, eta_system(ctx), 3)
    assert D.stabilized and st.saturated == 5 and st.torsion_exponents == ()
