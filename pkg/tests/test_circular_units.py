from __future__ import annotations

import random

import pytest

from iwf.abelian_fields import level_context, quadratic_field, rational_field
from iwf.circular_units import (
    CircularUnitWord,
    eta_system,
    eval_mod_l,
    galois_act,
    norm_coherence_check,
)
from iwf.kummer_engine import find_aux_primes
from iwf.padic_core import DomainError

F2 = quadratic_field(2)


def test_eta_support_level_zero():
    ctx = level_context(F2, 3, 0)
    eta = eta_system(ctx)
    assert eta.modulus == 24
    assert eta.as_dict() == {1: 1, 7: 1, 17: 1, 23: 1}


def test_rational_field_rejected():
    with pytest.raises(DomainError):
        eta_system(level_context(rational_field(), 3, 0))


def test_galois_orbit():
    eta = eta_system(level_context(F2, 3, 0))
    moved = galois_act(5, eta)
    assert set(moved.as_dict()) == {5 * t % 24 for t in (1, 7, 17, 23)}


def test_action_axioms():
    rng = random.Random(0)
    w = CircularUnitWord.from_dict(35, {1: 2, 3: -1, 12: 1})
    assert galois_act(1, w) == w
    units = [t for t in range(1, 35) if t % 5 and t % 7]
    for _ in range(20):
        t, u = rng.choice(units), rng.choice(units)
        assert galois_act(t, galois_act(u, w)) == galois_act(t * u, w)


def _direct(w, z, l):
    val = w.sign * pow(z, w.root_exponent, l)
    for a, e in w.support:
        val = val * pow((1 - pow(z, a, l)) % l, e, l)
    return val % l


def test_evaluation_oracles():
    ctx = level_context(F2, 3, 0)
    aux = find_aux_primes(ctx, 1, 1)[0]
    assert aux.l == 73
    w = CircularUnitWord.from_dict(24, {1: 1})
    assert eval_mod_l(w, aux) == (1 - aux.z) % 73
    assert eval_mod_l(CircularUnitWord(24), aux) == 1
    rng = random.Random(1)
    units = [t for t in range(1, 24) if t % 2 and t % 3]
    for _ in range(20):
        w1 = CircularUnitWord.from_dict(24, {rng.choice(units): rng.randrange(-3, 4) for _ in range(3)})
        w2 = CircularUnitWord.from_dict(24, {rng.choice(units): rng.randrange(-3, 4) for _ in range(3)}, sign=-1)
        assert eval_mod_l(w1 * w2, aux) == eval_mod_l(w1, aux) * eval_mod_l(w2, aux) % 73
        t = rng.choice(units)
        assert eval_mod_l(galois_act(t, w1), aux) == _direct(w1, pow(aux.z, t, 73), 73)
        assert eval_mod_l(w1, aux, t) == eval_mod_l(galois_act(t, w1), aux)


def test_norm_coherence_passes():
    hi, lo = level_context(F2, 3, 1), level_context(F2, 3, 0)
    witnesses = find_aux_primes(hi, 1, 4)
    res = norm_coherence_check(hi, lo, eta_system(hi), eta_system(lo), witnesses)
    assert res["verdict"] == "pass"
    assert len(res["witnesses"]) == 4


def test_norm_coherence_without_witnesses_inconclusive():
    hi, lo = level_context(F2, 3, 1), level_context(F2, 3, 0)
    assert norm_coherence_check(hi, lo, eta_system(hi), eta_system(lo), [])["verdict"] == "inconclusive"


def test_norm_coherence_detects_corruption():
    hi, lo = level_context(F2, 3, 1), level_context(F2, 3, 0)
    eta = eta_system(hi)
    a0 = eta.support[0][0]
    bad = eta * CircularUnitWord.from_dict(hi.modulus, {a0: 1})
    witnesses = find_aux_primes(hi, 1, 6)
    assert norm_coherence_check(hi, lo, bad, eta_system(lo), witnesses)["verdict"] == "fail"
