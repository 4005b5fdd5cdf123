from __future__ import annotations

import json
import subprocess
import sys
from math import gcd, isqrt

import pytest

from iwf import cli
from iwf import workbench as wb
from iwf.abelian_fields import quadratic_field
from iwf.arith import is_fundamental_discriminant


# ---- independent class number oracle: cycles of reduced indefinite forms


def _rho(form, D):
    a, b, c = form
    r = isqrt(D)
    m = 2 * abs(c)
    # b' = -b mod 2|c| with sqrt(D) - 2|c| < b' < sqrt(D)
    b2 = -b % m
    while b2 <= r - m:
        b2 += m
    while b2 > r:
        b2 -= m
    return (c, b2, (b2 * b2 - D) // (4 * c))


def narrow_class_number(D: int) -> int:
    """Number of rho-cycles of reduced primitive forms (a, b, c) of discriminant D."""
    reduced = set()
    for b in range(1, isqrt(D) + 1):
        if (b - D) % 2 or b * b >= D:
            continue
        n = (b * b - D) // 4
        for a in range(1, -n + 1):
            if n % a:
                continue
            # reduced: sqrt(D) - b < 2|a| < sqrt(D) + b
            if D >= (2 * a + b) ** 2 or (2 * a - b > 0 and (2 * a - b) ** 2 >= D):
                continue
            for sa in (a, -a):
                c = n // sa
                if gcd(gcd(a, b), abs(c)) == 1:
                    reduced.add((sa, b, c))
    cycles = 0
    seen: set = set()
    for f in sorted(reduced):
        if f in seen:
            continue
        cycles += 1
        g = f
        while g not in seen:
            seen.add(g)
            g = _rho(g, D)
    return cycles


def minimal_unit_brute(D: int) -> tuple[int, int, int]:
    """Least u > 0 with t^2 - D u^2 = +-4, as (t, u, norm)."""
    u = 1
    while True:
        for s in (-4, 4):
            t2 = D * u * u + s
            t = isqrt(t2)
            if t2 >= 0 and t * t == t2:
                return t, u, s // 4
        u += 1


def test_class_number_examples():
    assert wb.class_number_real_quadratic(8) == 1
    assert wb.class_number_real_quadratic(5) == 1
    assert wb.class_number_real_quadratic(40) == 2


def test_fundamental_unit_against_brute_force():
    for D in (d for d in range(5, 150) if is_fundamental_discriminant(d)):
        assert wb.fundamental_unit(D) == minimal_unit_brute(D)


def test_class_number_against_form_cycles():
    for D in (d for d in range(5, 300) if is_fundamental_discriminant(d)):
        hplus = narrow_class_number(D)
        h = hplus if wb.fundamental_unit(D)[2] == -1 else hplus // 2
        assert wb.class_number_real_quadratic(D) == h, D


def test_class_number_rejects_non_fundamental():
    with pytest.raises(ValueError):
        wb.class_number_real_quadratic(18)


# ---- config


def test_config_parsing(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# campaign\np = 5\nd_values = 2..6, 10\nseed=4  # trailing\nprime-budget = 10\n", encoding="utf-8")
    cfg = wb.CampaignConfig.from_file(str(path))
    assert cfg.p == 5 and cfg.seed == 4 and cfg.prime_budget == 10
    assert cfg.d_values == [2, 3, 4, 5, 6, 10]


def test_config_rejects_unknown_key():
    with pytest.raises(ValueError, match="unknown config key"):
        wb.CampaignConfig.from_text("colour = blue\n")
    with pytest.raises(ValueError, match="key=value"):
        wb.CampaignConfig.from_text("p 3\n")


# ---- campaigns


def test_gras_examples():
    r = wb.run_gras_check(3, [8, 79])
    by_d = {it["d"]: it for it in r["items"]}
    assert by_d[8]["verdict"] == "match"
    assert by_d[8]["computed"]["quotient_torsion_order"] == 1 and by_d[8]["oracle"]["p_part"] == 1
    assert by_d[79]["verdict"] == "skipped" and "(316/3) = 1" in by_d[79]["reason"]
    assert wb.exit_code(r) == 0


def test_gras_nontrivial_three_part():
    # 257 is the only fundamental d < 300 with 3 | h and 3 not split
    it = wb.run_gras_check(3, [257])["items"][0]
    assert it["verdict"] == "match"
    assert it["oracle"]["p_part"] == 3 == it["computed"]["quotient_torsion_order"]


def test_gras_range_p5():
    r = wb.run_gras_check(5, range(2, 101))
    verdicts = {it["verdict"] for it in r["items"]}
    assert verdicts <= {"match", "skipped", "inconclusive"}
    for it in r["items"]:
        if it["verdict"] == "inconclusive":
            assert it["reason"]


def test_fitting_report_and_rejections():
    r = wb.run_fitting_report(quadratic_field(2), 5, 1, 3)
    item = r["items"][0]
    assert item["twist_consistency"]["verdict"] == "pass"
    assert "Greenberg" in item["unresolved_cofactor"]
    for m in (1, 2):
        with pytest.raises(ValueError):
            wb.run_fitting_report(quadratic_field(2), 5, 1, m)


def test_fitting_cut_depends_on_residue_of_m():
    # m = 5 and m = 1 + (p - 1) give the same e_{m-1} cut as e_0 for p = 5
    from iwf.abelian_fields import delta_subgroup, level_context
    from iwf.padic_core import idempotent

    e = level_context(quadratic_field(2), 5, 1, "E")
    kappa = e.kappa
    delta = delta_subgroup(e)
    assert idempotent(4, e.group, kappa, 2, delta) == idempotent(0, e.group, kappa, 2, delta)


def test_exit_codes():
    def rep(*vs):
        return {"items": [{"verdict": v} for v in vs]}

    assert wb.exit_code(rep("match", "skipped")) == 0
    assert wb.exit_code(rep("match", "inconclusive")) == 3
    assert wb.exit_code(rep("inconclusive", "mismatch")) == 1


# ---- CLI


def test_cli_no_arguments(capsys):
    assert cli.main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_cli_unknown_flag(capsys):
    assert cli.main(["analyze", "--bogus", "1"]) == 2
    assert "usage" in capsys.readouterr().err


def test_cli_analyze(tmp_path):
    out = tmp_path / "r.json"
    assert cli.main(["analyze", "--d", "8", "--p", "3", "--level", "0", "--json", str(out)]) == 0
    r = json.loads(out.read_text())
    assert r["schema"] == 1
    assert r["items"][0]["torsion_order"] == 1
    assert r["provenance"]["primes_used"]


def test_cli_lp_check(capsys):
    assert cli.main(["lp-check", "--p", "5", "--m", "3", "--level", "3", "--k", "2"]) == 0
    assert json.loads(capsys.readouterr().out)["items"][0]["verdict"] == "match"


def test_cli_stickelberg(capsys):
    assert cli.main(["stickelberg", "--f", "5", "--p", "5", "--level", "1"]) == 0
    r = json.loads(capsys.readouterr().out)
    assert r["coefficients"]


def test_cli_fitting_even_m_is_usage_error():
    assert cli.main(["fitting-report", "--d", "2", "--p", "5", "--level", "1", "--m", "2"]) == 2


def test_cli_config_and_override(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("p = 7\nd_values = 2..20\n", encoding="utf-8")
    out = tmp_path / "r.json"
    assert cli.main(["gras-check", "--config", str(cfg), "--p", "5", "--json", str(out)]) == 0
    assert json.loads(out.read_text())["parameters"]["p"] == 5


def test_cli_determinism(tmp_path):
    paths = [tmp_path / "a.json", tmp_path / "b.json"]
    for p in paths:
        assert cli.main(["gras-check", "--p", "3", "--d", "2..40", "--seed", "5", "--json", str(p)]) == 0
    a, b = (json.loads(p.read_text()) for p in paths)
    assert wb.report_json(wb.strip_timestamp(a)) == wb.report_json(wb.strip_timestamp(b))


def test_cli_cache_commands(tmp_path, monkeypatch):
    cache = tmp_path / "cache.txt"
    monkeypatch.setenv("IWF_CACHE", str(cache))
    assert cli.main(["analyze", "--d", "5", "--p", "3", "--level", "1", "--json", str(tmp_path / "r.json")]) in (0, 3)
    assert cache.exists()
    out = tmp_path / "inspect.json"
    assert cli.main(["cache", "inspect", "--json", str(out)]) == 0
    assert json.loads(out.read_text())["cache"]["records"] > 0
    assert cli.main(["cache", "gc", "--cache", str(cache), "--json", str(out)]) == 0


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "iwf"], capture_output=True, text=True)
    assert res.returncode == 2
    assert "usage" in res.stderr
