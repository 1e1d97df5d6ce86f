import math
import zlib

import numpy as np
import pytest

from patchgrowth import (
    CheckConfig,
    DomainError,
    ModelParameters,
    catalog,
    check_H2,
    get_entry,
    growth_rate,
    limit_report,
    oracle_check,
)

ENTRIES = catalog()


def test_names_unique_and_lookup():
    names = [e.name for e in ENTRIES]
    assert len(names) == len(set(names)) == 11
    with pytest.raises(KeyError):
        get_entry("nope")


@pytest.mark.parametrize("entry", ENTRIES, ids=lambda e: e.name)
def test_every_entry_satisfies_h2(entry):
    assert check_H2(entry.build()).verified


@pytest.mark.parametrize("name", [e.name for e in ENTRIES if e.name.startswith(("three", "one-way"))])
def test_three_patch_identities(name):
    model = get_entry(name).build(a=1.0, b=-1.0)
    assert np.allclose(model.growth_means(), -1 / 3)


def test_domain_predicate_named():
    with pytest.raises(DomainError) as exc:
        get_entry("two-patch-worst").build(a1=-3.0)
    assert exc.value.predicate == "a1 >= b1 and a2 >= b2"
    with pytest.raises(DomainError):
        get_entry("two-patch-worst").build(c=1.0)


def test_fig1_upper_bound_oracle_passes():
    entry = get_entry("three-patch-fig1")
    p = {"a": 1.0, "b": -0.8, "m": 1.0, "T": 1.0}
    res = growth_rate(entry.build(**p), ModelParameters(1.0, 1.0))
    rows = oracle_check(entry, p, res)
    row = next(r for r in rows if r.quantity == "lambda_mT")
    assert row.kind == "upper_bound" and row.passed


def test_middle_band_oracle():
    entry = get_entry("two-patch-worst")
    p = dict(entry.defaults, m=3.0)
    rows = oracle_check(entry, p, limit_report(entry.build(), 3.0))
    row = next(r for r in rows if r.quantity == "lambda_mInf")
    assert row.expected == pytest.approx((2.0 - 1.0 - 3.0) / 2)
    assert row.passed and row.abs_err < 1e-10


def test_fig3_and_b_to_a_oracles():
    e3 = get_entry("three-patch-fig3")
    assert e3.oracle("lambda_mInf")({"a": 1, "b": -1, "m": 1}) == pytest.approx(math.sqrt(2) - 1)
    ba = get_entry("one-way-b-to-a-2")
    for m in (0.1, 1.0, 10.0):
        assert ba.oracle("lambda_mInf")({"a": 1, "b": -1, "m": m}) == 1


def test_degenerate_equal_parameters_collapse():
    entry = get_entry("three-patch-fig3")
    model = entry.build(a=0.3, b=0.3)
    for m, T in [(0.5, 1.0), (3.0, 7.0)]:
        assert growth_rate(model, ModelParameters(m, T)).Lambda == pytest.approx(0.3, abs=1e-12)


def test_skipped_rows_are_explained():
    entry = get_entry("two-patch-worst")
    p = dict(entry.defaults, m=2.0)  # on the band edge a1 - b2
    rows = oracle_check(entry, p, {"lambda_mInf": 0.0})
    assert rows[0].passed is None and "outside oracle domain" in rows[0].note


@pytest.mark.slow
@pytest.mark.parametrize("entry", ENTRIES, ids=lambda e: e.name)
def test_oracles_at_random_bindings(entry):
    rng = np.random.default_rng(zlib.crc32(entry.name.encode()))
    cfg = CheckConfig(perturbations=4)
    failures = []
    for _ in range(50):
        p = entry.sample(rng)
        model = entry.build(**p)
        rep = limit_report(model, p["m"], config=cfg)
        rows = oracle_check(entry, p, [rep, growth_rate(model, ModelParameters(p["m"], 1.0))])
        failures += [(r.quantity, r.expected, r.computed, p) for r in rows if r.passed is False]
        for h in ("H3", "H4"):
            want = entry.expected_verdict(h, **p)
            if want is not None and rep.reports[h].verdict != want:
                failures.append((h, want, rep.reports[h].verdict, p))
    assert not failures, failures[:5]
