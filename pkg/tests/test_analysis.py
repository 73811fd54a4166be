from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qpqsim import analysis
from qpqsim.keys import SimParams


def test_p_e_splits_off_single_errors():
    for e in np.linspace(0, 0.5, 11):
        assert analysis.p_e(e) == pytest.approx(analysis.p_prime_e(e) + 7 * e * (1 - e) ** 6, abs=1e-15)


@given(st.floats(0, 0.5), st.floats(0, 0.5))
def test_rates_nondecreasing(a, b):
    lo, hi = sorted((a, b))
    assert analysis.p_e(lo) <= analysis.p_e(hi) + 1e-15
    assert analysis.p_prime_e(lo) <= analysis.p_prime_e(hi) + 1e-15


def test_p_e_closed_form():
    # odd number of n flips: (1 - (1-2e)^n) / 2
    for e in (0.01, 0.03, 0.2):
        assert analysis.p_e(e) == pytest.approx((1 - (1 - 2 * e) ** 7) / 2)


def test_p2_by_definition():
    p = 0.25
    direct = sum(comb(7, t) * p**t * (1 - p) ** (7 - t) for t in (4, 5, 6, 7))
    assert analysis.p2(p) == pytest.approx(direct)
    # unique erasure decoding needs an information set, so it is rarer
    assert analysis.p2_exact(p) < analysis.p2(p)


def test_exact_laws_match_formula_at_zero_noise():
    assert analysis.mok_error_exact(0.0) == 0.0
    assert analysis.fok_error_exact(0.0, 6) == 0.0


def test_exact_mok_law_against_scalar_decoder():
    from itertools import product
    from qpqsim.linear_code import HAMMING_7_4, decode_correct1
    e = 0.1
    total = 0.0
    for cw in HAMMING_7_4.codewords:
        for err in product([0, 1], repeat=7):
            err = np.array(err, np.uint8)
            fixed, _ = decode_correct1(HAMMING_7_4, cw ^ err)
            if fixed.sum() % 2 != cw.sum() % 2:
                w = int(err.sum())
                total += e**w * (1 - e) ** (7 - w)
    assert analysis.mok_error_exact(e) == pytest.approx(total / 16)
    assert analysis.mok_error_exact(e) > analysis.p_prime_e(e)


def test_table3_rows():
    params = SimParams(N=100_000, k=7, p=0.25, e=0.03, g=6)
    kn, gkn = analysis.table3(params)
    assert kn["n_bar_honest"] == pytest.approx(6.1035, abs=1e-3)
    assert kn["error_rate"] == pytest.approx(0.1758, abs=1e-4)
    assert kn["failure"] == pytest.approx(0.0022, abs=1e-4)
    assert gkn["error_rate_mok"] == pytest.approx(8.4e-4, rel=0.01)
    assert gkn["error_rate_fok"] == pytest.approx(5.0e-3, rel=0.01)
    assert gkn["failure"] == pytest.approx(0.0133, abs=5e-4)


def test_table1_small():
    rows = analysis.table1(runs=3, seed=1, sizes=[(64, 2)], ps=(0.3,))
    assert len(rows) == 1
    row = rows[0]
    assert row["N"] == 64 and row["runs"] == 3
    assert row["n_bar"] == pytest.approx(64 * 0.09)
    assert row["dqa_mean"] >= 1


def test_dqa_runs_parallel_matches_serial():
    params = SimParams(N=64, k=2, p=0.3, seed=4)
    assert analysis.dqa_runs(params, 3, jobs=2) == analysis.dqa_runs(params, 3)


def test_table2_prefix_property():
    params = SimParams(N=2000, k=7, p=0.4, seed=3)
    full = analysis.table2_runs(params, 4, 2)
    short = analysis.table2_runs(params, 2, 2)
    # fewer MOKs drawn changes the stream only after the prefix
    assert np.array_equal(full[:, :2], short)
    assert (np.diff(full, axis=1) <= 0).all()


def test_fig5_rows():
    rows = analysis.fig5_curves([0.0, 0.03])
    assert rows[0] == dict(e=0.0, p_e=0.0, p_dprime_e=0.0)
    assert rows[1]["p_e"] == pytest.approx(0.1758, abs=1e-4)
    assert rows[1]["p_dprime_e"] == pytest.approx(5.0e-3, rel=0.01)


def test_csv_and_text():
    rows = [dict(a=1, b=0.5), dict(a=22, b=0.125)]
    assert analysis.to_csv(rows) == "a,b\n1,0.5\n22,0.125\n"
    text = analysis.to_text(rows).splitlines()
    assert len(text) == 3 and len({len(t) for t in text}) == 1


def test_report_dict_flattens_params():
    d = analysis.report_dict(analysis.scenario_report(SimParams(N=100, k=3)))
    assert d["N"] == 100 and "failure_p0" in d
