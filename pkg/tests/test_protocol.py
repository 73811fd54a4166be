import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qpqsim import analysis, protocol
from qpqsim.keys import SimParams, TriStateKey, generate_rok, make_rng
from qpqsim.linear_code import HAMMING_7_4


def three_sigma(rate, n):
    return 3 * np.sqrt(rate * (1 - rate) / n)


def test_encrypt_convention():
    fok = TriStateKey.fully_known("0011")
    c = protocol.encrypt_database([0, 0, 0, 0], fok, 1)
    assert c.tolist() == [0, 1, 1, 0]
    with pytest.raises(ValueError):
        protocol.encrypt_database([0, 0], fok, 0)


@pytest.mark.parametrize("dishonest,rule", [(False, "exact"), (True, "exact"), (True, "threshold")])
@pytest.mark.parametrize("parity", ["codeword", "message"])
def test_vectorised_mok_matches_scalar_rounds(dishonest, rule, parity):
    rng = make_rng(11)
    n = 400
    rok = generate_rok(7 * n, 0.6, 0.1, rng)
    msgs = rng.integers(0, 2, size=(n, 4), dtype=np.uint8)
    mok = protocol.build_mok(rok, HAMMING_7_4, dishonest, messages=msgs, rule=rule, parity=parity)
    bob, known, value = (x.reshape(7, n).T for x in (rok.bob, rok.known, rok.value))
    for i in range(n):
        rec = protocol.ecc_dilution_round(
            TriStateKey(bob[i], known[i], value[i]), HAMMING_7_4, dishonest,
            message=msgs[i], rule=rule, parity=parity,
        )
        assert rec.bob_bit == mok.bob[i]
        if rec.alice_outcome is None:
            assert mok.known[i] == 0
        else:
            assert mok.known[i] == 1 and mok.value[i] == rec.alice_outcome


def test_round_records_csv(tmp_path):
    rok = generate_rok(7 * 5, 1.0, 0.0, make_rng(2))
    recs = protocol.round_records(rok, HAMMING_7_4, False, make_rng(3))
    assert all(r.alice_outcome == r.bob_bit for r in recs)
    path = tmp_path / "rounds.csv"
    protocol.write_round_records(recs, path)
    lines = path.read_text().splitlines()
    assert lines[0].startswith("group,message,codeword")
    assert len(lines) == 6


@given(st.integers(1, 60), st.integers(0, 10_000))
def test_overlap_counts_bruteforce(n, seed):
    rng = make_rng(seed)
    a = rng.integers(0, 2, n)
    b = rng.integers(0, 2, n)
    expected = [sum(a[j] * b[(j + s) % n] for j in range(n)) for s in range(n)]
    assert protocol.overlap_counts(a, b).tolist() == expected


@settings(max_examples=25)
@given(st.integers(0, 10_000), st.integers(2, 5))
def test_greedy_shift_is_locally_optimal(seed, g):
    rng = make_rng(seed)
    moks = [generate_rok(50, 0.4, 0.0, rng) for _ in range(g)]
    shifts = protocol.greedy_shifts(moks)
    counts = protocol.surviving_counts(moks, shifts)
    assert shifts[0] == 0
    assert counts == sorted(counts, reverse=True)
    cur = moks[0].known.copy()
    for mok, s in zip(moks[1:], shifts[1:]):
        best = max(int((cur & np.roll(mok.known, -t)).sum()) for t in range(50))
        assert int((cur & np.roll(mok.known, -s)).sum()) == best
        cur = cur & np.roll(mok.known, -s)


def test_honest_mok_error_matches_enumeration():
    n, e = 100_000, 0.1
    rok = generate_rok(7 * n, 1.0, e, make_rng(5))
    mok = protocol.build_mok(rok, HAMMING_7_4, False, make_rng(6))
    assert mok.known.all()
    rate = np.mean(mok.value != mok.bob)
    exact = analysis.mok_error_exact(e)
    assert abs(rate - exact) < three_sigma(exact, n)


def test_honest_fok_error_matches_enumeration():
    n, e, g = 100_000, 0.1, 3
    params = SimParams(N=n, k=7, p=1.0, e=e, g=g)
    res = protocol.gkn_post_process(params, False, make_rng(8))
    rate = np.mean(res.fok.value != res.fok.bob)
    exact = analysis.fok_error_exact(e, g)
    assert abs(rate - exact) < three_sigma(exact, n)


@pytest.mark.parametrize("rule,law", [("exact", analysis.p2_exact), ("threshold", analysis.p2)])
def test_dishonest_known_fraction(rule, law):
    n, p = 100_000, 0.25
    rok = generate_rok(7 * n, p, 0.0, make_rng(9))
    mok = protocol.build_mok(rok, HAMMING_7_4, True, make_rng(10), rule=rule)
    expected = law(p)
    assert abs(mok.known.mean() - expected) < three_sigma(expected, n)


def test_exact_rule_bits_are_correct_without_noise():
    rok = generate_rok(7 * 5000, 0.5, 0.0, make_rng(12))
    mok = protocol.build_mok(rok, HAMMING_7_4, True, make_rng(13), rule="exact")
    k = mok.known.astype(bool)
    assert np.array_equal(mok.value[k], mok.bob[k])


def test_honest_alignment_keeps_target_known():
    params = SimParams(N=300, k=7, p=0.6, e=0.0, g=4)
    res = protocol.gkn_post_process(params, False, make_rng(14))
    if all(m.known.any() for m in res.moks):
        assert res.fok.known[res.target_index]
        assert res.fok.value[res.target_index] == res.fok.bob[res.target_index]


def test_honest_query_failure_rate_and_correctness():
    params = SimParams(N=200, k=7, p=0.5, e=0.0, g=2)
    rng = make_rng(15)
    db = protocol.random_database(params.N, rng)
    trials, fails = 1500, 0
    for t in range(trials):
        item = int(rng.integers(params.N))
        bit = protocol.run_honest_query(db, params, item, rng)
        if bit is None:
            fails += 1
        else:
            assert bit == db[item]
    expected = analysis.failure_p0_g(params.N, 7, 0.5, 2)
    assert expected == pytest.approx(0.3737, abs=1e-3)
    assert abs(fails / trials - expected) < three_sigma(expected, trials)


def test_honest_query_range():
    params = SimParams(N=20, k=7, p=0.9, g=1)
    with pytest.raises(IndexError):
        protocol.run_honest_query(np.zeros(20, np.uint8), params, 20, make_rng(0))


def test_decrypt_at_known_position():
    rng = make_rng(31)
    db = protocol.random_database(16, rng)
    fok = generate_rok(16, 0.5, 0.0, rng)
    for j in fok.known_positions():
        for i in range(16):
            s = (int(j) - i) % 16
            c = protocol.encrypt_database(db, fok, s)
            assert c[i] ^ fok.value[j] == db[i]


def test_honest_round_corrects_one_error():
    cw_msg = np.array([1, 0, 1, 1], np.uint8)
    bob = make_rng(32).integers(0, 2, 7).astype(np.uint8)
    alice = bob.copy()
    alice[3] ^= 1
    rec = protocol.ecc_dilution_round(TriStateKey(bob, np.ones(7), alice), message=cw_msg)
    assert rec.alice_outcome == rec.bob_bit and rec.decode_distance == 1
    known = np.ones(7, np.uint8)
    known[6] = 0
    rec = protocol.ecc_dilution_round(TriStateKey(bob, known, bob), message=cw_msg)
    assert rec.alice_outcome is None


@pytest.mark.parametrize("dishonest,law", [(False, analysis.p1), (True, analysis.p2_exact)])
def test_known_count_at_full_size(dishonest, law):
    n, p = 100_000, 0.25
    rok = generate_rok(7 * n, p, 0.0, make_rng(33))
    mok = protocol.build_mok(rok, HAMMING_7_4, dishonest, make_rng(34))
    mean = n * law(p)
    assert abs(mok.known.sum() - mean) < 3 * np.sqrt(mean) + 1


def test_retrieval_error_rate_with_noise():
    n, e, g = 20_000, 0.03, 6
    params = SimParams(N=n, k=7, p=1.0, e=e, g=g)
    res = protocol.gkn_post_process(params, False, make_rng(35))
    rate = np.mean(res.fok.value != res.fok.bob)
    exact = analysis.fok_error_exact(e, g)
    assert abs(rate - exact) < three_sigma(exact, n)
