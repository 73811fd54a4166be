"""Closed-form probabilities and the table / curve generators."""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from math import comb
from typing import Iterable, Sequence

import numpy as np

from .attack_nn import run_aks_attack
from .keys import P_HONEST, SimParams, make_rng
from .linear_code import HAMMING_7_4, CodeSpec, int_to_bits
from .protocol import DishonestRule, greedy_shifts, make_moks, surviving_counts

TABLE1_SIZES = ((225, 3), (1024, 4), (10_000, 6))
# the published n_bar values use the USD probability rounded to 0.29
TABLE1_PS = (P_HONEST, 0.29)


def _binom_sum(n: int, x: float, terms: Iterable[int]) -> float:
    return float(sum(comb(n, t) * x**t * (1 - x) ** (n - t) for t in terms))


def expected_known(n: int, k: int, p: float) -> float:
    return n * p**k


def failure_p0(n: int, k: int, p: float) -> float:
    return (1 - p**k) ** n


def failure_p0_g(n: int, k: int, p: float, g: int) -> float:
    return 1 - (1 - failure_p0(n, k, p)) ** g


def p_e(e: float, n: int = 7) -> float:
    """Key-bit error rate without correction: an odd number of the n bits are wrong."""
    return _binom_sum(n, e, range(1, n + 1, 2))


def p_prime_e(e: float, n: int = 7) -> float:
    """Error rate counting only 3, 5, 7, ... errors as uncorrected."""
    return _binom_sum(n, e, range(3, n + 1, 2))


def p_dprime_e(e: float, g: int, n: int = 7) -> float:
    """Odd number of the g combined MOK bits wrong, each with rate p_prime_e."""
    return _binom_sum(g, p_prime_e(e, n), range(1, g + 1, 2))


def p1(p: float, n: int = 7) -> float:
    return p**n


def p2(p: float, n: int = 7, m: int = 4) -> float:
    """At least m of the n group bits known."""
    return _binom_sum(n, p, range(m, n + 1))


def mok_error_exact(e: float, spec: CodeSpec = HAMMING_7_4) -> float:
    """Honest MOK bit error rate for the actual decoder, by enumerating error patterns.

    The decoder fixes single errors but turns every double error into a
    triple one, so this is larger than ``p_prime_e``.
    """
    n = spec.n
    errs = int_to_bits(np.arange(1 << n), n)
    w = errs.sum(axis=1)
    prob = e**w * (1 - e) ** (n - w)
    idx, _ = spec.nearest_table
    par = spec.codewords.sum(axis=1) & 1
    wrong = np.zeros(errs.shape[0])
    for ci, cw_int in enumerate(spec.codeword_ints):
        decoded = idx[cw_int ^ np.arange(1 << n)]
        wrong += par[decoded] != par[ci]
    return float((prob * wrong).sum() / len(spec.codeword_ints))


def fok_error_exact(e: float, g: int, spec: CodeSpec = HAMMING_7_4) -> float:
    return _binom_sum(g, mok_error_exact(e, spec), range(1, g + 1, 2))


def p2_exact(p: float, spec: CodeSpec = HAMMING_7_4) -> float:
    """Probability that the known positions of a group pin down a unique codeword."""
    n = spec.n
    masks = int_to_bits(np.arange(1 << n), n)
    w = masks.sum(axis=1)
    count, _ = spec.erasure_tables
    unique = count[np.arange(1 << n), 0] == 1
    return float((p**w * (1 - p) ** (n - w))[unique].sum())


@dataclass
class ScenarioReport:
    params: SimParams
    n_bar_honest: float
    n_bar_dishonest: float
    error_rate_no_ec: float
    error_rate_mok: float
    error_rate_fok: float
    failure_p0: float
    failure_p0_g: float
    dqa_mean: float | None = None
    n_A: float | None = None


def scenario_report(params: SimParams) -> ScenarioReport:
    n, k, p, e, g = params.N, params.k, params.p, params.e, params.g
    return ScenarioReport(
        params,
        n_bar_honest=n * p1(p, k),
        n_bar_dishonest=n * p2(p, k),
        error_rate_no_ec=p_e(e, k),
        error_rate_mok=p_prime_e(e, k),
        error_rate_fok=p_dprime_e(e, g, k),
        failure_p0=failure_p0(n, k, p),
        failure_p0_g=failure_p0_g(n, k, p, g),
    )


def _dqa(args) -> int:
    params, run, kw = args
    return run_aks_attack(params, make_rng(params.seed, run), **kw).dqa


def dqa_runs(params: SimParams, runs: int, jobs: int = 1, **kw) -> list[int]:
    """DQA of ``runs`` independent attacks; run i uses seed ``params.seed ^ i``."""
    tasks = [(params, i, kw) for i in range(runs)]
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as ex:
            return list(ex.map(_dqa, tasks))
    return [_dqa(t) for t in tasks]


def table1(
    runs: int = 10,
    seed: int = 0,
    sizes: Sequence[tuple[int, int]] = TABLE1_SIZES[:2],
    ps: Sequence[float] = TABLE1_PS,
    jobs: int = 1,
    **kw,
) -> list[dict]:
    rows = []
    for p in ps:
        for n, k in sizes:
            params = SimParams(N=n, k=k, p=p, seed=seed)
            d = np.array(dqa_runs(params, runs, jobs, **kw), dtype=float)
            rows.append(dict(
                N=n, k=k, p=round(p, 6), n_bar=round(expected_known(n, k, p), 4),
                dqa_mean=round(float(d.mean()), 4),
                dqa_sd=round(float(d.std(ddof=1)) if runs > 1 else 0.0, 4),
                runs=runs,
            ))
    return rows


def table2_runs(
    params: SimParams,
    g_max: int,
    runs: int,
    rule: DishonestRule = "exact",
    spec: CodeSpec = HAMMING_7_4,
) -> np.ndarray:
    """runs x g_max array of surviving known bits for a dishonest Alice.

    Greedy shifts only look backwards, so the first g MOKs of one run are a
    valid g-MOK run for every g <= g_max.
    """
    out = np.zeros((runs, g_max), dtype=np.int64)
    for i in range(runs):
        rng = make_rng(params.seed, i)
        moks = make_moks(params.replace(g=g_max), True, rng, spec, rule)
        out[i] = surviving_counts(moks, greedy_shifts(moks))
    return out


def table2(
    params: SimParams,
    g_range: Sequence[int],
    runs: int = 1,
    rule: DishonestRule = "exact",
    spec: CodeSpec = HAMMING_7_4,
) -> list[dict]:
    g_range = list(g_range)
    counts = table2_runs(params, max(g_range), runs, rule, spec)
    return [dict(g=g, n_A_mean=round(float(counts[:, g - 1].mean()), 4), runs=runs) for g in g_range]


def table3(params: SimParams, n_A: float | None = None) -> list[dict]:
    """kN-N versus gkN-N summary; the gkN-N error rate is given per MOK and per FOK."""
    r = scenario_report(params)
    # honest Alice lines up one bit; others survive only by chance
    honest = 1 + (params.N - 1) * p1(params.p, params.k) ** params.g
    return [
        dict(method="kN-N", n_bar_honest=round(r.n_bar_honest, 4), n_bar_dishonest="",
             error_rate=round(r.error_rate_no_ec, 6), error_rate_mok="", error_rate_fok="",
             failure=round(r.failure_p0, 6)),
        dict(method="gkN-N", n_bar_honest=round(honest, 4),
             n_bar_dishonest="" if n_A is None else round(n_A, 4),
             error_rate="", error_rate_mok=round(r.error_rate_mok, 6),
             error_rate_fok=round(r.error_rate_fok, 6), failure=round(r.failure_p0_g, 6)),
    ]


def fig5_curves(e_grid: Iterable[float], g: int = 6) -> list[dict]:
    return [dict(e=round(float(e), 10), p_e=p_e(e), p_dprime_e=p_dprime_e(e, g)) for e in e_grid]


def to_csv(rows: Sequence[dict], columns: Sequence[str] | None = None) -> str:
    if not rows:
        return ""
    columns = list(columns or rows[0].keys())
    buf = io.StringIO()
    w = csv.DictWriter(buf, columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    w.writerows(rows)
    return buf.getvalue()


def to_text(rows: Sequence[dict]) -> str:
    """Aligned plain-text rendering of table rows."""
    if not rows:
        return ""
    cols = list(rows[0].keys())
    cells = [[str(c) for c in cols]] + [[_fmt(r[c]) for c in cols] for r in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(cols))]
    return "\n".join("  ".join(v.rjust(w) for v, w in zip(row, widths)) for row in cells) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def report_dict(report: ScenarioReport) -> dict:
    d = asdict(report)
    d.update(d.pop("params"))
    return d
