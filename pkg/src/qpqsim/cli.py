"""Command-line front end.

Every command writes into an output directory (``--out``, else
``$QPQSIM_OUT``, else ``./out``) together with ``manifest.json`` holding the
fully resolved configuration. Values come from built-in defaults, then an
optional ``key=value`` config file, then command-line flags.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from importlib.metadata import PackageNotFoundError, version
from math import comb
from pathlib import Path

import numpy as np

from . import analysis, attack_nn, attack_rm, dilution, gf2
from .keys import SimParams, TriStateKey, generate_rok, make_rng
from .linear_code import HAMMING_7_4, load_code
from .protocol import random_database
from .render import grid_shape, render_grid

ENV_OUT = "QPQSIM_OUT"


def _version() -> str:
    try:
        return version("artifact")
    except PackageNotFoundError:
        return "0.0.0"


def _ints(s) -> list[int]:
    if isinstance(s, (list, tuple)):
        return [int(x) for x in s]
    return [int(x) for x in str(s).split(",") if x.strip()]


def _bool(s) -> bool:
    if isinstance(s, bool):
        return s
    return str(s).strip().lower() in {"1", "true", "yes", "on"}


# key -> (type, help); flags are --key with '_' spelled '-'
OPTIONS = {
    "n": (int, "number of database items N"),
    "k": (int, "dilution parameter k"),
    "p": (float, "Alice's per-bit knowledge probability"),
    "e": (float, "Alice's per-known-bit error probability"),
    "r": (int, "rM-N: number of sub-keys"),
    "m": (int, "rM-N: sub-key length M"),
    "g": (int, "gkN-N: number of MOKs"),
    "seed": (int, "RNG seed"),
    "runs": (int, "Monte Carlo runs"),
    "jobs": (int, "worker processes"),
    "method": (str, "dilution method: kn-n, n-n or rm-n"),
    "shifts": (_ints, "comma-separated shifts (rM-N)"),
    "rok_file": (str, "file with Bob/Alice ROK strings, two lines per key"),
    "candidates": (int, "approximate shift search over this many random shifts"),
    "relations": (_bool, "use the leaked parity relations"),
    "snapshot_at": (_ints, "comma-separated query counts to snapshot (first run)"),
    "grid": (str, "grid size WxH for snapshots"),
    "shortcut": (_bool, "skip basis bits that already follow from known ones"),
    "which": (int, "table number 1, 2 or 3"),
    "g_max": (int, "largest g in the table 2 sweep"),
    "rule": (str, "dishonest decoding rule: exact or threshold"),
    "large": (_bool, "table 1: include N=10^4"),
    "code": (str, "generator matrix file"),
    "fig": (int, "figure number 2 or 5"),
    "e_max": (float, "largest e on the curve grid"),
    "steps": (int, "number of grid steps"),
    "traces": (str, "directory holding trace_run*.csv files"),
}

DEFAULTS = {
    "dilute": dict(method="kn-n", n=12, k=2, p=0.25, e=0.0, r=2, m=4, seed=0, shifts=None, rok_file=None),
    "attack-nn": dict(n=225, k=3, p=0.25, e=0.0, runs=10, seed=0, jobs=1, candidates=None,
                      relations=True, snapshot_at=[], grid=None),
    "attack-rm": dict(n=None, m=8, k=3, r=2, p=0.25, e=0.0, seed=0, shortcut=True),
    "tables": dict(which=3, n=None, k=None, p=0.25, e=None, g=6, g_max=12, runs=None, seed=0,
                   rule="exact", large=False, jobs=1, code=None),
    "curves": dict(fig=5, e_max=0.5, steps=50, g=6, traces=None),
}


def read_config(path: str | Path) -> dict[str, str]:
    cfg = {}
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"bad config line: {line!r}")
        key, val = line.split("=", 1)
        cfg[key.strip().replace("-", "_").lower()] = val.strip()
    return cfg


def resolve(command: str, ns: argparse.Namespace) -> dict:
    conf = dict(DEFAULTS[command])
    if ns.config:
        for key, val in read_config(ns.config).items():
            if key not in conf:
                raise ValueError(f"unknown config key {key!r} for {command}")
            conf[key] = OPTIONS[key][0](val)
    for key in DEFAULTS[command]:
        val = getattr(ns, key, None)
        if val is not None:
            conf[key] = val
    conf["out"] = ns.out or os.environ.get(ENV_OUT) or "out"
    return conf


def _out_dir(conf: dict) -> Path:
    out = Path(conf["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_manifest(out: Path, command: str, conf: dict, extra: dict | None = None) -> None:
    body = {"command": command, "version": _version(), "config": {k: v for k, v in conf.items() if k != "out"}}
    if extra:
        body.update(extra)
    (out / "manifest.json").write_text(json.dumps(body, indent=2, sort_keys=True) + "\n")


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _write_key(path: Path, key: TriStateKey) -> None:
    path.write_text("\n".join(key.to_strings()) + "\n")


def _write_roks(path: Path, keys) -> None:
    # same two-line-per-key layout that --rok-file reads back
    path.write_text("".join(f"{gf2.to_str(k.bob)}\n{k.alice_view()}\n" for k in keys))


def _read_roks(path: str) -> list[TriStateKey]:
    lines = [ln.split("#", 1)[0].strip() for ln in Path(path).read_text().splitlines()]
    lines = [ln for ln in lines if ln]
    if len(lines) % 2:
        raise ValueError("ROK file needs a Bob line and an Alice line per key")
    return [TriStateKey.from_strings(lines[i], lines[i + 1]) for i in range(0, len(lines), 2)]


def cmd_dilute(conf: dict) -> int:
    method, n, k = conf["method"], conf["n"], conf["k"]
    rng = make_rng(conf["seed"])
    out = _out_dir(conf)
    roks = _read_roks(conf["rok_file"]) if conf["rok_file"] else None
    extra = {}
    if method == "kn-n":
        rok = roks[0] if roks else generate_rok(k * n, conf["p"], conf["e"], rng)
        _write_roks(out / "rok.txt", [rok])
        fok = dilution.dilute_kn_n(rok, n, k)
    elif method == "n-n":
        rok = roks[0] if roks else generate_rok(n, conf["p"], conf["e"], rng)
        _write_roks(out / "rok.txt", [rok])
        fok, rel = dilution.dilute_n_n(rok, k)
        _write_csv(out / "relations.csv", ["i", "j", "parity"], rel)
    elif method == "rm-n":
        r, m = conf["r"], conf["m"]
        if n > comb(m, k):
            raise ValueError(f"n={n} exceeds C(m,k)=C({m},{k})={comb(m, k)}")
        subs = roks or [generate_rok(m, conf["p"], conf["e"], rng) for _ in range(r)]
        shifts = conf["shifts"] or [int(s) for s in rng.integers(0, n, size=len(subs))]
        if len(shifts) != len(subs):
            raise ValueError("need one shift per sub-key")
        _write_roks(out / "rok.txt", subs)
        fok = dilution.dilute_rm_n(subs, shifts, k, n)
        extra["shifts"] = [int(s) for s in shifts]
    else:
        raise ValueError(f"unknown method {method!r}")
    _write_key(out / "fok.txt", fok)
    write_manifest(out, "dilute", conf, extra)
    print(f"FOK bob   {gf2.to_str(fok.bob)}")
    print(f"FOK alice {fok.alice_view()}")
    return 0


def _parse_grid(spec: str | None, n: int) -> tuple[int, int]:
    if not spec:
        return grid_shape(n)
    w, h = (int(x) for x in spec.lower().split("x"))
    return w, h


def cmd_attack_nn(conf: dict) -> int:
    params = SimParams(N=conf["n"], k=conf["k"], p=conf["p"], e=conf["e"], seed=conf["seed"])
    out = _out_dir(conf)
    grid = _parse_grid(conf["grid"], params.N)
    rows = []
    for run in range(conf["runs"]):
        res = attack_nn.run_aks_attack(
            params,
            make_rng(params.seed, run),
            use_relations=conf["relations"],
            candidates=conf["candidates"],
            snapshot_at=conf["snapshot_at"] if run == 0 else (),
            grid=grid,
        )
        _write_csv(out / f"trace_run{run}.csv", attack_nn.TraceRow._fields, res.trace)
        for nq, cls in sorted(res.snapshots.items()):
            render_grid(cls, out / f"grid_run{run}_nq{nq}.ppm")
        rows.append((run, res.dqa, res.conflicts, int(res.approximate)))
    _write_csv(out / "summary.csv", ["run", "dqa", "conflicts", "approximate"], rows)
    dqa = np.array([r[1] for r in rows], dtype=float)
    write_manifest(out, "attack-nn", conf, {"dqa_mean": float(dqa.mean()), "approximate": conf["candidates"] is not None})
    print(f"mean DQA over {len(rows)} runs: {dqa.mean():.2f}")
    return 0


def cmd_attack_rm(conf: dict) -> int:
    m, k = conf["m"], conf["k"]
    n = conf["n"] if conf["n"] is not None else comb(m, k)
    params = SimParams(N=n, k=k, p=conf["p"], e=conf["e"], r=conf["r"], M=m, seed=conf["seed"])
    params.check_rm()
    out = _out_dir(conf)
    rng = make_rng(params.seed)
    db = random_database(n, rng)
    res = attack_rm.run_rank_attack(params, db, rng, shortcut=conf["shortcut"])
    (out / "transcript.log").write_text("".join(t.to_line() + "\n" for t in res.transcripts))
    mismatches = int(np.count_nonzero(res.recovered != db))
    bound = params.r * params.M
    if mismatches == 0:
        verdict = f"recovered exact, queries {res.queries_used} <= rank {res.rank} <= {bound}"
    else:
        verdict = f"WARNING mismatch {mismatches}/{n} items, queries {res.queries_used}, rank {res.rank}, bound {bound}"
    (out / "verdict.txt").write_text(
        f"{verdict}\nqueries_used={res.queries_used}\nrank={res.rank}\nbound={bound}\n"
        f"mismatches={mismatches}\nretries={res.retries}\nconflicts={res.conflicts}\n"
    )
    write_manifest(out, "attack-rm", {**conf, "n": n})
    print(verdict)
    return 0


def cmd_tables(conf: dict) -> int:
    out = _out_dir(conf)
    which = conf["which"]
    spec = load_code(conf["code"]) if conf["code"] else HAMMING_7_4
    if which == 1:
        sizes = analysis.TABLE1_SIZES if conf["large"] else analysis.TABLE1_SIZES[:2]
        if conf["n"] is not None:
            sizes = [(conf["n"], conf["k"] or 3)]
        rows = analysis.table1(conf["runs"] or 10, conf["seed"], sizes, jobs=conf["jobs"])
        cols = ["N", "k", "p", "n_bar", "dqa_mean", "dqa_sd", "runs"]
    elif which in (2, 3):
        e = conf["e"] if conf["e"] is not None else (0.0 if which == 2 else 0.03)
        params = SimParams(N=conf["n"] or 100_000, k=conf["k"] or spec.n, p=conf["p"], e=e,
                           g=conf["g"], seed=conf["seed"])
        if which == 2:
            rows = analysis.table2(params, range(1, conf["g_max"] + 1), conf["runs"] or 1, conf["rule"], spec)
            cols = ["g", "n_A_mean", "runs"]
        else:
            n_a = None
            if conf["runs"]:
                counts = analysis.table2_runs(params, params.g, conf["runs"], conf["rule"], spec)
                n_a = float(counts[:, -1].mean())
            rows = analysis.table3(params, n_a)
            cols = list(rows[0])
    else:
        raise ValueError("--which must be 1, 2 or 3")
    (out / f"table{which}.csv").write_text(analysis.to_csv(rows, cols))
    (out / f"table{which}.txt").write_text(analysis.to_text(rows))
    write_manifest(out, "tables", conf)
    print(analysis.to_text(rows), end="")
    return 0


def cmd_curves(conf: dict) -> int:
    out = _out_dir(conf)
    if conf["fig"] == 5:
        grid = np.linspace(0.0, conf["e_max"], conf["steps"] + 1)
        rows = analysis.fig5_curves(grid, conf["g"])
        (out / "fig5.csv").write_text(analysis.to_csv(rows, ["e", "p_e", "p_dprime_e"]))
    elif conf["fig"] == 2:
        if not conf["traces"]:
            raise ValueError("--traces DIR is required for figure 2")
        rows = []
        files = sorted(Path(conf["traces"]).glob("trace_run*.csv"),
                       key=lambda p: int(p.stem.removeprefix("trace_run")))
        if not files:
            raise ValueError(f"no trace_run*.csv files in {conf['traces']}")
        for path in files:
            run = int(path.stem.removeprefix("trace_run"))
            with open(path, newline="") as fh:
                for rec in csv.DictReader(fh):
                    rows.append(dict(run=run, n_q=rec["n_q"], H=rec["H"], N_E=rec["N_E"]))
        (out / "fig2.csv").write_text(analysis.to_csv(rows, ["run", "n_q", "H", "N_E"]))
    else:
        raise ValueError("--fig must be 2 or 5")
    write_manifest(out, "curves", conf)
    print(f"{len(rows)} rows written")
    return 0


COMMANDS = {
    "dilute": cmd_dilute,
    "attack-nn": cmd_attack_nn,
    "attack-rm": cmd_attack_rm,
    "tables": cmd_tables,
    "curves": cmd_curves,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qpqsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in DEFAULTS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="key=value config file")
        sp.add_argument("--out", help=f"output directory (default ${ENV_OUT} or ./out)")
        for key in defaults:
            typ, help_ = OPTIONS[key]
            flag = "--" + key.replace("_", "-")
            if typ is _bool:
                sp.add_argument(flag, dest=key, action=argparse.BooleanOptionalAction, default=None, help=help_)
            else:
                sp.add_argument(flag, dest=key, type=typ, default=None, help=help_)
    return parser


def main(argv=None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        conf = resolve(ns.command, ns)
        return COMMANDS[ns.command](conf)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
