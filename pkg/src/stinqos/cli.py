"""Command-line front end: single evaluations, simulations and parameter sweeps.

Exit codes: 0 success, 2 invalid scenario or arguments, 3 numerical failure
(domain, stability, truncation or quadrature), 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

import jsonschema
import numpy as np

from . import fbc, gallager, harq, simkit, snc
from .errors import ConfigError, QosError
from .scenario import Scenario, load_scenario, scenario_from_dict

__all__ = ["COLUMNS", "OUTPUT_SCHEMA", "run_sweep", "evaluate_point", "emit", "render", "parse_csv", "main"]

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4

# Fixed column order of every sweep table. Variant columns record which
# formula produced the neighbouring values.
COLUMNS = (
    "index",
    "axis",
    "value",
    "eps_round1",
    "eps_round1_asymptotic",
    "eps_truncation",
    "mean_rounds",
    "aoi_theta",
    "aoi_bound",
    "aoi_log_bound",
    "aoi_margin",
    "aoi_bound_paper",
    "aoi_bound_optimized",
    "aoi_theta_optimized",
    "aoi_bound_asymptotic",
    "mean_peak_aoi",
    "delay_bound",
    "delay_theta",
    "delay_margin",
    "theta_error",
    "rho_star",
    "error_exponent_bound",
    "theta_error_jensen",
    "emp_peak_aoi_violation",
    "emp_delay_violation",
    "emp_mean_peak_aoi",
    "emp_mean_peak_aoi_stderr",
    "aoi_variant",
    "exponent_variant",
    "errors",
)

_STRING_COLUMNS = {"axis", "aoi_variant", "exponent_variant", "errors"}
_INT_COLUMNS = {"index"}

OUTPUT_SCHEMA = {
    "type": "object",
    "required": ["columns", "rows"],
    "additionalProperties": False,
    "properties": {
        "columns": {"type": "array", "items": {"type": "string"}, "const": list(COLUMNS)},
        "rows": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": list(COLUMNS),
                "additionalProperties": False,
                "properties": {
                    c: (
                        {"type": "string"}
                        if c in _STRING_COLUMNS
                        else {"type": "integer"} if c in _INT_COLUMNS else {"type": ["number", "null"]}
                    )
                    for c in COLUMNS
                },
            },
        },
    },
}


def _derived_seed(seed: int, index: int) -> int:
    ss = np.random.SeedSequence(int(seed), spawn_key=(simkit.STREAMS["replication"], int(index)))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


def evaluate_point(s: Scenario, index: int, axis: str, value: float, seed: int) -> dict:
    """One sweep row. Failures are recorded in ``errors`` as ``group:category`` and leave empty cells."""
    row = {c: None for c in COLUMNS}
    row.update(
        index=index,
        axis=axis,
        value=float(value),
        aoi_variant="aoi_bound=theorem;aoi_bound_paper=paper-literal;aoi_bound_optimized=theorem-optimized",
        exponent_variant=f"theta_error=exact;theta_error_jensen={s['exponent']['interferer_mean']}",
    )
    errors = []

    def guard(group, fn):
        try:
            fn()
        except QosError as err:
            errors.append(f"{group}:{err.category}")

    model = s.model()
    hcfg = s.harq_config()
    lam = s["traffic"]["lambda_s"]
    n_hat = hcfg.sub_block_len
    state = {}

    def rounds():
        ctl_res = [
            fbc.error_prob_closed_form(model, harq.rate_after_round(hcfg, l), l * n_hat)
            for l in range(1, max(hcfg.max_rounds, 2))
        ]
        errs = np.array([r.value for r in ctl_res])[: hcfg.max_rounds - 1]
        state["errs"] = errs
        row["eps_round1"] = ctl_res[0].value
        row["eps_truncation"] = max(r.truncation_error for r in ctl_res)
        row["eps_round1_asymptotic"] = fbc.error_prob_asymptotic(model, hcfg.initial_rate, n_hat).value
        row["mean_rounds"] = harq.expected_rounds(errs)

    guard("eps", rounds)

    if "errs" in state:
        errs = state["errs"]
        q = snc.AoiQosQuery(s["aoi"]["theta_aoi"], s["aoi"]["a_th"], n_hat)

        def aoi():
            res = snc.peak_aoi_harq(model, hcfg, lam, q, errs=errs)
            row.update(aoi_theta=res.theta_used, aoi_bound=res.value, aoi_log_bound=res.log_value, aoi_margin=res.stability_margin)

        def aoi_paper():
            row["aoi_bound_paper"] = snc.peak_aoi_harq(model, hcfg, lam, q, variant="paper", errs=errs).value

        def aoi_opt():
            res = snc.optimized_peak_aoi_harq(errs, hcfg, lam, q.a_th, n_hat)
            row.update(aoi_bound_optimized=res.value, aoi_theta_optimized=res.theta_used)

        def aoi_asym():
            row["aoi_bound_asymptotic"] = snc.peak_aoi_asymptotic(model, hcfg, lam, q).value

        def mean_aoi():
            row["mean_peak_aoi"] = snc.mean_peak_aoi(errs, hcfg, lam)

        def delay():
            d = s["delay"]
            res = snc.harq_delay_bound(errs, hcfg, lam, d["d_th"], d["delta_s"], theta=d["theta_delay"])
            row.update(delay_bound=res.value, delay_theta=res.theta_used, delay_margin=res.stability_margin)

        for name, fn in (("aoi", aoi), ("aoi_paper", aoi_paper), ("aoi_opt", aoi_opt), ("aoi_asym", aoi_asym), ("mean_aoi", mean_aoi), ("delay", delay)):
            guard(name, fn)

    def exponent():
        e = s["exponent"]
        emodel = s.exponent_model()
        res = gallager.theta_error(emodel, e["rate"], e["blocklength"])
        row.update(theta_error=res.theta_error, rho_star=res.rho_star, error_exponent_bound=res.error_bound(e["blocklength"]))
        jres = gallager.theta_error(emodel, e["rate"], e["blocklength"], use_jensen=True, interferer_mean=e["interferer_mean"])
        row["theta_error_jensen"] = jres.theta_error

    guard("exponent", exponent)

    sim = s["simulation"]
    if sim["enabled"]:

        def simulate():
            cfg = simkit.SimConfig(seed=seed, n_samples=sim["n_samples"], n_packets=sim["n_packets"], warmup=sim["warmup"])
            trace = simkit.simulate_aoi_queue(lam, model, hcfg, cfg)
            row["emp_peak_aoi_violation"] = float(simkit.empirical_peak_aoi_violation(trace, [s["aoi"]["a_th"]], n_hat)[0])
            row["emp_delay_violation"] = float(simkit.empirical_delay_violation(trace, [s["delay"]["d_th"]], hcfg.round_duration)[0])
            bm = simkit.batch_means(trace.steady("peak_aoi"), 20)
            row.update(emp_mean_peak_aoi=bm.mean, emp_mean_peak_aoi_stderr=bm.stderr)

        guard("simulation", simulate)

    for key, val in row.items():
        if isinstance(val, float) and not math.isfinite(val):
            row[key] = None
            errors.append(f"{key}:nonfinite")
    row["errors"] = ";".join(errors)
    return row


def run_sweep(s: Scenario, seed: Optional[int] = None, workers: int = 1) -> list[dict]:
    """Evaluate every grid point of the sweep axis; rows come back in grid order."""
    axis = s["sweep"]["axis"]
    grid = s["sweep"]["grid"]
    seed = s["simulation"]["seed"] if seed is None else seed

    def task(item):
        i, v = item
        try:
            point = s.with_value(axis, v)
        except ConfigError:
            row = {c: None for c in COLUMNS}
            row.update(index=i, axis=axis, value=float(v), aoi_variant="", exponent_variant="", errors="scenario:config")
            return row
        try:
            return evaluate_point(point, i, axis, v, _derived_seed(seed, i))
        except QosError as err:
            row = {c: None for c in COLUMNS}
            row.update(index=i, axis=axis, value=float(v), aoi_variant="", exponent_variant="", errors=f"model:{err.category}")
            return row

    items = list(enumerate(grid))
    if workers <= 1:
        return [task(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(task, items))


# ---------------------------------------------------------------------------
# output


def _cell(val) -> str:
    if val is None:
        return ""
    if isinstance(val, bool):
        return "true" if val else "false"
    if isinstance(val, (int, np.integer)):
        return str(int(val))
    if isinstance(val, (float, np.floating)):
        return repr(float(val))
    return str(val)


def render(rows: Sequence[dict], fmt: str = "csv", columns: Sequence[str] = COLUMNS) -> str:
    """Serialize a table; identical rows always give identical text."""
    if not rows:
        raise ConfigError("cannot emit an empty table")
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_cell(r.get(c)) for c in columns])
        return buf.getvalue()
    if fmt == "json":
        clean = []
        for r in rows:
            out = {}
            for c in columns:
                v = r.get(c)
                if isinstance(v, (np.floating,)):
                    v = float(v)
                elif isinstance(v, np.integer):
                    v = int(v)
                out[c] = v
            clean.append(out)
        return json.dumps({"columns": list(columns), "rows": clean}, indent=1, allow_nan=False) + "\n"
    raise ConfigError(f"unknown output format {fmt!r}")


def emit(rows: Sequence[dict], fmt: str = "csv", path=None) -> str:
    """Write the rendered table to ``path`` (or return it only when ``path`` is None)."""
    text = render(rows, fmt)
    if fmt == "json" and list(rows[0]) == list(COLUMNS):
        jsonschema.validate(json.loads(text), OUTPUT_SCHEMA)
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def parse_csv(text: str) -> list[dict]:
    """Inverse of the CSV rendering for sweep tables."""
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    rows = []
    for rec in reader:
        row = {}
        for c, cell in zip(header, rec):
            if c in _STRING_COLUMNS:
                row[c] = cell
            elif cell == "":
                row[c] = None
            elif c in _INT_COLUMNS:
                row[c] = int(cell)
            else:
                row[c] = float(cell)
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# subcommands


def _cmd_error_prob(s: Scenario, args) -> list[dict]:
    model, hcfg = s.model(), s.harq_config()
    rows = []
    for l in range(1, hcfg.max_rounds + 1):
        n, rate = l * hcfg.sub_block_len, harq.rate_after_round(hcfg, l)
        cf = fbc.error_prob_closed_form(model, rate, n)
        rows.append(
            {
                "round": l,
                "blocklength": n,
                "rate_nats": rate,
                "eps_closed_form": cf.value,
                "eps_closed_form_raw": cf.raw,
                "eps_truncation": cf.truncation_error,
                "eps_normal": fbc.error_prob_normal(model, fbc.FbcConfig(n, rate)).value,
                "eps_asymptotic": fbc.error_prob_asymptotic(model, rate, n).value,
            }
        )
    return rows


def _cmd_aoi_bound(s: Scenario, args) -> list[dict]:
    row = evaluate_point(s, 0, "none", 0.0, 0)
    keys = ("eps_round1", "mean_rounds", "aoi_theta", "aoi_bound", "aoi_log_bound", "aoi_margin", "aoi_bound_paper",
            "aoi_bound_optimized", "aoi_theta_optimized", "aoi_bound_asymptotic", "mean_peak_aoi", "aoi_variant", "errors")
    return [{k: row[k] for k in keys}]


def _cmd_delay_bound(s: Scenario, args) -> list[dict]:
    model, hcfg = s.model(), s.harq_config()
    errs = harq.round_error_probs(model, hcfg)
    d = s["delay"]
    res = snc.harq_delay_bound(errs, hcfg, s["traffic"]["lambda_s"], d["d_th"], d["delta_s"], theta=d["theta_delay"])
    return [{"d_th": d["d_th"], "delay_bound": res.value, "theta_used": res.theta_used, "stability_margin": res.stability_margin, "log_bound": res.log_value}]


def _cmd_exponent(s: Scenario, args) -> list[dict]:
    e = s["exponent"]
    model = s.exponent_model()
    ex = gallager.theta_error(model, e["rate"], e["blocklength"])
    jx = gallager.theta_error(model, e["rate"], e["blocklength"], use_jensen=True, interferer_mean=e["interferer_mean"])
    return [
        {"method": "exact", "theta_error": ex.theta_error, "rho_star": ex.rho_star, "e0_at_rho": ex.e0_at_rho, "error_bound": ex.error_bound(e["blocklength"])},
        {"method": f"jensen-{e['interferer_mean']}", "theta_error": jx.theta_error, "rho_star": jx.rho_star, "e0_at_rho": jx.e0_at_rho, "error_bound": jx.error_bound(e["blocklength"])},
    ]


def _cmd_simulate(s: Scenario, args) -> list[dict]:
    sim = s["simulation"]
    seed = sim["seed"] if args.seed is None else args.seed
    cfg = simkit.SimConfig(seed=seed, n_samples=sim["n_samples"], n_packets=sim["n_packets"], warmup=sim["warmup"])
    hcfg = s.harq_config()
    trace = simkit.simulate_aoi_queue(s["traffic"]["lambda_s"], s.model(), hcfg, cfg)
    if args.trace is not None:
        trace.to_csv(args.trace)
    bm = simkit.batch_means(trace.steady("peak_aoi"), 20)
    return [
        {
            "n_packets": len(trace),
            "warmup": trace.warmup,
            "mean_rounds": float(np.mean(trace.steady("rounds"))),
            "mean_sojourn": float(np.mean(trace.steady("sojourn"))),
            "mean_peak_aoi": bm.mean,
            "mean_peak_aoi_stderr": bm.stderr,
            "peak_aoi_violation": float(simkit.empirical_peak_aoi_violation(trace, [s["aoi"]["a_th"]], hcfg.sub_block_len)[0]),
            "delay_violation": float(simkit.empirical_delay_violation(trace, [s["delay"]["d_th"]], hcfg.round_duration)[0]),
        }
    ]


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stinqos", description="Statistical QoS bounds and Monte Carlo checks for satellite downlinks.")
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("error-prob", "per-round decoding error probability"),
        ("aoi-bound", "peak-AoI violation bounds"),
        ("delay-bound", "delay violation bound"),
        ("exponent", "error-rate QoS exponent"),
        ("simulate", "simulate the status-update queue"),
        ("sweep", "evaluate every point of the scenario's sweep axis"),
    ):
        sp = sub.add_parser(name, help=help_text)
        sp.add_argument("--scenario", help="scenario JSON file (defaults when omitted)")
        sp.add_argument("--seed", type=int, default=None, help="master seed, overrides simulation.seed")
        sp.add_argument("--format", choices=("csv", "json"), default=None, help="output format")
        sp.add_argument("--out", default=None, help="output file (stdout when omitted)")
        if name == "sweep":
            sp.add_argument("--workers", type=int, default=1, help="concurrent sweep points")
        if name == "simulate":
            sp.add_argument("--trace", default=None, help="write the per-packet trace CSV here")
    return p


def _keys_in_order(rows):
    return list(rows[0].keys())


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        s = load_scenario(args.scenario) if args.scenario else scenario_from_dict({})
        fmt = args.format or s["output"]["format"]
        out = args.out if args.out is not None else s["output"]["path"]
        if args.command == "sweep":
            if args.workers < 1:
                raise ConfigError("--workers must be at least 1")
            rows = run_sweep(s, seed=args.seed, workers=args.workers)
            text = emit(rows, fmt, out)
        else:
            handler = {
                "error-prob": _cmd_error_prob,
                "aoi-bound": _cmd_aoi_bound,
                "delay-bound": _cmd_delay_bound,
                "exponent": _cmd_exponent,
                "simulate": _cmd_simulate,
            }[args.command]
            rows = handler(s, args)
            text = render(rows, fmt, _keys_in_order(rows))
            if out is not None:
                with open(out, "w", newline="") as fh:
                    fh.write(text)
        if out is None:
            sys.stdout.write(text)
        return EXIT_OK
    except ConfigError as err:
        print(f"stinqos: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except QosError as err:
        print(f"stinqos: {err.category} error: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as err:
        print(f"stinqos: i/o error: {err}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
