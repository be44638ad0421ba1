"""
Command-line front end.

Subcommands: ``simulate``, ``trend``, ``estimate``, ``replicate`` and
``fit-capacity``. Settings resolve as built-in defaults, then an optional
JSON ``--config`` file (flat keys named like the long flags, with dashes
or underscores), then explicit flags.

Exit codes: 0 success, 1 input/validation error, 2 I/O error, 3 solver
failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from . import capacity_fit as cf
from .did import METHODS, SigmoidSpec, delta_series, estimate
from .measure import Capacity, GroundSet, make_uniform_capacity
from .panel import PanelDataset, PanelError, read_panel_csv, write_panel_csv
from .qp import ConvergenceError
from .simulate import SimConfig, generate_panel, trend_table

EXIT_OK, EXIT_INPUT, EXIT_IO, EXIT_SOLVER = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# Per-command defaults keyed by argparse dest; REQUIRED must come from a flag or config file.
REQUIRED = object()

DEFAULTS: Dict[str, Dict[str, Any]] = {
    "simulate": {
        "units": REQUIRED, "periods": REQUIRED, "treat_start": REQUIRED,
        "treated_frac": 0.7, "seed": 42, "noise_sd": 0.02,
        "out": "panel.csv", "trend_out": None,
    },
    "trend": {"panel": REQUIRED, "out": None},
    "estimate": {
        "panel": REQUIRED, "method": ["all"], "mode": "time_integral",
        "capacity": "sigmoid", "capacity_file": None, "lam": 5.0, "theta": 0.5,
        "anchor": "anchored", "weights": "count", "treat_start": None,
        "unit_col": "Hospital", "period_col": "Period", "treated_col": "Treated",
        "post_col": "PostTreatment", "outcome_col": "InfectionRate",
        "json": False, "out": None,
    },
    "replicate": {
        "seeds": 200, "seed_start": 0, "units": 50, "periods": 30, "treat_start": 12,
        "treated_frac": 0.7, "lam": 5.0, "theta": 0.5, "anchor": "raw", "mode": "listing",
        "json": False, "out": None, "table_out": None,
    },
    "fit-capacity": {
        "samples": None, "from_panel": None, "mode": "full", "k": None,
        "epsilon": cf.DEFAULT_EPSILON, "tol": cf.DEFAULT_TOL, "start": "uniform",
        "json": False, "out": None,
    },
}


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON file with default values for this command")


def _capacity_flags(p):
    p.add_argument("--lambda", dest="lam", type=float, help="sigmoid steepness")
    p.add_argument("--theta", type=float, help="sigmoid transition location in [0, 1]")
    p.add_argument("--anchor", choices=("raw", "anchored"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="nadid", description=__doc__.split("\n\n")[0].strip())
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    S = argparse.SUPPRESS

    p = sub.add_parser("simulate", help="generate a synthetic hospital panel", argument_default=S)
    _common(p)
    p.add_argument("--units", type=int)
    p.add_argument("--periods", type=int)
    p.add_argument("--treat-start", dest="treat_start", type=int)
    p.add_argument("--treated-frac", dest="treated_frac", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--noise-sd", dest="noise_sd", type=float)
    p.add_argument("--out", help="panel CSV path (default panel.csv)")
    p.add_argument("--trend-out", dest="trend_out", help="trend CSV path (default <out>_trend.csv)")

    p = sub.add_parser("trend", help="per-period group means of a panel", argument_default=S)
    _common(p)
    p.add_argument("--panel")
    p.add_argument("--out", help="trend CSV path (default stdout)")

    p = sub.add_parser("estimate", help="run DiD / NA-DiD estimators on a panel CSV", argument_default=S)
    _common(p)
    p.add_argument("--panel")
    p.add_argument("--method", action="append",
                   choices=METHODS + ("nadid", "classical", "all"),
                   help="repeatable; 'nadid' follows --mode, 'classical' is the three additive methods")
    p.add_argument("--mode", choices=("time_integral", "listing"))
    p.add_argument("--capacity", choices=("sigmoid", "uniform", "file"))
    p.add_argument("--capacity-file", dest="capacity_file")
    _capacity_flags(p)
    p.add_argument("--weights", choices=("count", "uniform"))
    p.add_argument("--treat-start", dest="treat_start", type=int,
                   help="derive the post indicator when the post column is absent")
    for field in ("unit", "period", "treated", "post", "outcome"):
        p.add_argument(f"--{field}-col", dest=f"{field}_col")
    p.add_argument("--json", action="store_true", help="print the JSON report instead of text")
    p.add_argument("--out", help="also write the JSON report here")

    p = sub.add_parser("replicate", help="seeded Monte-Carlo replication of the hospital study",
                       argument_default=S)
    _common(p)
    p.add_argument("--seeds", type=int, help="number of seeds")
    p.add_argument("--seed-start", dest="seed_start", type=int)
    p.add_argument("--units", type=int)
    p.add_argument("--periods", type=int)
    p.add_argument("--treat-start", dest="treat_start", type=int)
    p.add_argument("--treated-frac", dest="treated_frac", type=float)
    _capacity_flags(p)
    p.add_argument("--mode", choices=("time_integral", "listing"))
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", help="write the JSON report here")
    p.add_argument("--table-out", dest="table_out", help="per-seed CSV path")

    p = sub.add_parser("fit-capacity", help="fit a capacity to (f, target) samples", argument_default=S)
    _common(p)
    p.add_argument("--samples", help="CSV with columns f_1..f_n,target")
    p.add_argument("--from-panel", dest="from_panel",
                   help="EXPERIMENTAL: build samples from a panel's treated units")
    p.add_argument("--mode", choices=("full", "symmetric", "k-additive"))
    p.add_argument("--k", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--start", choices=("uniform", "min", "max"))
    p.add_argument("--json", action="store_true")
    p.add_argument("--out", help="write capacity JSON with diagnostics here")
    return parser


def resolve_config(command: str, args: argparse.Namespace) -> Dict[str, Any]:
    """Merge defaults, config file and flags; flags win."""
    cfg = dict(DEFAULTS[command])
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    path = getattr(args, "config", None)
    if path:
        try:
            with open(path) as fh:
                file_cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise UsageError(f"config file {path}: {exc}") from None
        if not isinstance(file_cfg, dict):
            raise UsageError(f"config file {path} must hold a JSON object")
        aliases = {"lambda": "lam"}
        for key, value in file_cfg.items():
            key = aliases.get(key, key.replace("-", "_"))
            if key not in cfg:
                raise UsageError(f"config file {path}: unknown key {key!r} for {command}")
            cfg[key] = value
    cfg.update(flags)
    missing = [k for k, v in cfg.items() if v is REQUIRED]
    if missing:
        raise UsageError(
            f"{command}: missing required option(s): "
            + ", ".join("--" + k.replace("_", "-") for k in missing)
        )
    return cfg


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, default=_json_default)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _write_text(path, text: str):
    Path(path).write_text(text)


# commands -----------------------------------------------------------------


def cmd_simulate(cfg: dict, out) -> int:
    try:
        config = SimConfig(
            num_units=int(cfg["units"]), num_periods=int(cfg["periods"]),
            treatment_start=int(cfg["treat_start"]), treated_fraction=float(cfg["treated_frac"]),
            seed=int(cfg["seed"]), noise_sd=float(cfg["noise_sd"]),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    panel = generate_panel(config)
    panel_path = Path(cfg["out"])
    trend_path = Path(cfg["trend_out"] or panel_path.with_name(panel_path.stem + "_trend.csv"))
    write_panel_csv(panel, panel_path)
    trend_table(panel).to_csv(trend_path, index=False, float_format="%.17g")
    print(_dump({"command": "simulate", "config": cfg, "sim_config": config.to_dict(),
                 "rows": panel.n_rows, "panel": str(panel_path), "trend": str(trend_path)}),
          file=out)
    return EXIT_OK


def cmd_trend(cfg: dict, out) -> int:
    table = trend_table(read_panel_csv(cfg["panel"]))
    if cfg["out"]:
        table.to_csv(cfg["out"], index=False, float_format="%.17g")
    else:
        table.to_csv(out, index=False, float_format="%.17g")
    return EXIT_OK


def _expand_methods(methods: List[str], mode: str) -> List[str]:
    out: List[str] = []
    for m in methods:
        if m == "all":
            expanded = list(METHODS)
        elif m == "classical":
            expanded = ["difference_table", "ols", "integral"]
        elif m == "nadid":
            expanded = ["nadid_time" if mode == "time_integral" else "nadid_listing"]
        else:
            expanded = [m]
        out.extend(x for x in expanded if x not in out)
    return out


def _capacity_spec(cfg: dict, panel: Optional[PanelDataset] = None):
    kind = cfg.get("capacity", "sigmoid")
    if kind == "sigmoid":
        spec = SigmoidSpec(float(cfg["lam"]), float(cfg["theta"]), cfg["anchor"])
        spec.distortion  # validates parameters
        return spec
    if kind == "uniform":
        periods = delta_series(panel).post_periods
        return make_uniform_capacity(GroundSet(periods))
    if kind == "file":
        if not cfg.get("capacity_file"):
            raise UsageError("--capacity file requires --capacity-file")
        return Capacity.from_json(Path(cfg["capacity_file"]).read_text())
    raise UsageError(f"unknown capacity kind {kind!r}")


def _format_report(report: dict) -> str:
    lines = [f"panel: {report['panel']['path']} ({report['panel']['rows']} rows, "
             f"treatment start {report['panel']['treatment_start']})"]
    cm = report.get("cell_means")
    if cm:
        lines.append("cell means: " + ", ".join(f"{k}={v!r}" for k, v in cm.items()))
    for est in report["estimates"]:
        lines.append(f"{est['method']:<17} {est['value']!r}")
        if "capacity" in est:
            cap = {k: v for k, v in est["capacity"].items() if k != "post_periods"}
            lines.append(f"{'':<17} capacity {json.dumps(cap)}")
    lines.append("config: " + json.dumps(report["config"], sort_keys=True))
    return "\n".join(lines)


def cmd_estimate(cfg: dict, out) -> int:
    columns = {f: cfg[f"{f}_col"] for f in ("unit", "period", "treated", "post", "outcome")}
    panel = read_panel_csv(cfg["panel"], columns, cfg["treat_start"])
    methods = cfg["method"]
    if isinstance(methods, str):
        methods = [methods]
    methods = _expand_methods(methods, cfg["mode"])
    spec = _capacity_spec(cfg, panel) if any(m.startswith("nadid") for m in methods) else None
    estimates = [estimate(panel, m, spec, cfg["weights"]) for m in methods]
    report = {
        "command": "estimate",
        "config": cfg,
        "panel": {"path": str(cfg["panel"]), "rows": panel.n_rows, "units": panel.n_units,
                  "periods": panel.n_periods, "treatment_start": panel.treatment_start},
        "estimates": [e.to_dict() for e in estimates],
    }
    for e in estimates:
        if e.cell_means is not None:
            report["cell_means"] = e.to_dict()["cell_means"]
            break
    text = _dump(report)
    if cfg["out"]:
        _write_text(cfg["out"], text + "\n")
    print(text if cfg["json"] else _format_report(report), file=out)
    return EXIT_OK


def replicate(cfg: dict) -> pd.DataFrame:
    spec = SigmoidSpec(float(cfg["lam"]), float(cfg["theta"]), cfg["anchor"])
    nadid_method = "nadid_listing" if cfg["mode"] == "listing" else "nadid_time"
    rows = []
    start = int(cfg["seed_start"])
    for seed in range(start, start + int(cfg["seeds"])):
        panel = generate_panel(SimConfig(
            num_units=int(cfg["units"]), num_periods=int(cfg["periods"]),
            treatment_start=int(cfg["treat_start"]), treated_fraction=float(cfg["treated_frac"]),
            seed=seed,
        ))
        did = estimate(panel, "difference_table").value
        na = estimate(panel, nadid_method, spec).value
        rows.append({"seed": seed, "did": did, "nadid": na, "attenuated": abs(na) < abs(did)})
    return pd.DataFrame(rows)


def cmd_replicate(cfg: dict, out) -> int:
    if int(cfg["seeds"]) < 1:
        raise UsageError("--seeds must be at least 1")
    try:
        table = replicate(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    summary = {
        "seeds": len(table),
        "mean_did": float(table["did"].mean()),
        "mean_nadid": float(table["nadid"].mean()),
        "attenuation_fraction": float(table["attenuated"].mean()),
    }
    report = {"command": "replicate", "config": cfg, "summary": summary,
              "per_seed": table.to_dict(orient="records")}
    if cfg["table_out"]:
        table.to_csv(cfg["table_out"], index=False, float_format="%.17g")
    text = _dump(report)
    if cfg["out"]:
        _write_text(cfg["out"], text + "\n")
    if cfg["json"]:
        print(text, file=out)
    else:
        print(table.to_string(index=False, float_format=repr), file=out)
        for k, v in summary.items():
            print(f"{k}: {v!r}", file=out)
        print("config: " + json.dumps(cfg, sort_keys=True), file=out)
    return EXIT_OK


def panel_samples(panel: PanelDataset) -> list:
    """EXPERIMENTAL bridge from a panel to capacity-fitting samples.

    One sample per treated unit: criteria are the unit's per-period change
    over its own pre mean net of the control change, the target is the
    unit's pooled post-minus-pre change net of the control change.
    """
    series = delta_series(panel)
    periods = series.post_periods
    samples = []
    ground = GroundSet(periods)
    ctrl_pre = panel.cell_mask(0, 0)
    ctrl_post = panel.cell_mask(0, 1)
    ctrl_change = panel.outcome[ctrl_post].mean() - panel.outcome[ctrl_pre].mean()
    for u in np.unique(panel.unit[panel.treated == 1]):
        rows = panel.unit == u
        pre = rows & (panel.post == 0)
        post = rows & (panel.post == 1)
        if not pre.any() or not post.any():
            continue
        base = panel.outcome[pre].mean()
        f = []
        for k, t in enumerate(periods):
            r = post & (panel.period == t)
            if not r.any():
                break
            f.append(panel.outcome[r].mean() - base - series.delta_control[k])
        else:
            e = panel.outcome[post].mean() - base - ctrl_change
            samples.append(cf.Sample(cf.ValuedFunction(ground, np.array(f)), float(e)))
    if not samples:
        raise PanelError("no treated unit observed in every post period")
    return samples


def cmd_fit_capacity(cfg: dict, out) -> int:
    if bool(cfg["samples"]) == bool(cfg["from_panel"]):
        raise UsageError("fit-capacity needs exactly one of --samples or --from-panel")
    if cfg["samples"]:
        samples = cf.read_samples_csv(cfg["samples"])
        source = {"samples": str(cfg["samples"])}
    else:
        samples = panel_samples(read_panel_csv(cfg["from_panel"]))
        source = {"from_panel": str(cfg["from_panel"]), "experimental": True}
    mode = cfg["mode"]
    tol, eps = float(cfg["tol"]), float(cfg["epsilon"])
    if mode == "full":
        fit = cf.fit_capacity(samples, tol=tol, epsilon=eps, start=cfg["start"])
    elif mode == "symmetric":
        fit = cf.fit_symmetric(samples, tol=tol, epsilon=eps)
    elif mode == "k-additive":
        if cfg["k"] is None:
            raise UsageError("--mode k-additive requires --k")
        fit = cf.fit_k_additive(samples, int(cfg["k"]), tol=tol, epsilon=eps)
    else:
        raise UsageError(f"unknown mode {mode!r}")
    validity = cf.check_fit(fit)
    payload = fit.to_dict()
    payload["diagnostics"].update({
        "rms": fit.rms(samples),
        "n_samples": len(samples),
        "higher_order_mobius_max": cf.higher_order_mobius(fit, 1),
        "valid": validity.is_capacity,
        "source": source,
        "config": cfg,
    })
    text = _dump(payload)
    if cfg["out"]:
        _write_text(cfg["out"], text + "\n")
    if cfg["json"]:
        print(text, file=out)
    else:
        d = payload["diagnostics"]
        if "experimental" in source:
            print("EXPERIMENTAL: samples derived from panel data", file=out)
        for key in ("mode", "n_samples", "objective", "kkt_residual", "rms",
                    "higher_order_mobius_max", "iterations", "active_constraints", "valid"):
            print(f"{key}: {d[key]!r}", file=out)
        print("config: " + json.dumps(cfg, sort_keys=True), file=out)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "trend": cmd_trend,
    "estimate": cmd_estimate,
    "replicate": cmd_replicate,
    "fit-capacity": cmd_fit_capacity,
}


def main(argv: Optional[List[str]] = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not args.command:
            parser.print_help(sys.stderr)
            return EXIT_INPUT
        cfg = resolve_config(args.command, args)
        return COMMANDS[args.command](cfg, out)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"solver failure: {exc}; best residual {exc.best.residual!r}", file=sys.stderr)
        return EXIT_SOLVER
    except (PanelError, cf.FitError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
