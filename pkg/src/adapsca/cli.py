"""Command-line entry point: ``adapsca run | convergence | replay``."""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from dataclasses import asdict, fields, replace
from pathlib import Path

from . import __version__, _backend
from .errors import ConfigError, LocalizationError
from .experiments import (METHODS, PRESETS, SWARM_METHODS, Scenario, aggregate, check_methods,
                          convergence_csv, run_deployment, run_scenario, runs_csv, summary_json,
                          table)
from .network import Deployment
from .swarm import SwarmParams

OUT_ENV = "ADAPSCA_OUT"
DEFAULT_OUT = "adapsca-out"

SCENARIO_KEYS = ("nodes", "anchor_ratio", "range", "runs", "noise_sigma")
CONFIG_KEYS = {"scenario", "methods", "seed", "refine_passes", "workers", "params",
               "run_index", *SCENARIO_KEYS}
PARAM_FIELDS = [f.name for f in fields(SwarmParams) if f.name != "comm_range"]


def _param_flag(name: str) -> str:
    return "--" + name.replace("_", "-")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adapsca", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    sup = argparse.SUPPRESS
    common.add_argument("--config", help="JSON config or a previous manifest.json")
    common.add_argument("--scenario", default=sup,
                        help="preset name(s) s1..s4, comma separated, or 'all'")
    common.add_argument("--nodes", type=int, default=sup)
    common.add_argument("--anchor-ratio", dest="anchor_ratio", type=float, default=sup)
    common.add_argument("--range", "--comm-range", dest="range", type=float, default=sup)
    common.add_argument("--runs", type=int, default=sup)
    common.add_argument("--seed", type=int, default=sup)
    common.add_argument("--methods", default=sup, help="comma separated subset of " + ",".join(METHODS))
    common.add_argument("--out", default=None,
                        help=f"output directory (default: ${OUT_ENV} or ./{DEFAULT_OUT})")
    common.add_argument("--refine-passes", dest="refine_passes", type=int, default=sup)
    common.add_argument("--noise-sigma", dest="noise_sigma", type=float, default=sup)
    common.add_argument("--workers", type=int, default=sup, help="threads for independent runs")
    common.add_argument("-q", "--quiet", action="store_true")
    swarm = common.add_argument_group("swarm parameters")
    for name in PARAM_FIELDS:
        kind = int if name in ("max_iters", "n_particles") else float
        swarm.add_argument(_param_flag(name), dest="param_" + name, type=kind, default=sup)

    p_run = sub.add_parser("run", parents=[common], help="Monte-Carlo comparison")
    p_run.add_argument("--save-deployments", action="store_true",
                       help="also write each run's deployment as JSON (for replay)")
    sub.add_parser("convergence", parents=[common], help="mean convergence curves")
    p_rep = sub.add_parser("replay", parents=[common], help="run methods on a saved deployment")
    p_rep.add_argument("deployment", help="deployment JSON file")
    p_rep.add_argument("--run-index", dest="run_index", type=int, default=sup,
                       help="run index used to key the random streams (default 0)")
    return parser


def load_config_file(path: str) -> dict:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if isinstance(doc, dict) and "config" in doc and "artifacts" in doc:
        doc = doc["config"]
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(doc) - CONFIG_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    params = doc.get("params", {})
    if not isinstance(params, dict):
        raise ConfigError("'params' must be an object")
    bad = set(params) - set(PARAM_FIELDS)
    if bad:
        raise ConfigError(f"unknown params key(s): {sorted(bad)}")
    return doc


def resolve_config(args: argparse.Namespace, command: str) -> dict:
    """Merge preset defaults < config file < explicit flags."""
    file_cfg = load_config_file(args.config) if args.config else {}
    flags = vars(args)
    cfg: dict = {
        "scenario": "s1",
        "methods": list(SWARM_METHODS if command == "convergence" else METHODS),
        "seed": 0,
        "refine_passes": 2,
        "workers": 1,
        "params": {},
    }
    for key, val in file_cfg.items():
        cfg[key] = dict(val) if key == "params" else val
    for key in CONFIG_KEYS - {"params"}:
        if key in flags:
            cfg[key] = flags[key]
    for name in PARAM_FIELDS:
        if "param_" + name in flags:
            cfg["params"][name] = flags["param_" + name]
    if isinstance(cfg["methods"], str):
        cfg["methods"] = [m.strip() for m in cfg["methods"].split(",") if m.strip()]
    cfg["methods"] = list(check_methods(cfg["methods"]))
    if command == "convergence" and "dvhop" in cfg["methods"]:
        raise ConfigError("dvhop has no iterative trace; convergence takes pso, scapso, adapscapso")
    if command == "replay":
        cfg.setdefault("run_index", 0)
        for key in ("scenario", *SCENARIO_KEYS):
            cfg.pop(key, None)
        cfg["noise_sigma"] = file_cfg.get("noise_sigma", flags.get("noise_sigma", 0.0))
    for key in ("seed", "refine_passes", "workers"):
        if not isinstance(cfg[key], int) or isinstance(cfg[key], bool):
            raise ConfigError(f"'{key}' must be an integer")
    if cfg["seed"] < 0:
        raise ConfigError("seed must be non-negative")
    if cfg["refine_passes"] < 1:
        raise ConfigError("refine_passes must be >= 1")
    if cfg["workers"] < 1:
        raise ConfigError("workers must be >= 1")
    resolved = asdict(swarm_params(cfg))
    resolved.pop("comm_range")
    cfg["params"] = resolved
    if command != "replay":
        scenarios(cfg)
    return cfg


def swarm_params(cfg: dict) -> SwarmParams:
    try:
        return replace(SwarmParams(), **cfg["params"])
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


def scenarios(cfg: dict) -> list[Scenario]:
    names = str(cfg["scenario"])
    names = list(PRESETS) if names == "all" else [n.strip() for n in names.split(",")]
    out = []
    for name in names:
        if name not in PRESETS:
            raise ConfigError(f"unknown scenario '{name}'; presets are {list(PRESETS)}")
        s = PRESETS[name]
        over = {}
        for key, attr in (("nodes", "n_nodes"), ("anchor_ratio", "anchor_ratio"),
                          ("range", "comm_range"), ("runs", "n_runs"),
                          ("noise_sigma", "noise_sigma")):
            if key in cfg:
                over[attr] = cfg[key]
        s = replace(s, **over)
        shape = (s.n_nodes, s.anchor_ratio, s.comm_range)
        if shape != (PRESETS[name].n_nodes, PRESETS[name].anchor_ratio, PRESETS[name].comm_range):
            # explicit fields that match a preset keep that preset's label
            match = [k for k, v in PRESETS.items()
                     if (v.n_nodes, v.anchor_ratio, v.comm_range) == shape]
            s = replace(s, name=match[0] if match else "custom")
        out.append(s)
    return out


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode()).hexdigest()


def write_outputs(out_dir: Path, files: dict[str, str], command: str, cfg: dict,
                  extra: dict | None = None) -> None:
    """Write every artifact plus a manifest; on failure remove what was written."""
    manifest = {
        "command": command,
        "config": cfg,
        "version": __version__,
        "kernel": _backend.NAME,
        "artifacts": {name: _digest(text) for name, text in files.items()},
    }
    if extra:
        manifest.update(extra)
    files = dict(files)
    files["manifest.json"] = json.dumps(manifest, indent=2, sort_keys=True) + "\n"
    written = []
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        for name, text in files.items():
            path = out_dir / name
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text)
            written.append(path)
    except BaseException:
        for path in written:
            path.unlink(missing_ok=True)
        raise


def _progress(quiet: bool, label: str):
    if quiet:
        return None

    def show(done: int, total: int) -> None:
        end = "\n" if done == total else ""
        print(f"\r[{label}] run {done}/{total}", end=end, file=sys.stderr, flush=True)
    return show


def cmd_run(args, cfg: dict, out_dir: Path, command: str = "run") -> int:
    params = swarm_params(cfg)
    reports = []
    deployments = {}
    for s in scenarios(cfg):
        rep = run_scenario(s, cfg["methods"], cfg["seed"], params, cfg["refine_passes"],
                           cfg["workers"], _progress(args.quiet, s.name))
        reports.append(rep)
        if getattr(args, "save_deployments", False):
            from .network import deploy
            from .rng import DEPLOY_KEY, stream
            for run in range(s.n_runs):
                d = deploy(s.n_nodes, s.anchor_ratio, s.area, s.comm_range,
                           stream(cfg["seed"], run, DEPLOY_KEY))
                deployments[f"deployments/{s.name}_run{run:03d}.json"] = d.to_json()
    if command == "convergence":
        files = {"convergence.csv": convergence_csv(reports)}
    else:
        files = {"runs.csv": runs_csv(reports), "convergence.csv": convergence_csv(reports),
                 "summary.json": summary_json(reports), **deployments}
    write_outputs(out_dir, files, command, cfg,
                  {"scenarios": [asdict(r.scenario) for r in reports]})
    if command == "convergence":
        for r in reports:
            for m, curve in r.convergence.items():
                print(f"{r.scenario.name} {m:>11}: first {curve[0]:.4f}  last {curve[-1]:.4f}")
    else:
        print(table(reports))
        doc = json.loads(files["summary.json"])
        if "pooled_reduction_pct" in doc:
            red = ", ".join(f"{m} {v:.2f}%" for m, v in doc["pooled_reduction_pct"].items()
                            if v is not None)
            print(f"pooled error reduction of adapscapso vs {red}")
    print(f"wrote {len(files) + 1} files to {out_dir}", file=sys.stderr)
    return 0


def cmd_replay(args, cfg: dict, out_dir: Path) -> int:
    d = Deployment.load(args.deployment)
    params = swarm_params(cfg)
    params = replace(params, comm_range=d.comm_range)
    run = cfg["run_index"]
    outcome = run_deployment(d, run, cfg["methods"], cfg["seed"], params,
                             cfg["refine_passes"], cfg["noise_sigma"], keep_results=True)
    s = Scenario("replay", d.n_nodes, len(d.anchors) / d.n_nodes, d.comm_range,
                 (d.area_width, d.area_height), 1, cfg["noise_sigma"])
    outcome.run = 0
    rep = aggregate(s, cfg["methods"], cfg["seed"], params, [outcome])
    nodes = "".join(outcome.results[m].to_csv(d, method=m, header=(i == 0))
                    for i, m in enumerate(cfg["methods"]))
    files = {"nodes.csv": nodes, "runs.csv": runs_csv([rep]),
             "summary.json": summary_json([rep])}
    if any(m in SWARM_METHODS for m in cfg["methods"]):
        files["convergence.csv"] = convergence_csv([rep])
    write_outputs(out_dir, files, "replay", cfg,
                  {"deployment": {"path": str(args.deployment), "sha256": d.digest()}})
    print(table([rep]))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out_dir = Path(args.out or os.environ.get(OUT_ENV) or DEFAULT_OUT)
    try:
        cfg = resolve_config(args, args.command)
        if args.command == "replay":
            return cmd_replay(args, cfg, out_dir)
        return cmd_run(args, cfg, out_dir, args.command)
    except LocalizationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
