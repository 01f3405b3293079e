"""Command-line front end.

Subcommands mirror the pipeline stages: discretize, horizons, synthesize,
partition, simulate, report, preset.  Configuration is one JSON document with
sections {plant, discretization, horizons, mode, certificate, partition,
simulation, output}; the named presets embed frozen benchmark parameters.

Exit codes: 0 success, 2 configuration error, 3 infeasible or failed
construction, 4 resource cap exceeded.
"""

import argparse
import hashlib
import json
import os
import sys

import numpy as np

from .certificates import certificate_to_dict
from .errors import ConfigError, ConstructionError, InfeasibleError, ResourceCapError
from .horizons import (
    DEFAULT_CAP,
    avg_idle_metric,
    enumerate_horizons,
    horizon_from_text,
    horizon_to_text,
)
from .matrix_core import sym_eig_bounds
from .partition import make_partition, partition_to_dict
from .plant import DiscretePlant, PlantModel
from .presets import DEFAULT_STEPS, PRESET_NAMES, PRESET_NOTES, preset_config
from .simulation import (
    SimConfig,
    default_sine_disturbance,
    prepare,
    read_trace_csv,
    simulate,
    utilization_metrics,
    write_decision_csv,
    write_trace_csv,
)
from .svgplots import emit_plots

ENV_SEED = "ASYNCTRIG_SEED"


def _resolve_seed(flag_seed, fallback: int) -> int:
    """Flag wins over the environment, environment over the configuration."""
    if flag_seed is not None:
        return int(flag_seed)
    env = os.environ.get(ENV_SEED)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"{ENV_SEED} must be an integer, got {env!r}")
    return int(fallback)


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")


def _plant_from_section(sec: dict) -> PlantModel:
    D = sec.get("D")
    return PlantModel(
        A=np.array(sec["A"], dtype=float),
        B=np.array(sec["B"], dtype=float),
        K=np.array(sec["K"], dtype=float),
        blocks=tuple(int(b) for b in sec["blocks"]),
        D=np.array(D, dtype=float) if D is not None else None,
        w_max=float(sec.get("w_max", 0.0)),
    )


def config_from_dict(data: dict) -> SimConfig:
    try:
        plant = _plant_from_section(data["plant"])
        disc = data["discretization"]
        hz = data["horizons"]
        mode = data["mode"]
        sim = data.get("simulation", {})
        cert = data.get("certificate", {})
        part = data.get("partition", {})
        sigma_star = None
        if hz.get("sigma_star"):
            sigma_star = horizon_from_text(str(hz["sigma_star"]))
        disturbance = None
        dd = sim.get("disturbance")
        if dd is not None:
            if dd.get("kind") != "sine":
                raise ConfigError(f"unknown disturbance kind {dd.get('kind')!r}; only 'sine' is built in")
            disturbance = default_sine_disturbance(plant, float(dd.get("pi_multiple", 5.0)))
        return SimConfig(
            plant=plant,
            T=float(disc["T"]),
            l_min=int(hz["l_min"]),
            l_max=int(hz["l_max"]),
            mode=str(mode),
            x0=np.array(sim["x0"], dtype=float),
            beta=float(cert.get("beta", 0.0)),
            gamma=float(cert.get("gamma", 0.0)),
            gamma1=float(cert.get("gamma1", 0.0)),
            gamma2=float(cert.get("gamma2", 0.0)),
            N=int(part.get("N", 0)),
            total_steps=int(sim.get("total_steps", DEFAULT_STEPS)),
            seed=int(sim.get("seed", 0)),
            substeps_per_T=int(disc.get("substeps_per_T", 100)),
            sigma_star=sigma_star,
            disturbance=disturbance,
            horizon_cap=int(hz.get("cap", DEFAULT_CAP)),
        )
    except KeyError as exc:
        raise ConfigError(f"config is missing required key {exc.args[0]!r}")


def _load_sim_config(args):
    """Returns (SimConfig, semantic dict for the digest, preset name or None)."""
    preset = getattr(args, "preset", None)
    path = getattr(args, "config", None)
    if preset and path:
        raise ConfigError("give either --config or --preset, not both")
    if preset:
        cfg = preset_config(preset)
        semantic = {"preset": preset}
    elif path:
        data = load_config(path)
        cfg = config_from_dict(data)
        semantic = data
    else:
        raise ConfigError("provide --config FILE or --preset NAME")
    cfg.seed = _resolve_seed(getattr(args, "seed", None), cfg.seed)
    steps = getattr(args, "steps", None)
    if steps is not None:
        cfg.total_steps = int(steps)
    if "preset" in semantic:
        semantic = {"preset": preset, "seed": cfg.seed, "total_steps": cfg.total_steps}
    else:
        semantic = dict(semantic)
        semantic.setdefault("simulation", {})
        semantic["simulation"] = dict(semantic["simulation"])
        semantic["simulation"]["seed"] = cfg.seed
        semantic["simulation"]["total_steps"] = cfg.total_steps
    return cfg, semantic, preset


def config_digest(semantic: dict) -> str:
    blob = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _cert_summary(cert) -> dict:
    full = certificate_to_dict(cert)
    lo, hi = sym_eig_bounds(cert.P)
    out = {
        "kind": full["kind"],
        "sigma_star": full["sigma_star"],
        "beta": full["beta"],
        "lambda_min_P": float(lo),
        "lambda_max_P": float(hi),
    }
    for key in ("gamma", "gamma1", "gamma2", "mu", "psi", "varpi", "chi", "chi_linear"):
        if key in full:
            out[key] = full[key]
    return out


def _json_default(o):
    if isinstance(o, (np.integer,)):
        return int(o)
    if isinstance(o, (np.floating,)):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON-serializable: {type(o)!r}")


def _write_json(payload: dict, path):
    text = json.dumps(payload, indent=2, default=_json_default)
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _print_metrics(metrics: dict):
    for key in (
        "steps",
        "readings",
        "utilization_reduction",
        "final_V",
        "min_V_ratio",
        "mu",
        "guub_entered_boundary",
        "guub_contained",
    ):
        if key in metrics:
            print(f"{key} {metrics[key]!r}")


def cmd_discretize(args) -> int:
    cfg, _, _ = _load_sim_config(args)
    dp = DiscretePlant.from_plant(cfg.plant, cfg.T)
    _write_json({"T": cfg.T, "A_T": dp.A_T.tolist(), "B_T": dp.B_T.tolist()}, args.out)
    return 0


def cmd_horizons(args) -> int:
    horizons = enumerate_horizons(args.m, args.lmin, args.lmax, args.cap)
    for sigma in horizons:
        print(f"{horizon_to_text(sigma)} {avg_idle_metric(sigma, args.m)!r}")
    return 0


def cmd_synthesize(args) -> int:
    cfg, _, _ = _load_sim_config(args)
    _, _, cert, _, _, _ = prepare(cfg, with_tables=False)
    _write_json(certificate_to_dict(cert), args.out)
    return 0


def cmd_partition(args) -> int:
    if args.config or args.preset:
        cfg, _, _ = _load_sim_config(args)
        dim, N = 2 * cfg.plant.n, cfg.N
        if N < 1:
            raise ConfigError("the selected configuration has no partition section")
    else:
        if args.dim is None or args.regions is None:
            raise ConfigError("provide --dim and --regions (or --config/--preset)")
        dim, N = args.dim, args.regions
    regions = make_partition(dim, N)
    _write_json(partition_to_dict(regions), args.out)
    return 0


def _run_and_emit(cfg: SimConfig, semantic: dict, preset_name, args) -> int:
    outdir = args.out_dir
    os.makedirs(outdir, exist_ok=True)
    seeds = [cfg.seed]
    if getattr(args, "sweep", None):
        try:
            seeds = [int(s) for s in args.sweep.split(",") if s.strip() != ""]
        except ValueError:
            raise ConfigError(f"--sweep expects comma-separated integers, got {args.sweep!r}")
        if not seeds:
            raise ConfigError("--sweep got an empty seed list")
    prepared = prepare(cfg)
    cert = prepared[2]
    outputs = []
    cert_path = os.path.join(outdir, "certificate.json")
    _write_json(certificate_to_dict(cert), cert_path)
    outputs.append(cert_path)
    all_metrics = {}
    for seed in seeds:
        cfg.seed = seed
        trace = simulate(cfg, prepared)
        suffix = f"_{seed}" if len(seeds) > 1 else ""
        trace_path = os.path.join(outdir, f"trace{suffix}.csv")
        dec_path = os.path.join(outdir, f"decisions{suffix}.csv")
        write_trace_csv(trace, trace_path)
        write_decision_csv(trace, dec_path)
        outputs += [trace_path, dec_path]
        all_metrics[seed] = trace.metrics
        if getattr(args, "plots", False):
            mu = trace.metrics.get("mu", 0.0)
            outputs += emit_plots(trace, os.path.join(outdir, f"plots{suffix}"), mu=mu)
    manifest = {
        "config_digest": config_digest(semantic),
        "preset": preset_name,
        "certificate": _cert_summary(cert),
        "metrics": all_metrics[seeds[-1]] if len(seeds) == 1 else {str(s): m for s, m in all_metrics.items()},
        "outputs": outputs,
    }
    manifest_path = os.path.join(outdir, "manifest.json")
    _write_json(manifest, manifest_path)
    outputs.append(manifest_path)
    for seed in seeds:
        if preset_name:
            print(f"preset {preset_name} seed {seed}")
        else:
            print(f"mode {cfg.mode} seed {seed}")
        _print_metrics(all_metrics[seed])
    print(f"manifest {manifest_path}")
    return 0


def cmd_simulate(args) -> int:
    cfg, semantic, preset_name = _load_sim_config(args)
    return _run_and_emit(cfg, semantic, preset_name, args)


def cmd_preset(args) -> int:
    if args.list or not args.name:
        for name in PRESET_NAMES:
            print(f"{name}: {PRESET_NOTES[name]}")
        return 0
    args.preset = args.name
    args.config = None
    cfg, semantic, preset_name = _load_sim_config(args)
    return _run_and_emit(cfg, semantic, preset_name, args)


def cmd_report(args) -> int:
    trace = read_trace_csv(args.trace)
    m = args.m if args.m is not None else max(int(trace.actions.max()), 1)
    metrics = utilization_metrics(trace, m)
    paths = emit_plots(trace, args.out_dir, mu=args.mu)
    _print_metrics(metrics)
    for p in paths:
        print(f"plot {p}")
    return 0


def _add_source_flags(sp, with_run_flags: bool = False):
    sp.add_argument("--config", help="configuration JSON file")
    sp.add_argument("--preset", choices=PRESET_NAMES, help="named benchmark configuration")
    sp.add_argument("--seed", type=int, default=None, help=f"tie-break seed (overrides {ENV_SEED} and config)")
    if with_run_flags:
        sp.add_argument("--steps", type=int, default=None, help="total base steps")
        sp.add_argument("--out-dir", default="out", help="output directory")
        sp.add_argument("--sweep", default=None, help="comma-separated seeds; one trace per seed")
        sp.add_argument("--plots", action="store_true", help="also render the SVG views")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="asynctrig",
        description="Self-triggered sensor scheduling for sampled-data linear systems.",
    )
    sub = p.add_subparsers(dest="cmd", required=True)

    sp = sub.add_parser("discretize", help="print the exact ZOH pair (A_T, B_T)")
    _add_source_flags(sp)
    sp.add_argument("--out", default=None, help="write JSON here instead of stdout")
    sp.set_defaults(func=cmd_discretize)

    sp = sub.add_parser("horizons", help="enumerate scheduling horizons with their idle metrics")
    sp.add_argument("--m", type=int, required=True, help="number of sensors")
    sp.add_argument("--lmin", type=int, required=True)
    sp.add_argument("--lmax", type=int, required=True)
    sp.add_argument("--cap", type=int, default=DEFAULT_CAP)
    sp.set_defaults(func=cmd_horizons)

    sp = sub.add_parser("synthesize", help="build the certificate and print it as JSON")
    _add_source_flags(sp)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_synthesize)

    sp = sub.add_parser("partition", help="build the conic state-space partition")
    _add_source_flags(sp)
    sp.add_argument("--dim", type=int, default=None, help="ambient dimension (2n)")
    sp.add_argument("--regions", type=int, default=None, help="number of cones")
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_partition)

    sp = sub.add_parser("simulate", help="run the closed loop and write trace CSVs")
    _add_source_flags(sp, with_run_flags=True)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("report", help="summarize a trace CSV and render SVG views")
    sp.add_argument("--trace", required=True, help="trace CSV produced by simulate")
    sp.add_argument("--m", type=int, default=None, help="sensor count (default: largest action seen)")
    sp.add_argument("--mu", type=float, default=0.0, help="ultimate bound to overlay on the V plot")
    sp.add_argument("--out-dir", default="out", help="directory for the SVG files")
    sp.set_defaults(func=cmd_report)

    sp = sub.add_parser("preset", help="run a named benchmark end to end")
    sp.add_argument("name", nargs="?", choices=PRESET_NAMES, help="omit (or --list) to list presets")
    sp.add_argument("--list", action="store_true", help="list preset names and leave")
    sp.add_argument("--seed", type=int, default=None)
    sp.add_argument("--steps", type=int, default=None)
    sp.add_argument("--out-dir", default="out")
    sp.add_argument("--sweep", default=None)
    sp.add_argument("--plots", action="store_true")
    sp.set_defaults(func=cmd_preset)

    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (InfeasibleError, ConstructionError) as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except ResourceCapError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return 4
    except (ValueError, KeyError, TypeError, OSError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
