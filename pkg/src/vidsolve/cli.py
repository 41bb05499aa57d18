"""Command-line front end: reproducible generate/degrade/solve/ablate runs.

Run configuration is a flat key=value file with [data], [op], [solver],
[denoiser], and [output] sections; any flag overrides its config key, unknown
keys are hard errors, and every producing run writes the fully resolved
configuration next to its outputs.

Exit codes: 0 ok, 2 configuration error, 3 numeric failure, 4 external
denoiser failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .baselines import AdmmConfig, admm_tv, standalone_cg
from .denoiser import EpsModel, ExternalEps, OracleGaussianEps, SmootherEps, ZeroEps
from .errors import (
    ConfigError,
    EtaTooLarge,
    ExternalProtocolError,
    NonFiniteEncountered,
    VidsolveError,
)
from .metrics import inter_batch_diff, psnr, report, residual, ssim
from .operators import degrade, infer_in_shape, parse_op, temporal_psf
from .sampler import SolverConfig, blind_deblur, solve
from .schedule import default_schedule
from .video import VideoTensor, load_svtf, save_svtf, synth_video

SECTIONS: dict[str, tuple[str, ...]] = {
    "data": ("input", "ref"),
    "op": ("grammar", "noise_std", "seed"),
    "solver": ("nfe", "eta", "l", "update", "gamma", "noise_sync", "seed", "trace"),
    "denoiser": ("kind", "mu", "sigma0", "scale", "bridge_cmd", "timeout"),
    "output": ("dir",),
}

DEFAULTS: dict[str, dict[str, str]] = {
    "data": {},
    "op": {},
    "solver": {
        "nfe": "20",
        "eta": "0.15",
        "l": "5",
        "update": "cg",
        "gamma": "0.5",
        "noise_sync": "on",
        "seed": "0",
        "trace": "off",
    },
    "denoiser": {"kind": "smoother", "mu": "0.5", "sigma0": "0.5", "scale": "1.0", "timeout": "5.0"},
    "output": {"dir": "runs/out"},
}

_BOOL = {"on": True, "true": True, "1": True, "yes": True,
         "off": False, "false": False, "0": False, "no": False}


def _merge(base: dict, extra: dict) -> dict:
    out = {sec: dict(vals) for sec, vals in base.items()}
    for sec, vals in extra.items():
        out.setdefault(sec, {}).update(vals)
    return out


def load_config(path: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser()
    try:
        with open(path, encoding="utf-8") as f:
            parser.read_file(f)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    result: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown config section [{section}]")
        for key, value in parser.items(section):
            if key not in SECTIONS[section]:
                raise ConfigError(f"unknown config key [{section}] {key}")
            result.setdefault(section, {})[key] = value
    return result


def write_resolved(cfg: dict, path: Path) -> None:
    parser = configparser.ConfigParser()
    for section in SECTIONS:
        values = cfg.get(section, {})
        if values:
            parser[section] = {k: str(v) for k, v in values.items()}
    with open(path, "w", encoding="utf-8") as f:
        parser.write(f)


def _get(cfg: dict, section: str, key: str, default=None) -> str | None:
    return cfg.get(section, {}).get(key, default)


def _get_int(cfg, section, key):
    raw = _get(cfg, section, key)
    try:
        return int(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key} must be an integer, got {raw!r}") from exc


def _get_float(cfg, section, key):
    raw = _get(cfg, section, key)
    try:
        return float(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"[{section}] {key} must be a number, got {raw!r}") from exc


def _get_bool(cfg, section, key):
    raw = str(_get(cfg, section, key)).lower()
    if raw not in _BOOL:
        raise ConfigError(f"[{section}] {key} must be on/off, got {raw!r}")
    return _BOOL[raw]


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = _merge(DEFAULTS, {})
    if getattr(args, "config", None):
        cfg = _merge(cfg, load_config(args.config))
    overrides: dict[str, dict[str, str]] = {}
    flag_map = {
        "input": ("data", "input"),
        "ref": ("data", "ref"),
        "op": ("op", "grammar"),
        "nfe": ("solver", "nfe"),
        "eta": ("solver", "eta"),
        "l": ("solver", "l"),
        "update": ("solver", "update"),
        "gamma": ("solver", "gamma"),
        "noise_sync": ("solver", "noise_sync"),
        "seed": ("solver", "seed"),
        "trace": ("solver", "trace"),
        "denoiser": ("denoiser", "kind"),
        "mu": ("denoiser", "mu"),
        "sigma0": ("denoiser", "sigma0"),
        "scale": ("denoiser", "scale"),
        "bridge_cmd": ("denoiser", "bridge_cmd"),
        "timeout": ("denoiser", "timeout"),
        "out_dir": ("output", "dir"),
    }
    for flag, (section, key) in flag_map.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides.setdefault(section, {})[key] = str(value)
    return _merge(cfg, overrides)


def build_solver_config(cfg: dict) -> SolverConfig:
    update = str(_get(cfg, "solver", "update")).lower()
    try:
        return SolverConfig(
            nfe=_get_int(cfg, "solver", "nfe"),
            eta=_get_float(cfg, "solver", "eta"),
            l=_get_int(cfg, "solver", "l"),
            update=update,
            gamma=_get_float(cfg, "solver", "gamma"),
            noise_sync=_get_bool(cfg, "solver", "noise_sync"),
            seed=_get_int(cfg, "solver", "seed"),
            trace=_get_bool(cfg, "solver", "trace"),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def build_denoiser(cfg: dict) -> EpsModel:
    kind = str(_get(cfg, "denoiser", "kind")).lower()
    if kind == "zero":
        return ZeroEps()
    if kind == "oracle_gaussian":
        return OracleGaussianEps(_get_float(cfg, "denoiser", "mu"), _get_float(cfg, "denoiser", "sigma0"))
    if kind == "smoother":
        return SmootherEps(_get_float(cfg, "denoiser", "scale"))
    if kind == "external":
        cmd = _get(cfg, "denoiser", "bridge_cmd")
        if not cmd:
            raise ConfigError("[denoiser] bridge_cmd required for kind=external")
        return ExternalEps(cmd, timeout=_get_float(cfg, "denoiser", "timeout"))
    raise ConfigError(f"unknown denoiser kind {kind!r}")


def _load_measurement(cfg: dict) -> tuple[VideoTensor, str]:
    path = _get(cfg, "data", "input")
    if not path:
        raise ConfigError("no input measurement given ([data] input or --input)")
    if not Path(path).exists():
        raise ConfigError(f"input file not found: {path}")
    return load_svtf(path), path


def _resolve_grammar(cfg: dict, input_path: str) -> str:
    grammar = _get(cfg, "op", "grammar")
    if grammar:
        return grammar
    sidecar = Path(str(input_path) + ".op.json")
    if sidecar.exists():
        return json.loads(sidecar.read_text())["op"]
    raise ConfigError("no operator given (--op, [op] grammar, or an .op.json sidecar)")


def _load_ref(cfg: dict) -> VideoTensor | None:
    path = _get(cfg, "data", "ref")
    if not path:
        return None
    if not Path(path).exists():
        raise ConfigError(f"reference file not found: {path}")
    return load_svtf(path)


def _prepare_out_dir(cfg: dict) -> Path:
    out = Path(_get(cfg, "output", "dir"))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _emit_metrics(x: VideoTensor, ref: VideoTensor, a, y, out_path: Path) -> dict:
    rep = report(x, ref, a, y).to_dict()
    out_path.write_text(json.dumps(rep, indent=2) + "\n")
    return rep


# --- subcommands ----------------------------------------------------------------


def cmd_generate(args) -> int:
    clip = synth_video(args.kind, args.frames, args.channels, args.height, args.width, args.seed)
    save_svtf(clip, args.out)
    sidecar = {
        "kind": args.kind,
        "frames": args.frames,
        "channels": args.channels,
        "height": args.height,
        "width": args.width,
        "seed": args.seed,
    }
    Path(str(args.out) + ".gen.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    print(f"wrote {args.out} {clip.shape}")
    return 0


def cmd_degrade(args) -> int:
    if not Path(args.input).exists():
        raise ConfigError(f"input file not found: {args.input}")
    clean = load_svtf(args.input)
    a = parse_op(args.op, clean.shape)
    measurement = degrade(clean, a, args.noise_std, args.seed)
    save_svtf(measurement, args.out)
    sidecar = {
        "op": args.op,
        "noise_std": args.noise_std,
        "seed": args.seed,
        "in_shape": list(clean.shape),
        "out_shape": list(measurement.shape),
    }
    Path(str(args.out) + ".op.json").write_text(json.dumps(sidecar, indent=2) + "\n")
    print(f"wrote {args.out} {measurement.shape} via {a.kind!r}")
    return 0


def _write_trace(trace, out_dir: Path, dump_tweedie: bool) -> None:
    with open(out_dir / "trace.jsonl", "w", encoding="utf-8") as f:
        for record in trace.records():
            f.write(json.dumps(record) + "\n")
    if dump_tweedie:
        for step in trace.steps:
            if step.tweedie_batch is not None:
                save_svtf(VideoTensor(step.tweedie_batch), out_dir / f"tweedie_t{step.t:04d}.svtf")


def cmd_solve(args) -> int:
    cfg = resolve_config(args)
    y, input_path = _load_measurement(cfg)
    grammar = _resolve_grammar(cfg, input_path)
    cfg.setdefault("op", {})["grammar"] = grammar
    a = parse_op(grammar, infer_in_shape(grammar, y.shape))
    solver_cfg = build_solver_config(cfg)
    model = build_denoiser(cfg)
    out_dir = _prepare_out_dir(cfg)
    write_resolved(cfg, out_dir / "resolved.cfg")
    try:
        recon, trace = solve(a, y, model, default_schedule(), solver_cfg)
    finally:
        if isinstance(model, ExternalEps):
            model.close()
    save_svtf(recon, out_dir / "recon.svtf")
    _write_trace(trace, out_dir, solver_cfg.trace)
    ref = _load_ref(cfg)
    if ref is not None:
        rep = _emit_metrics(recon, ref, a, y, out_dir / "metrics.json")
        print(json.dumps(rep))
    print(f"wrote {out_dir / 'recon.svtf'}")
    return 0


def cmd_blind(args) -> int:
    cfg = resolve_config(args)
    y, _ = _load_measurement(cfg)
    solver_cfg = build_solver_config(cfg)
    model = build_denoiser(cfg)
    grid = [int(v) if args.family == "uniform" else float(v) for v in args.grid.split(",")]
    pre = None
    if args.pre_restoration:
        if not Path(args.pre_restoration).exists():
            raise ConfigError(f"pre-restoration file not found: {args.pre_restoration}")
        pre = load_svtf(args.pre_restoration)
    out_dir = _prepare_out_dir(cfg)
    write_resolved(cfg, out_dir / "resolved.cfg")
    try:
        recon, initial, refined = blind_deblur(
            y, model, default_schedule(), solver_cfg, pre, grid, args.family
        )
    finally:
        if isinstance(model, ExternalEps):
            model.close()
    save_svtf(recon, out_dir / "recon.svtf")
    psf_info = {"initial": initial.describe(), "refined": refined.describe()}
    (out_dir / "psf.json").write_text(json.dumps(psf_info, indent=2) + "\n")
    ref = _load_ref(cfg)
    if ref is not None:
        a = temporal_psf(refined, y.shape)
        rep = _emit_metrics(recon, ref, a, y, out_dir / "metrics.json")
        print(json.dumps(rep))
    print(f"estimated PSFs: {psf_info}")
    return 0


def cmd_baseline(args) -> int:
    cfg = resolve_config(args)
    y, input_path = _load_measurement(cfg)
    grammar = _resolve_grammar(cfg, input_path)
    cfg.setdefault("op", {})["grammar"] = grammar
    a = parse_op(grammar, infer_in_shape(grammar, y.shape))
    out_dir = _prepare_out_dir(cfg)
    write_resolved(cfg, out_dir / "resolved.cfg")
    if args.method == "cg":
        recon = standalone_cg(a, y, args.iters)
    else:
        admm_cfg = AdmmConfig(
            rho=args.rho,
            lam=args.lam,
            outer=args.outer,
            inner=args.inner,
            axes=tuple(args.tv_axes.split(",")),
        )
        recon, history = admm_tv(a, y, admm_cfg)
        (out_dir / "objective.json").write_text(json.dumps(history) + "\n")
    save_svtf(recon, out_dir / "recon.svtf")
    ref = _load_ref(cfg)
    if ref is not None:
        rep = _emit_metrics(recon, ref, a, y, out_dir / "metrics.json")
        print(json.dumps(rep))
    print(f"wrote {out_dir / 'recon.svtf'}")
    return 0


def cmd_metrics(args) -> int:
    for path in (args.a, args.b):
        if not Path(path).exists():
            raise ConfigError(f"file not found: {path}")
    x = load_svtf(args.a)
    ref = load_svtf(args.b)
    rep = report(x, ref).to_dict()
    text = json.dumps(rep, indent=2)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0


def cmd_ablate(args) -> int:
    cfg = resolve_config(args)
    y, input_path = _load_measurement(cfg)
    ref = _load_ref(cfg)
    if ref is None:
        raise ConfigError("ablate needs a ground-truth reference ([data] ref or --ref)")
    grammar = _resolve_grammar(cfg, input_path)
    cfg.setdefault("op", {})["grammar"] = grammar
    a = parse_op(grammar, infer_in_shape(grammar, y.shape))
    base = build_solver_config(cfg)
    model = build_denoiser(cfg)
    sync_modes = [_BOOL[s.strip().lower()] for s in args.sync_modes.split(",")]
    updates = [u.strip().lower() for u in args.updates.split(",")]
    etas = [float(v) for v in args.eta_grid.split(",")]
    out_dir = _prepare_out_dir(cfg)
    write_resolved(cfg, out_dir / "resolved.cfg")
    rows = []
    try:
        for sync in sync_modes:
            for update in updates:
                for eta in etas:
                    run_cfg = replace(base, noise_sync=sync, update=update, eta=eta)
                    recon, _ = solve(a, y, model, default_schedule(), run_cfg)
                    rows.append(
                        {
                            "noise_sync": "on" if sync else "off",
                            "update": update,
                            "eta": eta,
                            "psnr_db": psnr(recon, ref),
                            "ssim": ssim(recon, ref),
                            "residual": residual(a, recon, y),
                            "inter_batch_diff": inter_batch_diff(recon),
                        }
                    )
    finally:
        if isinstance(model, ExternalEps):
            model.close()
    csv_path = out_dir / "ablate.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {csv_path} ({len(rows)} rows)")
    return 0


# --- argument parsing --------------------------------------------------------------


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value run configuration file")
    p.add_argument("--input", help="measurement SVTF file")
    p.add_argument("--ref", help="ground-truth SVTF for metrics")
    p.add_argument("--op", help="operator grammar, e.g. 'temporal:uniform:7 | sr:4'")
    p.add_argument("--nfe", type=int)
    p.add_argument("--eta", type=float)
    p.add_argument("--l", type=int, help="CG iterations per step")
    p.add_argument("--update", choices=["cg", "gd"])
    p.add_argument("--gamma", type=float, help="GD step size")
    p.add_argument("--noise-sync", dest="noise_sync", choices=list(_BOOL))
    p.add_argument("--seed", type=int)
    p.add_argument("--trace", choices=list(_BOOL))
    p.add_argument("--denoiser", choices=["zero", "oracle_gaussian", "smoother", "external"])
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma0", type=float)
    p.add_argument("--scale", type=float)
    p.add_argument("--bridge-cmd", dest="bridge_cmd")
    p.add_argument("--timeout", type=float)
    p.add_argument("--out-dir", dest="out_dir")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vidsolve", description=__doc__)
    parser.add_argument("--version", action="version", version=f"vidsolve {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write a synthetic SVTF clip")
    p.add_argument("--kind", default="moving_square", choices=["moving_square", "gradient_drift", "static"])
    p.add_argument("--frames", type=int, default=16)
    p.add_argument("--channels", type=int, default=1)
    p.add_argument("--height", type=int, default=32)
    p.add_argument("--width", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("degrade", help="apply a degradation operator plus noise")
    p.add_argument("--input", required=True)
    p.add_argument("--op", required=True)
    p.add_argument("--noise-std", dest="noise_std", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("solve", help="reconstruct a measurement")
    _add_run_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("blind", help="two-stage blind temporal deblurring")
    _add_run_flags(p)
    p.add_argument("--grid", default="1,3,5,7,9,11,13,15")
    p.add_argument("--family", default="uniform", choices=["uniform", "gaussian"])
    p.add_argument("--pre-restoration", dest="pre_restoration")
    p.set_defaults(func=cmd_blind)

    p = sub.add_parser("baseline", help="classical solvers for comparison")
    _add_run_flags(p)
    p.add_argument("--method", required=True, choices=["cg", "admm-tv"])
    p.add_argument("--iters", type=int, default=100, help="CG iterations (method=cg)")
    p.add_argument("--rho", type=float, default=1.0)
    p.add_argument("--lam", type=float, default=0.001)
    p.add_argument("--outer", type=int, default=30)
    p.add_argument("--inner", type=int, default=20)
    p.add_argument("--tv-axes", dest="tv_axes", default="t,h,w")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("metrics", help="compare two SVTF files")
    p.add_argument("--a", required=True, help="estimate")
    p.add_argument("--b", required=True, help="reference")
    p.add_argument("--out", help="also write the JSON report here")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("ablate", help="sweep noise_sync x update x eta, emit CSV")
    _add_run_flags(p)
    p.add_argument("--eta-grid", dest="eta_grid", default="0,0.2,0.4,0.6,0.8,1.0")
    p.add_argument("--sync-modes", dest="sync_modes", default="on,off")
    p.add_argument("--updates", dest="updates", default="cg,gd")
    p.set_defaults(func=cmd_ablate)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ExternalProtocolError as exc:
        print(f"external denoiser failure: {exc}", file=sys.stderr)
        return 4
    except (NonFiniteEncountered, EtaTooLarge) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (VidsolveError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
