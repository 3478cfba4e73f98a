"""Command-line front end: run configured experiments, emit CSV/JSON artifacts.

Every command writes a run manifest (even on failure).  Data files carry a
'#'-prefixed metadata block and contain nothing time- or machine-dependent,
so fixed (config, seed, samples) runs are byte-identical for any worker
count.

Exit codes: 0 ok, 2 configuration/usage error, 3 runaway trajectory,
4 Monte-Carlo/analytic verification mismatch.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__, density, mapping, moments
from .config import ALL_KEYS, load_config, validate
from .errors import ConfigError, OutOfRange, PumpRecoilError, RunawayTrajectory
from .trajectory import DEFAULT_MAX_EMISSIONS, DEFAULT_SEED, SamplerPlan, sample_batch
from .waiting_time import WaitingTimeModel

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNAWAY = 3
EXIT_MISMATCH = 4

# first header line of raw sample dumps; bump when columns change
SAMPLE_DUMP_FORMAT = "pumprecoil-samples v1"


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(float(value))  # plain repr even for numpy scalars
    return str(value)


def _write_csv(path: Path, metadata: dict, columns: list[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in metadata.items():
            fh.write(f"# {key} = {_fmt(value)}\n")
        fh.write(",".join(columns) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _csv_json_pair(outdir: Path, stem: str, metadata: dict, columns, rows) -> list[str]:
    rows = [list(r) for r in rows]
    _write_csv(outdir / f"{stem}.csv", metadata, columns, rows)
    _write_json(
        outdir / f"{stem}.json",
        {"metadata": metadata, "columns": list(columns), "rows": rows},
    )
    return [f"{stem}.csv", f"{stem}.json"]


def _config_metadata(cfg, args) -> dict:
    md = {f"config.{k}": v for k, v in sorted(cfg.to_dict().items())}
    if hasattr(args, "samples"):
        md["seed"] = args.seed
        md["samples"] = args.samples
    return md


def _make_plan(args) -> SamplerPlan:
    return SamplerPlan(
        seed=args.seed,
        n_trajectories=args.samples,
        n_workers=args.workers,
        block_size=args.block_size,
        max_emissions=args.max_emissions,
    )


def _run_batch(cfg, args):
    wtm = WaitingTimeModel.from_config(cfg)
    return sample_batch(cfg, wtm, _make_plan(args))


# -- subcommands -------------------------------------------------------------


def cmd_density(cfg, args, outdir: Path) -> list[str]:
    ens = _run_batch(cfg, args)
    nx, npx = args.grid
    hist = density.PhaseSpaceHistogram.create(cfg.eta1, grid=(nx, npx), extent=args.extent)
    hist.accumulate(ens.alpha)
    md = _config_metadata(cfg, args)
    md["out_of_range"] = hist.out_of_range
    md["axis_unit"] = "eta1"
    dens = hist.density()
    xc = 0.5 * (hist.x_edges[:-1] + hist.x_edges[1:])
    pc = 0.5 * (hist.p_edges[:-1] + hist.p_edges[1:])
    rows = [
        (float(xc[i]), float(pc[j]), float(dens[i, j]))
        for i in range(xc.size)
        for j in range(pc.size)
    ]
    outputs = _csv_json_pair(outdir, "density", md, ["x", "p", "value"], rows)
    if args.dump_samples:
        with open(outdir / "samples.csv", "w", encoding="utf-8", newline="\n") as fh:
            fh.write(f"# {SAMPLE_DUMP_FORMAT}\n")
            for key, value in md.items():
                fh.write(f"# {key} = {_fmt(value)}\n")
            fh.write("re_alpha,im_alpha,n_emissions,t_final\n")
            for a, n, t in zip(ens.alpha, ens.n_emissions, ens.t_final):
                fh.write(f"{float(a.real)!r},{float(a.imag)!r},{int(n)},{float(t)!r}\n")
        outputs.append("samples.csv")
    return outputs


def cmd_waiting_time(cfg, args, outdir: Path) -> list[str]:
    wtm = WaitingTimeModel.from_config(cfg)
    md = {f"config.{k}": v for k, v in sorted(cfg.to_dict().items())}
    md["regime"] = wtm.regime
    t0, t1, tn = args.t_grid
    t = np.linspace(t0, t1, int(tn))
    rows_t = [(float(x), float(w)) for x, w in zip(t, wtm.density(t))]
    outputs = _csv_json_pair(outdir, "waiting_density", md, ["t", "w"], rows_t)
    w0, w1, wn = args.omega_grid
    omega = np.linspace(w0, w1, int(wn))
    values = wtm.spectral(omega)
    rows_w = [(float(x), float(s.real), float(s.imag)) for x, s in zip(omega, values)]
    outputs += _csv_json_pair(outdir, "waiting_spectral", md, ["omega", "re_wbar", "im_wbar"], rows_w)
    return outputs


def _quadrature_rows(hist: density.QuadratureHistogram):
    dens = hist.normalized()
    log10 = np.where(dens > 0, np.log10(dens, where=dens > 0), math.nan)
    return [
        (float(q), int(c), float(d), float(lg))
        for q, c, d, lg in zip(hist.centers, hist.counts, dens, log10)
    ]


def cmd_quadrature(cfg, args, outdir: Path) -> list[str]:
    ens = _run_batch(cfg, args)
    md = _config_metadata(cfg, args)
    outputs: list[str] = []
    if args.extremal:
        phi_minus, phi_plus, _, _ = moments.extremal_quadratures(cfg)
        targets = [("quadrature_min", phi_minus), ("quadrature_max", phi_plus)]
    else:
        targets = [("quadrature", args.phi)]
    for stem, phi in targets:
        hist = density.quadrature_distribution(ens.alpha, phi, bins=args.bins, q_range=args.range)
        meta = dict(md)
        meta["phi"] = phi
        meta["out_of_range"] = hist.out_of_range
        outputs += _csv_json_pair(
            outdir, stem, meta, ["q", "count", "density", "log10_density"], _quadrature_rows(hist)
        )
    return outputs


def cmd_moments(cfg, args, outdir: Path) -> list[str]:
    rm = moments.recoil_moments(cfg)
    phi_minus, phi_plus, var_minus, var_plus = moments.extremal_quadratures(cfg)
    report = {
        "analytic": {
            "n_bar_p": rm.n_bar_p,
            "alpha2": [rm.alpha2.real, rm.alpha2.imag],
            "anisotropy_A": rm.anisotropy_A,
            "phi_A": rm.phi_A,
            "phi_minus": phi_minus,
            "phi_plus": phi_plus,
            "quadrature_variance_min": var_minus,
            "quadrature_variance_max": var_plus,
            "alpha4": rm.alpha4,
            "dn_p_sq": rm.dn_p_sq,
            "alpha_pow4": [rm.alpha_pow4.real, rm.alpha_pow4.imag],
        },
        "config": cfg.to_dict(),
    }
    status = EXIT_OK
    if args.mc_check:
        ens = _run_batch(cfg, args)
        emp = density.empirical_moments(ens.alpha)

        def z(observed, se, target):
            return abs(observed - target) / se if se > 0 else (0.0 if observed == target else math.inf)

        zs = {
            "mean_abs2": z(emp.mean_abs2, emp.se_abs2, rm.n_bar_p),
            "alpha2_re": z(emp.mean_alpha2.real, emp.se_alpha2.real, rm.alpha2.real),
            "alpha2_im": z(emp.mean_alpha2.imag, emp.se_alpha2.imag, rm.alpha2.imag),
            "mean_abs4": z(emp.mean_abs4, emp.se_abs4, rm.alpha4),
            "alpha_re": z(emp.mean_alpha.real, emp.se_alpha.real, 0.0),
            "alpha_im": z(emp.mean_alpha.imag, emp.se_alpha.imag, 0.0),
        }
        report["mc"] = {
            "seed": args.seed,
            "samples": args.samples,
            "mean_alpha": [emp.mean_alpha.real, emp.mean_alpha.imag],
            "se_alpha": [emp.se_alpha.real, emp.se_alpha.imag],
            "mean_abs2": emp.mean_abs2,
            "se_abs2": emp.se_abs2,
            "mean_alpha2": [emp.mean_alpha2.real, emp.mean_alpha2.imag],
            "se_alpha2": [emp.se_alpha2.real, emp.se_alpha2.imag],
            "mean_abs4": emp.mean_abs4,
            "se_abs4": emp.se_abs4,
            "z_scores": zs,
            "z_max_allowed": args.z_max,
        }
        worst = max(zs.values())
        report["mc"]["z_worst"] = worst
        if worst > args.z_max:
            status = EXIT_MISMATCH
            print("MC/analytic mismatch (|z| > {:g}):".format(args.z_max), file=sys.stderr)
            for name, value in sorted(zs.items(), key=lambda kv: -kv[1]):
                if value > args.z_max:
                    print(f"  {name}: z = {value:.2f}", file=sys.stderr)
    _write_json(outdir / "moments.json", report)
    if status != EXIT_OK:
        raise _MismatchExit(["moments.json"])
    return ["moments.json"]


def cmd_anisotropy_scan(cfg, args, outdir: Path) -> list[str]:
    if args.s_values:
        grid = np.asarray(args.s_values, dtype=float)
    else:
        start, stop, num = args.s_grid
        grid = np.linspace(start, stop, int(num))
    rows = moments.anisotropy_vs_saturation(cfg, grid)
    md = _config_metadata(cfg, args)
    smax = moments.s_max(cfg)
    md["s_max"] = "saturation-limited" if smax is None else smax
    md["s_max_threshold_lambda2"] = moments.s_max_threshold(cfg.nu_tilde)
    return _csv_json_pair(outdir, "anisotropy_scan", md, ["S", "A", "phi_A"], rows)


def cmd_tomography(cfg, args, outdir: Path) -> list[str]:
    ens = _run_batch(cfg, args)
    hist = density.quadrature_distribution(ens.alpha, args.phi, bins=args.bins, q_range=args.range)
    start, stop, num = args.tau_grid
    signal = density.tomography_signal(hist, np.linspace(start, stop, int(num)))
    md = _config_metadata(cfg, args)
    md["phi"] = args.phi
    md["bins"] = args.bins
    md["range"] = args.range
    md["out_of_range"] = hist.out_of_range
    rows = [
        (float(t), float(p), float(r))
        for t, p, r in zip(signal.tau, signal.p1, signal.imag_residual)
    ]
    return _csv_json_pair(outdir, "tomography", md, ["tau", "P1", "imag_residual"], rows)


def cmd_map(cfg, args, outdir: Path) -> list[str]:
    with open(args.initial_moments, "r", encoding="utf-8") as fh:
        initial = mapping.VibrationalMomentSet.from_dict(json.load(fh)).validate()
    rm = moments.recoil_moments(cfg)
    final = mapping.map_state(initial, rm)
    phi_minus, phi_plus, _, _ = moments.extremal_quadratures(cfg)
    report = {
        "config": cfg.to_dict(),
        "initial": initial.to_dict(),
        "final": final.to_dict(),
        "final_number_variance": mapping.number_variance_map(initial, rm),
        "final_quadrature_variance_min_phase": mapping.quadrature_variance_map(
            initial, rm, phi_minus
        ),
        "final_quadrature_variance_max_phase": mapping.quadrature_variance_map(
            initial, rm, phi_plus
        ),
    }
    _write_json(outdir / "map.json", report)
    return ["map.json"]


class _MismatchExit(Exception):
    def __init__(self, outputs):
        self.outputs = outputs


# -- argument parsing ----------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    config_parent = argparse.ArgumentParser(add_help=False)
    config_parent.add_argument("--config", required=True, help="JSON configuration file")
    override = config_parent.add_argument_group("config overrides")
    for key in ALL_KEYS:
        override.add_argument(f"--{key.replace('_', '-')}", dest=f"cfg_{key}", type=float)
    config_parent.add_argument("--out", default="pumprecoil-out", help="output directory")

    sampled = argparse.ArgumentParser(add_help=False)
    sampled.add_argument("--samples", type=int, default=100_000)
    sampled.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sampled.add_argument("--workers", type=int, default=1)
    sampled.add_argument("--block-size", type=int, default=4096)
    sampled.add_argument("--max-emissions", type=int, default=DEFAULT_MAX_EMISSIONS)

    parser = argparse.ArgumentParser(
        prog="pumprecoil",
        description="Recoil effects of optical pumping on a trapped atom",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("density", parents=[config_parent, sampled], help="2D recoil density")
    p.add_argument("--grid", type=int, nargs=2, default=(200, 200), metavar=("NX", "NP"))
    p.add_argument("--extent", type=float, default=4.0, help="half-width of the grid, in eta1 units")
    p.add_argument("--dump-samples", action="store_true", help="also write the raw (alpha, n, t) stream")
    p.set_defaults(func=cmd_density)

    p = sub.add_parser("waiting-time", parents=[config_parent], help="w(t) and w_bar(omega) tables")
    p.add_argument("--t-grid", type=float, nargs=3, default=(0.0, 20.0, 401), metavar=("START", "STOP", "NUM"))
    p.add_argument("--omega-grid", type=float, nargs=3, default=(-5.0, 5.0, 201), metavar=("START", "STOP", "NUM"))
    p.set_defaults(func=cmd_waiting_time)

    p = sub.add_parser("quadrature", parents=[config_parent, sampled], help="quadrature histograms")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--phi", type=float, default=0.0)
    group.add_argument("--extremal", action="store_true", help="emit histograms at both extremal phases")
    p.add_argument("--bins", type=int, default=200)
    p.add_argument("--range", type=float, default=2.0)
    p.set_defaults(func=cmd_quadrature)

    p = sub.add_parser("moments", parents=[config_parent, sampled], help="analytic moment report")
    p.add_argument("--mc-check", action="store_true", help="add a Monte Carlo column and verify")
    p.add_argument("--z-max", type=float, default=4.0, help="mismatch threshold in standard errors")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("anisotropy-scan", parents=[config_parent], help="A(S) over a saturation grid")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--s-grid", type=float, nargs=3, default=(0.0, 100.0, 201), metavar=("START", "STOP", "NUM"))
    group.add_argument("--s-values", type=float, nargs="+")
    p.set_defaults(func=cmd_anisotropy_scan)

    p = sub.add_parser("tomography", parents=[config_parent, sampled], help="ground-state occupation signal")
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--tau-grid", type=float, nargs=3, default=(0.0, 10.0, 21), metavar=("START", "STOP", "NUM"))
    p.add_argument("--bins", type=int, default=200)
    p.add_argument("--range", type=float, default=2.0)
    p.set_defaults(func=cmd_tomography)

    p = sub.add_parser("map", parents=[config_parent], help="map initial vibrational moments")
    p.add_argument("--initial-moments", required=True, help="JSON file with the initial moment set")
    p.set_defaults(func=cmd_map)

    return parser


def _load_cfg(args):
    with open(args.config, "r", encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, dict):
        raise ConfigError([OutOfRange("<root>", type(raw).__name__, "JSON object")])
    for key in ALL_KEYS:
        value = getattr(args, f"cfg_{key}", None)
        if value is not None:
            raw[key] = value
    return validate(raw)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": [args.command] + [a for a in (sys.argv[1:] if argv is None else argv)],
        "version": __version__,
        "status": "error",
        "outputs": [],
    }
    started = time.monotonic()
    code = EXIT_OK
    try:
        cfg = _load_cfg(args)
        manifest["config"] = cfg.to_dict()
        if hasattr(args, "seed"):
            manifest["seed"] = args.seed
            manifest["samples"] = args.samples
            manifest["workers"] = args.workers
        outputs = args.func(cfg, args, outdir)
        manifest["outputs"] = outputs
        manifest["status"] = "ok"
    except _MismatchExit as exc:
        manifest["outputs"] = exc.outputs
        manifest["status"] = "verification-mismatch"
        code = EXIT_MISMATCH
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        manifest["error"] = str(exc)
        code = EXIT_CONFIG
    except RunawayTrajectory as exc:
        print(f"runaway trajectory: {exc}", file=sys.stderr)
        manifest["error"] = str(exc)
        code = EXIT_RUNAWAY
    except (PumpRecoilError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        manifest["error"] = str(exc)
        code = EXIT_CONFIG
    finally:
        manifest["wall_time_s"] = time.monotonic() - started
        _write_json(outdir / "manifest.json", manifest)
    return code


if __name__ == "__main__":
    sys.exit(main())
