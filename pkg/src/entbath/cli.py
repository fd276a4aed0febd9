"""Command-line interface: evolve, coeffs, phase-diagram, verify.

Every command takes --config/--out/--workers/--override-horizon.  Numeric CSV
output uses 12 significant digits and canonical ordering, so identical config
digests produce byte-identical artifacts regardless of worker count.  Exit
codes: 0 success, 2 configuration error, 3 numerical/regime error,
4 verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .bathsim import SYMMETRIC, entanglement_trajectory, initial_state
from .config import RunConfig, load_config
from .errors import (
    ConfigError,
    EntbathError,
    HorizonError,
    NumericsError,
    ParameterRegimeError,
    UnsupportedOperationError,
    ValidationError,
)
from .rwa import extract_coefficients, solve_amplitude
from .sweep import PHASE_COLUMNS, phase_boundaries, run_phase_sweep, verify_grid

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICS = 3
EXIT_VERIFY = 4

_FMT = "%.11e"  # 12 significant digits


def _format_value(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return _FMT % float(value)


def write_csv(path: Path, columns, rows, header_comments=(), footer_comments=()):
    lines = [f"# {c}" for c in header_comments]
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_format_value(row[c]) for c in columns))
    lines.extend(f"# {c}" for c in footer_comments)
    path.write_text("\n".join(lines) + "\n")


def write_json(path: Path, payload: dict):
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


_COV_COLUMNS = (
    "V_x1x1", "V_x1p1", "V_x1x2", "V_x1p2", "V_p1p1",
    "V_p1x2", "V_p1p2", "V_x2x2", "V_x2p2", "V_p2p2",
)
_COV_INDEX = ((0, 0), (0, 1), (0, 2), (0, 3), (1, 1), (1, 2), (1, 3), (2, 2), (2, 3), (3, 3))


def _plot_script(csv_name: str, x: str, ys, title: str) -> str:
    cols = ", ".join(repr(c) for c in ys)
    return f'''"""Render {csv_name}; emitted as a text artifact, run it yourself."""
import csv

import matplotlib.pyplot as plt

rows = []
with open("{csv_name}") as handle:
    for row in csv.DictReader(line for line in handle if not line.startswith("#")):
        rows.append(row)
xs = [float(r["{x}"]) for r in rows]
for column in [{cols}]:
    plt.plot(xs, [float(r[column]) for r in rows], label=column)
plt.xlabel("{x}")
plt.legend()
plt.title({title!r})
plt.tight_layout()
plt.savefig("{csv_name}".replace(".csv", ".png"), dpi=160)
'''


def cmd_evolve(config: RunConfig, out_dir: Path, workers: int, override: bool) -> int:
    model = config.build_model()
    state = initial_state(model, config.kind, r=config.r,
                          purity_product=config.purity_product)
    times = np.arange(0.0, config.t_max + config.dt_out / 2, config.dt_out)
    traj, energies = entanglement_trajectory(
        model, state, times, override_horizon=override or config.override_horizon
    )
    covs = traj.covariances()
    rows = []
    for i, t in enumerate(traj.times):
        row = {"t": t, "EN": energies[i]}
        for name, (a, b) in zip(_COV_COLUMNS, _COV_INDEX):
            row[name] = covs[i, a, b]
        rows.append(row)
    out_csv = out_dir / "trajectory.csv"
    write_csv(
        out_csv,
        ("t", *_COV_COLUMNS, "EN"),
        rows,
        header_comments=(
            f"entbath {__version__} trajectory",
            f"config_digest {config.digest()}",
        ),
    )
    (out_dir / "plot_trajectory.py").write_text(
        _plot_script("trajectory.csv", "t", ["EN"], "entanglement trajectory")
    )
    print(f"wrote {out_csv}")
    return EXIT_OK


def cmd_coeffs(config: RunConfig, out_dir: Path, workers: int, override: bool) -> int:
    if config.coupling != SYMMETRIC:
        raise UnsupportedOperationError(
            "coefficient traces are only defined for symmetric coupling; the "
            "closed-form time-dependent coefficients of the position-coupling "
            "master equation are out of scope (only their stationary "
            "combinations enter, via the phase-diagram quadratures)"
        )
    model = config.build_model()
    dt = min(config.dt, 0.05 / config.cutoff * (1 - 1e-12))
    times = np.arange(0.0, config.t_max + dt / 2, dt)
    sol = solve_amplitude(model.bath, model.omega_plus_bare, times)
    trace = extract_coefficients(sol)
    stop = trace.valid_until_index
    columns = ["t", "gamma", "delta_omega2", "diffusion"]
    rows = []
    for i in range(stop):
        row = {
            "t": trace.times[i],
            "gamma": trace.gamma[i],
            "delta_omega2": trace.delta_omega2[i],
            "diffusion": trace.diffusion[i],
        }
        if config.temperature == 0.0:
            row["zero_T_residual"] = abs(trace.diffusion[i] - trace.gamma[i])
        rows.append(row)
    if config.temperature == 0.0:
        columns.append("zero_T_residual")
    footer = [f"valid_until {trace.t_valid:.6g} (amplitude floor {trace.amplitude_floor:.3e})"]
    if config.temperature == 0.0:
        residual = float(np.abs(trace.diffusion[:stop] - trace.gamma[:stop]).max())
        footer.append(f"max_zero_T_residual {residual:.6e}")
    out_csv = out_dir / "coefficients.csv"
    write_csv(
        out_csv,
        columns,
        rows,
        header_comments=(
            f"entbath {__version__} master-equation coefficients",
            f"config_digest {config.digest()}",
        ),
        footer_comments=footer,
    )
    _write_kernel_csv(config, model, out_dir)
    (out_dir / "plot_coefficients.py").write_text(
        _plot_script("coefficients.csv", "t", ["gamma", "diffusion"], "exact coefficients")
    )
    print(f"wrote {out_csv}")
    return EXIT_OK


def _write_kernel_csv(config: RunConfig, model, out_dir: Path, n_samples: int = 200):
    """Debugging side artifact: memory kernel, continuum vs discrete sum."""
    from .spectra import eta_kernel, eta_kernel_discrete

    t_end = min(config.t_max, model.bath.recurrence_time / 10.0)
    times = np.linspace(0.0, t_end, n_samples)
    scale = 2.0 / model.bath.ladder_scale  # ladder kernel is (2/m omega) * eta
    rows = []
    for t in times:
        cont = scale * eta_kernel(config.density(), float(t))
        disc = eta_kernel_discrete(model.bath, float(t))
        rows.append(
            {
                "t": t,
                "re_eta": cont.real,
                "im_eta": cont.imag,
                "re_eta_discrete": disc.real,
                "im_eta_discrete": disc.imag,
            }
        )
    write_csv(
        out_dir / "kernel.csv",
        ("t", "re_eta", "im_eta", "re_eta_discrete", "im_eta_discrete"),
        rows,
        header_comments=("memory kernel of the ladder convention, continuum vs discrete",),
    )


def cmd_phase_diagram(config: RunConfig, out_dir: Path, workers: int, override: bool) -> int:
    cache_dir = out_dir / ".cache"
    rows, info = run_phase_sweep(config, workers=workers, cache_dir=cache_dir)
    out_csv = out_dir / "phase_diagram.csv"
    write_csv(
        out_csv,
        PHASE_COLUMNS,
        rows,
        header_comments=(
            f"entbath {__version__} phase diagram",
            f"config_digest {config.digest()}",
        ),
        footer_comments=(f"errors {info['n_errors']} of {info['n_points']} points",),
    )
    boundaries = phase_boundaries(config, rows, cache_dir=cache_dir)
    write_json(out_dir / "phase_boundaries.json", {
        "config_digest": config.digest(),
        "version": __version__,
        "boundaries": boundaries,
    })
    write_json(out_dir / "run_info.json", info)  # wall time; not byte-stable
    (out_dir / "plot_phase_diagram.py").write_text(_PHASE_PLOT_SCRIPT)
    print(f"wrote {out_csv} ({info['n_points']} points, {info['n_errors']} errors)")
    return EXIT_OK


_PHASE_PLOT_SCRIPT = '''"""Render phase_diagram.csv; emitted as a text artifact, run it yourself."""
import csv

import matplotlib.pyplot as plt

colors = {"NSD": "tab:green", "SDR": "tab:orange", "SD": "tab:red", "ERROR": "k"}
T, r, phase = [], [], []
with open("phase_diagram.csv") as handle:
    for row in csv.DictReader(line for line in handle if not line.startswith("#")):
        T.append(float(row["T"]))
        r.append(float(row["r"]))
        phase.append(row["phase"])
for label in sorted(set(phase)):
    xs = [t for t, p in zip(T, phase) if p == label]
    ys = [v for v, p in zip(r, phase) if p == label]
    plt.scatter(xs, ys, c=colors.get(label, "gray"), s=14, label=label)
plt.xlabel("T")
plt.ylabel("r")
plt.legend()
plt.tight_layout()
plt.savefig("phase_diagram.png", dpi=160)
'''


def cmd_verify(config: RunConfig, out_dir: Path, workers: int, override: bool) -> int:
    cache_dir = out_dir / ".cache"
    report = verify_grid(config, workers=workers, cache_dir=cache_dir)
    write_json(out_dir / "verify_report.json", report)
    status = "PASS" if report["passed"] else "FAIL"
    print(f"verification {status}: {report['n_fail']} failing point(s) "
          f"of {len(report['points'])}")
    return EXIT_OK if report["passed"] else EXIT_VERIFY


_COMMANDS = {
    "evolve": cmd_evolve,
    "coeffs": cmd_coeffs,
    "phase-diagram": cmd_phase_diagram,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="entbath",
        description="Entanglement dynamics of two oscillators in a common Ohmic bath.",
    )
    parser.add_argument("--version", action="version", version=f"entbath {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("evolve", "exact entanglement trajectory -> trajectory.csv"),
        ("coeffs", "master-equation coefficient trace -> coefficients.csv"),
        ("phase-diagram", "asymptotic phase grid -> phase_diagram.csv (+ boundaries)"),
        ("verify", "cross-check predicted phases against exact simulations"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the run configuration")
        p.add_argument("--out", default=None, help="output directory (default: [run] out_dir)")
        p.add_argument("--workers", type=int, default=None,
                       help=f"parallel workers (default: config, then ${'{'}ENTBATH_WORKERS{'}'}, then 1)")
        p.add_argument("--override-horizon", action="store_true",
                       help="allow times beyond half the bath recurrence time")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        out_dir = Path(args.out) if args.out else Path(config.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        workers = config.resolve_workers(args.workers)
        return _COMMANDS[args.command](config, out_dir, workers, args.override_horizon)
    except (ConfigError, UnsupportedOperationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NumericsError, HorizonError, ParameterRegimeError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except EntbathError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICS


if __name__ == "__main__":
    sys.exit(main())
