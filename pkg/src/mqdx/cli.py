"""Command-line front end: relax, propagate, analyze, benchmark."""
import argparse
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import cli_io
from .analysis import correlations_x, density_k, density_x, momentum_grid
from .benchmarks import HIM_CASES, exact_energy, run_him_case
from .errors import ConfigurationError, MqdxError, RestartError
from .mctdh import energy_breakdown
from .model import evaluate_potential
from .solver import PROPAGATE, RELAX, Guess, initial_guess, interpolate_state, propagate, relax

log = logging.getLogger("mqdx")


class RunWriter:
    """Streams NO_PR.out rows, orbs files and restart snapshots as records arrive."""

    def __init__(self, out_dir, spec, write_ascii=True):
        self.out_dir = Path(out_dir)
        self.spec = spec
        self.write_ascii = write_ascii
        self.no_pr = open(self.out_dir / "NO_PR.out", "w")
        self.last_state = None

    def __call__(self, state, energy, trajectory):
        self.no_pr.write(cli_io.no_pr_row(trajectory.records[-1]))
        self.no_pr.flush()
        cli_io.write_restart(state, self.out_dir / cli_io.restart_filename(state.time))
        if self.write_ascii:
            cli_io.write_orbs(state, self.spec, state.time,
                              self.out_dir / cli_io.orbs_filename(state.time))
        self.last_state = state.copy()

    def close(self):
        self.no_pr.close()


def _initial_state(deck, config, grid, basis, args):
    if config.guess is Guess.HAND:
        state = initial_guess(grid, basis, seed=args.seed)
        state.time = config.time_begin
        return state
    restart_dir = Path(args.restart_dir or args.output_dir)
    path, t_found, exact = cli_io.find_snapshot(restart_dir, config.binary_start_time)
    if not exact:
        raise RestartError(f"no snapshot at Binary_Start_Time={config.binary_start_time} "
                           f"in {restart_dir} (nearest {t_found})")
    state = cli_io.read_restart(path, expect={"kind": basis.kind, "N": basis.n_particles,
                                              "M": basis.n_orbitals})
    if state.grid.n_points != grid.n_points:
        log.info("interpolating restart from %d to %d points", state.grid.n_points,
                 grid.n_points)
    state = interpolate_state(state, grid)
    state.time = config.time_begin
    return state


def _run(args, mode):
    deck = cli_io.parse_input(args.deck)
    config = deck.run_config()
    if mode == "relax" and config.job_prefactor != RELAX:
        raise ConfigurationError("relax needs Job_Prefactor=(-1.0d0,0.0d0)")
    if mode == "propagate" and config.job_prefactor != PROPAGATE:
        raise ConfigurationError("propagate needs Job_Prefactor=(0.0d0,-1.0d0)")
    config.keep_snapshots = False
    grid, basis, spec = deck.grid(), deck.basis(), deck.hamiltonian()
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    state0 = _initial_state(deck, config, grid, basis, args)
    writer = RunWriter(out, spec, deck.flag("Write_ASCII", True))
    try:
        driver = relax if mode == "relax" else propagate
        final, trajectory = driver(state0, spec, config, on_record=writer)
    finally:
        writer.close()
    if not args.no_plots:
        from . import plotting
        plotting.plot_trajectory(trajectory.times, trajectory.occupations, trajectory.energies,
                                 out / "NO_PR.png", title=f"{mode}: {basis!r}")
        plotting.plot_density(grid.points, density_x(final),
                              evaluate_potential(spec.potential, grid.points, final.time),
                              out / (cli_io.orbs_filename(final.time)[:-4] + ".png"),
                              title=f"t = {final.time:g}")
    rec = trajectory.records[-1]
    print(f"{mode} finished at t={rec.time:g}: E = {rec.energy:.12f}")
    print("occupations (descending): " + " ".join(f"{o:.6e}" for o in rec.occupations[::-1]))
    return 0


def _run_deck_for(analysis_path, explicit):
    if explicit:
        return cli_io.parse_input(explicit)
    candidate = Path(analysis_path).resolve().parent / "MCTDHX.inp"
    if not candidate.exists():
        raise ConfigurationError(
            f"analysis needs the run deck; pass --input or place MCTDHX.inp next to {analysis_path}")
    return cli_io.parse_input(candidate)


def _window(records, deck):
    x0 = deck.number("xstart", -np.inf)
    x1 = deck.number("xend", np.inf)
    keep = ((records["x"] >= x0) & (records["x"] <= x1)
            & (records["x_prime"] >= x0) & (records["x_prime"] <= x1))
    return records[keep]


def _analyze(args):
    deck = cli_io.parse_input(args.deck)
    run_deck = _run_deck_for(args.deck, args.input)
    spec = run_deck.hamiltonian()
    basis = run_deck.basis()
    data_dir = Path(args.data_dir or args.output_dir)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    plots = not args.no_plots
    if plots:
        from . import plotting
    energy_rows = []
    for t in deck.analysis_times():
        path, t_snap, exact = cli_io.find_snapshot(data_dir, t)
        if not exact:
            warnings.warn(f"no snapshot at t={t:g}; using nearest t={t_snap:g}", UserWarning)
        state = cli_io.read_restart(path, expect={"kind": basis.kind, "N": basis.n_particles,
                                                  "M": basis.n_orbitals})
        label = cli_io.time_label(state.time)
        if deck.flag("Total_Energy"):
            kin, pot, inter = energy_breakdown(state, spec, state.time)
            energy_rows.append((state.time, kin, pot, inter, kin + pot + inter))
        if deck.flag("Density_x"):
            cli_io.write_orbs(state, spec, state.time, out / cli_io.orbs_filename(state.time))
            if plots:
                plotting.plot_density(state.grid.points, density_x(state),
                                      evaluate_potential(spec.potential, state.grid.points,
                                                         state.time),
                                      out / f"{label}density-x.png", title=f"t = {state.time:g}")
        if deck.flag("Density_k"):
            k, rk = momentum_grid(state.grid), density_k(state)
            cli_io.write_density_k(k, rk, out / f"{label}density-k.dat")
            if plots:
                plotting.plot_density_k(k, rk, out / f"{label}density-k.png",
                                        title=f"t = {state.time:g}")
        if deck.flag("Correlations_X"):
            records = _window(correlations_x(state), deck)
            N, M = state.n_particles, state.n_orbitals
            cli_io.write_correlations(records, N, M, state.time,
                                      out / cli_io.correlations_filename(state.time, N, M))
            if plots:
                plotting.plot_correlations(
                    records, out / (cli_io.correlations_filename(state.time, N, M)[:-4] + ".png"),
                    title=f"t = {state.time:g}")
    if energy_rows:
        with open(out / "total_energy.dat", "w") as fh:
            fh.write("# time kinetic potential interaction total\n")
            for row in energy_rows:
                fh.write(" ".join(cli_io.NUMBER_FORMAT.format(v) for v in row) + "\n")
    print(f"analyzed {len(deck.analysis_times())} time(s) into {out}")
    return 0


def _benchmark(args):
    if args.suite != "him":
        raise ConfigurationError(f"unknown benchmark suite {args.suite!r}")
    cases = [c for c in HIM_CASES if args.full or not c.slow]
    header = (f"{'case':<16}{'E (this run)':>20}{'E (reference)':>20}{'|dE| ref':>11}"
              f"{'E exact':>20}{'E - exact':>11}{'seconds':>9}")
    print(header)
    print("-" * len(header))
    rows = []
    for case in cases:
        _, trajectory, seconds = run_him_case(case, seed=args.seed)
        e = trajectory.energies[-1]
        exact = exact_energy(case)
        rows.append((case.label, e, case.reference, abs(e - case.reference), exact, e - exact,
                     seconds))
        print(f"{case.label:<16}{e:>20.12f}{case.reference:>20.12f}{abs(e - case.reference):>11.2e}"
              f"{exact:>20.12f}{e - exact:>11.2e}{seconds:>9.1f}", flush=True)
    if args.output_dir:
        out = Path(args.output_dir)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "benchmark_him.dat", "w") as fh:
            fh.write("# case energy reference abs_error exact error_vs_exact seconds\n")
            for label, *vals in rows:
                fh.write(label.replace(" ", "_") + " "
                         + " ".join(cli_io.NUMBER_FORMAT.format(v) for v in vals) + "\n")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="mqdx", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--output-dir", default=".", help="where output files are written")
        p.add_argument("--no-plots", action="store_true", help="skip PNG rendering")

    for name in ("relax", "propagate"):
        p = sub.add_parser(name, help=f"{name} from an input deck")
        p.add_argument("deck")
        p.add_argument("--seed", type=int, default=0, help="seed for HAND initial guesses")
        p.add_argument("--restart-dir", default=None,
                       help="where BINR restart files are read (default: output dir)")
        common(p)
    p = sub.add_parser("analyze", help="observables from stored snapshots")
    p.add_argument("deck")
    p.add_argument("--input", default=None, help="run deck (default: MCTDHX.inp beside deck)")
    p.add_argument("--data-dir", default=None, help="restart files (default: output dir)")
    common(p)
    p = sub.add_parser("benchmark", help="reference benchmark suites")
    p.add_argument("suite", choices=["him"])
    p.add_argument("--full", action="store_true", help="include the slow cases")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output-dir", default=None)
    return parser


def cli_main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"relax": lambda a: _run(a, "relax"), "propagate": lambda a: _run(a, "propagate"),
                "analyze": _analyze, "benchmark": _benchmark}
    try:
        return handlers[args.command](args)
    except (MqdxError, OSError) as err:
        print(f"mqdx {args.command}: error: {err}", file=sys.stderr)
        return 1


def main():
    sys.exit(cli_main())
