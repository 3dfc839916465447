"""Command line entry point: ``srotto <subcommand> [flags]``.

Every subcommand writes its artifacts to ``--output-dir`` together with a
``manifest_<subcommand>.json`` listing the resolved config, wall time per
stage and the sha256 digest of each file written.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from contextlib import contextmanager

from . import __version__
from . import config as cfgmod
from .cost import CostParams, total_cost_report
from .errors import (ConfigError, InsufficientDataError, IntegrityError, InvalidStateError,
                     ResourceLimitError, SrottoError, StiffnessError)
from .fitting import (fit_quadratic_scaling, fit_thermal_coherent_state, write_json,
                      xi_parameter_study)
from .lindblad import DICKE
from .otto import (OttoCycleSpec, bose_occupation, work_curve, work_from_photon_numbers,
                   write_otto_csv)
from .protocol import (cycles_to_saturation, decoherence_sweep, run_ignition, run_many,
                       steady_state_stats)

EXIT_OK, EXIT_CONFIG, EXIT_INTEGRITY, EXIT_RESOURCE, EXIT_OTHER = 0, 2, 3, 4, 1

SCALING_SUMMARY = "scaling_summary.json"
OTTO_SUMMARY = "otto_summary.json"


class Outputs:
    """Tracks written files and stage timings for the run manifest."""

    def __init__(self, root, command, config):
        self.root = root
        self.command = command
        self.config = config
        self.files = []
        self.stages = {}
        os.makedirs(root, exist_ok=True)

    def path(self, name):
        p = os.path.join(self.root, name)
        if p not in self.files:
            self.files.append(p)
        return p

    @contextmanager
    def stage(self, name):
        t0 = time.perf_counter()
        try:
            yield
        finally:
            self.stages[name] = self.stages.get(name, 0.0) + time.perf_counter() - t0

    def write_manifest(self):
        entries = []
        for p in self.files:
            with open(p, "rb") as fh:
                digest = hashlib.sha256(fh.read()).hexdigest()
            entries.append({"file": os.path.relpath(p, self.root), "sha256": digest})
        path = os.path.join(self.root, f"manifest_{self.command}.json")
        write_json(path, {"command": self.command, "version": __version__,
                          "config": self.config.to_dict(),
                          "wall_time_s": self.stages, "files": entries})
        return path


def _stats_dict(stats):
    return {"mean_n_ss_photons": stats.mean_n_ss, "T_eff_ss_in_omega": stats.T_eff_ss,
            "std_n_photons": stats.std_n, "cycles_averaged": stats.cycles_used}


def _run_record(cfg, series, out_name):
    """Summary entry for one ignition run; steady stats only when enough cycles exist."""
    rec = {"N": cfg.N, "g": cfg.model.g, "kappa": cfg.model.kappa,
           "hamiltonian": cfg.model.hamiltonian_kind, "series_csv": out_name,
           "initial_mean_n_photons": float(series.mean_n[0]),
           "final_mean_n_photons": float(series.per_cycle[-1][1]),
           "fock_truncation_flag": series.truncation_flag,
           "max_top_fock_population": series.max_top_population}
    try:
        stats = steady_state_stats(series, cfg)
    except InsufficientDataError as err:
        rec["steady_state"] = None
        rec["steady_state_note"] = str(err)
    else:
        rec["steady_state"] = _stats_dict(stats)
        rec["cycles_to_saturation"] = cycles_to_saturation(series, stats.mean_n_ss)
    try:
        rec["thermal_coherent_fit"] = fit_thermal_coherent_state(series.final_field_state).to_dict()
    except SrottoError as err:
        rec["thermal_coherent_fit"] = None
        rec["thermal_coherent_note"] = str(err)
    return rec


def _ignite_many(rc, out, ns, model=None, n_max=None, prefix=""):
    cfgs = [rc.protocol_config(n, model, **({"n_max": n_max} if n_max else {})) for n in ns]
    with out.stage("simulate"):
        series = run_many(cfgs, rc.jobs, run_ignition)
    records = []
    with out.stage("write"):
        for cfg, s in zip(cfgs, series):
            name = f"{prefix}{cfg.run_name()}.csv"
            s.write_csv(out.path(name))
            records.append(_run_record(cfg, s, name))
    return cfgs, series, records


def cmd_ignition(rc, out, ns):
    _, _, records = _ignite_many(rc, out, ns)
    write_json(out.path("ignition_summary.json"),
               {"T_c_in_omega": rc.protocol.T_c,
                "initial_mean_n_photons": bose_occupation(rc.protocol.T_c, rc.physics.omega_f),
                "runs": records})


def _fit_or_none(fn):
    try:
        return fn().to_dict()
    except SrottoError as err:
        return {"error": str(err)}


def cmd_scaling(rc, out, ns):
    cfgs, _, records = _ignite_many(rc, out, ns)
    pts_n = [(r["N"], r["steady_state"]["mean_n_ss_photons"]) for r in records if r["steady_state"]]
    pts_t = [(r["N"], r["steady_state"]["T_eff_ss_in_omega"]) for r in records if r["steady_state"]]
    n_c = bose_occupation(rc.protocol.T_c, rc.physics.omega_f)
    with out.stage("fit"):
        summary = {
            "T_c_in_omega": rc.protocol.T_c, "initial_mean_n_photons": n_c,
            "runs": records,
            "mean_n_fit_pinned": _fit_or_none(lambda: fit_quadratic_scaling(pts_n, n_c)),
            "mean_n_fit_free": _fit_or_none(lambda: fit_quadratic_scaling(pts_n)),
            "T_eff_fit_pinned": _fit_or_none(lambda: fit_quadratic_scaling(pts_t, rc.protocol.T_c)),
            "T_eff_fit_free": _fit_or_none(lambda: fit_quadratic_scaling(pts_t)),
        }
        tcs = [(r["N"], r["thermal_coherent_fit"]["alpha_sq"]) for r in records
               if r["thermal_coherent_fit"]]
        summary["alpha_sq_fit"] = _fit_or_none(lambda: fit_quadratic_scaling(tcs, 0.0))
    write_json(out.path(SCALING_SUMMARY), summary)
    return summary


def cmd_otto(rc, out, ns):
    src = os.path.join(out.root, SCALING_SUMMARY)
    if os.path.exists(src):
        with open(src) as fh:
            summary = json.load(fh)
    else:
        summary = cmd_scaling(rc, out, ns)
    t_c = summary["T_c_in_omega"]
    n_c = summary["initial_mean_n_photons"]
    grid = sorted(rc.otto.omega_L_grid)
    w_low = grid[0]
    rows = []
    with out.stage("otto"):
        for rec in summary["runs"]:
            if not rec["steady_state"]:
                continue
            n_ss = rec["steady_state"]["mean_n_ss_photons"]
            curve = work_curve(n_ss, grid, t_c, n_levels=max(41, rc.protocol.n_max + 1))
            write_otto_csv(out.path(f"otto_N{rec['N']}.csv"), curve)
            w_n, eta = work_from_photon_numbers(
                OttoCycleSpec(w_low, 1.0, t_c), n_ss, n_c)
            rows.append({"N": rec["N"], "mean_n_ss_photons": n_ss,
                         "work_max_in_omega_H": curve[0].work,
                         "efficiency_at_max": curve[0].efficiency,
                         "work_photon_formula_in_omega_H": w_n,
                         "efficiency_photon_formula": eta})
        report = {"omega_L_for_max": w_low, "runs": rows,
                  "work_max_fit": _fit_or_none(lambda: fit_quadratic_scaling(
                      [(r["N"], r["work_max_in_omega_H"]) for r in rows], 0.0)),
                  "work_photon_formula_fit": _fit_or_none(lambda: fit_quadratic_scaling(
                      [(r["N"], r["work_photon_formula_in_omega_H"]) for r in rows], 0.0))}
    write_json(out.path(OTTO_SUMMARY), report)


def cmd_decoherence(rc, out, ns):
    gammas = rc.sweep.gamma_grid
    base_model = rc.model()
    rows = []
    with out.stage("simulate"):
        for n in ns:
            base = rc.protocol_config(n, base_model)
            for ch, gm, st in decoherence_sweep(base, gammas, rc.sweep.channels, rc.jobs):
                rows.append((gm, ch, n, st))
    path = out.path("decoherence.csv")
    with open(path, "w") as fh:
        fh.write("gamma,channel,N,T_eff_ss,mean_n_ss\n")
        for gm, ch, n, st in rows:
            fh.write(f"{gm:.12g},{ch},{n},{st.T_eff_ss:.12g},{st.mean_n_ss:.12g}\n")
    fits = []
    for ch in rc.sweep.channels:
        for gm in gammas:
            pts = [(n, st.T_eff_ss) for g2, c2, n, st in rows if c2 == ch and g2 == gm]
            fits.append({"channel": ch, "gamma_in_omega": gm,
                         "T_eff_fit": _fit_or_none(
                             lambda: fit_quadratic_scaling(pts, rc.protocol.T_c))})
    write_json(out.path("decoherence_summary.json"),
               {"T_c_in_omega": rc.protocol.T_c, "fits": fits,
                "runs": [{"gamma_in_omega": gm, "channel": ch, "N": n, **_stats_dict(st)}
                         for gm, ch, n, st in rows]})


def cmd_dicke(rc, out, ns):
    sw = rc.sweep
    model = rc.model(hamiltonian_kind=DICKE, g=sw.dicke_g)
    _, series, records = _ignite_many(rc, out, ns, model, n_max=sw.dicke_n_max, prefix="dicke_")
    t_c = rc.protocol.T_c
    pts = [(r["N"], r["steady_state"]["T_eff_ss_in_omega"] - t_c) for r in records
           if r["steady_state"]]
    with out.stage("fit"):
        fit = _fit_or_none(lambda: fit_quadratic_scaling(
            [(n, v + t_c) for n, v in pts], t_c))
    write_json(out.path("dicke_summary.json"),
               {"g_in_omega": sw.dicke_g, "T_c_in_omega": t_c,
                "T_eff_excess_points": pts, "T_eff_fit": fit, "runs": records})


def cmd_xi(rc, out, ns):
    base = rc.protocol_config(ns[0])
    with out.stage("simulate"):
        study = xi_parameter_study(base, rc.sweep.g_grid, rc.sweep.kappa_grid, tuple(ns), rc.jobs)
    write_json(out.path("xi_study.json"), study.to_dict())


def cmd_cost(rc, out, ns):
    c = rc.cost
    n_atoms = int(ns[0])
    clusters = rc.protocol.num_injections if c.clusters is None else int(c.clusters)
    work, source = math.nan, "none"
    src = os.path.join(out.root, OTTO_SUMMARY)
    if os.path.exists(src):
        with open(src) as fh:
            for r in json.load(fh).get("runs", []):
                if r["N"] == n_atoms:
                    work, source = r["work_max_in_omega_H"], OTTO_SUMMARY
    if source == "none":
        # no engine outputs yet: simulate the steady state for this N
        cfg = rc.protocol_config(n_atoms)
        with out.stage("simulate"):
            stats = steady_state_stats(run_ignition(cfg), cfg)
        n_c = bose_occupation(rc.protocol.T_c, rc.physics.omega_f)
        spec = OttoCycleSpec(min(rc.otto.omega_L_grid), 1.0, rc.protocol.T_c)
        work, _ = work_from_photon_numbers(spec, stats.mean_n_ss, n_c)
        source = "simulated steady state"
    try:
        params = CostParams.from_dimensionless(c.inv_tau_gamma, c.divergence, c.omega, c.gamma_sp)
    except ValueError as err:
        raise ConfigError("cost", str(err)) from err
    report = total_cost_report(params, n_atoms, clusters, work)
    write_json(out.path("cost_report.json"), {**report.to_dict(), "work_source": source})
    print(report.table())


COMMANDS = {
    "ignition": (cmd_ignition, "per-N ignition trajectories and steady-state summary"),
    "scaling": (cmd_scaling, "N sweep with quadratic-law fits"),
    "otto": (cmd_otto, "Otto work curves and W_max(N) fit"),
    "decoherence": (cmd_decoherence, "steady temperatures under atomic dissipators"),
    "dicke": (cmd_dicke, "ignition with the counter-rotating (Dicke) coupling"),
    "cost": (cmd_cost, "energy cost of cluster preparation against engine work"),
    "xi": (cmd_xi, "power laws of the N^2 coefficient in g and kappa (long)"),
}

# subcommand -> config attribute holding its atom-count list
N_LISTS = {"ignition": ("protocol", "N"), "scaling": ("sweep", "N"), "otto": ("sweep", "N"),
           "decoherence": ("sweep", "decoherence_N"), "dicke": ("sweep", "dicke_N"),
           "cost": ("protocol", "N"), "xi": ("sweep", "xi_N")}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _emit_error("ConfigError", message, path="<argv>", code=EXIT_CONFIG)
        sys.exit(EXIT_CONFIG)


def _floats(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _ints(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML configuration file")
    common.add_argument("--output-dir", metavar="PATH")
    common.add_argument("--jobs", type=int, metavar="K")
    common.add_argument("--g", type=float)
    common.add_argument("--kappa", type=float)
    common.add_argument("--N", type=_ints, metavar="LIST", help="atom counts, e.g. 2,3,4")
    common.add_argument("--omega-L-grid", type=_floats, metavar="LIST")
    common.add_argument("--gamma-grid", type=_floats, metavar="LIST")
    common.add_argument("--num-injections", type=int)
    common.add_argument("--n-max", type=int)
    common.add_argument("--t-int", type=float)
    common.add_argument("--period", type=float)
    common.add_argument("--burn-in", type=float)
    common.add_argument("--print-config", action="store_true",
                        help="print the resolved configuration and exit")
    parser = _Parser(prog="srotto", description="Superradiant photonic Otto engine simulations")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, (_, help_text) in COMMANDS.items():
        sub.add_parser(name, parents=[common], help=help_text)
    return parser


def resolve_config(args) -> cfgmod.RunConfig:
    rc = cfgmod.load(args.config) if args.config else cfgmod.RunConfig()
    p, ph, sw = rc.protocol, rc.physics, rc.sweep
    for value, obj, attr in (
            (args.g, ph, "g"), (args.kappa, ph, "kappa"),
            (args.num_injections, p, "num_injections"), (args.n_max, p, "n_max"),
            (args.t_int, p, "t_int"), (args.period, p, "period"), (args.burn_in, p, "burn_in"),
            (args.gamma_grid, sw, "gamma_grid"), (args.output_dir, rc, "output_dir"),
            (args.jobs, rc, "jobs")):
        if value is not None:
            setattr(obj, attr, value)
    if args.omega_L_grid is not None:
        rc.otto.omega_L_grid = args.omega_L_grid
    if args.N is not None:
        sec, attr = N_LISTS[args.command]
        setattr(getattr(rc, sec), attr, args.N)
    if args.command == "dicke":
        # the Dicke run keeps its own coupling and cutoff
        if args.g is not None:
            sw.dicke_g = args.g
        if args.n_max is not None:
            sw.dicke_n_max = args.n_max
    return rc.validate()


def _emit_error(kind, message, path=None, code=EXIT_OTHER):
    payload = {"error": kind, "message": message, "exit_code": code}
    if path is not None:
        payload["path"] = path
    sys.stderr.write(json.dumps(payload) + "\n")


def _exit_code(err) -> int:
    if isinstance(err, ConfigError):
        return EXIT_CONFIG
    if isinstance(err, (IntegrityError, StiffnessError, InvalidStateError)):
        return EXIT_INTEGRITY
    if isinstance(err, ResourceLimitError):
        return EXIT_RESOURCE
    return EXIT_OTHER


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        rc = resolve_config(args)
        if args.print_config:
            sys.stdout.write(rc.dump())
            return EXIT_OK
        fn, _ = COMMANDS[args.command]
        sec, attr = N_LISTS[args.command]
        ns = list(getattr(getattr(rc, sec), attr))
        out = Outputs(rc.output_dir, args.command, rc)
        fn(rc, out, ns)
        out.write_manifest()
    except (SrottoError, ValueError, OSError) as err:
        code = _exit_code(err)
        _emit_error(type(err).__name__, getattr(err, "message", str(err)),
                    getattr(err, "path", None) if isinstance(err, ConfigError) else None, code)
        return code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
