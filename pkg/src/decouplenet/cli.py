"""Command-line front end.

Exit codes: 0 success (or consensus), 1 usage/config error, 2 numerical
failure, 3 no consensus, 4 inconclusive.
"""
from __future__ import annotations

import argparse
import io
import json
import sys

import numpy as np

from .config import ConfigError, dumps, load_config
from .consensus import (
    check_consensus,
    robustness_sweep,
    simulate,
)
from .decoupler import (
    NotDecouplableError,
    PerturbationError,
    assess_diagonalizability,
    construct_perturbation,
    decouple,
)
from .graph import laplacian
from .linalg import InconsistentSystemError, SchurConvergenceError

EXIT_OK, EXIT_USAGE, EXIT_NUMERIC, EXIT_NO_CONSENSUS, EXIT_INCONCLUSIVE = 0, 1, 2, 3, 4
VERDICT_EXIT = {"consensus": EXIT_OK, "no_consensus": EXIT_NO_CONSENSUS,
                "inconclusive": EXIT_INCONCLUSIVE}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(prog="decouplenet", description=__doc__.splitlines()[0])
    parser.add_argument("command", choices=["eigen", "decouple", "check", "simulate", "probe"])
    parser.add_argument("--config", required=True, help="scenario JSON file")
    parser.add_argument("--output", help="write the result here instead of stdout")
    parser.add_argument("--format", choices=["csv", "json"], help="simulate: csv (default) or json")
    parser.add_argument("--dt", type=float)
    parser.add_argument("--t-end", dest="t_end", type=float)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--gap-tol", dest="gap_tol", type=float)
    parser.add_argument("--seed", type=int)
    parser.add_argument("--decay-factor", dest="decay_factor", type=float)
    parser.add_argument("--blowup-cap", dest="blowup_cap", type=float)
    parser.add_argument("--n-trials", dest="n_trials", type=int)
    parser.add_argument("--cond-cap", dest="cond_cap", type=float)
    parser.add_argument("--realify", action=argparse.BooleanOptionalAction, default=None)
    return parser


OVERRIDE_KEYS = ("dt", "t_end", "epsilon", "gap_tol", "seed", "decay_factor", "blowup_cap",
                 "n_trials", "cond_cap", "realify")


def _report_dict(rep):
    return {
        "distinct_eigenvalues": rep.distinct_eigenvalues,
        "min_gap": rep.min_gap,
        "eigvec_condition": rep.eigvec_condition,
        "verdict": rep.verdict,
        "gap_tol": rep.gap_tol,
        "cond_cap": rep.cond_cap,
    }


def _perturbation_dict(res):
    return {
        "e_matrix": res.e_matrix,
        "perturbed": res.perturbed,
        "epsilon_budget": res.epsilon_budget,
        "achieved_sq_distance": res.achieved_sq_distance,
        "min_gap_after": res.min_gap_after,
        "imag_residual": res.imag_residual,
        "row_sum_residual": res.row_sum_residual,
        "entry_bound": res.entry_bound,
        "gap_tol": res.gap_tol,
        "spectrum_after": res.spectrum_after,
        "realify": res.realify,
        "attempts": res.attempts,
        "negative_weights": res.negative_weights,
    }


def _decoupled_dict(dec):
    return {
        "transform": dec.transform,
        "lambda": dec.eigenvalues,
        "subsystems": list(dec.subsystems),
        "transform_condition": dec.transform_condition,
    }


def _cmd_eigen(cfg):
    lap = laplacian(cfg.system.schedule.segments[0][1])
    s = cfg.solver
    rep = assess_diagonalizability(lap, s["gap_tol"], s["cond_cap"])
    return {"segment": 0, "laplacian": lap, "eigenvalues": rep.eigenvalues,
            "report": _report_dict(rep)}, EXIT_OK


def _cmd_decouple(cfg):
    s = cfg.solver
    sys_ = cfg.system
    out = []
    code = EXIT_OK
    for k, (t0, g) in enumerate(sys_.schedule.segments):
        lap = laplacian(g)
        res = construct_perturbation(lap, s["epsilon"], gap_tol=s["gap_tol"], realify=s["realify"],
                                     seed=s["seed"], cond_cap=s["cond_cap"])
        entry = {"segment": k, "t_start": t0, "laplacian": lap,
                 "perturbation": _perturbation_dict(res), "decoupled": None}
        try:
            dec = decouple(res.perturbed, sys_.a_matrix, sys_.f_matrix, gap_tol=s["gap_tol"],
                           cond_cap=s["cond_cap"])
            entry["decoupled"] = _decoupled_dict(dec)
        except NotDecouplableError as exc:
            entry["decouple_error"] = str(exc)
            code = EXIT_NUMERIC
        out.append(entry)
    return {"segments": out}, code


def _verdict_dict(v):
    return {
        "condition1": v.condition1,
        "gap_intervals": v.gap_intervals,
        "condition2": v.condition2,
        "probes": [
            {"track": p.track, "eigenvalues": p.eigenvalues, "status": p.status,
             "worst_final_ratio": p.worst_final_ratio, "worst_peak_ratio": p.worst_peak_ratio,
             "decay_rate": p.decay_rate, "start_times": p.start_times}
            for p in v.probes
        ],
        "hurwitz_a": v.hurwitz_a,
        "overall": v.overall,
        "rationale": v.rationale,
    }


def _cmd_check(cfg):
    s = cfg.solver
    v = check_consensus(
        cfg.system, dt=s["dt"], t_end=s["t_end"], n_trials=s["n_trials"], seed=s["seed"],
        decay_factor=s["decay_factor"], blowup_cap=s["blowup_cap"], epsilon=s["epsilon"],
        gap_tol=s["gap_tol"], realify=s["realify"], hurwitz_margin=s["hurwitz_margin"],
        cond_cap=s["cond_cap"],
    )
    return _verdict_dict(v), VERDICT_EXIT[v.overall]


def _cmd_probe(cfg):
    s = cfg.solver
    reports, largest = robustness_sweep(
        cfg.system, cfg.probe["bound_scales"], n_samples=cfg.probe["n_samples"], seed=s["seed"],
        dt=s["dt"], t_end=s["t_end"], decay_factor=s["decay_factor"], x0=cfg.initial_state(),
    )
    return {
        "reports": [{"bound_scale": r.bound_scale, "n_samples": r.n_samples,
                     "n_converged": r.n_converged, "fraction": r.fraction} for r in reports],
        "largest_fully_converging_scale": largest,
        "note": "empirical probe over random zero-row-sum topology perturbations",
    }, EXIT_OK


def _trace_dict(tr):
    return {"header": tr.header(), "times": tr.times, "deviations": tr.deviations,
            "eta_norms": tr.eta_norms, "states": tr.states, "divergent": tr.divergent}


def run_cli(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.format == "csv" and args.command != "simulate":
            raise UsageError("--format csv is only available for simulate")
        overrides = {k: getattr(args, k) for k in OVERRIDE_KEYS}
        cfg = load_config(args.config, overrides)
    except UsageError as exc:
        print(f"usage error: {exc}", file=stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"config error: {exc}", file=stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"cannot read config: {exc}", file=stderr)
        return EXIT_USAGE

    try:
        if args.command == "simulate":
            s = cfg.solver
            tr = simulate(cfg.system, cfg.initial_state(), dt=s["dt"], t_end=s["t_end"])
            if (args.format or "csv") == "csv":
                buf = io.StringIO()
                tr.write_csv(buf)
                text = buf.getvalue()
            else:
                text = dumps({**_trace_dict(tr), "applied_defaults": cfg.applied_defaults})
            code = EXIT_OK
        else:
            handler = {"eigen": _cmd_eigen, "decouple": _cmd_decouple,
                       "check": _cmd_check, "probe": _cmd_probe}[args.command]
            doc, code = handler(cfg)
            doc["applied_defaults"] = cfg.applied_defaults
            text = dumps(doc)
    except (PerturbationError, NotDecouplableError, SchurConvergenceError,
            InconsistentSystemError, np.linalg.LinAlgError) as exc:
        best = getattr(exc, "best", None)
        extra = f" best attempt: {json.dumps(best, default=str)}" if best else ""
        print(f"numerical error: {exc}{extra}", file=stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_USAGE

    if args.output:
        with open(args.output, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)
    return code


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
