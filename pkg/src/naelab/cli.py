"""Command-line entry point: ``naelab <subcommand> [flags]``.

Exit status is 0 when the checked property holds, 2 when it fails and 1 on
any error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time

from naelab.experiments import (THREADS_ENV, ExperimentConfig, InstanceFormatError, default_threads,
                                instance_to_json, load_instance, manifest, run_bordenave_trial,
                                run_cycle_poisson, run_threshold_sweep, run_trace_bound_check,
                                save_instance, write_json, _json_default)
from naelab.graph import primal_graph
from naelab.lifts import random_instance
from naelab.refute import dual_correction_search, eig_bound
from naelab.spectral import b_spectrum_via_ihara_bass, bulk_check, ihara_bass_residual, positive_spectrum
from naelab.tree import TreeParams
from naelab.witness import build_witness, validate_witness

EXIT_PASS, EXIT_ERROR, EXIT_FAIL = 0, 1, 2
PSD_TOL = -1e-7
TRIANGLE_TOL = -1e-9


def _d_list(text: str) -> list[float]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        elif part:
            out.append(float(part))
    return out


def _common(p: argparse.ArgumentParser, trials: int = 20, n: int = 500, eps: float = 0.15):
    p.add_argument("--c", type=int, default=3, help="constraint arity (default 3)")
    p.add_argument("--d", type=int, default=4, help="variable degree")
    p.add_argument("--n", type=int, default=n, help="lift order")
    p.add_argument("--trials", type=int, default=trials)
    p.add_argument("--seed", type=int, default=0, help="master seed")
    p.add_argument("--eps", type=float, default=eps)
    p.add_argument("--rho", type=float, default=None, help="explicit edge correlation for witnesses")
    p.add_argument("--triangle-safe", action="store_true", help="clamp rho into [-1/3, 1/3]")
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default ${THREADS_ENV} or 1)")
    p.add_argument("--out", default=None, help="output directory (reports + manifest)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="naelab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a signed lift and write it as instance JSON")
    _common(p, trials=1)
    p.add_argument("--unsigned", action="store_true")

    p = sub.add_parser("spectra", help="PS(A), bulk check and non-backtracking radius")
    _common(p, trials=1)
    p.add_argument("--instance", default=None, help="instance JSON instead of sampling")

    p = sub.add_parser("refute", help="eigenvalue certificate (plus diagonal correction)")
    _common(p, trials=1)
    p.add_argument("--instance", default=None)
    p.add_argument("--iterations", type=int, default=0)

    p = sub.add_parser("witness", help="build and validate a Gaussian-wave SDP witness")
    _common(p, trials=1)
    p.add_argument("--instance", default=None)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--dump-coefficients", action="store_true")

    p = sub.add_parser("sweep", help="refuter vs prover across integer degrees")
    _common(p)
    p.add_argument("--d-list", default="8-16", help="e.g. '8-16' or '8,13,14'")
    p.add_argument("--tol", type=float, default=1e-6)

    p = sub.add_parser("cycles", help="cycle counts against Poisson means")
    _common(p, trials=200, n=1000)
    p.add_argument("--gmax", type=int, default=6)

    p = sub.add_parser("bordenave", help="bulk containment pass rate over signed lifts")
    _common(p, trials=50)
    p.add_argument("--unsigned", action="store_true", help="control run without signs")
    p.add_argument("--min-pass", type=float, default=0.95)

    p = sub.add_parser("trace-check", help="Monte Carlo trace growth statistic")
    _common(p, trials=100, n=40, eps=0.3)
    p.add_argument("--ell", type=int, default=2)
    p.add_argument("--m", type=int, default=2)
    return ap


def _config(a) -> ExperimentConfig:
    threads = a.threads if a.threads is not None else default_threads()
    return ExperimentConfig(c=a.c, d=a.d, n=a.n, trials=a.trials, seed=a.seed, eps=a.eps, rho=a.rho,
                            triangle_safe=a.triangle_safe, threads=threads, out=a.out,
                            tol=getattr(a, "tol", 1e-6))


def _instance(a, cfg):
    if getattr(a, "instance", None):
        spec = load_instance(a.instance)
        return spec.build(), spec
    return random_instance(cfg.c, cfg.d, cfg.n, cfg.seed, signed=not getattr(a, "unsigned", False))


def _emit(a, cfg, report: dict, csv_text: str | None = None, elapsed: float = 0.0, argv=None):
    man = manifest(a.command, cfg, argv, {"wall_clock_seconds": elapsed})
    if a.out:
        os.makedirs(a.out, exist_ok=True)
        write_json(report, os.path.join(a.out, "report.json"))
        write_json(man, os.path.join(a.out, "manifest.json"))
        if csv_text is not None:
            with open(os.path.join(a.out, "aggregate.csv"), "w", newline="") as fh:
                fh.write(csv_text)
    else:
        json.dump({"report": report, "manifest": man}, sys.stdout, indent=2, sort_keys=True,
                  default=_json_default)
        sys.stdout.write("\n")


def _cmd_generate(a, cfg):
    x, spec = _instance(a, cfg)
    obj = instance_to_json(spec)
    if a.out:
        os.makedirs(a.out, exist_ok=True)
        save_instance(spec, os.path.join(a.out, "instance.json"))
    return {"instance": obj if not a.out else os.path.join(a.out, "instance.json"),
            "checksum": obj["checksum"], "vertices": x.vertex_count, "edges": x.edge_count}, True, None


def _cmd_spectra(a, cfg):
    x, spec = _instance(a, cfg)
    c, d = x.biregular
    ps = positive_spectrum(x)
    bc = bulk_check(ps, c, d, cfg.eps)
    rep = {"c": c, "d": d, "n": spec.n, "ps": ps.tolist(), "bulk_ok": bc.ok, "worst": bc.worst,
           "excess": bc.excess}
    if x.edge_count > x.vertex_count:
        b = b_spectrum_via_ihara_bass(x, ps)
        rep["b_radius"] = b.radius
        rep["sqrt_rho1"] = math.sqrt(TreeParams(c, d).rho1)
    if x.edge_count <= 3000:
        rep["ihara_bass_residual_u0.3"] = ihara_bass_residual(x, 0.3)
    return rep, bc.ok, None


def _cmd_refute(a, cfg):
    x, spec = _instance(a, cfg)
    c, d = x.biregular
    I = primal_graph(x)
    if a.iterations > 0:
        r = dual_correction_search(I, a.iterations, c=c, d=d)
    else:
        r = eig_bound(I, "nae" if c == 3 else "xor", c=c, d=d)
    return {**r.to_json(), "c": c, "d": d, "n": spec.n}, r.converged, None


def _cmd_witness(a, cfg):
    x, spec = _instance(a, cfg)
    c, d = x.biregular
    I = primal_graph(x)
    p = TreeParams(c, d)
    rho = cfg.rho if cfg.rho is not None else p.rho_star + cfg.eps
    w = build_witness(I, x, rho, cfg.tol, cfg.triangle_safe)
    rep = validate_witness(w, seed=cfg.seed % 2 ** 32)
    ok = rep.max_diag_error == 0 and rep.min_gram_eigenvalue >= PSD_TOL
    if cfg.triangle_safe:
        ok = ok and rep.worst_triangle_slack >= TRIANGLE_TOL
    out = {**rep.to_json(), "c": c, "d": d, "n": spec.n, "gamma": w.params.gamma, "r": w.params.r}
    if a.dump_coefficients:
        out["coefficients"] = w.coefficient_dump()
    return out, ok, None


def _cmd_sweep(a, cfg):
    res = run_threshold_sweep(cfg, _d_list(a.d_list))
    return res.to_json(), res.agreement_ok, res.curve.to_csv()


def _cmd_cycles(a, cfg):
    r = run_cycle_poisson(cfg, a.gmax)
    return r, not r["flagged"], None


def _cmd_bordenave(a, cfg):
    s = run_bordenave_trial(cfg, signed=not a.unsigned)
    ok = s.pass_fraction >= a.min_pass if not a.unsigned else s.pass_fraction == 0.0
    return s.to_json(), bool(ok), None


def _cmd_trace(a, cfg):
    r = run_trace_bound_check(cfg, a.ell, a.m)
    return r, r["passed"], None


COMMANDS = {"generate": _cmd_generate, "spectra": _cmd_spectra, "refute": _cmd_refute,
            "witness": _cmd_witness, "sweep": _cmd_sweep, "cycles": _cmd_cycles,
            "bordenave": _cmd_bordenave, "trace-check": _cmd_trace}


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on usage errors; report them as errors
        return EXIT_PASS if exc.code == 0 else EXIT_ERROR
    try:
        cfg = _config(a)
        t0 = time.perf_counter()
        report, ok, csv_text = COMMANDS[a.command](a, cfg)
        report = {"passed": bool(ok), **report}
        _emit(a, cfg, report, csv_text, time.perf_counter() - t0, argv)
    except (InstanceFormatError, ValueError, RuntimeError, OSError, MemoryError) as exc:
        print(f"naelab {a.command}: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    return EXIT_PASS if ok else EXIT_FAIL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
