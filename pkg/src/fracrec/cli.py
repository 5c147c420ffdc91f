"""Command-line front end: problem files, experiment commands, reports, plots.

Problem definitions are versioned JSON documents with a strict schema
(unknown keys are rejected).  All randomness flows from the single seed in
the file (or the --seed override); rerunning a command with the same seed
produces byte-identical output files.  Output files are written atomically
(temp file + rename).

Exit codes: 0 success; 1 validation/usage error; 2 interior operator
singular (eigenvalue condition); 3 optimizer non-convergence; 4 decay-slope
bound violated in the instability experiment.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import tempfile
import time

import numpy as np

from .forward import EigenvalueConditionError, Potential, solve_dirichlet
from .grid import (
    FractionalOrder,
    GridFunction,
    IndexSets,
    SimulationBox,
    build_box,
    build_index_sets,
    build_sobolev,
)
from .reconstruct import (
    MeasurementRecord,
    PipelineError,
    full_pipeline,
    measurement_to_h,
    synthetic_measurement,
)
from .ucp import (
    OptimizerNonConvergence,
    RegularizerConfig,
    assemble_ucp,
    default_alpha_schedule,
    ucp_svd,
)
from .experiments import (
    instability_series,
    make_instability_geometry,
    spectrum_report,
    stability_sweep,
)
from .svgplot import line_plot_svg

__all__ = ["main", "load_problem", "parse_problem", "serialize_problem", "ProblemValidationError"]

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_EIGENVALUE = 2
EXIT_NONCONVERGENCE = 3
EXIT_SLOPE = 4

_SCHEMA_VERSION = 1


class ProblemValidationError(ValueError):
    pass


def _fmt(v: float) -> str:
    """Decimal text with 17 significant digits (lossless double round-trip)."""
    return f"{float(v):.17g}"


def _require_keys(obj: dict, required: set, optional: set, where: str) -> None:
    keys = set(obj)
    unknown = keys - required - optional
    if unknown:
        raise ProblemValidationError(f"unknown keys in {where}: {sorted(unknown)}")
    missing = required - keys
    if missing:
        raise ProblemValidationError(f"missing keys in {where}: {sorted(missing)}")


def _intervals(obj: dict, where: str) -> list:
    _require_keys(obj, {"intervals"}, set(), where)
    ivs = obj["intervals"]
    if not isinstance(ivs, list) or not ivs:
        raise ProblemValidationError(f"{where}.intervals must be a nonempty list")
    out = []
    for iv in ivs:
        if not (isinstance(iv, list) and len(iv) == 2):
            raise ProblemValidationError(f"{where}.intervals entries must be [a, b] pairs")
        out.append((float(iv[0]), float(iv[1])))
    return out


def parse_problem(doc: dict) -> dict:
    """Validate a problem document and return the normalized configuration."""
    top_required = {
        "version", "dimension", "box", "s", "omega", "w1", "w2",
        "q", "f", "noise", "scheme", "tau",
    }
    _require_keys(doc, top_required, {"g"}, "problem")
    if doc["version"] != _SCHEMA_VERSION:
        raise ProblemValidationError(f"unsupported problem version {doc['version']}")
    if doc["dimension"] != 1:
        raise ProblemValidationError("only dimension 1 is supported")
    _require_keys(doc["box"], {"radius", "points"}, set(), "box")
    _require_keys(doc["noise"], {"level", "seed"}, set(), "noise")
    _require_keys(doc["scheme"], {"name"}, {"alpha_schedule", "stop_rule"}, "scheme")
    cfg = {
        "version": _SCHEMA_VERSION,
        "dimension": 1,
        "box": {"radius": float(doc["box"]["radius"]), "points": int(doc["box"]["points"])},
        "s": float(doc["s"]),
        "omega": _intervals(doc["omega"], "omega"),
        "w1": _intervals(doc["w1"], "w1"),
        "w2": _intervals(doc["w2"], "w2"),
        "q": _parse_profile(doc["q"], "q", {"zero", "constant", "bump", "piecewise", "file"}),
        "f": _parse_profile(doc["f"], "f", {"bump", "sine", "file"}),
        "noise": {"level": float(doc["noise"]["level"]), "seed": int(doc["noise"]["seed"])},
        "scheme": _parse_scheme(doc["scheme"]),
        "tau": float(doc["tau"]),
    }
    if not (0.0 < cfg["tau"] < 1.0):
        raise ProblemValidationError("tau must lie in (0,1)")
    if not (0.0 < cfg["s"] < 1.0):
        raise ProblemValidationError("s must lie in (0,1)")
    if cfg["noise"]["level"] < 0:
        raise ProblemValidationError("noise.level must be >= 0")
    if "g" in doc:
        _require_keys(doc["g"], {"path"}, set(), "g")
        cfg["g"] = {"path": str(doc["g"]["path"])}
    return cfg


def _parse_profile(obj: dict, where: str, kinds: set) -> dict:
    _require_keys(obj, {"kind"}, {"params"}, where)
    kind = obj["kind"]
    if kind not in kinds:
        raise ProblemValidationError(f"{where}.kind must be one of {sorted(kinds)}")
    params = obj.get("params", {})
    if not isinstance(params, dict):
        raise ProblemValidationError(f"{where}.params must be an object")
    allowed = {
        "zero": set(),
        "constant": {"value"},
        "bump": {"center", "width", "amplitude"},
        "sine": {"mode", "amplitude"},
        "piecewise": {"breaks", "values"},
        "file": {"path"},
    }[kind]
    _require_keys(params, set(), allowed, f"{where}.params")
    return {"kind": kind, "params": dict(params)}


def _parse_scheme(obj: dict) -> dict:
    name = obj["name"]
    if name not in ("spectral", "tikhonov", "minimal_l2"):
        raise ProblemValidationError(f"unknown scheme {name!r}")
    sched = obj.get("alpha_schedule", "auto")
    if sched != "auto":
        if not (isinstance(sched, list) and sched):
            raise ProblemValidationError("alpha_schedule must be 'auto' or a list")
        sched = [float(a) for a in sched]
    stop = obj.get("stop_rule", "auto")
    if stop != "auto":
        _require_keys(stop, {"kind"}, {"delta"}, "scheme.stop_rule")
        if stop["kind"] not in ("fixed_list", "discrepancy"):
            raise ProblemValidationError("stop_rule.kind must be fixed_list or discrepancy")
        if stop["kind"] == "discrepancy" and "delta" not in stop:
            raise ProblemValidationError("discrepancy stop rule needs a delta")
    return {"name": name, "alpha_schedule": sched, "stop_rule": stop}


def load_problem(path: str) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ProblemValidationError(f"malformed JSON: {exc}") from exc
    return parse_problem(doc)


def serialize_problem(cfg: dict) -> str:
    """Canonical byte-stable serialization of a parsed problem."""
    doc = {
        "version": cfg["version"],
        "dimension": cfg["dimension"],
        "box": cfg["box"],
        "s": cfg["s"],
        "omega": {"intervals": [list(iv) for iv in cfg["omega"]]},
        "w1": {"intervals": [list(iv) for iv in cfg["w1"]]},
        "w2": {"intervals": [list(iv) for iv in cfg["w2"]]},
        "q": cfg["q"],
        "f": cfg["f"],
        "noise": cfg["noise"],
        "scheme": cfg["scheme"],
        "tau": cfg["tau"],
    }
    if "g" in cfg:
        doc["g"] = cfg["g"]
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(serialize_problem(cfg).encode()).hexdigest()


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path)) or "."
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _build_scene(cfg: dict):
    box = build_box(cfg["box"]["radius"], cfg["box"]["points"], cfg["dimension"])
    m = build_sobolev(box, FractionalOrder(cfg["s"]))
    sets = build_index_sets(box, cfg["omega"], cfg["w1"], cfg["w2"])
    return box, m, sets


def _profile_callable(profile: dict, kind_region: str):
    """Return a callable x -> values for a q or f profile."""
    kind = profile["kind"]
    p = profile["params"]
    if kind == "zero":
        return lambda x: np.zeros(len(x))
    if kind == "constant":
        val = float(p["value"])
        return lambda x: np.full(len(x), val)
    if kind == "bump":
        c = float(p["center"]); w = float(p["width"]); a = float(p.get("amplitude", 1.0))
        def bump(x):
            t = (np.asarray(x) - c) / w
            out = np.zeros(len(x))
            inside = np.abs(t) < 1
            out[inside] = a * np.exp(1.0 - 1.0 / (1.0 - t[inside] ** 2))
            return out
        return bump
    if kind == "sine":
        k = int(p.get("mode", 1)); a = float(p.get("amplitude", 1.0))
        def sine(x):
            x = np.asarray(x)
            lo, hi = x.min(), x.max()
            span = hi - lo
            return a * np.sin(k * np.pi * (x - lo) / span) if span > 0 else np.zeros(len(x))
        return sine
    if kind == "piecewise":
        breaks = [float(v) for v in p["breaks"]]
        values = [float(v) for v in p["values"]]
        if len(values) != len(breaks) + 1:
            raise ProblemValidationError("piecewise needs len(values) == len(breaks) + 1")
        def pw(x):
            return np.array(values, dtype=float)[np.searchsorted(breaks, np.asarray(x))]
        return pw
    if kind == "file":
        path = p["path"]
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        arr = np.asarray(data["values"], dtype=float)
        def fromfile(x):
            if len(arr) != len(x):
                raise ProblemValidationError(
                    f"file profile has {len(arr)} values, region has {len(x)} nodes"
                )
            return arr.copy()
        return fromfile
    raise ProblemValidationError(f"unsupported {kind_region} kind {kind!r}")


def _make_potential(cfg: dict, box: SimulationBox, sets: IndexSets) -> Potential:
    fn = _profile_callable(cfg["q"], "q")
    tag = "continuous" if cfg["q"]["kind"] in ("zero", "constant", "bump") else "bounded"
    return Potential(fn(box.nodes[sets.omega]), regularity_tag=tag)


def _make_datum(cfg: dict, box: SimulationBox, sets: IndexSets) -> GridFunction:
    fn = _profile_callable(cfg["f"], "f")
    vals = np.zeros(box.size)
    vals[sets.w1] = fn(box.nodes[sets.w1])
    if not np.any(vals != 0.0):
        raise ProblemValidationError("the exterior datum f must be nonzero")
    return GridFunction(vals, box, support_tag="w1")


def _make_cfg(cfg: dict, op, h_vals: np.ndarray | None = None) -> RegularizerConfig:
    """Materialize the run configuration; with the "auto" stop rule and noisy
    data, stop at 1.5x the noise level relative to the data's dual norm."""
    sch = cfg["scheme"]
    sched = sch["alpha_schedule"]
    if sched == "auto":
        sigma1 = float(np.linalg.norm(op.weighted, 2))
        schedule = default_alpha_schedule(sigma1)
    else:
        schedule = np.asarray(sched, dtype=float)
    stop = sch["stop_rule"]
    if stop == "auto":
        lvl = cfg["noise"]["level"]
        stop_rule = ("fixed_list",)
        if lvl > 0 and h_vals is not None:
            stop_rule = ("discrepancy", 1.5 * lvl * op.dual_norm(h_vals))
    elif stop["kind"] == "fixed_list":
        stop_rule = ("fixed_list",)
    else:
        stop_rule = ("discrepancy", float(stop["delta"]))
    return RegularizerConfig(scheme=sch["name"], alpha_schedule=schedule, stop_rule=stop_rule)


def _measurement(cfg: dict, m, sets, seed: int) -> MeasurementRecord:
    f = _make_datum(cfg, m.box, sets)
    if "g" in cfg:
        with open(cfg["g"]["path"], "r", encoding="utf-8") as fh:
            data = json.load(fh)
        g = np.asarray(data["values"], dtype=float)
        if g.shape != sets.w2.shape:
            raise ProblemValidationError(
                f"measured g has {len(g)} values, w2 has {len(sets.w2)} nodes"
            )
        return MeasurementRecord(f=f, g=g, noise_level=cfg["noise"]["level"],
                                 provenance="file")
    q = _make_potential(cfg, m.box, sets)
    return synthetic_measurement(
        m, sets, q, f, noise_level=cfg["noise"]["level"], seed=seed
    )


# ---------------------------------------------------------------- commands


def _cmd_forward(args) -> int:
    cfg = load_problem(args.problem)
    box, m, sets = _build_scene(cfg)
    q = _make_potential(cfg, box, sets)
    f = _make_datum(cfg, box, sets)
    sol = solve_dirichlet(m, sets, q, f)
    g = (m.frac_lap @ sol.u.values)[sets.w2]
    doc = {
        "config_hash": config_hash(cfg),
        "grid": {"radius": box.radius, "points": box.points_per_axis,
                 "spacing": _fmt(box.spacing)},
        "interior_residual": _fmt(sol.interior_residual),
        "solver_conditioning": _fmt(sol.solver_conditioning),
        "u": [_fmt(v) for v in sol.u.values],
        "w2_nodes": [_fmt(v) for v in box.nodes[sets.w2]],
        "g": [_fmt(v) for v in g],
    }
    _atomic_write(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def _cmd_reconstruct(args) -> int:
    cfg = load_problem(args.problem)
    if args.scheme:
        cfg["scheme"]["name"] = args.scheme
    if args.tau is not None:
        cfg["tau"] = args.tau
    if args.alpha_list:
        cfg["scheme"]["alpha_schedule"] = [float(a) for a in args.alpha_list.split(",")]
    cfg = parse_problem(json.loads(serialize_problem(cfg)))  # re-validate overrides
    box, m, sets = _build_scene(cfg)
    seed = args.seed if args.seed is not None else cfg["noise"]["seed"]
    start = time.monotonic()
    rec = _measurement(cfg, m, sets, seed)
    op = assemble_ucp(m, sets)
    run_cfg = _make_cfg(cfg, op, measurement_to_h(m, sets, rec))
    report = full_pipeline(m, sets, rec, run_cfg, tau=cfg["tau"])
    wall = time.monotonic() - start
    doc = {
        "config_hash": config_hash(cfg),
        "seed": seed,
        "wall_time_s": _fmt(wall) if args.record_timing else None,
        "grid": {"radius": box.radius, "points": box.points_per_axis,
                 "spacing": _fmt(box.spacing)},
        "scheme": report.scheme_used.scheme,
        "tau": _fmt(report.tau),
        "omega_nodes": [_fmt(v) for v in box.nodes[sets.omega]],
        "w2_nodes": [_fmt(v) for v in box.nodes[sets.w2]],
        "h": [_fmt(v) for v in report.h],
        "v": [_fmt(v) for v in report.v.values],
        "u": [_fmt(v) for v in report.u.values],
        "q_rec": [_fmt(v) for v in report.q_rec],
        "nodal_mask": [bool(b) for b in report.nodal_mask],
        "mask_fraction": _fmt(report.mask_fraction),
        "trace": [
            {"alpha": _fmt(r["alpha"]), "residual_dual": _fmt(r["residual_dual"]),
             "penalty_hs": _fmt(r["penalty_hs"])}
            for r in report.residuals
        ],
    }
    _atomic_write(args.out, json.dumps(doc, indent=2, sort_keys=True) + "\n")
    if not args.quiet:
        print(f"reconstruct: scheme={report.scheme_used.scheme} "
              f"mask_fraction={report.mask_fraction:.3f} -> {args.out}", file=sys.stderr)
    return EXIT_OK


def _cmd_spectrum(args) -> int:
    cfg = load_problem(args.problem)
    box, m, sets = _build_scene(cfg)
    svd = ucp_svd(assemble_ucp(m, sets))
    rep = spectrum_report(svd)
    lines = ["j,sigma,log10_sigma"]
    for j, sg, lg in zip(rep["j"], rep["sigma"], rep["log10_sigma"]):
        lines.append(f"{j},{_fmt(sg)},{_fmt(lg)}")
    lines.append(f"# numerical_rank,{rep['numerical_rank']}")
    lines.append(f"# slope,{_fmt(rep['slope'])}")
    _atomic_write(args.out_csv, "\n".join(lines) + "\n")
    if args.plot:
        svg = line_plot_svg(
            rep["j"], rep["log10_sigma"], "mode index j", "log10 sigma_j",
            title="singular spectrum",
        )
        _atomic_write(args.plot, svg)
    return EXIT_OK


def _cmd_instability(args) -> int:
    if args.R < 13.0:
        print(
            f"error: shell radius {args.R} < 13; the far-field expansion "
            "needs the window at distance >= 12 from the interior region",
            file=sys.stderr,
        )
        return EXIT_VALIDATION
    m, sets = make_instability_geometry(
        args.R, args.s, box_radius=args.box_radius, points=args.N
    )
    series = instability_series(m, sets, k_max=args.kmax)
    lines = ["k,hk_norm,log2_hk_norm"]
    for k, nrm in zip(series.k_values, series.hk_norms):
        lines.append(f"{k},{_fmt(nrm)},{_fmt(np.log2(nrm))}")
    slope = series.decay_fit["slope"]
    lines.append(f"# slope,{_fmt(slope)}")
    lines.append(f"# r2,{_fmt(series.decay_fit['r2'])}")
    _atomic_write(args.out_csv, "\n".join(lines) + "\n")
    if slope > -np.log(2.0):
        if not args.quiet:
            print(
                f"decay slope {slope:.4f} above -log 2 = {-np.log(2.0):.4f}",
                file=sys.stderr,
            )
        return EXIT_SLOPE
    return EXIT_OK


def _cmd_stability(args) -> int:
    cfg = load_problem(args.problem)
    box, m, sets = _build_scene(cfg)
    op = assemble_ucp(m, sets)
    run_cfg = _make_cfg(cfg, op)
    if cfg["scheme"]["alpha_schedule"] == "auto":
        # the sweep must resolve noise floors far below the pipeline default
        sigma1 = float(np.linalg.norm(op.weighted, 2))
        run_cfg = RegularizerConfig(
            scheme=run_cfg.scheme,
            alpha_schedule=default_alpha_schedule(sigma1, kmax=48, step=0.25),
        )
    elif run_cfg.stop_rule[0] != "fixed_list":
        run_cfg = RegularizerConfig(scheme=run_cfg.scheme,
                                    alpha_schedule=run_cfg.alpha_schedule)
    seed = args.seed if args.seed is not None else cfg["noise"]["seed"]
    levels = np.asarray([float(v) for v in args.levels.split(",")])
    sweep = stability_sweep(
        op, run_cfg, trials=args.trials, noise_levels=levels,
        s_prime=args.s_prime, seed=seed, threads=max(1, args.threads),
    )
    lines = ["noise_level,mean_error"]
    for lvl, err in zip(sweep.noise_levels, sweep.recon_errors):
        lines.append(f"{_fmt(lvl)},{_fmt(err)}")
    fm = sweep.fitted_modulus
    pf = sweep.power_fit
    lines.append(f"# log_modulus_C,{_fmt(fm['C'])}")
    lines.append(f"# log_modulus_sigma,{_fmt(fm['sigma'])}")
    lines.append(f"# log_modulus_residual,{_fmt(fm['residual'])}")
    lines.append(f"# power_law_residual,{_fmt(pf['residual'])}")
    _atomic_write(args.out_csv, "\n".join(lines) + "\n")
    return EXIT_OK


def _cmd_compare(args) -> int:
    cfg = load_problem(args.problem)
    box, m, sets = _build_scene(cfg)
    seed = args.seed if args.seed is not None else cfg["noise"]["seed"]
    rec = _measurement(cfg, m, sets, seed)
    op = assemble_ucp(m, sets)
    schemes = args.schemes.split(",")
    results = {}
    for name in schemes:
        if name not in ("spectral", "tikhonov", "minimal_l2"):
            print(f"error: unknown scheme {name!r}", file=sys.stderr)
            return EXIT_VALIDATION
    base = _make_cfg(cfg, op)
    for name in schemes:
        run_cfg = RegularizerConfig(scheme=name, alpha_schedule=base.alpha_schedule,
                                    stop_rule=("fixed_list",))
        report = full_pipeline(m, sets, rec, run_cfg, tau=cfg["tau"])
        results[name] = report
    lines = ["scheme,mask_fraction,final_residual_dual"]
    for name in schemes:
        rep = results[name]
        lines.append(
            f"{name},{_fmt(rep.mask_fraction)},{_fmt(rep.residuals[-1]['residual_dual'])}"
        )
    if len(schemes) == 2:
        a, b = (results[s] for s in schemes)
        num = np.linalg.norm(a.v.values - b.v.values)
        den = max(np.linalg.norm(b.v.values), np.finfo(float).tiny)
        lines.append(f"# cross_distance_rel,{_fmt(num / den)}")
    _atomic_write(args.out_csv, "\n".join(lines) + "\n")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="override the problem seed")
    common.add_argument("--threads", type=int, default=1,
                        help="worker threads for sweep commands (results are order-independent)")
    common.add_argument("--quiet", action="store_true", help="suppress progress chatter")

    ap = argparse.ArgumentParser(
        prog="fracrec",
        description=__doc__,
        parents=[common],
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("forward", parents=[common],
                       help="forward solve and window data")
    p.add_argument("problem"); p.add_argument("out")
    p.set_defaults(fn=_cmd_forward)

    p = sub.add_parser("reconstruct", parents=[common],
                       help="recover the potential from one measurement")
    p.add_argument("problem"); p.add_argument("out")
    p.add_argument("--scheme", choices=["spectral", "tikhonov", "minimal_l2"])
    p.add_argument("--tau", type=float, default=None)
    p.add_argument("--alpha-list", default=None, help="comma-separated decreasing alphas")
    p.add_argument("--record-timing", action="store_true",
                   help="store wall time in the report (breaks byte-reproducibility)")
    p.set_defaults(fn=_cmd_reconstruct)

    p = sub.add_parser("spectrum", parents=[common],
                       help="singular spectrum of the window operator")
    p.add_argument("problem"); p.add_argument("out_csv")
    p.add_argument("--plot", default=None, help="also write an SVG log-spectrum plot")
    p.set_defaults(fn=_cmd_spectrum)

    p = sub.add_parser("instability", parents=[common],
                       help="decay series of oscillatory-source window data")
    p.add_argument("out_csv")
    p.add_argument("--R", type=float, required=True, help="shell radius (>= 13)")
    p.add_argument("--s", type=float, default=0.5)
    p.add_argument("--kmax", type=int, default=12)
    p.add_argument("--N", type=int, default=1024)
    p.add_argument("--box-radius", type=float, default=32.0)
    p.set_defaults(fn=_cmd_instability)

    p = sub.add_parser("stability", parents=[common],
                       help="noise-ladder reconstruction sweep")
    p.add_argument("problem"); p.add_argument("out_csv")
    p.add_argument("--levels", default="1e-2,1e-3,1e-4,1e-5,1e-6,1e-7,1e-8")
    p.add_argument("--trials", type=int, default=5)
    p.add_argument("--s-prime", type=float, default=0.25)
    p.set_defaults(fn=_cmd_stability)

    p = sub.add_parser("compare", parents=[common],
                       help="run several schemes on one problem")
    p.add_argument("problem"); p.add_argument("out_csv")
    p.add_argument("--schemes", default="spectral,tikhonov")
    p.set_defaults(fn=_cmd_compare)
    return ap


def main(argv: list | None = None) -> int:
    ap = _build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except (ProblemValidationError, FileNotFoundError, ValueError, PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except EigenvalueConditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EIGENVALUE
    except OptimizerNonConvergence as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE


if __name__ == "__main__":
    sys.exit(main())
