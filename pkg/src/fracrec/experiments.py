"""Reproducible experiments: operator spectrum, noise-stability sweep, and
the oscillating-source decay series.

The decay series applies the fractional Laplacian to interior Laplacian
eigenfunctions of increasing frequency and records the dual-norm size of
the trace on a far two-component shell window, together with a least
squares fit of log-norm against the index.

The stability sweep perturbs exact window data with seeded noise at a
ladder of levels, reconstructs with a configurable scheme, measures errors
in a weaker Sobolev norm, and fits both a logarithmic modulus
C*E / log(C*E/eta)^sigma and a power law to the (noise, error) pairs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .grid import (
    FractionalOrder,
    GridFunction,
    IndexSets,
    SobolevMachinery,
    build_box,
    build_index_sets,
    build_sobolev,
    fraclap_apply,
    hminus_s_norm,
    hs_norm,
    smooth_bump,
)
from .ucp import RegularizerConfig, UcpOperator, UcpSvd
from .reconstruct import recover_interior

__all__ = [
    "InstabilitySeries",
    "StabilitySweep",
    "dirichlet_eigenfunctions",
    "instability_series",
    "make_instability_geometry",
    "stability_sweep",
    "spectrum_report",
    "fit_loglinear",
]


@dataclass
class InstabilitySeries:
    """Window-trace norms of increasingly oscillatory interior eigenfunctions."""

    k_values: np.ndarray
    vk: list                      # the eigenfunctions, unit interior L2 norm
    hk_norms: np.ndarray          # dual norms of their window traces
    decay_fit: dict               # slope/intercept/r2 of log ||h_k|| vs k


@dataclass
class StabilitySweep:
    """Reconstruction errors against noise level, with modulus fits."""

    noise_levels: np.ndarray
    recon_errors: np.ndarray      # mean over trials, weaker-norm errors
    per_trial: np.ndarray         # levels x trials
    fitted_modulus: dict          # {"C", "sigma", "residual"}
    power_fit: dict               # {"C", "p", "residual"}
    s_prime: float
    energy: float                 # Sobolev size of the exact unknown
    seed: int


def dirichlet_eigenfunctions(
    m: SobolevMachinery, sets: IndexSets, k_max: int
) -> list[GridFunction]:
    """Interval Laplacian eigenfunctions on omega, zero-extended.

    Requires omega to be a single interval (a, b); returns
    sin(k pi (x - a)/(b - a)) for k = 1..k_max, normalized to unit discrete
    interior L2 norm.  On a cell-centered grid aligned with the interval
    the sine family is exactly orthonormal.
    """
    om = sets.omega
    if np.any(np.diff(om) != 1):
        raise ValueError("omega must be a single interval of consecutive nodes")
    x = m.box.nodes[om]
    h = m.box.spacing
    a, b = x[0] - h / 2.0, x[-1] + h / 2.0
    out = []
    for k in range(1, k_max + 1):
        vals = np.zeros(m.box.size)
        vals[om] = np.sin(k * np.pi * (x - a) / (b - a))
        nrm = np.sqrt(h * np.sum(vals[om] ** 2))
        vals /= nrm
        out.append(GridFunction(vals, m.box, support_tag="omega"))
    return out


def fit_loglinear(k: np.ndarray, values: np.ndarray) -> dict:
    """Least-squares line through (k, log values); returns slope/intercept/r2."""
    logs = np.log(values)
    slope, intercept = np.polyfit(k, logs, 1)
    pred = slope * k + intercept
    ss_res = float(np.sum((logs - pred) ** 2))
    ss_tot = float(np.sum((logs - logs.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return {"slope": float(slope), "intercept": float(intercept), "r2": r2}


def make_instability_geometry(
    shell_radius: float,
    s: float,
    box_radius: float = 32.0,
    points: int = 1024,
) -> tuple[SobolevMachinery, IndexSets]:
    """Box and regions for the decay series: interior (-1,1), window the
    symmetric shell {shell_radius - 1 < |x| < shell_radius}."""
    if shell_radius < 13.0:
        raise ValueError(
            f"shell radius must be >= 13 for a convergent far-field expansion, got {shell_radius}"
        )
    if box_radius <= shell_radius:
        raise ValueError("box radius must exceed the shell radius")
    box = build_box(box_radius, points)
    m = build_sobolev(box, FractionalOrder(s))
    shell = [(-shell_radius, -(shell_radius - 1.0)), (shell_radius - 1.0, shell_radius)]
    sets = build_index_sets(box, [(-1.0, 1.0)], shell, shell)
    return m, sets


def instability_series(
    m: SobolevMachinery,
    sets: IndexSets,
    k_max: int = 12,
    fit_range: tuple[int, int] = (2, 12),
) -> InstabilitySeries:
    """Decay series of window traces of oscillatory interior eigenfunctions.

    h_k is the fractional Laplacian of the k-th interior eigenfunction
    restricted to the window (both shell components), measured in the dual
    Sobolev norm; the decay fit runs over k in `fit_range`.
    """
    vks = dirichlet_eigenfunctions(m, sets, k_max)
    ks = np.arange(1, k_max + 1)
    norms = np.empty(k_max)
    for i, vk in enumerate(vks):
        hk = fraclap_apply(m, vk)
        norms[i] = hminus_s_norm(m, hk, sets.w2)
    lo, hi = fit_range
    sel = (ks >= lo) & (ks <= hi)
    fit = fit_loglinear(ks[sel], norms[sel])
    return InstabilitySeries(k_values=ks, vk=vks, hk_norms=norms, decay_fit=fit)


def _fit_log_modulus(eta: np.ndarray, err: np.ndarray, energy: float) -> dict:
    """Fit err ~ C*E / log(C*E/eta)^sigma in log space, multi-start."""

    def resid(p):
        c, sg = np.exp(p)
        arg = np.maximum(c * energy / eta, 1.0 + 1e-9)
        model = c * energy / np.log(arg) ** sg
        return np.log(model) - np.log(err)

    best = None
    for c0 in (-2.0, 0.0, 2.0, 5.0):
        for s0 in (-1.0, 0.0, 1.0):
            try:
                r = least_squares(resid, x0=[c0, s0])
            except Exception:  # noqa: BLE001 - fit divergence is reported, not fatal
                continue
            if best is None or r.cost < best.cost:
                best = r
    if best is None:
        return {"C": np.nan, "sigma": np.nan, "residual": np.inf}
    return {
        "C": float(np.exp(best.x[0])),
        "sigma": float(np.exp(best.x[1])),
        "residual": float(2.0 * best.cost),
    }


def _fit_power_law(eta: np.ndarray, err: np.ndarray) -> dict:
    def resid(p):
        return p[0] + p[1] * np.log(eta) - np.log(err)

    r = least_squares(resid, x0=[0.0, 0.5])
    return {"C": float(np.exp(r.x[0])), "p": float(r.x[1]), "residual": float(2.0 * r.cost)}


def stability_sweep(
    op: UcpOperator,
    cfg: RegularizerConfig,
    trials: int,
    noise_levels: np.ndarray,
    s_prime: float,
    truth: GridFunction | None = None,
    seed: int = 0,
    threads: int = 1,
) -> StabilitySweep:
    """Noise-ladder reconstruction experiment in a weaker error norm.

    For each relative noise level eta: perturb the exact window data of a
    fixed smooth interior truth by Gaussian noise scaled to eta times the
    data's dual norm, reconstruct with `cfg` (discrepancy stopping at
    1.5 * eta * ||h||), and record the error in the order-`s_prime` Sobolev
    norm.  Each (level, trial) pair owns its own seeded generator stream.
    """
    m = op.machinery
    if not (s_prime < m.order.s):
        raise ValueError("s_prime must be strictly below the operator order")
    noise_levels = np.asarray(noise_levels, dtype=float)
    m_weak = build_sobolev(m.box, FractionalOrder(s_prime)) if s_prime > 0 else None

    if truth is None:
        om_nodes = m.box.nodes[op.sets.omega]
        center = 0.5 * (om_nodes[0] + om_nodes[-1])
        width = 0.6 * 0.5 * (om_nodes[-1] - om_nodes[0] + m.box.spacing)
        truth = smooth_bump(m.box, center, width)
        vals = truth.values.copy()
        keep = np.zeros(m.box.size, dtype=bool)
        keep[op.sets.omega] = True
        vals[~keep] = 0.0
        truth = GridFunction(vals, m.box, support_tag="omega")
    energy = hs_norm(m, truth)
    h_exact = op.apply(truth)
    h_norm = op.dual_norm(h_exact)

    def weak_err(v: GridFunction) -> float:
        d = GridFunction(v.values - truth.values, m.box)
        if m_weak is None:
            return float(np.sqrt(m.box.spacing * np.sum(d.values**2)))
        return hs_norm(m_weak, d)

    def one_trial(i: int, t: int) -> float:
        lvl = noise_levels[i]
        rng = np.random.default_rng([seed, t, i])
        noise = rng.standard_normal(op.n_window)
        nn = op.dual_norm(noise)
        if nn > 0 and lvl > 0:
            noise *= lvl * h_norm / nn
        else:
            noise = np.zeros(op.n_window)
        data = h_exact + noise
        run_cfg = RegularizerConfig(
            scheme=cfg.scheme,
            alpha_schedule=cfg.alpha_schedule,
            stop_rule=("discrepancy", 1.5 * lvl * h_norm) if lvl > 0 else ("fixed_list",),
            inner_solver_tol=cfg.inner_solver_tol,
            max_inner_iterations=cfg.max_inner_iterations,
        )
        v, _ = recover_interior(op, data, run_cfg)
        return weak_err(v)

    pairs = [(i, t) for i in range(len(noise_levels)) for t in range(trials)]
    per_trial = np.empty((len(noise_levels), trials))
    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            for (i, t), err in zip(pairs, pool.map(lambda p: one_trial(*p), pairs)):
                per_trial[i, t] = err
    else:
        for i, t in pairs:
            per_trial[i, t] = one_trial(i, t)
    mean_errors = per_trial.mean(axis=1)

    pos = noise_levels > 0
    eta = noise_levels[pos] * h_norm
    err = mean_errors[pos]
    return StabilitySweep(
        noise_levels=noise_levels,
        recon_errors=mean_errors,
        per_trial=per_trial,
        fitted_modulus=_fit_log_modulus(eta, err, energy),
        power_fit=_fit_power_law(eta, err),
        s_prime=s_prime,
        energy=energy,
        seed=seed,
    )


def spectrum_report(svd: UcpSvd) -> dict:
    """Tabulate the singular spectrum with a log-decay fit over the leading modes."""
    sig = svd.sigmas
    j = np.arange(1, len(sig) + 1)
    lead = min(20, svd.numerical_rank)
    fit = fit_loglinear(j[:lead].astype(float), sig[:lead])
    return {
        "j": j,
        "sigma": sig,
        "log10_sigma": np.log10(np.maximum(sig, np.finfo(float).tiny)),
        "numerical_rank": svd.numerical_rank,
        "slope": fit["slope"],
        "r2": fit["r2"],
    }
