"""Inverse analysis: beating-trace fit, basis balance, density-matrix reconstruction.

The fit minimizes Poisson-weighted squared residuals between the measured
coincidences and ``A_i * p_c(tau_i)``, where ``A_i = pair_rate * integration_i``.
When the trace carries its pair rate, ``A_i`` is known and the baseline is a
free parameter. Otherwise the baseline is pinned to 1/2 and the pair rate is
fitted instead.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import least_squares

from . import qstate
from .interference import BeatingModelParams, BeatingTrace
from .qstate import RestrictedColorState

PARAM_NAMES = ("V", "phi", "detuning_thz", "tau_c_ps", "tau0_ps", "baseline")
MIN_POINTS = 8
TWO_PI = 2.0 * math.pi


class FitError(RuntimeError):
    """Fit did not converge; ``best`` holds the lowest-cost candidate (or None)."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class BootstrapError(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


@dataclass(frozen=True)
class FitResult:
    params: BeatingModelParams
    param_errors: dict
    chi2_reduced: float
    n_points: int
    converged: bool
    covariance: np.ndarray = field(repr=False, default=None)
    pair_rate_hz: float = float("nan")
    rate_fitted: bool = False
    free_names: tuple = PARAM_NAMES
    fixed: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BalanceEstimate:
    p: float
    sigma_p: float
    n12: float
    n21: float
    assumed: bool = False


@dataclass(frozen=True)
class ReconstructionReport:
    state: RestrictedColorState
    density_matrix: qstate.DensityMatrix
    target_phi: float
    fidelity: float
    tangle: float
    purity: float
    physicality_clamped: bool
    errors: dict = field(default_factory=dict)
    n_resamples: int = 0
    n_failed: int = 0


# ---------------------------------------------------------------- model


def _model_and_jacobian(theta, t, integ, rate, rate_fitted):
    """Expected counts and d(counts)/d(theta).

    theta = (V, phi, df, tau_c, tau0, last) with ``last`` the baseline, or the
    pair rate when ``rate_fitted``.
    """
    V, phi, df, tau_c, tau0, last = theta
    if rate_fitted:
        scale, b = last * integ, 0.5
    else:
        scale, b = rate * integ, last
    x = t - tau0
    u = TWO_PI * df * x + phi
    c, s = np.cos(u), np.sin(u)
    inside = np.abs(x) < 0.5 * abs(tau_c)
    env = np.where(inside, 1.0 - 2.0 * np.abs(x) / abs(tau_c), 0.0)
    g = b - 0.5 * V * c * env

    dg = np.empty((t.size, 6))
    dg[:, 0] = -0.5 * c * env
    dg[:, 1] = 0.5 * V * s * env
    dg[:, 2] = 0.5 * V * s * env * TWO_PI * x
    denv_dtauc = np.where(inside, 2.0 * np.abs(x) * np.sign(tau_c) / tau_c**2, 0.0)
    dg[:, 3] = -0.5 * V * c * denv_dtauc
    denv_dtau0 = np.where(inside, 2.0 * np.sign(x) / abs(tau_c), 0.0)
    dg[:, 4] = -0.5 * V * (TWO_PI * df * s * env + c * denv_dtau0)
    if rate_fitted:
        jac = dg * scale[:, None]
        jac[:, 5] = integ * g
    else:
        jac = dg * scale[:, None]
        jac[:, 5] = scale
    return scale * g, jac


def weights(counts) -> np.ndarray:
    """Poisson standard deviations with zero-count bins floored at 1."""
    return np.maximum(1.0, np.sqrt(np.asarray(counts, float)))


def residuals(theta, trace: BeatingTrace, rate=None):
    """Weighted residuals (counts - model)/sigma and their Jacobian."""
    rate_fitted = rate is None
    model, jac = _model_and_jacobian(
        np.asarray(theta, float), trace.delay_ps, trace.integration_s, rate, rate_fitted
    )
    sigma = weights(trace.coincidences)
    return (trace.coincidences - model) / sigma, -jac / sigma[:, None]


# ---------------------------------------------------------------- initialization


def _moving_average(z, width):
    if width <= 1:
        return z
    kernel = np.ones(width) / width
    return np.convolve(z, kernel, mode="same")


def initial_guess(trace: BeatingTrace, rate=None) -> np.ndarray:
    """Spectral starting point for the fit.

    Detuning from the periodogram peak of the mean-subtracted rate; envelope
    centre, width and amplitude from the demodulated signal; phase from the
    demodulated signal at the envelope centre.
    """
    t = trace.delay_ps
    rate_est = rate if rate is not None else 2.0 * float(np.mean(trace.coincidences / trace.integration_s))
    if rate_est <= 0:
        raise FitError("trace has no coincidences")
    z = trace.coincidences / (rate_est * trace.integration_s)
    b0 = float(np.mean(z))
    dz = z - b0

    span = t[-1] - t[0]
    step = float(np.median(np.diff(t)))
    f_max = 0.5 / step
    freqs = np.arange(0.5 / span, f_max, 1.0 / (8.0 * span))
    power = np.abs(np.exp(-2j * np.pi * np.outer(freqs, t)) @ dz) ** 2
    k = int(np.argmax(power))
    df0 = freqs[k]
    if 0 < k < freqs.size - 1:
        y0, y1, y2 = power[k - 1 : k + 2]
        denom = y0 - 2 * y1 + y2
        if denom != 0:
            df0 += 0.5 * (y0 - y2) / denom * (freqs[1] - freqs[0])

    demod = dz * np.exp(-2j * np.pi * df0 * t)
    width = max(1, int(round(1.0 / (df0 * step))))
    env = _moving_average(demod, width)
    amp = 4.0 * np.abs(env)
    i0 = int(np.argmax(amp))
    tau0 = float(t[i0])
    a0 = float(amp[i0])
    floor = float(np.percentile(amp, 25))
    excess = np.clip(amp - floor, 0.0, None)
    area = float(np.sum(excess) * step)
    tau_c = 2.0 * area / max(a0 - floor, 1e-12)
    tau_c = float(np.clip(tau_c, 4.0 * step, span))
    V0 = float(np.clip(a0, 1e-3, 1.0))
    phi0 = float(np.angle(-env[i0]) + TWO_PI * df0 * tau0) % TWO_PI
    last = rate_est if rate is None else b0
    return np.array([V0, phi0, df0, tau_c, tau0, last])


# ---------------------------------------------------------------- fitting


def _canonical(theta):
    V, phi, df, tau_c, tau0, last = theta
    if df < 0:
        df, phi = -df, -phi
    if V < 0:
        V, phi = -V, phi + math.pi
    return np.array([V, phi % TWO_PI, df, abs(tau_c), tau0, last])


def _solve(theta0, free, trace, rate):
    full = theta0.copy()

    def expand(x):
        full[free] = x
        return full

    def fun(x):
        return residuals(expand(x), trace, rate)[0]

    def jac(x):
        return residuals(expand(x), trace, rate)[1][:, free]

    sol = least_squares(fun, theta0[free], jac=jac, method="lm",
                        xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=2000)
    sol.x = expand(sol.x).copy()
    return sol


def fit_beating(trace: BeatingTrace, init: BeatingModelParams | None = None, rate=None,
                fixed: dict | None = None) -> FitResult:
    """Weighted least-squares fit of the beating model to a coincidence trace.

    ``rate`` overrides the trace's ``pair_rate_hz`` metadata. Without either,
    the baseline is fixed at 1/2 and the rate becomes the sixth parameter.
    ``fixed`` maps parameter names (see ``PARAM_NAMES``) to values held
    constant, e.g. ``{"tau0_ps": 0.0}`` when zero delay is calibrated
    separately. Fixed parameters get zero error. Raises :class:`FitError`
    when no start converges.
    """
    if len(trace) < MIN_POINTS:
        raise ValueError(f"need at least {MIN_POINTS} points, got {len(trace)}")
    if rate is None:
        rate = trace.pair_rate_hz
    rate_fitted = rate is None
    fixed = dict(fixed or {})
    unknown = set(fixed) - set(PARAM_NAMES)
    if unknown:
        raise ValueError(f"unknown parameters in fixed: {sorted(unknown)}")
    if rate_fitted and "baseline" in fixed:
        raise ValueError("baseline can only be fixed when the pair rate is known")
    free = np.array([name not in fixed for name in PARAM_NAMES])

    if init is not None:
        theta0 = init.as_vector()
        if rate_fitted:
            theta0[5] = 2.0 * float(np.mean(trace.coincidences / trace.integration_s))
        starts = [theta0]
    else:
        theta0 = initial_guess(trace, rate)
        flipped = theta0.copy()
        flipped[1] = (flipped[1] + math.pi) % TWO_PI
        starts = [theta0, flipped]
    for start in starts:
        for name, value in fixed.items():
            start[PARAM_NAMES.index(name)] = value

    best = None
    for start in starts:
        try:
            sol = _solve(start, free, trace, rate)
        except (ValueError, np.linalg.LinAlgError):
            continue
        if not np.all(np.isfinite(sol.x)) or not np.isfinite(sol.cost):
            continue
        if best is None or sol.cost < best.cost:
            best = sol

    if best is None:
        raise FitError("no fit start produced a finite solution")
    result = _make_result(best, free, trace, rate, rate_fitted)
    result = replace(result, fixed=fixed)
    if not result.converged:
        raise FitError(f"fit did not converge: {best.message}", best=result)
    return result


def _make_result(sol, free, trace, rate, rate_fitted) -> FitResult:
    theta = _canonical(sol.x)
    r, J = residuals(theta, trace, rate)
    n = len(trace)
    n_free = int(free.sum())
    dof = max(n - n_free, 1)
    chi2_red = float(np.dot(r, r) / dof)
    cov = np.zeros((6, 6))
    Jf = J[:, free]
    cov[np.ix_(free, free)] = np.linalg.pinv(Jf.T @ Jf)
    errs = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    names = PARAM_NAMES[:5] + (("pair_rate_hz",) if rate_fitted else ("baseline",))
    V, phi, df, tau_c, tau0, last = theta
    baseline = 0.5 if rate_fitted else last
    converged = bool(sol.status > 0 and tau_c > 0 and 0.0 < baseline < 1.0 and V <= 1.0 + 5 * errs[0] + 1e-9)
    try:
        params = BeatingModelParams(
            V=float(min(V, 1.0)), phi=float(phi), detuning_thz=float(df),
            tau_c_ps=float(max(tau_c, 1e-12)), tau0_ps=float(tau0),
            baseline=float(min(max(baseline, 1e-9), 1 - 1e-9)),
        )
    except ValueError:
        raise FitError(f"fitted parameters are invalid: {theta}") from None
    param_errors = dict(zip(names, map(float, errs)))
    if rate_fitted:
        param_errors["baseline"] = 0.0
    return FitResult(
        params=params,
        param_errors=param_errors,
        chi2_reduced=chi2_red,
        n_points=n,
        converged=converged,
        covariance=cov,
        pair_rate_hz=float(last if rate_fitted else rate),
        rate_fitted=rate_fitted,
        free_names=tuple(n for n, f in zip(names, free) if f),
    )


# ---------------------------------------------------------------- balance and reconstruction


def balance_from_counts(n12, n21) -> BalanceEstimate:
    """Population of |w1w2> from computational-basis coincidence counts."""
    n12, n21 = float(n12), float(n21)
    if n12 < 0 or n21 < 0:
        raise ValueError("counts must be nonnegative")
    total = n12 + n21
    if total <= 0:
        raise ValueError("both basis counts are zero")
    p = n12 / total
    sigma = math.sqrt(p * (1.0 - p) / total)
    return BalanceEstimate(p=p, sigma_p=sigma, n12=n12, n21=n21)


def assumed_balance() -> BalanceEstimate:
    """p = 1/2 with zero uncertainty, used when no basis counts are available."""
    return BalanceEstimate(p=0.5, sigma_p=0.0, n12=float("inf"), n21=float("inf"), assumed=True)


def reconstruct(fit: FitResult, balance: BalanceEstimate, target_phi: float = math.pi) -> ReconstructionReport:
    """Assemble the restricted density matrix and its metrics.

    A visibility above the physical bound 2 sqrt(p(1-p)) is clamped to the
    bound and flagged.
    """
    p = balance.p
    V = fit.params.V
    v_max = 2.0 * math.sqrt(p * (1.0 - p))
    clamped = V > v_max
    if clamped:
        V = v_max
    state = RestrictedColorState(p=p, V=V, phi=fit.params.phi, detuning_thz=fit.params.detuning_thz)
    rho = qstate.restricted_density_matrix(state)
    return ReconstructionReport(
        state=state,
        density_matrix=rho,
        target_phi=float(target_phi),
        fidelity=qstate.fidelity_with_pure(rho, qstate.target_state(target_phi)),
        tangle=qstate.tangle(rho),
        purity=qstate.purity(rho),
        physicality_clamped=clamped,
    )


def _wrap(angle):
    return (angle + math.pi) % TWO_PI - math.pi


def bootstrap_uncertainty(
    trace: BeatingTrace,
    fit: FitResult,
    balance: BalanceEstimate,
    n_resamples: int = 500,
    seed: int = 0,
    target_phi: float = math.pi,
    max_failure_fraction: float = 0.2,
) -> ReconstructionReport:
    """Parametric bootstrap of the full reconstruction.

    Every coincidence count and both basis counts are redrawn from a Poisson
    distribution at their observed values, the trace is refit from the
    original solution and the metrics are recomputed. Resample ``i`` uses
    seed ``seed + i``. Errors are sample standard deviations; phase spreads
    are computed on differences wrapped to (-pi, pi].
    """
    if n_resamples < 100:
        raise ValueError("n_resamples must be at least 100")
    if not fit.converged:
        raise ValueError("bootstrap needs a converged fit")
    central = reconstruct(fit, balance, target_phi)
    rate = None if fit.rate_fitted else fit.pair_rate_hz

    samples = {k: [] for k in ("V", "phi", "detuning_thz", "tau_c_ps", "tau0_ps", "baseline",
                               "p", "fidelity", "tangle", "purity")}
    failures = []
    for i in range(n_resamples):
        rng = np.random.Generator(np.random.PCG64(seed + i))
        cc = rng.poisson(trace.coincidences).astype(float)
        if balance.assumed:
            bal = balance
        else:
            n12, n21 = rng.poisson([balance.n12, balance.n21])
            if n12 + n21 == 0:
                failures.append((i, "zero basis counts"))
                continue
            bal = balance_from_counts(n12, n21)
        resampled = replace(trace, coincidences=cc)
        try:
            f = fit_beating(resampled, init=fit.params, rate=rate, fixed=fit.fixed)
        except FitError as exc:
            failures.append((i, str(exc)))
            continue
        rep = reconstruct(f, bal, target_phi)
        samples["V"].append(f.params.V)
        samples["phi"].append(_wrap(f.params.phi - fit.params.phi))
        samples["detuning_thz"].append(f.params.detuning_thz)
        samples["tau_c_ps"].append(f.params.tau_c_ps)
        samples["tau0_ps"].append(f.params.tau0_ps)
        samples["baseline"].append(f.params.baseline)
        samples["p"].append(bal.p)
        samples["fidelity"].append(rep.fidelity)
        samples["tangle"].append(rep.tangle)
        samples["purity"].append(rep.purity)

    if len(failures) > max_failure_fraction * n_resamples:
        raise BootstrapError(
            f"{len(failures)} of {n_resamples} resamples failed",
            diagnostics={"failures": failures[:20], "n_failed": len(failures)},
        )
    errors = {k: float(np.std(v, ddof=1)) for k, v in samples.items()}
    return replace(central, errors=errors, n_resamples=n_resamples, n_failed=len(failures))


# ---------------------------------------------------------------- MUB


def mub_set() -> list:
    """Three mutually unbiased qubit bases in the anticorrelated subspace.

    {phase 0, phase 180}, {phase 90, phase 270} and {|w1w2>, |w2w1>}.
    """
    ts = qstate.target_state
    return [
        [ts(0.0), ts(math.pi)],
        [ts(math.pi / 2), ts(3 * math.pi / 2)],
        [qstate.product_state("w1", "w2"), qstate.product_state("w2", "w1")],
    ]


# ---------------------------------------------------------------- serialization


def fit_to_json(fit: FitResult) -> dict:
    p = fit.params
    e = fit.param_errors
    out = {
        "V": p.V, "V_err": e["V"],
        "phi_deg": math.degrees(p.phi), "phi_deg_err": math.degrees(e["phi"]),
        "detuning_thz": p.detuning_thz, "detuning_thz_err": e["detuning_thz"],
        "tau_c_ps": p.tau_c_ps, "tau_c_ps_err": e["tau_c_ps"],
        "tau0_ps": p.tau0_ps, "tau0_ps_err": e["tau0_ps"],
        "baseline": p.baseline, "baseline_err": e["baseline"],
        "pair_rate_hz": fit.pair_rate_hz, "rate_fitted": fit.rate_fitted,
        "chi2_reduced": fit.chi2_reduced, "n_points": fit.n_points, "converged": fit.converged,
        "fixed": sorted(fit.fixed),
    }
    if fit.rate_fitted:
        out["pair_rate_hz_err"] = e["pair_rate_hz"]
    return out


def report_to_json(report: ReconstructionReport, balance: BalanceEstimate) -> dict:
    s = report.state
    errs = dict(report.errors)
    if "phi" in errs:
        errs["phi_deg"] = math.degrees(errs.pop("phi"))
    return {
        "state": {"p": s.p, "V": s.V, "phi_deg": math.degrees(s.phi), "detuning_thz": s.detuning_thz},
        "balance": {
            "p": balance.p, "sigma_p": balance.sigma_p, "assumed": balance.assumed,
            "n12": None if balance.assumed else balance.n12,
            "n21": None if balance.assumed else balance.n21,
        },
        "target_phi_deg": math.degrees(report.target_phi),
        "fidelity": report.fidelity,
        "tangle": report.tangle,
        "purity": report.purity,
        "physicality_clamped": report.physicality_clamped,
        "errors": errs,
        "n_resamples": report.n_resamples,
        "n_failed": report.n_failed,
        "density_matrix": report.density_matrix.to_json(),
    }
