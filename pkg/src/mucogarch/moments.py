"""Closed-form first and second moments of the covariance process and of the
observed increments, together with the empirical estimators used to validate
them.

All transient formulas are exact exponential-integrator evaluations of the
underlying linear dynamics, so the stationary values are genuine fixed
points of their transient counterparts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm as _expm
from scipy.linalg import lu_factor, lu_solve

from . import levy, sim
from .exceptions import SingularOperatorError
from .kronalg import KronOperators, unvec, vec

#: default number of batches for batch-means standard errors
DEFAULT_N_BATCHES = 50


# ---------------------------------------------------------------------------
# linear solves with a singularity guard


def _solve(m: np.ndarray, rhs: np.ndarray, name: str) -> np.ndarray:
    """Dense LU solve with one step of iterative refinement and a singularity guard."""
    svals = np.linalg.svd(m, compute_uv=False)
    if svals[-1] < 1e-10 * svals[0] or svals[-1] == 0.0:
        raise SingularOperatorError(
            f"{name} is numerically singular (smallest/largest singular value "
            f"{svals[-1]:.3e}/{svals[0]:.3e}); the stationary formulas do not apply"
        )
    lu = lu_factor(m)
    x = lu_solve(lu, rhs)
    x += lu_solve(lu, rhs - m @ x)
    return x


def _forcing_blocks(ops: KronOperators, c: np.ndarray):
    """The three inhomogeneity pieces of the second-moment dynamics."""
    d2 = ops.dim**2
    vc = vec(c)
    p_left = ops.sigma_l * np.kron(ops.kron_a, np.eye(d2)) + ops.jump4 @ ops.mix4
    p_right = ops.sigma_l * np.kron(np.eye(d2), ops.kron_a) + ops.jump4 @ ops.mix4
    coupling = p_left @ np.kron(vc[:, None], np.eye(d2)) + p_right @ np.kron(np.eye(d2), vc[:, None])
    constant = ops.jump4 @ ops.mix4 @ np.kron(vc, vc)
    return coupling, constant


# ---------------------------------------------------------------------------
# first moment


def mean_y_t(
    y0_mean: np.ndarray,
    ops: KronOperators,
    c: np.ndarray,
    t: float,
    *,
    method: str = "auto",
) -> np.ndarray:
    """Expected vectorized latent state at time ``t`` from its linear dynamics.

    ``closed`` uses the inverse of the mean generator, ``integral`` evaluates
    the variation-of-constants integral exactly through an augmented
    exponential and also handles a singular generator; ``auto`` picks for you.
    """
    y0_mean = np.asarray(y0_mean, dtype=float).reshape(-1)
    d2 = ops.dim**2
    forcing = ops.sigma_l * (ops.kron_a @ vec(c))
    if t == 0.0:
        return y0_mean.copy()
    if method not in ("auto", "closed", "integral"):
        raise ValueError("method must be auto, closed, or integral")
    if method in ("auto", "closed"):
        try:
            drift = _solve(ops.mean_gen, forcing, "mean generator")
            return _expm(ops.mean_gen * t) @ (y0_mean + drift) - drift
        except SingularOperatorError:
            if method == "closed":
                raise
    z = np.zeros((d2 + 1, d2 + 1))
    z[:d2, :d2] = ops.mean_gen
    z[:d2, d2] = forcing
    state = np.concatenate([y0_mean, [1.0]])
    return (_expm(z * t) @ state)[:d2]


def stationary_mean(ops: KronOperators, c: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Stationary means of the latent state and of the covariance, vectorized.

    The two routes (direct inversion and the flow-based form) must agree, and
    the latent mean must solve its defining linear matrix equation; both are
    asserted here because they guard against operator-assembly mistakes.
    """
    vc = vec(c)
    mean_y = -ops.sigma_l * _solve(ops.mean_gen, ops.kron_a @ vc, "mean generator")
    mean_v = _solve(ops.mean_gen, ops.flow2 @ vc, "mean generator")
    scale = 1.0 + float(np.linalg.norm(mean_v))
    if np.linalg.norm(mean_v - (mean_y + vc)) > 1e-9 * scale:
        raise AssertionError("the two routes to the stationary covariance mean disagree")
    ey = unvec(mean_y)
    resid = ops.b @ ey + ey @ ops.b.T + ops.sigma_l * ops.a @ ey @ ops.a.T + ops.sigma_l * ops.a @ c @ ops.a.T
    if np.linalg.norm(resid) > 1e-9 * scale:
        raise AssertionError("stationary mean does not solve its linear matrix equation")
    return mean_y, mean_v


def acov_y(h: float, var0: np.ndarray, ops: KronOperators) -> np.ndarray:
    """Autocovariance of the vectorized latent state at (signed) lag ``h``."""
    var0 = np.asarray(var0, dtype=float)
    if h < 0:
        return acov_y(-h, var0, ops).T
    if h == 0:
        return var0.copy()
    return _expm(ops.mean_gen * h) @ var0


# ---------------------------------------------------------------------------
# second moment


def second_moment_ode(
    initial_m: np.ndarray,
    ops: KronOperators,
    c: np.ndarray,
    y0_mean: np.ndarray,
    t: float,
) -> np.ndarray:
    """Propagate the second moment of the vectorized latent state to time ``t``.

    The dynamics are linear with an inhomogeneity that is itself an
    exponential of the mean dynamics, so one augmented matrix exponential
    integrates everything exactly in a single step.
    """
    initial_m = np.asarray(initial_m, dtype=float)
    y0_mean = np.asarray(y0_mean, dtype=float).reshape(-1)
    d2 = ops.dim**2
    d4 = d2 * d2
    if t == 0.0:
        return initial_m.copy()
    coupling, constant = _forcing_blocks(ops, c)
    z = np.zeros((d4 + d2 + 1, d4 + d2 + 1))
    z[:d4, :d4] = ops.second_gen
    z[:d4, d4 : d4 + d2] = coupling
    z[:d4, -1] = constant
    z[d4 : d4 + d2, d4 : d4 + d2] = ops.mean_gen
    z[d4 : d4 + d2, -1] = ops.sigma_l * (ops.kron_a @ vec(c))
    state = np.concatenate([vec(initial_m), y0_mean, [1.0]])
    out = (_expm(z * t) @ state)[:d4]
    return unvec(out)


def stationary_second_moment(
    ops: KronOperators, c: np.ndarray, mean_y: np.ndarray | None = None
) -> np.ndarray:
    """Stationary second moment of the vectorized latent state.

    Solves the vectorized fixed-point system and verifies the result against
    the unvectorized stationary identity built from the reshuffle operator.
    """
    if mean_y is None:
        mean_y, _ = stationary_mean(ops, c)
    mean_y = np.asarray(mean_y, dtype=float).reshape(-1)
    vc = vec(c)
    coupling, constant = _forcing_blocks(ops, c)
    rhs = constant + coupling @ mean_y
    m = unvec(-_solve(ops.second_gen, rhs, "second-moment generator"))
    m = (m + m.T) / 2
    scale = 1.0 + float(np.linalg.norm(m))
    cross = np.outer(mean_y, vc)
    resid = (
        ops.mean_gen @ m
        + m @ ops.mean_gen.T
        + ops.kron_a @ ops.apply_quartic_mix(m) @ ops.kron_a.T
        + ops.sigma_l * (np.outer(ops.kron_a @ vc, mean_y) + np.outer(mean_y, ops.kron_a @ vc))
        + ops.kron_a @ ops.apply_quartic_mix(cross + cross.T + np.outer(vc, vc)) @ ops.kron_a.T
    )
    if np.linalg.norm(resid) > 1e-8 * scale:
        raise AssertionError("stationary second moment does not solve its fixed-point identity")
    return m


def stationary_var(
    ops: KronOperators, c: np.ndarray, mean_y: np.ndarray | None = None
) -> np.ndarray:
    """Stationary variance of the vectorized latent state.

    Evaluated from its own closed form and cross-checked against second
    moment minus squared mean; the two must agree to near machine precision.
    """
    if mean_y is None:
        mean_y, _ = stationary_mean(ops, c)
    mean_y = np.asarray(mean_y, dtype=float).reshape(-1)
    vc = vec(c)
    d2 = ops.dim**2
    coupling, constant = _forcing_blocks(ops, c)
    mean_gen_inv_kron_a = _solve(ops.mean_gen, ops.kron_a, "mean generator")
    pair_inv = np.kron(mean_gen_inv_kron_a, mean_gen_inv_kron_a)
    lead = ops.sigma_l**2 * (ops.second_gen @ pair_inv @ np.kron(vc, vc))
    rhs = lead + constant + coupling @ mean_y
    var = unvec(-_solve(ops.second_gen, rhs, "second-moment generator"))
    var = (var + var.T) / 2
    second = stationary_second_moment(ops, c, mean_y)
    alt = second - np.outer(mean_y, mean_y)
    scale = 1.0 + float(np.linalg.norm(alt))
    if np.linalg.norm(var - alt) > 1e-10 * scale:
        raise AssertionError("variance routes disagree beyond tolerance")
    eigs = np.linalg.eigvalsh(var)
    if eigs[0] < -1e-8 * max(np.trace(var), 1.0):
        raise AssertionError("stationary variance is not PSD within tolerance")
    return var


# ---------------------------------------------------------------------------
# increments of the observed process


@dataclass(frozen=True)
class IncrementMoments:
    """Second-order structure of the observed increments over one window."""

    delta: float
    mean: np.ndarray  # (d,), identically zero
    var: np.ndarray  # (d, d)
    second: np.ndarray  # (d, d), equals var since the mean vanishes


def increment_moments(
    ops: KronOperators,
    c: np.ndarray,
    sigma_w: float,
    delta: float,
    mean_v: np.ndarray | None = None,
) -> IncrementMoments:
    """Stationary mean/variance/second moment of increments over windows of ``delta``."""
    if delta <= 0:
        raise ValueError("window length must be positive")
    check_routes = mean_v is None
    if mean_v is None:
        _, mean_v = stationary_mean(ops, c)
    mean_v = np.asarray(mean_v, dtype=float).reshape(-1)
    total = ops.sigma_l + sigma_w
    var = total * delta * unvec(mean_v)
    if check_routes:
        check = total * delta * _solve(ops.mean_gen, ops.flow2 @ vec(c), "mean generator")
        if np.linalg.norm(check - total * delta * mean_v) > 1e-9 * (1.0 + np.linalg.norm(check)):
            raise AssertionError("vectorized increment variance disagrees with its matrix form")
    d = ops.dim
    return IncrementMoments(delta=float(delta), mean=np.zeros(d), var=var, second=var.copy())


def squared_increment_acov(
    h: int,
    m1: np.ndarray,
    ops: KronOperators,
    sigma_w: float,
    delta: float,
) -> np.ndarray:
    """Autocovariance of vectorized squared increments at integer lag ``h >= 1``.

    The cross-covariance input ``m1`` has no closed form and is estimated
    from simulation; the testable content is the exact matrix-geometric decay
    this formula produces in ``h``.
    """
    if h < 1 or int(h) != h:
        raise ValueError("lag must be a positive integer")
    m1 = np.asarray(m1, dtype=float)
    total = ops.sigma_l + sigma_w
    core = _solve(ops.mean_gen, (np.eye(ops.dim**2) - _expm(-ops.mean_gen * delta)) @ m1, "mean generator")
    return _expm(ops.mean_gen * delta * h) @ (total * core)


# ---------------------------------------------------------------------------
# empirical estimators


@dataclass(frozen=True)
class Estimate:
    """A point estimate with entrywise batch-means standard errors."""

    value: np.ndarray
    se: np.ndarray

    def z(self, target: np.ndarray) -> np.ndarray:
        se = np.where(self.se > 0, self.se, np.inf)
        return (self.value - np.asarray(target)) / se


def _batch_means(series: np.ndarray, n_batches: int) -> np.ndarray:
    """Stack of batch means of a (time, ...)-shaped series."""
    n = series.shape[0]
    n_batches = max(2, min(n_batches, n))
    chunks = np.array_split(series, n_batches, axis=0)
    return np.stack([c.mean(axis=0) for c in chunks])


def _pool_batches(per_path: list[np.ndarray]) -> Estimate:
    """Pool batch means across paths; batches are (nearly) independent either way."""
    bm = np.concatenate(per_path, axis=0)
    return Estimate(value=bm.mean(axis=0), se=bm.std(axis=0, ddof=1) / np.sqrt(bm.shape[0]))


def _lag_products(x: np.ndarray, mean: np.ndarray, lag: int) -> np.ndarray:
    centered = x - mean
    if lag == 0:
        return np.einsum("ni,nj->nij", centered, centered)
    return np.einsum("ni,nj->nij", centered[lag:], centered[:-lag])


@dataclass
class EmpiricalMoments:
    """Sample moments of the latent state and the observed increments, with SEs."""

    mean_y: Estimate
    mean_v: Estimate
    var_y: Estimate
    acov_y: dict[float, Estimate]
    mean_g: Estimate | None = None
    var_g: Estimate | None = None
    second_gg: Estimate | None = None
    acov_g: dict[int, Estimate] = field(default_factory=dict)
    acov_gg: dict[int, Estimate] = field(default_factory=dict)
    cross_y_gg: Estimate | None = None
    n_paths: int = 1
    n_time_points: int = 0


def empirical_moments(
    samples,
    delta: float | None = None,
    *,
    acov_lags_y: tuple[float, ...] = (),
    acov_lags_g: tuple[int, ...] = (),
    acov_lags_gg: tuple[int, ...] = (),
    n_batches: int = DEFAULT_N_BATCHES,
) -> EmpiricalMoments:
    """Estimate means, variances and autocovariances from simulated paths.

    Accepts one long path (batch-means SEs over time) or several paths
    (SEs across paths).  Burn-in is assumed to have been handled at
    simulation time.  Lags for the latent state are in time units and must
    align with the recording grid; increment lags are in windows.
    """
    if isinstance(samples, sim.PathSample):
        samples = [samples]
    samples = list(samples)
    if not samples:
        raise ValueError("need at least one path")
    if len(samples) == 1 and samples[0].grid.size < 4:
        raise ValueError("a single path must carry enough grid points to batch")

    step = float(samples[0].grid[1] - samples[0].grid[0])
    d = samples[0].dim
    per_path_batches = max(2, n_batches // len(samples))

    def vec_series(arr):
        n = arr.shape[0]
        return arr.transpose(0, 2, 1).reshape(n, d * d)

    per_mean, per_meanv, per_var = [], [], []
    per_acov: dict[float, list[np.ndarray]] = {h: [] for h in acov_lags_y}
    per_mean_g, per_var_g, per_second_gg = [], [], []
    per_acov_g: dict[int, list[np.ndarray]] = {h: [] for h in acov_lags_g}
    per_acov_gg: dict[int, list[np.ndarray]] = {h: [] for h in acov_lags_gg}
    per_cross: list[np.ndarray] = []
    n_time = 0

    for sample in samples:
        ys = vec_series(sample.y)
        vs = vec_series(sample.v)
        n_time += ys.shape[0]
        mu = ys.mean(axis=0)
        per_mean.append(_batch_means(ys, per_path_batches))
        per_meanv.append(_batch_means(vs, per_path_batches))
        per_var.append(_batch_means(_lag_products(ys, mu, 0), per_path_batches))
        for h in acov_lags_y:
            lag = int(round(h / step))
            if abs(lag * step - h) > 1e-9 * max(1.0, h):
                raise ValueError(f"lag {h} is not a multiple of the grid step {step}")
            per_acov[h].append(_batch_means(_lag_products(ys, mu, lag), per_path_batches))
        if delta is not None:
            inc = sim.aggregate_increments(sample, delta)
            per_mean_g.append(_batch_means(inc, per_path_batches))
            mu_g = inc.mean(axis=0)
            per_var_g.append(_batch_means(_lag_products(inc, mu_g, 0), per_path_batches))
            sq = np.einsum("ni,nj->nij", inc, inc).transpose(0, 2, 1).reshape(inc.shape[0], d * d)
            per_second_gg.append(_batch_means(sq, per_path_batches))
            mu_sq = sq.mean(axis=0)
            for h in acov_lags_g:
                per_acov_g[h].append(_batch_means(_lag_products(inc, mu_g, h), per_path_batches))
            for h in acov_lags_gg:
                per_acov_gg[h].append(_batch_means(_lag_products(sq, mu_sq, h), per_path_batches))
            # latent state at window ends against the same window's squared increment
            idx = np.searchsorted(sample.grid, delta * np.arange(1, inc.shape[0] + 1) - 1e-12)
            y_at = ys[np.minimum(idx, ys.shape[0] - 1)]
            prods = np.einsum("ni,nj->nij", y_at - y_at.mean(axis=0), sq - mu_sq)
            per_cross.append(_batch_means(prods, per_path_batches))

    out = EmpiricalMoments(
        mean_y=_pool_batches(per_mean),
        mean_v=_pool_batches(per_meanv),
        var_y=_pool_batches(per_var),
        acov_y={h: _pool_batches(v) for h, v in per_acov.items()},
        n_paths=len(samples),
        n_time_points=n_time,
    )
    if delta is not None:
        out.mean_g = _pool_batches(per_mean_g)
        out.var_g = _pool_batches(per_var_g)
        out.second_gg = _pool_batches(per_second_gg)
        out.acov_g = {h: _pool_batches(v) for h, v in per_acov_g.items()}
        out.acov_gg = {h: _pool_batches(v) for h, v in per_acov_gg.items()}
        out.cross_y_gg = _pool_batches(per_cross)
    return out


# ---------------------------------------------------------------------------
# bundled report


@dataclass
class MomentReport:
    """Analytic second-order structure side by side with its empirical estimates.

    The analytic block holds the stationary closed forms; the empirical block
    (when present) comes from simulation with a burn-in approximated start,
    which ``provenance`` records.  The predicted squared-increment
    autocovariances use the empirically estimated cross-covariance, since that
    input has no closed form.
    """

    delta: float
    provenance: str
    mean_y: np.ndarray
    mean_v: np.ndarray
    second_moment: np.ndarray
    var_y: np.ndarray
    acov_y: dict[float, np.ndarray]
    increment: IncrementMoments
    acov_gg_pred: dict[int, np.ndarray]
    empirical: EmpiricalMoments | None = None

    def __post_init__(self):
        for name, arr in (("var", self.var_y), ("second moment", self.second_moment)):
            arr = np.asarray(arr)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"analytic {name} contains non-finite entries")
        if np.abs(self.var_y - self.var_y.T).max() > 1e-10 * (1 + np.abs(self.var_y).max()):
            raise ValueError("analytic variance is not symmetric")
        if np.linalg.eigvalsh(self.var_y)[0] < -1e-8 * max(np.trace(self.var_y), 1.0):
            raise ValueError("analytic variance is not PSD within tolerance")
        if 0.0 in self.acov_y and np.abs(self.acov_y[0.0] - self.var_y).max() > 1e-12:
            raise ValueError("autocovariance at lag zero must equal the variance")

    def rows(self):
        """Yield (quantity, analytic, empirical, se, z) per scalar entry."""

        def block(name, analytic, estimate):
            analytic = np.asarray(analytic)
            flat_a = analytic.reshape(-1)
            if estimate is None:
                for i in range(flat_a.size):
                    yield f"{name}[{i}]", flat_a[i], None, None, None
                return
            flat_v = estimate.value.reshape(-1)
            flat_se = estimate.se.reshape(-1)
            flat_z = estimate.z(analytic.reshape(estimate.value.shape)).reshape(-1)
            for i in range(flat_a.size):
                yield f"{name}[{i}]", flat_a[i], flat_v[i], flat_se[i], flat_z[i]

        emp = self.empirical
        yield from block("mean_V", self.mean_v, emp.mean_v if emp else None)
        yield from block("var_vecY", self.var_y, emp.var_y if emp else None)
        yield from block("var_G", self.increment.var, emp.var_g if emp else None)
        for h, mat in sorted(self.acov_y.items()):
            yield from block(f"acov_Y({h})", mat, emp.acov_y.get(h) if emp else None)
        for h, mat in sorted(self.acov_gg_pred.items()):
            yield from block(f"acov_GG({h})", mat, emp.acov_gg.get(h) if emp else None)

    def to_text(self) -> str:
        lines = [f"provenance = {self.provenance}", "quantity, analytic, empirical, se, z"]
        for name, analytic, value, se, z in self.rows():
            if value is None:
                lines.append(f"{name}, {analytic:.10g}, , , ")
            else:
                lines.append(f"{name}, {analytic:.10g}, {value:.10g}, {se:.3g}, {z:.2f}")
        return "\n".join(lines) + "\n"

    def max_abs_z(self) -> float:
        worst = 0.0
        for *_rest, z in self.rows():
            if z is not None and np.isfinite(z):
                worst = max(worst, abs(float(z)))
        return worst


def build_moment_report(
    params,
    spec,
    *,
    grid: np.ndarray,
    delta: float,
    n_paths: int,
    seed: int,
    burn_in: float = 0.0,
    acov_lags: tuple[float, ...] = (),
    gg_lags: tuple[int, ...] = (1, 2, 3),
    steps_per_unit: int = sim.BROWNIAN_STEPS_PER_UNIT,
    n_batches: int = DEFAULT_N_BATCHES,
) -> MomentReport:
    """Compute the stationary closed forms and validate them against simulation."""
    ops = _operators_for(params, spec)
    mean_y, mean_v = stationary_mean(ops, params.c)
    second = stationary_second_moment(ops, params.c, mean_y)
    var = stationary_var(ops, params.c, mean_y)
    inc = increment_moments(ops, params.c, spec.sigma_w, delta, mean_v)
    samples = [
        sim.simulate_path(
            params, spec, grid, seed=seed + p, burn_in=burn_in, steps_per_unit=steps_per_unit
        )
        for p in range(n_paths)
    ]
    emp = empirical_moments(
        samples,
        delta=delta,
        acov_lags_y=acov_lags,
        acov_lags_g=gg_lags,
        acov_lags_gg=gg_lags,
        n_batches=n_batches,
    )
    acov_pred = {h: acov_y(h, var, ops) for h in acov_lags}
    gg_pred = {}
    if emp.cross_y_gg is not None and gg_lags:
        m1 = emp.cross_y_gg.value
        gg_pred = {h: squared_increment_acov(h, m1, ops, spec.sigma_w, delta) for h in gg_lags}
    return MomentReport(
        delta=float(delta),
        provenance="stationary closed forms; empirical start approximated by burn-in"
        if burn_in > 0
        else "stationary closed forms; empirical start at zero (transient bias possible)",
        mean_y=mean_y,
        mean_v=mean_v,
        second_moment=second,
        var_y=var,
        acov_y=acov_pred,
        increment=inc,
        acov_gg_pred=gg_pred,
        empirical=emp,
    )


def _operators_for(params, spec) -> KronOperators:
    from .kronalg import build_operators

    return build_operators(params, levy.sigma_l(spec), levy.rho_l(spec))


# ---------------------------------------------------------------------------
# asymptotic approach to stationarity


@dataclass(frozen=True)
class StationaryApproach:
    """Distance of the transient moments from their stationary values over time."""

    times: np.ndarray
    mean_distance: np.ndarray
    second_distance: np.ndarray
    fitted_mean_rate: float | None
    spectral_rate: float

    @property
    def decaying(self) -> bool:
        return bool(self.mean_distance[-1] <= self.mean_distance[0] + 1e-12) and bool(
            self.second_distance[-1] <= self.second_distance[0] + 1e-12
        )


def asymptotic_stationarity_check(
    ops: KronOperators,
    c: np.ndarray,
    y0_mean: np.ndarray,
    y0_m: np.ndarray,
    horizon: float,
    n_points: int = 10,
) -> StationaryApproach:
    """Track how fast the transient mean and second moment approach stationarity.

    Requires the generator spectra to lie in the open left half-plane; the
    fitted exponential rate of the mean distance should track the spectral
    abscissa of the mean generator.
    """
    from .bounds import spectral_check

    spectra = spectral_check(ops)
    if not spectra.all_stable:
        raise SingularOperatorError("generator spectra are not strictly stable")
    m_inf, _ = stationary_mean(ops, c)
    m2_inf = stationary_second_moment(ops, c, m_inf)
    times = np.linspace(0.0, horizon, n_points + 1)[1:]
    mean_d = np.empty(times.size)
    second_d = np.empty(times.size)
    for i, t in enumerate(times):
        mean_d[i] = np.linalg.norm(mean_y_t(y0_mean, ops, c, t) - m_inf)
        second_d[i] = np.linalg.norm(second_moment_ode(y0_m, ops, c, y0_mean, t) - m2_inf)
    scale = 1.0 + float(np.linalg.norm(m_inf))
    usable = mean_d > 1e-12 * scale
    rate = None
    if usable.sum() >= 2:
        coeffs = np.polyfit(times[usable], np.log(mean_d[usable]), 1)
        rate = float(coeffs[0])
    return StationaryApproach(
        times=times,
        mean_distance=mean_d,
        second_distance=second_d,
        fitted_mean_rate=rate,
        spectral_rate=spectra.max_re_mean_gen,
    )
