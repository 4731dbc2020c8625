"""Path simulation of the covariance process and the observed process.

Between jumps the latent process follows its linear flow in closed form, so
the simulated covariance path carries no time-discretization error; jumps
are exact rank-one PSD updates.  Only the Brownian integral in the observed
process uses a left-point scheme on a refined grid, which isolates all
discretization error in the one place it is unavoidable.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from . import levy
from .kronalg import matrix_exp, psd_sqrt, psd_sqrt_batch, vech, vech_labels

#: default Brownian refinement of the recording grid (steps per unit time)
BROWNIAN_STEPS_PER_UNIT = 1024


# ---------------------------------------------------------------------------
# parameters and samples


@dataclass(frozen=True)
class ModelParams:
    """The parameter triple: jump loading ``a``, drift ``b``, baseline level ``c``."""

    a: np.ndarray
    b: np.ndarray
    c: np.ndarray
    allow_degenerate_c: bool = False

    def __post_init__(self):
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        c = np.asarray(self.c, dtype=float)
        if a.ndim == 0:
            a, b, c = (np.atleast_2d(m) for m in (a, b, c))
        shapes = {m.shape for m in (a, b, c)}
        if len(shapes) != 1 or a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"parameter matrices must share one square shape, got {shapes}")
        if not np.all([np.all(np.isfinite(m)) for m in (a, b, c)]):
            raise ValueError("parameter matrices must be finite")
        if np.abs(c - c.T).max() > 1e-10 * (1.0 + np.abs(c).max()):
            raise ValueError("baseline level must be symmetric")
        eigs = np.linalg.eigvalsh((c + c.T) / 2)
        if self.allow_degenerate_c:
            if eigs[0] < -1e-12 * max(1.0, eigs[-1]):
                raise ValueError("baseline level must be positive semidefinite")
        elif eigs[0] <= 0:
            raise ValueError("baseline level must be positive definite")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def dim(self) -> int:
        return self.a.shape[0]


@dataclass(frozen=True)
class PathSample:
    """Recorded states on a grid plus the per-jump records needed to replay the path."""

    grid: np.ndarray  # (m,), starts at 0
    y: np.ndarray  # (m, d, d) latent deviation from the baseline level
    v: np.ndarray  # (m, d, d) covariance, v = c + y throughout
    g: np.ndarray  # (m, d) observed process, g[0] = 0
    jump_times: np.ndarray  # (k,), within (0, grid[-1]]
    jump_x: np.ndarray  # (k, d) jump vectors
    jump_v_pre: np.ndarray  # (k, d, d) covariance just before each jump
    jump_y_post: np.ndarray  # (k, d, d) latent state just after each jump

    @property
    def dim(self) -> int:
        return self.g.shape[1]

    def write_csv(self, fileobj) -> None:
        """One row per grid point: t, lower triangle of y and v, then g."""
        d = self.dim
        writer = csv.writer(fileobj, lineterminator="\n")
        writer.writerow(
            ["t"] + vech_labels("Y", d) + vech_labels("V", d) + [f"G_{i + 1}" for i in range(d)]
        )
        for k in range(self.grid.size):
            row = (
                [self.grid[k]]
                + list(vech(self.y[k]))
                + list(vech(self.v[k]))
                + list(self.g[k])
            )
            writer.writerow([_fmt(v) for v in row])

    def write_jumps_csv(self, fileobj) -> None:
        d = self.dim
        writer = csv.writer(fileobj, lineterminator="\n")
        writer.writerow(
            ["t"]
            + [f"x_{i + 1}" for i in range(d)]
            + vech_labels("Vpre", d)
            + vech_labels("Ypost", d)
        )
        for k in range(self.jump_times.size):
            row = (
                [self.jump_times[k]]
                + list(self.jump_x[k])
                + list(vech(self.jump_v_pre[k]))
                + list(vech(self.jump_y_post[k]))
            )
            writer.writerow([_fmt(v) for v in row])


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# exact flow evaluation


class _Flow:
    """Evaluates ``X -> e^{Bt} X e^{B^T t}``, batched over t.

    Uses the eigendecomposition of the drift matrix when it is trustworthy;
    falls back to per-step matrix exponentials (with a dt cache) otherwise,
    so defective drift matrices still work.
    """

    def __init__(self, b: np.ndarray):
        self.b = np.asarray(b, dtype=float)
        self.dim = self.b.shape[0]
        self._cache: dict[float, np.ndarray] = {}
        self.spectral = False
        try:
            w, s = np.linalg.eig(self.b)
            s_inv = np.linalg.inv(s)
            scale = max(1.0, float(np.linalg.norm(self.b, 2)))
            resid = np.linalg.norm(s @ np.diag(w) @ s_inv - self.b, 2)
            if np.linalg.cond(s) < 1e9 and resid < 1e-10 * scale:
                self.w = w.astype(complex)
                self.s = s.astype(complex)
                self.s_inv = s_inv.astype(complex)
                self.spectral = True
        except np.linalg.LinAlgError:
            pass

    def expbt(self, t: float) -> np.ndarray:
        if t == 0.0:
            return np.eye(self.dim)
        if self.spectral:
            return ((self.s * np.exp(self.w * t)) @ self.s_inv).real
        key = float(t)
        if key not in self._cache:
            self._cache[key] = matrix_exp(self.b, t)
        return self._cache[key]

    def expbt_batch(self, ts: np.ndarray) -> np.ndarray:
        ts = np.asarray(ts, dtype=float)
        if self.spectral:
            phases = np.exp(np.outer(ts, self.w))
            return np.einsum("ab,tb,bc->tac", self.s, phases, self.s_inv).real
        return np.stack([self.expbt(t) for t in ts])

    def propagate(self, y: np.ndarray, dt: float) -> np.ndarray:
        e = self.expbt(dt)
        out = e @ y @ e.T
        return (out + out.T) / 2

    def propagate_batch(self, y: np.ndarray, ts: np.ndarray) -> np.ndarray:
        e = self.expbt_batch(ts)
        out = np.einsum("tab,bc,tdc->tad", e, y, e)
        return (out + out.transpose(0, 2, 1)) / 2


def flow_y(y: np.ndarray, b: np.ndarray, dt: float) -> np.ndarray:
    """Deterministic inter-jump evolution ``e^{B dt} Y e^{B^T dt}``; preserves PSD."""
    if dt < 0:
        raise ValueError("time step must be nonnegative")
    return _Flow(b).propagate(np.asarray(y, dtype=float), dt)


def jump_update(y: np.ndarray, c: np.ndarray, a: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Apply one jump: add the rank-one PSD increment built from the pre-jump covariance."""
    y = np.asarray(y, dtype=float)
    v_half = psd_sqrt(np.asarray(c, dtype=float) + y)
    w = np.asarray(a, dtype=float) @ (v_half @ np.asarray(x, dtype=float))
    return y + np.outer(w, w)


def deterministic_flow_v(v0: np.ndarray, params: ModelParams, t: float) -> np.ndarray:
    """Jump-free covariance flow ``C + e^{Bt}(V0 - C)e^{B^T t}``.

    Deliberately unguarded: with ``V0`` below the baseline level the result
    can leave the PSD cone, which is exactly the regime the dedicated
    counterexample entry point exercises.
    """
    v0 = np.asarray(v0, dtype=float)
    e = matrix_exp(params.b, t)
    out = params.c + e @ (v0 - params.c) @ e.T
    return (out + out.T) / 2


# ---------------------------------------------------------------------------
# path simulation


def _refined_edges(rec: np.ndarray, steps_per_unit: int) -> tuple[np.ndarray, np.ndarray]:
    """Subdivide each recording interval into equal cells.

    Recording times are inserted verbatim so they can be located exactly; the
    returned index array maps each recording time to its edge position.
    """
    pieces = [np.array([rec[0]])]
    rec_idx = np.empty(rec.size, dtype=np.int64)
    rec_idx[0] = 0
    pos = 0
    for k in range(rec.size - 1):
        t0, t1 = rec[k], rec[k + 1]
        n_sub = max(1, int(round((t1 - t0) * steps_per_unit)))
        interior = t0 + (t1 - t0) * np.arange(1, n_sub) / n_sub
        pieces.append(np.concatenate([interior, [t1]]))
        pos += n_sub
        rec_idx[k + 1] = pos
    return np.concatenate(pieces), rec_idx


def simulate_path(
    params: ModelParams,
    spec: levy.LevySpec | None,
    grid: np.ndarray,
    seed: int,
    *,
    y0: np.ndarray | None = None,
    jumps: levy.JumpStream | None = None,
    burn_in: float = 0.0,
    steps_per_unit: int = BROWNIAN_STEPS_PER_UNIT,
) -> PathSample:
    """Simulate one coupled path of the latent and observed processes.

    The latent process is advanced exactly: closed-form flow between events,
    rank-one updates at jumps.  The observed process accumulates the
    covariance-root jump kicks exactly and the Brownian part by left-point
    evaluation on a grid refined by ``steps_per_unit``.  With ``burn_in > 0``
    the path is simulated on ``[0, burn_in + grid[-1]]`` and recorded (with the
    observed process restarted at zero) from ``burn_in`` on.

    Passing an explicit ``jumps`` stream couples this run to others sharing
    the same randomness; ``spec`` may then be ``None`` for a jump-only driver.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or grid[0] != 0.0 or np.any(np.diff(grid) <= 0):
        raise ValueError("recording grid must start at 0 and increase strictly")
    if burn_in < 0:
        raise ValueError("burn-in must be nonnegative")
    d = params.dim
    horizon = burn_in + float(grid[-1])

    if jumps is None:
        if spec is None:
            raise ValueError("either a noise spec or an explicit jump stream is required")
        jumps = levy.sample_jumps(spec, horizon, seed, lane=(0,))
    elif jumps.horizon < horizon - 1e-12:
        raise ValueError("jump stream does not cover the simulation horizon")

    sigma_w = 0.0 if spec is None else spec.sigma_w
    rec = burn_in + grid
    if sigma_w > 0:
        edges, rec_idx = _refined_edges(rec, steps_per_unit)
        dw = levy.brownian_increments(sigma_w, edges, d, seed, lane=(1,))
    else:
        edges = rec
        rec_idx = np.arange(rec.size)
        dw = np.zeros((edges.size - 1, d))

    y = np.zeros((d, d)) if y0 is None else np.asarray(y0, dtype=float).copy()
    y = (y + y.T) / 2
    flow = _Flow(params.b)
    c = params.c

    jt = jumps.times
    jx = jumps.sizes
    j_in = (jt > 0) & (jt <= horizon + 1e-12)
    jt, jx = jt[j_in], jx[j_in]

    n_rec = rec.size
    y_out = np.empty((n_rec, d, d))

    # cumulative Brownian contribution at each edge, and jump kicks by time
    g_brownian = np.zeros((edges.size, d))
    jump_g = np.zeros((jt.size, d))
    jr_v_pre = np.empty((jt.size, d, d))
    jr_y_post = np.empty((jt.size, d, d))

    t_anchor = 0.0
    seg_bounds = np.concatenate([jt, [np.inf]])
    edge_ptr = 0
    chunk = 1 << 16
    n_cells = edges.size - 1
    for seg, t_next in enumerate(seg_bounds):
        hi = int(np.searchsorted(edges, t_next, side="left"))
        lo = edge_ptr
        while lo < hi:
            stop = min(lo + chunk, hi)
            y_batch = flow.propagate_batch(y, edges[lo:stop] - t_anchor)
            if sigma_w > 0:
                k1 = min(stop, n_cells)  # cells whose left edge lies in this chunk
                if k1 > lo:
                    v_half = psd_sqrt_batch(c + y_batch[: k1 - lo])
                    inc = np.einsum("kij,kj->ki", v_half, dw[lo:k1])
                    g_brownian[lo + 1 : k1 + 1] = g_brownian[lo] + np.cumsum(inc, axis=0)
            take = (rec_idx >= lo) & (rec_idx < stop)
            if np.any(take):
                y_out[take] = y_batch[rec_idx[take] - lo]
            lo = stop
        edge_ptr = hi
        if not np.isfinite(t_next):
            break
        # advance to the jump and apply it
        y = flow.propagate(y, t_next - t_anchor)
        v_pre = c + y
        v_half = psd_sqrt(v_pre)
        jump_g[seg] = v_half @ jx[seg]
        w = params.a @ (v_half @ jx[seg])
        y = y + np.outer(w, w)
        jr_v_pre[seg] = v_pre
        jr_y_post[seg] = y
        t_anchor = t_next

    # assemble the observed process at recording times
    jump_cum = np.vstack([np.zeros(d), np.cumsum(jump_g, axis=0)])
    n_jumps_by_rec = np.searchsorted(jt, rec, side="right")
    n_jumps_at_start = int(np.searchsorted(jt, burn_in, side="right"))
    g_out = g_brownian[rec_idx] + jump_cum[n_jumps_by_rec]
    g_out = g_out - g_out[0]

    keep_j = slice(n_jumps_at_start, int(n_jumps_by_rec[-1]))
    return PathSample(
        grid=grid,
        y=y_out,
        v=c + y_out,
        g=g_out,
        jump_times=jt[keep_j] - burn_in,
        jump_x=jx[keep_j],
        jump_v_pre=jr_v_pre[keep_j],
        jump_y_post=jr_y_post[keep_j],
    )


# ---------------------------------------------------------------------------
# replay, approximation ladder, increments


def shot_noise_eval(y0: np.ndarray, params: ModelParams, sample: PathSample, t: float) -> np.ndarray:
    """Re-evaluate the latent state at ``t`` from its explicit flow-plus-kicks form.

    Must coincide with the recursively simulated value; disagreements signal
    a kernel bug, which is what makes this a useful cross-check.
    """
    if t < 0 or t > sample.grid[-1] + 1e-12:
        raise ValueError("evaluation time outside the simulated window")
    flow = _Flow(params.b)
    out = flow.propagate(np.asarray(y0, dtype=float), t)
    for k in range(sample.jump_times.size):
        s = sample.jump_times[k]
        if s > t:
            break
        w = params.a @ (psd_sqrt(sample.jump_v_pre[k]) @ sample.jump_x[k])
        e = flow.expbt(t - s)
        kick = e @ np.outer(w, w) @ e.T
        out = out + (kick + kick.T) / 2
    return out


@dataclass(frozen=True)
class LadderReport:
    """Sup-distances of truncated-driver paths from the finest-truncation reference."""

    floors: np.ndarray
    distances: np.ndarray

    @property
    def non_increasing(self) -> bool:
        slack = 1e-9 * (1.0 + float(self.distances.max(initial=0.0)))
        return bool(np.all(np.diff(self.distances) <= slack))


def cp_approximation_ladder(
    params: ModelParams,
    spec: levy.LevySpec | None,
    grid: np.ndarray,
    eps_sequence,
    seed: int,
    *,
    jumps: levy.JumpStream | None = None,
    y0: np.ndarray | None = None,
) -> LadderReport:
    """Couple one jump stream across a decreasing ladder of jump-size floors.

    Every rung keeps only jumps at least its floor tall; the last (smallest)
    floor is the reference path.  Reported distances are sups over the grid of
    the spectral-norm gap, and shrink as the floor does.
    """
    floors = np.asarray(list(eps_sequence), dtype=float)
    if floors.size < 1 or np.any(floors <= 0) or np.any(np.diff(floors) >= 0):
        raise ValueError("floors must be positive and strictly decreasing")
    grid = np.asarray(grid, dtype=float)
    if jumps is None:
        if spec is None:
            raise ValueError("either a noise spec or an explicit jump stream is required")
        jumps = levy.sample_jumps(spec, float(grid[-1]), seed, lane=(0,))

    def run(stream):
        return simulate_path(params, None, grid, seed, y0=y0, jumps=stream)

    ref = run(jumps.truncate(floors[-1]))
    dist = np.empty(floors.size)
    for i, floor in enumerate(floors):
        path = run(jumps.truncate(floor))
        gaps = np.linalg.norm(path.y - ref.y, ord=2, axis=(1, 2))
        dist[i] = float(gaps.max())
    return LadderReport(floors=floors, distances=dist)


def aggregate_increments(sample: PathSample, delta: float) -> np.ndarray:
    """Non-overlapping increments of the observed process over windows of length ``delta``."""
    grid = sample.grid
    n = int(round(grid[-1] / delta))
    if n < 1:
        raise ValueError("window longer than the recorded horizon")
    targets = delta * np.arange(n + 1)
    idx = np.searchsorted(grid, targets - 1e-12 * max(1.0, delta))
    idx = np.minimum(idx, grid.size - 1)
    if np.abs(grid[idx] - targets).max() > 1e-9 * max(1.0, delta):
        raise ValueError("window length is not aligned with the recording grid")
    return np.diff(sample.g[idx], axis=0)
