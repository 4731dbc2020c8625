"""Driving-noise models.

Jump streams are compound Poisson with normal variance-mixture jumps
``sqrt(eps) * Z``; this family is closed under the isotropy requirements the
moment formulas need, so the second and fourth jump-moment constants come
out in closed form.  Infinite-activity mixtures are handled through their
truncated compound-Poisson approximation only.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate, stats

from ._rng import make_rng
from .kronalg import _as_basis, commutation_matrix, vec

COMPOUND_POISSON = "compound_poisson"
TRUNCATED_TYPE_G = "truncated_type_g"


# ---------------------------------------------------------------------------
# mixing-variable laws


@dataclass(frozen=True)
class EpsilonLaw:
    """Law of the positive mixing variable scaling each normal jump."""

    kind: str  # constant | exponential | gamma
    p1: float
    p2: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "exponential", "gamma"):
            raise ValueError(f"unknown mixing law {self.kind!r}")
        if self.p1 <= 0 or (self.kind == "gamma" and self.p2 <= 0):
            raise ValueError("mixing-law parameters must be positive")

    @property
    def mean(self) -> float:
        if self.kind == "constant":
            return self.p1
        if self.kind == "exponential":
            return self.p1
        return self.p1 * self.p2

    @property
    def second_moment(self) -> float:
        if self.kind == "constant":
            return self.p1**2
        if self.kind == "exponential":
            return 2.0 * self.p1**2
        return self.p1 * (self.p1 + 1.0) * self.p2**2

    def sample(self, rng: np.random.Generator, n: int) -> np.ndarray:
        if self.kind == "constant":
            return np.full(n, self.p1)
        if self.kind == "exponential":
            return rng.exponential(self.p1, n)
        return rng.gamma(self.p1, self.p2, n)

    def pdf(self, v: np.ndarray) -> np.ndarray:
        if self.kind == "constant":
            raise ValueError("point mass has no density")
        if self.kind == "exponential":
            return stats.expon.pdf(v, scale=self.p1)
        return stats.gamma.pdf(v, a=self.p1, scale=self.p2)

    def to_dict(self) -> dict:
        if self.kind == "constant":
            return {"law": "constant", "value": self.p1}
        if self.kind == "exponential":
            return {"law": "exponential", "mean": self.p1}
        return {"law": "gamma", "shape": self.p1, "scale": self.p2}

    @classmethod
    def from_dict(cls, d: dict) -> "EpsilonLaw":
        law = d.get("law")
        if law == "constant":
            return constant_mix(d["value"])
        if law == "exponential":
            return exponential_mix(d["mean"])
        if law == "gamma":
            return gamma_mix(d["shape"], d["scale"])
        raise ValueError(f"unknown mixing law {law!r}")


def constant_mix(value: float) -> EpsilonLaw:
    return EpsilonLaw("constant", float(value))


def exponential_mix(mean: float) -> EpsilonLaw:
    return EpsilonLaw("exponential", float(mean))


def gamma_mix(shape: float, scale: float) -> EpsilonLaw:
    return EpsilonLaw("gamma", float(shape), float(scale))


# ---------------------------------------------------------------------------
# specs and streams


@dataclass(frozen=True)
class LevySpec:
    """Description of the driving noise: jump part plus isotropic Brownian part."""

    dim: int
    rate: float
    epsilon: EpsilonLaw
    sigma_w: float = 0.0  # per-unit-time variance scale of the Brownian part
    kind: str = COMPOUND_POISSON
    truncation: float | None = None  # jump-size floor, truncated kind only

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dimension must be at least 1")
        if self.rate < 0:
            raise ValueError("jump rate must be nonnegative")
        if self.sigma_w < 0:
            raise ValueError("Brownian variance scale must be nonnegative")
        if self.kind not in (COMPOUND_POISSON, TRUNCATED_TYPE_G):
            raise ValueError(f"unknown driving-noise kind {self.kind!r}")
        if self.kind == TRUNCATED_TYPE_G:
            if self.truncation is None or self.truncation <= 0:
                raise ValueError("truncated driver needs a positive jump-size floor")
        elif self.truncation is not None:
            raise ValueError("jump-size floor only applies to the truncated driver")

    def with_sigma_w(self, sigma_w: float) -> "LevySpec":
        return replace(self, sigma_w=float(sigma_w))

    def to_dict(self) -> dict:
        out = {
            "kind": self.kind,
            "dim": self.dim,
            "rate": self.rate,
            "epsilon": self.epsilon.to_dict(),
            "sigma_w": self.sigma_w,
        }
        if self.truncation is not None:
            out["truncation"] = self.truncation
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "LevySpec":
        return cls(
            dim=int(d["dim"]),
            rate=float(d["rate"]),
            epsilon=EpsilonLaw.from_dict(d["epsilon"]),
            sigma_w=float(d.get("sigma_w", 0.0)),
            kind=d.get("kind", COMPOUND_POISSON),
            truncation=(float(d["truncation"]) if d.get("truncation") is not None else None),
        )


@dataclass(frozen=True)
class JumpStream:
    """Realized jump times and vectors on ``(0, horizon]``; the shared randomness."""

    horizon: float
    times: np.ndarray  # (n,), strictly increasing
    sizes: np.ndarray  # (n, d)
    seed: tuple | None = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        x = np.asarray(self.sizes, dtype=float)
        if t.ndim != 1 or x.ndim != 2 or x.shape[0] != t.size:
            raise ValueError("times and sizes are inconsistent")
        if t.size and (t[0] <= 0 or t[-1] > self.horizon or np.any(np.diff(t) <= 0)):
            raise ValueError("jump times must be strictly increasing in (0, horizon]")
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "sizes", x)

    @property
    def count(self) -> int:
        return self.times.size

    @property
    def dim(self) -> int:
        return self.sizes.shape[1]

    def truncate(self, floor: float) -> "JumpStream":
        """Drop all jumps with Euclidean norm below ``floor`` (coupled truncation)."""
        keep = np.linalg.norm(self.sizes, axis=1) >= floor
        return JumpStream(self.horizon, self.times[keep], self.sizes[keep], seed=self.seed)


def sample_jumps(spec: LevySpec, horizon: float, seed: int, lane: tuple[int, ...] = ()) -> JumpStream:
    """Draw one jump stream on ``(0, horizon]``; identical seeds give identical streams."""
    if horizon <= 0:
        raise ValueError("horizon must be positive")
    rng = make_rng(seed, lane)
    n = int(rng.poisson(spec.rate * horizon))
    times = np.sort(rng.uniform(0.0, horizon, n))
    # order-statistic ties have probability zero; jitter defensively anyway
    while times.size > 1 and np.any(np.diff(times) <= 0):
        times = np.sort(times + rng.uniform(0, 1e-12, times.size))
    eps = spec.epsilon.sample(rng, n)
    z = rng.standard_normal((n, spec.dim))
    x = np.sqrt(eps)[:, None] * z
    stream = JumpStream(horizon, times, x, seed=(int(seed), tuple(lane)))
    if spec.kind == TRUNCATED_TYPE_G:
        stream = stream.truncate(spec.truncation)
    return stream


# ---------------------------------------------------------------------------
# analytic jump-moment constants


def _truncated_mix_moment(eps_law: EpsilonLaw, floor: float, dim: int, power: int) -> float:
    """``E[eps^power * P(chi2 >= floor^2/eps)]`` with the chi-square dof shifted by ``2*power``.

    This is the exact effect of dropping jumps of norm below ``floor`` on the
    second (power=1) and fourth (power=2) moment constants of the mixture.
    """
    dof = dim + 2 * power

    def tail(v):
        return stats.chi2.sf(floor**2 / v, dof)

    if eps_law.kind == "constant":
        v = eps_law.p1
        return v**power * float(tail(v))
    val, _ = integrate.quad(lambda v: v**power * tail(v) * eps_law.pdf(v), 0.0, np.inf, limit=200)
    return float(val)


def sigma_l(spec: LevySpec) -> float:
    """Per-unit-time second-moment constant of the pure-jump part.

    The mixture jumps are isotropic, so their second moment is this constant
    times the identity by construction.
    """
    if spec.kind == COMPOUND_POISSON:
        return spec.rate * spec.epsilon.mean
    return spec.rate * _truncated_mix_moment(spec.epsilon, spec.truncation, spec.dim, 1)


def rho_l(spec: LevySpec) -> float:
    """Per-unit-time fourth-moment constant of the pure-jump part."""
    if spec.kind == COMPOUND_POISSON:
        return spec.rate * spec.epsilon.second_moment
    return spec.rate * _truncated_mix_moment(spec.epsilon, spec.truncation, spec.dim, 2)


def quartic_structure_matrix(d: int) -> np.ndarray:
    """``I + K_d + vec(I) vec(I)^T``: structural factor of the quartic jump moment."""
    v = vec(np.eye(d))
    return np.eye(d * d) + commutation_matrix(d) + np.outer(v, v)


def default_truncation_floor(
    spec: LevySpec, discard_fraction: float = 1e-3, tol: float = 1e-10
) -> float:
    """Largest floor discarding at most ``discard_fraction`` of the quadratic variation."""
    full = spec.rate * spec.epsilon.mean
    if full == 0:
        raise ValueError("no jump activity to truncate")

    def discarded(floor):
        kept = spec.rate * _truncated_mix_moment(spec.epsilon, floor, spec.dim, 1)
        return 1.0 - kept / full

    lo, hi = 0.0, 1.0
    while discarded(hi) < discard_fraction:
        hi *= 2.0
        if hi > 1e6:
            break
    for _ in range(200):
        mid = (lo + hi) / 2
        if discarded(mid) < discard_fraction:
            lo = mid
        else:
            hi = mid
        if hi - lo < tol:
            break
    return lo


# ---------------------------------------------------------------------------
# sampling-based estimators and per-jump transforms


def empirical_quartic_matrix(
    spec: LevySpec, horizon: float, n_paths: int, seed: int
) -> np.ndarray:
    """Monte Carlo estimate (per unit time) of the quartic jump-moment matrix."""
    if n_paths < 1:
        raise ValueError("need at least one path")
    rng = make_rng(seed, lane=(11,))
    counts = rng.poisson(spec.rate * horizon, n_paths)
    total = int(counts.sum())
    d = spec.dim
    if total == 0:
        return np.zeros((d * d, d * d))
    eps = spec.epsilon.sample(rng, total)
    z = rng.standard_normal((total, d))
    x = np.sqrt(eps)[:, None] * z
    if spec.kind == TRUNCATED_TYPE_G:
        x = x[np.linalg.norm(x, axis=1) >= spec.truncation]
    outer = np.einsum("ni,nj->nij", x, x)
    w = outer.transpose(0, 2, 1).reshape(x.shape[0], d * d)  # column-major vec per jump
    return (w.T @ w) / (n_paths * horizon)


def brownian_increments(
    sigma_w: float, grid: np.ndarray, dim: int, seed: int, lane: tuple[int, ...] = ()
) -> np.ndarray:
    """Independent centered Gaussian increments with variance ``sigma_w * dt`` per coordinate."""
    if sigma_w < 0:
        raise ValueError("Brownian variance scale must be nonnegative")
    grid = np.asarray(grid, dtype=float)
    dt = np.diff(grid)
    if np.any(dt <= 0):
        raise ValueError("grid must be strictly increasing")
    if sigma_w == 0:
        return np.zeros((dt.size, dim))
    rng = make_rng(seed, lane)
    return np.sqrt(sigma_w * dt)[:, None] * rng.standard_normal((dt.size, dim))


def tilde_l_jumps(stream: JumpStream, s) -> np.ndarray:
    """Map each jump to the twisted norm of its vectorized outer product.

    For a rank-one outer product this collapses to ``||S^-1 x||^2``, which is
    what the scalar domination process consumes; jump times are preserved by
    position.
    """
    _, s_inv = _as_basis(s)
    if stream.count == 0:
        return np.zeros(0)
    y = stream.sizes @ s_inv.T
    return (np.abs(y) ** 2).sum(axis=1)
