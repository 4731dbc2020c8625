"""Scalar domination process and stationarity condition checkers.

The latent matrix process, measured in the twisted norm attached to the
drift matrix's eigenbasis, is bounded pathwise by a univariate process of
the same family.  The jump-law integrals behind the stationarity conditions
have no general closed form, so they are estimated by Monte Carlo with a
deliberate three-standard-error INCONCLUSIVE band instead of a false binary.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import levy
from ._rng import make_rng
from .exceptions import NonDiagonalizableError
from .kronalg import (
    KronOperators,
    SpectralData,
    _as_basis,
    bs_norm_mat,
    bs_norm_vec,
    commutation_matrix,
    diagonalize,
    k2b,
    kron,
    vec,
)
from .sim import ModelParams, PathSample

SATISFIED = "SATISFIED"
VIOLATED = "VIOLATED"
INCONCLUSIVE = "INCONCLUSIVE"

#: default number of Monte Carlo draws for the jump-law integrals
DEFAULT_N_MC = 1_000_000


# ---------------------------------------------------------------------------
# scalar domination process


@dataclass(frozen=True)
class BoundParams:
    """Coefficients of the univariate process dominating the twisted norm of the path.

    ``substitution_mode`` records whether the worst-case norm-ratio constant
    was searched for ("exact") or replaced by its provable stand-ins
    ("safe"); the safe variant is more conservative but needs no search.
    """

    lam: float
    alpha1: float
    c_level: float
    substitution_mode: str
    k2b_value: float
    aa_norm: float
    s_norm: float
    s_inv_norm: float

    def __post_init__(self):
        if self.alpha1 < 0 or self.c_level < 0:
            raise ValueError("bound coefficients must be nonnegative")


def bound_params(
    params: ModelParams,
    spectral: SpectralData | None = None,
    *,
    mode: str = "exact",
    k2b_samples: int = 10_000,
    seed: int = 0,
) -> BoundParams:
    """Assemble the domination-process coefficients for a parameter set."""
    if mode not in ("exact", "safe"):
        raise ValueError("mode must be 'exact' or 'safe'")
    if spectral is None:
        spectral = diagonalize(params.b)
    s_norm = float(np.linalg.norm(spectral.s, 2))
    s_inv_norm = float(np.linalg.norm(spectral.s_inv, 2))
    if mode == "exact":
        k = k2b(spectral, n_samples=k2b_samples, seed=seed)
        aa = bs_norm_mat(kron(params.a, params.a), spectral)
    else:
        k = k2b(spectral, use_upper_bound=True)
        aa = float(np.linalg.norm(params.a, 2)) ** 2
    alpha1 = s_norm**2 * s_inv_norm**2 * k * aa
    c_level = float(np.linalg.norm(params.c, 2)) / k
    return BoundParams(
        lam=spectral.lam,
        alpha1=alpha1,
        c_level=c_level,
        substitution_mode=mode,
        k2b_value=k,
        aa_norm=aa,
        s_norm=s_norm,
        s_inv_norm=s_inv_norm,
    )


def bound_process(
    bp: BoundParams,
    jump_times: np.ndarray,
    jump_sizes: np.ndarray,
    y0: float,
    grid: np.ndarray,
) -> np.ndarray:
    """Evolve the scalar domination process on the grid.

    Exponential decay at twice the spectral abscissa between jumps, and
    multiplicative kicks ``alpha1 * (c_level + y) * size`` at the jump times
    of the coupled stream (sizes already in the twisted norm).
    """
    jump_times = np.asarray(jump_times, dtype=float)
    jump_sizes = np.asarray(jump_sizes, dtype=float)
    if jump_times.shape != jump_sizes.shape:
        raise ValueError("jump times and sizes must align one to one")
    grid = np.asarray(grid, dtype=float)
    out = np.empty(grid.size)
    y = float(y0)
    t = 0.0
    j = 0
    rate = 2.0 * bp.lam
    for k, tk in enumerate(grid):
        while j < jump_times.size and jump_times[j] <= tk:
            y *= np.exp(rate * (jump_times[j] - t))
            y += bp.alpha1 * (bp.c_level + y) * jump_sizes[j]
            t = jump_times[j]
            j += 1
        out[k] = y * np.exp(rate * (tk - t))
    return out


def verify_domination(sample: PathSample, y_path: np.ndarray, s) -> float:
    """Largest excess of the twisted path norm over the scalar bound (negative is good)."""
    if y_path.shape[0] != sample.grid.size:
        raise ValueError("bound path and sample grid do not match")
    _, s_inv = _as_basis(s)
    ki = np.kron(s_inv, s_inv)
    n, d, _ = sample.y.shape
    vecs = sample.y.transpose(0, 2, 1).reshape(n, d * d)
    norms = np.linalg.norm(vecs @ ki.T, axis=1)
    return float(np.max(norms - y_path))


# ---------------------------------------------------------------------------
# moment conditions for stationarity


@dataclass(frozen=True)
class MomentCondition:
    """One Monte Carlo estimate of a jump-law integral against its threshold."""

    kind: str  # "log" or "power"
    k: int | None
    lhs: float
    se: float
    threshold: float
    verdict: str
    n_mc: int
    note: str = ""

    @staticmethod
    def classify(lhs: float, se: float, threshold: float) -> str:
        if lhs + 3 * se < threshold:
            return SATISFIED
        if lhs - 3 * se > threshold:
            return VIOLATED
        return INCONCLUSIVE


def _condition_inputs(params, spec, mode, seed):
    spectral = diagonalize(params.b)
    bp = bound_params(params, spectral, mode=mode, seed=seed)
    note = ""
    if spec.kind == levy.TRUNCATED_TYPE_G:
        note = "integral over the truncated jump measure; untruncated verdict may differ"
    return spectral, bp, note


def _twisted_jump_sizes(spec, spectral, n_mc, seed):
    """Draw jump vectors and map them to the twisted norm of their outer product."""
    rng = make_rng(seed, lane=(23,))
    eps = spec.epsilon.sample(rng, n_mc)
    z = rng.standard_normal((n_mc, spec.dim))
    x = np.sqrt(eps)[:, None] * z
    y = x @ spectral.s_inv.T
    sizes = (np.abs(y) ** 2).sum(axis=1)
    if spec.kind == levy.TRUNCATED_TYPE_G:
        sizes = np.where(np.linalg.norm(x, axis=1) >= spec.truncation, sizes, 0.0)
    return sizes


def log_moment_condition(
    params: ModelParams,
    spec: levy.LevySpec,
    n_mc: int = DEFAULT_N_MC,
    seed: int = 0,
    *,
    mode: str = "exact",
) -> MomentCondition:
    """Check the logarithmic jump-moment condition for existence of a stationary law."""
    spectral, bp, note = _condition_inputs(params, spec, mode, seed)
    threshold = -2.0 * bp.lam
    if spec.rate == 0 or not np.any(params.a):
        return MomentCondition(
            "log", None, 0.0, 0.0, threshold, MomentCondition.classify(0.0, 0.0, threshold), 0, note
        )
    sizes = _twisted_jump_sizes(spec, spectral, n_mc, seed)
    vals = np.log1p(bp.alpha1 * sizes)
    lhs = spec.rate * float(np.mean(vals))
    se = spec.rate * float(np.std(vals, ddof=1) / np.sqrt(n_mc))
    return MomentCondition(
        "log", None, lhs, se, threshold, MomentCondition.classify(lhs, se, threshold), n_mc, note
    )


def k_moment_condition(
    params: ModelParams,
    spec: levy.LevySpec,
    k: int,
    n_mc: int = DEFAULT_N_MC,
    seed: int = 0,
    *,
    mode: str = "exact",
) -> MomentCondition:
    """Check the k-th power jump-moment condition for finiteness of the k-th moment."""
    if k < 1 or int(k) != k:
        raise ValueError("moment order must be a positive integer")
    spectral, bp, note = _condition_inputs(params, spec, mode, seed)
    threshold = -2.0 * bp.lam * k
    if spec.rate == 0 or not np.any(params.a):
        return MomentCondition(
            "power", int(k), 0.0, 0.0, threshold,
            MomentCondition.classify(0.0, 0.0, threshold), 0, note,
        )
    sizes = _twisted_jump_sizes(spec, spectral, n_mc, seed)
    vals = np.expm1(k * np.log1p(bp.alpha1 * sizes))
    lhs = spec.rate * float(np.mean(vals))
    se = spec.rate * float(np.std(vals, ddof=1) / np.sqrt(n_mc))
    return MomentCondition(
        "power", int(k), lhs, se, threshold, MomentCondition.classify(lhs, se, threshold), n_mc, note
    )


# ---------------------------------------------------------------------------
# spectral checks


@dataclass(frozen=True)
class SpectralCheck:
    """Spectral abscissas and invertibility of the drift and the moment generators."""

    max_re_drift: float
    max_re_mean_gen: float
    max_re_second_gen: float
    mean_gen_invertible: bool
    second_gen_invertible: bool

    @property
    def all_stable(self) -> bool:
        return max(self.max_re_drift, self.max_re_mean_gen, self.max_re_second_gen) < 0


def _invertible(m: np.ndarray) -> bool:
    svals = np.linalg.svd(m, compute_uv=False)
    return bool(svals[-1] > m.shape[0] * np.finfo(float).eps * svals[0])


def spectral_check(ops: KronOperators) -> SpectralCheck:
    """Largest real parts of the relevant spectra plus invertibility flags."""
    return SpectralCheck(
        max_re_drift=float(np.max(np.linalg.eigvals(ops.b).real)),
        max_re_mean_gen=float(np.max(np.linalg.eigvals(ops.mean_gen).real)),
        max_re_second_gen=float(np.max(np.linalg.eigvals(ops.second_gen).real)),
        mean_gen_invertible=_invertible(ops.mean_gen),
        second_gen_invertible=_invertible(ops.second_gen),
    )


@dataclass(frozen=True)
class QuarticNormCondition:
    """The technical norm inequality gating the second-moment spectral result."""

    lhs: float
    rhs: float
    k2b_value: float

    @property
    def satisfied(self) -> bool:
        return self.lhs <= self.rhs


def quartic_norm_condition(
    ops: KronOperators, s, *, k2b_value: float | None = None, seed: int = 0
) -> QuarticNormCondition:
    """Compare the twisted norm of the reshuffle-sum operator against its structural bound.

    Both sides are measured in the norm conjugated by the fourfold Kronecker
    power of the eigenvector basis; for a unitary basis the inequality always
    holds.  A search-based ratio constant only ever shrinks the right-hand
    side, so a True result is trustworthy.
    """
    s_mat, s_inv = _as_basis(s)
    d = ops.dim
    if k2b_value is None:
        k2b_value = k2b(s_mat, seed=seed)
    big_s = np.kron(np.kron(s_mat, s_mat), np.kron(s_mat, s_mat))
    big_s_inv = np.kron(np.kron(s_inv, s_inv), np.kron(s_inv, s_inv))
    summed = ops.reshuffle4 + ops.commutation4 @ ops.reshuffle4 + np.eye(d**4)
    lhs = float(np.linalg.norm(big_s_inv @ summed @ big_s, 2))
    v = vec(np.eye(d))
    structure = np.eye(d * d) + commutation_matrix(d) + np.outer(v, v)
    rhs = float(k2b_value**2 * np.linalg.norm(big_s_inv @ vec(structure)))
    return QuarticNormCondition(lhs=lhs, rhs=rhs, k2b_value=float(k2b_value))


# ---------------------------------------------------------------------------
# aggregated report


@dataclass
class StationarityReport:
    """Everything the stationarity verdicts derive from, in one place."""

    lam: float | None
    log_condition: MomentCondition | None
    k_conditions: dict[int, MomentCondition]
    spectra: SpectralCheck
    quartic_condition: QuarticNormCondition | None
    diagonalizable: bool
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        def cond_dict(c):
            return None if c is None else {
                "kind": c.kind,
                "k": c.k,
                "lhs": c.lhs,
                "se": c.se,
                "threshold": c.threshold,
                "verdict": c.verdict,
                "n_mc": c.n_mc,
                "note": c.note,
            }

        return {
            "lambda": self.lam,
            "diagonalizable": self.diagonalizable,
            "log_condition": cond_dict(self.log_condition),
            "k_conditions": {str(k): cond_dict(c) for k, c in self.k_conditions.items()},
            "spectra": {
                "max_re_drift": self.spectra.max_re_drift,
                "max_re_mean_gen": self.spectra.max_re_mean_gen,
                "max_re_second_gen": self.spectra.max_re_second_gen,
                "mean_gen_invertible": self.spectra.mean_gen_invertible,
                "second_gen_invertible": self.spectra.second_gen_invertible,
            },
            "quartic_condition": (
                None
                if self.quartic_condition is None
                else {
                    "lhs": self.quartic_condition.lhs,
                    "rhs": self.quartic_condition.rhs,
                    "satisfied": self.quartic_condition.satisfied,
                }
            ),
            "notes": self.notes,
        }

    def to_text(self) -> str:
        lines = []

        def put(key, value):
            lines.append(f"{key} = {value}")

        put("diagonalizable", self.diagonalizable)
        put("lambda", "n/a" if self.lam is None else f"{self.lam:.12g}")
        if self.log_condition is not None:
            c = self.log_condition
            put("log_condition.lhs", f"{c.lhs:.12g}")
            put("log_condition.se", f"{c.se:.12g}")
            put("log_condition.threshold", f"{c.threshold:.12g}")
            put("log_condition.verdict", c.verdict)
        for k, c in sorted(self.k_conditions.items()):
            put(f"k{k}_condition.lhs", f"{c.lhs:.12g}")
            put(f"k{k}_condition.se", f"{c.se:.12g}")
            put(f"k{k}_condition.threshold", f"{c.threshold:.12g}")
            put(f"k{k}_condition.verdict", c.verdict)
        put("spectra.max_re_drift", f"{self.spectra.max_re_drift:.12g}")
        put("spectra.max_re_mean_gen", f"{self.spectra.max_re_mean_gen:.12g}")
        put("spectra.max_re_second_gen", f"{self.spectra.max_re_second_gen:.12g}")
        put("spectra.mean_gen_invertible", self.spectra.mean_gen_invertible)
        put("spectra.second_gen_invertible", self.spectra.second_gen_invertible)
        if self.quartic_condition is not None:
            put("quartic_condition.lhs", f"{self.quartic_condition.lhs:.12g}")
            put("quartic_condition.rhs", f"{self.quartic_condition.rhs:.12g}")
            put("quartic_condition.satisfied", self.quartic_condition.satisfied)
        for i, note in enumerate(self.notes):
            put(f"note.{i}", note)
        return "\n".join(lines) + "\n"


def stationarity_report(
    params: ModelParams,
    spec: levy.LevySpec,
    *,
    ks: tuple[int, ...] = (1, 2),
    n_mc: int = DEFAULT_N_MC,
    seed: int = 0,
    mode: str = "exact",
) -> StationarityReport:
    """Run every stationarity check that applies to the given parameter set.

    Bound-dependent checks need a diagonalizable drift matrix and are marked
    unavailable otherwise; the spectral checks always run.
    """
    ops = params_operators(params, spec)
    spectra = spectral_check(ops)
    notes = []
    try:
        spectral = diagonalize(params.b)
    except NonDiagonalizableError as exc:
        notes.append(f"bound-dependent checks unavailable: {exc}")
        return StationarityReport(
            lam=None,
            log_condition=None,
            k_conditions={},
            spectra=spectra,
            quartic_condition=None,
            diagonalizable=False,
            notes=notes,
        )
    log_c = log_moment_condition(params, spec, n_mc=n_mc, seed=seed, mode=mode)
    k_cs = {
        k: k_moment_condition(params, spec, k, n_mc=n_mc, seed=seed, mode=mode) for k in ks
    }
    if log_c.note:
        notes.append(log_c.note)
    quartic = quartic_norm_condition(ops, spectral, seed=seed)
    return StationarityReport(
        lam=spectral.lam,
        log_condition=log_c,
        k_conditions=k_cs,
        spectra=spectra,
        quartic_condition=quartic,
        diagonalizable=True,
        notes=notes,
    )


def params_operators(params: ModelParams, spec: levy.LevySpec) -> KronOperators:
    """Build the moment-dynamics operators with the spec's jump-moment constants."""
    from .kronalg import build_operators

    return build_operators(params, levy.sigma_l(spec), levy.rho_l(spec))
