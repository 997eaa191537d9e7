"""ESLEES classification plus the sign-change, Hoelder and shift verifiers.

An operator is ESLEES when its lowest eigenvalue is simple and the
associated eigenfunction does not change sign. Sign tests are run on
function samples (quadrature nodes or mesh vertices), never on spectral
coefficients.
"""

from __future__ import annotations

import enum
import math
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .assembly import (
    OperatorMatrices,
    assemble,
    assemble_second_order,
    holder_gaps,
)
from .eigensolve import solve_dense
from .errors import DegenerateInput, HypothesisError
from .manifold import ManifoldDiscretization, second_eigenvalue
from .spectrum import SolveSettings, SpectrumResult
from .tensorfield import (
    TensorField,
    is_negative_semidefinite,
    pointwise_max_ratio,
    scaled_inverse_metric,
    shifted_nsd,
)

HYPOTHESIS_TOL = 1e-10
MEAN_TOL = 1e-8
_PROBE_SEED = 20240601


class SignPattern(enum.Enum):
    POSITIVE = "Positive"
    NEGATIVE = "Negative"
    SIGN_CHANGING = "SignChanging"
    INDETERMINATE = "Indeterminate"

    @property
    def signed(self) -> bool:
        return self in (SignPattern.POSITIVE, SignPattern.NEGATIVE)


class Verdict(enum.Enum):
    ESLEES = "ESLEES"
    NOT_ESLEES_MULTIPLICITY = "NotEsleesMultiplicity"
    NOT_ESLEES_SIGN_CHANGE = "NotEsleesSignChange"
    INDETERMINATE = "Indeterminate"

    @property
    def category(self) -> str:
        if self is Verdict.ESLEES:
            return "ESLEES"
        if self is Verdict.INDETERMINATE:
            return "Indeterminate"
        return "non-ESLEES"


@dataclass(frozen=True)
class Hypothesis:
    lambda2: float
    max_ratio: float
    satisfied: bool


@dataclass(eq=False)
class EsleesReport:
    lowest_eigenvalue: float
    lowest_cluster_dim: int
    sign_pattern: SignPattern
    verdict: Verdict
    hypothesis: Hypothesis
    certificate: np.ndarray
    mean_value: float
    eigenvalues: np.ndarray
    certificate_samples: np.ndarray
    cluster_max_mean: float
    backend: dict = field(default_factory=dict)
    tensor_label: str = ""
    shift: float = 0.0
    timings: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        s = self.certificate_samples
        return {
            "backend": self.backend,
            "n_dof": int(len(self.certificate)),
            "tensor_label": self.tensor_label,
            "shift": self.shift,
            "lambda2": self.hypothesis.lambda2,
            "max_ratio": self.hypothesis.max_ratio,
            "hypothesis_satisfied": self.hypothesis.satisfied,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "lowest_eigenvalue": self.lowest_eigenvalue,
            "lowest_cluster_dim": self.lowest_cluster_dim,
            "sign_pattern": self.sign_pattern.value,
            "verdict": self.verdict.value,
            "certificate_stats": {
                "min": float(s.min()),
                "max": float(s.max()),
                "mean": self.mean_value,
            },
            "timings": self.timings,
        }


def sign_pattern(u, sign_tol: float = 1e-6) -> SignPattern:
    """Classify samples as signed or sign-changing, relative to ``sup |u|``."""
    u = np.asarray(u, dtype=float)
    if not 0 < sign_tol < 1:
        raise ValueError("sign_tol must lie in (0, 1)")
    sup = np.abs(u).max(initial=0.0)
    if sup == 0:
        raise DegenerateInput("sign pattern of the zero vector")
    thr = sign_tol * sup
    has_pos = bool(np.any(u > thr))
    has_neg = bool(np.any(u < -thr))
    if has_pos and has_neg:
        return SignPattern.SIGN_CHANGING
    if has_pos:
        return SignPattern.POSITIVE
    if has_neg:
        return SignPattern.NEGATIVE
    return SignPattern.INDETERMINATE


def mass_mean(disc: ManifoldDiscretization, M: np.ndarray, u: np.ndarray) -> float:
    """Average value of ``u`` over the manifold."""
    return float(disc.constant_vector() @ M @ u) / disc.volume


def rms(disc: ManifoldDiscretization, M: np.ndarray, u: np.ndarray) -> float:
    return math.sqrt(max(float(u @ M @ u), 0.0) / disc.volume)


def _probe(n: int) -> np.ndarray:
    return np.random.default_rng(_PROBE_SEED).standard_normal(n)


def _zero_mean_representative(disc, M, V) -> np.ndarray:
    """M-projection of a fixed probe onto the mean-zero part of span(V).

    Depends only on the subspace, not on the basis the solver returned.
    """
    ones = disc.constant_vector()
    means = V.T @ (M @ ones)
    if np.linalg.norm(means) > 1e-10 * math.sqrt(disc.volume):
        # basis of the coefficient vectors c in R^d with means @ c = 0
        V = V @ scipy.linalg.null_space(means[None, :])
    W = V @ np.linalg.cholesky(np.linalg.inv(V.T @ M @ V))  # M-orthonormal
    c = W @ (W.T @ (M @ _probe(disc.n_dof)))
    return c / math.sqrt(c @ M @ c)


def _orient(disc, u: np.ndarray) -> np.ndarray:
    s = disc.sample(u)
    total = s.sum()
    if total < 0 or (total == 0 and s[np.argmax(np.abs(s))] < 0):
        return -u
    return u


def classify_matrices(
    disc: ManifoldDiscretization,
    mats: OperatorMatrices,
    hypothesis: Hypothesis,
    settings: SolveSettings | None = None,
    sign_tol: float = 1e-6,
    count: int = 8,
    spectrum: Optional[SpectrumResult] = None,
) -> EsleesReport:
    settings = settings or SolveSettings()
    t0 = time.perf_counter()
    res = spectrum or solve_dense(mats, min(count, mats.n), settings)
    t_solve = time.perf_counter() - t0
    lowest = res.clusters[0]
    V = res.eigenvectors[:, list(lowest)]
    mu1 = float(np.mean(res.eigenvalues[list(lowest)]))

    if len(lowest) == 1:
        cert = _orient(disc, V[:, 0])
    else:
        cert = _orient(disc, _zero_mean_representative(disc, mats.M, V))
    samples = disc.sample(cert)
    pattern = sign_pattern(samples, sign_tol)

    if len(lowest) == len(res) and len(res) == mats.n:
        # nothing above the lowest cluster: separation cannot be confirmed
        verdict = Verdict.INDETERMINATE
    elif pattern is SignPattern.INDETERMINATE:
        verdict = Verdict.INDETERMINATE
    elif len(lowest) > 1:
        verdict = Verdict.NOT_ESLEES_MULTIPLICITY
    elif pattern.signed:
        verdict = Verdict.ESLEES
    else:
        verdict = Verdict.NOT_ESLEES_SIGN_CHANGE

    cluster_means = [abs(mass_mean(disc, mats.M, V[:, j])) / rms(disc, mats.M, V[:, j]) for j in range(V.shape[1])]
    return EsleesReport(
        lowest_eigenvalue=mu1,
        lowest_cluster_dim=len(lowest),
        sign_pattern=pattern,
        verdict=verdict,
        hypothesis=hypothesis,
        certificate=cert,
        mean_value=mass_mean(disc, mats.M, cert),
        eigenvalues=res.eigenvalues,
        certificate_samples=samples,
        cluster_max_mean=float(max(cluster_means)),
        backend=disc.describe(),
        tensor_label=mats.label,
        shift=mats.shift,
        timings={"solve_s": t_solve},
    )


def hypothesis_for(disc: ManifoldDiscretization, A: TensorField, settings: SolveSettings) -> Hypothesis:
    lam2, _ = second_eigenvalue(disc)
    ratio = pointwise_max_ratio(disc, A)
    return Hypothesis(lam2, ratio, ratio <= -lam2 + HYPOTHESIS_TOL)


def classify_operator(
    disc: ManifoldDiscretization,
    A: TensorField,
    shift: float = 0.0,
    settings: SolveSettings | None = None,
    sign_tol: float = 1e-6,
    count: int = 8,
) -> EsleesReport:
    """Assemble ``Delta^2 - div(A d) + shift``, solve, and classify."""
    settings = settings or SolveSettings()
    t0 = time.perf_counter()
    mats = assemble(disc, A, shift)
    t_asm = time.perf_counter() - t0
    report = classify_matrices(disc, mats, hypothesis_for(disc, A, settings), settings, sign_tol, count)
    report.timings["assemble_s"] = t_asm
    return report


def classify_second_order(
    disc: ManifoldDiscretization,
    potential: Optional[np.ndarray] = None,
    shift: float = 0.0,
    settings: SolveSettings | None = None,
    sign_tol: float = 1e-6,
    count: int = 4,
) -> EsleesReport:
    """Classify ``-Delta + h + shift``, the Krein-Rutman control case."""
    settings = settings or SolveSettings()
    mats = assemble_second_order(disc, potential, shift)
    lam2, _ = second_eigenvalue(disc)
    # A = g^{-1} here, so max ratio is 1 and the fourth-order hypothesis never holds
    hyp = Hypothesis(lam2, 1.0, False)
    return classify_matrices(disc, mats, hyp, settings, sign_tol, count)


# -- verifiers -------------------------------------------------------------------


@dataclass(eq=False)
class TheoremCheck:
    hypothesis_ok: bool
    conclusion_ok: bool
    report: EsleesReport
    branch: str  # "negative" (mu_1 < 0) or "zero"
    chain_value: float  # max of F(w) over the lambda_2 eigenvectors, must be <= 0
    w_in_lowest_cluster: Optional[bool]
    mean_ok: Optional[bool]

    def to_dict(self) -> dict:
        out = self.report.to_dict()
        out.update(
            {
                "hypothesis_ok": self.hypothesis_ok,
                "conclusion_ok": self.conclusion_ok,
                "branch": self.branch,
                "chain_value": self.chain_value,
                "w_in_lowest_cluster": self.w_in_lowest_cluster,
                "mean_ok": self.mean_ok,
            }
        )
        return out


def verify_theorem(
    disc: ManifoldDiscretization,
    T: TensorField,
    settings: SolveSettings | None = None,
    sign_tol: float = 1e-6,
    zero_tol: float = 1e-8,
    count: int = 8,
) -> TheoremCheck:
    """Check the sign-changing dichotomy for ``A = T - lambda_2 g^{-1}``.

    Either the lowest eigenvalue is negative and its eigenvectors have mean
    zero, or it is zero and the ``lambda_2`` eigenvectors lie in its
    cluster. In both branches a sign-changing certificate must exist.
    """
    settings = settings or SolveSettings()
    if not is_negative_semidefinite(disc, T, 1e-10):
        raise HypothesisError(f"T is not negative semi-definite: max ratio {pointwise_max_ratio(disc, T):.3e}")
    lam2, W = second_eigenvalue(disc)
    A = shifted_nsd(disc, T, lam2)
    ratio = pointwise_max_ratio(disc, A)
    hyp = Hypothesis(lam2, ratio, ratio <= -lam2 + HYPOTHESIS_TOL)
    if not hyp.satisfied:
        raise HypothesisError(f"max ratio {ratio:.15g} exceeds -lambda2 = {-lam2:.15g}")

    t0 = time.perf_counter()
    mats = assemble(disc, A)
    res = solve_dense(mats, count, settings)
    report = classify_matrices(disc, mats, hyp, settings, sign_tol, count, spectrum=res)
    report.timings["assemble_and_solve_s"] = time.perf_counter() - t0

    form = mats.form()
    chain = float(max((w @ form @ w) / (w @ mats.M @ w) for w in W.T))
    mu1 = report.lowest_eigenvalue
    found = report.sign_pattern is SignPattern.SIGN_CHANGING
    conclusion = mu1 <= zero_tol and found
    mean_ok = w_in = None
    if mu1 < -zero_tol:
        branch = "negative"
        mean_ok = report.cluster_max_mean <= MEAN_TOL
        conclusion = conclusion and mean_ok
    else:
        branch = "zero"
        V = res.cluster_vectors(0)
        resid = W - V @ (V.T @ (mats.M @ W))
        w_in = bool(np.sqrt(np.max(np.einsum("ij,ij->j", resid, mats.M @ resid))) <= 1e-6)
    return TheoremCheck(True, bool(conclusion), report, branch, chain, w_in, mean_ok)


@dataclass(eq=False)
class ShiftCheck:
    ok: bool
    max_eigen_error: float
    max_certificate_error: float
    verdicts: dict


def verify_shift_invariance(
    disc: ManifoldDiscretization,
    A: TensorField,
    lambda_list,
    settings: SolveSettings | None = None,
    sign_tol: float = 1e-6,
    count: int = 8,
    eig_rel_tol: float = 1e-9,
    cert_tol: float = 1e-8,
) -> ShiftCheck:
    """Adding ``lambda M`` must shift every eigenvalue by ``lambda`` and
    leave the verdict category and the certificate unchanged."""
    settings = settings or SolveSettings()
    base_mats = assemble(disc, A, 0.0)
    hyp = hypothesis_for(disc, A, settings)
    base = classify_matrices(disc, base_mats, hyp, settings, sign_tol, count)
    k = len(base.eigenvalues)
    ok = True
    eig_err = cert_err = 0.0
    verdicts = {}
    for lam in lambda_list:
        rep = classify_matrices(disc, base_mats.with_shift(lam), hyp, settings, sign_tol, k)
        verdicts[float(lam)] = rep.verdict.value
        m = min(k, len(rep.eigenvalues))
        expected = base.eigenvalues[:m] + lam
        scale = np.maximum(1.0, np.maximum(np.abs(expected), np.abs(base.eigenvalues[:m])))
        e = float(np.max(np.abs(rep.eigenvalues[:m] - expected) / scale))
        c = float(min(np.abs(rep.certificate - base.certificate).max(), np.abs(rep.certificate + base.certificate).max()))
        c /= max(1.0, float(np.abs(base.certificate).max()))
        eig_err, cert_err = max(eig_err, e), max(cert_err, c)
        ok &= rep.verdict.category == base.verdict.category and e <= eig_rel_tol and c <= cert_tol
    return ShiftCheck(bool(ok), eig_err, cert_err, verdicts)


@dataclass(eq=False)
class HolderCheck:
    worst: float  # most negative gap / scale
    gaps: np.ndarray
    scales: np.ndarray


def verify_holder(disc: ManifoldDiscretization, trials: int, seed: int = 0) -> HolderCheck:
    """``K``-energy bounded by ``sqrt(B-energy * mass)`` on random vectors;
    trial 0 is the constant vector."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    mats = assemble(disc, scaled_inverse_metric(disc, 0.0))
    rng = np.random.default_rng(seed)
    U = rng.standard_normal((disc.n_dof, trials))
    U[:, 0] = disc.constant_vector()
    gaps, scales = holder_gaps(mats, U)
    return HolderCheck(float(np.min(gaps / scales)), gaps, scales)


def lowest_cluster_certificate_ok(report: EsleesReport, mats: OperatorMatrices, residual_tol: float = 1e-9) -> bool:
    """The certificate solves the pencil equation at the lowest eigenvalue."""
    P = mats.pencil()
    u = report.certificate
    r = P @ u - report.lowest_eigenvalue * (mats.M @ u)
    scale = (np.linalg.norm(P, 2) + abs(report.lowest_eigenvalue) * np.linalg.norm(mats.M, 2)) * np.linalg.norm(u)
    return float(np.linalg.norm(r) / scale) <= residual_tol
