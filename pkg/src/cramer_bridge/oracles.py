"""Independent verification machinery: seeded sampling, MC moment generating
functions and finite-difference derivative checks.

All randomness comes from numpy's counter-based Philox4x32-10 bit generator.
A stream is identified by ``(seed, stream_index)``; draws of ``n`` points are
split into fixed-size chunks, chunk ``k`` drawn from stream ``k``, so results
do not depend on how the work is scheduled.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainViolation, InvalidRate, SamplingUnsupported, StepTooLarge
from .maxent_core import BoxQuadrature, LPOrthant, MaxentProblem, SDPCone

GENERATOR_ID = f"numpy.random.Philox4x32-10/SeedSequence(seed,stream)/numpy-{np.__version__}"
CHUNK = 1 << 18


def make_generator(seed: int, stream: int = 0) -> np.random.Generator:
    if seed < 0 or stream < 0:
        raise ValueError("seed and stream must be nonnegative")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(stream)])))


def uniform_chunks(n: int, dim: int, seed: int):
    """Yield (n_k, dim) arrays of U(0,1) draws, chunk k from stream k."""
    done, k = 0, 0
    while done < n:
        size = min(CHUNK, n - done)
        yield make_generator(seed, k).random((size, dim))
        done += size
        k += 1


@dataclass(frozen=True, eq=False)
class SampleBatch:
    points: np.ndarray
    seed: int
    generator_id: str = GENERATOR_ID

    def __len__(self) -> int:
        return self.points.shape[0]


def sample_orthant_exponential(c, n: int, seed: int) -> SampleBatch:
    """n draws with independent coordinates, coordinate j exponential(rate c_j)."""
    c = np.asarray(c, dtype=float).ravel()
    if np.any(c <= 0):
        raise InvalidRate(f"rates must be positive, got {c}")
    if n < 0:
        raise ValueError("n must be nonnegative")
    parts = [-np.log1p(-u) / c for u in uniform_chunks(n, c.size, seed)]
    pts = np.concatenate(parts) if parts else np.empty((0, c.size))
    pts.setflags(write=False)
    return SampleBatch(pts, int(seed))


def _sample_box(box: BoxQuadrature, n: int, seed: int) -> np.ndarray:
    lo = np.array([b[0] for b in box.bounds])
    hi = np.array([b[1] for b in box.bounds])
    parts = []
    for u in uniform_chunks(n, box.d, seed):
        if box.density_id == "uniform":
            parts.append(lo + (hi - lo) * u)
        else:  # exp_neg_sum: inverse CDF of exponentials truncated to [lo, hi]
            parts.append(lo - np.log1p(-u * -np.expm1(-(hi - lo))))
    return np.concatenate(parts) if parts else np.empty((0, box.d))


def sample_reference(problem: MaxentProblem, n: int, seed: int) -> SampleBatch:
    """Draws from the problem's reference measure P (LP and box backends)."""
    b = problem.backend
    if isinstance(b, LPOrthant):
        return sample_orthant_exponential(b.c, n, seed)
    if isinstance(b, BoxQuadrature):
        pts = _sample_box(b, n, seed)
        pts.setflags(write=False)
        return SampleBatch(pts, int(seed))
    raise SamplingUnsupported("no sampler for the PSD cone; use sdp_bridge.mc_psd_integral")


def mc_mgf(batch: SampleBatch, backend, lam):
    """Monte-Carlo estimate of Z(lam) = E_P[exp(<lam, h(X)>)] and its std error.

    The MGF domain is checked analytically before averaging; an empirical
    average of a divergent MGF looks finite but means nothing.
    """
    if isinstance(backend, MaxentProblem):
        backend = backend.backend
    lam = np.asarray(lam, float).reshape(backend.m)
    if not backend.in_domain(lam):
        raise DomainViolation(f"lam={lam} is outside the MGF domain")
    if isinstance(backend, SDPCone):
        raise SamplingUnsupported("SDP batches are not produced by this module")
    w = np.exp(backend.moment(batch.points) @ lam)
    n = w.shape[0]
    if n == 0:
        raise ValueError("empty batch")
    est = float(np.mean(w))
    se = float(np.std(w, ddof=1) / np.sqrt(n)) if n > 1 else float("inf")
    return est, se


def finite_diff_check(f, grad_f, at, step: float = 1e-5) -> float:
    """Infinity-norm gap between grad_f(at) and central differences of f."""
    at = np.asarray(at, dtype=float).ravel()
    g = np.ravel(grad_f(at))
    fd = np.empty_like(at)
    for i in range(at.size):
        e = np.zeros_like(at)
        e[i] = step
        try:
            fd[i] = (f(at + e) - f(at - e)) / (2 * step)
        except DomainViolation as exc:
            raise StepTooLarge(f"at +/- {step} e_{i} leaves the domain") from exc
    return float(np.max(np.abs(fd - g)))


def finite_diff_hessian_check(grad_f, hess_f, at, step: float = 1e-5) -> float:
    """Infinity-norm gap between hess_f(at) and central differences of grad_f."""
    at = np.asarray(at, dtype=float).ravel()
    H = np.asarray(hess_f(at))
    fd = np.empty_like(H)
    for i in range(at.size):
        e = np.zeros_like(at)
        e[i] = step
        try:
            fd[:, i] = (np.ravel(grad_f(at + e)) - np.ravel(grad_f(at - e))) / (2 * step)
        except DomainViolation as exc:
            raise StepTooLarge(f"at +/- {step} e_{i} leaves the domain") from exc
    return float(np.max(np.abs(fd - H)))
