"""
Sample-path synthesis for the fBm Legendre expansion toolkit.
This file draws standard normal projections v, forms random coefficients
b = K v and evaluates the polynomial paths B(t) = sum_i b_i P̂(i, t). It also
runs the Monte-Carlo checks of covariance and mean energy against the exact
values implied by K. Simulation runs in double precision after a one-time
down-conversion of K.

Random numbers: path p of master seed s reads a Philox-4x64-10 counter stream
keyed by (splitmix64(s), splitmix64(splitmix64(s) xor p)), counter starting at
zero. Each 64-bit output keeps its top 53 bits as a uniform; consecutive pairs
(u1, u2) give two normals by Box-Muller, sqrt(-2 ln u1) (cos, sin)(2 pi u2),
with u1 taken in (0, 1]. Normals are consumed in that interleaved order.
"""
import json
import logging
import math
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from app.exceptions import DomainError
from app.schemas.hurst import HurstSpec
from app.services.kernel import KernelMatrix, Method, build_kernel
from app.services.legendre import basis_eval_all, basis_eval_float
from app.utils import matrix as mx
from app.utils.numeric import PrecisionContext, Real
from app.utils.parallel import map_ordered

# Set up logging
logger = logging.getLogger(__name__)

GENERATOR = "philox4x64-10+splitmix64+box-muller-53"
MASK64 = (1 << 64) - 1
MIN_MC_PATHS = 1000
_TWO_PI = 2.0 * math.pi
_U53 = 2.0 ** -53


def splitmix64(x: int) -> int:
    """One step of the SplitMix64 mixing function on a 64-bit integer."""
    x = (x + 0x9E3779B97F4A7C15) & MASK64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & MASK64
    return x ^ (x >> 31)


class GaussianStream:
    """Reproducible stream of standard normals for one (seed, path) pair."""

    def __init__(self, seed: int, path: int = 0):
        self.seed = int(seed) & MASK64
        self.path = int(path) & MASK64
        k0 = splitmix64(self.seed)
        k1 = splitmix64(k0 ^ self.path)
        self._bits = np.random.Philox(key=np.array([k0, k1], dtype=np.uint64))
        self._spare: Optional[float] = None
        self.drawn = 0

    @property
    def generator(self) -> str:
        return GENERATOR

    def normals(self, n: int) -> np.ndarray:
        """The next n standard normals of the stream."""
        out = np.empty(n, dtype=np.float64)
        filled = 0
        if n > 0 and self._spare is not None:
            out[0] = self._spare
            self._spare = None
            filled = 1
        need = n - filled
        if need > 0:
            pairs = (need + 1) // 2
            raw = self._bits.random_raw(2 * pairs) >> np.uint64(11)
            u1 = (raw[0::2].astype(np.float64) + 1.0) * _U53
            u2 = raw[1::2].astype(np.float64) * _U53
            r = np.sqrt(-2.0 * np.log(u1))
            z = np.empty(2 * pairs, dtype=np.float64)
            z[0::2] = r * np.cos(_TWO_PI * u2)
            z[1::2] = r * np.sin(_TWO_PI * u2)
            out[filled:] = z[:need]
            if 2 * pairs > need:
                self._spare = float(z[-1])
        self.drawn += n
        return out


def gaussian_stream(seed: int, path: int = 0) -> GaussianStream:
    return GaussianStream(seed, path)


@dataclass(frozen=True)
class RandomCoeffVector:
    """b = K v for one path, with the normals v that produced it."""

    values: np.ndarray
    normals: np.ndarray
    seed: int
    path: int


@dataclass(frozen=True)
class PathSample:
    """B(t) on a grid for one path."""

    spec: HurstSpec
    seed: int
    grid: np.ndarray
    values: np.ndarray
    coeffs: RandomCoeffVector

    @property
    def path(self) -> int:
        return self.coeffs.path


def to_float_matrix(K) -> np.ndarray:
    """Down-convert a KernelMatrix (or rows of Reals) to float64."""
    rows = K.entries if isinstance(K, KernelMatrix) else K
    return np.array([[float(x) for x in row] for row in rows], dtype=np.float64)


def sample_coeffs(K, stream: GaussianStream) -> RandomCoeffVector:
    """Draw L normals v from the stream and return b = K v."""
    Kf = K if isinstance(K, np.ndarray) else to_float_matrix(K)
    v = stream.normals(Kf.shape[1])
    return RandomCoeffVector(values=Kf @ v, normals=v, seed=stream.seed, path=stream.path)


def uniform_grid(N: int, T) -> np.ndarray:
    """N >= 2 equally spaced points from 0 to T inclusive."""
    if N < 2:
        raise DomainError(f"A grid needs at least 2 points, got {N}")
    return np.linspace(0.0, float(T), N)


def path_eval(coeffs: RandomCoeffVector, grid, spec: HurstSpec, basis: Optional[np.ndarray] = None) -> PathSample:
    """
    Evaluate sum_i b_i P̂(i, t) on the grid.

    Raises:
        DomainError: a grid point outside [0, T]
    """
    grid = np.asarray(grid, dtype=np.float64)
    if basis is None:
        basis = basis_eval_float(len(coeffs.values), grid, float(spec.T))
    return PathSample(spec=spec, seed=coeffs.seed, grid=grid, values=basis @ coeffs.values, coeffs=coeffs)


def simulate_paths(
    K: KernelMatrix,
    n_paths: int,
    grid,
    seed: int,
    threads: Optional[int] = 1,
) -> List[PathSample]:
    """M paths on the grid; path p reads substream p of the seed."""
    if n_paths < 1:
        raise DomainError(f"Number of paths must be positive, got {n_paths}")
    Kf = to_float_matrix(K)
    grid = np.asarray(grid, dtype=np.float64)
    basis = basis_eval_float(K.order, grid, float(K.spec.T))

    def one(p: int) -> PathSample:
        coeffs = sample_coeffs(Kf, gaussian_stream(seed, p))
        return path_eval(coeffs, grid, K.spec, basis)

    started = time.perf_counter()
    paths = map_ordered(one, range(n_paths), threads)
    logger.info(f"Simulated {n_paths} paths on {len(grid)} points in {time.perf_counter() - started:.2f}s")
    return paths


def path_metadata(K: KernelMatrix, seed: int) -> Dict[str, Any]:
    return {
        "H": K.spec.hurst,
        "T": K.spec.horizon,
        "L": K.order,
        "method": K.method.value,
        "seed": int(seed),
        "precision_bits": K.precision_bits,
        "generator": GENERATOR,
    }


def paths_to_csv(paths: Sequence[PathSample], meta: Dict[str, Any]) -> str:
    """Metadata comment line, then a `# path N` block of `t,value` rows per path."""
    lines = ["# " + json.dumps(meta, sort_keys=True)]
    for sample in paths:
        lines.append(f"# path {sample.path}")
        lines.append("t,value")
        for t, x in zip(sample.grid, sample.values):
            lines.append(f"{float(t)!r},{float(x)!r}")
    return "\n".join(lines) + "\n"


def paths_to_json(paths: Sequence[PathSample], meta: Dict[str, Any]) -> str:
    payload = {
        "metadata": meta,
        "paths": [
            {"path": s.path, "t": [float(t) for t in s.grid], "value": [float(x) for x in s.values]}
            for s in paths
        ],
    }
    return json.dumps(payload) + "\n"


def fbm_covariance(H, s: float, t: float) -> float:
    """R_H(s, t) = (s^2H + t^2H - |t-s|^2H) / 2."""
    h2 = 2.0 * float(H)
    return 0.5 * (abs(s) ** h2 + abs(t) ** h2 - abs(t - s) ** h2)


def _as_real(ctx: PrecisionContext, x) -> Real:
    if hasattr(x, "_mpf_"):
        return ctx.mp.mpf(x)
    if isinstance(x, str):
        return ctx.real(x)
    return ctx.real(Fraction(x))


def reference_covariance(K: KernelMatrix, s, t) -> Real:
    """Cov(B(s), B(t)) of the truncated process: (K^T phi(s)) . (K^T phi(t)) in extended precision."""
    ctx = K.context
    mp = ctx.mp
    T = K.spec.t_real(ctx)
    phi_s = basis_eval_all(K.order, _as_real(ctx, s), T)
    phi_t = basis_eval_all(K.order, _as_real(ctx, t), T)
    KT = mx.transpose(K.entries)
    return mp.fdot(mx.matvec(mp, KT, phi_s), mx.matvec(mp, KT, phi_t))


@dataclass(frozen=True)
class CovarianceEstimate:
    estimate: float
    std_error: float
    reference: float
    target: float
    mean_s: float
    mean_t: float
    mean_std_error_s: float
    mean_std_error_t: float
    n_paths: int
    details: Dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class EnergyEstimate:
    estimate: float
    std_error: float
    exact: float
    n_paths: int


def _mean_and_error(samples: np.ndarray):
    n = samples.shape[0]
    mean = float(np.sum(samples) / n)
    var = float(np.sum((samples - mean) ** 2) / (n - 1))
    return mean, math.sqrt(var / n)


def _coeff_draws(Kf: np.ndarray, n_paths: int, seed: int, threads: Optional[int]) -> np.ndarray:
    rows = map_ordered(lambda p: sample_coeffs(Kf, gaussian_stream(seed, p)).values, range(n_paths), threads)
    return np.vstack(rows)


def _check_paths(n_paths: int) -> None:
    if n_paths < MIN_MC_PATHS:
        raise DomainError(f"Monte-Carlo checks need at least {MIN_MC_PATHS} paths, got {n_paths}")


def estimate_covariance(
    spec: HurstSpec,
    method,
    n_paths: int,
    s: float,
    t: float,
    seed: int,
    ctx: PrecisionContext,
    threads: Optional[int] = 1,
    kernel: Optional[KernelMatrix] = None,
) -> CovarianceEstimate:
    """
    Monte-Carlo estimate of Cov(B(s), B(t)) = E[B(s) B(t)] (the process is
    centred) with its standard error, against the exact truncated covariance
    from K and the fBm covariance R_H(s, t).
    """
    _check_paths(n_paths)
    T = float(spec.T)
    if not (0 <= s <= T and 0 <= t <= T):
        raise DomainError(f"Points ({s}, {t}) must lie in [0, {T}]")
    K = kernel or build_kernel(spec, Method(method), ctx, threads)
    b = _coeff_draws(to_float_matrix(K), n_paths, seed, threads)
    phi = basis_eval_float(K.order, np.array([s, t]), T)
    xs = b @ phi[0]
    xt = b @ phi[1]
    estimate, err = _mean_and_error(xs * xt)
    mean_s, err_s = _mean_and_error(xs)
    mean_t, err_t = _mean_and_error(xt)
    reference = float(reference_covariance(K, s, t))
    return CovarianceEstimate(
        estimate=estimate,
        std_error=err,
        reference=reference,
        target=fbm_covariance(spec.H, s, t),
        mean_s=mean_s,
        mean_t=mean_t,
        mean_std_error_s=err_s,
        mean_std_error_t=err_t,
        n_paths=n_paths,
        details={"seed": seed, "method": K.method.value, "s": s, "t": t},
    )


def mean_energy_check(
    spec: HurstSpec,
    method,
    n_paths: int,
    seed: int,
    ctx: PrecisionContext,
    threads: Optional[int] = 1,
    kernel: Optional[KernelMatrix] = None,
) -> EnergyEstimate:
    """
    Monte-Carlo estimate of E ∫_0^T B(t)^2 dt, computed per path as sum_i b_i^2,
    against the exact ||K||^2.
    """
    _check_paths(n_paths)
    K = kernel or build_kernel(spec, Method(method), ctx, threads)
    b = _coeff_draws(to_float_matrix(K), n_paths, seed, threads)
    estimate, err = _mean_and_error(np.sum(b * b, axis=1))
    exact = float(mx.frobenius_sq(ctx.mp, K.entries))
    return EnergyEstimate(estimate=estimate, std_error=err, exact=exact, n_paths=n_paths)
