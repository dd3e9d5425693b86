"""Haar-random unitary spectra and Monte Carlo moment estimates.

A Haar unitary is drawn as the Q factor of a complex Ginibre matrix whose
columns are rephased by the unit-modulus diagonal of R.  Its eigenphases are
read off from the Hermitian Cayley transform ``H = i (I + U)^{-1} (I - U)``,
whose eigenvalues are ``tan(theta/2)``.  When an eigenvalue of U sits close
to -1 the transform is ill conditioned, so the matrix is first rotated to
put the widest spectral gap at -1.

Monte Carlo runs are cut into fixed blocks of ``BLOCK_SIZE`` samples.  Block
``b`` is seeded by ``SeedSequence(seed, spawn_key=(b,))``, so results depend
only on the seed and sample count, never on how blocks are scheduled.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import InconsistencyError, PoleError

BLOCK_SIZE = 1000
# |tan(theta/2)| above this means an eigenvalue within ~1e-4 of -1
CAYLEY_LIMIT = 1e4
IMAG_TOLERANCE = 1e-9
MAX_RETRIES = 16
TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class EigenAngles:
    n: int
    angles: np.ndarray

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float).reshape(-1)
        if len(angles) != self.n:
            raise ValueError(f"expected {self.n} angles, got {len(angles)}")
        if not np.all(np.isfinite(angles)):
            raise ValueError("angles must be finite")
        angles = np.mod(angles, TWO_PI)
        angles.setflags(write=False)
        object.__setattr__(self, "angles", angles)

    @classmethod
    def from_angles(cls, angles) -> "EigenAngles":
        angles = np.asarray(angles, dtype=float).reshape(-1)
        return cls(len(angles), angles)

    def adjoint(self) -> "EigenAngles":
        """Spectrum of X*."""
        return EigenAngles(self.n, -self.angles)


# -- sampling ---------------------------------------------------------------


def _seed_sequence(seed, key=()) -> np.random.SeedSequence:
    if isinstance(seed, np.random.SeedSequence):
        return np.random.SeedSequence(seed.entropy, spawn_key=tuple(seed.spawn_key) + tuple(key))
    if seed < 0:
        raise ValueError("seed must be non-negative")
    return np.random.SeedSequence(int(seed), spawn_key=tuple(key))


def haar_unitaries(rng: np.random.Generator, n: int, count: int) -> np.ndarray:
    """``count`` Haar-distributed n x n unitaries, shape (count, n, n)."""
    g = rng.standard_normal((count, n, n, 2)).view(np.complex128)[..., 0]
    g /= np.sqrt(2.0)
    q, r = np.linalg.qr(g)
    d = np.diagonal(r, axis1=1, axis2=2)
    phases = d / np.abs(d)
    return q * phases[:, None, :]


def _cayley_angles(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = u.shape[-1]
    eye = np.eye(n)
    h = 1j * np.linalg.solve(eye + u, eye - u)
    h = (h + np.conj(np.swapaxes(h, -1, -2))) / 2
    t = np.linalg.eigvalsh(h)
    return 2 * np.arctan(t), np.max(np.abs(t), axis=-1)


def unitary_eigenangles(u: np.ndarray) -> np.ndarray:
    """Eigenphases in [0, 2 pi) of a stack of unitaries, each row sorted."""
    u = np.asarray(u)
    single = u.ndim == 2
    if single:
        u = u[None]
    angles, worst = _cayley_angles(u)
    bad = np.nonzero(~(worst < CAYLEY_LIMIT))[0]
    for k in bad:
        rough = np.sort(np.mod(np.angle(np.linalg.eigvals(u[k])), TWO_PI))
        gaps = np.diff(np.concatenate([rough, [rough[0] + TWO_PI]]))
        j = int(np.argmax(gaps))
        mid = rough[j] + gaps[j] / 2
        phi = np.pi - mid
        rotated, _ = _cayley_angles(u[k : k + 1] * np.exp(1j * phi))
        angles[k] = rotated[0] - phi
    angles = np.sort(np.mod(angles, TWO_PI), axis=-1)
    return angles[0] if single else angles


def sample_angle_block(n: int, count: int, seed, key=()) -> np.ndarray:
    """Eigenphases of ``count`` Haar unitaries, shape (count, n)."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    rng = np.random.default_rng(_seed_sequence(seed, key))
    return unitary_eigenangles(haar_unitaries(rng, n, count))


def sample_eigenangles(n: int, seed) -> EigenAngles:
    """Eigenphases of one Haar-distributed n x n unitary, deterministic in ``seed``."""
    if n < 1:
        raise ValueError("dimension must be >= 1")
    return EigenAngles(n, sample_angle_block(n, 1, seed)[0])


# -- spectral functions -----------------------------------------------------


def _angles(spectrum) -> np.ndarray:
    if isinstance(spectrum, EigenAngles):
        return spectrum.angles
    return np.asarray(spectrum, dtype=float)


def lambda_at(spectrum, s) -> complex:
    """Lambda_X(s) = prod_j (1 - s e^{-i theta_j})."""
    theta = _angles(spectrum)
    return complex(np.prod(1 - s * np.exp(-1j * theta)))


def lambda_log_derivative(spectrum, s) -> complex:
    """Lambda'/Lambda(s) = sum_j -e^{-i theta_j} / (1 - s e^{-i theta_j})."""
    theta = _angles(spectrum)
    e = np.exp(-1j * theta)
    denom = 1 - s * e
    if np.any(denom == 0) or np.any(np.isclose(np.exp(1j * theta), s, rtol=0, atol=1e-15)):
        raise PoleError(f"s = {s} is an eigenvalue")
    return complex(np.sum(-e / denom))


def lambda_log_derivative_mp(spectrum, s, bits: int = 256) -> mpmath.mpc:
    """High-precision Lambda'/Lambda, used as a finite-difference reference."""
    theta = _angles(spectrum)
    with mpmath.workprec(bits):
        s = mpmath.mpc(s)
        total = mpmath.mpc(0)
        for t in theta:
            e = mpmath.expj(-mpmath.mpf(float(t)))
            denom = 1 - s * e
            if denom == 0:
                raise PoleError(f"s = {s} is an eigenvalue")
            total += -e / denom
        return total


def log_lambda_mp(spectrum, s, bits: int = 256) -> mpmath.mpc:
    """Sum of log(1 - s e^{-i theta_j}) in mpmath, a branch-consistent log Lambda."""
    theta = _angles(spectrum)
    with mpmath.workprec(bits):
        s = mpmath.mpc(s)
        return mpmath.fsum(mpmath.log(1 - s * mpmath.expj(-mpmath.mpf(float(t)))) for t in theta)


def z_prefactor(spectrum) -> complex:
    theta = _angles(spectrum)
    n = len(theta)
    return complex(np.exp(-0.5j * np.pi * n) * np.exp(0.5j * np.sum(theta)))


def z_at(spectrum, s: float, adjoint: bool = False) -> complex:
    """Z_X(s) (or Z_{X*}(s)) for real s > 0."""
    theta = _angles(spectrum)
    if adjoint:
        theta = -theta
    n = len(theta)
    return z_prefactor(theta) * s ** (-n / 2) * lambda_at(theta, s)


def z_and_zprime(spectrum) -> tuple[float, complex]:
    """(Z_X(1), Z_X'(1)); Z_X(1) is real and its imaginary part is checked."""
    theta = _angles(spectrum)
    n = len(theta)
    c = z_prefactor(theta)
    lam = lambda_at(theta, 1.0)
    e = np.exp(-1j * theta)
    lam_prime = complex(np.sum(-e * np.array([np.prod(np.delete(1 - e, j)) for j in range(n)])))
    z = c * lam
    if abs(z.imag) > IMAG_TOLERANCE * abs(z):
        raise InconsistencyError(f"Im Z(1) = {z.imag} is not negligible against |Z(1)| = {abs(z)}")
    return z.real, c * (lam_prime - n / 2 * lam)


def _log_abs_lambda1(theta: np.ndarray) -> np.ndarray:
    return np.sum(np.log(2 * np.abs(np.sin(theta / 2))), axis=-1)


def _abs_cot_sum(theta: np.ndarray) -> np.ndarray:
    # |Z'(1)/Z(1)| = |sum cot(theta/2)| / 2
    return np.abs(np.sum(1 / np.tan(theta / 2), axis=-1)) / 2


# -- moments ----------------------------------------------------------------


@dataclass(frozen=True)
class MomentSpec:
    kind: str
    K: int = 0
    M: int = 0
    a: float = 0.0
    power: float = 0.0
    alphas: tuple = ()

    KINDS = ("abs_lambda_power", "mixed_z", "logderiv", "shifted_z")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise ValueError(f"unknown moment kind {self.kind!r}")
        if self.kind in ("mixed_z", "logderiv") and self.K < 1:
            raise ValueError("K must be >= 1")
        if self.kind == "mixed_z" and not 0 <= self.M <= self.K:
            raise ValueError("need 0 <= M <= K")
        if self.kind == "logderiv" and not self.a > 0:
            raise ValueError("a must be > 0")
        if self.kind == "shifted_z" and (len(self.alphas) != 2):
            raise ValueError("shifted_z needs two real shifts")

    @classmethod
    def abs_lambda_power(cls, power: float) -> "MomentSpec":
        """|Lambda(1)|^power."""
        return cls("abs_lambda_power", power=power)

    @classmethod
    def mixed_z(cls, K: int, M: int) -> "MomentSpec":
        """|Z'(1)|^{2K-2M} |Z(1)|^{2M}."""
        return cls("mixed_z", K=K, M=M)

    @classmethod
    def logderiv(cls, K: int, a: float) -> "MomentSpec":
        """|e^{-alpha} Lambda'/Lambda(e^{-alpha})|^{2K} with alpha = a/N."""
        return cls("logderiv", K=K, a=a)

    @classmethod
    def shifted_z(cls, alpha1: float, alpha2: float) -> "MomentSpec":
        """Re Z_X(e^{-alpha1}) Z_{X*}(e^{alpha2})."""
        return cls("shifted_z", alphas=(float(alpha1), float(alpha2)))

    def uses_big_real(self) -> bool:
        return self.kind == "mixed_z" and self.K >= 2

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "abs_lambda_power":
            out["power"] = self.power
        elif self.kind == "mixed_z":
            out.update(K=self.K, M=self.M)
        elif self.kind == "logderiv":
            out.update(K=self.K, a=self.a)
        else:
            out["alphas"] = list(self.alphas)
        return out


@dataclass(frozen=True)
class MomentEstimate:
    mean: float
    std_error: float
    samples: int
    seed: int
    retries: int = 0


def _log_observable(spec: MomentSpec, theta: np.ndarray) -> np.ndarray:
    """log of a positive observable, per row."""
    log_z = _log_abs_lambda1(theta)
    if spec.kind == "abs_lambda_power":
        if spec.power == 0:
            return np.zeros(theta.shape[0])
        return spec.power * log_z
    with np.errstate(divide="ignore"):
        log_ratio = np.log(_abs_cot_sum(theta))
    p = 2 * spec.K - 2 * spec.M
    out = 2 * spec.K * log_z
    return out + p * log_ratio if p else out


def _observable(spec: MomentSpec, theta: np.ndarray, n: int) -> np.ndarray:
    if spec.kind == "logderiv":
        s = math.exp(-spec.a / n)
        e = np.exp(-1j * theta)
        denom = 1 - s * e
        if np.any(denom == 0):
            raise PoleError("logderiv observable evaluated at an eigenvalue")
        ld = s * np.sum(-e / denom, axis=-1)
        return np.abs(ld) ** (2 * spec.K)
    if spec.kind == "shifted_z":
        a1, a2 = spec.alphas
        c = np.exp(-0.5j * np.pi * n)
        half = np.sum(theta, axis=-1) / 2
        z1 = c * np.exp(1j * half) * math.exp(a1 * n / 2) * np.prod(
            1 - math.exp(-a1) * np.exp(-1j * theta), axis=-1
        )
        z2 = c * np.exp(-1j * half) * math.exp(-a2 * n / 2) * np.prod(
            1 - math.exp(a2) * np.exp(1j * theta), axis=-1
        )
        return (z1 * z2).real
    if spec.kind == "abs_lambda_power" and spec.power == 0:
        return np.ones(theta.shape[0])
    with np.errstate(over="ignore"):
        return np.exp(_log_observable(spec, theta))


def _block_rows(spec: MomentSpec, n: int, count: int, seed, block: int):
    """Observable values for one block, resampling rows that hit a pole."""
    theta = sample_angle_block(n, count, seed, (block,))
    retries = 0
    values = []
    for row in range(count):
        t = theta[row : row + 1]
        attempt = 0
        while True:
            try:
                values.append(_row_value(spec, t, n))
                break
            except PoleError:
                attempt += 1
                retries += 1
                if attempt > MAX_RETRIES:
                    raise
                t = sample_angle_block(n, 1, seed, (block, row, attempt))
    return values, retries


def _row_value(spec, t, n):
    if spec.uses_big_real():
        return _log_observable(spec, t)[0]
    return _observable(spec, t, n)[0]


def _fast_block(spec: MomentSpec, n: int, count: int, seed, block: int):
    theta = sample_angle_block(n, count, seed, (block,))
    try:
        if spec.uses_big_real():
            return list(_log_observable(spec, theta)), 0
        return list(_observable(spec, theta, n)), 0
    except PoleError:
        return _block_rows(spec, n, count, seed, block)


def _block_sums(args):
    spec, n, count, seed, block = args
    values, retries = _fast_block(spec, n, count, seed, block)
    if spec.uses_big_real():
        with mpmath.workprec(128):
            xs = [mpmath.exp(mpmath.mpf(float(v))) for v in values]
            return mpmath.fsum(xs), mpmath.fsum(x * x for x in xs), retries
    return math.fsum(values), math.fsum(v * v for v in values), retries


def _blocks(samples: int):
    full, rest = divmod(samples, BLOCK_SIZE)
    sizes = [BLOCK_SIZE] * full + ([rest] if rest else [])
    return list(enumerate(sizes))


def estimate_moment(
    spec: MomentSpec, n: int, samples: int, seed: int, workers: int = 1
) -> MomentEstimate:
    """Sample mean and standard error of ``spec`` over ``samples`` Haar unitaries of size n."""
    if samples < 2:
        raise ValueError("need at least 2 samples")
    if n < 1:
        raise ValueError("dimension must be >= 1")
    jobs = [(spec, n, count, seed, block) for block, count in _blocks(samples)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_block_sums, jobs))
    else:
        parts = [_block_sums(job) for job in jobs]
    retries = sum(p[2] for p in parts)
    if spec.uses_big_real():
        with mpmath.workprec(128):
            s1 = mpmath.fsum(p[0] for p in parts)
            s2 = mpmath.fsum(p[1] for p in parts)
            mean = s1 / samples
            var = max(s2 - samples * mean * mean, 0) / (samples - 1)
            return MomentEstimate(
                float(mean), float(mpmath.sqrt(var / samples)), samples, seed, retries
            )
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean = s1 / samples
    var = max(s2 - samples * mean * mean, 0.0) / (samples - 1)
    return MomentEstimate(mean, math.sqrt(var / samples), samples, seed, retries)


def trace_statistics(n: int, samples: int, seed: int) -> dict:
    """Means and standard errors of Re tr X, Im tr X and |tr X|^2 (Haar diagnostics)."""
    values = []
    for block, count in _blocks(samples):
        theta = sample_angle_block(n, count, seed, (block,))
        values.append(np.sum(np.exp(1j * theta), axis=-1))
    tr = np.concatenate(values)
    out = {}
    for name, x in (("re", tr.real), ("im", tr.imag), ("abs2", np.abs(tr) ** 2)):
        out[name] = (float(np.mean(x)), float(np.std(x, ddof=1) / math.sqrt(len(x))))
    return out
