"""Finite-N Monte Carlo for the unitary Brownian motion compressed by a projection.

``Y`` follows the multiplicative scheme ``Y <- Y exp(i sqrt(dt) X)`` with
``X`` drawn from the Gaussian unitary ensemble scaled so that
``E[X^2] = I``.  Expanding the exponential to second order gives the drift
``-dt/2``, so the first normalized moment decays like ``exp(-t/2)``.

``P`` is the diagonal projection onto the first ``r`` coordinates; the law of
the increments is unitarily invariant, so this choice loses nothing.
"""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import ConfigError, IdentityError
from .flow import FlowParams
from .moments import MomentTable, binomial_bracket

REUNITARIZE_EVERY = 50
# finite-size allowance C/N used when comparing against the free limit
FINITE_SIZE_C = 2.0


@dataclass(frozen=True)
class SimConfig:
    matrix_size: int
    kappa: float
    t: float
    dt: float = 0.01
    trials: int = 20
    seed: int = 0
    n_max: int = 4

    def __post_init__(self):
        if self.matrix_size < 2:
            raise ConfigError("matrix_size must be at least 2")
        if not -1 < self.kappa < 1:
            raise ConfigError("kappa must lie in (-1, 1)")
        if not (self.t >= 0 and math.isfinite(self.t)):
            raise ConfigError("t must be finite and non-negative")
        if not 0 < self.dt <= 0.05:
            raise ConfigError("dt must lie in (0, 0.05]")
        if self.trials < 1 or self.n_max < 1:
            raise ConfigError("trials and n_max must be positive")
        if not 1 <= self.rank <= self.matrix_size - 1:
            raise ConfigError(f"projection rank {self.rank} out of range")

    @property
    def rank(self):
        return int(round(self.matrix_size * (1 + self.kappa) / 2))

    @property
    def kappa_n(self):
        """Trace of ``S = 2P - 1`` actually realized at this size."""
        return (2 * self.rank - self.matrix_size) / self.matrix_size

    @property
    def n_steps(self):
        return int(round(self.t / self.dt))


def _rng(seed, trial):
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, trial])))


def _gue(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return (a + a.conj().T) / (2 * math.sqrt(n))


def _polar(y):
    u, _, vh = np.linalg.svd(y)
    return u @ vh


def _path(cfg, trial, checkpoints):
    """One trial; returns ``{step: Y}`` at the requested step counts."""
    n = cfg.matrix_size
    rng = _rng(cfg.seed, trial)
    root = math.sqrt(cfg.dt)
    y = np.eye(n, dtype=complex)
    out = {}
    last = max(checkpoints)
    if 0 in checkpoints:
        out[0] = y.copy()
    for k in range(1, last + 1):
        # MRRR is markedly faster than the default driver at these sizes
        lam, v = linalg.eigh(_gue(rng, n), driver="evr")
        y = ((y @ v) * np.exp(1j * root * lam)) @ v.conj().T
        if k % REUNITARIZE_EVERY == 0:
            y = _polar(y)
        if k in checkpoints:
            out[k] = y.copy()
    for k, m in out.items():
        drift = np.max(np.abs(m.conj().T @ m - np.eye(n)))
        if drift > 1e-8:
            raise IdentityError(f"unitarity drift {drift:.2e} at step {k}")
    return out


def sample_unitary_paths(cfg, times, workers=1):
    """Samples of ``Y`` at each of ``times`` (multiples of ``dt``), per trial.

    Returns ``{time: [Y_trial0, Y_trial1, ...]}``.  Trials run in a thread
    pool; the result ordering depends only on the trial index.
    """
    steps = {int(round(s / cfg.dt)): s for s in times}
    for k, s in steps.items():
        if abs(k * cfg.dt - s) > 1e-9:
            raise ConfigError(f"time {s} is not a multiple of dt")
    with ThreadPoolExecutor(max_workers=max(1, workers)) as ex:
        runs = list(ex.map(lambda i: _path(cfg, i, set(steps)), range(cfg.trials)))
    return {s: [run[k] for run in runs] for k, s in steps.items()}


def sample_unitary_bm(cfg, workers=1):
    """List of ``Y_t`` at ``t = cfg.t``, one per trial."""
    return sample_unitary_paths(cfg, [cfg.t], workers)[cfg.t]


@dataclass
class EmpiricalMoments:
    """Monte Carlo moments with their standard errors and internal checks."""

    table: MomentTable
    u_stderr: np.ndarray
    j_stderr: np.ndarray
    imag_residue: float
    binom_residual: float
    kappa_n: float


def _trial_moments(y, r, n_max):
    n = y.shape[0]
    sy = y.copy()
    sy[r:] *= -1
    # U = S Y S Y^*
    u = sy.copy()
    u[:, r:] *= -1
    u = u @ y.conj().T
    m = y[:r, :r]
    j = m @ m.conj().T
    up, jp = np.eye(n, dtype=complex), np.eye(r, dtype=complex)
    tu, tj = [], []
    for _ in range(n_max):
        up = up @ u
        jp = jp @ j
        tu.append(np.trace(up) / n)
        tj.append(np.trace(jp).real / r)
    return np.array(tu), np.array(tj)


def empirical_moments(cfg, samples=None):
    """``(1/N) Tr U^n`` and ``(1/r) Tr (P Y P Y^*)^n`` averaged over trials.

    ``samples`` may supply the ``Y`` matrices (so several projections can
    share one set of paths).
    """
    ys = sample_unitary_bm(cfg) if samples is None else samples
    r, n = cfg.rank, cfg.matrix_size
    tu, tj = zip(*[_trial_moments(y, r, cfg.n_max) for y in ys])
    tu, tj = np.array(tu), np.array(tj)
    imag = float(np.max(np.abs(tu.imag)))
    # the moment relation is algebraic, so it holds trial by trial at size N
    resid = 0.0
    for urow, jrow in zip(tu.real, tj):
        for k in range(1, cfg.n_max + 1):
            lhs = r / n * jrow[k - 1]
            resid = max(resid, abs(lhs - binomial_bracket(k, urow, cfg.kappa_n)))
    m = len(ys)
    se = (lambda a: a.std(axis=0, ddof=1) / math.sqrt(m)) if m > 1 else (lambda a: np.zeros(a.shape[1]))
    params = FlowParams(cfg.kappa, cfg.t)
    table = MomentTable(params, cfg.n_max, tu.real.mean(axis=0), tj.mean(axis=0), "monte-carlo")
    return EmpiricalMoments(table, se(tu.real), se(tj), imag, resid, cfg.kappa_n)


def within_allowance(empirical, reference, stderr, n, c=FINITE_SIZE_C, sigmas=3.0):
    """``|empirical - reference| <= sigmas * (stderr + c/n)`` elementwise."""
    return np.abs(np.asarray(empirical) - np.asarray(reference)) <= sigmas * (np.asarray(stderr) + c / n)
