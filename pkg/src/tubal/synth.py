"""Synthetic low-tubal-rank problems and phase-transition experiments.

Every random quantity is drawn from a generator seeded by a
``numpy.random.SeedSequence`` derived from ``(base seed, rank index,
level index, trial index)``, so a grid gives the same numbers whether its
trials run sequentially or in a process pool. Both methods of a comparison
see identical problems; a fresh ground truth is drawn for every trial.
"""

from __future__ import annotations

import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidRank, TubalError
from .metrics import rse
from .solvers import SolverConfig, complete, rpca
from .t_algebra import t_product

log = logging.getLogger(__name__)

SUCCESS_THRESHOLD = 1e-3
NOISE_RANGE = (-1.0, 1.0)


def factor_std(n1: int, n3: int) -> float:
    """Entry std of the Gaussian factors: the variance is ``1 / sqrt(n1 * n3)``."""
    return (n1 * n3) ** -0.25


def gen_low_tubal_rank(n1: int, n2: int, n3: int, r: int, seed=None) -> np.ndarray:
    """``P * Q`` with i.i.d. Gaussian P (n1 x r x n3) and Q (r x n2 x n3); tubal rank <= r."""
    if not 1 <= r <= min(n1, n2):
        raise InvalidRank(f"rank must lie in [1, {min(n1, n2)}], got {r}")
    rng = np.random.default_rng(seed)
    std = factor_std(n1, n3)
    p = rng.normal(0.0, std, size=(n1, r, n3))
    q = rng.normal(0.0, std, size=(r, n2, n3))
    return t_product(p, q)


def _choose(total: int, count: int, rng) -> np.ndarray:
    flags = np.zeros(total, dtype=bool)
    flags[rng.choice(total, size=count, replace=False)] = True
    return flags


def sample_mask(dims, rate: float, seed=None) -> np.ndarray:
    """Exactly ``round(rate * n1 * n2 * n3)`` observed entries, uniformly without replacement."""
    if not 0 < rate <= 1:
        raise ValueError(f"sampling rate must lie in (0, 1], got {rate}")
    dims = tuple(int(d) for d in dims)
    total = int(np.prod(dims))
    count = int(round(rate * total))
    return _choose(total, count, np.random.default_rng(seed)).reshape(dims)


def corrupt_sparse(a, rho_s: float, value_range=NOISE_RANGE, seed=None):
    """Add uniform noise to ``round(rho_s * a.size)`` randomly chosen entries.

    Returns the corrupted tensor and the boolean mask of corrupted entries.
    Untouched entries are copied bit for bit.
    """
    if not 0 <= rho_s < 1:
        raise ValueError(f"sparsity must lie in [0, 1), got {rho_s}")
    a = np.asarray(a, dtype=np.float64)
    rng = np.random.default_rng(seed)
    count = int(round(rho_s * a.size))
    where = _choose(a.size, count, rng).reshape(a.shape)
    out = a.copy()
    low, high = value_range
    out[where] += rng.uniform(low, high, size=count)
    return out, where


@dataclass(frozen=True)
class TrialSpec:
    """One synthetic recovery trial.

    ``level`` is the sampling rate for ``task='tc'`` and the sparsity for
    ``task='rpca'``. ``method`` is ``'pstnn'`` (rank target = ``rank``) or
    ``'tnn'`` (rank target 0).
    """

    task: str
    dims: tuple
    rank: int
    level: float
    method: str = "pstnn"
    seed: tuple = (0,)
    beta: Optional[float] = None
    lam: Optional[float] = None
    epsilon: float = 1e-5
    max_iters: int = 500

    def __post_init__(self):
        if self.task not in ("tc", "rpca"):
            raise ValueError(f"unknown task {self.task!r}")
        if self.method not in ("pstnn", "tnn"):
            raise ValueError(f"unknown method {self.method!r}")
        if not 1 <= self.rank <= min(self.dims[:2]):
            raise InvalidRank(f"rank must lie in [1, {min(self.dims[:2])}], got {self.rank}")
        if not 0 < self.level < 1 and not (self.task == "tc" and self.level == 1):
            raise ValueError(f"rate/sparsity must lie in (0, 1), got {self.level}")

    def seeds(self):
        """Seeds for (ground truth, mask or noise, solver initialization)."""
        ss = np.random.SeedSequence(self.seed[0], spawn_key=tuple(self.seed[1:]))
        truth, sample, init = ss.spawn(3)
        return truth, sample, int(init.generate_state(1)[0])

    def config(self, init_seed: int = 0) -> SolverConfig:
        return SolverConfig(
            n_target=self.rank if self.method == "pstnn" else 0,
            beta=self.beta,
            lam=self.lam,
            epsilon=self.epsilon,
            max_iters=self.max_iters,
            seed=init_seed,
        )


def run_trial(spec: TrialSpec) -> float:
    """Relative squared error of one trial."""
    truth_seed, sample_seed, init_seed = spec.seeds()
    n1, n2, n3 = spec.dims
    a = gen_low_tubal_rank(n1, n2, n3, spec.rank, truth_seed)
    cfg = spec.config(init_seed)
    if spec.task == "tc":
        mask = sample_mask(a.shape, spec.level, sample_seed)
        result = complete(np.where(mask, a, 0.0), mask, cfg)
        return rse(result.x, a)
    o, _ = corrupt_sparse(a, spec.level, seed=sample_seed)
    result = rpca(o, cfg)
    return rse(result.l, a)


def _safe_trial(spec: TrialSpec) -> float:
    try:
        value = run_trial(spec)
    except (TubalError, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.warning("trial %s failed: %s", spec, exc)
        return float("inf")
    return value if np.isfinite(value) else float("inf")


@dataclass
class SuccessGrid:
    """Success ratios over (rank, level) cells.

    ``rse`` keeps every trial's error (shape ranks x levels x trials, ``inf``
    for a trial whose solver raised), so the ratios can be recomputed for
    another threshold.
    """

    axis1: list
    axis2: list
    cells: np.ndarray
    trials: int
    seed: int
    method: str = "pstnn"
    task: str = "tc"
    threshold: float = SUCCESS_THRESHOLD
    rse: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def level_name(self) -> str:
        return "rate" if self.task == "tc" else "sparsity"

    def total(self) -> float:
        return float(np.sum(self.cells))

    def to_csv(self) -> str:
        """CSV text: header of axis2 values, one row per rank; LF endings."""
        buf = io.StringIO()
        buf.write(",".join([f"rank\\{self.level_name}"] + [f"{v:g}" for v in self.axis2]) + "\n")
        for r, row in zip(self.axis1, self.cells):
            buf.write(",".join([str(r)] + [f"{v:.4f}" for v in row]) + "\n")
        return buf.getvalue()

    def minus(self, other: "SuccessGrid") -> "SuccessGrid":
        """Cell-wise difference ``self - other`` (for the PSTNN minus TNN grid)."""
        if self.axis1 != other.axis1 or self.axis2 != other.axis2:
            raise ValueError("grids have different axes")
        return SuccessGrid(
            self.axis1, self.axis2, self.cells - other.cells, self.trials, self.seed,
            method=f"{self.method}-{other.method}", task=self.task, threshold=self.threshold,
        )


def success_ratios(errors: np.ndarray, threshold: float = SUCCESS_THRESHOLD) -> np.ndarray:
    """Fraction of trials (last axis) with error strictly below ``threshold``."""
    return np.mean(np.asarray(errors) < threshold, axis=-1)


def _map(fn, items, jobs):
    if jobs is None or jobs <= 1:
        return [fn(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items, chunksize=1))


def phase_diagram(
    task: str,
    dims,
    ranks: Sequence[int],
    levels: Sequence[float],
    trials: int = 10,
    seed: int = 0,
    method: str = "pstnn",
    threshold: float = SUCCESS_THRESHOLD,
    jobs: int = 1,
    **solver,
) -> SuccessGrid:
    """Run ``trials`` seeded trials per (rank, level) cell and count successes.

    ``solver`` takes the :class:`TrialSpec` solver fields (``beta``, ``lam``,
    ``epsilon``, ``max_iters``). A trial whose solver raises counts as a
    failure and the run continues.
    """
    ranks, levels = [int(r) for r in ranks], [float(v) for v in levels]
    if not ranks or not levels or trials < 1:
        raise ValueError("grid needs at least one rank, one level and one trial")
    dims = tuple(int(d) for d in dims)
    specs = [
        TrialSpec(task, dims, r, v, method, (seed, i, j, t), **solver)
        for i, r in enumerate(ranks)
        for j, v in enumerate(levels)
        for t in range(trials)
    ]
    errors = np.array(_map(_safe_trial, specs, jobs)).reshape(len(ranks), len(levels), trials)
    return SuccessGrid(
        ranks, levels, success_ratios(errors, threshold), trials, seed,
        method=method, task=task, threshold=threshold, rse=errors,
    )


def phase_diagram_tc(dims, ranks, rates, trials=10, **kwargs) -> SuccessGrid:
    return phase_diagram("tc", dims, ranks, rates, trials, **kwargs)


def phase_diagram_rpca(dims, ranks, sparsities, trials=10, **kwargs) -> SuccessGrid:
    return phase_diagram("rpca", dims, ranks, sparsities, trials, **kwargs)


def init_seeds(seed: int, runs: int) -> list:
    """Solver seeds used by :func:`init_sensitivity`."""
    ss = np.random.SeedSequence(seed, spawn_key=(1,))
    return [int(c.generate_state(1)[0]) for c in ss.spawn(runs)]


def sensitivity_problem(dims=(25, 25, 30), r=5, missing_rate=0.1, seed=0):
    """Ground truth and observation mask shared by all runs of :func:`init_sensitivity`."""
    truth_seed, mask_seed = np.random.SeedSequence(seed, spawn_key=(0,)).spawn(2)
    a = gen_low_tubal_rank(*dims, r, truth_seed)
    mask = sample_mask(dims, 1.0 - missing_rate, mask_seed)
    return a, mask


def init_sensitivity(dims=(25, 25, 30), r=5, missing_rate=0.1, runs=50, seed=0, jobs=1, **solver) -> list:
    """Complete one fixed problem from ``runs`` random initializations; return the RSE of each."""
    if runs < 1:
        raise ValueError("runs must be >= 1")
    a, mask = sensitivity_problem(dims, r, missing_rate, seed)
    cfgs = [SolverConfig(n_target=r, seed=s, **solver) for s in init_seeds(seed, runs)]
    return _map(_SensitivityRun(a, mask), cfgs, jobs)


class _SensitivityRun:
    def __init__(self, a, mask):
        self.a, self.mask = a, mask

    def __call__(self, cfg):
        result = complete(np.where(self.mask, self.a, 0.0), self.mask, cfg)
        return rse(result.x, self.a)
