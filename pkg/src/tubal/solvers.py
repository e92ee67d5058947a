"""ADMM solvers for PSTNN tensor completion and tensor robust PCA.

Both solvers use a fixed penalty ``beta``; the low-rank step is the PSTNN
proximal map with threshold ``1 / beta`` applied to each Fourier slice.
Setting ``n_target = 0`` turns PSVT into plain singular value thresholding
and gives the TNN-based counterparts.

The multiplier enters both augmented Lagrangians with a ``+M/beta`` sign, so
the RPCA low-rank step works on ``O - E + M/beta``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InvalidConfig
from .prox import ProxParams, pstnn_prox_tensor, soft_threshold
from .t_algebra import rank_targets
from .tensor_core import as_mask, as_tensor3, inf_norm

log = logging.getLogger(__name__)

DEFAULT_BETA_TC = 0.1
DEFAULT_BETA_RPCA = 0.3
DEFAULT_EPSILON = 1e-5
DEFAULT_MAX_ITERS = 500


def default_lambda(shape) -> float:
    """``1 / sqrt(max(n1, n2) * n3)``."""
    n1, n2, n3 = shape
    return 1.0 / np.sqrt(max(n1, n2) * n3)


@dataclass(frozen=True)
class SolverConfig:
    """Solver parameters.

    ``beta`` and ``lam`` default to ``None`` and are resolved per solver
    (see :meth:`resolved`). ``lam`` is only used by :func:`rpca`; ``seed``
    only by :func:`complete`.
    """

    n_target: Union[int, Sequence[int]] = 0
    beta: Optional[float] = None
    lam: Optional[float] = None
    epsilon: float = DEFAULT_EPSILON
    max_iters: int = DEFAULT_MAX_ITERS
    seed: int = 0

    def __post_init__(self):
        for name in ("beta", "lam"):
            value = getattr(self, name)
            if value is not None and not (np.isfinite(value) and value > 0):
                raise InvalidConfig(f"{name} must be positive, got {value}")
        if not (np.isfinite(self.epsilon) and self.epsilon > 0):
            raise InvalidConfig(f"epsilon must be positive, got {self.epsilon}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise InvalidConfig(f"max_iters must be a positive integer, got {self.max_iters}")
        if int(self.seed) != self.seed or self.seed < 0:
            raise InvalidConfig(f"seed must be a non-negative integer, got {self.seed}")

    def resolved(self, task: str, shape) -> "SolverConfig":
        """Copy with every default materialized for ``task`` ('tc' or 'rpca') and tensor ``shape``."""
        beta = self.beta
        if beta is None:
            beta = DEFAULT_BETA_TC if task == "tc" else DEFAULT_BETA_RPCA
        lam = self.lam
        if lam is None:
            lam = default_lambda(shape)
        n = np.asarray(self.n_target)
        n_target = int(n) if n.ndim == 0 else tuple(int(v) for v in n)
        return replace(self, beta=float(beta), lam=float(lam), n_target=n_target)

    def to_dict(self) -> dict:
        n = self.n_target
        return {
            "n_target": list(n) if isinstance(n, tuple) else n,
            "beta": self.beta,
            "lambda": self.lam,
            "epsilon": self.epsilon,
            "max_iters": self.max_iters,
            "seed": self.seed,
        }


@dataclass
class RecoveryResult:
    """Solver output.

    ``x`` is set by :func:`complete`; ``l`` and ``e`` by :func:`rpca`.
    ``trace`` has one row per iteration holding the three stopping quantities.
    """

    iterations: int
    converged: bool
    trace: np.ndarray
    config: SolverConfig
    x: Optional[np.ndarray] = None
    l: Optional[np.ndarray] = None
    e: Optional[np.ndarray] = None
    trace_names: tuple = field(default=())


def check_convergence(pairs, residual, eps):
    """Stopping test shared by both solvers.

    ``pairs`` is a sequence of ``(previous, current)`` iterates and
    ``residual`` the feasibility residual. Converged when every inf-norm is
    ``<= eps``. Returns ``(converged, row)`` with the inf-norms in order.
    """
    row = tuple(inf_norm(curr - prev) for prev, curr in pairs) + (inf_norm(residual),)
    return all(v <= eps for v in row), row


def _check_targets(cfg, shape):
    n1, n2, n3 = shape
    try:
        rank_targets(cfg.n_target, n3, min(n1, n2))
    except ValueError as exc:
        raise InvalidConfig(str(exc)) from exc


def complete(o, mask, cfg: SolverConfig, x0=None) -> RecoveryResult:
    """PSTNN tensor completion.

    Parameters
    ----------
    o : ndarray, shape (n1, n2, n3)
        Observed tensor; only entries where ``mask`` is true are used.
    mask : array_like of bool
        Observed set.
    cfg : SolverConfig
    x0 : ndarray, optional
        Initial iterate on the unobserved set. Defaults to uniform ``[0, 1)``
        draws from ``cfg.seed``.

    Returns
    -------
    RecoveryResult
        ``x`` agrees with ``o`` exactly on the observed set.
    """
    o = as_tensor3(o, "observed tensor")
    mask = as_mask(mask, o.shape)
    if not mask.any():
        raise InvalidConfig("mask has no observed entries")
    if not np.all(np.isfinite(o[mask])):
        raise InvalidConfig("observed entries must be finite")
    cfg = cfg.resolved("tc", o.shape)
    _check_targets(cfg, o.shape)
    beta, eps = cfg.beta, cfg.epsilon
    prox = ProxParams(tau=1.0 / beta, n_target=cfg.n_target)
    missing = ~mask
    if not missing.any():
        # the only feasible point is o itself; with N > 0 and a large 1/beta
        # the iteration need not settle there, so skip it
        return RecoveryResult(
            iterations=0, converged=True, trace=np.zeros((0, 3)), config=cfg, x=o.copy(),
            trace_names=("dx", "dy", "x-y"),
        )

    if x0 is None:
        x0 = np.random.default_rng(cfg.seed).random(o.shape)
    x = np.where(mask, o, x0)
    y = x.copy()
    m = np.zeros_like(o)
    rows = []
    converged = False
    for it in range(1, cfg.max_iters + 1):
        x_new = pstnn_prox_tensor(y - m / beta, prox)
        y_new = np.where(missing, x_new + m / beta, o)
        m = m + beta * (x_new - y_new)
        converged, row = check_convergence([(x, x_new), (y, y_new)], x_new - y_new, eps)
        rows.append(row)
        x, y = x_new, y_new
        if converged:
            break
    log.debug("complete: %d iterations, converged=%s, last=%s", it, converged, rows[-1])
    return RecoveryResult(
        iterations=it,
        converged=converged,
        trace=np.array(rows),
        config=cfg,
        x=y,
        trace_names=("dx", "dy", "x-y"),
    )


def rpca(o, cfg: SolverConfig) -> RecoveryResult:
    """PSTNN tensor robust PCA: split ``o`` into low-rank ``l`` and sparse ``e``.

    Starts from ``l = o``, ``e = m = 0`` and stops when the changes in ``l``
    and ``e`` and the residual ``l + e - o`` are all within ``cfg.epsilon``
    in the inf-norm.
    """
    o = as_tensor3(o, "observed tensor", finite=True)
    cfg = cfg.resolved("rpca", o.shape)
    _check_targets(cfg, o.shape)
    beta, eps = cfg.beta, cfg.epsilon
    prox = ProxParams(tau=1.0 / beta, n_target=cfg.n_target)
    shrink = cfg.lam / beta

    l = o.copy()
    e = np.zeros_like(o)
    m = np.zeros_like(o)
    rows = []
    converged = False
    for it in range(1, cfg.max_iters + 1):
        l_new = pstnn_prox_tensor(o - e + m / beta, prox)
        e_new = soft_threshold(o - l_new + m / beta, shrink)
        resid = l_new + e_new - o
        m = m - beta * resid
        converged, row = check_convergence([(l, l_new), (e, e_new)], resid, eps)
        rows.append(row)
        l, e = l_new, e_new
        if converged:
            break
    log.debug("rpca: %d iterations, converged=%s, last=%s", it, converged, rows[-1])
    return RecoveryResult(
        iterations=it,
        converged=converged,
        trace=np.array(rows),
        config=cfg,
        l=l,
        e=e,
        trace_names=("dl", "de", "l+e-o"),
    )
