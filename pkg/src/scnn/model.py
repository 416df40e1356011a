"""Linear two-layer sparse coding network.

Training minimizes, over codes U (N x m), reconstruction dictionary D (p x m)
and projection dictionary C (m x p),

    E = (1/p)||X - U D^T||_F^2 + (1/m)||U - X C^T||_F^2 + (2 lam/m) sum|u|

subject to every column of D lying in the unit ball. The three blocks are
minimized in turn: a proximal-gradient (soft-thresholding) loop for U, a
projected gradient loop for D and a plain gradient loop for C, each with a
closed-form step size. After training, unseen data is coded in a single
linear step, U = X C^T, optionally followed by soft-thresholding.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .linalg import as_matrix, frobenius_norm, make_rng, spectral_norm, uniform_init

log = logging.getLogger(__name__)

# Floor for learning-rate denominators (all-zero U or X).
RATE_FLOOR = 1e-12

THRESHOLD_MODES = ("scaled", "literal")
RATE_MODES = ("lipschitz", "frobenius")
ETA_U_NORMS = ("spectral", "frobenius")


class NumericalError(RuntimeError):
    """Training produced a non-finite energy."""


@dataclass(frozen=True)
class Hyperparams:
    """Training configuration.

    ``threshold_mode="scaled"`` shrinks by ``eta_u * 2 lam / m`` per proximal
    step (the proximal map of the l1 term at step ``eta_u``); ``"literal"``
    shrinks by ``lam`` regardless of the step size. ``rate_mode`` picks
    between Lipschitz-constant step sizes for D and C (spectral norms of
    U^T U and X^T X) and the squared-Frobenius formulas; see
    :func:`learning_rates`.
    """

    lam: float = 0.0
    atoms: int = 10
    t_max: int = 50
    inner_u_max: int = 1000
    inner_d_max: int = 500
    inner_c_max: int = 500
    rtol: float = 1e-4
    inner_rtol: float = 1e-6
    seed: int = 0
    threshold_mode: str = "scaled"
    rate_mode: str = "lipschitz"
    eta_u_norm: str = "spectral"

    def __post_init__(self):
        if not (self.lam >= 0 and math.isfinite(self.lam)):
            raise ValueError(f"lam must be a finite value >= 0, got {self.lam}")
        if self.atoms < 1:
            raise ValueError(f"atoms must be >= 1, got {self.atoms}")
        for name in ("t_max", "inner_u_max", "inner_d_max", "inner_c_max"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        if not self.rtol > 0 or not self.inner_rtol > 0:
            raise ValueError("rtol and inner_rtol must be > 0")
        if not 0 <= self.seed < 2**64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed}")
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValueError(f"threshold_mode must be one of {THRESHOLD_MODES}")
        if self.rate_mode not in RATE_MODES:
            raise ValueError(f"rate_mode must be one of {RATE_MODES}")
        if self.eta_u_norm not in ETA_U_NORMS:
            raise ValueError(f"eta_u_norm must be one of {ETA_U_NORMS}")


@dataclass(frozen=True)
class ScnnModel:
    """Trained encoder/decoder pair. Arrays are read-only."""

    d: np.ndarray  # p x m
    c: np.ndarray  # m x p
    lam: float

    def __post_init__(self):
        d = np.array(self.d, dtype=np.float64)
        c = np.array(self.c, dtype=np.float64)
        if d.ndim != 2 or c.ndim != 2 or d.shape != c.shape[::-1]:
            raise ValueError(f"inconsistent dictionaries: D {d.shape}, C {c.shape}")
        d.setflags(write=False)
        c.setflags(write=False)
        object.__setattr__(self, "d", d)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "lam", float(self.lam))

    @property
    def signal_dim(self):
        return self.d.shape[0]

    @property
    def atoms(self):
        return self.d.shape[1]


@dataclass
class TrainingState:
    u: np.ndarray
    d: np.ndarray
    c: np.ndarray
    step: int = 0
    energy_history: list = field(default_factory=list)


@dataclass
class StepRecord:
    step: int
    e1: float
    e2: float
    total: float
    feedforward_error: float


@dataclass
class TrainReport:
    outer_steps_run: int
    final_energy: float
    energy_history: list
    stopped_by: str  # "tolerance" | "max_iterations"
    records: list = field(default_factory=list)


def soft_threshold(v, lam):
    """sign(v) * max(|v| - lam, 0), elementwise."""
    if np.ndim(lam) == 0 and lam < 0:
        raise ValueError(f"threshold must be >= 0, got {lam}")
    out = np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)
    if np.ndim(out) == 0:
        return float(out)
    return out


def project_columns_unit_ball(d):
    """Rescale every column with L2 norm above 1 back onto the unit sphere."""
    d = np.array(d, dtype=np.float64)
    norms = np.sqrt(np.sum(d * d, axis=0))
    over = norms > 1.0
    d[:, over] /= norms[over]
    return d


def _check_dims(x, u, d=None, c=None):
    n, p = x.shape
    if u.shape[0] != n:
        raise ValueError(f"X {x.shape} and U {u.shape} disagree on the number of rows")
    m = u.shape[1]
    if d is not None and d.shape != (p, m):
        raise ValueError(f"D has shape {d.shape}, expected {(p, m)} for X {x.shape}, U {u.shape}")
    if c is not None and c.shape != (m, p):
        raise ValueError(f"C has shape {c.shape}, expected {(m, p)} for X {x.shape}, U {u.shape}")
    return n, p, m


def energy(x, u, d, c, lam):
    """Return ``(e1, e2, e1 + e2)`` for the full training objective."""
    x, u, d, c = (np.asarray(a, dtype=np.float64) for a in (x, u, d, c))
    _, p, m = _check_dims(x, u, d, c)
    rec = x - u @ d.T
    proj = u - x @ c.T
    e1 = float(np.sum(rec * rec)) / p + float(np.sum(proj * proj)) / m
    e2 = 2.0 * lam / m * float(np.sum(np.abs(u)))
    return e1, e2, e1 + e2


def grad_u_e1(x, u, d, c):
    """Gradient of the smooth part of the energy with respect to U."""
    x, u, d, c = (np.asarray(a, dtype=np.float64) for a in (x, u, d, c))
    _, p, m = _check_dims(x, u, d, c)
    return -(2.0 / p) * (x - u @ d.T) @ d + (2.0 / m) * (u - x @ c.T)


def grad_d(x, u, d):
    x, u, d = (np.asarray(a, dtype=np.float64) for a in (x, u, d))
    _, p, _ = _check_dims(x, u, d)
    return -(2.0 / p) * (x - u @ d.T).T @ u


def grad_c(x, u, c):
    x, u, c = (np.asarray(a, dtype=np.float64) for a in (x, u, c))
    _, _, m = _check_dims(x, u, None, c)
    return -(2.0 / m) * (u - x @ c.T).T @ x


def _guarded(value, what):
    if value < RATE_FLOOR:
        log.warning("%s denominator %.3g below %.0e; clamped", what, value, RATE_FLOOR)
        return RATE_FLOOR
    return value


def eta_u_rate(d, norm="spectral"):
    p, m = d.shape
    h = d.T @ d / p + np.eye(m) / m
    nrm = spectral_norm(h) if norm == "spectral" else frobenius_norm(h)
    return 1.0 / (2.0 * _guarded(nrm, "eta_u"))


def eta_d_rate(u, mode="lipschitz"):
    gram = u.T @ u
    if mode == "lipschitz":
        den = spectral_norm(gram)
    else:
        # ||U U^T||_F = ||U^T U||_F, and the m x m form avoids an N x N product.
        den = frobenius_norm(gram) ** 2
    return 1.0 / (2.0 * _guarded(den, "eta_d"))


def eta_c_rate(x, mode="lipschitz", xtx=None):
    gram = x.T @ x if xtx is None else xtx
    if mode == "lipschitz":
        den = spectral_norm(gram)
    else:
        den = frobenius_norm(gram) ** 2
    return 1.0 / (2.0 * _guarded(den, "eta_c"))


def learning_rates(x, u, d, mode="lipschitz", eta_u_norm="spectral"):
    """Closed-form step sizes ``(eta_u, eta_d, eta_c)``.

    eta_u = 1 / (2 ||(1/p) D^T D + (1/m) I||) in both modes. For D and C,
    ``"lipschitz"`` uses p / (2 ||U^T U||_2) and m / (2 ||X^T X||_2), the
    reciprocal Lipschitz constants of the block gradients; ``"frobenius"`` uses
    p / (2 ||U U^T||_F^2) and m / (2 ||X X^T||_F^2).
    """
    x, u, d = (np.asarray(a, dtype=np.float64) for a in (x, u, d))
    _, p, m = _check_dims(x, u, d)
    eta_u = eta_u_rate(d, eta_u_norm)
    eta_d = p * eta_d_rate(u, mode)
    eta_c = m * eta_c_rate(x, mode)
    return eta_u, eta_d, eta_c


def _relative_change(new, old):
    return abs(new - old) / max(abs(old), 1e-12)


def update_u(x, u, d, c, lam, eta_u, max_iter=1000, rtol=1e-6,
             threshold_mode="scaled", callback=None):
    """Proximal-gradient iterations on U with D and C fixed.

    Stops when the relative change of E1 + E2 drops below ``rtol`` or after
    ``max_iter`` steps. ``callback(u)`` is called after every step.
    """
    if eta_u <= 0:
        raise ValueError(f"eta_u must be > 0, got {eta_u}")
    x, u, d, c = (np.asarray(a, dtype=np.float64) for a in (x, u, d, c))
    _, p, m = _check_dims(x, u, d, c)
    tau = eta_u * 2.0 * lam / m if threshold_mode == "scaled" else lam

    target = x @ c.T
    xd = x @ d
    gram = d.T @ d
    xx = float(np.sum(x * x))

    def objective(u, ug):
        rec = xx - 2.0 * float(np.sum(u * xd)) + float(np.sum(ug * u))
        diff = u - target
        return (rec / p + float(np.sum(diff * diff)) / m
                + 2.0 * lam / m * float(np.sum(np.abs(u))))

    u = u.copy()
    ug = u @ gram
    obj = objective(u, ug)
    for _ in range(max_iter):
        g = -(2.0 / p) * (xd - ug) + (2.0 / m) * (u - target)
        u = soft_threshold(u - eta_u * g, tau)
        ug = u @ gram
        new = objective(u, ug)
        if callback is not None:
            callback(u)
        done = _relative_change(new, obj) < rtol
        obj = new
        if done:
            break
    return u


def update_d(x, u, d, eta_d, max_iter=500, rtol=1e-6, callback=None):
    """Projected gradient descent on (1/p)||X - U D^T||^2 over unit-ball columns."""
    if eta_d <= 0:
        raise ValueError(f"eta_d must be > 0, got {eta_d}")
    x, u, d = (np.asarray(a, dtype=np.float64) for a in (x, u, d))
    _, p, _ = _check_dims(x, u, d)
    utu = u.T @ u
    xtu = x.T @ u
    xx = float(np.sum(x * x))

    def objective(d):
        return (xx - 2.0 * float(np.sum(d * xtu)) + float(np.sum((d @ utu) * d))) / p

    d = d.copy()
    obj = objective(d)
    for _ in range(max_iter):
        g = -(2.0 / p) * (xtu - d @ utu)
        d = project_columns_unit_ball(d - eta_d * g)
        new = objective(d)
        if callback is not None:
            callback(d)
        done = _relative_change(new, obj) < rtol
        obj = new
        if done:
            break
    return d


def update_c(x, u, c, eta_c, max_iter=500, rtol=1e-6, xtx=None, callback=None):
    """Gradient descent on (1/m)||U - X C^T||^2 with U fixed."""
    if eta_c <= 0:
        raise ValueError(f"eta_c must be > 0, got {eta_c}")
    x, u, c = (np.asarray(a, dtype=np.float64) for a in (x, u, c))
    _, _, m = _check_dims(x, u, None, c)
    xtx = x.T @ x if xtx is None else xtx
    utx = u.T @ x
    uu = float(np.sum(u * u))

    def objective(c):
        return (uu - 2.0 * float(np.sum(c * utx)) + float(np.sum((c @ xtx) * c))) / m

    c = c.copy()
    obj = objective(c)
    for _ in range(max_iter):
        g = -(2.0 / m) * (utx - c @ xtx)
        c = c - eta_c * g
        new = objective(c)
        if callback is not None:
            callback(c)
        done = _relative_change(new, obj) < rtol
        obj = new
        if done:
            break
    return c


def stop_condition(energy_history, rtol, t_max, s):
    """True once ``s`` reaches ``t_max`` or the last relative change is below ``rtol``."""
    if s < 1:
        raise ValueError(f"step must be >= 1, got {s}")
    if s >= t_max:
        return True
    if s >= 2 and len(energy_history) >= 2:
        prev, cur = energy_history[-2], energy_history[-1]
        return abs(cur - prev) / max(prev, 1e-12) < rtol
    return False


def feedforward_error(x, d, c):
    """(1/p)||X - X C^T D^T||_F^2, the reconstruction through the trained encoder."""
    p = x.shape[1]
    r = x - (x @ c.T) @ d.T
    return float(np.sum(r * r)) / p


def init_state(x, hp):
    n, p = x.shape
    rng = make_rng(hp.seed)
    u = uniform_init(n, hp.atoms, rng)
    d = uniform_init(p, hp.atoms, rng)
    c = uniform_init(hp.atoms, p, rng)
    return TrainingState(u=u, d=project_columns_unit_ball(d), c=c)


def fit(x, hp, state=None):
    """Train a model on the rows of ``x``; returns ``(ScnnModel, TrainReport)``."""
    x = as_matrix(x, "X")
    if x.shape[0] == 0 or x.shape[1] == 0:
        raise ValueError("X must be non-empty")
    state = init_state(x, hp) if state is None else state
    p, m = x.shape[1], hp.atoms

    xtx = x.T @ x
    eta_c = m * eta_c_rate(x, hp.rate_mode, xtx=xtx)
    records = []
    s = 0
    while True:
        s += 1
        eta_u = eta_u_rate(state.d, hp.eta_u_norm)
        state.u = update_u(x, state.u, state.d, state.c, hp.lam, eta_u,
                           hp.inner_u_max, hp.inner_rtol, hp.threshold_mode)
        eta_d = p * eta_d_rate(state.u, hp.rate_mode)
        state.d = update_d(x, state.u, state.d, eta_d, hp.inner_d_max, hp.inner_rtol)
        state.c = update_c(x, state.u, state.c, eta_c, hp.inner_c_max, hp.inner_rtol,
                           xtx=xtx)
        ff = feedforward_error(x, state.d, state.c)
        e1, e2, total = energy(x, state.u, state.d, state.c, hp.lam)
        if not all(math.isfinite(v) for v in (ff, e1, e2)):
            raise NumericalError(f"non-finite energy at outer step {s} "
                                 f"(feedforward={ff}, e1={e1}, e2={e2})")
        state.step = s
        state.energy_history.append(ff)
        records.append(StepRecord(s, e1, e2, total, ff))
        log.debug("step %d: E=%.6g e1=%.6g e2=%.6g", s, ff, e1, e2)
        if stop_condition(state.energy_history, hp.rtol, hp.t_max, s):
            break

    h = state.energy_history
    converged = s >= 2 and abs(h[-1] - h[-2]) / max(h[-2], 1e-12) < hp.rtol
    stopped = "tolerance" if converged else "max_iterations"
    report = TrainReport(outer_steps_run=s, final_energy=state.energy_history[-1],
                         energy_history=list(state.energy_history), stopped_by=stopped,
                         records=records)
    return ScnnModel(d=state.d, c=state.c, lam=hp.lam), report


def encode(model, x, apply_threshold=True):
    """Codes U = X C^T, soft-thresholded at the model's lam when requested."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.c.shape[1]:
        raise ValueError(f"data has shape {x.shape}; model expects {model.c.shape[1]} columns")
    u = x @ model.c.T
    if apply_threshold:
        u = soft_threshold(u, model.lam)
    return u


def decode(model, u):
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2 or u.shape[1] != model.d.shape[1]:
        raise ValueError(f"codes have shape {u.shape}; model has {model.d.shape[1]} atoms")
    return u @ model.d.T


def relearn_codes(model, x, max_iter=1000, rtol=1e-6, threshold_mode="scaled"):
    """Test-time codes by proximal iterations with D fixed and no encoder term.

    Minimizes (1/p)||X - U D^T||^2 + (2 lam/m) sum|u| from U = 0, i.e. the
    re-learning path that skips the projection dictionary.
    """
    x = np.asarray(x, dtype=np.float64)
    d = np.asarray(model.d)
    p, m = d.shape
    lam = model.lam
    h = d.T @ d / p
    lip = spectral_norm(h)
    eta = 1.0 / (2.0 * _guarded(lip, "relearn"))
    tau = eta * 2.0 * lam / m if threshold_mode == "scaled" else lam
    xd = x @ d
    xx = float(np.sum(x * x))
    gram = d.T @ d

    def objective(u, ug):
        rec = xx - 2.0 * float(np.sum(u * xd)) + float(np.sum(ug * u))
        return rec / p + 2.0 * lam / m * float(np.sum(np.abs(u)))

    u = np.zeros((x.shape[0], m))
    ug = u @ gram
    obj = objective(u, ug)
    for _ in range(max_iter):
        g = -(2.0 / p) * (xd - ug)
        u = soft_threshold(u - eta * g, tau)
        ug = u @ gram
        new = objective(u, ug)
        done = _relative_change(new, obj) < rtol
        obj = new
        if done:
            break
    return u
