"""Deterministic optimizers: reference and sketched primal solves (Newton or gradient
descent), projected-gradient dual solves over the conjugate domains of the non-smooth
losses, and the Euclidean projections those need."""

import dataclasses
import enum
import math
import typing

import numpy as np
import scipy.linalg

from . import losses, numkit

ARMIJO_FACTOR   = 0.5
ARMIJO_SLOPE    = 1e-4
_MAX_HALVINGS   = 60


class Method(enum.Enum):
    Newton          = 'newton'
    GradientDescent = 'gradient'


class LineSearch(enum.Enum):
    Armijo      = 'armijo'
    Off         = 'none'


@dataclasses.dataclass(frozen=True)
class SolveOptions:
    grad_tolerance  : float         = 1e-10
    max_iters       : int           = 200
    line_search     : LineSearch    = LineSearch.Armijo
    method          : Method        = Method.Newton
    accelerated     : bool          = True      # dual solves only
    record_trace    : bool          = False

    def __post_init__(self):
        if not self.grad_tolerance > 0:
            raise ValueError(f'grad_tolerance must be positive, got {self.grad_tolerance}')
        if self.max_iters < 1:
            raise ValueError(f'max_iters must be at least 1, got {self.max_iters}')
        object.__setattr__(self, 'line_search', LineSearch(self.line_search))
        object.__setattr__(self, 'method', Method(self.method))

    def fingerprint(self) -> str:
        return f'{self.grad_tolerance!r}|{self.max_iters}|{self.line_search.value}|{self.method.value}|{self.accelerated}'


@dataclasses.dataclass
class SolveResult:
    minimizer       : np.ndarray
    objective       : float
    grad_norm       : float
    iterations      : int
    converged       : bool
    objective_trace : list[float]|None = None


def _check_lambda(lam: float):
    if not (lam > 0 and math.isfinite(lam)):
        raise ValueError(f'λ must be positive and finite, got {lam}')


class _Composite:
    """Φ(α) = f(Mα + c) + (λ/2)(α + s)ᵀG(α + s), G = I when gram is None."""

    def __init__(self, M: np.ndarray, loss: losses.SmoothLossModel, lam: float, offset: np.ndarray|None, shift: np.ndarray|None, gram: np.ndarray|None):
        self.M      = M
        self.loss   = loss
        self.lam    = lam
        self.offset = np.zeros(M.shape[0]) if offset is None else offset
        self.shift  = np.zeros(M.shape[1]) if shift is None else shift
        self.gram   = gram

    def _reg(self, a: np.ndarray) -> np.ndarray:
        u = a+self.shift
        return u if self.gram is None else self.gram @ u

    def value(self, a: np.ndarray) -> float:
        u = a+self.shift
        return self.loss.value(self.M @ a + self.offset) + 0.5*self.lam*float(u @ self._reg(a))

    def gradient(self, a: np.ndarray) -> np.ndarray:
        return self.M.T @ self.loss.gradient(self.M @ a + self.offset) + self.lam*self._reg(a)

    def newton_direction(self, a: np.ndarray, g: np.ndarray) -> np.ndarray:
        D = self.loss.hessian_diag(self.M @ a + self.offset)
        n, r = self.M.shape
        if self.gram is None and r > n:
            # Woodbury on the n×n system: H⁻¹g = (g − Eᵀ(EEᵀ + λI)⁻¹Eg)/λ, E = D^½M
            E = np.sqrt(D)[:, None]*self.M
            inner = E @ E.T
            inner[np.diag_indices_from(inner)] += self.lam
            c = scipy.linalg.cho_factor(inner, check_finite=False)
            return -(g - E.T @ scipy.linalg.cho_solve(c, E @ g, check_finite=False))/self.lam
        H = self.M.T @ (D[:, None]*self.M)
        H += self.lam*(np.eye(r) if self.gram is None else self.gram)
        try:
            c = scipy.linalg.cho_factor(H, check_finite=False)
            return -scipy.linalg.cho_solve(c, g, check_finite=False)
        except np.linalg.LinAlgError:
            # singular sketch Gram; the objective is flat along its null space
            return -scipy.linalg.lstsq(H, g, check_finite=False)[0]

    def gradient_lipschitz(self) -> float:
        sigma = numkit.operator_norm(self.M) if self.M.size else 0.
        reg = 1. if self.gram is None else numkit.operator_norm(self.gram)
        return self.loss.smoothness*sigma**2 + self.lam*reg


def _armijo(phi: _Composite, a: np.ndarray, val: float, g: np.ndarray, p: np.ndarray, t: float) -> tuple[np.ndarray, float]|None:
    slope = float(g @ p)
    slack = 1e-14*abs(val)      # roundoff floor near the optimum
    for _ in range(_MAX_HALVINGS):
        cand = a + t*p
        cand_val = phi.value(cand)
        if cand_val <= val + ARMIJO_SLOPE*t*slope + slack:
            return cand, cand_val
        t *= ARMIJO_FACTOR
    return None


def _minimize(phi: _Composite, opts: SolveOptions) -> SolveResult:
    r = phi.M.shape[1]
    a = np.zeros(r)
    val = phi.value(a)
    trace = [val] if opts.record_trace else None
    g = phi.gradient(a)
    g0 = float(np.linalg.norm(g))
    threshold = opts.grad_tolerance*max(1., g0)
    step = None
    if opts.method==Method.GradientDescent:
        step = 1./phi.gradient_lipschitz()

    it = 0
    gn = g0
    while gn > threshold and it < opts.max_iters:
        it += 1
        match opts.method:
            case Method.Newton:
                p = phi.newton_direction(a, g)
                t0 = 1.
            case Method.GradientDescent:
                p = -g
                t0 = step if opts.line_search==LineSearch.Off else 4.*step
            case _:
                raise NotImplementedError(f'Logic is not implemented for solve method {opts.method}')

        if opts.line_search==LineSearch.Armijo:
            moved = _armijo(phi, a, val, g, p, t0)
            if moved is None:
                break
            a, val = moved
        else:
            a = a + t0*p
            val = phi.value(a)
        g = phi.gradient(a)
        gn = float(np.linalg.norm(g))
        if trace is not None:
            trace.append(val)

    return SolveResult(a, val, gn, it, gn <= threshold, trace)


def _vector(v, n: int, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape!=(n,):
        raise ValueError(f'{name} must be a vector of length {n}, got shape {v.shape}')
    return v


def solve_primal_reference(A, loss: losses.SmoothLossModel, lam: float, opts: SolveOptions = SolveOptions()) -> SolveResult:
    """x* = argmin f(Ax) + (λ/2)‖x‖²."""
    A = numkit.as_dense(A, 'A')
    _check_lambda(lam)
    if A.shape[0]!=loss.n:
        raise ValueError(f'A has {A.shape[0]} rows, the loss expects {loss.n}')
    return _minimize(_Composite(A, loss, lam, None, None, None), opts)


def solve_sketched(a_qs, loss: losses.SmoothLossModel, lam: float, opts: SolveOptions = SolveOptions()) -> SolveResult:
    """α*† = argmin f(AQ_Sα) + (λ/2)‖α‖². A sketch without columns gives the empty solution."""
    return solve_sketched_shifted(a_qs, None, None, loss, lam, opts)


def solve_sketched_shifted(a_qs, shift_image, shift_coords, loss: losses.SmoothLossModel, lam: float, opts: SolveOptions = SolveOptions()) -> SolveResult:
    """argmin f(AQ_Sα + Ax̂) + (λ/2)‖α + Q_Sᵀx̂‖² given shift_image = Ax̂ and
    shift_coords = Q_Sᵀx̂."""
    a_qs = numkit.as_dense(a_qs, 'a_qs')
    _check_lambda(lam)
    n, r = a_qs.shape
    if n!=loss.n:
        raise ValueError(f'a_qs has {n} rows, the loss expects {loss.n}')
    offset = None if shift_image is None else _vector(shift_image, n, 'shift_image')
    shift = None if shift_coords is None else _vector(shift_coords, r, 'shift_coords')
    if r==0:
        w = np.zeros(n) if offset is None else offset
        return SolveResult(np.zeros(0), loss.value(w), 0., 0, True, None)
    return _minimize(_Composite(a_qs, loss, lam, offset, shift, None), opts)


def solve_sketched_direct(A, S, loss: losses.SmoothLossModel, lam: float, opts: SolveOptions = SolveOptions()) -> SolveResult:
    """α* = argmin f(ASα) + (λ/2)‖Sα‖², the sketched program before whitening."""
    A = numkit.as_dense(A, 'A')
    S = numkit.as_dense(S, 'S')
    _check_lambda(lam)
    if S.shape[0]!=A.shape[1]:
        raise ValueError(f'S has {S.shape[0]} rows, A has {A.shape[1]} columns')
    return _minimize(_Composite(A @ S, loss, lam, None, None, S.T @ S), opts)


def project_box(v, lows, highs) -> np.ndarray:
    lows = np.asarray(lows, dtype=np.float64)
    highs = np.asarray(highs, dtype=np.float64)
    if np.any(lows > highs):
        raise ValueError('project_box needs lows <= highs')
    return np.clip(np.asarray(v, dtype=np.float64), lows, highs)


def _project_simplex(u: np.ndarray, radius: float) -> np.ndarray:
    # {u ≥ 0, Σu = radius} by sorting and thresholding
    mu = np.sort(u)[::-1]
    cssv = np.cumsum(mu) - radius
    ks = np.arange(1, u.size+1)
    rho = int(np.count_nonzero(mu - cssv/ks > 0))
    theta = cssv[rho-1]/rho
    return np.maximum(u-theta, 0.)


def project_scaled_simplex(v, signs, radius: float) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    signs = np.asarray(signs, dtype=np.float64)
    if signs.shape!=v.shape or v.size==0:
        raise ValueError(f'project_scaled_simplex needs one sign per coordinate, got {signs.shape} for {v.shape}')
    if radius <= 0:
        raise ValueError(f'radius must be positive, got {radius}')
    return signs*_project_simplex(signs*v, radius)


def project_l1_ball(v, radius: float) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if radius <= 0:
        raise ValueError(f'radius must be positive, got {radius}')
    if np.sum(np.abs(v)) <= radius:
        return v.copy()
    return np.sign(v)*_project_simplex(np.abs(v), radius)


def project(v: np.ndarray, feasible_set: losses.FeasibleSet) -> np.ndarray:
    match feasible_set:
        case losses.Box():
            return project_box(v, feasible_set.lows, feasible_set.highs)
        case losses.SignedSimplex():
            out = np.zeros_like(v)
            out[feasible_set.indices] = project_scaled_simplex(v[feasible_set.indices], feasible_set.signs, feasible_set.radius)
            return out
        case losses.L1Ball():
            return project_l1_ball(v, feasible_set.radius)
        case _:
            raise NotImplementedError(f'Logic is not implemented for feasible set {type(feasible_set).__name__}')


def _linear_minimizer(c: np.ndarray, feasible_set: losses.FeasibleSet) -> np.ndarray:
    match feasible_set:
        case losses.Box():
            y = project_box(np.zeros_like(c), feasible_set.lows, feasible_set.highs)
            y[c > 0] = feasible_set.lows[c > 0]
            y[c < 0] = feasible_set.highs[c < 0]
            return y
        case losses.SignedSimplex():
            y = np.zeros_like(c)
            k = int(np.argmin(feasible_set.signs*c[feasible_set.indices]))
            y[feasible_set.indices[k]] = feasible_set.signs[k]*feasible_set.radius
            return y
        case losses.L1Ball():
            y = np.zeros_like(c)
            if np.any(c):
                i = int(np.argmax(np.abs(c)))
                y[i] = -np.sign(c[i])*feasible_set.radius
            return y
        case _:
            raise NotImplementedError(f'Logic is not implemented for feasible set {type(feasible_set).__name__}')


def solve_dual_projected(loss: losses.NonSmoothLossModel, B, b_linear, lam: float, feasible_set: losses.FeasibleSet, opts: SolveOptions = SolveOptions(), y0=None) -> SolveResult:
    """min b_linearᵀy + (1/2λ)‖By‖² over feasible_set by projected gradient with step
    1/L, L = σ₁(B)²/λ. The accelerated variant restarts its momentum whenever the
    objective would increase, so accepted iterates never increase the objective.
    Converged once the gradient-mapping norm falls below grad_tolerance (relative to its
    first value when that exceeds one)."""
    B = numkit.as_dense(B, 'B')
    _check_lambda(lam)
    n = loss.n
    if B.shape[1]!=n:
        raise ValueError(f'B has {B.shape[1]} columns, the loss expects {n}')
    c = _vector(b_linear, n, 'b_linear')

    if B.shape[0] > n:
        gram = B.T @ B
        quad = lambda y: gram @ y
    else:
        quad = lambda y: B.T @ (B @ y)
    phi = lambda y: float(c @ y) + 0.5*float(y @ quad(y))/lam

    sigma = numkit.operator_norm(B) if B.size else 0.
    if sigma==0.:
        y = _linear_minimizer(c, feasible_set)
        return SolveResult(y, phi(y), 0., 0, True, [phi(y)] if opts.record_trace else None)
    L = sigma**2/lam

    y = project(np.zeros(n) if y0 is None else _vector(y0, n, 'y0'), feasible_set)
    phi_y = phi(y)
    trace = [phi_y] if opts.record_trace else None
    z = y
    t = 1.
    gm0 = None
    gm = math.inf
    converged = False
    it = 0
    while it < opts.max_iters:
        it += 1
        y_new = project(z - (c + quad(z)/lam)/L, feasible_set)
        gm = L*float(np.linalg.norm(z-y_new))
        if gm0 is None:
            gm0 = gm
        phi_new = phi(y_new)
        if opts.accelerated and phi_new > phi_y and t > 1.:
            # momentum overshot, restart from the last accepted iterate
            t = 1.
            z = y
            continue
        y_prev, y, phi_y = y, y_new, phi_new
        if trace is not None:
            trace.append(phi_y)
        if gm <= opts.grad_tolerance*max(1., gm0):
            converged = True
            break
        if opts.accelerated:
            t_next = 0.5*(1.+math.sqrt(1.+4.*t*t))
            z = y + ((t-1.)/t_next)*(y-y_prev)
            t = t_next
        else:
            z = y

    return SolveResult(y, phi_y, gm, it, converged, trace)


class PrimalDualPair(typing.NamedTuple):
    x       : np.ndarray
    z       : np.ndarray
    result  : SolveResult   # the dual solve


def solve_nonsmooth_primal_reference(A, loss: losses.NonSmoothLossModel, lam: float, opts: SolveOptions = SolveOptions()) -> PrimalDualPair:
    """x* of f(Ax) + (λ/2)‖x‖² for a non-smooth loss through its dual
    min f*(z) + (1/2λ)‖Aᵀz‖² over dom f*, mapped back by x* = −Aᵀz*/λ."""
    A = numkit.as_dense(A, 'A')
    _check_lambda(lam)
    if A.shape[0]!=loss.n:
        raise ValueError(f'A has {A.shape[0]} rows, the loss expects {loss.n}')
    res = solve_dual_projected(loss, A.T, loss.conjugate_linear_term, lam, loss.dual_feasible_set(), opts)
    return PrimalDualPair(-(A.T @ res.minimizer)/lam, res.minimizer, res)
