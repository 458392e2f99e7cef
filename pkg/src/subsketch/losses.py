"""Loss models f: smooth (quadratic, logistic, ReLU-type) and non-smooth (L1, L∞, hinge),
with gradients or subgradient partitions, smoothness/Lipschitz constants and conjugates."""

import dataclasses
import enum
import math
import typing

import numpy as np
import scipy.special

DOMAIN_TOLERANCE = 1e-7


class LossKind(enum.Enum):
    Quadratic   = 'quadratic'
    Logistic    = 'logistic'
    ReluType    = 'relu'
    L1          = 'l1'
    Linf        = 'linf'
    Hinge       = 'hinge'

    @property
    def is_smooth(self) -> bool:
        return self in (LossKind.Quadratic, LossKind.Logistic, LossKind.ReluType)


class ConjugateDomain(enum.Enum):
    Box             = enum.auto()   # per-coordinate intervals
    SignedL1Ball    = enum.auto()   # unit L1 ball; subdifferentials are signed simplex faces


def _as_vector(w, n: int, name: str = 'w') -> np.ndarray:
    w = np.asarray(w, dtype=np.float64)
    if w.shape!=(n,):
        raise ValueError(f'{name} must be a vector of length {n}, got shape {w.shape}')
    if np.isnan(w).any():
        raise ValueError(f'{name} contains NaN entries')
    return w


def _check_labels(y: np.ndarray, what: str):
    if not np.all(np.abs(y)==1.):
        raise ValueError(f'{what} must have entries in {{-1, +1}}')


@dataclasses.dataclass(frozen=True, eq=False)
class LossModel:
    target: np.ndarray

    kind: typing.ClassVar[LossKind]

    def __post_init__(self):
        target = np.array(self.target, dtype=np.float64)
        if target.ndim!=1 or target.size==0:
            raise ValueError(f'{type(self).__name__} target must be a nonempty vector, got shape {target.shape}')
        if not np.all(np.isfinite(target)):
            raise ValueError(f'{type(self).__name__} target contains non-finite entries')
        target.flags.writeable = False
        object.__setattr__(self, 'target', target)

    @property
    def n(self) -> int:
        return self.target.size

    def fingerprint(self) -> bytes:
        return self.kind.value.encode() + b':' + self.target.tobytes()

    def value(self, w) -> float:
        raise NotImplementedError

    def conjugate_value(self, z) -> float:
        """f*(z), or math.inf outside the conjugate's domain."""
        raise NotImplementedError


class SmoothLossModel(LossModel):
    def gradient(self, w) -> np.ndarray:
        raise NotImplementedError

    def hessian_diag(self, w) -> np.ndarray:
        raise NotImplementedError

    @property
    def smoothness(self) -> float:
        raise NotImplementedError

    @property
    def strong_convexity(self) -> float:
        return 0.


class Quadratic(SmoothLossModel):
    """f(w) = ½‖w − b‖²."""
    kind = LossKind.Quadratic

    def value(self, w) -> float:
        w = _as_vector(w, self.n)
        return 0.5*float(np.sum((w-self.target)**2))

    def gradient(self, w) -> np.ndarray:
        return _as_vector(w, self.n) - self.target

    def hessian_diag(self, w) -> np.ndarray:
        _as_vector(w, self.n)
        return np.ones(self.n)

    @property
    def smoothness(self) -> float:
        return 1.

    @property
    def strong_convexity(self) -> float:
        return 1.

    def conjugate_value(self, z) -> float:
        z = _as_vector(z, self.n, 'z')
        return 0.5*float(z@z) + float(z@self.target)


class Logistic(SmoothLossModel):
    """f(w) = (1/n)·Σ log(1 + exp(−yᵢwᵢ)) with labels y ∈ {±1}ⁿ."""
    kind = LossKind.Logistic

    def __post_init__(self):
        super().__post_init__()
        _check_labels(self.target, 'Logistic labels')

    def value(self, w) -> float:
        w = _as_vector(w, self.n)
        return float(np.mean(np.logaddexp(0., -self.target*w)))

    def gradient(self, w) -> np.ndarray:
        w = _as_vector(w, self.n)
        return -self.target*scipy.special.expit(-self.target*w)/self.n

    def hessian_diag(self, w) -> np.ndarray:
        w = _as_vector(w, self.n)
        p = scipy.special.expit(self.target*w)
        return p*(1.-p)/self.n

    @property
    def smoothness(self) -> float:
        return 0.25/self.n

    def conjugate_value(self, z) -> float:
        z = _as_vector(z, self.n, 'z')
        s = self.n*self.target*z
        if np.any(s < -1.-DOMAIN_TOLERANCE) or np.any(s > DOMAIN_TOLERANCE):
            return math.inf
        s = np.clip(s, -1., 0.)
        return float(np.sum(scipy.special.xlogy(-s, -s) + scipy.special.xlogy(1.+s, 1.+s)))/self.n


class ReluType(SmoothLossModel):
    """f(w) = (1/2n)·Σ ((wᵢ)₊² − 2wᵢyᵢ)."""
    kind = LossKind.ReluType

    def value(self, w) -> float:
        w = _as_vector(w, self.n)
        return float(np.sum(np.maximum(w, 0.)**2 - 2.*w*self.target))/(2*self.n)

    def gradient(self, w) -> np.ndarray:
        w = _as_vector(w, self.n)
        return (np.maximum(w, 0.)-self.target)/self.n

    def hessian_diag(self, w) -> np.ndarray:
        w = _as_vector(w, self.n)
        return (w > 0.).astype(np.float64)/self.n    # right derivative 0 at the kink

    @property
    def smoothness(self) -> float:
        return 1./self.n

    def conjugate_value(self, z) -> float:
        z = _as_vector(z, self.n, 'z')
        c = z + self.target/self.n
        if np.any(c < -DOMAIN_TOLERANCE/self.n):
            return math.inf
        return 0.5*self.n*float(np.sum(np.maximum(c, 0.)**2))


@dataclasses.dataclass(frozen=True, eq=False)
class SubgradientPartition:
    """Structure of ∂f(w) for a non-smooth loss.

    L1/hinge: fixed coordinates carry a single value, free coordinates an interval.
    L∞: coordinates outside the active set are fixed at 0; active coordinates carry the
    sign of their residual, and ∂f is the convex hull of the signed basis vectors. When
    every residual is within tolerance of zero, ∂f is the whole unit L1 ball."""
    n               : int
    fixed           : dict[int, float]
    free            : dict[int, tuple[float, float]]
    tie_tolerance   : float
    active_signs    : dict[int, float]|None = None
    whole_l1_ball   : bool                  = False


@dataclasses.dataclass(frozen=True, eq=False)
class Box:
    lows    : np.ndarray
    highs   : np.ndarray

    def __post_init__(self):
        lows = np.asarray(self.lows, dtype=np.float64)
        highs = np.asarray(self.highs, dtype=np.float64)
        if lows.shape!=highs.shape or lows.ndim!=1:
            raise ValueError(f'Box bounds must be vectors of equal length, got {lows.shape} and {highs.shape}')
        if np.any(lows > highs):
            raise ValueError(f'Box lows must not exceed highs (first violation at coordinate {int(np.argmax(lows > highs))})')
        object.__setattr__(self, 'lows', lows)
        object.__setattr__(self, 'highs', highs)

    @property
    def n(self) -> int:
        return self.lows.size


@dataclasses.dataclass(frozen=True, eq=False)
class SignedSimplex:
    """{y : yᵢ = 0 off indices, signsᵢ·yᵢ ≥ 0, Σ|yᵢ| = radius}."""
    n       : int
    indices : np.ndarray
    signs   : np.ndarray
    radius  : float = 1.

    def __post_init__(self):
        indices = np.asarray(self.indices, dtype=np.intp)
        signs = np.asarray(self.signs, dtype=np.float64)
        if indices.shape!=signs.shape or indices.size==0:
            raise ValueError(f'SignedSimplex needs a nonempty index set with one sign per index, got {indices.shape} and {signs.shape}')
        if not np.all(np.abs(signs)==1.):
            raise ValueError('SignedSimplex signs must be +1 or -1')
        if self.radius <= 0:
            raise ValueError(f'SignedSimplex radius must be positive, got {self.radius}')
        object.__setattr__(self, 'indices', indices)
        object.__setattr__(self, 'signs', signs)


@dataclasses.dataclass(frozen=True)
class L1Ball:
    n       : int
    radius  : float = 1.

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f'L1Ball radius must be positive, got {self.radius}')


FeasibleSet = Box | SignedSimplex | L1Ball


def default_tie_tolerance(w) -> float:
    return 1e-7*(1.+float(np.max(np.abs(w), initial=0.)))


class NonSmoothLossModel(LossModel):
    conjugate_domain: ConjugateDomain = ConjugateDomain.Box

    @property
    def lipschitz(self) -> float:
        raise NotImplementedError

    @property
    def conjugate_linear_term(self) -> np.ndarray:
        # f*(z) = bᵀz on the domain, for all three losses
        return self.target

    def domain_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        raise ValueError(f'{self.kind.value} has no box-shaped conjugate domain')

    def conjugate_value(self, z) -> float:
        z = _as_vector(z, self.n, 'z')
        if not self._in_domain(z, DOMAIN_TOLERANCE):
            return math.inf
        return float(z@self.target)

    def _in_domain(self, z: np.ndarray, tol: float) -> bool:
        lows, highs = self.domain_bounds()
        return bool(np.all(z >= lows-tol) and np.all(z <= highs+tol))

    def subgradient_partition(self, w, tie_tolerance: float|None = None) -> SubgradientPartition:
        raise NotImplementedError

    def dual_feasible_set(self) -> FeasibleSet:
        """dom f*, the feasible set of the plain dual programs."""
        return Box(*self.domain_bounds())

    def restricted_feasible_set(self, partition: SubgradientPartition) -> FeasibleSet:
        """∂f(w) described by partition, the feasible set of the restricted dual program."""
        if partition.n!=self.n:
            raise ValueError(f'Partition covers {partition.n} coordinates, the loss has {self.n}')
        lows = np.empty(self.n)
        highs = np.empty(self.n)
        for i, v in partition.fixed.items():
            lows[i] = highs[i] = v
        for i, (lo, hi) in partition.free.items():
            lows[i], highs[i] = lo, hi
        return Box(lows, highs)

    def arbitrary_subgradient(self, w, tie_tolerance: float|None = None) -> np.ndarray:
        """Deterministic element of ∂f(w): midpoint of every free interval, or the first
        active signed basis vector for L∞."""
        part = self.subgradient_partition(w, tie_tolerance)
        g = np.zeros(self.n)
        for i, v in part.fixed.items():
            g[i] = v
        for i, (lo, hi) in part.free.items():
            g[i] = 0.5*(lo+hi)
        if part.active_signs:
            first = min(part.active_signs)
            g[first] = part.active_signs[first]
        return g


class L1(NonSmoothLossModel):
    """f(w) = ‖w − b‖₁."""
    kind = LossKind.L1

    def value(self, w) -> float:
        w = _as_vector(w, self.n)
        return float(np.sum(np.abs(w-self.target)))

    @property
    def lipschitz(self) -> float:
        return math.sqrt(self.n)

    def domain_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return -np.ones(self.n), np.ones(self.n)

    def subgradient_partition(self, w, tie_tolerance: float|None = None) -> SubgradientPartition:
        w = _as_vector(w, self.n)
        tol = default_tie_tolerance(w) if tie_tolerance is None else tie_tolerance
        r = w-self.target
        fixed = {int(i): float(np.sign(r[i])) for i in np.flatnonzero(np.abs(r) > tol)}
        free = {int(i): (-1., 1.) for i in np.flatnonzero(np.abs(r) <= tol)}
        return SubgradientPartition(self.n, fixed, free, tol)


class Hinge(NonSmoothLossModel):
    """f(w) = Σ max(0, 1 − wᵢbᵢ) with labels b ∈ {±1}ⁿ."""
    kind = LossKind.Hinge

    def __post_init__(self):
        super().__post_init__()
        _check_labels(self.target, 'Hinge labels')

    def value(self, w) -> float:
        w = _as_vector(w, self.n)
        return float(np.sum(np.maximum(0., 1.-w*self.target)))

    @property
    def lipschitz(self) -> float:
        return math.sqrt(self.n)

    def domain_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.minimum(0., -self.target), np.maximum(0., -self.target)

    def subgradient_partition(self, w, tie_tolerance: float|None = None) -> SubgradientPartition:
        w = _as_vector(w, self.n)
        tol = default_tie_tolerance(w) if tie_tolerance is None else tie_tolerance
        slack = 1.-w*self.target
        fixed: dict[int, float] = {}
        free: dict[int, tuple[float, float]] = {}
        for i in range(self.n):
            if slack[i] > tol:
                fixed[i] = -float(self.target[i])
            elif slack[i] < -tol:
                fixed[i] = 0.
            else:
                free[i] = (min(0., -float(self.target[i])), max(0., -float(self.target[i])))
        return SubgradientPartition(self.n, fixed, free, tol)


class Linf(NonSmoothLossModel):
    """f(w) = ‖w − b‖∞."""
    kind = LossKind.Linf
    conjugate_domain = ConjugateDomain.SignedL1Ball

    def value(self, w) -> float:
        w = _as_vector(w, self.n)
        return float(np.max(np.abs(w-self.target)))

    @property
    def lipschitz(self) -> float:
        return 1.

    def _in_domain(self, z: np.ndarray, tol: float) -> bool:
        return float(np.sum(np.abs(z))) <= 1.+tol

    def dual_feasible_set(self) -> FeasibleSet:
        return L1Ball(self.n)

    def restricted_feasible_set(self, partition: SubgradientPartition) -> FeasibleSet:
        if partition.n!=self.n:
            raise ValueError(f'Partition covers {partition.n} coordinates, the loss has {self.n}')
        if partition.whole_l1_ball:
            return L1Ball(self.n)
        indices = sorted(partition.active_signs)
        return SignedSimplex(self.n, indices, [partition.active_signs[i] for i in indices])

    def subgradient_partition(self, w, tie_tolerance: float|None = None) -> SubgradientPartition:
        w = _as_vector(w, self.n)
        tol = default_tie_tolerance(w) if tie_tolerance is None else tie_tolerance
        r = w-self.target
        top = float(np.max(np.abs(r)))
        if top <= tol:
            return SubgradientPartition(self.n, {}, {}, tol, None, whole_l1_ball=True)
        active = np.flatnonzero(np.abs(r) >= top-tol)
        signs = {int(i): float(np.sign(r[i])) for i in active}
        fixed = {int(i): 0. for i in range(self.n) if int(i) not in signs}
        return SubgradientPartition(self.n, fixed, {}, tol, signs)


_registry: dict[LossKind, type[LossModel]] = {
    LossKind.Quadratic: Quadratic,
    LossKind.Logistic:  Logistic,
    LossKind.ReluType:  ReluType,
    LossKind.L1:        L1,
    LossKind.Linf:      Linf,
    LossKind.Hinge:     Hinge,
}

def make(kind: str|LossKind, target) -> LossModel:
    return _registry[LossKind(kind)](target)
