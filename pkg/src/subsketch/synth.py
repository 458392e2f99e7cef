"""Synthetic instances: matrices with prescribed spectral decay and Haar singular vectors,
label vectors and noisy linear observations."""

import dataclasses
import enum
import math

import numpy as np

from . import analysis, numkit


class Decay(enum.Enum):
    Polynomial  = 'poly'
    Exponential = 'exp'
    Geometric   = 'geom'
    Explicit    = 'explicit'


@dataclasses.dataclass(frozen=True)
class SpectrumSpec:
    """σⱼ = scale·j^(−(1+ν)/2) (polynomial), scale·e^(−νj/2) (exponential),
    scale·ratioʲ (geometric) or the given values (explicit), j = 1…ρ.
    scale defaults to √n for the polynomial and exponential kinds and to 1 otherwise."""
    kind    : Decay
    nu      : float                     = 1.
    ratio   : float                     = 0.98
    values  : tuple[float, ...]|None    = None
    scale   : float|None                = None

    def __post_init__(self):
        object.__setattr__(self, 'kind', Decay(self.kind))
        match self.kind:
            case Decay.Polynomial | Decay.Exponential:
                if not self.nu > 0:
                    raise ValueError(f'nu must be positive for {self.kind.value} decay, got {self.nu}')
            case Decay.Geometric:
                if not 0 < self.ratio < 1:
                    raise ValueError(f'ratio must lie in (0, 1), got {self.ratio}')
            case Decay.Explicit:
                if not self.values:
                    raise ValueError('An explicit spectrum needs at least one value')
                vals = tuple(float(v) for v in self.values)
                if any(v <= 0 for v in vals) or any(a < b for a, b in zip(vals, vals[1:])):
                    raise ValueError(f'Explicit singular values must be positive and nonincreasing, got {vals}')
                object.__setattr__(self, 'values', vals)
        if self.scale is not None and not self.scale > 0:
            raise ValueError(f'scale must be positive, got {self.scale}')

    def singular_values(self, n: int, d: int) -> np.ndarray:
        rho = min(n, d)
        j = np.arange(1, rho+1, dtype=np.float64)
        root_n = math.sqrt(n)
        match self.kind:
            case Decay.Polynomial:
                sigma = (self.scale or root_n) * j**(-(1.+self.nu)/2.)
            case Decay.Exponential:
                sigma = (self.scale or root_n) * np.exp(-self.nu*j/2.)
            case Decay.Geometric:
                sigma = (self.scale or 1.) * self.ratio**j
            case Decay.Explicit:
                if len(self.values) > rho:
                    raise ValueError(f'{len(self.values)} explicit singular values do not fit a {n}x{d} matrix')
                sigma = (self.scale or 1.) * np.array(self.values)
            case _:
                raise NotImplementedError(f'Logic is not implemented for spectrum kind {self.kind}')
        if sigma[-1] <= 0:
            raise ValueError(f'{self.kind.value} spectrum underflows to zero before j={sigma.size} for n={n}, d={d}')
        return sigma


def synth_matrix(n: int, d: int, spec: SpectrumSpec, rng: numkit.SeededRng) -> tuple[np.ndarray, analysis.SpectralSummary]:
    """A = UΣVᵀ with Haar-distributed frames U (n×ρ) and V (d×ρ)."""
    if n < 1 or d < 1:
        raise ValueError(f'Matrix dimensions must be positive, got {n}x{d}')
    sigma = spec.singular_values(n, d)
    U = numkit.sample_haar_frame(n, sigma.size, rng.spawn(0))
    V = numkit.sample_haar_frame(d, sigma.size, rng.spawn(1))
    A = (U*sigma) @ V.T
    return A, analysis.SpectralSummary(sigma, n, d)


def synth_labels(n: int, rng: numkit.SeededRng) -> np.ndarray:
    if n < 1:
        raise ValueError(f'n must be positive, got {n}')
    return np.where(rng.generator().random(n) < 0.5, -1., 1.)


def synth_observation(A, x_pl, noise_variance: float, rng: numkit.SeededRng) -> np.ndarray:
    """b = Ax_pl + w with w ~ N(0, σ²/n·I)."""
    A = numkit.as_dense(A, 'A')
    x_pl = np.asarray(x_pl, dtype=np.float64)
    if x_pl.shape!=(A.shape[1],):
        raise ValueError(f'x_pl must be a vector of length {A.shape[1]}, got shape {x_pl.shape}')
    if np.linalg.norm(x_pl) > 1.+1e-12:
        raise ValueError(f'x_pl must lie in the unit ball, got norm {np.linalg.norm(x_pl):.6g}')
    if noise_variance < 0:
        raise ValueError(f'noise_variance must be nonnegative, got {noise_variance}')
    n = A.shape[0]
    b = A @ x_pl
    if noise_variance > 0:
        b = b + rng.generator().normal(0., math.sqrt(noise_variance/n), size=n)
    return b


def top_right_singular_vector(A) -> np.ndarray:
    """Default planted vector of the risk experiments."""
    svd = numkit.thin_svd(A)
    if svd.rank==0:
        raise ValueError('A zero matrix has no top singular direction')
    return svd.vt[0]
