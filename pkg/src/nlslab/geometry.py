"""Torus lattices, spectral fields, norms, projections, and the free flow.

Conventions
-----------
The torus has one axis of circumference ``2*pi*lam`` and, in two dimensions, a
second axis of circumference ``2*pi*gamma*lam`` with anisotropy
``gamma in (1/2, 1]``.  A field is stored by its Fourier coefficients

    fhat(k) = integral exp(-i k.x) f(x) dx

on integer mode vectors ``n in [-K, K]^d``; the physical frequency on axis j is
``k_j = n_j / scale_j`` with ``scale = (lam, gamma*lam)``.  Inversion carries
the normalized measure weight

    w = prod_j (2*pi*scale_j)**-1,
    f(x) = w * sum_k fhat(k) exp(i k.x),

which makes Plancherel an identity rather than an estimate:

    ||f||_L2^2 = w * sum_k |fhat(k)|^2.

(The usual torus convention drops the 2*pi factors; we keep them so every norm
below is exact, and document the discrepancy here once.)

Fields are immutable values: coefficient arrays are copied on construction and
marked read-only, and every operation returns a new field.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

TWO_PI = 2.0 * np.pi


def _as_gamma_tuple(gamma) -> tuple[float, ...]:
    if gamma is None:
        return ()
    if np.isscalar(gamma):
        return (float(gamma),)
    return tuple(float(g) for g in gamma)


@dataclass(frozen=True)
class TorusGeometry:
    """Dimension, anisotropy ratios and scale of a rescaled torus."""

    dimension: int
    gamma: tuple[float, ...]
    lam: float

    def __post_init__(self):
        if self.dimension not in (1, 2):
            raise ValueError(f"dimension={self.dimension} must be 1 or 2")
        object.__setattr__(self, "gamma", _as_gamma_tuple(self.gamma))
        if len(self.gamma) != self.dimension - 1:
            raise ValueError(
                f"gamma={self.gamma} must have {self.dimension - 1} entries"
            )
        for i, g in enumerate(self.gamma):
            if not (0.5 < g <= 1.0):
                raise ValueError(f"gamma[{i}]={g} outside (1/2, 1]")
        if not (self.lam >= 1.0):
            raise ValueError(f"lambda={self.lam} must be >= 1")

    @property
    def axis_scales(self) -> tuple[float, ...]:
        """Per-axis period scale; side lengths are 2*pi times these."""
        return (self.lam,) + tuple(g * self.lam for g in self.gamma)

    @property
    def side_lengths(self) -> tuple[float, ...]:
        return tuple(TWO_PI * s for s in self.axis_scales)

    @property
    def volume(self) -> float:
        return float(np.prod(self.side_lengths))

    @property
    def measure_weight(self) -> float:
        """Weight w with ||f||_L2^2 = w * sum |fhat|^2, i.e. 1/volume."""
        return 1.0 / self.volume

    @property
    def nonlinearity_degree(self) -> int:
        """Power 1 + 4/d of the mass-critical nonlinearity |u|^(4/d) u."""
        return 1 + 4 // self.dimension

    def rescaled(self, lam: float) -> "TorusGeometry":
        return TorusGeometry(self.dimension, self.gamma, lam)


def build_geometry(d: int, gamma=(), lam: float = 1.0) -> TorusGeometry:
    return TorusGeometry(d, gamma, lam)


def _cutoff_tuple(cutoff, d: int) -> tuple[int, ...]:
    if np.isscalar(cutoff):
        return (int(cutoff),) * d
    t = tuple(int(c) for c in cutoff)
    if len(t) != d:
        raise ValueError(f"cutoff={cutoff} must have {d} entries")
    return t


@dataclass(frozen=True)
class SpectralField:
    """Complex Fourier coefficients on a truncated mode lattice.

    ``coeffs[i0]`` (1d) or ``coeffs[i0, i1]`` (2d) stores fhat at mode
    ``n_j = i_j - K_j``; no Hermitian symmetry is imposed.
    """

    geometry: TorusGeometry
    cutoff: tuple[int, ...]
    coeffs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "cutoff", _cutoff_tuple(self.cutoff, self.geometry.dimension))
        expected = tuple(2 * k + 1 for k in self.cutoff)
        arr = np.array(self.coeffs, dtype=np.complex128)
        if arr.shape != expected:
            raise ValueError(f"coeffs shape {arr.shape} != {expected} for cutoff {self.cutoff}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    # -- lattice helpers ---------------------------------------------------

    def mode_range(self, axis: int) -> np.ndarray:
        k = self.cutoff[axis]
        return np.arange(-k, k + 1)

    def freq_axis(self, axis: int) -> np.ndarray:
        return self.mode_range(axis) / self.geometry.axis_scales[axis]

    def freq_grids(self) -> tuple[np.ndarray, ...]:
        axes = [self.freq_axis(a) for a in range(self.geometry.dimension)]
        return tuple(np.meshgrid(*axes, indexing="ij")) if len(axes) > 1 else (axes[0],)

    def kabs(self) -> np.ndarray:
        grids = self.freq_grids()
        return np.sqrt(sum(g * g for g in grids))

    def with_coeffs(self, coeffs: np.ndarray) -> "SpectralField":
        return SpectralField(self.geometry, self.cutoff, coeffs)

    # -- algebra -----------------------------------------------------------

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return self.with_coeffs(self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        self._check_compatible(other)
        return self.with_coeffs(self.coeffs - other.coeffs)

    def __mul__(self, scalar: complex) -> "SpectralField":
        return self.with_coeffs(self.coeffs * scalar)

    __rmul__ = __mul__

    def _check_compatible(self, other: "SpectralField"):
        if self.geometry != other.geometry or self.cutoff != other.cutoff:
            raise ValueError("fields live on different lattices")


def zero_field(geometry: TorusGeometry, cutoff) -> SpectralField:
    shape = tuple(2 * k + 1 for k in _cutoff_tuple(cutoff, geometry.dimension))
    return SpectralField(geometry, cutoff, np.zeros(shape, dtype=np.complex128))


def field_from_modes(geometry: TorusGeometry, cutoff, modes: dict) -> SpectralField:
    """Build a field from {mode index (int or tuple): fhat amplitude}."""
    f = zero_field(geometry, cutoff)
    arr = np.array(f.coeffs)
    for n, amp in modes.items():
        idx = (n,) if np.isscalar(n) else tuple(n)
        if len(idx) != geometry.dimension:
            raise ValueError(f"mode {n} has wrong dimension")
        pos = tuple(int(i) + k for i, k in zip(idx, f.cutoff))
        for p, k in zip(pos, f.cutoff):
            if not (0 <= p <= 2 * k):
                raise ValueError(f"mode {n} outside cutoff {f.cutoff}")
        arr[pos] = amp
    return f.with_coeffs(arr)


def random_field(geometry: TorusGeometry, cutoff, rng, profile_s: float | None = None,
                 mass: float | None = None) -> SpectralField:
    """Random complex field; with ``profile_s`` decay |fhat| ~ <k>^(-s-d/2-0.01).

    With ``mass`` given the field is normalized so ||u||_L2^2 = mass.
    """
    f = zero_field(geometry, cutoff)
    shape = f.coeffs.shape
    amp = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    if profile_s is not None:
        d = geometry.dimension
        decay = (1.0 + f.kabs() ** 2) ** (-(profile_s + d / 2 + 0.01) / 2.0)
        amp = amp * decay
    f = f.with_coeffs(amp)
    if mass is not None:
        m0 = norm(f, "l2") ** 2
        if m0 > 0:
            f = f * np.sqrt(mass / m0)
    return f


# -- norms -------------------------------------------------------------------


def norm(f: SpectralField, kind: str = "l2", s: float = 0.0) -> float:
    """L2 / Hs / dotHs norm from the coefficients (exact Plancherel)."""
    w = f.geometry.measure_weight
    a2 = np.abs(f.coeffs) ** 2
    if kind == "l2":
        weight = 1.0
    elif kind == "hs":
        weight = (1.0 + f.kabs() ** 2) ** s
    elif kind == "dot_hs":
        weight = f.kabs() ** (2.0 * s)
    else:
        raise ValueError(f"unknown norm kind {kind!r}")
    return float(np.sqrt(w * np.sum(weight * a2)))


def mass(f: SpectralField) -> float:
    return norm(f, "l2") ** 2


# -- physical grid transforms -------------------------------------------------


def grid_sizes(f: SpectralField, oversample: int = 1) -> tuple[int, ...]:
    return tuple((2 * k + 1) * oversample for k in f.cutoff)


def to_physical(f: SpectralField, oversample: int = 1) -> np.ndarray:
    """Evaluate the trigonometric polynomial on a uniform grid.

    Grid on axis j has (2K_j+1)*oversample points at x_m = m*side/M.
    """
    if oversample < 1:
        raise ValueError(f"oversample={oversample} must be >= 1")
    sizes = grid_sizes(f, oversample)
    w = f.geometry.measure_weight
    buf = np.zeros(sizes, dtype=np.complex128)
    slices = tuple(np.arange(-k, k + 1) % m for k, m in zip(f.cutoff, sizes))
    buf[np.ix_(*slices)] = w * f.coeffs
    vals = np.fft.ifftn(buf) * np.prod(sizes)
    return vals


def from_physical(values: np.ndarray, geometry: TorusGeometry, cutoff) -> SpectralField:
    """Recover coefficients from grid samples (grid must resolve the cutoff)."""
    cut = _cutoff_tuple(cutoff, geometry.dimension)
    for m, k in zip(values.shape, cut):
        if m < 2 * k + 1:
            raise ValueError(f"grid size {m} too small for cutoff {k}")
    spec = np.fft.fftn(values) / np.prod(values.shape)
    w = 1.0 / geometry.volume
    slices = tuple(np.arange(-k, k + 1) % m for k, m in zip(cut, values.shape))
    coeffs = spec[np.ix_(*slices)] / w
    return SpectralField(geometry, cut, coeffs)


def grid_points(f: SpectralField, oversample: int = 1) -> tuple[np.ndarray, ...]:
    sizes = grid_sizes(f, oversample)
    return tuple(
        np.arange(m) * (side / m)
        for m, side in zip(sizes, f.geometry.side_lengths)
    )


def pointwise_product(fields: Sequence[SpectralField], conjugate: Sequence[bool],
                      oversample: int | None = None) -> np.ndarray:
    """Grid values of prod_i u_i (or conj u_i); default grid avoids aliasing."""
    if oversample is None:
        p = len(fields)
        oversample = (p + 2) // 2
    vals = None
    for u, c in zip(fields, conjugate):
        v = to_physical(u, oversample)
        v = np.conj(v) if c else v
        vals = v if vals is None else vals * v
    return vals


def integrate_grid(values: np.ndarray, geometry: TorusGeometry) -> complex:
    """Torus integral of grid samples: volume times the mean."""
    return complex(np.mean(values) * geometry.volume)


# -- dyadic shells and projections --------------------------------------------


def sharp_shell_index(kabs) -> np.ndarray:
    """Sharp dyadic level: 1 for |k| < 2, else 2^floor(log2 |k|)."""
    kabs = np.asarray(kabs, dtype=float)
    out = np.ones_like(kabs)
    big = kabs >= 2.0
    out[big] = 2.0 ** np.floor(np.log2(kabs[big]))
    return out


def dyadic_levels(max_abs: float) -> list[int]:
    levels = [1]
    n = 2
    while n <= 2 * max_abs:
        levels.append(n)
        n *= 2
    return levels


def smooth_shell_weight(kabs, level: int) -> np.ndarray:
    """Raised-cosine Littlewood-Paley weight; the levels sum to one exactly."""
    kabs = np.asarray(kabs, dtype=float)
    if level == 1:
        w = np.zeros_like(kabs)
        w[kabs < 1.0] = 1.0
        mid = (kabs >= 1.0) & (kabs < 2.0)
        t = np.log2(kabs[mid])  # in [0, 1)
        w[mid] = np.cos(0.5 * np.pi * t) ** 2
        return w
    w = np.zeros_like(kabs)
    with np.errstate(divide="ignore"):
        t = np.where(kabs > 0, np.log2(np.maximum(kabs, 1e-300) / level), -np.inf)
    rising = (t >= -1.0) & (t < 0.0)
    falling = (t >= 0.0) & (t < 1.0)
    w[rising] = np.sin(0.5 * np.pi * (t[rising] + 1.0)) ** 2
    w[falling] = np.cos(0.5 * np.pi * t[falling]) ** 2
    return w


def lp_project(f: SpectralField, level: int, sharp: bool = True) -> SpectralField:
    if level < 1 or (level & (level - 1)) != 0:
        raise ValueError(f"dyadic level {level} must be a power of two >= 1")
    kabs = f.kabs()
    if sharp:
        mask = sharp_shell_index(kabs) == level
        return f.with_coeffs(np.where(mask, f.coeffs, 0.0))
    return f.with_coeffs(smooth_shell_weight(kabs, level) * f.coeffs)


def project_set(f: SpectralField, mask: np.ndarray) -> SpectralField:
    """Zero all coefficients outside an explicit boolean mode mask."""
    mask = np.asarray(mask, dtype=bool)
    if mask.shape != f.coeffs.shape:
        raise ValueError("mask shape does not match the coefficient lattice")
    return f.with_coeffs(np.where(mask, f.coeffs, 0.0))


def project_interval(f: SpectralField, lo: float, hi: float, axis: int = 0) -> SpectralField:
    """Projection to physical frequencies lo <= k_axis <= hi (1d interval)."""
    grids = f.freq_grids()
    mask = (grids[axis] >= lo) & (grids[axis] <= hi)
    return project_set(f, mask)


def project_ball(f: SpectralField, radius: float) -> SpectralField:
    return project_set(f, f.kabs() <= radius)


# -- free evolution and space-time norms --------------------------------------


def free_evolve(f: SpectralField, t: float) -> SpectralField:
    """Apply the free propagator: each coefficient gains exp(-i t |k|^2)."""
    return f.with_coeffs(np.exp(-1j * t * f.kabs() ** 2) * f.coeffs)


def lp_spacetime_norm(fields: Sequence[SpectralField], p: float, t_end: float,
                      oversample: int | None = None) -> float:
    """(int_0^T int |u|^p dx dt)^(1/p) by trapezoid in time over the samples.

    The samples must be uniform on [0, T]; fewer than 4 samples is an error.
    """
    if len(fields) < 4:
        raise ValueError("need at least 4 time samples")
    if p < 2:
        raise ValueError(f"p={p} must be >= 2")
    if oversample is None:
        oversample = max(3, (int(np.ceil(p)) + 2) // 2)
    geometry = fields[0].geometry
    space = np.array([
        np.mean(np.abs(to_physical(u, oversample)) ** p) * geometry.volume
        for u in fields
    ])
    dt = t_end / (len(fields) - 1)
    total = float(np.trapezoid(space, dx=dt))
    return total ** (1.0 / p)


def bilinear_l2_spacetime(us: Sequence[SpectralField], vs: Sequence[SpectralField],
                          t_end: float, oversample: int = 2) -> float:
    """||u v||_{L2([0,T] x torus)} from paired uniform time samples."""
    if len(us) != len(vs) or len(us) < 4:
        raise ValueError("need paired sample lists with at least 4 samples")
    geometry = us[0].geometry
    space = np.array([
        np.mean(np.abs(to_physical(u, oversample) * to_physical(v, oversample)) ** 2)
        * geometry.volume
        for u, v in zip(us, vs)
    ])
    dt = t_end / (len(us) - 1)
    return float(np.sqrt(np.trapezoid(space, dx=dt)))


# -- serialization -------------------------------------------------------------

_MAGIC = b"NLSLABF1"


def save_field(path, f: SpectralField, dtype: str = "complex128") -> None:
    """Little-endian complex array prefixed by a JSON header line."""
    if dtype not in ("complex64", "complex128"):
        raise ValueError(f"dtype {dtype} not supported")
    header = {
        "dimension": f.geometry.dimension,
        "gamma": list(f.geometry.gamma),
        "lambda": f.geometry.lam,
        "cutoff": list(f.cutoff),
        "dtype": dtype,
        "layout": "C-order, mode n stored at index n+K per axis",
    }
    le = "<c8" if dtype == "complex64" else "<c16"
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(np.ascontiguousarray(f.coeffs.astype(le)).tobytes())


def load_field(path) -> SpectralField:
    with open(path, "rb") as fh:
        magic = fh.read(len(_MAGIC))
        if magic != _MAGIC:
            raise ValueError("not a nlslab field file")
        header = json.loads(fh.readline().decode())
        geometry = TorusGeometry(header["dimension"], tuple(header["gamma"]), header["lambda"])
        cutoff = tuple(header["cutoff"])
        le = "<c8" if header["dtype"] == "complex64" else "<c16"
        shape = tuple(2 * k + 1 for k in cutoff)
        data = np.frombuffer(fh.read(), dtype=le).reshape(shape).astype(np.complex128)
    return SpectralField(geometry, cutoff, data)
