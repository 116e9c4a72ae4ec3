"""Uniform cell-centered grids with zero-flux boundaries and the conservative
discrete operators the verification suite relies on.

Boundary handling uses mirror ghost cells (ghost value = adjacent interior
value), which makes every boundary face carry exactly zero flux.  Together
with the flux-form assembly of the diffusion operators this gives, up to
floating-point roundoff, a telescoping identity: the grid sum of any operator
output vanishes, and the operators are symmetric and negative semidefinite
under the midpoint inner product.  The energy and conservation tests depend on
these structural facts, so changes here must preserve them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = [
    "Grid",
    "Field",
    "State",
    "laplacian_neumann",
    "div_k_grad",
    "integrate",
    "mean",
    "gradient_sq_integral",
    "poincare_constant",
    "write_field",
    "read_field",
]


@dataclass(frozen=True)
class Grid:
    """Uniform rectangular mesh, 1D or 2D, cell-centered."""

    n: tuple[int, ...]
    h: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.n) not in (1, 2) or len(self.h) != len(self.n):
            raise ValueError(f"grid must be 1D or 2D with matching h, got n={self.n}, h={self.h}")
        if any(int(k) != k or k < 3 for k in self.n):
            raise ValueError(f"need at least 3 cells per axis, got {self.n}")
        if any(not s > 0 for s in self.h):
            raise ValueError(f"cell widths must be > 0, got {self.h}")
        object.__setattr__(self, "n", tuple(int(k) for k in self.n))
        object.__setattr__(self, "h", tuple(float(s) for s in self.h))

    @classmethod
    def line(cls, n: int, length: float) -> "Grid":
        return cls(n=(n,), h=(length / n,))

    @classmethod
    def box(cls, n: tuple[int, int], lengths: tuple[float, float]) -> "Grid":
        return cls(n=tuple(n), h=(lengths[0] / n[0], lengths[1] / n[1]))

    @property
    def dim(self) -> int:
        return len(self.n)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n

    @property
    def lengths(self) -> tuple[float, ...]:
        return tuple(k * s for k, s in zip(self.n, self.h))

    @property
    def cell_volume(self) -> float:
        return math.prod(self.h)

    @property
    def volume(self) -> float:
        return math.prod(self.lengths)

    def axis_centers(self, axis: int) -> np.ndarray:
        return (np.arange(self.n[axis]) + 0.5) * self.h[axis]

    def centers(self) -> tuple[np.ndarray, ...]:
        """Cell-center coordinate arrays, each of shape ``grid.shape``."""
        axes = [self.axis_centers(a) for a in range(self.dim)]
        if self.dim == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))


@dataclass
class Field:
    """Scalar cell-centered values over a grid."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.values, dtype=float)
        if arr.shape != self.grid.shape:
            raise ValueError(f"values shape {arr.shape} does not match grid shape {self.grid.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("field values must all be finite")
        self.values = arr

    @classmethod
    def full(cls, grid: Grid, value: float) -> "Field":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "Field":
        return cls(grid, np.asarray(fn(*grid.centers()), dtype=float) + np.zeros(grid.shape))

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())

    def min(self) -> float:
        return float(np.min(self.values))

    def max(self) -> float:
        return float(np.max(self.values))


@dataclass
class State:
    """The unknowns (theta, c, phi) at one time instant."""

    t: float
    theta: Field
    c: Field
    phi: Field

    def __post_init__(self) -> None:
        if not (self.theta.grid == self.c.grid == self.phi.grid):
            raise ValueError("theta, c and phi must share one grid")

    @property
    def grid(self) -> Grid:
        return self.theta.grid


# ---------------------------------------------------------------------------
# array kernels (shared by the Field-level operators and the time stepper)

def _laplacian_values(v: np.ndarray, h: tuple[float, ...]) -> np.ndarray:
    if v.ndim == 1:
        p = np.empty(v.size + 2)
        p[1:-1] = v
        p[0] = v[0]        # mirror ghost: zero flux across the boundary face
        p[-1] = v[-1]
        return (p[2:] - 2.0 * v + p[:-2]) / (h[0] * h[0])
    out = np.zeros_like(v)
    for axis in range(2):
        p = np.concatenate(
            [np.take(v, [0], axis=axis), v, np.take(v, [-1], axis=axis)], axis=axis
        )
        lo = [slice(None)] * 2
        hi = [slice(None)] * 2
        lo[axis] = slice(0, -2)
        hi[axis] = slice(2, None)
        out += (p[tuple(hi)] - 2.0 * v + p[tuple(lo)]) / (h[axis] * h[axis])
    return out


def _face_means(k: np.ndarray, axis: int) -> np.ndarray:
    lo = [slice(None)] * k.ndim
    hi = [slice(None)] * k.ndim
    lo[axis] = slice(0, -1)
    hi[axis] = slice(1, None)
    return 0.5 * (k[tuple(lo)] + k[tuple(hi)])


def _div_k_grad_values(k: np.ndarray, v: np.ndarray, h: tuple[float, ...]) -> np.ndarray:
    out = np.zeros_like(v)
    for axis in range(v.ndim):
        flux = _face_means(k, axis) * np.diff(v, axis=axis)
        shape = list(v.shape)
        shape[axis] = 1
        zero = np.zeros(shape)
        plus = np.concatenate([flux, zero], axis=axis)   # boundary faces carry no flux
        minus = np.concatenate([zero, flux], axis=axis)
        out += (plus - minus) / (h[axis] * h[axis])
    return out


def _div_k_grad_diag(k: np.ndarray, h: tuple[float, ...]) -> np.ndarray:
    """Diagonal of -div(k grad), used for preconditioning implicit solves."""
    diag = np.zeros_like(k)
    for axis in range(k.ndim):
        kf = _face_means(k, axis)
        shape = list(k.shape)
        shape[axis] = 1
        zero = np.zeros(shape)
        diag += (np.concatenate([kf, zero], axis=axis) + np.concatenate([zero, kf], axis=axis)) / (h[axis] * h[axis])
    return diag


def _integral_values(v: np.ndarray, cell_volume: float) -> float:
    # fsum gives an exactly rounded, order-independent reduction
    return math.fsum(v.ravel().tolist()) * cell_volume


def _gradient_sq_values(v: np.ndarray, h: tuple[float, ...], cell_volume: float) -> float:
    total = 0.0
    for axis in range(v.ndim):
        d = np.diff(v, axis=axis)
        total += math.fsum((d * d).ravel().tolist()) / (h[axis] * h[axis])
    return total * cell_volume


# ---------------------------------------------------------------------------
# public operators

def laplacian_neumann(f: Field) -> Field:
    """Second-order centered Laplacian with zero-flux boundary faces."""
    return Field(f.grid, _laplacian_values(f.values, f.grid.h))


def div_k_grad(kappa: Field, f: Field) -> Field:
    """Conservative variable-coefficient diffusion div(kappa grad f).

    Face conductivity is the arithmetic mean of the two adjacent cell values;
    kappa must be positive cellwise (H1).
    """
    if kappa.grid != f.grid:
        raise ValueError("kappa and f must share one grid")
    if np.any(kappa.values <= 0):
        raise ValueError(f"kappa must be > 0 cellwise (H1), got minimum {kappa.min()}")
    return Field(f.grid, _div_k_grad_values(kappa.values, f.values, f.grid.h))


def integrate(f: Field) -> float:
    """Midpoint-rule integral: sum of cell values times cell volume."""
    return _integral_values(f.values, f.grid.cell_volume)


def mean(f: Field) -> float:
    return integrate(f) / f.grid.volume


def gradient_sq_integral(f: Field) -> float:
    """Integral of |grad f|^2 in face-difference form.

    Matches the summation-by-parts identity
    ``gradient_sq_integral(f) == -sum_i f_i * laplacian_neumann(f)_i * vol``,
    which is the quadratic form the relative energy uses for its gradient term.
    """
    return _gradient_sq_values(f.values, f.grid.h, f.grid.cell_volume)


def poincare_constant(g: Grid) -> float:
    """(L_max / pi)^2 from the first nonzero zero-flux eigenvalue of the box.

    This is a continuous-domain constant, reported as an ingredient of the
    decay rate rather than a discrete operator property.
    """
    l_max = max(g.lengths)
    return (l_max / math.pi) ** 2


# ---------------------------------------------------------------------------
# snapshot format: '# grid <dim> <n...> <h...>' then one value per line

def write_field(f: Field, path) -> None:
    grid = f.grid
    n_txt = ",".join(str(k) for k in grid.n)
    h_txt = ",".join(repr(s) for s in grid.h)
    lines = [f"# grid {grid.dim} {n_txt} {h_txt}"]
    lines.extend(repr(float(v)) for v in f.values.ravel(order="C"))
    Path(path).write_text("\n".join(lines) + "\n")


def read_field(path) -> Field:
    text = Path(path).read_text().strip().splitlines()
    if not text or not text[0].startswith("# grid"):
        raise ValueError(f"{path}: missing '# grid' header")
    parts = text[0].split()
    if len(parts) != 5:
        raise ValueError(f"{path}: malformed header {text[0]!r}")
    dim = int(parts[2])
    n = tuple(int(x) for x in parts[3].split(","))
    h = tuple(float(x) for x in parts[4].split(","))
    if len(n) != dim or len(h) != dim:
        raise ValueError(f"{path}: header dim {dim} does not match n={n}, h={h}")
    grid = Grid(n=n, h=h)
    values = np.array([float(x) for x in text[1:]])
    if values.size != math.prod(n):
        raise ValueError(f"{path}: expected {math.prod(n)} values, found {values.size}")
    return Field(grid, values.reshape(n))
