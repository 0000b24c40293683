"""Ladder operators of the partner systems, in two interchangeable forms.

The coefficient tables express the third-order operators l^- / l^+ and their
linearized companions through their action on the eigenbasis: l^- steps down
each ladder with a coefficient fixed by the product rule

    l^+ l^- = (H - 1/2)(H - eps_0)(H - eps_0 - k),

which annihilates both ladder bottoms. The differential realization rebuilds
l^+ = L_a^+ L_b^+ from a sampled Painleve IV solution g(x),

    L_a^+ = (-d/dx + f)/sqrt(2),  L_b^+ = (d^2/dx^2 + g d/dx + h)/2,
    f = g + x,  h = g'/2 - g^2/2 - 2xg - x^2 + a,

with l^- the formal adjoint composition. Applying a stencil to an
eigenfunction never takes more than one numerical derivative of the state:
phi'' and phi''' reduce through the eigenvalue equation, and phi' is stored
analytically on GridState anyway. The two routes are deliberately
independent so quadrature matrix elements of the stencil can be checked
against the tables.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConstructionError, DomainError, InsufficientSupportError
from .gridops import deriv1, largest_run
from .painleve import Assignment, GSolution
from .susy import GridState

_SQRT2 = math.sqrt(2.0)


# ----------------------------------------------------------------------
# Coefficient tables
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LadderCoeffs:
    """Action coefficients of the third-order ladder on the eigenbasis.

    gap is E_0 - eps_0, the distance from the old ground energy down to the
    bottom of the new ladder; the spectrum is E_n = n + 1/2 on the iso ladder
    and eps_j = eps_0 + j, j = 0..k-1, on the new one. gap > k - 1 always
    holds for a valid system, which keeps every radicand below non-negative.
    """
    gap: float
    k: int

    def __post_init__(self):
        if self.k < 1:
            raise DomainError("k must be >= 1, got %r" % (self.k,))
        if not self.gap > self.k - 1:
            raise DomainError(
                "gap must exceed k-1 = %d, got %g" % (self.k - 1, self.gap))

    @classmethod
    def from_spec(cls, spec) -> "LadderCoeffs":
        return cls(gap=spec.e_gap, k=spec.k)

    @property
    def eps0(self) -> float:
        return 0.5 - self.gap

    def iso_down(self, n: int) -> float:
        """d_n with l^- |n> = d_n |n-1>; d_0 = 0."""
        if n < 0 or n != int(n):
            raise DomainError("iso level must be a non-negative integer")
        n = int(n)
        radicand = n * (n + self.gap) * (n + self.gap - self.k)
        return _checked_sqrt(radicand, "iso", n)

    def new_down(self, j: int) -> float:
        """e_j with l^- |eps_j> = e_j |eps_{j-1}>; e_0 = 0.

        The raw product (eps_j - E_0)(eps_j - eps_0)(eps_j - eps_0 - k) has
        two negative factors, so it is computed in the manifestly
        non-negative arrangement (gap - j) j (k - j).
        """
        if j < 0 or j > self.k or j != int(j):
            raise DomainError("new level must be an integer in 0..k")
        j = int(j)
        radicand = (self.gap - j) * j * (self.k - j)
        return _checked_sqrt(radicand, "new", j)


def _checked_sqrt(radicand: float, subspace: str, level: int) -> float:
    if radicand < 0.0:
        # unreachable for a valid system; a negative radicand means the
        # parameters escaped the gap > k-1 constraint some other way
        raise ConstructionError(
            "negative ladder radicand %g at %s level %d" % (radicand, subspace, level))
    return math.sqrt(radicand)


def natural_down_coeff(level: int, subspace: str, params: LadderCoeffs) -> float:
    """Coefficient of l^- at the given ladder position."""
    if subspace == "iso":
        return params.iso_down(level)
    if subspace == "new":
        if level >= params.k:
            raise DomainError("new level out of range 0..k-1")
        return params.new_down(level)
    raise DomainError("subspace must be 'iso' or 'new', got %r" % (subspace,))


def natural_up_coeff(level: int, subspace: str, params: LadderCoeffs) -> float:
    """Coefficient of l^+, the down coefficient one step above.

    On the new ladder the top state is annihilated: the j = k-1 coefficient
    is new_down(k) = 0 by the (k - j) factor.
    """
    if subspace == "iso":
        return params.iso_down(level + 1)
    if subspace == "new":
        if level >= params.k:
            raise DomainError("new level out of range 0..k-1")
        return params.new_down(level + 1)
    raise DomainError("subspace must be 'iso' or 'new', got %r" % (subspace,))


def pha_product_check(params: LadderCoeffs, level: int, subspace: str = "iso"):
    """(computed, expected) for the product rule at one ladder position.

    computed is the square of the down coefficient; expected evaluates
    (E - 1/2)(E - eps_0)(E - eps_0 - k) at the level's energy. The two are
    the same polynomial arranged differently, so they must agree to rounding.
    """
    d = natural_down_coeff(level, subspace, params)
    eps0 = params.eps0
    energy = level + 0.5 if subspace == "iso" else eps0 + level
    expected = (energy - 0.5) * (energy - eps0) * (energy - eps0 - params.k)
    return d * d, expected


def nilpotent_matrix(params: LadderCoeffs) -> np.ndarray:
    """Matrix of l^- restricted to the new subspace, in the |eps_j> basis.

    Strictly superdiagonal, so its k-th power vanishes identically; the only
    eigenvalue is zero, which is the obstruction to annihilation-operator
    coherent states living in this subspace.
    """
    k = params.k
    m = np.zeros((k, k))
    for j in range(1, k):
        m[j - 1, j] = params.new_down(j)
    return m


# ----------------------------------------------------------------------
# Linearized ladder
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class LinearizedCoeff:
    """Magnitude and phase tag of a linearized ladder coefficient.

    The new-subspace radicands eps_j - E_0 are negative, so those steps
    carry phase i; probabilities and energies never see it, and the i^j in
    the displaced-state coefficients is exactly this phase accumulating.
    """
    magnitude: float
    phase: complex = 1.0

    @property
    def value(self) -> complex:
        return self.magnitude * self.phase


def linearized_coeff(direction: str, level: int, subspace: str,
                     params: LadderCoeffs) -> LinearizedCoeff:
    """Action coefficient of ell^- / ell^+ at one ladder position.

    iso: ell^- |n> = sqrt(n) |n-1>, ell^+ |n> = sqrt(n+1) |n+1>.
    new: ell^- |eps_j> = sqrt(eps_j - E_0) |eps_{j-1}> for j >= 1 and
    ell^+ |eps_j> = sqrt(eps_{j+1} - E_0) |eps_{j+1}> for j <= k-2, with the
    boundary states annihilated.
    """
    if direction not in ("up", "down"):
        raise DomainError("direction must be 'up' or 'down'")
    if level < 0 or level != int(level):
        raise DomainError("level must be a non-negative integer")
    level = int(level)
    if subspace == "iso":
        mag = math.sqrt(level) if direction == "down" else math.sqrt(level + 1)
        return LinearizedCoeff(magnitude=mag)
    if subspace != "new":
        raise DomainError("subspace must be 'iso' or 'new', got %r" % (subspace,))
    if level >= params.k:
        raise DomainError("new level out of range 0..k-1")
    if direction == "down":
        if level == 0:
            return LinearizedCoeff(magnitude=0.0)
        return LinearizedCoeff(magnitude=math.sqrt(params.gap - level), phase=1j)
    if level == params.k - 1:
        return LinearizedCoeff(magnitude=0.0)
    return LinearizedCoeff(magnitude=math.sqrt(params.gap - level - 1), phase=1j)


def commutator_check(params: LadderCoeffs, n_max: int = 8):
    """[ell^-, ell^+] on each basis vector, from the coefficient products.

    Returns (iso_values, new_values). On the iso ladder every value is 1;
    on the new ladder the bottom and top states break the Heisenberg-Weyl
    algebra, giving eps_0 + 1 - E_0 and E_0 + 1 - eps_0 - k respectively,
    with 1 in between.
    """
    iso = np.empty(n_max + 1)
    for n in range(n_max + 1):
        up_then_down = (linearized_coeff("up", n, "iso", params).value
                        * linearized_coeff("down", n + 1, "iso", params).value)
        down_then_up = 0.0
        if n > 0:
            down_then_up = (linearized_coeff("down", n, "iso", params).value
                            * linearized_coeff("up", n - 1, "iso", params).value)
        iso[n] = (up_then_down - down_then_up).real
    new = np.empty(params.k)
    for j in range(params.k):
        up_then_down = 0.0
        if j < params.k - 1:
            up_then_down = (linearized_coeff("up", j, "new", params).value
                            * linearized_coeff("down", j + 1, "new", params).value)
        down_then_up = 0.0
        if j > 0:
            down_then_up = (linearized_coeff("down", j, "new", params).value
                            * linearized_coeff("up", j - 1, "new", params).value)
        new[j] = complex(up_then_down - down_then_up).real
    return iso, new


# ----------------------------------------------------------------------
# Differential realization
# ----------------------------------------------------------------------

@dataclass
class OperatorStencil:
    """Sampled coefficients of l^+ = L_a^+ L_b^+ and its adjoint on a window.

    Arrays live on x[sl], the largest contiguous unmasked run of the g
    solution (shrunk so every stored coefficient, including the stencil
    derivatives g' and V', is finite). v is the potential rebuilt from g,
    which makes applying the operator independent of the Wronskian route.
    """
    x: np.ndarray
    sl: slice
    g: np.ndarray
    dg: np.ndarray
    f: np.ndarray
    h: np.ndarray
    v: np.ndarray
    dv: np.ndarray
    a: float
    e1: float

    @property
    def h_step(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def xs(self) -> np.ndarray:
        return self.x[self.sl]


def _roots_triplet(eps_roots):
    if isinstance(eps_roots, Assignment):
        return eps_roots.e1, eps_roots.e2, eps_roots.e3
    roots = tuple(float(e) for e in eps_roots)
    if len(roots) != 3:
        raise DomainError("eps_roots must be three factorization energies")
    return roots


def build_operator_stencil(g, eps_roots=None, x=None, valid=None,
                           min_fraction: float = 0.5) -> OperatorStencil:
    """Sample the third-order operator coefficients from a g solution.

    g may be a GSolution (grid, mask and assignment come along) or a bare
    array with x, valid and eps_roots supplied. The support is the largest
    contiguous unmasked run; if it holds less than min_fraction of the
    unmasked points the sample is too fragmented to represent the operator.

    Two practical notes. A nodeless extremal state (the eps0 assignment)
    gives a pole-free g and hence one support run covering the whole window;
    the e1 = 1/2 state has k nodes and splits the line. And for quadrature
    work it pays to extract g with a deeper phi_rel_floor (1e-8 or so):
    the states are built in extended precision, the transcendent stays
    clean well below the default display floor, and the wider window keeps
    state tails inside the integrals.
    """
    if isinstance(g, GSolution):
        if x is None:
            x = g.x
        if valid is None:
            valid = g.valid
        if eps_roots is None and g.assignment is not None:
            eps_roots = g.assignment
        g = g.g
    if eps_roots is None:
        raise DomainError("eps_roots required when g carries no assignment")
    e1, e2, e3 = _roots_triplet(eps_roots)
    a = e2 + e3 - 2.0 * e1 - 1.0
    g = np.asarray(g, dtype=float)
    if x is None:
        raise DomainError("grid required for a bare g array")
    x = np.asarray(x, dtype=float)
    if valid is None:
        valid = np.isfinite(g)
    lo, hi = largest_run(valid)
    n_valid = int(np.count_nonzero(valid))
    if n_valid == 0 or (hi - lo) < min_fraction * n_valid:
        raise InsufficientSupportError(
            "largest contiguous g run holds %d of %d unmasked points"
            % (hi - lo, n_valid))
    h_step = float(x[1] - x[0])
    gs = g[lo:hi]
    dg = deriv1(gs, h_step)
    # deriv1 cannot reach the outermost two points; shrink so everything
    # stored is finite, then once more for the V' stencil below
    lo2, hi2 = lo + 2, hi - 2
    gs = g[lo2:hi2]
    dg = dg[2:-2]
    xs = x[lo2:hi2]
    f = gs + xs
    hcoef = 0.5 * dg - 0.5 * gs * gs - 2.0 * xs * gs - xs * xs + a
    v = 0.5 * xs * xs - 0.5 * dg + 0.5 * gs * gs + xs * gs + e1 - 0.5
    dv = deriv1(v, h_step)
    sl = slice(lo2 + 2, hi2 - 2)
    trim = slice(2, -2)
    st = OperatorStencil(x=x, sl=sl, g=gs[trim], dg=dg[trim], f=f[trim],
                         h=hcoef[trim], v=v[trim], dv=dv[trim], a=a, e1=e1)
    if hi2 - 2 - (lo2 + 2) < 12:
        raise InsufficientSupportError("g support too narrow for the stencil")
    for name, arr in (("g", st.g), ("g'", st.dg), ("f", st.f), ("h", st.h),
                      ("V", st.v), ("V'", st.dv)):
        if not np.all(np.isfinite(arr)):
            raise ConstructionError("non-finite %s coefficient on the support" % name)
    return st


def _pair_derivative(op: OperatorStencil, pair, energy: float):
    """d/dx on the (c0, c1) representation c0 phi + c1 phi'.

    phi'' reduces through the eigenvalue equation to 2 (V - E) phi, so the
    derivative only ever differentiates the smooth coefficient arrays; the
    two edge points a stencil cannot reach turn NaN and stay NaN.
    """
    c0, c1 = pair
    h_step = op.h_step
    return (deriv1(c0, h_step) + 2.0 * c1 * (op.v - energy),
            c0 + deriv1(c1, h_step))


def apply_stencil(op: OperatorStencil, state, energy=None, direction: str = "down"):
    """Image of an eigenfunction under the stencil operator, on the full grid.

    state is a GridState (its analytic derivative is used) or a plain array
    sampled on op.x (its derivative is then taken numerically). energy
    defaults to the GridState energy. Points the composed stencils cannot
    reach are NaN; the image is exactly linear in the state.
    """
    if direction not in ("up", "down"):
        raise DomainError("direction must be 'up' or 'down'")
    if isinstance(state, GridState):
        phi_full = state.values
        dphi_full = state.derivs
        if energy is None:
            energy = state.energy
    else:
        phi_full = np.asarray(state, dtype=float)
        if phi_full.shape != op.x.shape:
            raise DomainError("state must be sampled on the stencil grid")
        dphi_full = deriv1(phi_full, op.h_step)
        if energy is None:
            raise DomainError("energy required for a bare state array")
    energy = float(energy)
    ones = np.ones(op.xs.size)
    zeros = np.zeros(op.xs.size)
    base = (ones, zeros)
    if direction == "down":
        # L_a^- = (d/dx + f)/sqrt(2), then L_b^- = (d^2 - g d + (h - g'))/2
        c = (op.f / _SQRT2, ones / _SQRT2)
        dc = _pair_derivative(op, c, energy)
        ddc = _pair_derivative(op, dc, energy)
        out0 = 0.5 * (ddc[0] - op.g * dc[0] + (op.h - op.dg) * c[0])
        out1 = 0.5 * (ddc[1] - op.g * dc[1] + (op.h - op.dg) * c[1])
    else:
        # L_b^+ = (d^2 + g d + h)/2, then L_a^+ = (-d/dx + f)/sqrt(2)
        dbase = _pair_derivative(op, base, energy)
        ddbase = _pair_derivative(op, dbase, energy)
        mid0 = 0.5 * (ddbase[0] + op.g * dbase[0] + op.h * base[0])
        mid1 = 0.5 * (ddbase[1] + op.g * dbase[1] + op.h * base[1])
        dmid = _pair_derivative(op, (mid0, mid1), energy)
        out0 = (op.f * mid0 - dmid[0]) / _SQRT2
        out1 = (op.f * mid1 - dmid[1]) / _SQRT2
    image = np.full(op.x.size, np.nan)
    image[op.sl] = out0 * phi_full[op.sl] + out1 * dphi_full[op.sl]
    return image


def _support_slice(image: np.ndarray, band: int) -> slice:
    finite = np.isfinite(image)
    if not np.any(finite):
        raise InsufficientSupportError("stencil image has no finite points")
    lo, hi = largest_run(finite)
    lo += band
    hi -= band
    if hi - lo < 3:
        raise InsufficientSupportError("stencil support too narrow after edge bands")
    return slice(lo, hi)


def stencil_matrix_element(op: OperatorStencil, bra, ket, weights,
                           energy=None, direction: str = "down",
                           band: int = 5) -> float:
    """<bra | l ket> by quadrature over the stencil support.

    The composed stencil erodes a few points at each support edge and the
    residual error concentrates there, so an extra band is excluded beyond
    the NaN region before integrating. The integral runs over the support
    window only; states with appreciable mass outside it lose that mass, so
    for coefficient comparisons prefer stencil_projection, which divides by
    the bra norm over the same window and cancels the truncation.
    """
    image = apply_stencil(op, ket, energy=energy, direction=direction)
    bv = bra.values if isinstance(bra, GridState) else np.asarray(bra, dtype=float)
    sl = _support_slice(image, band)
    return float(np.sum(weights[sl] * bv[sl] * image[sl]))


def stencil_projection(op: OperatorStencil, bra, ket, weights,
                       energy=None, direction: str = "down",
                       band: int = 5) -> float:
    """Projection coefficient <bra | l ket>_W / <bra | bra>_W.

    Numerator and denominator share the support window W, so if the image is
    proportional to bra pointwise the result is the proportionality constant
    independent of how much of either state the window cuts off.
    """
    image = apply_stencil(op, ket, energy=energy, direction=direction)
    bv = bra.values if isinstance(bra, GridState) else np.asarray(bra, dtype=float)
    sl = _support_slice(image, band)
    den = float(np.sum(weights[sl] * bv[sl] * bv[sl]))
    if den == 0.0:
        raise DomainError("bra state vanishes on the stencil support")
    return float(np.sum(weights[sl] * bv[sl] * image[sl])) / den
