"""Ladder operators: coefficient tables, algebra checks, differential stencil.

The tables and the sampled differential operator are built through disjoint
code paths (spectral bookkeeping vs. transcendent coefficients plus grid
quadrature), so their agreement on matrix elements is a real cross-check.
"""

import math

import numpy as np
import pytest

from susyosc.errors import DomainError, InsufficientSupportError
from susyosc.ladder import (
    LadderCoeffs,
    apply_stencil,
    build_operator_stencil,
    commutator_check,
    linearized_coeff,
    natural_down_coeff,
    natural_up_coeff,
    nilpotent_matrix,
    pha_product_check,
    stencil_matrix_element,
    stencil_projection,
)
from susyosc.painleve import g_for_system


@pytest.fixture(scope="module")
def k4_coeffs(k4_spec):
    return LadderCoeffs.from_spec(k4_spec)


@pytest.fixture(scope="module")
def k4_stencil(k4_system):
    # deep display floor keeps the quadrature window wide; see the stencil
    # builder's docstring
    gsol = g_for_system(k4_system, "eps0", phi_rel_floor=1e-8)
    return build_operator_stencil(gsol)


def test_coeff_table_validation():
    with pytest.raises(DomainError):
        LadderCoeffs(gap=2.0, k=0)
    with pytest.raises(DomainError):
        LadderCoeffs(gap=3.0, k=4)     # gap must exceed k - 1
    with pytest.raises(DomainError):
        LadderCoeffs(gap=1.5, k=2).iso_down(-1)


def test_coeff_table_from_spec(k4_coeffs):
    assert k4_coeffs.k == 4
    assert abs(k4_coeffs.gap - 6.3) < 1e-12
    assert abs(k4_coeffs.eps0 - (-5.8)) < 1e-12


def test_iso_down_values(k4_coeffs):
    assert k4_coeffs.iso_down(0) == 0.0
    # sqrt(1 * 7.3 * 3.3)
    assert abs(k4_coeffs.iso_down(1) - 4.90815647672321) < 1e-12
    for n in range(1, 8):
        want = math.sqrt(n * (n + 6.3) * (n + 2.3))
        assert abs(k4_coeffs.iso_down(n) - want) < 1e-12


def test_new_down_values(k4_coeffs):
    assert k4_coeffs.new_down(0) == 0.0
    for j in range(1, 4):
        want = math.sqrt((6.3 - j) * j * (4 - j))
        assert abs(k4_coeffs.new_down(j) - want) < 1e-12
    # j = k is the annihilated step above the top
    assert k4_coeffs.new_down(4) == 0.0


def test_up_is_down_shifted(k4_coeffs):
    for n in range(5):
        assert natural_up_coeff(n, "iso", k4_coeffs) == k4_coeffs.iso_down(n + 1)
    assert natural_up_coeff(3, "new", k4_coeffs) == 0.0   # top of the new ladder
    with pytest.raises(DomainError):
        natural_down_coeff(4, "new", k4_coeffs)
    with pytest.raises(DomainError):
        natural_down_coeff(1, "bogus", k4_coeffs)


def test_product_rule_exact(k4_coeffs, k1_spec):
    """d^2 equals (E - 1/2)(E - eps_0)(E - eps_0 - k) at every position."""
    for params in (k4_coeffs, LadderCoeffs.from_spec(k1_spec)):
        for n in range(7):
            got, want = pha_product_check(params, n, "iso")
            assert abs(got - want) < 1e-9 * max(1.0, abs(want))
        for j in range(params.k):
            got, want = pha_product_check(params, j, "new")
            assert abs(got - want) < 1e-9 * max(1.0, abs(want))


def test_nilpotency_exact_through_order_five():
    """The restricted lowering matrix is strictly superdiagonal, so its k-th
    power vanishes identically while the (k-1)-th does not."""
    for k in range(1, 6):
        params = LadderCoeffs(gap=k + 1.3, k=k)
        m = nilpotent_matrix(params)
        assert np.all(np.tril(m) == 0.0)
        assert np.all(np.linalg.matrix_power(m, k) == 0.0)
        if k > 1:
            assert np.linalg.norm(np.linalg.matrix_power(m, k - 1)) > 0.0


def test_linearized_iso_matches_oscillator(k4_coeffs):
    """On the iso ladder the linearized operators reduce to the textbook
    oscillator pair, coefficients sqrt(n) and sqrt(n+1)."""
    for n in range(6):
        down = linearized_coeff("down", n, "iso", k4_coeffs)
        up = linearized_coeff("up", n, "iso", k4_coeffs)
        assert abs(down.value - math.sqrt(n)) < 1e-15
        assert abs(up.value - math.sqrt(n + 1)) < 1e-15


def test_linearized_new_coefficients(k4_coeffs):
    assert linearized_coeff("down", 0, "new", k4_coeffs).magnitude == 0.0
    assert linearized_coeff("up", 3, "new", k4_coeffs).magnitude == 0.0
    for j in range(1, 4):
        c = linearized_coeff("down", j, "new", k4_coeffs)
        assert c.phase == 1j
        assert abs(c.magnitude - math.sqrt(6.3 - j)) < 1e-14
    with pytest.raises(DomainError):
        linearized_coeff("down", 4, "new", k4_coeffs)
    with pytest.raises(DomainError):
        linearized_coeff("sideways", 1, "iso", k4_coeffs)


def test_commutator_values(k4_coeffs, k1_spec):
    iso, new = commutator_check(k4_coeffs)
    assert np.max(np.abs(iso - 1.0)) < 1e-12
    assert np.allclose(new, [-5.3, 1.0, 1.0, 3.3], atol=1e-12)
    # k = 1: the single state is annihilated both ways
    _, new1 = commutator_check(LadderCoeffs.from_spec(k1_spec))
    assert new1.shape == (1,)
    assert new1[0] == 0.0


def test_stencil_projections_match_table(k4_system, k4_coeffs, k4_stencil):
    """Quadrature matrix elements of the sampled operator against the
    spectral table, both ladders. The stored states fix their own overall
    sign, so magnitudes are compared; the sign is a relative-phase gauge."""
    w = k4_system.weights
    for n in range(1, 6):
        got = stencil_projection(k4_stencil, k4_system.state("iso", n - 1),
                                 k4_system.state("iso", n), w)
        assert abs(abs(got) / k4_coeffs.iso_down(n) - 1.0) < 1e-3
    for j in range(1, 4):
        got = stencil_projection(k4_stencil, k4_system.state("new", j - 1),
                                 k4_system.state("new", j), w)
        assert abs(abs(got) / k4_coeffs.new_down(j) - 1.0) < 1e-3


def test_stencil_up_direction(k4_system, k4_coeffs, k4_stencil):
    w = k4_system.weights
    for n in range(1, 4):
        got = stencil_projection(k4_stencil, k4_system.state("iso", n),
                                 k4_system.state("iso", n - 1), w, direction="up")
        assert abs(abs(got) / k4_coeffs.iso_down(n) - 1.0) < 1e-3


def test_stencil_annihilates_ladder_bottoms(k4_system, k4_stencil):
    """Both kernel states map to numerical noise, measured against the image
    of a state the operator genuinely moves."""
    w = k4_system.weights

    def support_norm(image):
        good = np.isfinite(image)
        return float(np.sqrt(np.sum(w[good] * image[good] ** 2)))

    scale = support_norm(apply_stencil(k4_stencil, k4_system.state("iso", 1)))
    for st in (k4_system.state("iso", 0), k4_system.state("new", 0)):
        assert support_norm(apply_stencil(k4_stencil, st)) / scale < 1e-3
    top = k4_system.state("new", 3)
    assert support_norm(apply_stencil(k4_stencil, top, direction="up")) / scale < 1e-3


def test_stencil_accepts_bare_arrays(k4_system, k4_stencil):
    """A plain sampled state (derivative taken numerically) agrees with the
    GridState route to stencil accuracy."""
    st = k4_system.state("iso", 2)
    via_state = apply_stencil(k4_stencil, st)
    via_array = apply_stencil(k4_stencil, st.values.copy(), energy=st.energy)
    m = np.isfinite(via_state) & np.isfinite(via_array)
    scale = np.max(np.abs(via_state[m]))
    assert np.max(np.abs(via_state[m] - via_array[m])) / scale < 1e-5
    with pytest.raises(DomainError):
        apply_stencil(k4_stencil, st.values)         # bare array needs energy
    with pytest.raises(DomainError):
        apply_stencil(k4_stencil, st, direction="sideways")


def test_matrix_element_vs_projection(k4_system, k4_stencil):
    """For well-contained states the raw quadrature element and the
    normalized projection agree, since the window holds nearly all the bra."""
    w = k4_system.weights
    bra, ket = k4_system.state("iso", 0), k4_system.state("iso", 1)
    raw = stencil_matrix_element(k4_stencil, bra, ket, w)
    proj = stencil_projection(k4_stencil, bra, ket, w)
    assert abs(raw / proj - 1.0) < 1e-6


def test_stencil_requires_contiguous_support(k4_system):
    """The noded ground-image transcendent fragments the support; demanding
    most unmasked points in one run must then be refused."""
    gsol = g_for_system(k4_system, "half")
    with pytest.raises(InsufficientSupportError):
        build_operator_stencil(gsol, min_fraction=0.9)


def test_stencil_needs_roots_for_bare_input(k4_system):
    gsol = g_for_system(k4_system, "eps0")
    with pytest.raises(DomainError):
        build_operator_stencil(gsol.g, x=k4_system.x)
    op = build_operator_stencil(gsol.g, eps_roots=(-5.8, 0.5, -1.8),
                                x=k4_system.x)
    assert abs(op.a - 9.3) < 1e-12
