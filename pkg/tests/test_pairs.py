import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kaonlhv import (
    Basis,
    RegenerationParams,
    Side,
    TwoKaonState,
    admixture_coefficients,
    build_regenerated_pair_mass,
    build_regenerated_pair_strangeness,
    build_singlet,
    change_basis,
    entropy_surface,
    reduced_density_matrix,
    validate_density_matrix,
    von_neumann_entropy,
)

SQRT_HALF = math.sqrt(0.5)


# -- independent oracles (kept deliberately separate from the implementation) --


def oracle_reduced(amps, side):
    """Brute-force 4x4 outer product, then an explicit index-sum partial trace."""
    rho4 = np.outer(amps, np.conj(amps))
    out = np.zeros((2, 2), dtype=complex)
    for i in range(2):
        for k in range(2):
            for j in range(2):
                if side is Side.LEFT:
                    out[i, k] += rho4[2 * i + j, 2 * k + j]
                else:
                    out[i, k] += rho4[2 * j + i, 2 * j + k]
    return out


def oracle_entropy(rho):
    lams = np.linalg.eigvalsh(rho)
    return float(-sum(l * math.log2(l) for l in lams if l > 1e-300))


def oracle_basis_change_matrix(target):
    # re-derived from K_S = (K0 - K0bar)/sqrt(2), K_L = (K0 + K0bar)/sqrt(2)
    single = np.array([[SQRT_HALF, -SQRT_HALF], [SQRT_HALF, SQRT_HALF]])
    if target is Basis.STRANGENESS:
        single = single.T
    return np.kron(single, single)


@st.composite
def random_pair_states(draw):
    parts = [
        draw(st.floats(-1, 1, allow_nan=False)) + 1j * draw(st.floats(-1, 1, allow_nan=False))
        for _ in range(4)
    ]
    amps = np.array(parts, dtype=complex)
    norm = math.sqrt(float(np.sum(np.abs(amps) ** 2)))
    if norm < 1e-3:
        amps = np.array([1, 0, 0, 0], dtype=complex)
        norm = 1.0
    return TwoKaonState(Basis.STRANGENESS, amps / norm)


# -- singlet -------------------------------------------------------------------


def test_singlet_strangeness_amplitudes():
    s = build_singlet()
    expected = np.array([0, SQRT_HALF, -SQRT_HALF, 0])
    sign = 1.0 if abs(s.amps[1] - SQRT_HALF) < 1e-12 else -1.0
    assert np.max(np.abs(s.amps - sign * expected)) <= 1e-12


def test_singlet_is_maximally_entangled():
    s = build_singlet()
    assert von_neumann_entropy(reduced_density_matrix(s, Side.LEFT)) == pytest.approx(1.0, abs=1e-12)


def test_singlet_mass_basis_has_no_symmetric_component():
    m = change_basis(build_singlet(), Basis.MASS)
    assert abs(m.slot("K_S K_S")) <= 1e-12
    assert abs(m.slot("K_L K_L")) <= 1e-12
    assert abs(abs(m.slot("K_S K_L")) - SQRT_HALF) <= 1e-12


# -- admixture coefficients ------------------------------------------------------


def test_no_regeneration_gives_zero_coefficients(constants):
    ll, ss = admixture_coefficients(RegenerationParams(r=0, t_select=5.0), constants)
    assert ll == 0 and ss == 0


def test_zero_flight_time_coefficients(constants):
    r = 0.37
    ll, ss = admixture_coefficients(RegenerationParams(r=r, t_select=0.0), constants)
    assert ll == pytest.approx(-r, rel=1e-12)
    assert ss == pytest.approx(r, rel=1e-12)


def test_partner_coefficient_small_after_flight(constants):
    """At 10 tau_S with |ll| pushed to 1, the K_S K_S partner is < 7e-3 |r|."""
    gamma_gap = 0.5 * (constants.gamma_s_per_taus - constants.gamma_l_per_taus)
    r = math.exp(-gamma_gap * 10.0)
    assert abs(r) < 1.0
    ll, ss = admixture_coefficients(RegenerationParams(r=r, t_select=10.0), constants)
    assert abs(ll) == pytest.approx(1.0, rel=1e-12)
    assert abs(ss) < 7e-3 * r


def test_coefficient_magnitudes_product(constants):
    # |ll| |ss| = |r|^2 regardless of flight time
    params = RegenerationParams(r=0.2 + 0.1j, t_select=7.3)
    ll, ss = admixture_coefficients(params, constants)
    assert abs(ll) * abs(ss) == pytest.approx(abs(params.r) ** 2, rel=1e-12)


def test_regeneration_params_validated():
    with pytest.raises(ValueError):
        RegenerationParams(r=1.0, t_select=1.0)
    with pytest.raises(ValueError):
        RegenerationParams(r=0.1, t_select=-1.0)


# -- pair construction -----------------------------------------------------------


def test_mass_pair_reduces_to_singlet():
    m = build_regenerated_pair_mass(0, 0)
    singlet_mass = change_basis(build_singlet(), Basis.MASS)
    phase = m.amps[1] / singlet_mass.amps[1]
    assert abs(abs(phase) - 1.0) <= 1e-12
    assert np.max(np.abs(m.amps - phase * singlet_mass.amps)) <= 1e-12


def test_mass_pair_at_minus_one():
    m = build_regenerated_pair_mass(-1, 0)
    expected = np.array([0, 1, -1, -1], dtype=complex) / math.sqrt(3)
    assert np.max(np.abs(m.amps - expected)) <= 1e-12


@pytest.mark.parametrize("ll,ss", [(0.3 + 0.4j, -0.1j), (-1, 0), (2, 1), (0, 0)])
def test_mass_pair_normalized(ll, ss):
    m = build_regenerated_pair_mass(ll, ss)
    assert abs(np.sum(np.abs(m.amps) ** 2) - 1.0) <= 1e-12


def test_mass_pair_rejects_non_finite():
    with pytest.raises(ValueError):
        build_regenerated_pair_mass(float("inf"), 0)


def test_strangeness_pair_reduces_to_singlet():
    s = build_regenerated_pair_strangeness(0)
    singlet = build_singlet()
    assert np.max(np.abs(s.amps - singlet.amps)) <= 1e-12


@pytest.mark.parametrize("ll", [0, -1, 2, 0.3 + 0.4j, -1.7j])
def test_strangeness_pair_normalized(ll):
    s = build_regenerated_pair_strangeness(ll)
    assert abs(float(np.sum(np.abs(s.amps) ** 2)) - 1.0) <= 1e-12


def test_strangeness_pair_at_minus_one():
    """Amplitudes (-1, 1, -3, -1)/(2 sqrt(3)) in slot order
    (K0 K0, K0 K0bar, K0bar K0, K0bar K0bar); the opposite CP convention
    tabulates the same state with the two unlike-strangeness signs flipped,
    with every slot modulus identical."""
    s = build_regenerated_pair_strangeness(-1)
    expected = np.array([-1, 1, -3, -1], dtype=complex) / (2 * math.sqrt(3))
    assert np.max(np.abs(s.amps - expected)) <= 1e-12
    opposite_convention = np.array([-1, -1, 3, -1]) / (2 * math.sqrt(3))
    assert np.max(np.abs(np.abs(s.amps) - np.abs(opposite_convention))) <= 1e-12


def test_strangeness_pair_matches_transform_oracle():
    """The closed form must equal the independent 4-amplitude basis change of
    the mass-basis construction with the partner coefficient dropped, up to
    a global phase."""
    for ll in (0.0, -1.0, 0.5 + 0.25j, 2.0, -0.3j):
        direct = build_regenerated_pair_strangeness(ll).amps
        transformed = oracle_basis_change_matrix(Basis.STRANGENESS) @ build_regenerated_pair_mass(ll, 0).amps
        k = int(np.argmax(np.abs(direct)))
        phase = transformed[k] / direct[k]
        assert abs(abs(phase) - 1.0) <= 1e-12
        assert np.max(np.abs(transformed - phase * direct)) <= 1e-12


def test_change_basis_round_trip():
    state = build_regenerated_pair_strangeness(0.7 - 0.2j)
    back = change_basis(change_basis(state, Basis.MASS), Basis.STRANGENESS)
    assert np.max(np.abs(back.amps - state.amps)) <= 1e-12


def test_change_basis_matches_oracle():
    state = build_regenerated_pair_strangeness(1.1 + 0.3j)
    ours = change_basis(state, Basis.MASS).amps
    oracle = oracle_basis_change_matrix(Basis.MASS) @ state.amps
    assert np.max(np.abs(ours - oracle)) <= 1e-12


# -- reduced density matrices ----------------------------------------------------


def test_singlet_reduced_is_maximally_mixed():
    rho = reduced_density_matrix(build_singlet(), Side.LEFT)
    assert np.max(np.abs(rho - np.eye(2) / 2)) <= 1e-12


def test_product_state_reduced_is_projector():
    product = TwoKaonState(Basis.STRANGENESS, np.array([0, 1, 0, 0], dtype=complex))
    rho = reduced_density_matrix(product, Side.LEFT)
    assert np.max(np.abs(rho - np.array([[1, 0], [0, 0]]))) <= 1e-12


def test_reduced_at_minus_one_matches_hand_value_and_oracle():
    """Hand partial trace of our convention's amplitudes gives
    [[1/6, 1/6], [1/6, 5/6]] (off-diagonal sign flips in the opposite CP
    convention; the spectrum is identical either way)."""
    s = build_regenerated_pair_strangeness(-1)
    rho = reduced_density_matrix(s, Side.LEFT)
    hand = np.array([[1 / 6, 1 / 6], [1 / 6, 5 / 6]])
    assert np.max(np.abs(rho - hand)) <= 1e-12
    assert np.max(np.abs(rho - oracle_reduced(s.amps, Side.LEFT))) <= 1e-12
    flipped = np.array([[1 / 6, -1 / 6], [-1 / 6, 5 / 6]])
    assert np.linalg.eigvalsh(rho) == pytest.approx(np.linalg.eigvalsh(flipped), abs=1e-12)


@given(random_pair_states())
@settings(max_examples=150)
def test_reduced_matrices_well_formed(state):
    for side in Side:
        rho = reduced_density_matrix(state, side)
        validate_density_matrix(rho, atol=1e-10)
        oracle = oracle_reduced(state.amps, side)
        assert np.max(np.abs(rho - oracle)) <= 1e-12


# -- entropy ---------------------------------------------------------------------


def test_entropy_of_maximally_mixed():
    assert von_neumann_entropy(np.eye(2) / 2) == 1.0


def test_entropy_of_projector():
    assert von_neumann_entropy(np.array([[1, 0], [0, 0]], dtype=complex)) == 0.0


def test_entropy_at_minus_one_vs_oracle_and_reported_value():
    s = build_regenerated_pair_strangeness(-1)
    rho = reduced_density_matrix(s, Side.LEFT)
    ours = von_neumann_entropy(rho)
    independent = oracle_entropy(rho)
    assert ours == pytest.approx(independent, abs=1e-10)
    # commonly reported value for this state is 0.59; our eigenvalue oracle
    # gives the figure below, inside the [0.50, 0.65] plausibility band
    print(f"entropy at ll=-1: ours={ours:.6f} oracle={independent:.6f} reported=0.59")
    assert 0.50 <= ours <= 0.65


def test_entropy_validates_input():
    with pytest.raises(ValueError):
        von_neumann_entropy(np.array([[0.7, 0.1], [0.3, 0.3]]))  # not Hermitian
    with pytest.raises(ValueError):
        von_neumann_entropy(np.array([[0.9, 0], [0, 0.9]]))  # trace != 1
    with pytest.raises(ValueError):
        von_neumann_entropy(np.array([[1.2, 0], [0, -0.2]]))  # not PSD


@given(random_pair_states())
@settings(max_examples=150)
def test_schmidt_symmetry(state):
    s_left = von_neumann_entropy(reduced_density_matrix(state, Side.LEFT))
    s_right = von_neumann_entropy(reduced_density_matrix(state, Side.RIGHT))
    assert abs(s_left - s_right) <= 1e-10


@given(random_pair_states(), st.floats(0, 2 * math.pi, allow_nan=False))
@settings(max_examples=100)
def test_entropy_global_phase_invariant(state, angle):
    rotated = TwoKaonState(state.basis, state.amps * cmath.exp(1j * angle))
    s0 = von_neumann_entropy(reduced_density_matrix(state, Side.LEFT))
    s1 = von_neumann_entropy(reduced_density_matrix(rotated, Side.LEFT))
    assert abs(s0 - s1) <= 1e-10


def test_footnote_disentangled_endpoints():
    """At zero flight time with r at +-1 the pair factorizes exactly."""
    for r in (1.0, -1.0):
        state = build_regenerated_pair_mass(-r, r)
        entropy = von_neumann_entropy(reduced_density_matrix(state, Side.LEFT))
        assert entropy <= 1e-10


# -- entropy surface ---------------------------------------------------------------


def test_surface_shape_and_order():
    table = entropy_surface((-2, 2), (-2, 2), 2)
    assert table.shape == (4, 3)
    assert table[0][0] == -2 and table[0][1] == -2
    assert table[1][0] == -2 and table[1][1] == 2  # imaginary axis varies fastest


def test_surface_maximal_at_origin():
    table = entropy_surface((-2, 2), (-2, 2), 81)
    at_origin = table[(table[:, 0] == 0) & (table[:, 1] == 0)]
    assert at_origin.shape[0] == 1
    assert at_origin[0, 2] == pytest.approx(1.0, abs=1e-10)


def test_surface_conjugation_symmetry():
    table = entropy_surface((-2, 2), (-1.5, 1.5), 21)
    values = {(round(r, 9), round(i, 9)): s for r, i, s in table}
    for (r, i), s in values.items():
        assert s == pytest.approx(values[(r, -i)], abs=1e-12)


def test_surface_matches_pointwise_construction():
    table = entropy_surface((-1.5, 1.5), (-1.5, 1.5), 7)
    for r, i, s in table:
        state = build_regenerated_pair_strangeness(complex(r, i))
        direct = von_neumann_entropy(reduced_density_matrix(state, Side.LEFT))
        assert s == pytest.approx(direct, abs=1e-12)


def test_surface_rejects_bad_input():
    with pytest.raises(ValueError):
        entropy_surface((-2, 2), (-2, 2), 1)
    with pytest.raises(ValueError):
        entropy_surface((2, -2), (-2, 2), 5)
    with pytest.raises(ValueError):
        entropy_surface((0, float("inf")), (-2, 2), 5)
