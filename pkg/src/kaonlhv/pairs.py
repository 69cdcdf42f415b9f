"""Entangled two-kaon states, reduced density matrices, and entanglement
entropy.

States are four complex amplitudes over a product basis, in a fixed,
documented slot order (left kaon index varies slowest):

    strangeness basis   (K0 K0,  K0 K0bar,  K0bar K0,  K0bar K0bar)
    mass basis          (K_S K_S,  K_S K_L,  K_L K_S,  K_L K_L)

Two constructions are provided besides the singlet.  A regenerator slab (or a
p-wave production admixture) turns the singlet into

    (|K_S K_L> - |K_L K_S> + ll |K_L K_L> + ss |K_S K_S>) / sqrt(2+|ll|^2+|ss|^2)

where ``ll`` is the K_L K_L admixture coefficient and ``ss = -r^2/ll`` its
K_S K_S partner (``r`` is the regeneration strength).  After free flight the
K_S K_S partner is negligible (|ss| < 7e-3 |r| at 10 tau_S), and rewriting
the surviving state over strangeness kets gives

    (ll |K0 K0> + (2+ll) |K0 K0bar> - (2-ll) |K0bar K0> + ll |K0bar K0bar>)
        / (2 sqrt(2+|ll|^2))

under this package's K_S = (K0 - K0bar)/sqrt(2) convention.  Tabulations
using the opposite CP phase convention flip the sign of the two
unlike-strangeness amplitudes; every probability and entropy is invariant
under that rephasing.

Entanglement of a pure pair state is quantified by the von Neumann entropy
S(rho) = -Tr[rho log2 rho] of either one-sided reduced density matrix:
S = 1 for the singlet (ll = 0), S -> 0 as the state factorizes.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .constants import PhysicalConstants
from .states import Basis

__all__ = [
    "Side",
    "RegenerationParams",
    "TwoKaonState",
    "SLOT_LABELS",
    "build_singlet",
    "admixture_coefficients",
    "build_regenerated_pair_mass",
    "build_regenerated_pair_strangeness",
    "change_basis",
    "reduced_density_matrix",
    "validate_density_matrix",
    "von_neumann_entropy",
    "entropy_surface",
]

SLOT_LABELS = {
    Basis.STRANGENESS: ("K0 K0", "K0 K0bar", "K0bar K0", "K0bar K0bar"),
    Basis.MASS: ("K_S K_S", "K_S K_L", "K_L K_S", "K_L K_L"),
}

_SQRT_HALF = math.sqrt(0.5)
# single-side amplitude rewrite, strangeness -> mass (orthogonal, self-inverse
# composition handled via transpose)
_STR_TO_MASS = np.array([[_SQRT_HALF, -_SQRT_HALF], [_SQRT_HALF, _SQRT_HALF]])


class Side(enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class RegenerationParams:
    """Regeneration strength ``r`` and post-selection time (tau_S units)."""

    r: complex
    t_select: float

    def __post_init__(self):
        if not abs(complex(self.r)) < 1.0:
            raise ValueError(f"|r| must be < 1, got {abs(self.r)!r}")
        if self.t_select < 0:
            raise ValueError(f"t_select must be non-negative, got {self.t_select!r}")


@dataclass(frozen=True, eq=False)
class TwoKaonState:
    """Normalized four-amplitude pair state over ``basis`` in the documented
    slot order.  ``ll_coeff``/``ss_coeff`` record construction provenance."""

    basis: Basis
    amps: np.ndarray
    ll_coeff: complex | None = None
    ss_coeff: complex | None = None

    def __post_init__(self):
        amps = np.asarray(self.amps, dtype=complex)
        if amps.shape != (4,):
            raise ValueError(f"amps must have shape (4,), got {amps.shape}")
        if not np.all(np.isfinite(amps.view(float))):
            raise ValueError("amps must be finite")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"amps must be normalized, got |psi|^2 = {norm!r}")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    def slot(self, label: str) -> complex:
        return complex(self.amps[SLOT_LABELS[self.basis].index(label)])


def build_singlet() -> TwoKaonState:
    """The antisymmetric pair (|K0 K0bar> - |K0bar K0>)/sqrt(2).

    In the mass basis this is the same antisymmetric combination of K_S/K_L
    up to a global phase, with no K_S K_S or K_L K_L component.
    """
    return TwoKaonState(
        Basis.STRANGENESS,
        np.array([0.0, _SQRT_HALF, -_SQRT_HALF, 0.0], dtype=complex),
        ll_coeff=0j,
        ss_coeff=0j,
    )


def admixture_coefficients(
    params: RegenerationParams, c: PhysicalConstants
) -> tuple[complex, complex]:
    """Symmetric-component coefficients after free flight to ``t_select``.

    The K_L K_L admixture grows relative to the antisymmetric part because
    the K_S amplitudes die faster:

        ll = -r * exp[(-i delta_m + (Gamma_S - Gamma_L)/2) * T]
        ss = -r^2 / ll

    so |ss| = |r| exp[-(Gamma_S - Gamma_L) T / 2] shrinks by the same factor
    |ll| gains.  For r = 0 both coefficients are 0.
    """
    r = complex(params.r)
    if r == 0:
        return 0j, 0j
    t = params.t_select
    gamma_gap = 0.5 * (c.gamma_s_per_taus - c.gamma_l_per_taus)
    ll = -r * np.exp((-1j * c.delta_m_per_taus + gamma_gap) * t)
    ss = -r * r / ll
    return complex(ll), complex(ss)


def build_regenerated_pair_mass(ll: complex, ss: complex) -> TwoKaonState:
    """Mass-basis pair state with symmetric admixtures ``ll`` and ``ss``."""
    ll = complex(ll)
    ss = complex(ss)
    if not (np.isfinite([ll.real, ll.imag, ss.real, ss.imag]).all()):
        raise ValueError("admixture coefficients must be finite")
    amps = np.array([ss, 1.0, -1.0, ll], dtype=complex)
    amps /= math.sqrt(2.0 + abs(ll) ** 2 + abs(ss) ** 2)
    return TwoKaonState(Basis.MASS, amps, ll_coeff=ll, ss_coeff=ss)


def build_regenerated_pair_strangeness(ll: complex) -> TwoKaonState:
    """Strangeness-basis pair state after dropping the K_S K_S admixture.

    Closed form of the basis change of :func:`build_regenerated_pair_mass`
    with ``ss = 0``:

        (ll, 2+ll, -(2-ll), ll) / (2 sqrt(2+|ll|^2))

    in slot order (K0 K0, K0 K0bar, K0bar K0, K0bar K0bar).  ``ll = 0``
    reduces to the singlet.
    """
    ll = complex(ll)
    if not (np.isfinite(ll.real) and np.isfinite(ll.imag)):
        raise ValueError("admixture coefficient must be finite")
    amps = np.array([ll, 2.0 + ll, ll - 2.0, ll], dtype=complex)
    amps /= 2.0 * math.sqrt(2.0 + abs(ll) ** 2)
    return TwoKaonState(Basis.STRANGENESS, amps, ll_coeff=ll, ss_coeff=0j)


def change_basis(state: TwoKaonState, target: Basis) -> TwoKaonState:
    """Rewrite the pair state over the other product basis."""
    if state.basis is target:
        return state
    single = _STR_TO_MASS if target is Basis.MASS else _STR_TO_MASS.T
    amps = np.kron(single, single) @ state.amps
    return TwoKaonState(target, amps, ll_coeff=state.ll_coeff, ss_coeff=state.ss_coeff)


def reduced_density_matrix(state: TwoKaonState, side: Side) -> np.ndarray:
    """Partial trace over the other side; 2x2 Hermitian, unit trace, PSD."""
    psi = state.amps.reshape(2, 2)
    if side is Side.LEFT:
        rho = psi @ psi.conj().T
    else:
        rho = psi.T @ psi.conj()
    return rho


def validate_density_matrix(rho: np.ndarray, atol: float = 1e-12) -> np.ndarray:
    """Check the 2x2 density-matrix invariants, returning the array."""
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError(f"density matrix must be 2x2, got shape {rho.shape}")
    if abs(rho[0, 1] - np.conj(rho[1, 0])) > atol:
        raise ValueError("density matrix must be Hermitian")
    trace = rho[0, 0].real + rho[1, 1].real
    if abs(trace - 1.0) > atol or abs(rho[0, 0].imag) > atol or abs(rho[1, 1].imag) > atol:
        raise ValueError(f"density matrix must have unit trace, got {trace!r}")
    det = (rho[0, 0] * rho[1, 1] - rho[0, 1] * rho[1, 0]).real
    disc = max(trace * trace - 4.0 * det, 0.0)
    lo = 0.5 * (trace - math.sqrt(disc))
    if lo < -atol:
        raise ValueError(f"density matrix must be positive semidefinite, min eigenvalue {lo!r}")
    return rho


def _binary_entropy(lam: np.ndarray) -> np.ndarray:
    lam = np.clip(lam, 0.0, 1.0)
    out = np.zeros_like(lam)
    for p in (lam, 1.0 - lam):
        mask = p > 0.0
        out[mask] -= p[mask] * np.log2(p[mask])
    return out


def von_neumann_entropy(rho: np.ndarray) -> float:
    """S(rho) = -Tr[rho log2 rho] via the closed-form 2x2 eigenvalues.

    With unit trace the eigenvalues are (1 +- sqrt(1 - 4 det))/2, so no
    iterative decomposition is needed.  0 log 0 reads as 0 and the result is
    clamped to [0, 1 + 1e-12].
    """
    rho = validate_density_matrix(rho)
    det = (rho[0, 0] * rho[1, 1] - rho[0, 1] * rho[1, 0]).real
    disc = max(1.0 - 4.0 * det, 0.0)
    lam = 0.5 * (1.0 - math.sqrt(disc))
    s = float(_binary_entropy(np.array([lam]))[0])
    return min(max(s, 0.0), 1.0 + 1e-12)


def entropy_surface(
    re_range: Sequence[float],
    im_range: Sequence[float],
    grid_n: int,
) -> np.ndarray:
    """Entropy of the strangeness-basis regenerated pair over a grid of
    admixture coefficients.

    Returns shape ``(grid_n**2, 3)`` rows ``(re, im, entropy)``, row-major
    with the real part varying slowest.
    """
    if grid_n < 2:
        raise ValueError(f"grid_n must be >= 2, got {grid_n!r}")
    for name, rng in (("re_range", re_range), ("im_range", im_range)):
        lo, hi = float(rng[0]), float(rng[1])
        if not (math.isfinite(lo) and math.isfinite(hi)) or lo >= hi:
            raise ValueError(f"{name} must be a finite (low, high) interval, got {rng!r}")

    re = np.linspace(float(re_range[0]), float(re_range[1]), grid_n)
    im = np.linspace(float(im_range[0]), float(im_range[1]), grid_n)
    re_grid, im_grid = np.meshgrid(re, im, indexing="ij")
    ll = re_grid + 1j * im_grid

    # closed-form reduced density matrix of (ll, 2+ll, ll-2, ll)/(2 sqrt(2+|ll|^2))
    norm_sq = 4.0 * (2.0 + np.abs(ll) ** 2)
    rho00 = (np.abs(ll) ** 2 + np.abs(2.0 + ll) ** 2) / norm_sq
    rho11 = (np.abs(ll - 2.0) ** 2 + np.abs(ll) ** 2) / norm_sq
    rho01 = (ll * np.conj(ll - 2.0) + (2.0 + ll) * np.conj(ll)) / norm_sq
    det = rho00 * rho11 - np.abs(rho01) ** 2
    lam = 0.5 * (1.0 - np.sqrt(np.clip(1.0 - 4.0 * det, 0.0, None)))
    entropy = _binary_entropy(lam)

    return np.column_stack([re_grid.ravel(), im_grid.ravel(), entropy.ravel()])
