"""Two-level state algebra for a single neutral kaon.

Bases and sign convention (documented once, used everywhere):

    strangeness basis   (K0, K0bar)
    mass basis          (K_S, K_L) with

        K_S = (K0 - K0bar) / sqrt(2)
        K_L = (K0 + K0bar) / sqrt(2)

The mass eigenstates are treated as exactly orthogonal here; the physical
|<K_S|K_L>| ~ 3.3e-3 overlap is modeled downstream as a misidentification
probability, not in the linear algebra.

Time evolution is non-unitary (the kaon decays): mass amplitudes are damped
by exp(-Gamma t / 2), the K_L component acquires the relative phase
exp(-i delta_m t), the state is renormalized, and the lost probability is
accumulated multiplicatively in ``norm_tracked``.  Global phase is dropped.
All operations are pure functions on immutable values.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass

from .constants import PhysicalConstants

__all__ = ["Basis", "SingleKaonState", "to_mass_basis", "to_strangeness_basis", "evolve"]

_SQRT_HALF = math.sqrt(0.5)
_NORM_TOL = 1e-9


class Basis(enum.Enum):
    STRANGENESS = "strangeness"
    MASS = "mass"


@dataclass(frozen=True)
class SingleKaonState:
    """Normalized amplitudes over the declared basis.

    ``amp0``/``amp1`` are the (K0, K0bar) or (K_S, K_L) components;
    ``norm_tracked`` is the survival weight accumulated by :func:`evolve`.
    """

    basis: Basis
    amp0: complex
    amp1: complex
    norm_tracked: float = 1.0

    def __post_init__(self):
        for name, a in (("amp0", self.amp0), ("amp1", self.amp1)):
            if not (cmath.isfinite(complex(a))):
                raise ValueError(f"{name} must be finite")
        norm = abs(self.amp0) ** 2 + abs(self.amp1) ** 2
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"amplitudes must be normalized, got |psi|^2 = {norm!r}")
        if not 0.0 <= self.norm_tracked <= 1.0 + 1e-12:
            raise ValueError(f"norm_tracked must lie in [0, 1], got {self.norm_tracked!r}")

    @classmethod
    def normalized(
        cls, basis: Basis, amp0: complex, amp1: complex, norm_tracked: float = 1.0
    ) -> "SingleKaonState":
        n = math.sqrt(abs(amp0) ** 2 + abs(amp1) ** 2)
        if n == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return cls(basis, amp0 / n, amp1 / n, norm_tracked)


def to_mass_basis(s: SingleKaonState) -> SingleKaonState:
    """Rewrite a strangeness-basis state over (K_S, K_L)."""
    if s.basis is not Basis.STRANGENESS:
        raise ValueError(f"expected a strangeness-basis state, got {s.basis}")
    amp_s = (s.amp0 - s.amp1) * _SQRT_HALF
    amp_l = (s.amp0 + s.amp1) * _SQRT_HALF
    return SingleKaonState(Basis.MASS, amp_s, amp_l, s.norm_tracked)


def to_strangeness_basis(s: SingleKaonState) -> SingleKaonState:
    """Inverse of :func:`to_mass_basis`."""
    if s.basis is not Basis.MASS:
        raise ValueError(f"expected a mass-basis state, got {s.basis}")
    amp_k0 = (s.amp0 + s.amp1) * _SQRT_HALF
    amp_k0bar = (s.amp1 - s.amp0) * _SQRT_HALF
    return SingleKaonState(Basis.STRANGENESS, amp_k0, amp_k0bar, s.norm_tracked)


def evolve(s: SingleKaonState, t: float, c: PhysicalConstants) -> SingleKaonState:
    """Propagate the kaon for ``t`` (tau_S units) with decay.

    Returns a state in the input basis with amplitudes renormalized and
    ``norm_tracked`` multiplied by the survival probability.
    """
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t!r}")
    in_basis = s.basis
    m = s if in_basis is Basis.MASS else to_mass_basis(s)

    damp_s = math.exp(-0.5 * c.gamma_s_per_taus * t)
    damp_l = math.exp(-0.5 * c.gamma_l_per_taus * t)
    amp_s = m.amp0 * damp_s
    amp_l = m.amp1 * damp_l * cmath.exp(-1j * c.delta_m_per_taus * t)

    # survival relative to the incoming norm, so t = 0 is an exact identity
    norm_in = abs(m.amp0) ** 2 + abs(m.amp1) ** 2
    norm_out = abs(amp_s) ** 2 + abs(amp_l) ** 2
    survival = min(norm_out / norm_in, 1.0)
    scale = 1.0 / math.sqrt(norm_out)
    out = SingleKaonState(
        Basis.MASS, amp_s * scale, amp_l * scale, m.norm_tracked * survival
    )
    return out if in_basis is Basis.MASS else to_strangeness_basis(out)
