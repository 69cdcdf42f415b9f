"""Joint-detection probabilities, the Hardy-type outcome set, the
Clauser-Horne style inequality, and the two efficiency thresholds.

The outcome set of interest pairs a strangeness result on one side with a
strangeness or lifetime result on the other:

    (K0, K0bar)   (K0, K_L)   (K_L, K0bar)   (K_S, K_S)

For the regenerated pair at admixture ll = -1 the last three vanish exactly
while P(K0, K0bar) = eta eta'/12, so observing the first with the others
absent contradicts any local deterministic assignment, with no inequality
needed in the ideal case.  Strangeness outcomes carry the identification
efficiencies eta (K0) and eta' (K0bar); lifetime outcomes are treated as
perfectly tagged at this stage, imperfections entering only through the
measured set below.

With misidentification probabilities m_S (a K_S not identified as such) and
m_L (a K_L faking a K_S via an in-window two-pion decay) the experimentally
measured set becomes

    P(K0, K0bar) = eta eta'/12          P(K0, K_L)    = eta  m_S / 6
    P(K_L, K0bar) = eta' m_S / 6        P(K_S, K_S)   = (2/3) m_L + (1/3) m_L^2

and the Clauser-Horne style margin P(K0,K0bar) - [sum of the other three]
must be positive for a decisive test.  Setting the margin to zero gives the
two closed-form minimum efficiencies implemented here.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .decay import TaggingWindow
from .pairs import TwoKaonState, build_regenerated_pair_strangeness
from .states import Basis

__all__ = [
    "Outcome",
    "DetectionModel",
    "ProbabilitySet",
    "joint_probability",
    "qm_probability_set",
    "measured_probabilities",
    "ch_margin",
    "min_efficiency_direct",
    "min_efficiency_ch",
]

_SQRT_HALF = math.sqrt(0.5)


class Outcome(enum.Enum):
    K0 = "K0"
    K0BAR = "K0BAR"
    KS = "KS"
    KL = "KL"


# single-kaon bra vectors per basis, package sign convention
_OUTCOME_VECTORS = {
    Basis.STRANGENESS: {
        Outcome.K0: np.array([1.0, 0.0], dtype=complex),
        Outcome.K0BAR: np.array([0.0, 1.0], dtype=complex),
        Outcome.KS: np.array([_SQRT_HALF, -_SQRT_HALF], dtype=complex),
        Outcome.KL: np.array([_SQRT_HALF, _SQRT_HALF], dtype=complex),
    },
    Basis.MASS: {
        Outcome.K0: np.array([_SQRT_HALF, _SQRT_HALF], dtype=complex),
        Outcome.K0BAR: np.array([-_SQRT_HALF, _SQRT_HALF], dtype=complex),
        Outcome.KS: np.array([1.0, 0.0], dtype=complex),
        Outcome.KL: np.array([0.0, 1.0], dtype=complex),
    },
}


@dataclass(frozen=True)
class DetectionModel:
    """Identification efficiencies, misidentification probabilities, and the
    tagging window.  ``eta`` applies to K0 outcomes, ``eta_prime`` to K0bar."""

    eta: float
    eta_prime: float
    ks_misid: float
    kl_misid: float
    window: TaggingWindow

    def __post_init__(self):
        for name in ("eta", "eta_prime", "ks_misid", "kl_misid"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")


@dataclass(frozen=True)
class ProbabilitySet:
    p_k0_k0bar: float
    p_k0_kl: float
    p_kl_k0bar: float
    p_ks_ks: float

    def __post_init__(self):
        for name in ("p_k0_k0bar", "p_k0_kl", "p_kl_k0bar", "p_ks_ks"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")

    def as_dict(self) -> dict[str, float]:
        return {
            "p_k0_k0bar": self.p_k0_k0bar,
            "p_k0_kl": self.p_k0_kl,
            "p_kl_k0bar": self.p_kl_k0bar,
            "p_ks_ks": self.p_ks_ks,
        }


def _efficiency(outcome: Outcome, d: DetectionModel) -> float:
    if outcome is Outcome.K0:
        return d.eta
    if outcome is Outcome.K0BAR:
        return d.eta_prime
    return 1.0


def joint_probability(
    s: TwoKaonState, left: Outcome, right: Outcome, d: DetectionModel
) -> float:
    """Born probability of the joint outcome, times the strangeness
    identification efficiencies (lifetime outcomes carry no factor)."""
    vectors = _OUTCOME_VECTORS[s.basis]
    amp = np.einsum(
        "i,j,ij->", vectors[left].conj(), vectors[right].conj(), s.amps.reshape(2, 2)
    )
    return float(abs(amp) ** 2) * _efficiency(left, d) * _efficiency(right, d)


def qm_probability_set(ll: complex, d: DetectionModel) -> ProbabilitySet:
    """The four Hardy-set probabilities for the regenerated pair at ``ll``."""
    state = build_regenerated_pair_strangeness(ll)
    return ProbabilitySet(
        p_k0_k0bar=joint_probability(state, Outcome.K0, Outcome.K0BAR, d),
        p_k0_kl=joint_probability(state, Outcome.K0, Outcome.KL, d),
        p_kl_k0bar=joint_probability(state, Outcome.KL, Outcome.K0BAR, d),
        p_ks_ks=joint_probability(state, Outcome.KS, Outcome.KS, d),
    )


def measured_probabilities(d: DetectionModel) -> ProbabilitySet:
    """The efficiency- and misidentification-corrected measured set at
    ll = -1 (see the module docstring for the four closed forms)."""
    return ProbabilitySet(
        p_k0_k0bar=d.eta * d.eta_prime / 12.0,
        p_k0_kl=d.eta * d.ks_misid / 6.0,
        p_kl_k0bar=d.eta_prime * d.ks_misid / 6.0,
        p_ks_ks=(2.0 / 3.0) * d.kl_misid + (1.0 / 3.0) * d.kl_misid**2,
    )


def ch_margin(p: ProbabilitySet) -> float:
    """Clauser-Horne style margin; positive means the local-model bound is
    violated (the decisive regime)."""
    return p.p_k0_k0bar - (p.p_k0_kl + p.p_kl_k0bar + p.p_ks_ks)


def min_efficiency_direct(ks_misid_effective: float) -> float:
    """Minimum eta = eta' for the direct falsification condition
    eta^2/12 > m_S: the equality point sqrt(12 m_S).

    An experiment must strictly exceed the returned value.
    """
    if not ks_misid_effective > 0:
        raise ValueError(f"ks_misid_effective must be positive, got {ks_misid_effective!r}")
    return math.sqrt(12.0 * ks_misid_effective)


def min_efficiency_ch(ks_misid: float, kl_misid: float) -> float:
    """Minimum eta = eta' for a positive measured Clauser-Horne margin.

    Zero margin is the quadratic eta^2/12 = eta m_S/3 + (2/3) m_L +
    (1/3) m_L^2, whose positive root is

        eta = 2 m_S + sqrt(4 m_S^2 + 8 m_L + 4 m_L^2).

    An experiment must strictly exceed the returned value.
    """
    if ks_misid < 0 or kl_misid < 0:
        raise ValueError("misidentification probabilities must be non-negative")
    return 2.0 * ks_misid + math.sqrt(
        4.0 * ks_misid**2 + 8.0 * kl_misid + 4.0 * kl_misid**2
    )
