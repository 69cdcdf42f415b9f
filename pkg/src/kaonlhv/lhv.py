"""Explicit local-hidden-variable ensembles with hidden-variable-fixed decay
channels and times, the Hardy constraint bookkeeping, and the construction
of a loophole-exploiting ensemble below threshold.

A hidden assignment fixes, locally and deterministically, everything either
side can reveal: the strangeness responses that matter for the Hardy set
(would the left register K0, would the right register K0bar), each side's
mass identity, and each side's decay channel and time.  Locality is
structural: no field on one side refers to the other side's measurement.
An ensemble is a finite weighted list of assignments (a discrete measure),
so all probability integrals become exact sums.

Two probability semantics coexist deliberately:

``lhv_joint_probability``
    The hidden-side quantity: a lifetime outcome (KS/KL) requires the
    matching mass identity AND an in-window decay into a channel of the
    matching tag class.  This is the quantity the Hardy bound constrains.

``measured_probability_set``
    What an experiment records: a side that does not register strangeness is
    tagged purely by its observed decay (in-window two-pion reads KS,
    in-window K_L-like reads KL, anything else is untagged), regardless of
    the hidden mass identity.

The gap between the two is precisely the detection loophole: below the
direct efficiency threshold, an ensemble can match every measured rate while
its hidden in-window (K_S, K_S) probability is exactly zero, because the
would-be (K0, K0bar) weight rides on K_S pairs whose decays escape the
window or fall into K_L-like channels.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .constants import Parent, PhysicalConstants, TagClass
from .predictions import DetectionModel, Outcome, ProbabilitySet, min_efficiency_direct

__all__ = [
    "DecaySpec",
    "HiddenAssignment",
    "HiddenVariableEnsemble",
    "HardyReport",
    "EvasionInfeasibleError",
    "lhv_joint_probability",
    "measured_mass_tag",
    "measured_probability_set",
    "hardy_constraint_check",
    "build_evading_ensemble",
]

_PRODUCTION_T = 10.0  # post-selected pairs exist from 10 tau_S on


class EvasionInfeasibleError(ValueError):
    """The detection model is above threshold; no evading ensemble exists."""


@dataclass(frozen=True)
class DecaySpec:
    """A hidden-variable-fixed decay: channel id and time (tau_S units)."""

    channel: str
    time: float

    def __post_init__(self):
        if not self.time >= _PRODUCTION_T:
            raise ValueError(
                f"decay time must be >= {_PRODUCTION_T:g} tau_S, got {self.time!r}"
            )


@dataclass(frozen=True)
class HiddenAssignment:
    left_k0_response: int
    right_k0bar_response: int
    left_mass: Parent
    right_mass: Parent
    left_decay: DecaySpec
    right_decay: DecaySpec

    def __post_init__(self):
        for name in ("left_k0_response", "right_k0bar_response"):
            if getattr(self, name) not in (0, 1):
                raise ValueError(f"{name} must be 0 or 1")


@dataclass(frozen=True)
class HiddenVariableEnsemble:
    """Weighted assignments plus the channel classification they decay into.

    ``channel_classes`` is recorded at construction (normally from a
    :class:`~kaonlhv.constants.PhysicalConstants` branching table) so the
    ensemble is self-contained for probability queries.
    """

    entries: tuple[tuple[HiddenAssignment, float], ...]
    channel_classes: Mapping[str, TagClass]

    def __post_init__(self):
        total = 0.0
        for assignment, weight in self.entries:
            if weight < 0:
                raise ValueError(f"weights must be non-negative, got {weight!r}")
            total += weight
            for decay in (assignment.left_decay, assignment.right_decay):
                if decay.channel not in self.channel_classes:
                    raise ValueError(
                        f"channel {decay.channel!r} missing from channel_classes"
                    )
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"weights must sum to 1, got {total!r}")

    @classmethod
    def from_constants(
        cls,
        entries: tuple[tuple[HiddenAssignment, float], ...],
        c: PhysicalConstants,
    ) -> "HiddenVariableEnsemble":
        return cls(entries=tuple(entries), channel_classes=c.channel_classes())


# -- response functions --------------------------------------------------------


def _in_window(decay: DecaySpec, d: DetectionModel) -> bool:
    return d.window.t0 <= decay.time <= d.window.t1


def _strict_mass_response(
    outcome: Outcome,
    mass: Parent,
    decay: DecaySpec,
    classes: Mapping[str, TagClass],
    d: DetectionModel,
) -> float:
    """Hidden-side lifetime response: the mass identity must match and the
    decay must land in-window in a channel of the matching tag class."""
    if not _in_window(decay, d):
        return 0.0
    if outcome is Outcome.KS:
        return 1.0 if mass is Parent.K_S and classes[decay.channel] is TagClass.KS_TAG else 0.0
    return 1.0 if mass is Parent.K_L and classes[decay.channel] is TagClass.KL_LIKE else 0.0


def _side_response(
    outcome: Outcome, side: str, a: HiddenAssignment, classes, d: DetectionModel
) -> float:
    if outcome is Outcome.K0:
        if side != "left":
            raise ValueError("K0 strangeness responses are modeled on the left side only")
        return d.eta * a.left_k0_response
    if outcome is Outcome.K0BAR:
        if side != "right":
            raise ValueError("K0bar strangeness responses are modeled on the right side only")
        return d.eta_prime * a.right_k0bar_response
    mass = a.left_mass if side == "left" else a.right_mass
    decay = a.left_decay if side == "left" else a.right_decay
    return _strict_mass_response(outcome, mass, decay, classes, d)


def lhv_joint_probability(
    e: HiddenVariableEnsemble, left: Outcome, right: Outcome, d: DetectionModel
) -> float:
    """Ensemble average of the product of one-sided responses.

    Strangeness responses are the deterministic bits thinned by eta/eta';
    lifetime responses follow the strict hidden-side rule (see module
    docstring).  Factorization per side is what makes the model local.
    """
    total = 0.0
    for a, w in e.entries:
        if w == 0.0:
            continue
        total += (
            w
            * _side_response(left, "left", a, e.channel_classes, d)
            * _side_response(right, "right", a, e.channel_classes, d)
        )
    return total


# -- experimental tagging ------------------------------------------------------


def measured_mass_tag(
    decay: DecaySpec, classes: Mapping[str, TagClass], d: DetectionModel
) -> Outcome | None:
    """Tag a non-strangeness-registered side from its observed decay alone:
    in-window KS_TAG reads KS, in-window KL_LIKE reads KL, anything else
    (late decay or untaggable channel) returns None (untagged)."""
    if not _in_window(decay, d):
        return None
    tag_class = classes[decay.channel]
    if tag_class is TagClass.KS_TAG:
        return Outcome.KS
    if tag_class is TagClass.KL_LIKE:
        return Outcome.KL
    return None


def measured_probability_set(
    e: HiddenVariableEnsemble, d: DetectionModel
) -> ProbabilitySet:
    """Exact expected measured rates of the four Hardy-set outcome pairs.

    Registration is exclusive per side: a strangeness click preempts the
    decay tag, so a lifetime outcome carries the complementary no-click
    probability.
    """
    p = {"k0_k0bar": 0.0, "k0_kl": 0.0, "kl_k0bar": 0.0, "ks_ks": 0.0}
    for a, w in e.entries:
        if w == 0.0:
            continue
        reg_l = d.eta * a.left_k0_response
        reg_r = d.eta_prime * a.right_k0bar_response
        tag_l = measured_mass_tag(a.left_decay, e.channel_classes, d)
        tag_r = measured_mass_tag(a.right_decay, e.channel_classes, d)
        p["k0_k0bar"] += w * reg_l * reg_r
        if tag_r is Outcome.KL:
            p["k0_kl"] += w * reg_l * (1.0 - reg_r)
        if tag_l is Outcome.KL:
            p["kl_k0bar"] += w * (1.0 - reg_l) * reg_r
        if tag_l is Outcome.KS and tag_r is Outcome.KS:
            p["ks_ks"] += w * (1.0 - reg_l) * (1.0 - reg_r)
    return ProbabilitySet(
        p_k0_k0bar=p["k0_k0bar"],
        p_k0_kl=p["k0_kl"],
        p_kl_k0bar=p["kl_k0bar"],
        p_ks_ks=p["ks_ks"],
    )


# -- Hardy constraint ----------------------------------------------------------


@dataclass(frozen=True)
class HardyReport:
    """Bookkeeping for the Hardy-type constraint.

    ``a_set_weight`` is the hidden-variable mass of the set where both
    strangeness responses fire.  If the ensemble reproduces the two
    strangeness-lifetime zeros with window-unrestricted mass responses, any
    local model must satisfy ``p_ksks_unrestricted >= a_set_weight``; an
    ensemble whose window-restricted ``p_ksks_in_window`` nevertheless falls
    short of ``a_set_weight`` exhibits the decay-time/channel escape.
    """

    a_set_weight: float
    p_ksks_in_window: float
    p_ksks_unrestricted: float
    zero_weight_k0_kl: float
    zero_weight_kl_k0bar: float
    reproduces_zeros: bool
    bound_satisfied: bool
    escape_exhibited: bool

    def as_dict(self) -> dict:
        return {
            "a_set_weight": self.a_set_weight,
            "p_ksks_in_window": self.p_ksks_in_window,
            "p_ksks_unrestricted": self.p_ksks_unrestricted,
            "zero_weight_k0_kl": self.zero_weight_k0_kl,
            "zero_weight_kl_k0bar": self.zero_weight_kl_k0bar,
            "reproduces_zeros": self.reproduces_zeros,
            "bound_satisfied": self.bound_satisfied,
            "escape_exhibited": self.escape_exhibited,
        }


def hardy_constraint_check(e: HiddenVariableEnsemble, d: DetectionModel) -> HardyReport:
    """Evaluate the Hardy bound and whether the ensemble escapes it through
    the tagging window."""
    a_set = 0.0
    ksks_unrestricted = 0.0
    zero_k0_kl = 0.0
    zero_kl_k0bar = 0.0
    for a, w in e.entries:
        both_fire = a.left_k0_response and a.right_k0bar_response
        if both_fire:
            a_set += w
        if a.left_mass is Parent.K_S and a.right_mass is Parent.K_S:
            ksks_unrestricted += w
        if a.left_k0_response and a.right_mass is Parent.K_L:
            zero_k0_kl += w
        if a.left_mass is Parent.K_L and a.right_k0bar_response:
            zero_kl_k0bar += w
    ksks_windowed = lhv_joint_probability(e, Outcome.KS, Outcome.KS, d)
    reproduces_zeros = zero_k0_kl <= 1e-15 and zero_kl_k0bar <= 1e-15
    return HardyReport(
        a_set_weight=a_set,
        p_ksks_in_window=ksks_windowed,
        p_ksks_unrestricted=ksks_unrestricted,
        zero_weight_k0_kl=zero_k0_kl,
        zero_weight_kl_k0bar=zero_kl_k0bar,
        reproduces_zeros=reproduces_zeros,
        bound_satisfied=ksks_unrestricted >= a_set - 1e-12,
        escape_exhibited=a_set > 0 and ksks_windowed < a_set - 1e-12,
    )


# -- the evading construction --------------------------------------------------


def _dominant_channel(c: PhysicalConstants, parent: Parent, tag_class: TagClass) -> str:
    candidates = [
        e for e in c.branching_table if e.parent is parent and e.tag_class is tag_class
    ]
    if not candidates:
        raise ValueError(f"no {tag_class.value} channel for {parent.value} in branching table")
    return max(candidates, key=lambda e: e.ratio).channel


def build_evading_ensemble(
    d: DetectionModel,
    c: PhysicalConstants,
    escape_time_offset: float = 1.0,
) -> HiddenVariableEnsemble:
    """Construct an ensemble that matches all four measured Hardy-set rates
    while its hidden in-window (K_S, K_S) probability is exactly zero.

    Feasible only below the direct threshold, i.e. when
    eta eta'/12 <= ks_misid: the would-be (K0, K0bar) weight is carried by
    (K_S, K_S) assignments whose decays land past the window end (at
    ``t1 + escape_time_offset``), and the measured misidentification rates
    are reproduced by dedicated K_L-side assignments.
    """
    coincidence = d.eta * d.eta_prime / 12.0
    # the direct condition is a strict inequality, so the equality point is
    # still evadable; compare with an ulp-scale guard
    if coincidence > d.ks_misid * (1.0 + 1e-12):
        raise EvasionInfeasibleError(
            f"eta*eta'/12 = {coincidence:.6g} exceeds the K_S misidentification budget "
            f"{d.ks_misid:.6g}; the direct falsification condition holds "
            f"(equality point eta = eta' = {min_efficiency_direct(d.ks_misid):.6g}), "
            "so no evading ensemble exists"
        )

    ks_two_pi = _dominant_channel(c, Parent.K_S, TagClass.KS_TAG)
    kl_like = _dominant_channel(c, Parent.K_L, TagClass.KL_LIKE)
    kl_two_pi = _dominant_channel(c, Parent.K_L, TagClass.KS_TAG)

    t_mid = 0.5 * (d.window.t0 + d.window.t1)
    escape = DecaySpec(ks_two_pi, d.window.t1 + escape_time_offset)
    kl_like_decay = DecaySpec(kl_like, t_mid)
    kl_two_pi_decay = DecaySpec(kl_two_pi, t_mid)

    w_escape = 1.0 / 12.0
    w_ks_misid = d.ks_misid / 6.0
    w_ksks = (2.0 / 3.0) * d.kl_misid + (1.0 / 3.0) * d.kl_misid**2
    w_rest = 1.0 - w_escape - 2.0 * w_ks_misid - w_ksks
    if w_rest < 0:
        raise EvasionInfeasibleError("misidentification budget leaves no residual weight")

    entries = (
        # the hidden (K0, K0bar) set: true K_S pairs decaying past the window
        (
            HiddenAssignment(1, 1, Parent.K_S, Parent.K_S, escape, escape),
            w_escape,
        ),
        # left K0 click against a K_L-read partner, at the K_S misread rate
        (
            HiddenAssignment(1, 0, Parent.K_L, Parent.K_L, kl_like_decay, kl_like_decay),
            w_ks_misid,
        ),
        # mirror image for the right K0bar click
        (
            HiddenAssignment(0, 1, Parent.K_L, Parent.K_L, kl_like_decay, kl_like_decay),
            w_ks_misid,
        ),
        # CP-violating two-pion fakes: K_L pairs that read (KS, KS)
        (
            HiddenAssignment(0, 0, Parent.K_L, Parent.K_L, kl_two_pi_decay, kl_two_pi_decay),
            w_ksks,
        ),
        # inert bulk
        (
            HiddenAssignment(0, 0, Parent.K_L, Parent.K_L, kl_like_decay, kl_like_decay),
            w_rest,
        ),
    )
    return HiddenVariableEnsemble.from_constants(entries, c)
