"""Decay-time and decay-channel bookkeeping over the tagging window.

A post-selected pair population exists from the window start ``t0`` (all
times in tau_S units).  A kaon is identified as a K_S by a two-pion decay
inside ``[t0, t1]``; everything that defeats that identification is budgeted
here:

    undecayed fraction    K_S still alive past t1
    untaggable fraction   K_S decaying in-window into non-two-pion channels
    ks_misid (m_S)        their sum, the K_S misidentification probability
    kl_misid (m_L)        K_L decaying into two pions in-window (CP violating),
                          which fakes a K_S tag

The contamination histogram is the per-bin ratio of CP-violating K_L two-pion
decays over genuine K_S two-pion decays, both normalized to the population
alive at t = 10; it fixes how late the window may close.  Interference
between the K_S and K_L two-pion amplitudes is neglected (contributions add
incoherently), a good approximation in the late bins where the K_S amplitude
is tiny.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from .constants import Parent, PhysicalConstants, TagClass

__all__ = [
    "TaggingWindow",
    "MisidBudget",
    "survival_fraction",
    "untaggable_fraction",
    "misid_budget",
    "contamination_histogram",
    "max_window_end",
]


@dataclass(frozen=True)
class TaggingWindow:
    """Identification window [t0, t1] in tau_S units.

    A zero-length window (t1 == t0) is allowed as the analytic limiting case
    in which nothing decays; a useful tagging window always has t0 < t1.
    """

    t0: float
    t1: float

    def __post_init__(self):
        if self.t0 < 0:
            raise ValueError(f"t0 must be non-negative, got {self.t0!r}")
        if not self.t0 <= self.t1:
            raise ValueError(f"window must satisfy t0 <= t1, got ({self.t0!r}, {self.t1!r})")

    @property
    def duration(self) -> float:
        return self.t1 - self.t0

    @classmethod
    def parse(cls, text: str) -> "TaggingWindow":
        """Parse 'T0:T1', e.g. '10:21'."""
        parts = text.split(":")
        if len(parts) != 2:
            raise ValueError(f"expected 'T0:T1', got {text!r}")
        return cls(float(parts[0]), float(parts[1]))


@dataclass(frozen=True)
class MisidBudget:
    undecayed_fraction: float
    untaggable_fraction: float
    ks_misid: float
    kl_misid: float

    def __post_init__(self):
        for name in ("undecayed_fraction", "untaggable_fraction", "ks_misid", "kl_misid"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if abs(self.ks_misid - (self.undecayed_fraction + self.untaggable_fraction)) > 1e-12:
            raise ValueError("ks_misid must equal undecayed + untaggable fractions")


def _gamma(parent: Parent, c: PhysicalConstants) -> float:
    return c.gamma_s_per_taus if parent is Parent.K_S else c.gamma_l_per_taus


def survival_fraction(w: TaggingWindow, parent: Parent, c: PhysicalConstants) -> float:
    """Fraction of the population alive at t0 still undecayed at t1."""
    return math.exp(-_gamma(parent, c) * w.duration)


def untaggable_fraction(w: TaggingWindow, c: PhysicalConstants) -> float:
    """Fraction of K_S alive at t0 that decay in-window into channels that do
    not read as a K_S (non-KS_TAG)."""
    missed_br = sum(
        e.ratio
        for e in c.branching_table
        if e.parent is Parent.K_S and e.tag_class is not TagClass.KS_TAG
    )
    return (1.0 - survival_fraction(w, Parent.K_S, c)) * missed_br


def misid_budget(w: TaggingWindow, c: PhysicalConstants) -> MisidBudget:
    """Misidentification probabilities for the window.

    m_S = (K_S undecayed past t1) + (K_S decayed untaggably in-window);
    m_L = (K_L decayed in-window) x BR(K_L -> two pions).
    """
    undecayed = survival_fraction(w, Parent.K_S, c)
    untaggable = untaggable_fraction(w, c)
    kl_decayed = 1.0 - survival_fraction(w, Parent.K_L, c)
    return MisidBudget(
        undecayed_fraction=undecayed,
        untaggable_fraction=untaggable,
        ks_misid=undecayed + untaggable,
        kl_misid=kl_decayed * c.two_pi_ratio(Parent.K_L),
    )


_POPULATION_T = 10.0  # reference population: pairs surviving to 10 tau_S


def _bin_ratio(a: float, b: float, c: PhysicalConstants) -> float:
    """CP-violating K_L over genuine K_S two-pion decay mass in [a, b)."""
    gl = c.gamma_l_per_taus
    kl_mass = (math.exp(-gl * (a - _POPULATION_T)) - math.exp(-gl * (b - _POPULATION_T)))
    ks_mass = (math.exp(-(a - _POPULATION_T)) - math.exp(-(b - _POPULATION_T)))
    return (kl_mass * c.two_pi_ratio(Parent.K_L)) / (ks_mass * c.two_pi_ratio(Parent.K_S))


def contamination_histogram(
    t_start: float, t_end: float, bin_width: float, c: PhysicalConstants
) -> list[tuple[float, float, float]]:
    """Per-bin contamination ratios as (bin_start, bin_end, ratio) rows.

    Bins cover [t_start, t_end) with the given width; the decaying
    populations are referenced to t = 10, so bins may not start earlier.
    """
    if t_start < _POPULATION_T:
        raise ValueError(f"bins cannot start before t = {_POPULATION_T:g}, got {t_start!r}")
    if bin_width <= 0:
        raise ValueError(f"bin_width must be positive, got {bin_width!r}")
    n_bins = round((t_end - t_start) / bin_width)
    if n_bins < 1 or abs(t_start + n_bins * bin_width - t_end) > 1e-9:
        raise ValueError(f"[{t_start!r}, {t_end!r}) is not a whole number of bins")
    rows = []
    for i in range(n_bins):
        a = t_start + i * bin_width
        b = t_start + (i + 1) * bin_width
        rows.append((a, b, _bin_ratio(a, b, c)))
    return rows


def max_window_end(
    contamination_cap: float,
    c: PhysicalConstants,
    grid_step: float = 0.1,
    grid_max: float = 30.0,
) -> float:
    """Largest window end (on a ``grid_step`` grid) whose next 1 tau_S bin
    keeps the contamination ratio below the cap.

    The ratio grows monotonically, so this is the last grid point below the
    cap.  A cap no bin satisfies raises; a cap beyond the whole grid returns
    ``grid_max`` with a warning.
    """
    if not contamination_cap > 0:
        raise ValueError(f"cap must be positive, got {contamination_cap!r}")
    n_steps = int(round((grid_max - _POPULATION_T) / grid_step))
    best = None
    for i in range(n_steps + 1):
        t1 = _POPULATION_T + i * grid_step
        if _bin_ratio(t1, t1 + 1.0, c) < contamination_cap:
            best = t1
        else:
            break
    if best is None:
        raise ValueError(
            f"cap {contamination_cap!r} unreachable: contamination already exceeds it "
            f"at t1 = {_POPULATION_T:g}"
        )
    if best == _POPULATION_T + n_steps * grid_step:
        warnings.warn(
            f"contamination stays below {contamination_cap!r} over the whole grid; "
            f"returning the grid upper bound {grid_max:g}",
            stacklevel=2,
        )
        return grid_max
    return best
