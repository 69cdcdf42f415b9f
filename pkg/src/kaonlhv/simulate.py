"""Seedable event generation for both sources (quantum state or hidden
variable ensemble) and the falsification verdict computed from counts.

Reproducibility contract
------------------------
Events are generated in fixed blocks of ``BLOCK_SIZE``.  Block ``j`` draws
its uniforms from an independent counter-based stream keyed by
``(seed, j)`` (Philox), and every event consumes exactly one row of its
block's ``(m, 4)`` uniform matrix.  The stream therefore depends only on
``(seed, event index)``: the same seed yields byte-identical event arrays
for any worker count or chunking, and disjoint index ranges can be filled
in parallel.

Event model
-----------
QM source: each side carries a strangeness-identification POVM
{eta |K0><K0|, eta' |K0bar><K0bar|, rest}.  A no-click side keeps its
coherence (pure loss) and is then tagged by its decay, modeled as the Born
mass outcome followed by a misidentification flip: a true K_S reads KL with
probability ks_misid, a true K_L reads KS with probability kl_misid.  The
finite latent outcome distribution is enumerated exactly and sampled as a
single categorical per event.

LHV source: the assignment is sampled by weight; a side with a firing
strangeness bit registers with probability eta (left K0) or eta' (right
K0bar), otherwise it is tagged from its assigned decay by channel and
window alone.  Decay times are the assignment's, hence deterministic.

Decay times in QM mode are plumbing for inspection: exponential from the
window start at the rate of the side's true (or 50/50 mixed, if strangeness
was registered) mass identity.  They do not feed back into the tags.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np
from numpy.random import Generator, Philox

from .constants import Parent, PhysicalConstants, default_constants
from .lhv import HiddenVariableEnsemble, measured_mass_tag, _strict_mass_response
from .pairs import TwoKaonState, build_regenerated_pair_strangeness, change_basis
from .predictions import DetectionModel, Outcome, ProbabilitySet, ch_margin
from .states import Basis

__all__ = [
    "BLOCK_SIZE",
    "TAG_NAMES",
    "EVENT_DTYPE",
    "VerdictReport",
    "monte_carlo_run",
    "count_events",
    "falsification_verdict",
    "serialize_events",
    "write_events",
]

BLOCK_SIZE = 1 << 16
_DRAWS_PER_EVENT = 4

# tag codes in the event array
TAG_UNTAGGED, TAG_K0, TAG_K0BAR, TAG_KS, TAG_KL = 0, 1, 2, 3, 4
TAG_NAMES = ("UNTAGGED", "K0", "K0BAR", "KS", "KL")
TRUTH_NAMES = ("QM", "LHV")
_MASS_NONE, _MASS_KS, _MASS_KL = 0, 1, 2

EVENT_DTYPE = np.dtype(
    [
        ("event_id", "<i8"),
        ("left_tag", "<i1"),
        ("right_tag", "<i1"),
        ("left_t", "<f8"),
        ("right_t", "<f8"),
        ("truth", "<i1"),
        ("left_true_mass", "<i1"),
        ("right_true_mass", "<i1"),
        ("true_ksks_in_window", "<i1"),
    ]
)

_SQRT_HALF = math.sqrt(0.5)
_STR_TO_MASS = np.array([[_SQRT_HALF, -_SQRT_HALF], [_SQRT_HALF, _SQRT_HALF]])


def _block_uniforms(seed: int, block: int, m: int) -> np.ndarray:
    bitgen = Philox(key=np.array([np.uint64(seed), np.uint64(block)], dtype=np.uint64))
    return Generator(bitgen).random((m, _DRAWS_PER_EVENT))


# -- QM latent enumeration -----------------------------------------------------


def _flip_categories(true_mass: int, d: DetectionModel) -> list[tuple[float, int]]:
    """(probability, tag) splits of a decay-tagged side with known identity."""
    if true_mass == _MASS_KS:
        return [(1.0 - d.ks_misid, TAG_KS), (d.ks_misid, TAG_KL)]
    return [(1.0 - d.kl_misid, TAG_KL), (d.kl_misid, TAG_KS)]


def _qm_categories(
    state: TwoKaonState, d: DetectionModel
) -> list[tuple[float, int, int, int, int]]:
    """Exact latent outcome distribution:
    (prob, left_tag, right_tag, left_true_mass, right_true_mass)."""
    psi = change_basis(state, Basis.STRANGENESS).amps.reshape(2, 2)
    eff = np.array([d.eta, d.eta_prime])          # click probability per species
    keep = np.sqrt(1.0 - eff)                     # no-click Kraus amplitudes
    strangeness_tags = (TAG_K0, TAG_K0BAR)

    cats: list[tuple[float, int, int, int, int]] = []

    # both sides click
    for i in range(2):
        for j in range(2):
            p = eff[i] * eff[j] * abs(psi[i, j]) ** 2
            cats.append((p, strangeness_tags[i], strangeness_tags[j], _MASS_NONE, _MASS_NONE))

    # one side clicks, the other is decay tagged
    for i in range(2):
        v = keep * psi[i, :]                      # right no-click branch
        mass_amps = _STR_TO_MASS @ v
        for mr, p_mass in ((_MASS_KS, abs(mass_amps[0]) ** 2), (_MASS_KL, abs(mass_amps[1]) ** 2)):
            for p_flip, tag in _flip_categories(mr, d):
                cats.append((eff[i] * p_mass * p_flip, strangeness_tags[i], tag, _MASS_NONE, mr))
    for j in range(2):
        v = keep * psi[:, j]                      # left no-click branch
        mass_amps = _STR_TO_MASS @ v
        for ml, p_mass in ((_MASS_KS, abs(mass_amps[0]) ** 2), (_MASS_KL, abs(mass_amps[1]) ** 2)):
            for p_flip, tag in _flip_categories(ml, d):
                cats.append((p_mass * p_flip * eff[j], tag, strangeness_tags[j], ml, _MASS_NONE))

    # neither side clicks: joint Born in the mass basis, then independent flips
    phi = (keep[:, None] * keep[None, :]) * psi
    mass_joint = _STR_TO_MASS @ phi @ _STR_TO_MASS.T
    for ml in (_MASS_KS, _MASS_KL):
        for mr in (_MASS_KS, _MASS_KL):
            p_mass = abs(mass_joint[ml - 1, mr - 1]) ** 2
            for pl, tag_l in _flip_categories(ml, d):
                for pr, tag_r in _flip_categories(mr, d):
                    cats.append((p_mass * pl * pr, tag_l, tag_r, ml, mr))

    total = sum(c[0] for c in cats)
    if abs(total - 1.0) > 1e-9:
        raise AssertionError(f"latent outcome probabilities sum to {total!r}")
    return cats


def _sample_decay_times(
    mass_codes: np.ndarray, u: np.ndarray, t0: float, gamma_l: float
) -> np.ndarray:
    """Exponential decay times from t0; unknown identities (strangeness
    clicks) draw from the 50/50 K_S/K_L mixture via composition on u."""
    rate = np.where(mass_codes == _MASS_KL, gamma_l, 1.0)
    v = u.copy()
    unknown = mass_codes == _MASS_NONE
    v2 = u[unknown] * 2.0
    long_half = v2 >= 1.0
    v[unknown] = v2 - long_half
    rate_unknown = np.where(long_half, gamma_l, 1.0)
    rate[unknown] = rate_unknown
    return t0 - np.log1p(-np.clip(v, 0.0, 1.0 - 1e-16)) / rate


# -- sources -------------------------------------------------------------------


@dataclass(frozen=True)
class _QmSampler:
    truth_code: int
    cum: np.ndarray
    left_tags: np.ndarray
    right_tags: np.ndarray
    left_mass: np.ndarray
    right_mass: np.ndarray
    t0: float
    gamma_l: float

    def fill(self, out: np.ndarray, u: np.ndarray) -> None:
        idx = np.searchsorted(self.cum, u[:, 0], side="right")
        idx = np.minimum(idx, len(self.cum) - 1)
        out["left_tag"] = self.left_tags[idx]
        out["right_tag"] = self.right_tags[idx]
        out["left_true_mass"] = self.left_mass[idx]
        out["right_true_mass"] = self.right_mass[idx]
        out["left_t"] = _sample_decay_times(out["left_true_mass"], u[:, 1], self.t0, self.gamma_l)
        out["right_t"] = _sample_decay_times(out["right_true_mass"], u[:, 2], self.t0, self.gamma_l)
        # true in-window identifiable (K_S, K_S) pairs: both sides genuinely
        # short lived and correctly read as KS
        out["true_ksks_in_window"] = (
            (out["left_true_mass"] == _MASS_KS)
            & (out["right_true_mass"] == _MASS_KS)
            & (out["left_tag"] == TAG_KS)
            & (out["right_tag"] == TAG_KS)
        )
        out["truth"] = self.truth_code


@dataclass(frozen=True)
class _LhvSampler:
    truth_code: int
    cum: np.ndarray
    left_bit: np.ndarray
    right_bit: np.ndarray
    left_mass_tag: np.ndarray
    right_mass_tag: np.ndarray
    left_time: np.ndarray
    right_time: np.ndarray
    left_mass: np.ndarray
    right_mass: np.ndarray
    strict_ksks: np.ndarray
    eta: float
    eta_prime: float

    def fill(self, out: np.ndarray, u: np.ndarray) -> None:
        idx = np.searchsorted(self.cum, u[:, 0], side="right")
        idx = np.minimum(idx, len(self.cum) - 1)
        reg_l = (self.left_bit[idx] == 1) & (u[:, 1] < self.eta)
        reg_r = (self.right_bit[idx] == 1) & (u[:, 2] < self.eta_prime)
        out["left_tag"] = np.where(reg_l, TAG_K0, self.left_mass_tag[idx])
        out["right_tag"] = np.where(reg_r, TAG_K0BAR, self.right_mass_tag[idx])
        out["left_t"] = self.left_time[idx]
        out["right_t"] = self.right_time[idx]
        out["left_true_mass"] = self.left_mass[idx]
        out["right_true_mass"] = self.right_mass[idx]
        out["true_ksks_in_window"] = self.strict_ksks[idx]
        out["truth"] = self.truth_code


def _make_sampler(source, d: DetectionModel, c: PhysicalConstants):
    if isinstance(source, HiddenVariableEnsemble):
        assignments = [a for a, _ in source.entries]
        weights = np.array([w for _, w in source.entries])
        tag_code = {Outcome.KS: TAG_KS, Outcome.KL: TAG_KL, None: TAG_UNTAGGED}
        mass_code = {Parent.K_S: _MASS_KS, Parent.K_L: _MASS_KL}
        strict = [
            _strict_mass_response(Outcome.KS, a.left_mass, a.left_decay, source.channel_classes, d)
            * _strict_mass_response(Outcome.KS, a.right_mass, a.right_decay, source.channel_classes, d)
            for a in assignments
        ]
        return _LhvSampler(
            truth_code=1,
            cum=np.cumsum(weights),
            left_bit=np.array([a.left_k0_response for a in assignments], dtype=np.int8),
            right_bit=np.array([a.right_k0bar_response for a in assignments], dtype=np.int8),
            left_mass_tag=np.array(
                [tag_code[measured_mass_tag(a.left_decay, source.channel_classes, d)] for a in assignments],
                dtype=np.int8,
            ),
            right_mass_tag=np.array(
                [tag_code[measured_mass_tag(a.right_decay, source.channel_classes, d)] for a in assignments],
                dtype=np.int8,
            ),
            left_time=np.array([a.left_decay.time for a in assignments]),
            right_time=np.array([a.right_decay.time for a in assignments]),
            left_mass=np.array([mass_code[a.left_mass] for a in assignments], dtype=np.int8),
            right_mass=np.array([mass_code[a.right_mass] for a in assignments], dtype=np.int8),
            strict_ksks=np.array(strict, dtype=np.int8),
            eta=d.eta,
            eta_prime=d.eta_prime,
        )

    if isinstance(source, complex | float | int):
        source = build_regenerated_pair_strangeness(complex(source))
    if not isinstance(source, TwoKaonState):
        raise TypeError(f"source must be a TwoKaonState, admixture coefficient, or ensemble, got {type(source)!r}")
    cats = _qm_categories(source, d)
    probs = np.array([max(p, 0.0) for p, *_ in cats])
    return _QmSampler(
        truth_code=0,
        cum=np.cumsum(probs / probs.sum()),
        left_tags=np.array([c_[1] for c_ in cats], dtype=np.int8),
        right_tags=np.array([c_[2] for c_ in cats], dtype=np.int8),
        left_mass=np.array([c_[3] for c_ in cats], dtype=np.int8),
        right_mass=np.array([c_[4] for c_ in cats], dtype=np.int8),
        t0=d.window.t0,
        gamma_l=c.gamma_l_per_taus,
    )


# -- driver --------------------------------------------------------------------


def monte_carlo_run(
    source,
    d: DetectionModel,
    n_events: int,
    seed: int,
    workers: int = 1,
    constants: PhysicalConstants | None = None,
) -> tuple[np.ndarray, "VerdictReport"]:
    """Generate ``n_events`` events from ``source`` and score them.

    ``source`` is a :class:`TwoKaonState` (or a bare admixture coefficient,
    meaning the regenerated pair at that coefficient) for quantum sampling,
    or a :class:`HiddenVariableEnsemble` for hidden-variable sampling.
    Output is deterministic in ``(seed, n_events, source)`` and independent
    of ``workers``.
    """
    if n_events < 1:
        raise ValueError(f"n_events must be >= 1, got {n_events!r}")
    if not 0 <= int(seed) < 2**64:
        raise ValueError(f"seed must be a non-negative 64-bit integer, got {seed!r}")
    c = constants if constants is not None else default_constants()
    sampler = _make_sampler(source, d, c)

    events = np.empty(n_events, dtype=EVENT_DTYPE)
    events["event_id"] = np.arange(n_events, dtype=np.int64)

    blocks = [
        (j, j * BLOCK_SIZE, min((j + 1) * BLOCK_SIZE, n_events))
        for j in range((n_events + BLOCK_SIZE - 1) // BLOCK_SIZE)
    ]

    def run_block(spec):
        j, lo, hi = spec
        u = _block_uniforms(seed, j, hi - lo)
        sampler.fill(events[lo:hi], u)

    if workers <= 1 or len(blocks) == 1:
        for spec in blocks:
            run_block(spec)
    else:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run_block, blocks))

    report = falsification_verdict(count_events(events), n_events, d, seed=seed)
    return events, report


# -- scoring -------------------------------------------------------------------


def count_events(events: np.ndarray) -> dict[str, int]:
    lt, rt = events["left_tag"], events["right_tag"]
    return {
        "k0_k0bar": int(np.count_nonzero((lt == TAG_K0) & (rt == TAG_K0BAR))),
        "k0_kl": int(np.count_nonzero((lt == TAG_K0) & (rt == TAG_KL))),
        "kl_k0bar": int(np.count_nonzero((lt == TAG_KL) & (rt == TAG_K0BAR))),
        "ks_ks": int(np.count_nonzero((lt == TAG_KS) & (rt == TAG_KS))),
        "k0_k0": int(np.count_nonzero((lt == TAG_K0) & (rt == TAG_K0))),
        "k0bar_k0bar": int(np.count_nonzero((lt == TAG_K0BAR) & (rt == TAG_K0BAR))),
        "true_ksks_in_window": int(np.count_nonzero(events["true_ksks_in_window"])),
    }


@dataclass(frozen=True)
class VerdictReport:
    """Measured Hardy-set rates with binomial errors and the two verdicts:
    the direct condition (coincidence rate above the K_S misidentification
    budget) and a positive Clauser-Horne margin."""

    probabilities: ProbabilitySet
    std_errors: dict[str, float]
    margin: float
    falsification_pass: bool
    ch_pass: bool
    counts: dict[str, int]
    n_events: int
    seed: int | None

    def as_dict(self) -> dict:
        return {
            "probabilities": self.probabilities.as_dict(),
            "std_errors": dict(self.std_errors),
            "ch_margin": self.margin,
            "falsification_pass": self.falsification_pass,
            "ch_pass": self.ch_pass,
            "counts": dict(self.counts),
            "n_events": self.n_events,
            "seed": self.seed,
        }


def falsification_verdict(
    counts: dict[str, int],
    n_events: int,
    d: DetectionModel,
    seed: int | None = None,
) -> VerdictReport:
    """Score measured counts against both falsification conditions."""
    if n_events < 1:
        raise ValueError(f"n_events must be >= 1, got {n_events!r}")
    keys = ("k0_k0bar", "k0_kl", "kl_k0bar", "ks_ks")
    rates = {k: counts.get(k, 0) / n_events for k in keys}
    errors = {k: math.sqrt(rates[k] * (1.0 - rates[k]) / n_events) for k in keys}
    probabilities = ProbabilitySet(
        p_k0_k0bar=rates["k0_k0bar"],
        p_k0_kl=rates["k0_kl"],
        p_kl_k0bar=rates["kl_k0bar"],
        p_ks_ks=rates["ks_ks"],
    )
    margin = ch_margin(probabilities)
    return VerdictReport(
        probabilities=probabilities,
        std_errors=errors,
        margin=margin,
        falsification_pass=rates["k0_k0bar"] > d.ks_misid,
        ch_pass=margin > 0.0,
        counts=dict(counts),
        n_events=n_events,
        seed=seed,
    )


# -- serialization ---------------------------------------------------------------


def serialize_events(events: np.ndarray) -> Iterable[str]:
    """Newline-delimited records, header first:
    ``event_id,left_tag,right_tag,left_t,right_t,truth``."""
    yield "event_id,left_tag,right_tag,left_t,right_t,truth\n"
    for ev in events:
        yield (
            f"{ev['event_id']},{TAG_NAMES[ev['left_tag']]},{TAG_NAMES[ev['right_tag']]},"
            f"{ev['left_t']:.12g},{ev['right_t']:.12g},{TRUTH_NAMES[ev['truth']]}\n"
        )


def write_events(events: np.ndarray, stream: IO[str]) -> None:
    for line in serialize_events(events):
        stream.write(line)
