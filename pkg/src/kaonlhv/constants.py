"""Physical inputs: kaon lifetimes, the mass difference, the K_S/K_L overlap,
and a classified decay branching table.

All values come from a human-editable TOML document (a default PDG-sourced
file ships with the package) and carry per-field provenance strings.  Loaded
constants are immutable and safe to share across threads.

Downstream physics works exclusively in K_S-lifetime units through the
``*_per_taus`` properties, so a config may declare its lifetimes in seconds
or directly in tau_S units without changing any result.
"""

from __future__ import annotations

import enum
import functools
import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Mapping

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

__all__ = [
    "TagClass",
    "Parent",
    "BranchingEntry",
    "PhysicalConstants",
    "ConstantsError",
    "load_constants",
    "loads_constants",
    "serialize_constants",
    "default_constants",
]

_REQUIRED_FIELDS = ("tau_S", "tau_L", "delta_m", "ks_kl_overlap", "branching_table")


class ConstantsError(ValueError):
    """Raised when a constants document is missing fields or violates an
    invariant.  ``field`` names the offending entry."""

    def __init__(self, field_name: str, message: str):
        self.field = field_name
        super().__init__(f"{field_name}: {message}")


class TagClass(enum.Enum):
    """How an observed final state reads out in a tagging analysis."""

    KS_TAG = "KS_TAG"          # looks like a K_S decay (two pions)
    KL_LIKE = "KL_LIKE"        # looks like a K_L decay (3pi, semileptonic)
    UNTAGGABLE = "UNTAGGABLE"  # identifies neither parent


class Parent(enum.Enum):
    K_S = "K_S"
    K_L = "K_L"


@dataclass(frozen=True)
class BranchingEntry:
    channel: str
    parent: Parent
    ratio: float
    tag_class: TagClass
    provenance: str = ""


@dataclass(frozen=True)
class PhysicalConstants:
    """Validated, immutable physical inputs.

    ``tau_S`` and ``tau_L`` are stored in the unit the source document
    declared (``lifetime_unit``); ``gamma_S`` and ``gamma_L`` are their exact
    inverses in the matching inverse unit.  ``delta_m`` is always in
    hbar/tau_S.
    """

    tau_S: float
    tau_L: float
    gamma_S: float
    gamma_L: float
    delta_m: float
    ks_kl_overlap: float
    branching_table: tuple[BranchingEntry, ...]
    lifetime_unit: str = "seconds"
    branching_sum_tolerance: float = 1e-2
    provenance: Mapping[str, str] = field(default_factory=dict)

    # -- normalized accessors (tau_S units) ---------------------------------

    @property
    def lifetime_ratio(self) -> float:
        return self.tau_L / self.tau_S

    @property
    def gamma_s_per_taus(self) -> float:
        """K_S width in 1/tau_S units; identically 1 by definition."""
        return 1.0

    @property
    def gamma_l_per_taus(self) -> float:
        return self.tau_S / self.tau_L

    @property
    def delta_m_per_taus(self) -> float:
        return self.delta_m

    # -- branching table queries ---------------------------------------------

    def branching_sum(self, parent: Parent, tag_class: TagClass | None = None) -> float:
        return sum(
            e.ratio
            for e in self.branching_table
            if e.parent is parent and (tag_class is None or e.tag_class is tag_class)
        )

    def two_pi_ratio(self, parent: Parent) -> float:
        """Total branching ratio of the parent into KS_TAG (two-pion) states."""
        return self.branching_sum(parent, TagClass.KS_TAG)

    def channel_classes(self) -> dict[str, TagClass]:
        """Map from channel id to its tag class (parent independent)."""
        return {e.channel: e.tag_class for e in self.branching_table}

    def fingerprint(self) -> str:
        """SHA-256 of the canonical serialization, for output provenance."""
        return hashlib.sha256(serialize_constants(self).encode("utf-8")).hexdigest()

    # -- validation ----------------------------------------------------------

    def validate(self) -> None:
        if not (self.gamma_S > 0 and abs(self.gamma_S * self.tau_S - 1.0) <= 1e-12):
            raise ConstantsError("gamma_S", "must equal 1/tau_S to relative 1e-12")
        if not (self.gamma_L > 0 and abs(self.gamma_L * self.tau_L - 1.0) <= 1e-12):
            raise ConstantsError("gamma_L", "must equal 1/tau_L to relative 1e-12")
        if not self.tau_L > self.tau_S:
            raise ConstantsError("tau_L", "lifetime ordering violated (tau_L must exceed tau_S)")
        if not 0.0 < self.ks_kl_overlap < 1e-2:
            raise ConstantsError("ks_kl_overlap", "must lie in (0, 1e-2)")
        if self.lifetime_unit not in ("seconds", "tau_S"):
            raise ConstantsError("lifetime_unit", "must be 'seconds' or 'tau_S'")
        classes: dict[str, TagClass] = {}
        for i, e in enumerate(self.branching_table):
            if not 0.0 <= e.ratio <= 1.0:
                raise ConstantsError(f"branching_table[{i}].ratio", "must lie in [0, 1]")
            prev = classes.setdefault(e.channel, e.tag_class)
            if prev is not e.tag_class:
                raise ConstantsError(
                    f"branching_table[{i}].tag_class",
                    f"channel {e.channel!r} classified inconsistently across parents",
                )
        for parent in Parent:
            total = self.branching_sum(parent)
            if abs(total - 1.0) > self.branching_sum_tolerance:
                raise ConstantsError(
                    "branching_table",
                    f"{parent.value} ratios sum to {total:.6g}, "
                    f"outside 1 +- {self.branching_sum_tolerance:g}",
                )


# -- parsing / serialization --------------------------------------------------


def loads_constants(text: str) -> PhysicalConstants:
    """Parse a constants document from TOML text and validate it."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConstantsError("document", f"not valid TOML ({exc})") from exc

    for name in _REQUIRED_FIELDS:
        if name not in doc:
            raise ConstantsError(name, "missing required field")

    entries = []
    for i, row in enumerate(doc["branching_table"]):
        for key in ("channel", "parent", "ratio", "tag_class"):
            if key not in row:
                raise ConstantsError(f"branching_table[{i}].{key}", "missing required field")
        try:
            parent = Parent(row["parent"])
        except ValueError:
            raise ConstantsError(
                f"branching_table[{i}].parent", f"unknown parent {row['parent']!r}"
            ) from None
        try:
            tag_class = TagClass(row["tag_class"])
        except ValueError:
            raise ConstantsError(
                f"branching_table[{i}].tag_class", f"unknown tag class {row['tag_class']!r}"
            ) from None
        entries.append(
            BranchingEntry(
                channel=str(row["channel"]),
                parent=parent,
                ratio=float(row["ratio"]),
                tag_class=tag_class,
                provenance=str(row.get("provenance", "")),
            )
        )

    tau_s = float(doc["tau_S"])
    tau_l = float(doc["tau_L"])
    if tau_s <= 0:
        raise ConstantsError("tau_S", "must be positive")
    if tau_l <= 0:
        raise ConstantsError("tau_L", "must be positive")

    constants = PhysicalConstants(
        tau_S=tau_s,
        tau_L=tau_l,
        gamma_S=1.0 / tau_s,
        gamma_L=1.0 / tau_l,
        delta_m=float(doc["delta_m"]),
        ks_kl_overlap=float(doc["ks_kl_overlap"]),
        branching_table=tuple(entries),
        lifetime_unit=str(doc.get("lifetime_unit", "seconds")),
        branching_sum_tolerance=float(doc.get("branching_sum_tolerance", 1e-2)),
        provenance={str(k): str(v) for k, v in doc.get("provenance", {}).items()},
    )
    constants.validate()
    return constants


def load_constants(path: str | Path) -> PhysicalConstants:
    """Load and validate a constants document from ``path``."""
    return loads_constants(Path(path).read_text(encoding="utf-8"))


def _toml_str(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def serialize_constants(c: PhysicalConstants) -> str:
    """Emit TOML that :func:`loads_constants` parses back to an equal value.

    Floats are written with ``repr`` so the round trip is exact.
    """
    lines = [
        f"lifetime_unit = {_toml_str(c.lifetime_unit)}",
        f"tau_S = {c.tau_S!r}",
        f"tau_L = {c.tau_L!r}",
        f"delta_m = {c.delta_m!r}",
        f"ks_kl_overlap = {c.ks_kl_overlap!r}",
        f"branching_sum_tolerance = {c.branching_sum_tolerance!r}",
        "",
        "[provenance]",
    ]
    lines += [f"{key} = {_toml_str(value)}" for key, value in c.provenance.items()]
    for e in c.branching_table:
        lines += [
            "",
            "[[branching_table]]",
            f"channel = {_toml_str(e.channel)}",
            f"parent = {_toml_str(e.parent.value)}",
            f"ratio = {e.ratio!r}",
            f"tag_class = {_toml_str(e.tag_class.value)}",
            f"provenance = {_toml_str(e.provenance)}",
        ]
    return "\n".join(lines) + "\n"


@functools.lru_cache(maxsize=1)
def default_constants() -> PhysicalConstants:
    """The PDG-sourced constants file shipped with the package."""
    text = resources.files("kaonlhv").joinpath("data/constants.toml").read_text("utf-8")
    return loads_constants(text)
