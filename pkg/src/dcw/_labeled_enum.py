"""Integer enums with canonical string labels.

Strategies and break-even verdicts are identified by small integers internally and by
short labels ("DCW", "RW", "A", "<") in configuration files and report tables. This
module provides a base enum class that accepts either form.
"""

from __future__ import annotations

import sys
from enum import IntEnum

if sys.version_info >= (3, 11):
    from typing import Self
else:
    from typing_extensions import Self


class LabeledEnum(IntEnum):
    """Base class for enums constructible from an integer or a label.

    Subclasses override `_get_label_map()` to provide the mapping of integer values
    to canonical string labels.

    Example:
        class Strategy(LabeledEnum):
            NAIVE = 1
            DCW = 5

            @classmethod
            def _get_label_map(cls) -> dict[int, str]:
                return {1: "Naive", 5: "DCW"}

        # All equivalent:
        Strategy.DCW
        Strategy(5)
        Strategy("DCW")
        Strategy("dcw")  # case-insensitive

        # Unknown strings raise ValueError:
        Strategy("GARCH")
    """

    @classmethod
    def _get_label_map(cls) -> dict[int, str]:
        """Get the mapping of enum values to labels.

        Returns:
            Dictionary mapping integer enum values to canonical string labels
        """
        return {}

    @property
    def label(self) -> str:
        """Return the canonical label for this value.

        Example:
            >>> Strategy.DCW.label
            'DCW'
        """
        label_map = self.__class__._get_label_map()
        return label_map.get(self.value, self.name)

    @classmethod
    def from_label(cls, label: str) -> Self:
        """Create enum from string label or member name (case-insensitive).

        Args:
            label: Label such as "DCW", "dcw" or "Naive"

        Returns:
            The matching enum member

        Raises:
            ValueError: If label doesn't match any known enum value
        """
        normalized = label.strip().lower()
        for value, lbl in cls._get_label_map().items():
            if lbl.lower() == normalized:
                return cls(value)
        for member in cls:
            if member.name.lower() == normalized:
                return member
        raise ValueError(f"Unknown {cls.__name__} label: {label!r}")

    @classmethod
    def _missing_(cls, value: object) -> Self:
        """Handle construction from string labels.

        Raises:
            ValueError: If the value is neither a member value nor a known label
        """
        if isinstance(value, str):
            return cls.from_label(value)
        raise ValueError(f"{value!r} is not a valid {cls.__name__}")

    def __str__(self) -> str:
        return self.label


class Strategy(LabeledEnum):
    """Allocation strategies compared by the backtest."""

    NAIVE = 1
    VT = 2
    RW = 3
    DCC = 4
    DCW = 5

    @classmethod
    def _get_label_map(cls) -> dict[int, str]:
        return {1: "Naive", 2: "VT", 3: "RW", 4: "DCC", 5: "DCW"}

    @property
    def uses_exposure_grid(self) -> bool:
        """Whether the strategy is evaluated across the exposure-constraint grid.

        Naive and VT weights are long-only by construction, so their exposure is 1.
        """
        return self in (Strategy.RW, Strategy.DCC, Strategy.DCW)


class BetcKind(LabeledEnum):
    """Preference regions of a strategy switch as a function of cost per unit risk aversion."""

    ALWAYS = 1
    NEVER = 2
    PREFERRED_BELOW = 3
    PREFERRED_ABOVE = 4

    @classmethod
    def _get_label_map(cls) -> dict[int, str]:
        return {1: "A", 2: "N", 3: "<", 4: ">"}
