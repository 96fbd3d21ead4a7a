"""Tests for label-aware integer enums."""

import pytest

from dcw._labeled_enum import BetcKind, LabeledEnum, Strategy


class TestStrategyConstruction:
    """Test the accepted forms of a Strategy."""

    @pytest.mark.parametrize("value", [5, "DCW", "dcw", " Dcw ", Strategy.DCW])
    def test_equivalent_forms(self, value):
        """Test integers, labels and members all give the same member."""
        assert Strategy(value) is Strategy.DCW

    def test_label_differs_from_name(self):
        """Test the canonical label is used for Naive."""
        assert Strategy.NAIVE.label == "Naive"
        assert Strategy("naive") is Strategy.NAIVE
        assert str(Strategy.NAIVE) == "Naive"

    def test_unknown_label(self):
        """Test unknown labels raise ValueError naming the enum."""
        with pytest.raises(ValueError, match="Strategy"):
            Strategy("GARCH")

    def test_unknown_integer(self):
        """Test unknown integers raise ValueError."""
        with pytest.raises(ValueError):
            Strategy(9)

    def test_ordering_follows_values(self):
        """Test members sort from the simplest to the richest model."""
        assert sorted([Strategy.DCW, Strategy.NAIVE, Strategy.DCC]) == [
            Strategy.NAIVE,
            Strategy.DCC,
            Strategy.DCW,
        ]


class TestStrategyProperties:
    """Test derived strategy properties."""

    def test_exposure_grid(self):
        """Test only the short-selling strategies run over the exposure grid."""
        assert [s.label for s in Strategy if s.uses_exposure_grid] == ["RW", "DCC", "DCW"]


class TestBetcKind:
    """Test break-even verdict kinds."""

    def test_labels(self):
        """Test table encodings."""
        assert [k.label for k in BetcKind] == ["A", "N", "<", ">"]

    def test_from_label_and_name(self):
        """Test symbols and member names both resolve."""
        assert BetcKind("<") is BetcKind.PREFERRED_BELOW
        assert BetcKind.from_label("preferred_above") is BetcKind.PREFERRED_ABOVE


def test_label_defaults_to_name():
    """Test a subclass without a label map falls back to member names."""

    class Plain(LabeledEnum):
        FIRST = 1

    assert Plain.FIRST.label == "FIRST"
    assert Plain("first") is Plain.FIRST
