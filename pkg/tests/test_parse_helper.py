"""Tests for the instance text format and small parsing helpers."""

from fractions import Fraction

import pytest

from overlap_ec.core import OverlapEcInvalidParametersError, make_instance
from overlap_ec.parse_helper import (
    BOUNDS_HEADER,
    TRAJECTORY_HEADER,
    format_instance,
    format_rational,
    instance_digest,
    parse_bits,
    parse_instance_text,
    parse_rational,
    read_instance,
    write_instance,
)


def test_format_instance_sorts_members():
    inst = make_instance(4, 3, [(4, 2, 1)])
    assert format_instance(inst) == "p ec 4 1 3\n1 2 4\n"


def test_parse_skips_comments_and_blank_lines():
    text = "# generated\np ec 5 2 3\n\n3 2 1\n# middle\n5 4 3\n"
    inst = parse_instance_text(text)
    assert (inst.n, inst.m, inst.k) == (5, 2, 3)
    assert inst.clauses == ((1, 2, 3), (3, 4, 5))


def test_parse_empty_instance():
    inst = parse_instance_text("p ec 2 0 3\n")
    assert inst.m == 0
    assert inst.n == 2


@pytest.mark.parametrize(
    ("text", "fragment"),
    [
        ("", "Missing instance header"),
        ("p cnf 3 1 3\n1 2 3\n", "Line 1"),
        ("p ecx 3 1 3\n1 2 3\n", "Line 1"),
        ("p ec3 1 3 3\n1 2 3\n", "Line 1"),
        ("p ec 3 1 3\n1 2\n", "Line 2"),
        ("p ec 3 1 3\n1 2 4\n", "Line 2"),
        ("p ec 3 1 3\n1 1 2\n", "Line 2"),
        ("p ec 3 1 3\n1 2 x\n", "Line 2"),
        ("p ec 3 2 3\n1 2 3\n", "declares 2 clauses"),
        ("p ec 3 1 3\n1 2 3\n1 2 3\n", "Line 3"),
    ],
)
def test_parse_rejects_malformed_text(text, fragment):
    with pytest.raises(OverlapEcInvalidParametersError, match=fragment):
        parse_instance_text(text)


def test_write_then_read(tmp_path, single_clause):
    path = tmp_path / "inst.txt"
    write_instance(path, single_clause)
    assert path.read_bytes() == b"p ec 3 1 3\n1 2 3\n"
    assert read_instance(path) == single_clause


def test_instance_digest_is_canonical():
    first = make_instance(4, 3, [(3, 2, 1)])
    second = parse_instance_text("# comment\np ec 4 1 3\n1 2 3\n")
    assert instance_digest(first) == instance_digest(second)
    assert len(instance_digest(first)) == 64


def test_rationals():
    assert format_rational(Fraction(1, 3)) == "1/3"
    assert format_rational(Fraction(0)) == "0/1"
    assert parse_rational("2/6") == Fraction(1, 3)
    assert parse_rational("0.5") == Fraction(1, 2)
    with pytest.raises(OverlapEcInvalidParametersError):
        parse_rational("1/0")
    with pytest.raises(OverlapEcInvalidParametersError):
        parse_rational("one third")


def test_parse_bits():
    assignment = parse_bits("0110")
    assert assignment.values == (0, 1, 1, 0)
    assert assignment.code == 6
    with pytest.raises(OverlapEcInvalidParametersError):
        parse_bits("0120")
    with pytest.raises(OverlapEcInvalidParametersError):
        parse_bits("01", n=3)


def test_headers_are_stable():
    assert BOUNDS_HEADER == (
        "q",
        "q_k",
        "root",
        "x_max",
        "G_r_up",
        "r_up",
        "residual",
        "r_lb",
        "status",
    )
    assert TRAJECTORY_HEADER == ("t", "c3", "c2", "p", "n", "mode", "r", "schedule-id")
