"""Helper functions for reading and writing overlap_ec text formats."""

from __future__ import annotations

import hashlib
import logging
from fractions import Fraction
from pathlib import Path

from .core import OverlapEcInvalidParametersError, make_instance
from .data import Assignment, EcInstance

_LOGGER = logging.getLogger(__name__)

HEADER_PREFIX = "p ec"
COMMENT_PREFIX = "#"
HEADER_FIELDS = 5

BOUNDS_HEADER = (
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
TRAJECTORY_HEADER = ("t", "c3", "c2", "p", "n", "mode", "r", "schedule-id")


def _parse_int(token: str, line_no: int) -> int:
    try:
        return int(token)
    except ValueError as exception:
        msg = f"Line {line_no}: expected an integer, got '{token}'"
        raise OverlapEcInvalidParametersError(msg) from exception


def parse_instance_text(text: str) -> EcInstance:
    """Parse the 'p ec <n> <m> <k>' instance format."""
    header: tuple[int, int, int] | None = None
    clauses: list[tuple[int, ...]] = []
    for line_no, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(COMMENT_PREFIX):
            continue
        if header is None:
            fields = line.split()
            if fields[:2] != HEADER_PREFIX.split() or len(fields) != HEADER_FIELDS:
                msg = f"Line {line_no}: expected '{HEADER_PREFIX} <n> <m> <k>', got '{line}'"
                raise OverlapEcInvalidParametersError(msg)
            n, m, k = (_parse_int(token, line_no) for token in fields[2:])
            if m < 0:
                msg = f"Line {line_no}: clause count must be nonnegative, got {m}"
                raise OverlapEcInvalidParametersError(msg)
            header = (n, m, k)
            continue
        n, m, k = header
        members = tuple(_parse_int(token, line_no) for token in line.split())
        if len(members) != k or len(set(members)) != k:
            msg = f"Line {line_no}: expected {k} distinct indices, got {members}"
            raise OverlapEcInvalidParametersError(msg)
        if min(members) < 1 or max(members) > n:
            msg = f"Line {line_no}: indices must lie in 1..{n}, got {members}"
            raise OverlapEcInvalidParametersError(msg)
        if len(clauses) == m:
            msg = f"Line {line_no}: more than the {m} declared clauses"
            raise OverlapEcInvalidParametersError(msg)
        clauses.append(members)

    if header is None:
        msg = "Missing instance header"
        raise OverlapEcInvalidParametersError(msg)
    n, m, k = header
    if len(clauses) != m:
        msg = f"Header declares {m} clauses but {len(clauses)} were found"
        raise OverlapEcInvalidParametersError(msg)
    return make_instance(n, k, clauses)


def format_instance(inst: EcInstance) -> str:
    """Serialize an instance; clause members are written sorted."""
    lines = [f"{HEADER_PREFIX} {inst.n} {inst.m} {inst.k}"]
    lines.extend(" ".join(str(v) for v in sorted(clause)) for clause in inst.clauses)
    return "\n".join(lines) + "\n"


def read_instance(path: Path | str) -> EcInstance:
    """Read an instance file."""
    _LOGGER.debug("Reading instance from %s", path)
    return parse_instance_text(Path(path).read_text(encoding="utf-8"))


def write_instance(path: Path | str, inst: EcInstance) -> None:
    """Write an instance file with '\\n' line endings."""
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        handle.write(format_instance(inst))
    _LOGGER.debug("Wrote instance n=%d m=%d to %s", inst.n, inst.m, path)


def instance_digest(inst: EcInstance) -> str:
    """Return the SHA-256 of the canonical serialization."""
    return hashlib.sha256(format_instance(inst).encode("utf-8")).hexdigest()


def format_rational(value: Fraction) -> str:
    """Format a rational as 'p/q' (zero is '0/1')."""
    return f"{value.numerator}/{value.denominator}"


def parse_rational(text: str) -> Fraction:
    """Parse 'p/q' or a plain integer."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exception:
        msg = f"Invalid rational '{text}'"
        raise OverlapEcInvalidParametersError(msg) from exception


def parse_bits(text: str, n: int | None = None) -> Assignment:
    """Parse a bit string such as '0110' into an assignment."""
    bits = text.strip()
    if not bits or set(bits) - {"0", "1"}:
        msg = f"Invalid bit string '{text}'"
        raise OverlapEcInvalidParametersError(msg)
    if n is not None and len(bits) != n:
        msg = f"Bit string has length {len(bits)}, expected {n}"
        raise OverlapEcInvalidParametersError(msg)
    return Assignment.from_bits(bits)
