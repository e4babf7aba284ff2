"""Custom types for overlap_ec."""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Literal

import numpy as np

TrajectoryMode = Literal["closed-form", "paper-ode", "recurrence-ode", "empirical"]
FailReason = Literal[
    "contradiction",
    "non-bipartite",
    "oversized-component",
    "window-unreachable",
    "error",
]


@dataclass(frozen=True)
class EcInstance:
    """A random 1-in-k formula over variables 1..n."""

    n: int
    k: int
    clauses: tuple[tuple[int, ...], ...]

    @property
    def m(self) -> int:
        """Return the clause count."""
        return len(self.clauses)

    @cached_property
    def clause_array(self) -> np.ndarray:
        """Return the clauses as an (m, k) array of 1-based indices."""
        if not self.clauses:
            return np.zeros((0, self.k), dtype=np.int64)
        return np.asarray(self.clauses, dtype=np.int64)


@dataclass(frozen=True, order=True)
class Assignment:
    """A Boolean valuation; values[i - 1] is the value of variable i."""

    values: tuple[int, ...]

    @property
    def n(self) -> int:
        """Return the number of variables."""
        return len(self.values)

    @classmethod
    def from_bits(cls, bits: str) -> Assignment:
        """Build an assignment from a string such as '100'."""
        return cls(tuple(1 if ch == "1" else 0 for ch in bits))

    @classmethod
    def from_code(cls, code: int, n: int) -> Assignment:
        """Build an assignment from an integer whose leading bit is variable 1."""
        return cls(tuple((code >> (n - i)) & 1 for i in range(1, n + 1)))

    @classmethod
    def from_array(cls, values: np.ndarray) -> Assignment:
        """Build an assignment from a 0/1 array."""
        return cls(tuple(int(v) for v in values))

    @property
    def bits(self) -> str:
        """Return the assignment as a bit string."""
        return "".join(str(v) for v in self.values)

    @property
    def code(self) -> int:
        """Return the integer code (variable 1 is the most significant bit)."""
        return int(self.bits, 2) if self.values else 0

    @property
    def array(self) -> np.ndarray:
        """Return the values as a uint8 array."""
        return np.asarray(self.values, dtype=np.uint8)

    def complement(self) -> Assignment:
        """Return the bitwise complement."""
        return Assignment(tuple(1 - v for v in self.values))


@dataclass(frozen=True)
class ClausePairProfile:
    """Counts of one clause's variables in each (A, B) value class."""

    c0: int
    c1: int
    c2: int
    c3: int

    @property
    def k(self) -> int:
        return self.c0 + self.c1 + self.c2 + self.c3


@dataclass(frozen=True)
class GlobalPairProfile:
    """Sizes of the classes A=B=0, A=0 B=1, A=1 B=0 and A=B=1."""

    a: int
    b: int
    c: int
    d: int

    @property
    def n(self) -> int:
        return self.a + self.b + self.c + self.d

    @property
    def agreements(self) -> int:
        return self.a + self.d


@dataclass(frozen=True)
class OverlapWindow:
    """Overlap target q with half-width epsilon_n / n."""

    q: float
    epsilon_n: float

    # Absorbs float noise on exact rational endpoints such as 1/3.
    SLACK = 1e-12

    @classmethod
    def for_size(cls, q: float, n: int, epsilon_exponent: float) -> OverlapWindow:
        """Build the window with epsilon(n) = n ** epsilon_exponent."""
        return cls(q=q, epsilon_n=float(n) ** epsilon_exponent)

    def bounds(self, n: int) -> tuple[float, float]:
        """Return the window clipped to [0, 1]."""
        half = self.epsilon_n / n
        return max(0.0, self.q - half), min(1.0, self.q + half)

    def admits(self, agreements: int, n: int) -> bool:
        """Return whether a pair with this many agreeing variables is in the window."""
        lo, hi = self.bounds(n)
        overlap = agreements / n
        return lo - self.SLACK <= overlap <= hi + self.SLACK

    def admitted_agreements(self, n: int) -> np.ndarray:
        """Return every agreement count in 0..n that the window admits."""
        lo, hi = self.bounds(n)
        counts = np.arange(n + 1)
        overlap = counts / n
        return counts[(overlap >= lo - self.SLACK) & (overlap <= hi + self.SLACK)]


@dataclass(frozen=True)
class RngSpec:
    """Seed and stream id of a random stream."""

    seed: int
    stream_id: int = 0

    def derive(self, stream_id: int) -> RngSpec:
        """Return the spec of another stream under the same master seed."""
        return RngSpec(seed=self.seed, stream_id=stream_id)


@dataclass(frozen=True)
class SolutionSet:
    """All satisfying assignments of an instance, lexicographically ordered."""

    solutions: tuple[Assignment, ...]
    instance_ref: str
    n: int

    def __len__(self) -> int:
        return len(self.solutions)

    @cached_property
    def matrix(self) -> np.ndarray:
        """Return the solutions as an (S, n) uint8 matrix."""
        if not self.solutions:
            return np.zeros((0, self.n), dtype=np.uint8)
        return np.asarray([s.values for s in self.solutions], dtype=np.uint8)

    @cached_property
    def codes(self) -> np.ndarray:
        """Return the integer code of every solution (sorted ascending)."""
        weights = np.left_shift(np.int64(1), np.arange(self.n - 1, -1, -1, dtype=np.int64))
        return self.matrix.astype(np.int64) @ weights


@dataclass(frozen=True)
class ClusterReport:
    """Components of the solution graph at Hamming radius l."""

    l: int  # noqa: E741
    components: tuple[tuple[int, ...], ...]
    diameters: tuple[int, ...] | None

    @property
    def sizes(self) -> list[int]:
        return [len(component) for component in self.components]


@dataclass(frozen=True)
class StationaryDomain:
    """Domain of F for one (k, q)."""

    k: int
    q: float
    q_k: float
    root: float
    x_max: float
    residual: float

    @property
    def logit_max(self) -> float:
        """Return ln(x_max / (q - x_max)), infinite when x_max reaches q."""
        if self.x_max >= self.q:
            return float("inf")
        return float(np.log(self.x_max / (self.q - self.x_max)))


@dataclass(frozen=True)
class BoundResult:
    """Outcome of locating r_up for one (k, q)."""

    r_value: float
    residual: float
    bracket: tuple[float, float]
    iterations: int
    status: Literal["ok", "undetermined"] = "ok"
    alpha: float = float("nan")
    scan: tuple[tuple[float, float], ...] = ()


@dataclass(frozen=True)
class BoundRow:
    """One row of a bound curve."""

    q: float
    q_k: float
    root: float
    x_max: float
    g_r_up: float
    r_up: float
    residual: float
    r_lb: float
    status: str


@dataclass(frozen=True)
class TrajectorySample:
    """Scaled counts at scaled time t."""

    t: float
    c3: float
    c2: float
    p: float
    n: float


@dataclass(frozen=True)
class TrajectoryCurve:
    """A sampled trajectory of one kind."""

    samples: tuple[TrajectorySample, ...]
    mode: TrajectoryMode
    r: float = float("nan")
    schedule_id: str = ""

    def column(self, name: str) -> np.ndarray:
        """Return one column (t, c3, c2, p or n) as an array."""
        return np.asarray([getattr(s, name) for s in self.samples], dtype=float)

    def interpolate(self, name: str, t_grid: np.ndarray) -> np.ndarray:
        """Linearly interpolate a column onto t_grid."""
        return np.interp(t_grid, self.column("t"), self.column(name))


@dataclass(frozen=True)
class Pair:
    """Two satisfying assignments from one run."""

    a: Assignment
    b: Assignment
    components: tuple[tuple[int, ...], ...]

    @property
    def overlap(self) -> float:
        agreements = sum(x == y for x, y in zip(self.a.values, self.b.values, strict=True))
        return agreements / self.a.n if self.a.n else 1.0


@dataclass(frozen=True)
class Fail:
    """A failed run or tuning attempt."""

    reason: FailReason
    step: int
    detail: str = ""


@dataclass(frozen=True)
class RunStats:
    """Per-run diagnostics."""

    t2_emp: float | None = None
    graph_edges: int = 0
    graph_vertices: int = 0
    max_component: int = 0
    bipartite: bool = True
    mean_degree: float = 0.0
    steps: int = 0
    schedule_clamped: bool = False
    peak_pos: int = 0
    peak_neg: int = 0


@dataclass(frozen=True)
class RunResult:
    """Outcome, trajectory and diagnostics of one run."""

    outcome: Pair | Fail
    trajectory: TrajectoryCurve | None
    stats: RunStats
    step_log: tuple[dict[str, Any], ...] | None = None

    @property
    def ok(self) -> bool:
        return isinstance(self.outcome, Pair)


@dataclass(frozen=True)
class StepEffects:
    """Transitions caused by setting one variable."""

    variable: int
    value: bool
    removed: int = 0
    shrunk: int = 0
    neg_pushes: int = 0
    pos_pushes: int = 0


@dataclass(frozen=True)
class TunedPair:
    """A pair moved into an overlap window by flipping components of B."""

    a: Assignment
    b: Assignment
    flipped: tuple[int, ...]
    overlap: float


@dataclass(frozen=True)
class EndgameDensity:
    """Mean degree of the endgame graph at t2."""

    mu: float
    supercritical: bool


@dataclass(frozen=True)
class RunManifest:
    """Everything needed to reproduce a result file."""

    tool_version: str
    command_line: tuple[str, ...]
    master_seed: int
    instance_digest: str | None
    wall_time: float
    derived_seeds: tuple[tuple[int, int], ...] = ()
    rounding: str = "m = round(r * n), ties to even"
    outputs: tuple[str, ...] = ()


@dataclass(frozen=True)
class SweepConfig:
    """A validated parameter sweep."""

    seed: int
    threads: int
    k: tuple[int, ...]
    q: tuple[float, ...]
    r: tuple[float, ...]
    n: tuple[int, ...]
    runs_per_point: int
    schedule: str
    schedule_epsilon: float
    epsilon_exponent: float
    f_of_n: str
    drain: str
    tolerance: float
    output: str
    logger: dict[str, Any] = field(default_factory=dict)
