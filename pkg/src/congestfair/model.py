"""Problem instances, preferences and assignments.

Everything is exact: congestion, weights and utilities are
:class:`fractions.Fraction` (or ``int``), never floats.

Posts and agents carry string labels for I/O but every algorithm works on
dense indices ``0..m-1`` / ``0..n-1``.
"""
from __future__ import annotations

import enum
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

Number = Union[int, Fraction]


class ModelError(ValueError):
    """An instance, preference or assignment violates a model invariant."""


class DomainError(ModelError):
    """A utility was evaluated below the agent's congestion floor."""


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        raise ModelError(f"refusing float {x!r}; pass ints, Fractions or 'p/q' strings")
    return Fraction(x)


def fmt(x: Number) -> str:
    """Render a rational as ``p`` or ``p/q``."""
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


class Cmp(enum.IntEnum):
    WORSE = -1
    EQUAL = 0
    BETTER = 1


# ---------------------------------------------------------------------------
# preferences
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RankedPreference:
    """Ordinal anonymous preference given as rank levels.

    ``levels[a][s-1]`` is the rank of allocation ``(a, s)``; lower is better
    and equal levels are indifferent.
    """

    levels: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(tuple(int(v) for v in row) for row in self.levels))
        for a, row in enumerate(self.levels):
            for s in range(len(row) - 1):
                if not row[s] < row[s + 1]:
                    raise ModelError(
                        f"ranking not strictly worse in congestion at post {a}, s={s + 1}"
                    )

    @property
    def cardinal(self) -> bool:
        return False

    def key(self, post: int, s: Number) -> int:
        s = as_fraction(s)
        if s.denominator != 1 or not 1 <= s <= len(self.levels[post]):
            raise DomainError(f"ranked preference undefined at congestion {fmt(s)}")
        return -self.levels[post][int(s) - 1]


@dataclass(frozen=True)
class TableUtility:
    """Cardinal anonymous utility ``values[a][s-1] = u(a, s)`` for s in 1..n.

    Calling the object interpolates linearly between integer congestion
    levels, so ``u(a, 17/4)`` is defined for any rational in ``[1, n]``.
    """

    values: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "values", tuple(tuple(as_fraction(v) for v in row) for row in self.values)
        )
        for a, row in enumerate(self.values):
            for s in range(len(row) - 1):
                if not row[s] > row[s + 1]:
                    raise ModelError(
                        f"utility not strictly decreasing at post {a}, s={s + 1}"
                    )

    @property
    def cardinal(self) -> bool:
        return True

    @property
    def n(self) -> int:
        return len(self.values[0])

    def key(self, post: int, s: Number) -> Fraction:
        return self(post, s)

    def __call__(self, post: int, sigma: Number) -> Fraction:
        sigma = as_fraction(sigma)
        row = self.values[post]
        if sigma < 1 or sigma > len(row):
            raise DomainError(f"u({post}, {fmt(sigma)}) is outside [1, {len(row)}]")
        lo = sigma.numerator // sigma.denominator
        if lo == sigma:
            return row[lo - 1]
        frac = sigma - lo
        return (1 - frac) * row[lo - 1] + frac * row[lo]

    def as_piecewise(self) -> "PiecewiseUtility":
        n = self.n
        return PiecewiseUtility(
            tuple(tuple((Fraction(s), row[s - 1]) for s in range(1, n + 1)) for row in self.values)
        )

    @classmethod
    def slack(cls, caps: Sequence[Number], n: int) -> "TableUtility":
        """Slack utility ``u(a, s) = caps[a] - s``."""
        return cls(tuple(tuple(as_fraction(c) - s for s in range(1, n + 1)) for c in caps))


@dataclass(frozen=True)
class PiecewiseUtility:
    """Piecewise-linear cardinal utility of (possibly weighted) congestion.

    ``pieces[a]`` lists breakpoints ``(z, u)`` with strictly increasing ``z``
    and strictly decreasing ``u``.  The first breakpoint is the agent's floor
    (their own weight) and the last one the total weight.
    """

    pieces: tuple[tuple[tuple[Fraction, Fraction], ...], ...]

    def __post_init__(self):
        pieces = tuple(
            tuple((as_fraction(z), as_fraction(u)) for z, u in row) for row in self.pieces
        )
        object.__setattr__(self, "pieces", pieces)
        if not pieces:
            raise ModelError("piecewise utility needs at least one post")
        floor, ceiling = pieces[0][0][0], pieces[0][-1][0]
        for a, row in enumerate(pieces):
            if row[0][0] != floor or row[-1][0] != ceiling:
                raise ModelError(f"post {a}: breakpoints must span the same range")
            for (z0, u0), (z1, u1) in zip(row, row[1:]):
                if not z0 < z1:
                    raise ModelError(f"post {a}: breakpoints must increase")
                if not u0 > u1:
                    raise ModelError(f"post {a}: utility must strictly decrease in congestion")
        object.__setattr__(self, "_zs", tuple(tuple(z for z, _ in row) for row in pieces))

    @property
    def cardinal(self) -> bool:
        return True

    @property
    def floor(self) -> Fraction:
        return self.pieces[0][0][0]

    @property
    def ceiling(self) -> Fraction:
        return self.pieces[0][-1][0]

    def key(self, post: int, z: Number) -> Fraction:
        return self(post, z)

    def __call__(self, post: int, z: Number) -> Fraction:
        z = as_fraction(z)
        row = self.pieces[post]
        if z < row[0][0] or z > row[-1][0]:
            raise DomainError(
                f"u({post}, {fmt(z)}) is outside [{fmt(row[0][0])}, {fmt(row[-1][0])}]"
            )
        k = bisect_right(self._zs[post], z) - 1
        if k >= len(row) - 1:
            return row[-1][1]
        (z0, u0), (z1, u1) = row[k], row[k + 1]
        return u0 + (u1 - u0) * (z - z0) / (z1 - z0)

    def breakpoints(self, post: int) -> tuple[Fraction, ...]:
        return self._zs[post]

    @classmethod
    def slack(cls, caps: Sequence[Number], weight: Number, total: Number) -> "PiecewiseUtility":
        """Slack utility ``u(a, z) = caps[a] - z`` on ``[weight, total]``."""
        w, W = as_fraction(weight), as_fraction(total)
        if w == W:
            raise ModelError("a slack utility needs a non-degenerate range; use a single point table")
        return cls(tuple(((w, as_fraction(c) - w), (W, as_fraction(c) - W)) for c in caps))


Preference = Union[RankedPreference, TableUtility, PiecewiseUtility]


def eval_utility(u: Union[TableUtility, PiecewiseUtility], post: int, sigma: Number) -> Fraction:
    """Exact utility at a (possibly fractional) congestion.

    The caller is responsible for clamping ``sigma`` up to the agent's floor
    (1, or the agent's weight); below it a :class:`DomainError` is raised.
    """
    return u(post, sigma)


def compare(pref: Preference, first: tuple[int, Number], second: tuple[int, Number]) -> Cmp:
    """Compare two allocations ``(post, congestion)`` for one agent."""
    k1, k2 = pref.key(*first), pref.key(*second)
    return Cmp.BETTER if k1 > k2 else Cmp.WORSE if k1 < k2 else Cmp.EQUAL


# ---------------------------------------------------------------------------
# problems
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Problem:
    """A congested assignment problem.

    ``weights`` is ``None`` for anonymous congestion (each agent adds one
    unit).  ``prefixes`` optionally overrides the per-agent caps used by the
    guarantee computations; when absent they are derived from preferences.
    """

    posts: tuple[str, ...]
    agents: tuple[str, ...]
    preferences: tuple[Preference, ...]
    weights: tuple[Fraction, ...] | None = None
    prefixes: tuple[tuple[Fraction, ...] | None, ...] | None = None
    _post_index: dict = field(init=False, repr=False, compare=False)
    _agent_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "posts", tuple(self.posts))
        object.__setattr__(self, "agents", tuple(self.agents))
        object.__setattr__(self, "preferences", tuple(self.preferences))
        if not self.posts:
            raise ModelError("a problem needs at least one post")
        if not self.agents:
            raise ModelError("a problem needs at least one agent")
        if len(set(self.posts)) != len(self.posts):
            raise ModelError("duplicate post label")
        if len(set(self.agents)) != len(self.agents):
            raise ModelError("duplicate agent label")
        if len(self.preferences) != len(self.agents):
            raise ModelError("one preference per agent required")
        if self.weights is not None:
            ws = tuple(as_fraction(w) for w in self.weights)
            if len(ws) != len(self.agents):
                raise ModelError("one weight per agent required")
            if any(w <= 0 for w in ws):
                raise ModelError("weights must be strictly positive")
            object.__setattr__(self, "weights", ws)
        if self.prefixes is not None:
            px = tuple(
                None if caps is None else tuple(as_fraction(c) for c in caps)
                for caps in self.prefixes
            )
            if len(px) != len(self.agents):
                raise ModelError("prefix overrides must list every agent")
            object.__setattr__(self, "prefixes", px)
        object.__setattr__(self, "_post_index", {p: k for k, p in enumerate(self.posts)})
        object.__setattr__(self, "_agent_index", {a: k for k, a in enumerate(self.agents)})
        self._validate_preferences()

    def _validate_preferences(self):
        m, n = self.m, self.n
        for i, pref in enumerate(self.preferences):
            name = self.agents[i]
            if self.weighted:
                if not isinstance(pref, PiecewiseUtility):
                    raise ModelError(f"{name}: weighted problems need piecewise utilities")
                if len(pref.pieces) != m:
                    raise ModelError(f"{name}: utility covers {len(pref.pieces)} posts, expected {m}")
                if pref.floor != self.weights[i] or pref.ceiling != self.total:
                    raise ModelError(
                        f"{name}: utility must be defined on [{fmt(self.weights[i])}, {fmt(self.total)}]"
                    )
            else:
                if isinstance(pref, PiecewiseUtility):
                    raise ModelError(f"{name}: anonymous problems need tables or rankings")
                rows = pref.levels if isinstance(pref, RankedPreference) else pref.values
                if len(rows) != m or any(len(r) != n for r in rows):
                    raise ModelError(f"{name}: preference must be an {m} x {n} table")
            if self.prefixes is not None and self.prefixes[i] is not None:
                if len(self.prefixes[i]) != m:
                    raise ModelError(f"{name}: prefix needs {m} caps")

    # sizes ---------------------------------------------------------------

    @property
    def n(self) -> int:
        return len(self.agents)

    @property
    def m(self) -> int:
        return len(self.posts)

    @property
    def weighted(self) -> bool:
        return self.weights is not None

    @property
    def total(self) -> Fraction:
        """n for anonymous problems, W for weighted ones."""
        return sum(self.weights, Fraction(0)) if self.weighted else Fraction(self.n)

    def weight(self, i: int) -> Fraction:
        return self.weights[i] if self.weighted else Fraction(1)

    def floor(self, i: int) -> Fraction:
        """Congestion an agent perceives at an empty post (1 or its weight)."""
        return self.weight(i)

    @property
    def cardinal(self) -> bool:
        return all(p.cardinal for p in self.preferences)

    # labels --------------------------------------------------------------

    def post_index(self, post: str | int) -> int:
        return post if isinstance(post, int) else self._post_index[post]

    def agent_index(self, agent: str | int) -> int:
        return agent if isinstance(agent, int) else self._agent_index[agent]

    def utility(self, i: int, post: int, congestion: Number):
        """Preference key of agent ``i`` at ``(post, congestion)``.  Higher is better."""
        return self.preferences[i].key(post, congestion)

    def with_weights(self, weights) -> "Problem":
        """Unit-weight (or other) weighted encoding; anonymous tables become piecewise."""
        weights = tuple(as_fraction(w) for w in weights)
        prefs = []
        for pref in self.preferences:
            if not isinstance(pref, TableUtility):
                raise ModelError("only cardinal tables can be re-encoded as weighted")
            prefs.append(pref.as_piecewise())
        return Problem(self.posts, self.agents, tuple(prefs), weights=weights)


# ---------------------------------------------------------------------------
# assignments and lotteries
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class Assignment:
    """``placement[i]`` is the post index agent ``i`` is assigned to."""

    placement: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "placement", tuple(int(p) for p in self.placement))

    @classmethod
    def from_labels(cls, problem: Problem, mapping: dict) -> "Assignment":
        if set(mapping) != set(problem.agents):
            raise ModelError("assignment must place every agent exactly once")
        return cls(tuple(problem.post_index(mapping[a]) for a in problem.agents))

    @classmethod
    def from_groups(cls, problem: Problem, groups: dict) -> "Assignment":
        """Build from ``{post: [agents...]}``."""
        placement = [None] * problem.n
        for post, members in groups.items():
            for a in members:
                i = problem.agent_index(a)
                if placement[i] is not None:
                    raise ModelError(f"agent {a} placed twice")
                placement[i] = problem.post_index(post)
        if any(p is None for p in placement):
            raise ModelError("assignment must place every agent")
        return cls(tuple(placement))

    def validate(self, problem: Problem) -> None:
        if len(self.placement) != problem.n or any(
            not 0 <= p < problem.m for p in self.placement
        ):
            raise ModelError("assignment does not match the problem")

    def members(self, m: int) -> tuple[tuple[int, ...], ...]:
        groups = [[] for _ in range(m)]
        for i, p in enumerate(self.placement):
            groups[p].append(i)
        return tuple(tuple(g) for g in groups)

    def congestion(self, problem: Problem) -> tuple[Fraction, ...]:
        s = [Fraction(0)] * problem.m
        for i, p in enumerate(self.placement):
            s[p] += problem.weight(i)
        return tuple(s)

    def counts(self, m: int) -> tuple[int, ...]:
        s = [0] * m
        for p in self.placement:
            s[p] += 1
        return tuple(s)

    def utilities(self, problem: Problem) -> tuple:
        s = self.congestion(problem)
        return tuple(problem.utility(i, p, s[p]) for i, p in enumerate(self.placement))

    def labeled(self, problem: Problem) -> dict[str, str]:
        return {problem.agents[i]: problem.posts[p] for i, p in enumerate(self.placement)}

    def describe(self, problem: Problem) -> str:
        groups = self.members(problem.m)
        return "  ".join(
            f"{problem.posts[a]}:{','.join(problem.agents[i] for i in g) or '-'}"
            for a, g in enumerate(groups)
        )


@dataclass(frozen=True)
class Lottery:
    """Finitely many deterministic assignments with rational probabilities."""

    entries: tuple[tuple[Assignment, Fraction], ...]

    def __post_init__(self):
        entries = tuple((a, as_fraction(p)) for a, p in self.entries)
        object.__setattr__(self, "entries", entries)
        if not entries:
            raise ModelError("a lottery needs at least one entry")
        if any(p <= 0 for _, p in entries):
            raise ModelError("lottery probabilities must be positive")
        if sum(p for _, p in entries) != 1:
            raise ModelError("lottery probabilities must sum to 1")

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def expected_congestion(self, problem: Problem) -> tuple[Fraction, ...]:
        out = [Fraction(0)] * problem.m
        for a, p in self.entries:
            for x, s in enumerate(a.congestion(problem)):
                out[x] += p * s
        return tuple(out)

    def expected_utilities(self, problem: Problem) -> tuple[Fraction, ...]:
        out = [Fraction(0)] * problem.n
        for a, p in self.entries:
            for i, u in enumerate(a.utilities(problem)):
                out[i] += p * u
        return tuple(out)

    def merged(self) -> "Lottery":
        """Combine repeated assignments, ordered by decreasing probability then placement."""
        acc: dict[Assignment, Fraction] = {}
        for a, p in self.entries:
            acc[a] = acc.get(a, Fraction(0)) + p
        return Lottery(tuple(sorted(acc.items(), key=lambda kv: (-kv[1], kv[0]))))


@dataclass(frozen=True)
class StochasticMatrix:
    """Agent-by-post probability matrix whose rows each sum to one."""

    rows: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        rows = tuple(tuple(as_fraction(v) for v in r) for r in self.rows)
        object.__setattr__(self, "rows", rows)
        for i, r in enumerate(rows):
            if any(v < 0 or v > 1 for v in r):
                raise ModelError(f"row {i}: entries must lie in [0, 1]")
            if sum(r) != 1:
                raise ModelError(f"row {i} sums to {fmt(sum(r))}, expected 1")

    def column_sums(self, weights: Sequence[Fraction] | None = None) -> tuple[Fraction, ...]:
        m = len(self.rows[0])
        if weights is None:
            return tuple(sum((r[x] for r in self.rows), Fraction(0)) for x in range(m))
        return tuple(
            sum((w * r[x] for w, r in zip(weights, self.rows)), Fraction(0)) for x in range(m)
        )

    def support(self) -> tuple[frozenset[int], ...]:
        return tuple(frozenset(x for x, v in enumerate(r) if v > 0) for r in self.rows)
