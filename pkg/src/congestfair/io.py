"""Problem, assignment and lottery files.

Problem files are line oriented::

    congestfair v1
    model anonymous            # or: weighted
    posts a b c
    agent al1 al2 al3          # consecutive agents sharing one block
      slack 6 4 2              # u(x, s) = cap_x - s
    agent be1 weight 3/2
      utility a 4 3 1          # table u(a, 1..n)          (anonymous)
      ranking b 1 2 5          # rank levels, lower is better (anonymous)
      piecewise a 3/2:7 6:1    # breakpoints z:u on [w, W]  (weighted)
      prefix 4 4 0             # optional cap override

Rationals are written ``p`` or ``p/q``, never as decimals.  ``#`` starts a
comment.  Serialisation is canonical: ``parse(serialize(P)) == P`` and a
canonical file reproduces itself byte for byte.
"""
from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from .model import (
    Assignment,
    Lottery,
    ModelError,
    PiecewiseUtility,
    Problem,
    RankedPreference,
    TableUtility,
    fmt,
)

HEADER = "congestfair v1"


class ParseError(ModelError):
    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def _rational(tok: str, line: int, col: int) -> Fraction:
    if any(c in tok for c in ".eE"):
        raise ParseError(f"{tok!r} is not an exact rational (use p/q)", line, col)
    try:
        return Fraction(tok)
    except (ValueError, ZeroDivisionError):
        raise ParseError(f"{tok!r} is not a rational", line, col) from None


def _tokens(raw: str):
    """Split a line into (column, token) pairs, dropping comments."""
    text = raw.split("#", 1)[0]
    out, k = [], 0
    for tok in text.split():
        k = text.index(tok, k)
        out.append((k + 1, tok))
        k += len(tok)
    return out


def parse_text(text: str) -> Problem:
    lines = text.splitlines()
    model = None
    posts = None
    groups = []  # dicts: labels, weight, rows, line
    seen_header = False
    for ln, raw in enumerate(lines, start=1):
        toks = _tokens(raw)
        if not toks:
            continue
        col, head = toks[0]
        if not seen_header:
            if " ".join(t for _, t in toks) != HEADER:
                raise ParseError(f"expected header {HEADER!r}", ln, col)
            seen_header = True
            continue
        args = toks[1:]
        if head == "model":
            if len(args) != 1 or args[0][1] not in ("anonymous", "weighted"):
                raise ParseError("model must be 'anonymous' or 'weighted'", ln, col)
            model = args[0][1]
        elif head == "posts":
            if not args:
                raise ParseError("posts needs at least one label", ln, col)
            posts = tuple(t for _, t in args)
        elif head == "agent":
            labels, weight = [], None
            k = 0
            while k < len(args):
                c, t = args[k]
                if t == "weight":
                    if k + 1 >= len(args):
                        raise ParseError("weight needs a value", ln, c)
                    weight = _rational(args[k + 1][1], ln, args[k + 1][0])
                    k += 2
                    continue
                labels.append(t)
                k += 1
            if not labels:
                raise ParseError("agent line needs at least one label", ln, col)
            groups.append({"labels": labels, "weight": weight, "rows": [], "line": ln})
        elif head in ("slack", "utility", "ranking", "piecewise", "prefix"):
            if not groups:
                raise ParseError(f"{head} line before any agent", ln, col)
            groups[-1]["rows"].append((ln, head, args))
        else:
            raise ParseError(f"unknown keyword {head!r}", ln, col)
    if not seen_header:
        raise ParseError(f"missing header {HEADER!r}", 1)
    if model is None:
        raise ParseError("missing 'model' line", len(lines) or 1)
    if posts is None:
        raise ParseError("missing 'posts' line", len(lines) or 1)
    if not groups:
        raise ModelError("a problem needs at least one agent")
    weighted = model == "weighted"
    n = sum(len(g["labels"]) for g in groups)
    if weighted:
        for g in groups:
            if g["weight"] is None:
                raise ParseError("weighted agents need 'weight p/q'", g["line"])
        total = sum(g["weight"] * len(g["labels"]) for g in groups)
    else:
        for g in groups:
            if g["weight"] is not None:
                raise ParseError("anonymous agents take no weight", g["line"])
    agents, prefs, weights, prefixes = [], [], [], []
    for g in groups:
        pref, prefix = _build_preference(g, posts, n, weighted, total if weighted else None)
        for label in g["labels"]:
            agents.append(label)
            prefs.append(pref)
            weights.append(g["weight"])
            prefixes.append(prefix)
    try:
        return Problem(
            posts,
            tuple(agents),
            tuple(prefs),
            weights=tuple(weights) if weighted else None,
            prefixes=tuple(prefixes) if any(p is not None for p in prefixes) else None,
        )
    except ModelError as exc:
        raise ModelError(f"invalid problem: {exc}") from None


def _build_preference(g, posts, n, weighted, total):
    m = len(posts)
    index = {p: k for k, p in enumerate(posts)}
    kinds = {head for _, head, _ in g["rows"] if head != "prefix"}
    prefix = None
    for ln, head, args in g["rows"]:
        if head == "prefix":
            if len(args) != m:
                raise ParseError(f"prefix needs {m} caps", ln)
            prefix = tuple(_rational(t, ln, c) for c, t in args)
    if len(kinds) != 1:
        raise ParseError("each agent block needs exactly one kind of preference", g["line"])
    kind = kinds.pop()
    rows = [(ln, args) for ln, head, args in g["rows"] if head == kind]
    try:
        if kind == "slack":
            if len(rows) != 1 or len(rows[0][1]) != m:
                raise ParseError(f"slack needs one line of {m} caps", rows[0][0])
            ln, args = rows[0]
            caps = [_rational(t, ln, c) for c, t in args]
            if weighted:
                return PiecewiseUtility.slack(caps, g["weight"], total), prefix
            return TableUtility.slack(caps, n), prefix
        by_post = {}
        for ln, args in rows:
            if not args or args[0][1] not in index:
                raise ParseError(f"{kind} line must start with a post label", ln)
            x = index[args[0][1]]
            if x in by_post:
                raise ParseError(f"duplicate {kind} line for post {args[0][1]}", ln, args[0][0])
            by_post[x] = (ln, args[1:])
        if set(by_post) != set(range(m)):
            raise ParseError(f"{kind} lines must cover every post", g["line"])
        if kind == "utility":
            if weighted:
                raise ParseError("utility tables are for anonymous problems", g["line"])
            table = []
            for x in range(m):
                ln, vals = by_post[x]
                if len(vals) != n:
                    raise ParseError(f"utility needs {n} values", ln)
                table.append([_rational(t, ln, c) for c, t in vals])
            return TableUtility(table), prefix
        if kind == "ranking":
            if weighted:
                raise ParseError("rankings are for anonymous problems", g["line"])
            table = []
            for x in range(m):
                ln, vals = by_post[x]
                if len(vals) != n:
                    raise ParseError(f"ranking needs {n} levels", ln)
                try:
                    table.append([int(t) for _, t in vals])
                except ValueError:
                    raise ParseError("rank levels must be integers", ln) from None
            return RankedPreference(table), prefix
        if kind == "piecewise":
            if not weighted:
                raise ParseError("piecewise utilities are for weighted problems", g["line"])
            pieces = []
            for x in range(m):
                ln, vals = by_post[x]
                pts = []
                for c, t in vals:
                    if t.count(":") != 1:
                        raise ParseError(f"breakpoint {t!r} must look like z:u", ln, c)
                    z, u = t.split(":")
                    pts.append((_rational(z, ln, c), _rational(u, ln, c)))
                pieces.append(pts)
            return PiecewiseUtility(pieces), prefix
    except ParseError:
        raise
    except ModelError as exc:
        raise ParseError(str(exc), g["line"]) from None
    raise AssertionError(kind)


def parse(path) -> Problem:
    return parse_text(Path(path).read_text())


def _slack_caps(pref, problem: Problem, i: int):
    """Caps if the preference is exactly a slack utility, else None."""
    if isinstance(pref, TableUtility):
        caps = []
        for row in pref.values:
            c = row[0] + 1
            if any(v != c - s for s, v in enumerate(row, start=1)):
                return None
            caps.append(c)
        return caps
    if isinstance(pref, PiecewiseUtility):
        caps = []
        for row in pref.pieces:
            if len(row) != 2:
                return None
            (z0, u0), (z1, u1) = row
            if u0 + z0 != u1 + z1:
                return None
            caps.append(u0 + z0)
        return caps
    return None


def _block(problem: Problem, i: int) -> list[str]:
    pref = problem.preferences[i]
    out = []
    caps = _slack_caps(pref, problem, i)
    if caps is not None:
        out.append("  slack " + " ".join(fmt(c) for c in caps))
    elif isinstance(pref, TableUtility):
        for x, row in enumerate(pref.values):
            out.append(f"  utility {problem.posts[x]} " + " ".join(fmt(v) for v in row))
    elif isinstance(pref, RankedPreference):
        for x, row in enumerate(pref.levels):
            out.append(f"  ranking {problem.posts[x]} " + " ".join(str(v) for v in row))
    else:
        for x, row in enumerate(pref.pieces):
            out.append(
                f"  piecewise {problem.posts[x]} "
                + " ".join(f"{fmt(z)}:{fmt(u)}" for z, u in row)
            )
    if problem.prefixes is not None and problem.prefixes[i] is not None:
        out.append("  prefix " + " ".join(fmt(c) for c in problem.prefixes[i]))
    return out


def serialize(problem: Problem) -> str:
    lines = [HEADER, f"model {'weighted' if problem.weighted else 'anonymous'}"]
    lines.append("posts " + " ".join(problem.posts))
    i = 0
    while i < problem.n:
        block = _block(problem, i)
        j = i + 1
        while (
            j < problem.n
            and problem.preferences[j] == problem.preferences[i]
            and problem.weight(j) == problem.weight(i)
            and _block(problem, j) == block
        ):
            j += 1
        head = "agent " + " ".join(problem.agents[i:j])
        if problem.weighted:
            head += f" weight {fmt(problem.weight(i))}"
        lines.append(head)
        lines.extend(block)
        i = j
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# assignments and lotteries: "post:agent,agent post:agent"
# ---------------------------------------------------------------------------


def parse_assignment(problem: Problem, text: str) -> Assignment:
    groups = {}
    for tok in text.split():
        if ":" not in tok:
            raise ModelError(f"expected post:agent,... but got {tok!r}")
        post, members = tok.split(":", 1)
        if post not in problem.posts:
            raise ModelError(f"unknown post {post!r}")
        names = [m for m in members.split(",") if m]
        for name in names:
            if name not in problem.agents:
                raise ModelError(f"unknown agent {name!r}")
        groups[post] = groups.get(post, []) + names
    return Assignment.from_groups(problem, groups)


def format_assignment(problem: Problem, P: Assignment) -> str:
    groups = P.members(problem.m)
    return " ".join(
        f"{problem.posts[a]}:{','.join(problem.agents[i] for i in g)}"
        for a, g in enumerate(groups)
        if g
    )


def parse_lottery_text(problem: Problem, text: str) -> Lottery:
    entries = []
    for ln, raw in enumerate(text.splitlines(), start=1):
        body = raw.split("#", 1)[0].strip()
        if not body:
            continue
        prob, _, rest = body.partition(" ")
        try:
            p = _rational(prob, ln, 1)
            entries.append((parse_assignment(problem, rest), p))
        except ParseError:
            raise
        except ModelError as exc:
            raise ParseError(str(exc), ln) from None
    return Lottery(tuple(entries))


def parse_lottery(problem: Problem, path) -> Lottery:
    return parse_lottery_text(problem, Path(path).read_text())


def format_lottery(problem: Problem, lottery: Lottery) -> str:
    return "".join(f"{fmt(p)} {format_assignment(problem, P)}\n" for P, p in lottery)
