"""Bundled problems used by the tests, demos and README.

=====================  ==============================================
name                   contents
=====================  ==============================================
``staircase``          two posts, five slack agents
``four_posts``         18 agents of five types on four posts
``mirror``             two mirrored types of six agents, three posts
``weighted_trio``      weighted, W = 10, no competitive assignment
``cycle_slack``        cyclic slack preferences, three posts
``cycle_ranked``       ordinal preferences with one tie
``split_beta``         two posts, eight agents, fractional solution
``split_beta_alt``     same, with a different table for beta1
``heavy_pair``         weighted, W = 21
=====================  ==============================================

Lotteries ``heavy_pair_even`` and ``heavy_pair_skewed`` go with ``heavy_pair``.
"""
from __future__ import annotations

from importlib import resources

from .io import parse_lottery_text, parse_text
from .model import Lottery, Problem


def fixture_names() -> list[str]:
    root = resources.files("congestfair") / "data"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".cfp"))


def fixture_text(name: str) -> str:
    return (resources.files("congestfair") / "data" / f"{name}.cfp").read_text()


def load_fixture(name: str) -> Problem:
    return parse_text(fixture_text(name))


def load_lottery(problem: Problem, name: str) -> Lottery:
    text = (resources.files("congestfair") / "data" / f"{name}.lot").read_text()
    return parse_lottery_text(problem, text)
