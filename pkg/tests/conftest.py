"""Shared fixtures: paths to the bundled problem corpus and loaders."""

import json
from pathlib import Path

import pytest

import hypereig as he

PROBLEMS = Path(__file__).resolve().parent.parent / "problems"


def load_problem_dict(name: str) -> dict:
    with open(PROBLEMS / name, encoding="utf-8") as fh:
        return json.load(fh)


def load_problem(name: str) -> he.UEigenProblem:
    return he.problem_from_dict(load_problem_dict(name))


@pytest.fixture(scope="session")
def problems_dir() -> Path:
    return PROBLEMS
