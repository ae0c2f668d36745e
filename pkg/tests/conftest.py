"""Shared fixtures: the examples directory and parsed example models."""

import pathlib

import pytest

from adtrisk import dsl

EXAMPLES = pathlib.Path(__file__).resolve().parent.parent / "examples"


def load_example(name):
    result = dsl.parse_file(str(EXAMPLES / name))
    assert result.ok, [str(d) for d in result.diagnostics]
    return result.model


@pytest.fixture(scope="session")
def examples_dir():
    return EXAMPLES


@pytest.fixture(scope="session")
def g1():
    return load_example("g1.adt")


@pytest.fixture(scope="session")
def g2():
    return load_example("g2.adt")


@pytest.fixture(scope="session")
def g3():
    return load_example("g3.adt")


@pytest.fixture(scope="session")
def toy():
    return load_example("toy.adt")
