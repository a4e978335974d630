"""Shared fixtures: generated corpora and their feature matrices."""

from __future__ import annotations

import pytest

from emg_affect.dataio import generate_corpus, load_corpus
from tests._verdicts import VERDICTS


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in VERDICTS:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def corpus_manifest(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    return generate_corpus(root, user_count=10, seed=42)


@pytest.fixture(scope="session")
def corpus_matrix(corpus_manifest):
    return load_corpus(corpus_manifest)


@pytest.fixture(scope="session")
def small_manifest(tmp_path_factory):
    root = tmp_path_factory.mktemp("small-corpus")
    return generate_corpus(root, user_count=4, seed=7, typing_s=20.0)


@pytest.fixture(scope="session")
def small_matrix(small_manifest):
    return load_corpus(small_manifest)
