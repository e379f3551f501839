#!/usr/bin/env python3
"""Fixtures: generate plotting inputs by invoking the simulation CLI.

The figure component consumes the simulation package only through its
files on disk, so these fixtures shell out to the installed CLI (the
external interface) instead of importing it. Particle counts are small;
each target renders the same layout that full-scale runs produce.
"""

import subprocess
import sys

import pytest

REPRODUCE_ARGS = {
    "fig1": ("--n-particles", "20"),
    "fig6": ("--n-particles", "25"),
    "fig7a": ("--n-particles", "30"),
    "fig9": (),
}


def _reproduce(target, out_dir):
    cmd = [sys.executable, "-m", "runtumble.cli", "reproduce",
           "--target", target, "--out", str(out_dir),
           *REPRODUCE_ARGS[target]]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise RuntimeError(f"{' '.join(cmd)} failed "
                           f"({proc.returncode}):\n{proc.stderr}")
    return str(out_dir)


@pytest.fixture(scope="session")
def fig1_dir(tmp_path_factory):
    return _reproduce("fig1", tmp_path_factory.mktemp("fig1"))


@pytest.fixture(scope="session")
def fig6_dir(tmp_path_factory):
    return _reproduce("fig6", tmp_path_factory.mktemp("fig6"))


@pytest.fixture(scope="session")
def fig7a_dir(tmp_path_factory):
    return _reproduce("fig7a", tmp_path_factory.mktemp("fig7a"))


@pytest.fixture(scope="session")
def fig9_dir(tmp_path_factory):
    return _reproduce("fig9", tmp_path_factory.mktemp("fig9"))
