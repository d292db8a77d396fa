"""Shared fixtures: a small circuit corpus preprocessed by the checker CLI.

The trainer consumes the checker only through its external surface — the
``pdrkit`` command and the files it writes — so the fixtures shell out to it
rather than importing its code.  The corpus is ten structurally distinct toy
circuits: self-loop latches with and without inversion, gated feeds, shift
chains, and small mixed cones, chosen so every latch has a distinguishable
neighborhood.
"""

from __future__ import annotations

import shutil
import subprocess
from dataclasses import dataclass
from pathlib import Path

import pytest

from graphcl_pretrainer import CircuitGraph, load_corpus

CIRCUITS: dict[str, str] = {
    # single latch, inverted self-loop (toggles every cycle)
    "toggle": "aag 1 0 1 0 0 1\n2 3\n2\n",
    # single latch, plain self-loop (frozen at its reset value)
    "frozen": "aag 1 0 1 0 0 1\n2 2\n2\n",
    # latch gated by an input: next = input AND latch
    "fedlow": "aag 3 1 1 0 1 1\n2\n4 6\n4\n6 2 4\n",
    # inverted gate: next = NOT(NOT input AND NOT latch)
    "fedinv": "aag 3 1 1 0 1 1\n2\n4 7\n4\n6 3 5\n",
    # two-input AND cone feeding one latch
    "twoand": "aag 5 2 1 0 2 1\n2\n4\n6 10\n6\n8 2 4\n10 8 6\n",
    # toggling latch fanning out into a three-gate AND chain
    "bigfan": "aag 5 1 1 0 3 1\n2\n4 5\n10\n6 2 4\n8 6 4\n10 8 4\n",
    # two-stage shift register fed by an input
    "shift2": "aag 3 1 2 0 0 1\n2\n4 2\n6 4\n6\n",
    # three-stage shift register
    "shift3": "aag 4 1 3 0 0 1\n2\n4 2\n6 4\n8 6\n8\n",
    # two latches with a small cross-coupled gate network
    "mix": "aag 6 1 2 0 3 1\n2\n4 13\n6 2\n12\n8 4 7\n10 5 6\n12 9 11\n",
    # three latches: input feed, gated feed, and a mixed cone
    "chainand": "aag 6 1 3 0 2 1\n2\n4 2\n6 10\n8 12\n8\n10 2 4\n12 6 5\n",
}


@dataclass(frozen=True)
class Corpus:
    aag_dir: Path
    arts_dir: Path
    graphs: list[CircuitGraph]

    def graph_file(self, name: str) -> Path:
        return self.arts_dir / name / "graph.txt"

    def aag_file(self, name: str) -> Path:
        return self.aag_dir / f"{name}.aag"


def _checker_cli() -> str:
    exe = shutil.which("pdrkit")
    if exe is None:
        pytest.fail("the checker CLI (pdrkit) must be installed to build the test corpus")
    return exe


@pytest.fixture(scope="session")
def corpus(tmp_path_factory: pytest.TempPathFactory) -> Corpus:
    root = tmp_path_factory.mktemp("corpus")
    aag_dir = root / "aag"
    arts_dir = root / "arts"
    aag_dir.mkdir()
    exe = _checker_cli()
    for name, text in CIRCUITS.items():
        path = aag_dir / f"{name}.aag"
        path.write_text(text)
        proc = subprocess.run(
            [exe, "preprocess", str(path), "--out", str(arts_dir)],
            capture_output=True, text=True,
        )
        if proc.returncode != 0 or "failed: 0" not in proc.stdout:
            pytest.fail(f"preprocess failed for {name}: {proc.stdout} {proc.stderr}")
    graphs = load_corpus([arts_dir])
    assert len(graphs) == len(CIRCUITS)
    return Corpus(aag_dir=aag_dir, arts_dir=arts_dir, graphs=graphs)
