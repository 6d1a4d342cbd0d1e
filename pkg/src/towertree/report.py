"""Deterministic report envelopes for the command-line front end.

Every command emits the same envelope: command name, profile id,
echoed parameters, the command's payload, verdicts, and timing.  The
JSON rendering sorts keys, so two runs with the same inputs produce
byte-identical output except for the ``timing`` field, which golden
comparisons drop via :func:`strip_timing`.
"""

from __future__ import annotations

import copy
import json
import sys
import time
from typing import Optional


class Stopwatch:
    """Context manager capturing wall-clock seconds in ``.seconds``."""

    def __enter__(self) -> "Stopwatch":
        self._start = time.perf_counter()
        self.seconds = 0.0
        return self

    def __exit__(self, *exc) -> None:
        self.seconds = time.perf_counter() - self._start


def make_report(
    command: str,
    profile_id: Optional[str],
    parameters: dict,
    payload,
    verdicts: dict,
    seconds: float,
) -> dict:
    return {
        "command": command,
        "profile": profile_id,
        "parameters": parameters,
        "report": payload,
        "verdicts": verdicts,
        "timing": {"seconds": round(seconds, 6)},
    }


def render_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def render_tsv(header, rows) -> str:
    lines = ["\t".join(header)]
    lines.extend("\t".join(str(cell) for cell in row) for row in rows)
    return "\n".join(lines) + "\n"


def strip_timing(report: dict) -> dict:
    """Copy of the report without the timing field, for golden diffs."""
    out = copy.deepcopy(report)
    out.pop("timing", None)
    return out


def write_output(text: str, out: Optional[str]) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
