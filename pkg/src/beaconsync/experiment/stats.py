"""Offset-error statistics, real-time class verdicts and report files.

Percentiles are taken over the *absolute* error (synchronicity is a
magnitude), using nearest-rank on the sorted values; the median is the lower
median for even counts. ``mean_ns`` is the signed mean and shows bias.
"""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from collections.abc import Iterable, Sequence
from dataclasses import asdict, dataclass

import numpy as np

from ..clock import MS, S, US, SimTime

# synchronicity requirement per real-time class
CLASS_THRESHOLDS_NS = {"I": 1 * S, "II": 1 * MS, "III": 1 * US}
CLASS_LABELS = {"I": "≤1 s", "II": "≤1 ms", "III": "≤1 µs"}

SAMPLES_HEADER = ("at_ns", "method", "station", "error_ns")


@dataclass(frozen=True, slots=True)
class OffsetSample:
    at: SimTime
    method: str
    station_id: str
    error_ns: int


@dataclass(frozen=True)
class SummaryStats:
    count: int
    median_ns: int
    mean_ns: float
    p95_ns: int
    p99_ns: int
    max_abs_ns: int
    class_verdicts: dict[str, bool]

    def verdict_lines(self) -> list[str]:
        return [
            f"class {c}: {'PASS' if self.class_verdicts[c] else 'FAIL'} ({CLASS_LABELS[c]})"
            for c in ("II", "III")
        ]


def class_verdicts(max_abs_ns: int) -> dict[str, bool]:
    return {c: max_abs_ns <= limit for c, limit in CLASS_THRESHOLDS_NS.items()}


def _nearest_rank(sorted_abs: np.ndarray, p: float) -> int:
    n = len(sorted_abs)
    idx = max(0, int(np.ceil(p * n)) - 1)
    return int(sorted_abs[idx])


def summarize_errors(errors: Sequence[int] | np.ndarray) -> SummaryStats:
    arr = np.asarray(errors, dtype=np.int64)
    if arr.size == 0:
        raise ValueError("cannot summarize an empty sample set")
    a = np.sort(np.abs(arr))
    max_abs = int(a[-1])
    return SummaryStats(
        count=int(arr.size),
        median_ns=int(a[(arr.size - 1) // 2]),
        mean_ns=round(float(arr.mean()), 3),
        p95_ns=_nearest_rank(a, 0.95),
        p99_ns=_nearest_rank(a, 0.99),
        max_abs_ns=max_abs,
        class_verdicts=class_verdicts(max_abs),
    )


def summarize(samples: Iterable[OffsetSample]) -> dict[tuple[str, str], SummaryStats]:
    """Stats per ``(method, station)`` plus ``(method, "*")`` pooling all stations."""
    groups: dict[tuple[str, str], list[int]] = {}
    for s in samples:
        groups.setdefault((s.method, s.station_id), []).append(s.error_ns)
        groups.setdefault((s.method, "*"), []).append(s.error_ns)
    if not groups:
        raise ValueError("cannot summarize an empty sample set")
    return {key: summarize_errors(errs) for key, errs in sorted(groups.items())}


def samples_csv(samples: Iterable[OffsetSample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SAMPLES_HEADER)
    for s in samples:
        w.writerow((s.at, s.method, s.station_id, s.error_ns))
    return buf.getvalue()


def summary_csv(summary: dict[tuple[str, str], SummaryStats]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(
        ("method", "station", "count", "median_ns", "mean_ns", "p95_ns", "p99_ns", "max_abs_ns",
         "class_I", "class_II", "class_III")
    )
    for (method, station), st in summary.items():
        w.writerow(
            (method, station, st.count, st.median_ns, st.mean_ns, st.p95_ns, st.p99_ns, st.max_abs_ns,
             *("PASS" if st.class_verdicts[c] else "FAIL" for c in ("I", "II", "III")))
        )
    return buf.getvalue()


def summary_json(
    summary: dict[tuple[str, str], SummaryStats], counters: dict[str, int], meta: dict
) -> str:
    doc = {
        **meta,
        "summaries": [
            {"method": m, "station": s, **asdict(st)} for (m, s), st in summary.items()
        ],
        "counters": dict(sorted(counters.items())),
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    """Write ``text`` so readers see either the old file or the complete new one."""
    path = os.fspath(path)
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise
