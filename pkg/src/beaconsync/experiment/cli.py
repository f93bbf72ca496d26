"""Command line entry point: ``beaconsync run|sweep|ingest|trace-diff``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ..frames import MacAddress
from ..ingest import IngestStats, extract_beacons, pair_observations, read_pcap
from .config import ScenarioError, load_scenario
from .runner import RunResult, run_scenario
from .stats import OffsetSample, samples_csv, summarize, summary_csv, summary_json, write_atomic

log = logging.getLogger("beaconsync")

CAVEATS = [
    "channel, jitter and contention parameters are simulation calibrations, not measured values",
]


def write_outputs(result: RunResult, out_dir: str, fmt: str) -> dict:
    cfg = result.config
    out = Path(out_dir)
    write_atomic(out / cfg.output.samples, samples_csv(result.samples))
    if result.trace is not None:
        write_atomic(out / cfg.output.trace, "\n".join(result.trace) + "\n")
    summary = summarize(result.samples) if result.samples else {}
    if fmt == "json":
        meta = {"scenario": cfg.name, "seed": cfg.seed, "duration_ns": cfg.duration, "method": cfg.method,
                "caveats": CAVEATS}
        write_atomic(out / f"{cfg.output.summary}.json", summary_json(summary, result.counters, meta))
    else:
        write_atomic(out / f"{cfg.output.summary}.csv", summary_csv(summary))
    return summary


def print_summary(name: str, summary: dict) -> None:
    if not summary:
        print(f"{name}: no samples (never synchronized)")
    for (method, station), st in summary.items():
        if station != "*":
            continue
        print(f"{name} [{method}] n={st.count} median={st.median_ns} ns max|err|={st.max_abs_ns} ns")
        for line in st.verdict_lines():
            print(f"  {line}")


def _load(path: str, seed: int | None):
    cfg = load_scenario(path)
    if seed is not None:
        cfg = cfg.model_copy(update={"seed": seed})
    return cfg


def cmd_run(args: argparse.Namespace) -> int:
    cfg = _load(args.scenario, args.seed)
    out = args.out or os.path.join("out", cfg.name)
    result = run_scenario(cfg)
    print_summary(cfg.name, write_outputs(result, out, args.format))
    return 0


def _sweep_one(job: tuple[str, int | None, str, str]) -> str:
    path, seed, out_root, fmt = job
    cfg = _load(path, seed)
    write_outputs(run_scenario(cfg), os.path.join(out_root, cfg.name), fmt)
    return cfg.name


def cmd_sweep(args: argparse.Namespace) -> int:
    files = sorted(p for p in Path(args.dir).iterdir() if p.suffix in (".yaml", ".yml"))
    if not files:
        print(f"no scenario files in {args.dir}", file=sys.stderr)
        return 2
    out_root = args.out or "out"
    jobs = [(str(p), args.seed, out_root, args.format) for p in files]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            names = list(pool.map(_sweep_one, jobs))
    else:
        names = [_sweep_one(j) for j in jobs]
    for n in names:
        print(f"{n}: written to {os.path.join(out_root, n)}")
    return 0


def _common_bssid(ref_path: str, sta_path: str) -> MacAddress:
    ref = Counter(o.bssid for o in extract_beacons(read_pcap(ref_path)))
    sta = Counter(o.bssid for o in extract_beacons(read_pcap(sta_path)))
    common = [(-(ref[b] + sta[b]), str(b)) for b in ref if b in sta]
    if not common:
        raise ValueError("the two captures share no BSSID")
    # most frames seen by both; ties go to the lowest address
    return MacAddress(min(common)[1])


def cmd_ingest(args: argparse.Namespace) -> int:
    bssid = MacAddress(args.bssid) if args.bssid else _common_bssid(args.reference, args.station)
    ref_stats, sta_stats = IngestStats(), IngestStats()
    ref = list(extract_beacons(read_pcap(args.reference), bssid, ref_stats, args.mac_timestamp))
    sta = list(extract_beacons(read_pcap(args.station), bssid, sta_stats, args.mac_timestamp))
    result = pair_observations(ref, sta, bssid)
    samples = [OffsetSample(at, "beacon_sync", "station", err) for at, err in result.errors]
    out = Path(args.out or "out/ingest")
    write_atomic(out / "samples.csv", samples_csv(samples))
    counters = {**result.counters,
                **{f"reference.{k}": v for k, v in ref_stats.as_dict().items()},
                **{f"station.{k}": v for k, v in sta_stats.as_dict().items()}}
    summary = summarize(samples) if samples else {}
    if args.format == "json":
        meta = {"bssid": str(bssid), "caveats": [
            "capture timestamps are taken at an unknown layer of the capture stack"]}
        write_atomic(out / "summary.json", summary_json(summary, counters, meta))
    else:
        write_atomic(out / "summary.csv", summary_csv(summary))
    print(f"bssid {bssid}: {result.counters['matched']} matched beacons")
    print_summary("ingest", summary)
    return 0


def cmd_trace_diff(args: argparse.Namespace) -> int:
    with open(args.a, encoding="utf-8") as fa, open(args.b, encoding="utf-8") as fb:
        a, b = fa.read().splitlines(), fb.read().splitlines()
    for i, (la, lb) in enumerate(zip(a, b), start=1):
        if la != lb:
            print(f"traces differ at line {i}:\n  < {la}\n  > {lb}")
            return 1
    if len(a) != len(b):
        print(f"traces differ in length: {len(a)} vs {len(b)} lines")
        return 1
    print(f"traces identical ({len(a)} events)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="beaconsync", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp: argparse.ArgumentParser) -> None:
        sp.add_argument("--seed", type=int, default=None, help="override the scenario seed")
        sp.add_argument("--out", default=None, help="output directory")
        sp.add_argument("--format", choices=("csv", "json"), default="csv", help="summary format")

    r = sub.add_parser("run", help="run one scenario file or bundled scenario name")
    r.add_argument("scenario")
    common(r)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run every scenario file in a directory")
    s.add_argument("dir")
    s.add_argument("--jobs", type=int, default=1)
    common(s)
    s.set_defaults(func=cmd_sweep)

    i = sub.add_parser("ingest", help="pair a reference and a station capture by (bssid, tsf)")
    i.add_argument("reference")
    i.add_argument("station")
    i.add_argument("--bssid", default=None)
    i.add_argument("--mac-timestamp", action="store_true", help="use radiotap TSFT instead of capture time")
    common(i)
    i.set_defaults(func=cmd_ingest)

    t = sub.add_parser("trace-diff", help="compare two event traces")
    t.add_argument("a")
    t.add_argument("b")
    t.set_defaults(func=cmd_trace_diff)
    return p


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
