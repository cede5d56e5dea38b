"""File formats: feeder edge lists, probing records, recovery reports.

Feeder files are plain CSV with a fixed header and optional '#' comments:

    from,to,r_pu,x_pu
    0,1,0.0015,0.0030
    1,2,0.0815,0.0547

An empty x field marks a line with unknown reactance. Probing records and
recovery reports are JSON; floats survive the round trip exactly because
Python serializes them at full precision.
"""

from __future__ import annotations

import json
import os
from typing import Mapping

import numpy as np
import yaml

from .errors import ConfigError, FeederFormatError
from .feeder import FeederGraph, build_feeder
from .probing import NoiseModel, ProbingPlan, ProbingRecord
from .recovery import RecoveryReport
from .reduction import ReducedGrid

FEEDER_HEADER = "from,to,r_pu,x_pu"


def load_feeder(path: str | os.PathLike) -> FeederGraph:
    """Parse a feeder CSV file into a validated tree."""
    edges = []
    saw_header = False
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if not saw_header:
                if line.replace(" ", "") != FEEDER_HEADER:
                    raise FeederFormatError(
                        f"{path}: line {lineno}: expected header "
                        f"{FEEDER_HEADER!r}, got {line!r}")
                saw_header = True
                continue
            fields = [f.strip() for f in line.split(",")]
            if len(fields) not in (3, 4):
                raise FeederFormatError(
                    f"{path}: line {lineno}: expected 3 or 4 fields, "
                    f"got {len(fields)}")
            try:
                u, v = int(fields[0]), int(fields[1])
                r = float(fields[2])
                x = None
                if len(fields) == 4 and fields[3] != "":
                    x = float(fields[3])
            except ValueError as exc:
                raise FeederFormatError(
                    f"{path}: line {lineno}: {exc}") from None
            edges.append((u, v, r, x))
    if not saw_header:
        raise FeederFormatError(f"{path}: missing header line")
    if not edges:
        raise FeederFormatError(f"{path}: no edges")
    return build_feeder(edges)


def save_feeder(g: FeederGraph | ReducedGrid, path: str | os.PathLike,
                comment: str | None = None) -> None:
    """Write a tree (or reduced grid) in the feeder CSV format."""
    with open(path, "w", encoding="utf-8") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        if isinstance(g, ReducedGrid):
            fh.write(f"# reduced grid, root {g.root}, "
                     f"upstream resistance {g.root_upstream_r!r}\n")
        fh.write(FEEDER_HEADER + "\n")
        if isinstance(g, ReducedGrid):
            rows = ((u, v, r, None) for u, v, r in g.edges)
        else:
            rows = iter(g.edges)
        for u, v, r, x in rows:
            xs = "" if x is None else repr(x)
            fh.write(f"{u},{v},{r!r},{xs}\n")


def save_record(record: ProbingRecord, path: str | os.PathLike) -> None:
    """Write a probing record: one JSON header line, then CSV matrix rows."""
    plan = record.plan
    header = {
        "kind": "probing-record",
        "mode": record.mode,
        "row_nodes": list(record.row_nodes),
        "buses": list(plan.buses),
        "delta": list(plan.delta) if plan.delta is not None else None,
        "periods": list(plan.periods) if plan.periods is not None else None,
        "matrix": None if plan.matrix is None else plan.matrix.tolist(),
        "seed": record.seed,
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(header, fh)
        fh.write("\n")
        for row in record.values:
            fh.write(",".join(repr(v) for v in row.tolist()))
            fh.write("\n")


def load_record(path: str | os.PathLike) -> ProbingRecord:
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        try:
            header = json.loads(first)
        except json.JSONDecodeError as exc:
            raise FeederFormatError(
                f"{path}: line 1: not a JSON header: {exc}") from None
        if not isinstance(header, dict) or header.get("kind") != "probing-record":
            raise FeederFormatError(f"{path}: not a probing record")
        rows = []
        for lineno, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            try:
                rows.append([float(v) for v in line.split(",")])
            except ValueError as exc:
                raise FeederFormatError(
                    f"{path}: line {lineno}: {exc}") from None
    try:
        if header["matrix"] is not None:
            plan = ProbingPlan.general(header["buses"],
                                       np.asarray(header["matrix"]))
        else:
            plan = ProbingPlan.blocks(header["buses"],
                                      dict(zip(header["buses"],
                                               header["delta"])),
                                      header["periods"])
        return ProbingRecord(mode=header["mode"],
                             row_nodes=tuple(header["row_nodes"]),
                             values=np.asarray(rows, dtype=float),
                             plan=plan,
                             seed=header.get("seed"))
    except (KeyError, TypeError) as exc:
        raise FeederFormatError(f"{path}: malformed record: {exc}") from None


def save_report(report: RecoveryReport, out_dir: str | os.PathLike) -> None:
    """Write recovered edges as a feeder CSV plus a JSON summary."""
    os.makedirs(out_dir, exist_ok=True)
    save_feeder(report.graph, os.path.join(out_dir, "recovered.csv"),
                comment=f"recovered from {report.mode} probing data")
    meta: dict = {
        "mode": report.mode,
        "probing": sorted(report.probing),
        "line_support": {f"{u}-{v}": n
                         for (u, v), n in sorted(report.line_support.items())},
    }
    if isinstance(report.graph, ReducedGrid):
        meta["root"] = report.graph.root
        meta["internal_nodes"] = sorted(report.graph.internal)
        meta["root_upstream_r"] = report.graph.root_upstream_r
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_config(path: str | os.PathLike) -> dict:
    """Read a YAML experiment config into a plain dict."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = yaml.safe_load(fh)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    if not isinstance(raw, Mapping):
        raise ConfigError(f"{path}: config must be a mapping")
    return dict(raw)
