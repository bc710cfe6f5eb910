"""Efficiency measurements: weight bytes, latency percentiles, throughput.

Memory per inference is accounted as the weight bytes read by one forward
pass at 32-bit precision, ``4 * parameter count``.  Activation traffic is
not included.  Energy is never measured; a user-supplied wattage only
rescales throughput.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import platform
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .nn import Model, count_parameters

SCHEMA_VERSION = 1
BYTES_PER_WEIGHT = 4
DEFAULT_BATCHES = (1, 8, 32, 128)
MIN_REPS = 100
MIN_WARMUP = 50
MIN_DURATION = 1.0
REPORT_FORMATS = ("json", "csv")

CSV_COLUMNS = (
    "schema_version", "model", "parameters", "weight_bytes", "memory_mb", "memory_mib",
    "latency_mean_ms", "latency_p50_ms", "latency_p90_ms", "latency_p99_ms", "reps",
    "batch_size", "samples_per_sec", "samples_per_sec_per_watt",
)


@dataclass(frozen=True)
class MemoryFootprint:
    parameters: int
    bytes: int
    mb: float
    mib: float


@dataclass(frozen=True)
class LatencyStats:
    mean_ms: float
    p50_ms: float
    p90_ms: float
    p99_ms: float
    reps: int
    warmup: int


@dataclass(frozen=True)
class ThroughputPoint:
    batch_size: int
    samples_per_sec: float
    samples_per_sec_per_watt: float | None = None


@dataclass
class BenchReport:
    model: str
    memory: MemoryFootprint
    latency: LatencyStats
    throughput: list[ThroughputPoint]
    host: dict = field(default_factory=dict)
    watts: float | None = None
    matvec_path: str | None = None
    schema_version: int = SCHEMA_VERSION

    def __post_init__(self):
        lat = self.latency
        if not lat.p50_ms <= lat.p90_ms <= lat.p99_ms:
            raise ValueError("latency percentiles are not ordered")
        if self.memory.bytes != BYTES_PER_WEIGHT * self.memory.parameters:
            raise ValueError("weight bytes must equal 4 x parameter count")

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "model": self.model,
            "matvec_path": self.matvec_path,
            "memory": asdict(self.memory),
            "latency": asdict(self.latency),
            "throughput": [asdict(p) for p in self.throughput],
            "watts": self.watts,
            "host": self.host,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchReport":
        return cls(
            model=d["model"],
            memory=MemoryFootprint(**d["memory"]),
            latency=LatencyStats(**d["latency"]),
            throughput=[ThroughputPoint(**p) for p in d["throughput"]],
            host=d["host"],
            watts=d["watts"],
            matvec_path=d.get("matvec_path"),
            schema_version=d["schema_version"],
        )


def memory_per_inference(model: Model) -> MemoryFootprint:
    params = count_parameters(model)
    nbytes = BYTES_PER_WEIGHT * params
    return MemoryFootprint(params, nbytes, nbytes / 1e6, nbytes / 2**20)


def nearest_rank(sorted_samples, pct: float) -> float:
    """The ceil(pct * N / 100)-th smallest sample (1-based), no interpolation."""
    n = len(sorted_samples)
    if n == 0:
        raise ValueError("no samples")
    rank = max(1, math.ceil(pct * n / 100.0))
    return float(sorted_samples[rank - 1])


def _forward_fn(model) -> Callable:
    return model.forward if isinstance(model, Model) else model


def latency_profile(model, input_dim: int, reps: int = 1000, warmup: int = MIN_WARMUP,
                    seed: int = 0) -> LatencyStats:
    """Wall time of single-sample forward passes.

    ``model`` is a :class:`Model` or any callable taking a ``(1, input_dim)``
    array.
    """
    if reps < MIN_REPS:
        raise ValueError(f"reps must be >= {MIN_REPS}, got {reps}")
    if warmup < MIN_WARMUP:
        raise ValueError(f"warmup must be >= {MIN_WARMUP}, got {warmup}")
    fwd = _forward_fn(model)
    x = np.random.default_rng(seed).random((1, input_dim))
    clock = time.perf_counter
    for _ in range(warmup):
        fwd(x)
    samples = np.empty(reps)
    for i in range(reps):
        t0 = clock()
        fwd(x)
        samples[i] = clock() - t0
    samples.sort()
    resolution = time.get_clock_info("perf_counter").resolution
    if nearest_rank(samples, 50) < 20 * resolution:
        warnings.warn(f"median latency is below 20x the timer resolution ({resolution:.1e} s)",
                      RuntimeWarning, stacklevel=2)
    ms = samples * 1e3
    return LatencyStats(
        mean_ms=float(ms.mean()),
        p50_ms=nearest_rank(ms, 50),
        p90_ms=nearest_rank(ms, 90),
        p99_ms=nearest_rank(ms, 99),
        reps=reps,
        warmup=warmup,
    )


def throughput_sweep(model, input_dim: int, batch_sizes=DEFAULT_BATCHES,
                     duration: float = MIN_DURATION, watts: float | None = None,
                     seed: int = 0) -> list[ThroughputPoint]:
    """Samples per second at each batch size, each point run for ``duration`` seconds."""
    if duration < MIN_DURATION:
        raise ValueError(f"duration must be >= {MIN_DURATION} s per point")
    if watts is not None and not watts > 0:
        raise ValueError("watts must be positive")
    fwd = _forward_fn(model)
    rng = np.random.default_rng(seed)
    points = []
    for bs in batch_sizes:
        if bs < 1:
            raise ValueError(f"batch size must be positive, got {bs}")
        X = rng.random((bs, input_dim))
        fwd(X)
        processed = 0
        t0 = time.perf_counter()
        while True:
            fwd(X)
            processed += bs
            elapsed = time.perf_counter() - t0
            if elapsed >= duration:
                break
        rate = processed / elapsed
        points.append(ThroughputPoint(bs, rate, rate / watts if watts else None))
    return points


def host_descriptor(threads: int = 1) -> dict:
    return {
        "platform": platform.platform(),
        "machine": platform.machine(),
        "processor": platform.processor(),
        "python": platform.python_version(),
        "numpy": np.__version__,
        "cpu_count": os.cpu_count(),
        "threads": threads,
    }


def run_bench(model: Model, name: str, batch_sizes=DEFAULT_BATCHES, reps: int = 1000,
              warmup: int = MIN_WARMUP, duration: float = MIN_DURATION,
              watts: float | None = None) -> BenchReport:
    paths = {layer.matvec_path() for layer in model.layers if hasattr(layer, "matvec_path")}
    return BenchReport(
        model=name,
        memory=memory_per_inference(model),
        latency=latency_profile(model, model.in_dim, reps, warmup),
        throughput=throughput_sweep(model, model.in_dim, batch_sizes, duration, watts),
        host=host_descriptor(),
        watts=watts,
        matvec_path=",".join(sorted(paths)) if paths else None,
    )


def report_csv(report: BenchReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    m, lat = report.memory, report.latency
    for p in report.throughput:
        w.writerow([
            report.schema_version, report.model, m.parameters, m.bytes, repr(m.mb), repr(m.mib),
            repr(lat.mean_ms), repr(lat.p50_ms), repr(lat.p90_ms), repr(lat.p99_ms), lat.reps,
            p.batch_size, repr(p.samples_per_sec),
            "" if p.samples_per_sec_per_watt is None else repr(p.samples_per_sec_per_watt),
        ])
    return buf.getvalue()


def emit_report(report: BenchReport, path, fmt: str = "json") -> Path:
    if fmt not in REPORT_FORMATS:
        raise ValueError(f"unknown report format {fmt!r}; choose from {REPORT_FORMATS}")
    path = Path(path)
    if fmt == "json":
        path.write_text(json.dumps(report.to_dict(), indent=2) + "\n")
    else:
        path.write_text(report_csv(report))
    return path


def load_report(path) -> BenchReport:
    return BenchReport.from_dict(json.loads(Path(path).read_text()))
