"""Multi-slice scaling sweep over the shared registry.

For each slice count k the sweep stands up a fresh deployment, then lets
every slice's session function send paced heartbeats to the shared
registry concurrently — the cross-slice background load is what makes the
shared-path cost grow with k.  The measured quantity is the wall-clock
completion time of each heartbeat request; the report carries one point
per k plus a least-squares line over the point means and the ratio of the
largest sweep point to the smallest.
"""

from __future__ import annotations

import gc
import random
import statistics
import threading
import time
from dataclasses import replace
from pathlib import Path

from ..orchestrator import Deployment
from .latency import ScenarioError, _std
from .reports import LinearFit, ScalingPoint, ScalingReport

DEFAULT_SLICE_COUNTS = (1, 2, 4, 6, 8, 10)
# Beats per slice.  Queueing on the shared registry arrives in bursts, so
# each point needs a multi-second horizon before its mean settles; shorter
# runs report whatever convoy happened to form during the window.
DEFAULT_ITERATIONS = 200
# Beat period per slice.  Short enough that ten slices of paced heartbeats
# produce real queueing on the shared registry path (the effect under
# measurement), long enough that one slice leaves the path nearly idle.
DEFAULT_PERIOD_S = 0.016


def _spec_for(template, k: int):
    return replace(
        template,
        name=f"{template.name}-x{k}",
        slices=[f"slice{i}" for i in range(1, k + 1)],
        data_dir=str(Path(template.data_dir) / f"scale{k}"),
    )


def _measure_slice(deployment, domain: str, iterations: int, period_s: float,
                   offset_s: float, samples: list, errors: list) -> None:
    rng = random.Random(hash(domain) & 0xFFFF)
    # warm up inside this thread: the HTTP client pools connections per
    # thread, so a main-thread warm-up would leave the first recorded beat
    # paying connection setup
    try:
        deployment.driver_json(f"{domain}-smf", "POST", "/driver/heartbeat", {})
    except RuntimeError as e:
        errors.append(f"{domain}: {e}")
        return
    time.sleep(offset_s)
    for _ in range(iterations):
        started = time.perf_counter()
        try:
            deployment.driver_json(f"{domain}-smf", "POST", "/driver/heartbeat", {})
        except RuntimeError as e:
            errors.append(f"{domain}: {e}")
            return
        elapsed = time.perf_counter() - started
        samples.append(elapsed * 1000.0)
        # exponential gaps give memoryless arrivals; periodic or lightly
        # jittered pacing lets the slices drift into lockstep and turns
        # shared-path queueing into bursty convoys with unstable means
        wait = min(rng.expovariate(1.0 / period_s), 4.0 * period_s) - elapsed
        if wait > 0:
            time.sleep(wait)


def measure_point(deployment, iterations: int, period_s: float) -> ScalingPoint:
    """Paced concurrent heartbeats from every slice; one sample per beat."""
    domains = list(deployment.spec.slices)
    samples: list = []
    errors: list = []
    threads = []
    for index, domain in enumerate(domains):
        offset = period_s * index / max(len(domains), 1)
        thread = threading.Thread(
            target=_measure_slice,
            args=(deployment, domain, iterations, period_s, offset, samples, errors),
            daemon=True,
        )
        threads.append(thread)
    # collector pauses with this many live threads run tens of milliseconds,
    # which would swamp individual beats; quiesce it for the timed window
    gc.collect()
    gc.disable()
    try:
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
    finally:
        gc.enable()
    if errors:
        raise ScenarioError(f"scaling: {errors[0]}")
    return ScalingPoint(
        slice_count=len(domains),
        samples=len(samples),
        heartbeat_ms_mean=statistics.fmean(samples),
        heartbeat_ms_std=_std(samples),
    )


def fit_line(points) -> LinearFit:
    xs = [float(p.slice_count) for p in points]
    ys = [p.heartbeat_ms_mean for p in points]
    if len(points) < 2:
        return LinearFit(0.0, ys[0] if ys else 0.0, 0.0)
    slope, intercept = statistics.linear_regression(xs, ys)
    try:
        r_squared = statistics.correlation(xs, ys) ** 2
    except statistics.StatisticsError:
        r_squared = 0.0
    return LinearFit(slope, intercept, r_squared)


def bench_scaling(template, slice_counts=DEFAULT_SLICE_COUNTS,
                  iterations: int = DEFAULT_ITERATIONS,
                  period_s: float = DEFAULT_PERIOD_S) -> ScalingReport:
    """Deploy each slice count in turn and measure its heartbeat point."""
    counts = sorted(set(int(k) for k in slice_counts))
    if not counts or counts[0] < 1:
        raise ValueError("slice counts must be positive")
    points = []
    for k in counts:
        deployment = Deployment(_spec_for(template, k))
        try:
            points.append(measure_point(deployment, iterations, period_s))
        finally:
            deployment.down()
    fit = fit_line(points)
    ratio = (points[-1].heartbeat_ms_mean / points[0].heartbeat_ms_mean
             if points[0].heartbeat_ms_mean > 0 else 0.0)
    return ScalingReport("scaling", template.mode, tuple(points), fit, ratio)
