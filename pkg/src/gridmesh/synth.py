"""Synthetic per-bus signal source: a decaying wave radiating from an
origin bus, standing in for a transient-study frequency trace."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .cases import CaseTopology
from .contour import project_mercator


@dataclass(frozen=True)
class WaveParams:
    f0: float = 60.0
    amplitude: float = 0.5
    origin_bus: int = 1
    speed: float = 0.05  # projected units per second
    decay: float = 0.8
    t_event: float = 0.5


class SynthError(Exception):
    pass


def bus_distances(case: CaseTopology, origin_bus: int) -> np.ndarray:
    """Planar distance in projected space from each bus to the origin bus."""
    pts = np.array([project_mercator(b.lat, b.lon) for b in case.buses])
    origin = None
    for i, b in enumerate(case.buses):
        if b.idx == origin_bus:
            origin = pts[i]
            break
    if origin is None:
        raise SynthError(f"unknown origin bus {origin_bus}")
    return np.hypot(pts[:, 0] - origin[0], pts[:, 1] - origin[1])


def synth_wave(case: CaseTopology, params: WaveParams, t: float) -> np.ndarray:
    """Per-bus values at time t; before the event (or wave arrival) = f0."""
    n = len(case.buses)
    out = np.full(n, params.f0, dtype=float)
    if t < params.t_event:
        return out
    d = bus_distances(case, params.origin_bus)
    dt = t - params.t_event
    arrived = dt >= d / params.speed
    phase = 2.0 * math.pi * (dt - d / params.speed)
    out[arrived] += (
        params.amplitude * np.cos(phase[arrived]) * math.exp(-params.decay * dt)
    )
    return out
