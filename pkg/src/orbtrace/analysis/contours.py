"""Counting the copies of straight lines seen through the orb.

An isotropic ball images each line once. Averaging the renders of two
refractive indices (the stand-in for a birefringent crystal) images every
line twice at slightly different places, so a line off the centre shows up
as a pair of fainter tracks.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import find_peaks

from ..scene.camera import Circle
from .tracks import NOISE_K, log_luminance, sample_profiles

SPAN = 0.85            # cross sections reach this fraction of the radius
STATION_SPAN = 0.3     # stations along the line direction, in radii about the centre
N_STATIONS = 25
RELATIVE_PROMINENCE = 0.25
CENTRE_ZONE = 0.05     # tracks closer than this (in radii) count as central
MIN_SEPARATION_PX = 3.0


@dataclass
class TrackProfile:
    offsets: np.ndarray      # perpendicular offsets of the tracks from the centre (px)
    prominence: np.ndarray   # median peak prominence per track (log units)
    support: np.ndarray      # fraction of stations where the track was found


@dataclass
class DoubleContourResult:
    detected: bool
    tracks: TrackProfile
    lines_per_side: tuple    # expected lines left/right of the centre
    tracks_per_side: tuple
    details: dict = field(default_factory=dict)


def _station_peaks(t, prof, min_rel: float):
    out = []
    step = t[1] - t[0]
    for p in prof:
        if not np.all(np.isfinite(p)):
            out.append((np.empty(0), np.empty(0)))
            continue
        dark = np.percentile(p, 90) - p
        d = np.diff(dark)
        noise = 1.4826 * np.median(np.abs(d - np.median(d))) / np.sqrt(2.0)
        idx, props = find_peaks(dark, distance=max(1, int(round(MIN_SEPARATION_PX / step))),
                                prominence=max(NOISE_K * noise, 1e-12))
        prom = props["prominences"]
        if len(idx):
            keep = prom >= min_rel * prom.max()
            idx, prom = idx[keep], prom[keep]
        out.append((t[idx], prom))
    return out


def find_tracks(image, circle: Circle, direction, min_support: float = 0.5) -> TrackProfile:
    """Dark tracks crossing the disk roughly along ``direction``.

    Profiles perpendicular to ``direction`` are taken at stations through the
    central part of the disk. Peaks found at individual stations are merged
    into tracks when they lie within ``MIN_SEPARATION_PX`` of a running track;
    tracks seen at fewer than ``min_support`` of the stations are dropped.
    """
    logl = log_luminance(image)
    d = np.asarray(direction, dtype=np.float64)
    d = d / np.linalg.norm(d)
    normal = np.array([-d[1], d[0]])
    R = circle.r
    s = np.linspace(-STATION_SPAN * R, STATION_SPAN * R, N_STATIONS)
    centres = np.array([circle.cx, circle.cy])[None, :] + s[:, None] * d[None, :]
    # each profile covers the chord of the SPAN circle at its station
    half = SPAN * R * np.sqrt(1.0 - (STATION_SPAN / SPAN) ** 2)
    t, prof = sample_profiles(logl, centres, normal, half)
    peaks = _station_peaks(t, prof, RELATIVE_PROMINENCE)

    tracks = []  # [positions], [prominences]
    for pos, prom in peaks:
        for x, p in zip(pos, prom):
            best = None
            for tr in tracks:
                dist = abs(np.median(tr[0]) - x)
                if dist <= MIN_SEPARATION_PX and (best is None or dist < best[0]):
                    best = (dist, tr)
            if best is None:
                tracks.append(([x], [p]))
            else:
                best[1][0].append(x)
                best[1][1].append(p)
    tracks = [tr for tr in tracks if len(tr[0]) >= min_support * N_STATIONS]
    tracks.sort(key=lambda tr: np.median(tr[0]))
    return TrackProfile(
        offsets=np.array([np.median(tr[0]) for tr in tracks]),
        prominence=np.array([np.median(tr[1]) for tr in tracks]),
        support=np.array([len(tr[0]) / N_STATIONS for tr in tracks]),
    )


def detect_double_contour(image, circle: Circle, expected_lines) -> DoubleContourResult:
    """Does every off-centre line appear as two distinct tracks inside the disk?

    ``expected_lines`` are image segments ``(p0, p1)`` of roughly parallel
    lines. A lens images the lines on one side of the centre onto one side
    (upright or inverted), so with single imaging each side holds as many
    tracks as there are off-centre lines on one side. A double contour means
    each side holds at least twice that many.
    """
    segs = [(np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)) for a, b in expected_lines]
    if not segs:
        raise ValueError("no expected lines")
    d = segs[0][1] - segs[0][0]
    d /= np.linalg.norm(d)
    normal = np.array([-d[1], d[0]])
    centre = np.array([circle.cx, circle.cy])
    zone = CENTRE_ZONE * circle.r
    line_offsets = np.array([float((0.5 * (a + b) - centre) @ normal) for a, b in segs])
    per_side = (int(np.sum(line_offsets < -zone)), int(np.sum(line_offsets > zone)))
    tracks = find_tracks(image, circle, d)
    off = tracks.offsets
    found = (int(np.sum(off < -zone)), int(np.sum(off > zone)))
    need = max(per_side)
    detected = need > 0 and min(found) >= 2 * need
    return DoubleContourResult(bool(detected), tracks, per_side, found,
                               {"line_offsets_px": line_offsets.tolist()})
