"""Byte-deterministic SVG rendering of terminal clouds and mean frames.

The figure shows, for each canonical basis vector of R^3, the point cloud
of terminal ensemble members applied to that vector, together with the
frames of the predicted mean, the empirical mean, and the identity, under
a fixed orthographic camera.  The SVG is assembled by hand with fixed
float formatting so identical inputs give identical bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import harness

_WIDTH = 640
_HEIGHT = 640
_CX = 320.0
_CY = 330.0
_SCALE = 230.0

_CLOUD_COLORS = ("#6baed6", "#74c476", "#fd8d3c")
_PREDICTED_COLOR = "#d62728"
_EMPIRICAL_COLOR = "#1f77b4"
_IDENTITY_COLOR = "#555555"


def _camera():
    az = np.deg2rad(35.0)
    el = np.deg2rad(22.0)
    forward = np.array(
        [np.cos(el) * np.cos(az), np.cos(el) * np.sin(az), np.sin(el)]
    )
    right = np.array([-forward[1], forward[0], 0.0])
    right /= np.linalg.norm(right)
    up = np.cross(forward, right)
    return right, up


_RIGHT, _UP = _camera()


def _fmt(x) -> str:
    return f"{float(x):.3f}"


def _project(p):
    p = np.asarray(p, dtype=float)
    return _CX + _SCALE * float(_RIGHT @ p), _CY - _SCALE * float(_UP @ p)


def _arrow(parts, p3, color, width):
    x0, y0 = _CX, _CY
    x1, y1 = _project(p3)
    parts.append(
        f'<line x1="{_fmt(x0)}" y1="{_fmt(y0)}" x2="{_fmt(x1)}" y2="{_fmt(y1)}" '
        f'stroke="{color}" stroke-width="{_fmt(width)}"/>'
    )
    dx, dy = x1 - x0, y1 - y0
    length = max(np.hypot(dx, dy), 1e-9)
    ux, uy = dx / length, dy / length
    px, py = -uy, ux
    head = [
        (x1, y1),
        (x1 - 12.0 * ux + 5.0 * px, y1 - 12.0 * uy + 5.0 * py),
        (x1 - 12.0 * ux - 5.0 * px, y1 - 12.0 * uy - 5.0 * py),
    ]
    pts = " ".join(f"{_fmt(x)},{_fmt(y)}" for x, y in head)
    parts.append(f'<polygon points="{pts}" fill="{color}"/>')


def _legend_line(parts, x, y, color, label):
    parts.append(
        f'<rect x="{_fmt(x)}" y="{_fmt(y - 9)}" width="12" height="12" fill="{color}"/>'
    )
    parts.append(
        f'<text x="{_fmt(x + 18)}" y="{_fmt(y + 1)}" font-family="Helvetica, Arial, sans-serif" '
        f'font-size="12" fill="#222222">{label}</text>'
    )


def render_svg(members, mean_pred, mean_emp, config_hash, mean_distance) -> str:
    """SVG text for the cloud/frames picture; pure function of its inputs."""
    members = np.asarray(members, dtype=float)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" height="{_HEIGHT}" '
        f'viewBox="0 0 {_WIDTH} {_HEIGHT}">',
        f'<rect x="0" y="0" width="{_WIDTH}" height="{_HEIGHT}" fill="#ffffff"/>',
        f'<circle cx="{_fmt(_CX)}" cy="{_fmt(_CY)}" r="{_fmt(_SCALE)}" '
        f'fill="none" stroke="#dddddd" stroke-width="1"/>',
    ]
    for i in range(3):
        _arrow(parts, np.eye(3)[:, i], _IDENTITY_COLOR, 1.5)
    for i in range(3):
        color = _CLOUD_COLORS[i]
        for member in members:
            x, y = _project(member[:, i])
            parts.append(
                f'<circle cx="{_fmt(x)}" cy="{_fmt(y)}" r="2" fill="{color}" '
                f'fill-opacity="0.35"/>'
            )
    for i in range(3):
        _arrow(parts, np.asarray(mean_emp, dtype=float)[:, i], _EMPIRICAL_COLOR, 3.0)
    for i in range(3):
        _arrow(parts, np.asarray(mean_pred, dtype=float)[:, i], _PREDICTED_COLOR, 1.5)
    y = 24.0
    for color, label in (
        (_CLOUD_COLORS[0], "sample cloud, axis 1"),
        (_CLOUD_COLORS[1], "sample cloud, axis 2"),
        (_CLOUD_COLORS[2], "sample cloud, axis 3"),
        (_EMPIRICAL_COLOR, "empirical mean frame"),
        (_PREDICTED_COLOR, "predicted mean frame"),
        (_IDENTITY_COLOR, "identity frame"),
    ):
        _legend_line(parts, 16.0, y, color, label)
        y += 18.0
    parts.append(
        f'<text x="16" y="{_HEIGHT - 30}" font-family="Helvetica, Arial, sans-serif" '
        f'font-size="12" fill="#222222">mean distance {mean_distance:.3e}</text>'
    )
    parts.append(
        f'<text x="16" y="{_HEIGHT - 12}" font-family="Helvetica, Arial, sans-serif" '
        f'font-size="12" fill="#222222">config {config_hash}</text>'
    )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def run_figure(outdir) -> Path:
    """Render ``figure.svg`` from existing compare outputs in ``outdir``."""
    outdir = Path(outdir)
    report_path = outdir / "report.json"
    with open(report_path, encoding="utf-8") as fh:
        report = json.load(fh)
    n_steps = int(report["config"]["N"])
    members, _ = harness.read_ensemble_csv(outdir / f"ensemble_{n_steps}.csv")
    mean_pred = np.asarray(report["prediction"]["mean"], dtype=float).reshape(3, 3)
    mean_emp = np.asarray(report["frechet"]["mean"], dtype=float).reshape(3, 3)
    svg = render_svg(
        members,
        mean_pred,
        mean_emp,
        report["config_hash"],
        float(report["mean_distance"]),
    )
    out_path = outdir / "figure.svg"
    out_path.write_text(svg, encoding="utf-8", newline="\n")
    return out_path
