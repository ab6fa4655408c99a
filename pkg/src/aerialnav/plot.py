"""Top-down SVG of an episode: obstacles, flown path, target and success circle."""
from __future__ import annotations

from xml.sax.saxutils import escape

from .evaluation import SUCCESS_RADIUS
from .expert import Trajectory
from .sim import Scene

MARGIN = 25.0


def _path_points(traj: Trajectory) -> list[tuple[float, float]]:
    pts = [(f.pose.x, f.pose.y) for f in traj.frames]
    end = (traj.final_pose.x, traj.final_pose.y)
    if not pts or pts[-1] != end:
        pts.append(end)
    return pts


def trajectory_svg(traj: Trajectory, scene: Scene, scale: float = 2.0) -> str:
    """Render in world meters; the y axis is flipped so +y points up."""
    pts = _path_points(traj)
    tx, ty, _ = scene.target
    xs = [p[0] for p in pts] + [tx - SUCCESS_RADIUS, tx + SUCCESS_RADIUS]
    ys = [p[1] for p in pts] + [ty - SUCCESS_RADIUS, ty + SUCCESS_RADIUS]
    for o in scene.obstacles:
        xs += [o.lo[0], o.hi[0]]
        ys += [o.lo[1], o.hi[1]]
    x0, x1 = min(xs) - MARGIN, max(xs) + MARGIN
    y0, y1 = min(ys) - MARGIN, max(ys) + MARGIN
    w, h = x1 - x0, y1 - y0

    def fmt(v):
        return f"{v:.3f}"

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{fmt(w * scale)}" height="{fmt(h * scale)}" '
        f'viewBox="{fmt(x0)} {fmt(-y1)} {fmt(w)} {fmt(h)}">',
        f"<title>seed {traj.seed} {escape(traj.difficulty)} {escape(traj.status)}</title>",
        f'<rect x="{fmt(x0)}" y="{fmt(-y1)}" width="{fmt(w)}" height="{fmt(h)}" fill="white"/>',
    ]
    for i, o in enumerate(scene.obstacles):
        out.append(
            f'<rect class="obstacle" data-index="{i}" x="{fmt(o.lo[0])}" y="{fmt(-o.hi[1])}" '
            f'width="{fmt(o.hi[0] - o.lo[0])}" height="{fmt(o.hi[1] - o.lo[1])}" '
            f'fill="#999" stroke="#444" stroke-width="0.5"/>'
        )
    out.append(
        f'<circle class="success-radius" cx="{fmt(tx)}" cy="{fmt(-ty)}" r="{fmt(SUCCESS_RADIUS)}" '
        f'fill="none" stroke="green" stroke-dasharray="3 2" stroke-width="0.6"/>'
    )
    out.append(f'<circle class="target" cx="{fmt(tx)}" cy="{fmt(-ty)}" r="1.5" fill="green"/>')
    poly = " ".join(f"{fmt(x)},{fmt(-y)}" for x, y in pts)
    out.append(f'<polyline class="path" points="{poly}" fill="none" stroke="blue" stroke-width="0.8"/>')
    sx, sy = pts[0]
    out.append(f'<circle class="start" cx="{fmt(sx)}" cy="{fmt(-sy)}" r="1.5" fill="black"/>')
    ex, ey = pts[-1]
    if traj.status == "landed":
        out.append(
            f'<path class="landing" d="M {fmt(ex - 2)} {fmt(-ey - 2)} L {fmt(ex + 2)} {fmt(-ey + 2)} '
            f'M {fmt(ex - 2)} {fmt(-ey + 2)} L {fmt(ex + 2)} {fmt(-ey - 2)}" stroke="red" stroke-width="0.8"/>'
        )
    else:
        out.append(f'<circle class="end" cx="{fmt(ex)}" cy="{fmt(-ey)}" r="1.5" fill="red"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"
