# chart.py

from pathlib import Path

import plotly.graph_objects as go

from .config import NS
from .utils import localize, to_ps


def _dark_layout(fig: go.Figure, title: str, x_title: str, y_title: str):
    fig.update_layout(
        title=title,
        title_x=0.1,
        xaxis_title=x_title,
        yaxis_title=y_title,
        plot_bgcolor="#111",
        paper_bgcolor="#111",
        font=dict(color="white"),
        height=600,
        legend=dict(orientation="h", yanchor="bottom", y=-0.25, xanchor="center", x=0.5, font=dict(size=13)),
        yaxis=dict(showgrid=True, gridcolor="#222", rangemode="tozero"),
        xaxis=dict(showgrid=True, gridcolor="#222"),
    )
    return fig


def skew_figure(report, lang: str = "en") -> go.Figure:
    """Local and global skew over time with both bounds and scenario markers."""
    times_ns = [t / NS for t in report.times]
    fig = go.Figure()
    fig.add_trace(go.Scatter(x=times_ns, y=[to_ps(v) for v in report.local], mode="lines",
                             name=localize("line.local", lang), line=dict(color="deepskyblue", width=2)))
    fig.add_trace(go.Scatter(x=times_ns, y=[to_ps(v) for v in report.global_], mode="lines",
                             name=localize("line.global", lang), line=dict(color="orange", width=2)))

    if report.bounds is not None:
        end = times_ns[-1] if times_ns else 0
        for value, key, color in ((report.bounds.local_bound, "line.local_bound", "deepskyblue"),
                                  (report.bounds.global_bound, "line.global_bound", "orange")):
            fig.add_trace(go.Scatter(x=[0, end], y=[to_ps(value)] * 2, mode="lines",
                                     line=dict(color=color, dash="dot"), name=localize(key, lang)))

    for marker in report.markers:
        fig.add_vline(x=marker.time / NS, line_width=1, line_dash="dash", line_color="gray")
        fig.add_annotation(x=marker.time / NS, y=to_ps(report.max_global), text=marker.label,
                           showarrow=False, font=dict(color="gray", size=12), bgcolor="black", opacity=0.7)

    return _dark_layout(fig, f"{localize('chart.skew_title', lang)}: {report.scenario}",
                        localize("chart.time_ns", lang), localize("chart.skew_ps", lang))


def edge_figure(report, lang: str = "en") -> go.Figure:
    times_ns = [t / NS for t in report.times]
    fig = go.Figure()
    for (u, v), series in report.edge_skews.items():
        fig.add_trace(go.Scatter(x=times_ns, y=[to_ps(x) for x in series], mode="lines", name=f"{u}-{v}"))
    return _dark_layout(fig, localize("chart.edge_title", lang),
                        localize("chart.time_ns", lang), localize("chart.skew_ps", lang))


def sweep_figure(frame, axis: str, lang: str = "en") -> go.Figure:
    """One curve per skew column of a sweep table against the swept axis."""
    fig = go.Figure()
    for column in frame.columns:
        if not column.endswith("_ps"):
            continue
        fig.add_trace(go.Scatter(x=frame[axis], y=frame[column], mode="lines+markers",
                                 name=localize(f"sweep.{column}", lang)))
    return _dark_layout(fig, localize("chart.sweep_title", lang), axis, localize("chart.skew_ps", lang))


def estimate_figure(points, kappa: int, delta: int, lang: str = "en") -> go.Figure:
    """(est_min, est_max) trajectory of one node with the first fast-trigger and slow boundaries."""
    fig = go.Figure()
    fig.add_trace(go.Scatter(x=[to_ps(p[0]) for p in points], y=[to_ps(p[1]) for p in points],
                             mode="lines+markers", name=localize("line.estimates", lang)))
    fig.add_hline(y=to_ps(kappa - delta), line_dash="dash", line_color="green")
    fig.add_vline(x=to_ps(-kappa - delta), line_dash="dash", line_color="green")
    fig.add_hline(y=0, line_dash="dot", line_color="red")
    fig.add_vline(x=0, line_dash="dot", line_color="red")
    return _dark_layout(fig, localize("chart.estimate_title", lang),
                        localize("chart.est_min", lang), localize("chart.est_max", lang))


def write_figure(fig: go.Figure, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.write_json(str(path))
    return path


__all__ = ['skew_figure', 'edge_figure', 'sweep_figure', 'estimate_figure', 'write_figure']
