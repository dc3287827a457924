"""
Report charts using Plotly.
"""
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
import plotly.express as px
import plotly.graph_objects as go

from src.errors import DataError

# Lowest R² shown on chart axes; data below it stays in CSV/JSON
R2_AXIS_FLOOR = -0.1


def _format_column_label(col_name: str) -> str:
    """Formats column name for better display."""
    return {"r2": "R²", "omega": "ω", "amplitude": "A"}.get(col_name, col_name.replace("_", " ").title())


def r2_chart(frame: pd.DataFrame, title: str = "R² vs ω") -> go.Figure:
    """
    Line chart of R² against drive frequency, one trace per amplitude.

    Args:
        frame: Columns omega, amplitude, r2 (r2 may hold NaN for undefined scores).
        title: Chart title.
    """
    df = frame.dropna(subset=["r2"]).sort_values(["amplitude", "omega"])
    df = df.assign(amplitude=df["amplitude"].map(lambda a: f"{a:g}"))

    fig = px.line(
        df,
        x="omega",
        y="r2",
        color="amplitude" if df["amplitude"].nunique() > 1 else None,
        markers=True,
        title=title,
        labels={c: _format_column_label(c) for c in ("omega", "r2", "amplitude")},
    )
    low = float(df["r2"].min()) if len(df) else 0.0
    fig.update_layout(
        yaxis_range=[max(R2_AXIS_FLOOR, min(0.0, low) - 0.02), 1.02],
        hovermode="x unified",
    )
    return fig


def stability_chart(frame: pd.DataFrame, title: str = "Fraction of test cases above threshold") -> go.Figure:
    """Grouped bars per partition seed, one bar per R² threshold column."""
    value_cols = [c for c in frame.columns if c != "seed"]
    long = frame.melt(id_vars="seed", value_vars=value_cols, var_name="threshold", value_name="percent")
    fig = px.bar(
        long,
        x="seed",
        y="percent",
        color="threshold",
        barmode="group",
        title=title,
        labels={"seed": "Partition seed", "percent": "% of test cases"},
    )
    fig.update_layout(yaxis_range=[0, 100], xaxis_type="category")
    return fig


def overlay_chart(drive: np.ndarray, target: np.ndarray, prediction: np.ndarray, title: str) -> go.Figure:
    """Scaled input, target and prediction against the step index."""
    steps = np.arange(1, len(target) + 1)
    fig = go.Figure()
    colors = px.colors.qualitative.Set2
    for i, (name, values, dash) in enumerate(
        [("input h", drive, "dot"), ("target", target, "solid"), ("prediction", prediction, "dash")]
    ):
        fig.add_trace(go.Scatter(
            x=steps,
            y=values,
            name=name,
            mode="lines",
            line=dict(color=colors[i % len(colors)], width=2, dash=dash),
        ))
    fig.update_layout(title=title, xaxis_title="k", yaxis_title="scaled value", showlegend=True)
    return fig


def loss_chart(history: Sequence[dict], title: str = "Training loss") -> go.Figure:
    """Log-scale MSE, penalty and total loss per epoch."""
    df = pd.DataFrame(list(history))
    long = df.melt(id_vars="epoch", value_vars=["mse", "penalty", "total"], var_name="term", value_name="loss")
    fig = px.line(long, x="epoch", y="loss", color="term", title=title, log_y=True)
    return fig


def write_svg(fig: go.Figure, path: str | Path) -> Path:
    """
    Render a figure to SVG through kaleido.

    Raises:
        DataError: If the path cannot be written.
    """
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fig.write_image(str(path), format="svg")
    except OSError as e:
        raise DataError(f"Cannot write chart to {path}: {e}") from e
    return path
