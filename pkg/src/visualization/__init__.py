"""
Visualization module - Plotly charts for reports.
"""
from .charts import loss_chart, overlay_chart, r2_chart, stability_chart, write_svg

__all__ = ["loss_chart", "overlay_chart", "r2_chart", "stability_chart", "write_svg"]
