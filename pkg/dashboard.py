"""Streamlit viewer for the results directory: streamlit run dashboard.py"""
from pathlib import Path
from typing import Dict, Optional

import pandas as pd
import plotly.express as px
import plotly.graph_objects as go
import streamlit as st

from artifacts import ArtifactManager, get_artifact_manager
from ode_engine import ZETA
from run_config import load_config

ODE_NAMES = {"Y": "y(t) packing", "A": "a(t) triangle-free", "Z": "z(t) earlier packing"}


def build_bounds_figure(frame: pd.DataFrame) -> go.Figure:
    """Packing lower bounds and the covering upper bound against k."""
    fig = px.line(frame, x="k", y=["l_nu_star", "l_nu", "u_tau"],
                  labels={"value": "bound / n^1.5", "variable": "bound"},
                  title="Packing and covering bounds")
    return fig


def build_ratio_figure(frame: pd.DataFrame) -> go.Figure:
    fig = px.line(frame, x="k", y=["g", "h", "ratio"],
                  labels={"value": "ratio", "variable": "curve"},
                  title="Covering / packing ratio")
    fig.add_hline(y=2.0, line_dash="dash", annotation_text="2")
    return fig


def build_ode_figure(frames: Dict[str, pd.DataFrame]) -> go.Figure:
    fig = go.Figure()
    for name, frame in frames.items():
        fig.add_trace(go.Scatter(x=frame["t"], y=frame["value"], mode="lines",
                                 name=ODE_NAMES.get(name, name)))
    fig.add_hline(y=ZETA, line_dash="dot", annotation_text="zeta")
    fig.update_layout(title="ODE solutions", xaxis_title="t", yaxis_title="value")
    return fig


def build_deviation_figure(frame: pd.DataFrame, statistic: str = "mean") -> go.Figure:
    """Deviation per family over t, averaged over trials."""
    rows = frame[(frame["family"] != "diagnostic") & (frame["statistic"] == statistic)]
    averaged = rows.groupby(["t", "family"], as_index=False)["value"].mean()
    return px.line(averaged, x="t", y="value", color="family",
                   labels={"value": f"{statistic} |deviation|"},
                   title=f"{statistic.title()} scaled deviation")


def build_small_graph_figure(frame: pd.DataFrame) -> go.Figure:
    with_triangles = frame[frame["nu"] > 0]
    fig = px.histogram(with_triangles, x="ratio", color="source", nbins=20,
                       title="tau / nu on small graphs")
    fig.add_vline(x=2.0, line_dash="dash")
    return fig


class ResultsDashboard:
    """Tabs over the CSV / JSON artifacts of one results directory."""

    def __init__(self, output_dir: str = "results"):
        self.artifacts: ArtifactManager = get_artifact_manager(output_dir)

    def _frame(self, name: str) -> Optional[pd.DataFrame]:
        path = self.artifacts.path_for(name)
        if not path.exists():
            return None
        return self.artifacts.read_frame(path)

    def render_dashboard(self):
        st.title("Triangle packing and covering experiments")
        tab1, tab2, tab3, tab4, tab5 = st.tabs(["Bounds", "ODE", "Trajectories", "Small graphs", "Export"])

        with tab1:
            self.render_bounds_tab()

        with tab2:
            self.render_ode_tab()

        with tab3:
            self.render_trajectories_tab()

        with tab4:
            self.render_small_graphs_tab()

        with tab5:
            self.render_export_tab()

    def render_bounds_tab(self):
        frame = self._frame("bounds.csv")
        if frame is None:
            st.info("No bounds table yet. Run: python cli.py bounds")
            return
        report_path = self.artifacts.path_for("appendix_report.json")
        if report_path.exists():
            report = self.artifacts.read_json(report_path)
            col1, col2, col3 = st.columns(3)
            col1.metric("max min(g, h)", f"{report['values']['max_ratio']:.4f}")
            col2.metric("g(1.28)", f"{report['values']['g_check']:.4f}")
            col3.metric("h(1.29)", f"{report['values']['h_check']:.4f}")
        st.plotly_chart(build_bounds_figure(frame), use_container_width=True)
        st.plotly_chart(build_ratio_figure(frame), use_container_width=True)

    def render_ode_tab(self):
        frames = {}
        for name in ODE_NAMES:
            frame = self._frame(f"ode_{name}.csv")
            if frame is not None:
                frames[name] = frame
        if not frames:
            st.info("No ODE solutions yet. Run: python cli.py ode")
            return
        st.plotly_chart(build_ode_figure(frames), use_container_width=True)

    def render_trajectories_tab(self):
        runs = [p.name for p in self.artifacts.list_runs("*_trajectories.csv")]
        if not runs:
            st.info("No trajectories yet. Run: python cli.py simulate-packing")
            return
        col1, col2 = st.columns([2, 1])
        with col1:
            run = st.selectbox("Run", options=runs)
        with col2:
            statistic = st.selectbox("Statistic", options=["mean", "max"])
        frame = self._frame(run)
        st.plotly_chart(build_deviation_figure(frame, statistic), use_container_width=True)
        diagnostics = frame[frame["family"] == "diagnostic"]
        if not diagnostics.empty:
            st.dataframe(diagnostics.pivot_table(index="step", columns="statistic", values="value"),
                         use_container_width=True)

    def render_small_graphs_tab(self):
        frame = self._frame("small_graphs.csv")
        if frame is None:
            st.info("No small-graph results yet. Run: python cli.py verify-small")
            return
        st.metric("graphs checked", len(frame))
        st.plotly_chart(build_small_graph_figure(frame), use_container_width=True)
        st.dataframe(frame, use_container_width=True)

    def render_export_tab(self):
        files = self.artifacts.list_runs()
        if not files:
            st.info("The results directory is empty.")
            return
        for path in files:
            with open(path, "rb") as f:
                st.download_button(label=f"Download {path.name}", data=f.read(), file_name=path.name,
                                   key=f"download_{path.name}")


# Singleton instance
_dashboard = None


def get_dashboard(output_dir: str = "results") -> ResultsDashboard:
    """Get the dashboard singleton instance."""
    global _dashboard
    if _dashboard is None or _dashboard.artifacts.output_dir != Path(output_dir):
        _dashboard = ResultsDashboard(output_dir)
    return _dashboard


if __name__ == "__main__":
    st.set_page_config(page_title="Triangle experiments", layout="wide")
    output_dir = st.sidebar.text_input("Results directory", value=load_config()["output"]["dir"])
    get_dashboard(output_dir).render_dashboard()
