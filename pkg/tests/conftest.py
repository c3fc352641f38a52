"""Shared fixtures: deterministic chart data and an offline gateway."""

import random

import pytest

from chartforge.gateway import Gateway, GatewayConfig
from chartforge.model import ChartData, ChartType, DataPoint, Series
from chartforge.synth import random_chart_data

ALL_TYPES = list(ChartType)


def make_data(chart_type: ChartType | str, seed: int = 0, topic=None) -> ChartData:
    """Schema-valid random chart data, reproducible from the seed."""
    return random_chart_data(ChartType(chart_type), random.Random(seed), topic=topic)


def simple_bar() -> ChartData:
    # Hand-picked values so oracle assertions can be written by eye.
    return ChartData(
        chart_type=ChartType.V_BAR,
        title="Widget Sales by Quarter",
        x_label="Quarter",
        y_label="Units",
        series=[
            Series(
                name="Units",
                color="#1f77b4",
                points=[
                    DataPoint(value=10.0, label="Q1"),
                    DataPoint(value=25.0, label="Q2"),
                    DataPoint(value=25.0, label="Q3"),
                    DataPoint(value=4.0, label="Q4"),
                ],
            )
        ],
        topic="widget sales",
    )


def simple_pie() -> ChartData:
    return ChartData(
        chart_type=ChartType.PIE,
        title="Fleet by Drivetrain",
        x_label="",
        y_label="",
        series=[
            Series(
                name="Vehicles",
                color="#2ca02c",
                points=[
                    DataPoint(value=60.0, label="Diesel"),
                    DataPoint(value=30.0, label="Hybrid"),
                    DataPoint(value=10.0, label="Electric"),
                ],
            )
        ],
        topic="fleet composition",
    )


def simple_lines() -> ChartData:
    return ChartData(
        chart_type=ChartType.LINE,
        title="Output by Shift",
        x_label="Hour",
        y_label="Output",
        series=[
            Series(
                name="Day",
                color="#d62728",
                points=[
                    DataPoint(value=5.0, x=1.0),
                    DataPoint(value=9.0, x=2.0),
                    DataPoint(value=7.0, x=3.0),
                ],
            ),
            Series(
                name="Night",
                color="#9467bd",
                points=[
                    DataPoint(value=4.0, x=1.0),
                    DataPoint(value=6.0, x=2.0),
                    DataPoint(value=8.0, x=3.0),
                ],
            ),
        ],
        topic="shift output",
    )


def simple_grouped() -> ChartData:
    return ChartData(
        chart_type=ChartType.V_GROUPED_BAR,
        title="Enrollment by Campus",
        x_label="Term",
        y_label="Students",
        series=[
            Series(
                name="North",
                color="#1f77b4",
                points=[
                    DataPoint(value=120.0, label="Fall"),
                    DataPoint(value=90.0, label="Spring"),
                ],
            ),
            Series(
                name="South",
                color="#ff7f0e",
                points=[
                    DataPoint(value=150.0, label="Fall"),
                    DataPoint(value=80.0, label="Spring"),
                ],
            ),
        ],
        topic="enrollment",
    )


@pytest.fixture
def rng() -> random.Random:
    return random.Random(1234)


@pytest.fixture
def mock_gateway() -> Gateway:
    return Gateway(GatewayConfig(mode="mock", mock_seed=42))


class ScriptedTransport:
    """Transport double: pops canned outcomes, records every request."""

    def __init__(self, outcomes):
        self.outcomes = list(outcomes)
        self.requests = []

    def __call__(self, req):
        self.requests.append(req)
        outcome = self.outcomes.pop(0)
        if isinstance(outcome, Exception):
            raise outcome
        return outcome
