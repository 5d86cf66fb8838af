"""Shared fixtures: the expensive Monte Carlo runs are simulated once
per session and reused by the harness tests and the acceptance suite."""

import dataclasses

import pytest

from onebitdet import ggn, harness


@pytest.fixture(scope="session")
def fig2_stats():
    """fig2-roc preset (beta=8) with both detectors: (config, stats)."""
    config = dataclasses.replace(
        harness.preset("fig2-roc"), detectors=(harness.DETECTOR_GLRT, harness.DETECTOR_RAO)
    )
    return config, harness.detector_stats(config)


@pytest.fixture(scope="session")
def fig2_curves_beta8(fig2_stats):
    config, stats = fig2_stats
    return config, {
        (c.detector, c.threshold_label): c for c in harness.empirical_roc(config, stats)
    }


@pytest.fixture(scope="session")
def fig2_curves_beta15():
    base = harness.preset("fig2-roc")
    scenario = dataclasses.replace(base.scenario, noise=ggn.GGNParams(1.0, 1.5))
    config = dataclasses.replace(base, scenario=scenario)
    return config, {
        (c.detector, c.threshold_label): c for c in harness.empirical_roc(config)
    }


@pytest.fixture(scope="session")
def fig3_curves():
    config = harness.preset("fig3-acoustic")
    return config, {
        (c.detector, c.threshold_label): c for c in harness.empirical_roc(config)
    }
