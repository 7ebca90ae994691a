"""Desk-scale scenario presets: table1, table2, fig3 and fig4."""

from __future__ import annotations

from dataclasses import replace

from .geometry import Domain
from .harness import ProcedureConfig, ScenarioConfig, SweepConfig
from .observation import ObservationModel

ALPHAS = [0.1, 0.05, 0.01, 0.005]
SPEED_OF_LIGHT = 3.0e8
# mean onset time, chosen so that rho is about 0.02 at 1 MHz
DESK_BETA = 50e-6


def flat_procedures(grid=(10, 50, 100)) -> list:
    procs = [ProcedureConfig(f"RP M={m}", "rp", m) for m in grid]
    procs.append(ProcedureConfig("RP mismatched", "rp-mismatched", 50, mismatch_increment=5))
    procs.append(ProcedureConfig("Oracle", "oracle"))
    procs.append(ProcedureConfig("Instant", "instant"))
    return procs


def flat_base(trials: int = 2000, seed: int = 1, L: int = 100) -> ScenarioConfig:
    return ScenarioConfig(
        name="flat", domain=Domain.square(10.0), sensor_policy="per-slot-resample", L=L,
        true_origin="uniform", rho=0.02, rho1=0.25, model=ObservationModel("flat", 1.0, 1.0),
        procedures=flat_procedures(), alpha=0.01, trials=trials, seed=seed)


def table1(trials: int = 2000, seed: int = 1) -> ScenarioConfig:
    return replace(flat_base(trials, seed), name="table1", sweep=SweepConfig("alpha", list(ALPHAS)))


def fig3(trials: int = 500, seed: int = 3) -> list:
    base = flat_base(trials, seed)
    return [
        replace(base, name="fig3-alpha", sweep=SweepConfig("alpha", [0.1, 0.05, 0.01, 0.005, 0.001])),
        replace(base, name="fig3-rho1", alpha=0.01, sweep=SweepConfig("rho1", [0.1, 0.25, 0.5, 0.75, 1.0])),
        replace(base, name="fig3-snr", alpha=0.1, sweep=SweepConfig("snr", [-10.0, -5.0, 0.0, 5.0, 10.0])),
    ]


def cluster_base(trials: int, seed: int, clusters: int, p_inf: float, deadline: float,
                 M: int = 10) -> ScenarioConfig:
    fs = 1e6
    return ScenarioConfig(
        name="cluster", domain=Domain.square(5000.0), sensor_policy="fixed-list", L=100,
        true_origin="uniform", rho=0.02, rho1=1.0, p_inf=p_inf,
        model=ObservationModel("attenuating", 1.0, 2.0, 2.0, 500.0, "reference-scaled"),
        procedures=[ProcedureConfig(f"RP M={M}", "rp", M), ProcedureConfig("Oracle", "oracle"),
                    ProcedureConfig("Instant-Oracle", "instant-oracle"),
                    ProcedureConfig("Instant", "instant", M, origins="grid")],
        alpha=0.01, trials=trials, seed=seed, clusters=clusters, deadline=deadline,
        fs=fs, beta=DESK_BETA, propagation_speed=SPEED_OF_LIGHT)


def table2(trials: int = 300, seed: int = 2) -> ScenarioConfig:
    return replace(cluster_base(trials, seed, 20, 0.2, 200.0), name="table2",
                   sweep=SweepConfig("alpha", list(ALPHAS)))


def fig4(trials: int = 300, seed: int = 4) -> ScenarioConfig:
    return replace(cluster_base(trials, seed, 1, 0.0, 10_000.0), name="fig4",
                   sweep=SweepConfig("fs", [0.5e6, 1e6, 2e6, 4e6]))


PRESETS = {
    "table1": lambda trials=None, seed=None: [table1(**_kw(trials, seed))],
    "table2": lambda trials=None, seed=None: [table2(**_kw(trials, seed))],
    "fig3": lambda trials=None, seed=None: fig3(**_kw(trials, seed)),
    "fig4": lambda trials=None, seed=None: [fig4(**_kw(trials, seed))],
}


def _kw(trials, seed) -> dict:
    kw = {}
    if trials is not None:
        kw["trials"] = trials
    if seed is not None:
        kw["seed"] = seed
    return kw
