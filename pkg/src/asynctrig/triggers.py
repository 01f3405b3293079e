"""The four self-triggering mechanisms.

All four select, at each triggering instant, the horizon maximizing the
average-idle objective inside a certificate-defined admissible set:

  online unperturbed   per-state quadratic test eta'(Phi'P Phi - rho P)eta
  offline unperturbed  per-region S-procedure table built once
  online perturbed     per-state test (eta;1)' U_sigma (eta;1), ellipsoid gate
  offline perturbed    per-region table of assembled U_c checks, same gate

Metric ties are broken uniformly at random with a counter-based generator
keyed by (seed, step index), so decisions are reproducible and independent
of execution order.
"""

from dataclasses import dataclass

import numpy as np

from .certificates import (
    PerturbedOfflineCertificate,
    PerturbedOnlineCertificate,
    UnperturbedCertificate,
    build_U_sigma,
    decay_factor,
    max_eps_feasible,
)
from .errors import ConfigError
from .horizons import avg_idle_metric, horizon_to_text
from .matrix_core import spectral_norm
from .partition import region_of, sprocedure_feasible
from .plant import transition_table

IDLE_HORIZON = (0,)

# admissibility slack, scaled by the state magnitude so triggering behaves
# uniformly near and far from the origin
FEAS_TOL = 1e-12


@dataclass(frozen=True)
class TriggerDecision:
    horizon: tuple
    metric: float
    feasible_count: int
    tie_count: int
    mode: str


@dataclass(frozen=True)
class OfflineTable:
    psi: tuple  # per-region tuple of optimal horizons
    metric: tuple  # the shared metric value per region
    mode: str
    m: int  # sensor count, needed to score the idle horizon


def _tie_break(ties, rng_seed: int, step_index: int):
    rng = np.random.Generator(np.random.Philox(key=[rng_seed, step_index]))
    return ties[rng.integers(len(ties))]


def _argmax_ties(candidates, metrics):
    best = max(metrics[s] for s in candidates)
    return best, [s for s in candidates if metrics[s] == best]


class OnlineUnperturbedPolicy:
    """Precomputed per-horizon forms for the unperturbed online trigger."""

    mode = "online-unperturbed"

    def __init__(self, cert: UnperturbedCertificate, horizons, dp):
        sigma_star = tuple(cert.sigma_star)
        horizons = [tuple(s) for s in horizons]
        if sigma_star not in horizons:
            raise ConfigError(f"fallback horizon {sigma_star} missing from the horizon set")
        self.cert = cert
        self.horizons = horizons
        self.sigma_star = sigma_star
        phis = transition_table(dp, horizons)
        P = cert.P
        self.G = {
            s: phis[s].T @ P @ phis[s] - decay_factor(cert.beta, len(s), cert.T) * P
            for s in horizons
        }
        self.metrics = {s: avg_idle_metric(s, dp.m) for s in horizons}
        self.P_norm = spectral_norm(P)

    def select(self, eta, rng_seed: int, step_index: int = 0) -> TriggerDecision:
        eta = np.asarray(eta, dtype=float)
        slack = FEAS_TOL * (eta @ eta) * self.P_norm
        feas = [s for s in self.horizons if eta @ self.G[s] @ eta <= slack]
        if not feas:
            feas = [self.sigma_star]  # guaranteed admissible; guards roundoff
        best, ties = _argmax_ties(feas, self.metrics)
        chosen = _tie_break(ties, rng_seed, step_index)
        return TriggerDecision(
            horizon=chosen,
            metric=best,
            feasible_count=len(feas),
            tie_count=len(ties),
            mode=self.mode,
        )


class OnlinePerturbedPolicy:
    """Perturbed online trigger: ellipsoid gate plus per-horizon U_sigma test."""

    mode = "online-perturbed"

    def __init__(self, cert: PerturbedOnlineCertificate, horizons, dp):
        sigma_star = tuple(cert.sigma_star)
        horizons = [tuple(s) for s in horizons]
        if sigma_star not in horizons:
            raise ConfigError(f"fallback horizon {sigma_star} missing from the horizon set")
        self.cert = cert
        self.horizons = horizons
        self.sigma_star = sigma_star
        self.m = dp.m
        phis = transition_table(dp, horizons)
        self.blocks = {}
        self.scalars = {}
        nn = cert.P.shape[0]
        for s in horizons:
            U = build_U_sigma(
                cert.P,
                cert.M,
                cert.gamma,
                phis[s],
                decay_factor(cert.beta, len(s), cert.T),
                cert.chi_squared[len(s)],
            )
            self.blocks[s] = U[:nn, :nn]
            self.scalars[s] = U[nn, nn]
        self.metrics = {s: avg_idle_metric(s, dp.m) for s in horizons}

    def select(self, eta, rng_seed: int, step_index: int = 0) -> TriggerDecision:
        eta = np.asarray(eta, dtype=float)
        if eta @ self.cert.P @ eta <= 1.0:
            # inside E(P,1): wait one period without sampling
            return TriggerDecision(
                horizon=IDLE_HORIZON,
                metric=avg_idle_metric(IDLE_HORIZON, self.m),
                feasible_count=1,
                tie_count=1,
                mode=self.mode,
            )
        slack = -FEAS_TOL * max(1.0, float(eta @ eta))
        feas = [
            s
            for s in self.horizons
            if eta @ self.blocks[s] @ eta + self.scalars[s] >= slack
        ]
        if not feas:
            feas = [self.sigma_star]
        best, ties = _argmax_ties(feas, self.metrics)
        chosen = _tie_break(ties, rng_seed, step_index)
        return TriggerDecision(
            horizon=chosen,
            metric=best,
            feasible_count=len(feas),
            tie_count=len(ties),
            mode=self.mode,
        )


def online_unperturbed_select(eta, cert, horizons, rng_seed: int, dp, step_index: int = 0):
    """One-shot form of the unperturbed online selection."""
    return OnlineUnperturbedPolicy(cert, horizons, dp).select(eta, rng_seed, step_index)


def online_perturbed_select(eta, cert, horizons, rng_seed: int, dp, step_index: int = 0):
    """One-shot form of the perturbed online selection."""
    return OnlinePerturbedPolicy(cert, horizons, dp).select(eta, rng_seed, step_index)


def build_offline_table_unperturbed(cert: UnperturbedCertificate, horizons, regions, dp) -> OfflineTable:
    """Per-region optimal-horizon sets via the S-procedure feasibility test.

    A horizon enters a region's candidate set when some multiplier certifies
    the Lyapunov decay on the whole region; the fallback horizon is inserted
    when nothing else qualifies.
    """
    horizons = [tuple(s) for s in horizons]
    sigma_star = tuple(cert.sigma_star)
    phis = transition_table(dp, horizons)
    metrics = {s: avg_idle_metric(s, dp.m) for s in horizons}
    psi = []
    values = []
    for reg in regions:
        feas = []
        for s in horizons:
            bbar = decay_factor(cert.beta, len(s), cert.T)
            if sprocedure_feasible(phis[s], cert.P, bbar, reg.Q) is not None:
                feas.append(s)
        if not feas:
            feas = [sigma_star]
        best, ties = _argmax_ties(feas, metrics)
        psi.append(tuple(ties))
        values.append(best)
    return OfflineTable(psi=tuple(psi), metric=tuple(values), mode="offline-unperturbed", m=dp.m)


def offline_select(eta, table: OfflineTable, regions, rng_seed: int, step_index: int = 0) -> TriggerDecision:
    """Look up the precomputed optimal set for the state's region."""
    c = region_of(np.asarray(eta, dtype=float), regions)
    ties = table.psi[c]
    chosen = _tie_break(ties, rng_seed, step_index)
    return TriggerDecision(
        horizon=chosen,
        metric=table.metric[c],
        feasible_count=len(ties),
        tie_count=len(ties),
        mode=table.mode,
    )


def offline_perturbed_machinery(cert: PerturbedOfflineCertificate, horizons, regions, dp) -> OfflineTable:
    """Per-region admissible sets for the perturbed offline mechanism."""
    horizons = [tuple(s) for s in horizons]
    sigma_star = tuple(cert.sigma_star)
    phis = transition_table(dp, horizons)
    metrics = {s: avg_idle_metric(s, dp.m) for s in horizons}
    psi = []
    values = []
    for reg in regions:
        feas = []
        for s in horizons:
            bbar = decay_factor(cert.beta, len(s), cert.T)
            eps = max_eps_feasible(
                cert.P,
                cert.gamma1,
                cert.gamma2,
                phis[s],
                bbar,
                cert.chi_linear_map[len(s)],
                reg.Q,
            )
            if eps is not None:
                feas.append(s)
        if not feas:
            feas = [sigma_star]
        best, ties = _argmax_ties(feas, metrics)
        psi.append(tuple(ties))
        values.append(best)
    return OfflineTable(psi=tuple(psi), metric=tuple(values), mode="offline-perturbed", m=dp.m)


def offline_perturbed_select(
    eta, table: OfflineTable, cert: PerturbedOfflineCertificate, regions, rng_seed: int, step_index: int = 0
) -> TriggerDecision:
    """Ellipsoid gate, then the region's precomputed optimal set."""
    eta = np.asarray(eta, dtype=float)
    if eta @ cert.P @ eta <= 1.0:
        return TriggerDecision(
            horizon=IDLE_HORIZON,
            metric=avg_idle_metric(IDLE_HORIZON, table.m),
            feasible_count=1,
            tie_count=1,
            mode=table.mode,
        )
    return offline_select(eta, table, regions, rng_seed, step_index)


def table_to_dict(table: OfflineTable) -> dict:
    return {
        "mode": table.mode,
        "m": table.m,
        "regions": [
            {"psi": [horizon_to_text(s) for s in ties], "metric": value}
            for ties, value in zip(table.psi, table.metric)
        ],
    }
