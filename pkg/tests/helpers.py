"""Shared builders and independent numeric oracles for the test suite."""

import numpy as np

from asynctrig.plant import PlantModel

# the two-state benchmark plant used across the suite
A2 = np.array([[0.0, 1.0], [-2.0, 3.0]])
B2 = np.array([[0.0], [1.0]])
K2 = np.array([[1.0, -4.0]])


def benchmark_plant(perturbed: bool = False) -> PlantModel:
    if perturbed:
        return PlantModel(
            A=A2, B=B2, K=K2, blocks=(1, 1), D=np.array([[1.0], [1.0]]), w_max=1.0
        )
    return PlantModel(A=A2, B=B2, K=K2, blocks=(1, 1))


def taylor_expm(M: np.ndarray, terms: int = 200) -> np.ndarray:
    """Scaled Taylor series: squarings bring ||M/2^k|| under 0.5 first."""
    M = np.asarray(M, dtype=float)
    k = 0
    norm = np.linalg.norm(M, np.inf)
    while norm > 0.5:
        norm /= 2.0
        k += 1
    S = M / (2.0**k)
    out = np.eye(M.shape[0])
    term = np.eye(M.shape[0])
    for j in range(1, terms):
        term = term @ S / j
        out = out + term
    for _ in range(k):
        out = out @ out
    return out


def simpson_zoh_B(A: np.ndarray, B: np.ndarray, T: float, panels: int = 10_000) -> np.ndarray:
    """Quadrature oracle for the held-input map: int_0^T e^{As} B ds."""
    nodes = np.linspace(0.0, T, 2 * panels + 1)
    w = np.ones(nodes.size)
    w[1:-1:2] = 4.0
    w[2:-2:2] = 2.0
    w *= T / (2 * panels) / 3.0
    acc = np.zeros_like(B, dtype=float)
    for wi, s in zip(w, nodes):
        acc = acc + wi * (taylor_expm(A * s) @ B)
    return acc


def power_iteration_norm(M: np.ndarray, iters: int = 2000, seed: int = 0) -> float:
    """Largest singular value via power iteration on M'M."""
    rng = np.random.default_rng(seed)
    G = M.T @ M
    v = rng.normal(size=G.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(iters):
        w = G @ v
        lam = np.linalg.norm(w)
        if lam == 0:
            return 0.0
        v = w / lam
    return float(np.sqrt(lam))


def random_schur_stabilizable(rng, t_lo=0.05, t_hi=0.3):
    """Sample (PlantModel, T) whose fully sampled loop is strictly Schur.

    Rejection sampling: random dynamics, then random gains until one
    contracts.  Returns None when the draw admits no gain in 60 tries.
    """
    from asynctrig.plant import DiscretePlant

    A = rng.normal(scale=1.0, size=(2, 2))
    B = rng.normal(scale=1.0, size=(2, 1))
    T = float(rng.uniform(t_lo, t_hi))
    for _ in range(60):
        K = rng.normal(scale=1.5, size=(1, 2))
        plant = PlantModel(A=A, B=B, K=K, blocks=(1, 1))
        dp = DiscretePlant.from_plant(plant, T)
        sr = np.max(np.abs(np.linalg.eigvals(dp.A_T + dp.BK_T)))
        if sr < 0.9:
            return plant, T
    return None
