"""Closed-loop network simulation, disturbances, costs, and diagnostics.

The integrator is fixed-step classical Runge-Kutta (RK4), deterministic by
construction. States are carried as an (N, n) array, one row per agent.
Consensus errors use the weighted-average reference e_i = x_i - sum_j r_j x_j
for leaderless and disturbance runs, and the leader offset v_i = x_i - x_lead
for tracking runs.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np
from numpy.typing import NDArray
from scipy.integrate import cumulative_trapezoid, trapezoid

from . import numkit
from .errors import BlowUpError, PreconditionError
from .graph import (DiGraph, GraphSpectra, LeaderFollowerData, classify,
                    laplacian, left_perron)

NONLINEARITY_KINDS = ("zero", "sine", "saturation", "tanh")


@dataclass(frozen=True)
class Nonlinearity:
    """Agent nonlinearity from a closed catalog of componentwise forms.

    kind is one of zero, sine, saturation, tanh. terms is a tuple of
    (out_index, in_index, coefficient) triples, 0-based: each adds
    coefficient * g(x[in_index]) to component out_index of the output,
    where g is the catalog function. The closed catalog keeps models
    serializable and the Lipschitz check meaningful.
    """

    kind: str = "zero"
    terms: tuple[tuple[int, int, float], ...] = ()

    def __post_init__(self):
        if self.kind not in NONLINEARITY_KINDS:
            raise ValueError(f"unknown nonlinearity kind {self.kind!r}")
        if self.kind == "zero" and self.terms:
            raise ValueError("zero nonlinearity takes no terms")
        norm = tuple((int(o), int(i), float(c)) for (o, i, c) in self.terms)
        object.__setattr__(self, "terms", norm)

    @staticmethod
    def zero() -> "Nonlinearity":
        return Nonlinearity("zero", ())

    @staticmethod
    def sine(terms) -> "Nonlinearity":
        return Nonlinearity("sine", tuple(terms))

    def _g(self, x):
        if self.kind == "sine":
            return np.sin(x)
        if self.kind == "tanh":
            return np.tanh(x)
        if self.kind == "saturation":
            return np.clip(x, -1.0, 1.0)
        raise AssertionError

    def apply(self, x: NDArray[np.float64], out_dim: int
              ) -> NDArray[np.float64]:
        """Evaluate on states of shape (..., n), returning (..., out_dim)."""
        out = np.zeros(x.shape[:-1] + (out_dim,))
        for (o, i, c) in self.terms:
            out[..., o] += c * self._g(x[..., i])
        return out

    def lipschitz_bound(self, n: int, out_dim: int) -> float:
        """Conservative Lipschitz bound: largest singular value of the
        entrywise absolute coefficient matrix (catalog functions all have
        slope at most 1)."""
        if not self.terms:
            return 0.0
        m = np.zeros((out_dim, n))
        for (o, i, c) in self.terms:
            m[o, i] += abs(c)
        return float(np.linalg.norm(m, 2))


@dataclass(frozen=True)
class AgentModel:
    """One agent's dynamics: dx = A x + D1 f(x) + B u (+ D2 w).

    c_out is the performance-output matrix C. d2 and c_out default to zero
    channels of width 1 so consensus-only models need not specify them.
    alpha is the declared Lipschitz constant of f.
    """

    a: NDArray[np.float64]
    b: NDArray[np.float64]
    d1: NDArray[np.float64]
    d2: Optional[NDArray[np.float64]] = None
    c_out: Optional[NDArray[np.float64]] = None
    alpha: float = 0.0
    f: Nonlinearity = field(default_factory=Nonlinearity.zero)

    def __post_init__(self):
        a = numkit.as_matrix(self.a, "a")
        n = a.shape[0]
        if a.shape != (n, n):
            raise ValueError("a must be square")
        b = numkit.as_matrix(self.b, "b")
        d1 = numkit.as_matrix(self.d1, "d1")
        if b.shape[0] != n or d1.shape[0] != n:
            raise ValueError("b and d1 must have as many rows as a")
        d2 = numkit.as_matrix(self.d2, "d2") if self.d2 is not None \
            else np.zeros((n, 1))
        c_out = numkit.as_matrix(self.c_out, "c_out") if self.c_out is not None \
            else np.zeros((1, n))
        if d2.shape[0] != n:
            raise ValueError("d2 must have as many rows as a")
        if c_out.shape[1] != n:
            raise ValueError("c_out must have as many columns as a")
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        for (o, i, _) in self.f.terms:
            if not (0 <= o < d1.shape[1]):
                raise ValueError(f"nonlinearity output index {o} outside d1")
            if not (0 <= i < n):
                raise ValueError(f"nonlinearity input index {i} outside state")
        for name, val in (("a", a), ("b", b), ("d1", d1), ("d2", d2),
                          ("c_out", c_out)):
            object.__setattr__(self, name, val)
        object.__setattr__(self, "alpha", float(self.alpha))

    @property
    def n(self) -> int:
        return self.a.shape[0]

    def nonlinear(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        return self.f.apply(x, self.d1.shape[1])


@dataclass(frozen=True)
class LipschitzReport:
    ok: bool
    worst_ratio: float
    alpha: float
    samples: int


def check_lipschitz(model: AgentModel, box: float = 1.0,
                    samples: int = 10_000, seed: int = 0,
                    tol: numkit.Tolerances = numkit.TOL) -> LipschitzReport:
    """Sampled Lipschitz check of the declared constant.

    Draws random pairs in [-box, box]^n and verifies
    ||f(x) - f(y)|| <= (alpha + slack) * ||x - y||.
    """
    rng = np.random.default_rng(seed)
    n = model.n
    x = rng.uniform(-box, box, size=(samples, n))
    y = rng.uniform(-box, box, size=(samples, n))
    dx = np.linalg.norm(x - y, axis=1)
    keep = dx > 0
    df = np.linalg.norm(model.nonlinear(x) - model.nonlinear(y), axis=1)
    ratios = df[keep] / dx[keep]
    worst = float(ratios.max()) if ratios.size else 0.0
    return LipschitzReport(
        ok=worst <= model.alpha + tol.lipschitz_slack,
        worst_ratio=worst,
        alpha=model.alpha,
        samples=int(keep.sum()),
    )


def square_wave(t, unipolar: bool = False):
    """One-period square wave starting at t = 0 with width 2 and height 1.

    Bipolar (default): 1 on [0, 1), -1 on [1, 2), 0 afterwards.
    Unipolar: 1 on [0, 2), 0 afterwards.
    """
    ts = np.asarray(t, dtype=float)
    if unipolar:
        out = np.where(ts < 2.0, 1.0, 0.0)
    else:
        out = np.where(ts < 1.0, 1.0, np.where(ts < 2.0, -1.0, 0.0))
    out = np.where(ts < 0.0, 0.0, out)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class DisturbanceSpec:
    """Per-agent disturbance: a shared scalar wave scaled per agent/channel.

    kind is none, bipolar, or unipolar. scales has shape (N, m1) and
    multiplies the wave value; None with a non-none kind means unit scales.
    """

    kind: str = "none"
    scales: Optional[NDArray[np.float64]] = None

    def __post_init__(self):
        if self.kind not in ("none", "bipolar", "unipolar"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if self.scales is not None:
            object.__setattr__(
                self, "scales", numkit.as_matrix(self.scales, "scales"))

    def omega(self, t, n_agents: int, m1: int) -> NDArray[np.float64]:
        """Disturbance matrix (N, m1) at time t (or (T, N, m1) for array t)."""
        scales = self.scales if self.scales is not None \
            else np.ones((n_agents, m1))
        if scales.shape != (n_agents, m1):
            raise ValueError(
                f"scales shape {scales.shape} does not match ({n_agents}, {m1})"
            )
        if self.kind == "none":
            w = np.zeros_like(np.asarray(t, dtype=float))
        else:
            w = np.asarray(square_wave(t, unipolar=self.kind == "unipolar"))
        if w.ndim == 0:
            return float(w) * scales
        return w[:, None, None] * scales[None, :, :]


@dataclass(frozen=True)
class Scenario:
    """Everything one closed-loop run needs."""

    model: AgentModel
    graph: DiGraph
    design: "object"
    x0: NDArray[np.float64]
    disturbance: DisturbanceSpec = field(default_factory=DisturbanceSpec)
    t_end: float = 10.0
    dt: float = 1e-3

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_end < self.dt:
            raise ValueError("t_end must be at least dt")
        x0 = numkit.as_matrix(self.x0, "x0")
        if x0.shape != (self.graph.n, self.model.n):
            raise ValueError(
                f"x0 shape {x0.shape} does not match "
                f"({self.graph.n}, {self.model.n})"
            )
        object.__setattr__(self, "x0", x0)


@dataclass(frozen=True)
class Trajectory:
    """Sampled closed-loop run.

    states has shape (T, N, n); e holds consensus (or tracking) errors; z
    the performance outputs; v_lyap the decrease diagnostic; j_running the
    running attenuation cost integral; omega the applied disturbance.
    """

    times: NDArray[np.float64]
    states: NDArray[np.float64]
    e: NDArray[np.float64]
    z: NDArray[np.float64]
    v_lyap: NDArray[np.float64]
    j_running: NDArray[np.float64]
    omega: NDArray[np.float64]


def _as_state_array(x, n_agents: int, n: int):
    arr = np.asarray(x, dtype=float)
    if arr.shape == (n_agents, n):
        return arr.copy(), False
    if arr.shape == (n_agents * n,):
        return arr.reshape(n_agents, n).copy(), True
    raise ValueError(
        f"state shape {arr.shape} is neither ({n_agents}, {n}) nor "
        f"({n_agents * n},)"
    )


def _core_rhs(model: AgentModel, lap, design, x, omega_t=None):
    coupling = model.b @ design.k
    dx = (x @ model.a.T
          + model.nonlinear(x) @ model.d1.T
          + design.c * (lap @ x) @ coupling.T)
    if omega_t is not None:
        dx = dx + omega_t @ model.d2.T
    return dx


def rhs_leaderless(model: AgentModel, g: DiGraph, design, x):
    """Closed-loop derivative of the leaderless network.

    Accepts states as (N, n) or stacked (N*n,) and returns the same layout.
    The protocol feeds back relative states only: u_i depends on
    sum_j a_ij (x_i - x_j), which is row i of L x.
    """
    lap = laplacian(g)
    xs, flat = _as_state_array(x, g.n, model.n)
    dx = _core_rhs(model, lap, design, xs)
    return dx.reshape(-1) if flat else dx


def rhs_disturbed(model: AgentModel, g: DiGraph, design, x, omega_t):
    """Leaderless derivative plus the additive disturbance channel D2 w."""
    lap = laplacian(g)
    xs, flat = _as_state_array(x, g.n, model.n)
    om = np.asarray(omega_t, dtype=float)
    if om.shape != (g.n, model.d2.shape[1]):
        raise ValueError(
            f"omega shape {om.shape} does not match ({g.n}, {model.d2.shape[1]})"
        )
    dx = _core_rhs(model, lap, design, xs, om)
    return dx.reshape(-1) if flat else dx


def rhs_leader_follower(model: AgentModel, g: DiGraph, design, x):
    """Tracking derivative: agent 1 is the leader and receives no input.

    The leader's Laplacian row is zero (no incoming edges), so the shared
    coupling term vanishes for it and it evolves open loop.
    """
    lap = laplacian(g)
    if np.any(np.abs(lap[0]) > 0):
        raise PreconditionError("agent 1 must have no incoming edges")
    xs, flat = _as_state_array(x, g.n, model.n)
    dx = _core_rhs(model, lap, design, xs)
    return dx.reshape(-1) if flat else dx


def _error_weights(scenario: Scenario):
    """Error reference and diagnostic weights for the scenario's mode.

    Returns (weights, reference) where reference is either the left null
    vector r (weighted-average errors) or a leader index (offset errors).
    """
    mode = getattr(scenario.design, "mode", None)
    mode_value = getattr(mode, "value", mode)
    if mode_value == "leader-follower":
        flags = classify(scenario.graph)
        if flags.leader_follower_root is None:
            raise PreconditionError(
                "tracking run needs a zero in-degree root reaching all nodes"
            )
        leader = flags.leader_follower_root
        from .graph import leader_follower_data
        lf = leader_follower_data(scenario.graph, leader)
        weights = np.zeros(scenario.graph.n)
        for w, node in zip(lf.q, lf.followers):
            weights[node - 1] = w
        return weights, leader
    r = left_perron(laplacian(scenario.graph))
    return r, None


def integrate(scenario: Scenario, tol: numkit.Tolerances = numkit.TOL
              ) -> Trajectory:
    """Fixed-step RK4 integration of the scenario.

    Deterministic for fixed inputs. Aborts with BlowUpError when the state
    norm crosses the blow-up guard, carrying the last valid time.
    """
    model, g, design = scenario.model, scenario.graph, scenario.design
    n_agents, n = g.n, model.n
    lap = laplacian(g)
    m1 = model.d2.shape[1]
    dist = scenario.disturbance
    steps = int(round(scenario.t_end / scenario.dt))
    dt = scenario.dt
    times = np.arange(steps + 1) * dt

    def f(t, x):
        om = dist.omega(t, n_agents, m1) if dist.kind != "none" else None
        return _core_rhs(model, lap, design, x, om)

    states = np.empty((steps + 1, n_agents, n))
    x = scenario.x0.copy()
    states[0] = x
    for k in range(steps):
        t = k * dt
        k1 = f(t, x)
        k2 = f(t + dt / 2, x + dt / 2 * k1)
        k3 = f(t + dt / 2, x + dt / 2 * k2)
        k4 = f(t + dt, x + dt * k3)
        x = x + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)) or np.linalg.norm(x) >= tol.blowup_norm:
            raise BlowUpError(
                f"state norm crossed {tol.blowup_norm:.1e} at t = {t + dt:.6g}",
                last_valid_time=t,
            )
        states[k + 1] = x

    weights, leader = _error_weights(scenario)
    if leader is None:
        mean = np.einsum("j,tjk->tk", weights, states)
        e = states - mean[:, None, :]
    else:
        e = states - states[:, leader - 1: leader, :]
    z = e @ model.c_out.T
    omega = dist.omega(times, n_agents, m1)
    p_inv = numkit.solve_linear(design.cert.p, np.eye(n))
    v = np.einsum("i,tik,kl,til->t", weights, e, p_inv, e)
    gamma = getattr(design, "gamma", None) or 0.0
    integrand = (z ** 2).sum(axis=(1, 2)) - gamma ** 2 * (omega ** 2).sum(axis=(1, 2))
    j_running = np.concatenate(
        [[0.0], cumulative_trapezoid(integrand, times)])
    return Trajectory(times=times, states=states, e=e, z=z, v_lyap=v,
                      j_running=j_running, omega=omega)


@dataclass(frozen=True)
class HinfCost:
    j: float
    z_energy: float
    w_energy: float
    empirical_gain: Optional[float]


def hinf_cost(traj: Trajectory, gamma: float) -> HinfCost:
    """Attenuation cost J and empirical gain over the recorded horizon.

    J integrates ||z||^2 - gamma^2 ||w||^2 by the trapezoid rule on the
    sample grid; meaningful under zero initial conditions. The empirical
    gain sqrt(int ||z||^2 / int ||w||^2) is None for zero disturbance.
    """
    z2 = (traj.z ** 2).sum(axis=(1, 2))
    w2 = (traj.omega ** 2).sum(axis=(1, 2))
    z_energy = float(trapezoid(z2, traj.times))
    w_energy = float(trapezoid(w2, traj.times))
    j = z_energy - gamma ** 2 * w_energy
    gain = float(np.sqrt(z_energy / w_energy)) if w_energy > 0 else None
    return HinfCost(j=j, z_energy=z_energy, w_energy=w_energy,
                    empirical_gain=gain)


@dataclass(frozen=True)
class LyapunovReport:
    v0: float
    fraction_increasing: float
    n_increasing: int
    max_increase: float
    step_tolerance: float


def lyapunov_diag(traj: Trajectory, design,
                  weights_source: Union[GraphSpectra, LeaderFollowerData],
                  tol: numkit.Tolerances = numkit.TOL) -> LyapunovReport:
    """Decrease diagnostic for the weighted quadratic error energy.

    V(t) = sum_i w_i e_i(t)^T P^{-1} e_i(t) with w the left null vector r
    (leaderless modes) or the follower weights q (tracking mode). Reports
    the fraction of steps where V increases beyond the per-step tolerance
    v_step_rel * V(0). Guaranteed decrease is a sufficient condition tied
    to the coupling threshold, so an increase under a weakened design is
    flagged, not raised.
    """
    n_agents = traj.states.shape[1]
    if isinstance(weights_source, LeaderFollowerData):
        weights = np.zeros(n_agents)
        for w, node in zip(weights_source.q, weights_source.followers):
            weights[node - 1] = w
    else:
        weights = weights_source.r
    p_inv = numkit.solve_linear(design.cert.p, np.eye(traj.states.shape[2]))
    v = np.einsum("i,tik,kl,til->t", weights, traj.e, p_inv, traj.e)
    dv = np.diff(v)
    step_tol = tol.v_step_rel * float(v[0])
    increasing = dv > step_tol
    return LyapunovReport(
        v0=float(v[0]),
        fraction_increasing=float(increasing.mean()) if dv.size else 0.0,
        n_increasing=int(increasing.sum()),
        max_increase=float(dv.max()) if dv.size else 0.0,
        step_tolerance=step_tol,
    )


def max_pairwise_distance(states: NDArray[np.float64]) -> float:
    """Largest inter-agent state distance at one sample (N, n)."""
    diffs = states[:, None, :] - states[None, :, :]
    return float(np.sqrt((diffs ** 2).sum(axis=2)).max())


def write_csv(traj: Trajectory, path, decimation: int = 1) -> None:
    """Write the trajectory as CSV.

    Header: t, x{agent}_{component}..., e{agent}_{component}...,
    z{agent}_{component}..., V, J_running. Agent and component indices are
    1-based. decimation keeps every decimation-th sample.
    """
    if decimation < 1:
        raise ValueError("decimation must be >= 1")
    t = traj.times[::decimation]
    nt = t.shape[0]
    n_agents, n = traj.states.shape[1], traj.states.shape[2]
    m2 = traj.z.shape[2]
    cols = [t]
    header = ["t"]
    for name, arr, width in (("x", traj.states, n), ("e", traj.e, n),
                             ("z", traj.z, m2)):
        flat = arr[::decimation].reshape(nt, n_agents * width)
        cols.append(flat)
        header += [f"{name}{i + 1}_{k + 1}"
                   for i in range(n_agents) for k in range(width)]
    cols.append(traj.v_lyap[::decimation, None])
    cols.append(traj.j_running[::decimation, None])
    header += ["V", "J_running"]
    data = np.column_stack([c if c.ndim == 2 else c[:, None] for c in cols])
    np.savetxt(path, data, fmt="%.12g", delimiter=",",
               header=",".join(header), comments="")
