"""Protocol synthesis: compose a feasibility certificate with graph spectra.

All three design routes share the same gain rule K = -1/2 B^T P^{-1} and
differ in the coupling-strength threshold:

- leaderless consensus: scalar / a(L) with a(L) the generalized algebraic
  connectivity of the (strongly connected) communication graph;
- disturbance attenuation at level gamma: scalar / lambda2 with lambda2 the
  second-smallest eigenvalue of (L + L^T)/2, valid on balanced strongly
  connected graphs;
- leader-follower tracking: scalar / (lambda1(H) * min q) from the
  follower-block partition.

The coupling strength defaults to the threshold exactly; a multiplier >= 1
adds headroom.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Optional, TYPE_CHECKING

import numpy as np
from numpy.typing import NDArray

from . import lmi, numkit
from .errors import InfeasibleError, PreconditionError
from .graph import GraphSpectra, LeaderFollowerData

if TYPE_CHECKING:
    from .sim import AgentModel


class DesignMode(str, Enum):
    LEADERLESS = "leaderless"
    HINF = "hinf"
    LEADER_FOLLOWER = "leader-follower"


@dataclass(frozen=True)
class ProtocolDesign:
    """Complete synthesized protocol.

    k is the feedback gain, c the coupling strength, c_threshold the
    algorithmic lower bound on c. c_threshold_simplified carries the
    alternative leader-follower bound (smallest eigenvalue of the
    symmetrized follower block) when the follower subgraph is balanced and
    strongly connected, None otherwise.
    """

    k: NDArray[np.float64]
    c: float
    cert: lmi.LmiCertificate
    c_threshold: float
    mode: DesignMode
    gamma: Optional[float] = None
    c_threshold_simplified: Optional[float] = None


def _gain(cert: lmi.LmiCertificate, b: NDArray[np.float64]
          ) -> NDArray[np.float64]:
    x = numkit.solve_linear(cert.p, b)
    return -0.5 * x.T


def _resolve_cert(problem: lmi.LmiProblem,
                  cert: Optional[lmi.LmiCertificate],
                  options: Optional[lmi.SolverOptions]) -> lmi.LmiCertificate:
    if cert is None:
        found = lmi.solve(problem, options)
        if not found.feasible:
            raise InfeasibleError(
                "feasibility search exhausted its budget "
                f"(best margin {found.margin:.3e})",
                best_margin=found.margin,
            )
        return found
    report = lmi.verify(problem, cert, tolerance=0.0)
    if not report.passed:
        raise PreconditionError(
            "injected certificate fails verification "
            f"(p margin {report.p_margin:.3e}, scalar {report.scalar_value:.3e}, "
            f"inequality margin {report.lmi_margin:.3e})"
        )
    return cert


def inject_certificate(problem: lmi.LmiProblem, p, scalar: float
                       ) -> lmi.LmiCertificate:
    """Build a certificate from externally supplied (p, scalar).

    The margin is recomputed here; published designs are typically printed
    rounded, so any strictly positive margin is accepted downstream.
    """
    pm = numkit.as_matrix(p, "p")
    margin = -float(numkit.sym_eig(assemble_for(problem, pm, scalar)).values[-1])
    return lmi.LmiCertificate(p=pm, scalar=float(scalar), margin=margin,
                              feasible=margin > 0)


def assemble_for(problem: lmi.LmiProblem, p, scalar: float):
    return lmi.assemble(problem, p, scalar)


def design_leaderless(model: "AgentModel", spectra: GraphSpectra,
                      cert: Optional[lmi.LmiCertificate] = None,
                      c_multiplier: float = 1.0,
                      solver_options: Optional[lmi.SolverOptions] = None
                      ) -> ProtocolDesign:
    """Consensus protocol for a strongly connected graph.

    Solves the consensus inequality (or verifies an injected certificate),
    then sets the coupling threshold scalar / a(L).
    """
    if not spectra.flags.strongly_connected:
        raise PreconditionError(
            "leaderless synthesis requires a strongly connected graph"
        )
    if c_multiplier < 1.0:
        raise ValueError("c_multiplier must be >= 1")
    problem = lmi.LmiProblem(lmi.LmiKind.CONSENSUS, model)
    cert = _resolve_cert(problem, cert, solver_options)
    threshold = cert.scalar / spectra.a_of_l
    return ProtocolDesign(
        k=_gain(cert, model.b),
        c=threshold * c_multiplier,
        cert=cert,
        c_threshold=threshold,
        mode=DesignMode.LEADERLESS,
    )


def design_hinf(model: "AgentModel", spectra: GraphSpectra, gamma: float,
                cert: Optional[lmi.LmiCertificate] = None,
                c_multiplier: float = 1.0,
                solver_options: Optional[lmi.SolverOptions] = None
                ) -> ProtocolDesign:
    """Disturbance-attenuating protocol at level gamma.

    Valid on balanced, strongly connected graphs; the threshold divides the
    certificate scalar by the second-smallest eigenvalue of the symmetrized
    Laplacian, computed at full precision.
    """
    if not (spectra.flags.balanced and spectra.flags.strongly_connected):
        raise PreconditionError(
            "hinf synthesis requires a balanced, strongly connected graph"
        )
    if c_multiplier < 1.0:
        raise ValueError("c_multiplier must be >= 1")
    if spectra.lambda2_sym is None or spectra.lambda2_sym <= 0:
        raise PreconditionError("symmetrized Laplacian eigenvalue unavailable")
    problem = lmi.LmiProblem(lmi.LmiKind.HINF, model, gamma=gamma)
    cert = _resolve_cert(problem, cert, solver_options)
    threshold = cert.scalar / spectra.lambda2_sym
    return ProtocolDesign(
        k=_gain(cert, model.b),
        c=threshold * c_multiplier,
        cert=cert,
        c_threshold=threshold,
        mode=DesignMode.HINF,
        gamma=float(gamma),
    )


def design_leader_follower(model: "AgentModel", lf: LeaderFollowerData,
                           cert: Optional[lmi.LmiCertificate] = None,
                           c_multiplier: float = 1.0,
                           solver_options: Optional[lmi.SolverOptions] = None
                           ) -> ProtocolDesign:
    """Tracking protocol under a leader rooted spanning tree.

    Reuses the consensus inequality; the threshold divides the scalar by
    lambda1(H) * min q. When the follower subgraph is balanced and strongly
    connected the simplified alternative threshold scalar / lambda1 of the
    symmetrized follower block is reported alongside.
    """
    if c_multiplier < 1.0:
        raise ValueError("c_multiplier must be >= 1")
    problem = lmi.LmiProblem(lmi.LmiKind.CONSENSUS, model)
    cert = _resolve_cert(problem, cert, solver_options)
    threshold = cert.scalar / (lf.lambda1_h * lf.min_q)
    simplified = None
    if lf.simplified_applicable and lf.lambda1_sym and lf.lambda1_sym > 0:
        simplified = cert.scalar / lf.lambda1_sym
    return ProtocolDesign(
        k=_gain(cert, model.b),
        c=threshold * c_multiplier,
        cert=cert,
        c_threshold=threshold,
        mode=DesignMode.LEADER_FOLLOWER,
        c_threshold_simplified=simplified,
    )
