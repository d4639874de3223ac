"""Command-line front end.

Subcommands: graph (spectral analysis), synth (protocol design), simulate
(closed-loop run with CSV export), repro (built-in six-manipulator benchmark
bundle). Reports are JSON, trajectories CSV, graphs plain-text edge lists.

Exit codes: 0 success, 2 precondition violation (including unreadable or
malformed inputs), 3 feasibility search exhausted its budget, 4 simulation
blow-up. The default output directory comes from CONSYN_OUT_DIR, falling
back to the current directory.
"""
from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, benchmark, lmi, numkit, sim, synthesis
from .errors import BlowUpError, InfeasibleError, PreconditionError
from .graph import (DiGraph, classify, digraph_from_adjacency, laplacian,
                    leader_follower_data, left_perron, parse_edge_list,
                    spectra)
from .sim import (AgentModel, DisturbanceSpec, Nonlinearity, Scenario,
                  hinf_cost, integrate, lyapunov_diag, max_pairwise_distance,
                  write_csv)
from .synthesis import (DesignMode, ProtocolDesign, design_hinf,
                        design_leader_follower, design_leaderless,
                        inject_certificate)

OUT_DIR_ENV = "CONSYN_OUT_DIR"


def _listify(a):
    return np.asarray(a, dtype=float).tolist()


def model_to_dict(model: AgentModel, gamma=None) -> dict:
    d = {
        "a": _listify(model.a),
        "b": _listify(model.b),
        "d1": _listify(model.d1),
        "d2": _listify(model.d2),
        "c": _listify(model.c_out),
        "alpha": model.alpha,
        "f": {
            "kind": model.f.kind,
            "terms": [[o + 1, i + 1, c] for (o, i, c) in model.f.terms],
        },
    }
    if gamma is not None:
        d["gamma"] = float(gamma)
    return d


def model_from_dict(d: dict) -> tuple[AgentModel, float | None]:
    try:
        fdesc = d.get("f", {"kind": "zero", "terms": []})
        terms = tuple((int(o) - 1, int(i) - 1, float(c))
                      for (o, i, c) in fdesc.get("terms", []))
        f = Nonlinearity(kind=fdesc.get("kind", "zero"), terms=terms)
        model = AgentModel(
            a=np.asarray(d["a"], dtype=float),
            b=np.asarray(d["b"], dtype=float),
            d1=np.asarray(d["d1"], dtype=float),
            d2=np.asarray(d["d2"], dtype=float) if "d2" in d else None,
            c_out=np.asarray(d["c"], dtype=float) if "c" in d else None,
            alpha=float(d.get("alpha", 0.0)),
            f=f,
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise PreconditionError(f"malformed model file: {exc}") from exc
    gamma = d.get("gamma")
    return model, (float(gamma) if gamma is not None else None)


def load_model(path) -> tuple[AgentModel, float | None, DiGraph | None]:
    """Load a JSON model file; returns (model, gamma, embedded graph)."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise PreconditionError(f"cannot read model file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PreconditionError(f"model file {path} is not valid JSON: {exc}") from exc
    model, gamma = model_from_dict(data)
    g = None
    if "adjacency" in data:
        g = digraph_from_adjacency(np.asarray(data["adjacency"], dtype=float))
    return model, gamma, g


def load_graph(path) -> DiGraph:
    """Load a graph from an edge-list file or a JSON adjacency file."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise PreconditionError(f"cannot read graph file {path}: {exc}") from exc
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise PreconditionError(
                f"graph file {path} is not valid JSON: {exc}") from exc
        if "adjacency" not in data:
            raise PreconditionError(
                f"graph file {path} lacks an 'adjacency' entry")
        return digraph_from_adjacency(np.asarray(data["adjacency"], dtype=float))
    try:
        return parse_edge_list(text)
    except ValueError as exc:
        raise PreconditionError(f"{path}: {exc}") from exc


def load_certificate(path, problem: lmi.LmiProblem) -> lmi.LmiCertificate:
    try:
        data = json.loads(Path(path).read_text())
        p = np.asarray(data["p"], dtype=float)
        scalar = float(data["scalar"])
    except OSError as exc:
        raise PreconditionError(f"cannot read certificate {path}: {exc}") from exc
    except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
        raise PreconditionError(f"malformed certificate file: {exc}") from exc
    return inject_certificate(problem, p, scalar)


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True)


def report_from_json(text: str) -> dict:
    return json.loads(text)


def _config_hash(parts: list) -> str:
    payload = json.dumps(parts, sort_keys=True, default=str).encode()
    return hashlib.sha256(payload).hexdigest()[:16]


def _provenance(args_dict, extra_parts=()) -> dict:
    return {
        "tool": "consyn",
        "version": __version__,
        "config_hash": _config_hash([args_dict, list(extra_parts)]),
        "seed": args_dict.get("seed"),
    }


def _out_dir(ns) -> Path:
    out = ns.out_dir or os.environ.get(OUT_DIR_ENV) or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_report(report: dict, out_dir: Path, name: str) -> Path:
    path = out_dir / name
    path.write_text(report_to_json(report) + "\n")
    return path


def _graph_section(g: DiGraph) -> dict:
    flags = classify(g)
    section = {
        "nodes": g.n,
        "edges": sorted(list(e) for e in g.edges),
        "strongly_connected": flags.strongly_connected,
        "balanced": flags.balanced,
        "has_spanning_tree": flags.has_spanning_tree,
        "leader_follower_root": flags.leader_follower_root,
    }
    if flags.strongly_connected:
        sp = spectra(g)
        section["r"] = _listify(sp.r)
        section["a_of_l"] = sp.a_of_l
        if sp.lambda2_sym is not None:
            section["lambda2_sym"] = sp.lambda2_sym
    if flags.leader_follower_root is not None:
        lf = leader_follower_data(g, flags.leader_follower_root)
        section["leader_follower"] = {
            "leader": lf.leader,
            "q": _listify(lf.q),
            "lambda1_h": lf.lambda1_h,
            "min_q": lf.min_q,
            "simplified_applicable": lf.simplified_applicable,
        }
    return section


def _design_section(design: ProtocolDesign) -> dict:
    section = {
        "mode": design.mode.value,
        "k": _listify(design.k),
        "c": design.c,
        "c_threshold": design.c_threshold,
        "certificate": {
            "p": _listify(design.cert.p),
            "scalar": design.cert.scalar,
            "margin": design.cert.margin,
            "feasible": design.cert.feasible,
        },
    }
    if design.gamma is not None:
        section["gamma"] = design.gamma
    if design.c_threshold_simplified is not None:
        section["c_threshold_simplified"] = design.c_threshold_simplified
    return section


def cmd_graph(ns) -> int:
    g = load_graph(ns.graph_file)
    section = _graph_section(g)
    if not section["strongly_connected"]:
        print("warning: graph is not strongly connected", file=sys.stderr)
    out_dir = _out_dir(ns)
    report = {
        "graph": section,
        "provenance": _provenance(vars(ns) | {"seed": None},
                                  [Path(ns.graph_file).read_text()]),
    }
    path = _write_report(report, out_dir, "graph_report.json")
    print(f"nodes: {g.n}  edges: {len(g.edges)}")
    print(f"strongly_connected: {section['strongly_connected']}")
    print(f"balanced: {section['balanced']}")
    print(f"has_spanning_tree: {section['has_spanning_tree']}")
    if section.get("leader_follower_root"):
        print(f"leader_follower_root: {section['leader_follower_root']}")
    if "r" in section:
        print(f"r: {np.array(section['r'])}")
        print(f"a_of_l: {section['a_of_l']:.10g}")
    if "lambda2_sym" in section:
        print(f"lambda2_sym: {section['lambda2_sym']:.10g}")
    print(f"report: {path}")
    return 0


def _build_design(ns, model: AgentModel, g: DiGraph,
                  gamma_from_model=None) -> ProtocolDesign:
    mode = ns.mode
    gamma = ns.gamma if ns.gamma is not None else gamma_from_model
    cert = None
    if mode == "leaderless":
        sp = spectra(g)
        if ns.cert:
            cert = load_certificate(
                ns.cert, lmi.LmiProblem(lmi.LmiKind.CONSENSUS, model))
        return design_leaderless(model, sp, cert=cert,
                                 c_multiplier=ns.c_multiplier)
    if mode == "hinf":
        if gamma is None:
            raise PreconditionError("hinf mode needs --gamma (or model gamma)")
        sp = spectra(g)
        if ns.cert:
            cert = load_certificate(
                ns.cert, lmi.LmiProblem(lmi.LmiKind.HINF, model, gamma=gamma))
        return design_hinf(model, sp, gamma, cert=cert,
                           c_multiplier=ns.c_multiplier)
    flags = classify(g)
    if flags.leader_follower_root is None:
        raise PreconditionError(
            "leader-follower mode needs a zero in-degree root reaching all "
            "nodes"
        )
    lf = leader_follower_data(g, flags.leader_follower_root)
    if ns.cert:
        cert = load_certificate(
            ns.cert, lmi.LmiProblem(lmi.LmiKind.CONSENSUS, model))
    return design_leader_follower(model, lf, cert=cert,
                                  c_multiplier=ns.c_multiplier)


def cmd_synth(ns) -> int:
    model, gamma_model, embedded = load_model(ns.model_file)
    g = load_graph(ns.graph_file) if ns.graph_file else embedded
    if g is None:
        raise PreconditionError("no graph given (file or embedded adjacency)")
    design = _build_design(ns, model, g, gamma_model)
    out_dir = _out_dir(ns)
    report = {
        "graph": _graph_section(g),
        "design": _design_section(design),
        "provenance": _provenance(vars(ns)),
    }
    path = _write_report(report, out_dir, "synth_report.json")
    print(f"mode: {design.mode.value}")
    print(f"k: {np.array2string(design.k, precision=6)}")
    print(f"c_threshold: {design.c_threshold:.10g}")
    print(f"c: {design.c:.10g}")
    print(f"margin: {design.cert.margin:.6e}")
    print(f"report: {path}")
    return 0


def cmd_simulate(ns) -> int:
    model, gamma_model, embedded = load_model(ns.model_file)
    g = load_graph(ns.graph_file) if ns.graph_file else embedded
    if g is None:
        raise PreconditionError("no graph given (file or embedded adjacency)")
    design = _build_design(ns, model, g, gamma_model)
    if ns.disturbance != "none" and ns.mode == "leader-follower":
        raise PreconditionError(
            "disturbance rejection for tracking runs is out of scope")
    if ns.disturbance != "none":
        x0 = np.zeros((g.n, model.n))
        dist = DisturbanceSpec(kind=ns.disturbance)
    else:
        rng = np.random.default_rng(ns.seed)
        x0 = rng.uniform(-1.0, 1.0, size=(g.n, model.n))
        dist = DisturbanceSpec()
    scenario = Scenario(model=model, graph=g, design=design, x0=x0,
                        disturbance=dist, t_end=ns.t_end, dt=ns.dt)
    traj = integrate(scenario)
    out_dir = _out_dir(ns)
    csv_path = out_dir / "trajectory.csv"
    write_csv(traj, csv_path)
    if design.mode == DesignMode.LEADER_FOLLOWER:
        weights_src = leader_follower_data(
            g, classify(g).leader_follower_root)
    else:
        weights_src = spectra(g)
    lyap = lyapunov_diag(traj, design, weights_src)
    summary = {
        "final_consensus_error": max_pairwise_distance(traj.states[-1]),
        "v_fraction_increasing": lyap.fraction_increasing,
        "v0": lyap.v0,
    }
    gamma = design.gamma
    if gamma is not None:
        cost = hinf_cost(traj, gamma)
        summary["j"] = cost.j
        summary["empirical_gain"] = cost.empirical_gain
    report = {
        "graph": _graph_section(g),
        "design": _design_section(design),
        "simulation": summary | {
            "dt": ns.dt, "t_end": ns.t_end,
            "disturbance": ns.disturbance,
            "x0": _listify(x0),
            "trajectory_csv": str(csv_path),
        },
        "provenance": _provenance(vars(ns)),
    }
    path = _write_report(report, out_dir, "simulate_report.json")
    print(f"final consensus error: {summary['final_consensus_error']:.6e}")
    if "j" in summary:
        print(f"J: {summary['j']:.6f}")
        gain = summary["empirical_gain"]
        print(f"empirical gain: {gain:.6f}" if gain is not None
              else "empirical gain: undefined (zero disturbance)")
    print(f"V increases: {lyap.n_increasing}")
    print(f"trajectory: {csv_path}")
    print(f"report: {path}")
    return 0


def _compare_row(name, computed, reference, tolerance):
    delta = abs(computed - reference)
    return {
        "name": name,
        "computed": computed,
        "reference": reference,
        "abs_delta": delta,
        "tolerance": tolerance,
        "ok": bool(delta <= tolerance),
    }


def cmd_repro(ns) -> int:
    out_dir = _out_dir(ns)
    stage = "graph"
    try:
        model = benchmark.manipulator_model()
        g = benchmark.benchmark_graph()
        sp = spectra(g)

        stage = "attenuation-solve"
        solved = design_hinf(model, sp, benchmark.GAMMA)

        stage = "attenuation-inject"
        problem = lmi.LmiProblem(lmi.LmiKind.HINF, model,
                                 gamma=benchmark.GAMMA)
        ref_cert = inject_certificate(problem, benchmark.REFERENCE_P,
                                      benchmark.REFERENCE_EPSILON)
        injected = design_hinf(model, sp, benchmark.GAMMA, cert=ref_cert)
        published = dataclasses.replace(injected, c=benchmark.REFERENCE_C)

        stage = "consensus-solve"
        consensus = design_leaderless(model, sp)

        stage = "consensus-sim"
        x0 = benchmark.initial_states(ns.seed)
        traj_c = integrate(Scenario(
            model=model, graph=g, design=consensus, x0=x0,
            t_end=ns.t_end, dt=ns.dt))
        write_csv(traj_c, out_dir / "consensus_traj.csv", decimation=10)
        lyap = lyapunov_diag(traj_c, consensus, sp)

        stage = "attenuation-sim"
        traj_h = integrate(Scenario(
            model=model, graph=g, design=published,
            x0=np.zeros((6, 4)),
            disturbance=benchmark.benchmark_disturbance(ns.disturbance),
            t_end=ns.t_end, dt=ns.dt))
        write_csv(traj_h, out_dir / "attenuation_traj.csv", decimation=10)
        cost = hinf_cost(traj_h, benchmark.GAMMA)

        stage = "compare"
        rows = [
            _compare_row("lambda2_sym", sp.lambda2_sym,
                         benchmark.REFERENCE_LAMBDA2, 1e-3),
            _compare_row("c_threshold_injected", injected.c_threshold,
                         benchmark.REFERENCE_C_THRESHOLD, 1e-3),
        ]
        for j in range(4):
            rows.append(_compare_row(
                f"k_{j + 1}_injected", float(injected.k[0, j]),
                float(benchmark.REFERENCE_GAIN[0, j]), 5e-3))
        checks = {
            "solver_margin": solved.cert.margin,
            "solver_feasible": solved.cert.feasible,
            "consensus_final_error": max_pairwise_distance(traj_c.states[-1]),
            "consensus_converged": bool(
                max_pairwise_distance(traj_c.states[-1]) < 1e-3),
            "v_increases": lyap.n_increasing,
            "j": cost.j,
            "j_negative": bool(cost.j < 0),
            "empirical_gain": cost.empirical_gain,
            "gain_below_gamma": bool(cost.empirical_gain < benchmark.GAMMA),
        }
    except Exception as exc:
        print(f"stage {stage} failed: {exc}", file=sys.stderr)
        if isinstance(exc, InfeasibleError):
            return 3
        if isinstance(exc, BlowUpError):
            return 4
        if isinstance(exc, (PreconditionError, ValueError)):
            return 2
        raise

    report = {
        "graph": _graph_section(g),
        "design_solver": _design_section(solved),
        "design_injected": _design_section(published),
        "design_consensus": _design_section(consensus),
        "comparison": rows,
        "checks": checks,
        "provenance": _provenance(vars(ns)),
    }
    path = _write_report(report, out_dir, "repro_report.json")
    width = max(len(r["name"]) for r in rows)
    print(f"{'quantity':<{width}}  {'computed':>14}  {'reference':>14}  "
          f"{'abs delta':>11}  {'tol':>8}  result")
    for r in rows:
        flag = "ok" if r["ok"] else "MISMATCH"
        print(f"{r['name']:<{width}}  {r['computed']:>14.8g}  "
              f"{r['reference']:>14.8g}  {r['abs_delta']:>11.3e}  "
              f"{r['tolerance']:>8.1e}  {flag}")
    print(f"solver margin: {checks['solver_margin']:.6e} "
          f"(feasible: {checks['solver_feasible']})")
    print(f"consensus final error: {checks['consensus_final_error']:.6e} "
          f"(converged: {checks['consensus_converged']})")
    print(f"V increases: {checks['v_increases']}")
    print(f"J: {checks['j']:.6f} (negative: {checks['j_negative']})")
    print(f"empirical gain: {checks['empirical_gain']:.6f} "
          f"(below gamma: {checks['gain_below_gamma']})")
    print(f"report: {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="consyn",
        description="Consensus protocol synthesis and network simulation",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_graph = sub.add_parser("graph", help="analyze a communication graph")
    p_graph.add_argument("graph_file")
    p_graph.add_argument("--out-dir", default=None)
    p_graph.set_defaults(func=cmd_graph)

    def add_synth_flags(p, with_sim=False):
        p.add_argument("model_file")
        p.add_argument("graph_file", nargs="?", default=None)
        p.add_argument("--mode", required=True,
                       choices=["leaderless", "hinf", "leader-follower"])
        p.add_argument("--gamma", type=float, default=None)
        p.add_argument("--c-multiplier", type=float, default=1.0,
                       dest="c_multiplier")
        p.add_argument("--cert", default=None)
        p.add_argument("--out-dir", default=None)
        if with_sim:
            p.add_argument("--dt", type=float, default=1e-3)
            p.add_argument("--t-end", type=float, default=10.0, dest="t_end")
            p.add_argument("--seed", type=int, default=12345)
            p.add_argument("--disturbance", default="none",
                           choices=["bipolar", "unipolar", "none"])

    p_synth = sub.add_parser("synth", help="design a protocol")
    add_synth_flags(p_synth)
    p_synth.set_defaults(func=cmd_synth)

    p_sim = sub.add_parser("simulate", help="design and simulate")
    add_synth_flags(p_sim, with_sim=True)
    p_sim.set_defaults(func=cmd_simulate)

    p_repro = sub.add_parser(
        "repro", help="run the bundled six-manipulator benchmark")
    p_repro.add_argument("--out-dir", default=None)
    p_repro.add_argument("--dt", type=float, default=1e-3)
    p_repro.add_argument("--t-end", type=float, default=10.0, dest="t_end")
    p_repro.add_argument("--seed", type=int, default=12345)
    p_repro.add_argument("--disturbance", default="bipolar",
                         choices=["bipolar", "unipolar"])
    p_repro.set_defaults(func=cmd_repro)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    try:
        return ns.func(ns)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except BlowUpError as exc:
        print(f"error: {exc} (last valid time {exc.last_valid_time})",
              file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
