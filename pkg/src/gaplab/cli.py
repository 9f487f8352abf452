"""Batch experiment runner: every subsystem exposed as a subcommand with
deterministic seeds, line-oriented config files, and JSON reports.

A report lists every invariant checked with its measured value and bound;
the process exits 0 iff all checks pass.  Fixed seed and config give
byte-identical reports (the --threads flag is accepted for symmetry with
partitionable kernels but never changes results).
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.linalg import expm

from . import circuits, clock, configgraph, estimators, phase_estimation, reports
from . import random_instances as rand
from .linalg import SparseHermitian
from .schrieffer_wolff import (
    DEFAULT_TRUNCATION_CONSTANT,
    effective_spectrum,
    low_energy_projector,
    split_from_parts,
    sw_unitary,
    truncation_error_bound,
)

SCENARIOS = (
    "clock-spectrum",
    "power-decide",
    "cooling",
    "phase-est",
    "gs-verify",
    "tm-graph",
    "sw-check",
    "transforms",
)

GAP_FIT_CONSTANT = 0.1
PATH_KEYS = ("circuit", "tm", "hamiltonian")


@dataclass
class ScenarioConfig:
    scenario: str
    seed: int = 0
    out: str | None = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        for key in PATH_KEYS:
            value = self.params.get(key)
            if value is not None and not Path(value).exists():
                raise ValueError(f"referenced path does not exist: {value}")


def parse_config(path) -> dict:
    """Line-oriented ``key = value`` file with optional [section] headers;
    section names prefix keys as ``section.key``."""
    values: dict[str, object] = {}
    section = ""
    with open(path, "r", encoding="ascii") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("[") and line.endswith("]"):
                section = line[1:-1].strip()
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value, got {line!r}")
            key, _, value = line.partition("=")
            key = key.strip()
            if section:
                key = f"{section}.{key}"
            values[key] = _parse_value(value.strip(), path)
    return values


def _parse_value(text: str, base_path):
    # only canonical numerals are coerced, so tape strings like 000123 survive
    try:
        if str(int(text)) == text:
            return int(text)
    except ValueError:
        pass
    if any(ch in text for ch in ".eE"):
        try:
            return float(text)
        except ValueError:
            pass
    if text.lower() in ("true", "false"):
        return text.lower() == "true"
    return text


def _resolve_paths(params: dict, config_path) -> dict:
    out = dict(params)
    base = Path(config_path).parent
    for key in PATH_KEYS:
        if key in out and isinstance(out[key], str):
            p = Path(out[key])
            out[key] = str(p if p.is_absolute() else base / p)
    return out


def _check(name: str, value: float, bound: float, ok: bool) -> dict:
    return {"name": name, "value": value, "bound": bound, "pass": bool(ok)}


def _finish(report: dict) -> dict:
    report["pass"] = all(c["pass"] for c in report["checks"])
    return report


def _base_report(cfg: ScenarioConfig) -> dict:
    return {
        "scenario": cfg.scenario,
        "seed": cfg.seed,
        "inputs_digest": reports.stable_digest(
            {"scenario": cfg.scenario, "seed": cfg.seed, "params": cfg.params}
        ),
        "constants": {
            "sw_truncation_constant": DEFAULT_TRUNCATION_CONSTANT,
            "taylor_remainder_constant": estimators.TAYLOR_REMAINDER_CONSTANT,
            "gap_fit_constant": GAP_FIT_CONSTANT,
        },
        "statistics": {},
        "checks": [],
    }


# --- scenarios ---------------------------------------------------------------


def run_clock_spectrum(cfg: ScenarioConfig) -> dict:
    rng = np.random.default_rng(cfg.seed)
    report = _base_report(cfg)
    p = cfg.params
    if "circuit" in p:
        circ = circuits.read_circuit(p["circuit"])
        instances = [circ]
    else:
        instances = []
        n_circuits = int(p.get("circuits", 6))
        for _ in range(n_circuits):
            m = int(rng.integers(1, 3))
            w = int(rng.integers(1, 3))
            t_gates = int(rng.integers(2, int(p.get("max_gates", 5)) + 1))
            instances.append(rand.random_circuit(rng, m, w, t_gates))
    fraction = float(p.get("epsilon_fraction", 160.0))
    worst_track, worst_inherit = 0.0, 0.0
    for k, circ in enumerate(instances):
        h0 = clock.build_clock(circ, 0.0)
        delta0 = clock.unperturbed_gap(h0)
        eps = delta0 / fraction
        ham = clock.build_clock(circ, eps)
        q = circuits.accept_operator(circ)
        preds = clock.predicted_spectrum(ham, q)
        low = np.linalg.eigvalsh(ham.total())[: 2**circ.w]
        bound = 10.0 * eps**2 / delta0
        dev = float(np.max(np.abs(low - preds)))
        worst_track = max(worst_track, dev / bound)
        report["checks"].append(_check(f"tracking[{k}]", dev, bound, dev <= bound))
        if circ.w >= 1:
            inherit = abs((low[1] - low[0]) - eps * q.spectral_gap / (circ.T + 1))
            worst_inherit = max(worst_inherit, inherit / (2 * bound))
            report["checks"].append(
                _check(f"gap-inheritance[{k}]", inherit, 2 * bound, inherit <= 2 * bound)
            )
        if k == 0:
            report["statistics"]["E1"] = float(low[0])
            report["statistics"]["delta0"] = delta0
            report["statistics"]["epsilon"] = eps
    report["statistics"]["worst_tracking_ratio"] = worst_track
    report["statistics"]["worst_inheritance_ratio"] = worst_inherit
    return _finish(report)


def run_power_decide(cfg: ScenarioConfig) -> dict:
    rng = np.random.default_rng(cfg.seed)
    report = _base_report(cfg)
    p = cfg.params
    n_instances = int(p.get("instances", 50))
    c, s, delta = (
        float(p.get("c", 0.9)),
        float(p.get("s", 0.55)),
        float(p.get("delta", 0.3)),
    )
    w_max = int(p.get("w_max", 4))
    correct = 0
    min_sep_ratio = math.inf
    for _ in range(n_instances):
        w = int(rng.integers(1, w_max + 1))
        vals, is_yes = rand.random_promise_diagonal(rng, w, c, s, delta)
        q = circuits.AcceptOperator.from_matrix(np.diag(vals).astype(complex))
        params = circuits.PromiseParams(c=c, s=s, g1=delta, g2=delta, w=w)
        outcome = estimators.decide_power(q, params)
        correct += (outcome.verdict == "YES") == is_yes
        plan = estimators.choose_power(c, s, delta, w)
        sep = plan.yes_threshold - estimators.no_case_trace_bound(plan, c, s, delta, w)
        min_sep_ratio = min(min_sep_ratio, sep / plan.margin)
    report["statistics"]["instances"] = n_instances
    report["statistics"]["correct"] = correct
    report["checks"].append(
        _check("verdict-accuracy", float(correct), float(n_instances), correct == n_instances)
    )
    report["checks"].append(
        _check("separation-ratio", min_sep_ratio, 1.0, min_sep_ratio >= 1.0)
    )
    return _finish(report)


def run_cooling(cfg: ScenarioConfig) -> dict:
    rng = np.random.default_rng(cfg.seed)
    report = _base_report(cfg)
    p = cfg.params
    n_instances = int(p.get("instances", 20))
    n_qubits = int(p.get("qubits", 3))
    delta = float(p.get("delta", 0.4))
    n_param = int(p.get("n", 10))
    agree = 0
    worst_overlap_dev = 0.0
    for _ in range(n_instances):
        h = rand.random_gapped_hamiltonian(rng, n_qubits, delta)
        a = rand.random_local_observable(rng, n_qubits)
        vals, vecs = h.eigensystem()
        ground_val = float(np.real(vecs[:, 0].conj() @ a.matrix @ vecs[:, 0]))
        offset = 0.1 if rng.random() < 0.5 else -0.1
        thresholds = (ground_val + offset - 0.05, ground_val + offset + 0.05)
        outcome = estimators.cooling_decide(h, a, thresholds, delta, n_param)
        exact = "YES" if ground_val <= (thresholds[0] + thresholds[1]) / 2 else "NO"
        agree += outcome.verdict == exact
        beta = n_param / delta
        # independent route via Pade expm for the ground-overlap formula
        rho = expm(-2.0 * beta * h.matrix)
        direct = float(
            np.real(vecs[:, 0].conj() @ rho @ vecs[:, 0]) / np.real(np.trace(rho))
        )
        closed = estimators.thermal_ground_overlap(h, beta)
        worst_overlap_dev = max(worst_overlap_dev, abs(direct - closed))
        del vals
    report["statistics"]["instances"] = n_instances
    report["statistics"]["agreements"] = agree
    report["checks"].append(
        _check("verdict-agreement", float(agree), float(n_instances), agree == n_instances)
    )
    report["checks"].append(
        _check("overlap-closed-form", worst_overlap_dev, 1e-10, worst_overlap_dev <= 1e-10)
    )
    return _finish(report)


def run_phase_est(cfg: ScenarioConfig) -> dict:
    rng = np.random.default_rng(cfg.seed)
    report = _base_report(cfg)
    p = cfg.params
    if "hamiltonian" in p:
        h = SparseHermitian.from_coo_file(p["hamiltonian"])
    else:
        h = rand.random_gapped_hamiltonian(rng, int(p.get("qubits", 2)), 0.3)
    plan = phase_estimation.choose_time(h)
    worst = 0.0
    for _ in range(int(p.get("states", 20))):
        state = rand.random_state(rng, h.dim)
        pc = phase_estimation.one_bit_pe_accept(h, plan.t, state, mode="circuit")
        pf = phase_estimation.one_bit_pe_accept(h, plan.t, state, mode="closed-form")
        worst = max(worst, abs(pc - pf))
    report["statistics"]["t"] = plan.t
    report["statistics"]["norm_bound"] = plan.norm_bound
    report["checks"].append(_check("circuit-vs-closed-form", worst, 1e-10, worst <= 1e-10))
    grid_ok = True
    worst_slack = math.inf
    for e0 in np.linspace(0.0, 1.0, 10):
        for e1 in np.linspace(e0, 1.2, 10):
            for t in np.linspace(0.05, 1.2, 10):
                if e1 * t >= math.pi / 2:
                    continue
                got = math.cos(e0 * t) - math.cos(e1 * t)
                bound = phase_estimation.pe_gap_bound(e0, e1, t)
                worst_slack = min(worst_slack, got - bound)
                grid_ok = grid_ok and got >= bound - 1e-12
    report["checks"].append(_check("quadratic-gap-bound", worst_slack, 0.0, grid_ok))
    return _finish(report)


def _product_instance(rng: np.random.Generator, yes: bool):
    """2-qubit Hamiltonian diagonal in a random product basis, with a
    preparation circuit for its exact ground state."""
    u1, u2 = rand.haar_unitary(rng, 2), rand.haar_unitary(rng, 2)
    basis = np.kron(u1, u2)
    e1 = 0.1 if yes else 0.55
    diag = np.array([e1, 1.0, 1.5, 2.0])
    h = SparseHermitian(basis @ np.diag(diag) @ basis.conj().T)
    prep = circuits.VerifierCircuit(
        m=2,
        w=0,
        gates=(circuits.GateOp("p0", u1, (0,)), circuits.GateOp("p1", u2, (1,))),
        decision_qubit=0,
    )
    return h, prep, diag


def run_gs_verify(cfg: ScenarioConfig) -> dict:
    rng = np.random.default_rng(cfg.seed)
    report = _base_report(cfg)
    p = cfg.params
    a_val, b_val, f_n = float(p.get("a", 0.15)), float(p.get("b", 0.5)), float(p.get("f_n", 2.0))
    n_instances = int(p.get("instances", 8))
    correct = 0
    worst_floor = math.inf
    for k in range(n_instances):
        yes = k % 2 == 0
        h, prep, diag = _product_instance(rng, yes)
        outcome = phase_estimation.gs_description_verify(h, prep, a_val, b_val, f_n)
        correct += outcome.verdict == ("YES" if yes else "NO")
        if yes:
            floor = phase_estimation.yes_case_accept_floor(a_val, b_val, f_n, 1.0 / f_n)
            worst_floor = min(worst_floor, outcome.statistic - floor)
        gap = float(diag[1] - diag[0])
        accept_gap = (math.cos(diag[0] / f_n) - math.cos(diag[1] / f_n)) / 2.0
        bound = phase_estimation.min_accept_gap(gap, f_n)
        report["checks"].append(
            _check(f"accept-gap[{k}]", accept_gap, bound, accept_gap >= bound)
        )
    report["statistics"]["instances"] = n_instances
    report["checks"].append(
        _check("verdicts", float(correct), float(n_instances), correct == n_instances)
    )
    report["checks"].append(
        _check("yes-floor-slack", worst_floor, 0.0, worst_floor >= 0.0)
    )
    return _finish(report)


def run_tm_graph(cfg: ScenarioConfig) -> dict:
    report = _base_report(cfg)
    p = cfg.params
    if "tm" not in p:
        raise ValueError("tm-graph needs a machine file: set tm = <path>")
    tm = configgraph.read_tm(p["tm"])
    input_symbols = str(p.get("input", ""))
    tail = int(p.get("tail_length", 8))
    g = configgraph.build_config_graph(tm, input_symbols)
    mg = configgraph.modify_graph(g, tail)
    vals, e1, gap = configgraph.ata_spectrum(mg)
    report["statistics"]["vertices"] = mg.n_vertices
    report["statistics"]["E1"] = e1
    report["statistics"]["gap"] = gap
    dist = g.accept_distance()
    if dist is not None:
        pred = 4.0 * math.sin(math.pi / (4 * dist + 2)) ** 2
        report["statistics"]["accept_distance"] = dist
        report["checks"].append(
            _check("yes-E1-closed-form", abs(e1 - pred), 1e-10, abs(e1 - pred) <= 1e-10)
        )
        pred2 = 4.0 * math.sin(3 * math.pi / (4 * dist + 2)) ** 2
        dev2 = abs(gap - (pred2 - pred))
        report["checks"].append(
            _check("yes-gap-closed-form", dev2, 1e-10, dev2 <= 1e-10)
        )
    else:
        gap_val, bound, ok = configgraph.no_case_gap_check(mg, c_fit=GAP_FIT_CONSTANT)
        report["checks"].append(_check("no-E1-zero", e1, 1e-12, e1 <= 1e-12))
        report["checks"].append(_check("no-gap-bound", gap_val, bound, ok))
    m = configgraph.ata_matrix(mg)
    per_row = int(np.max(np.diff(m.indptr)))
    report["checks"].append(_check("ata-row-sparsity", float(per_row), 3.0, per_row <= 3))
    return _finish(report)


def run_sw_check(cfg: ScenarioConfig) -> dict:
    rng = np.random.default_rng(cfg.seed)
    report = _base_report(cfg)
    p = cfg.params
    n_splits = int(p.get("splits", 25))
    worst_intertwine = 0.0
    worst_unitary = 0.0
    for _ in range(n_splits):
        dim = int(rng.integers(4, 17))
        degeneracy = int(rng.integers(1, 3))
        basis = rand.haar_unitary(rng, dim)
        vals = np.concatenate([np.zeros(degeneracy), np.sort(1.0 + rng.random(dim - degeneracy))])
        h0 = (basis * vals) @ basis.conj().T
        h0 = (h0 + h0.conj().T) / 2
        h1 = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
        h1 = (h1 + h1.conj().T) / 2
        h1 *= (1.0 / 20.0) / np.linalg.norm(h1, 2)
        split = split_from_parts(h0, h1)
        proj = low_energy_projector(split)
        u = sw_unitary(split.p0, proj)
        worst_unitary = max(
            worst_unitary,
            float(np.max(np.abs(u.conj().T @ u - np.eye(dim)))),
        )
        worst_intertwine = max(
            worst_intertwine,
            float(np.max(np.abs(u @ proj @ u.conj().T - split.p0))),
        )
    report["checks"].append(
        _check("sw-unitarity", worst_unitary, 1e-10, worst_unitary <= 1e-10)
    )
    report["checks"].append(
        _check("sw-intertwining", worst_intertwine, 1e-9, worst_intertwine <= 1e-9)
    )
    # closed-form 2x2 family sweep
    delta = 1.0
    sx = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    worst_ratio = 0.0
    eps = delta / 16
    while eps >= delta / 1024:
        split = split_from_parts(np.diag([0.0, delta]).astype(complex), eps * sx)
        approx = effective_spectrum(split, 1)[0]
        exact = (delta - math.sqrt(delta**2 + 4 * eps**2)) / 2
        err = abs(approx - exact)
        bound = 2 * eps**2 / delta
        worst_ratio = max(worst_ratio, err / bound)
        trunc = truncation_error_bound(eps, delta)
        report["checks"].append(
            _check(f"trunc-bound-eps={eps!r}", err, min(bound, trunc), err <= min(bound, trunc))
        )
        eps /= 2
    report["statistics"]["worst_2x2_ratio"] = worst_ratio
    return _finish(report)


def run_transforms(cfg: ScenarioConfig) -> dict:
    rng = np.random.default_rng(cfg.seed)
    report = _base_report(cfg)
    p = cfg.params

    base = circuits.VerifierCircuit(
        m=1,
        w=1,
        gates=(circuits.gate("CNOT", 1, 0), circuits.gate("X", 0)),
        decision_qubit=0,
    )
    ext = circuits.classical_witness_extend(base)
    params = circuits.PromiseParams(c=1.0, s=0.0, w=1)
    flagged = circuits.flag_qubit_transform(ext, params, 4)
    spectrum = circuits.accept_operator(flagged).eigenvalues
    expected = np.array([1.0, 0.25, 0.0, 0.0])
    dev = float(np.max(np.abs(np.sort(spectrum) - np.sort(expected))))
    report["checks"].append(_check("flag-spectrum-union", dev, 1e-10, dev <= 1e-10))

    ones = circuits.VerifierCircuit(
        m=1, w=2, gates=(circuits.gate("X", 0),), decision_qubit=0
    )
    ext2 = circuits.classical_witness_extend(ones)
    params2 = circuits.PromiseParams(c=1.0, s=0.0, w=2)
    reject_exponent = int(p.get("reject_exponent", 8))
    transformed = circuits.distinct_prob_transform(ext2, reject_exponent, params2)
    probs = np.real(np.diag(circuits.accept_operator(transformed).q_matrix))
    predicted = circuits.damped_accept_probabilities(ext2, reject_exponent)
    dev2 = float(np.max(np.abs(np.sort(probs) - np.sort(predicted))))
    report["checks"].append(_check("distinct-prob-agreement", dev2, 1e-12, dev2 <= 1e-12))
    gaps = np.diff(np.sort(probs))
    min_gap = float(np.min(gaps))
    report["checks"].append(
        _check("distinct-prob-min-gap", min_gap, 2.0**-reject_exponent,
               min_gap >= 2.0**-reject_exponent - 1e-12)
    )

    c, g1 = float(p.get("c", 0.6)), float(p.get("g1", 0.2))
    schedule = circuits.uqcma_query_schedule(c, g1)
    covered = 0
    trials = int(p.get("schedule_trials", 100))
    for _ in range(trials):
        lam1 = float(rng.uniform(c, 1.0))
        lam2 = float(rng.uniform(0.0, max(lam1 - g1, 0.0)))
        covered += circuits.schedule_covers(schedule, lam1, lam2)
    report["checks"].append(
        _check("schedule-coverage", float(covered), float(trials), covered == trials)
    )

    region_ok = True
    iff_ok = True
    for w in range(1, 11):
        for t in range(0, 11):
            for u in range(1, 11):
                margin = estimators.postqma_margin(w, t, u)
                cond = estimators.postqma_margin_positive_condition(w, t, u)
                iff_ok = iff_ok and ((margin > 0) == cond)
                if u > w + 1 and t > 1:
                    region_ok = region_ok and margin > 0
    report["checks"].append(_check("postqma-iff", 1.0 if iff_ok else 0.0, 1.0, iff_ok))
    report["checks"].append(
        _check("postqma-sufficient-region", 1.0 if region_ok else 0.0, 1.0, region_ok)
    )
    return _finish(report)


RUNNERS = {
    "clock-spectrum": run_clock_spectrum,
    "power-decide": run_power_decide,
    "cooling": run_cooling,
    "phase-est": run_phase_est,
    "gs-verify": run_gs_verify,
    "tm-graph": run_tm_graph,
    "sw-check": run_sw_check,
    "transforms": run_transforms,
}


def run_scenario(cfg: ScenarioConfig) -> dict:
    return RUNNERS[cfg.scenario](cfg)


def emit_table(report_paths: list[str], out_path: str) -> None:
    """One CSV row per report; rejects mixed scenario types."""
    rows = []
    scenario = None
    for path in report_paths:
        with open(path, "r", encoding="ascii") as f:
            report = json.load(f)
        if scenario is None:
            scenario = report["scenario"]
        elif report["scenario"] != scenario:
            raise ValueError(
                f"mixed scenario types: {scenario!r} and {report['scenario']!r}"
            )
        row = {"scenario": report["scenario"], "seed": report["seed"], "pass": report["pass"]}
        for key, value in report["statistics"].items():
            row[key] = value
        rows.append(row)
    columns = ["scenario", "seed", "pass"]
    for row in rows:
        for key in row:
            if key not in columns:
                columns.append(key)
    with open(out_path, "w", newline="", encoding="ascii") as f:
        writer = csv.DictWriter(f, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: repr(v) if isinstance(v, float) else v for k, v in row.items()})


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="gaplab", description="desk-scale spectral-gap laboratory"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SCENARIOS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", default=None)
        sp.add_argument("--out", default=None)
        sp.add_argument("--seed", type=int, default=None)
        sp.add_argument("--threads", type=int, default=1)
    tp = sub.add_parser("emit-table")
    tp.add_argument("reports", nargs="*")
    tp.add_argument("--out", required=True)

    args = parser.parse_args(argv)
    try:
        if args.command == "emit-table":
            emit_table(args.reports, args.out)
            return 0
        params: dict = {}
        seed = 0
        if args.config:
            raw = parse_config(args.config)
            raw = {k.split(".", 1)[-1]: v for k, v in raw.items()}
            declared = raw.pop("scenario", args.command)
            if declared != args.command:
                raise ValueError(
                    f"config declares scenario {declared!r} but subcommand is "
                    f"{args.command!r}"
                )
            seed = int(raw.pop("seed", 0))
            params = _resolve_paths(raw, args.config)
        if args.seed is not None:
            seed = args.seed
        if args.threads < 1:
            raise ValueError("--threads must be at least 1")
        cfg = ScenarioConfig(scenario=args.command, seed=seed, params=params)
        report = run_scenario(cfg)
        text = reports.render_report(report)
        if args.out:
            with open(args.out, "w", encoding="ascii") as f:
                f.write(text)
        else:
            sys.stdout.write(text)
        return 0 if report["pass"] else 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
