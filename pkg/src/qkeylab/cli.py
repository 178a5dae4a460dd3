"""Scenario runner: parse a config, seed every module, run the experiment,
emit a reproducible run report.

Reports are canonical text: rerunning the same configuration reproduces the
report byte for byte, whether trials run on one worker or many (results are
keyed by trial id and reduced in id order; the worker count never appears in
the report). Per-trial randomness is derived from the master seed by hashing
it with the scenario name and the trial counter (see `seeds.derive_seed`).

Exit codes: 0 success, 1 protocol failure or failed verdict, 2 config error.
Master seed precedence: --master-seed flag, then QKEYLAB_MASTER_SEED in the
environment, then a `master_seed` line in the config file, then 12345.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import broadcast, coinflip, ecurve, keyexchange, qstate, qwalk, teleport
from .clocksync import Clock, ticking_qubit_sync
from .errors import ConfigError, QKeyLabError
from .numtheory import random_below
from .seeds import derive_rng, derive_seed

ENV_MASTER_SEED = "QKEYLAB_MASTER_SEED"
DEFAULT_MASTER_SEED = 12345

_REQUIRED = object()


def _seed_int(value) -> int:
    """Seed values accept decimal or 0x-prefixed hex."""
    text = str(value).strip()
    return int(text, 16) if text.lower().startswith("0x") else int(text)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, float):
        return f"{value:.12g}"
    return str(value)


@dataclass(frozen=True)
class FieldSpec:
    parse: object
    default: object
    help: str = ""


@dataclass(frozen=True)
class ScenarioConfig:
    scenario: str
    master_seed: int
    workers: int
    params: dict


@dataclass
class RunReport:
    scenario: str
    params: list = field(default_factory=list)
    transcript_lines: list = field(default_factory=list)
    stats: list = field(default_factory=list)
    verdicts: list = field(default_factory=list)

    def stat(self, name, value):
        self.stats.append((name, _fmt(value)))

    def verdict(self, name, ok):
        self.verdicts.append((name, bool(ok)))

    @property
    def exit_code(self) -> int:
        return 0 if all(ok for _, ok in self.verdicts) else 1

    def render(self) -> str:
        lines = ["qkeylab run report", f"scenario = {self.scenario}", "[params]"]
        lines += [f"{k} = {v}" for k, v in self.params]
        lines.append("[transcript]")
        lines += self.transcript_lines
        lines.append("[stats]")
        lines += [f"{k} = {v}" for k, v in self.stats]
        lines.append("[verdicts]")
        lines += [f"{k} = {'PASS' if ok else 'FAIL'}" for k, ok in self.verdicts]
        lines.append(f"result = {'pass' if self.exit_code == 0 else 'fail'}")
        return "\n".join(lines) + "\n"


# -- trial fan-out -------------------------------------------------------------


def _map_trials(worker, n_trials: int, config: ScenarioConfig):
    """Run trials serially or across processes; order is always by trial id."""
    args = [
        (i, derive_seed(config.master_seed, config.scenario, i), config.params)
        for i in range(n_trials)
    ]
    if config.workers <= 1 or n_trials < 2:
        return [worker(a) for a in args]
    chunk = max(1, n_trials // (config.workers * 8))
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(worker, args, chunksize=chunk))


# -- scenario: teleport-demo ---------------------------------------------------


def _teleport_trial(args):
    _, seed, _ = args
    rng = np.random.default_rng(seed)
    raw = rng.normal(size=2) + 1j * rng.normal(size=2)
    state = qstate.StateVector(1, raw / np.linalg.norm(raw))
    record, _ = teleport.teleport_state(state, rng)
    return record.fidelity, record.outcome.bit_z, record.outcome.bit_x


def _run_teleport_demo(config: ScenarioConfig) -> RunReport:
    p = config.params
    report = RunReport("teleport-demo")
    results = _map_trials(_teleport_trial, p["trials"], config)
    fidelities = np.array([r[0] for r in results])
    counts = {(bz, bx): 0 for bz in (0, 1) for bx in (0, 1)}
    for _, bz, bx in results:
        counts[(bz, bx)] += 1
    report.stat("trials", p["trials"])
    report.stat("min_fidelity", float(fidelities.min()))
    report.stat("mean_fidelity", float(fidelities.mean()))
    balanced = True
    for (bz, bx), c in sorted(counts.items()):
        freq = c / p["trials"]
        report.stat(f"outcome_freq_z{bz}x{bx}", freq)
        balanced = balanced and abs(freq - 0.25) <= p["freq_tol"]
    report.verdict("fidelity_floor", float(fidelities.min()) >= 1.0 - p["fidelity_tol"])
    if p["trials"] >= 1000:
        report.verdict("outcome_balance", balanced)
    return report


# -- scenario: clocksync -------------------------------------------------------


def _clocksync_trial(args):
    _, seed, p = args
    rng = np.random.default_rng(seed)
    span = p["delta_span"]
    true_delta = float(rng.uniform(-span, span) * p["t_max_ns"])
    result = ticking_qubit_sync(
        true_delta, p["n_bits"], p["t_max_ns"], p["shots_per_bit"], rng
    )
    return abs(result.delta_estimate_ns - true_delta)


def _run_clocksync(config: ScenarioConfig) -> RunReport:
    p = config.params
    report = RunReport("clocksync")
    errors = np.array(_map_trials(_clocksync_trial, p["trials"], config))
    resolution = p["resolution_ns"]
    if resolution <= 0:
        resolution = p["t_max_ns"] / 2 ** p["n_bits"]
    within = float((errors <= resolution).mean())
    report.stat("trials", p["trials"])
    report.stat("resolution_ns", resolution)
    report.stat("median_error_ns", float(np.median(errors)))
    report.stat("max_error_ns", float(errors.max()))
    report.stat("fraction_within_resolution", within)
    report.stat("qubits_per_trial", p["n_bits"] * p["shots_per_bit"])
    report.verdict("resolution_target", within >= p["pass_fraction"])
    return report


# -- scenario: dh --------------------------------------------------------------


def _dh_instance(args):
    _, seed, p = args
    rng = np.random.default_rng(seed)
    prime = keyexchange.random_prime(p["p_bits"], rng)
    g = 2 + random_below(prime - 3, rng)
    a = keyexchange.random_secret(prime, rng)
    b = keyexchange.random_secret(prime, rng)
    result = keyexchange.classic_dh(keyexchange.DhParams(prime, g), a, b)
    return result.agreed and result.key_a.reveal() == result.key_b.reveal()


def _run_dh(config: ScenarioConfig) -> RunReport:
    p = config.params
    report = RunReport("dh")
    if p["instances"] > 0:
        agreements = _map_trials(_dh_instance, p["instances"], config)
        report.stat("instances", p["instances"])
        report.stat("all_agreed", all(agreements))
        report.verdict("agreement", all(agreements))
        return report
    rng = derive_rng(config.master_seed, "dh", "single")
    params = keyexchange.DhParams(p["p"], p["g"])
    a = keyexchange.random_secret(p["p"], rng)
    b = keyexchange.random_secret(p["p"], rng)
    result = keyexchange.classic_dh(params, a, b)
    agreed = result.agreed and result.key_a.reveal() == result.key_b.reveal()
    report.transcript_lines = result.transcript.render().splitlines()
    report.stat("p", p["p"])
    report.stat("g", p["g"])
    report.stat("agreed", agreed)
    report.stat("key_alice", result.key_a.render())
    report.stat("key_bob", result.key_b.render())
    report.verdict("agreement", agreed)
    return report


# -- scenarios: pqdh / private ---------------------------------------------------


def _geometry(p):
    source = broadcast.BroadcastSource(seed=p["broadcast_seed"], bitrate=p["bitrate"])
    alice = broadcast.Receiver("alice", p["distance_a_m"], Clock(p["offset_a_ns"]))
    bob = broadcast.Receiver("bob", p["distance_b_m"], Clock(p["offset_b_ns"]))
    return source, alice, bob


def _session_window(source, alice, session_index: int, length: int) -> broadcast.KeyWindow:
    base = (
        source.epoch_ns
        + alice.propagation_delay_ns
        + alice.clock.offset_ns
        + 1e9
        + session_index * 1e7
    )
    return broadcast.KeyWindow(base, length)


def _pqdh_session(args):
    i, seed, p = args
    rng = np.random.default_rng(seed)
    source, alice, bob = _geometry(p)
    prime = keyexchange.random_prime(p["p_bits"], rng)
    a = keyexchange.random_secret(prime, rng)
    b = keyexchange.random_secret(prime, rng)
    window = _session_window(source, alice, i, p["p_bits"])
    result = keyexchange.pq_dh(
        source, alice, bob, window, prime, a, b, rng,
        sync_n_bits=p["sync_n_bits"],
        sync_t_max_ns=p["sync_t_max_ns"],
        sync_shots_per_bit=p["sync_shots_per_bit"],
    )
    agreed = result.agreed and result.key_alice.reveal() == result.key_bob.reveal()
    lines = result.transcript.render().splitlines() if i == 0 else []
    return (
        agreed,
        abs(result.sync_error_ns),
        result.window_retries,
        result.flip_retries,
        lines,
        result.key_alice.render(),
    )


def _run_pqdh(config: ScenarioConfig) -> RunReport:
    p = config.params
    report = RunReport("pqdh")
    results = _map_trials(_pqdh_session, p["sessions"], config)
    agreed = [r[0] for r in results]
    report.transcript_lines = results[0][4]
    report.stat("sessions", p["sessions"])
    report.stat("sessions_agreed", sum(agreed))
    report.stat("max_abs_sync_error_ns", max(r[1] for r in results))
    report.stat("window_retries", sum(r[2] for r in results))
    report.stat("flip_retries", sum(r[3] for r in results))
    report.stat("key_render", results[0][5])
    report.verdict("agreement", all(agreed))
    return report


def _private_session(args):
    i, seed, p = args
    rng = np.random.default_rng(seed)
    source, alice, bob = _geometry(p)
    window = _session_window(source, alice, i, p["length_bits"])
    result = keyexchange.private_exchange(
        source, alice, bob, window, rng,
        slot_bits=p["slot_bits"],
        sync_n_bits=p["sync_n_bits"],
        sync_t_max_ns=p["sync_t_max_ns"],
        sync_shots_per_bit=p["sync_shots_per_bit"],
    )
    key_a = result.key_alice.reveal()
    key_b = result.key_bob.reveal()
    agreed = result.agreed and bool(np.array_equal(key_a, key_b))
    lines = result.transcript.render().splitlines() if i == 0 else []
    return agreed, abs(result.sync_error_ns), lines, result.key_alice.render()


def _run_private(config: ScenarioConfig) -> RunReport:
    p = config.params
    report = RunReport("private")
    results = _map_trials(_private_session, p["sessions"], config)
    agreed = [r[0] for r in results]
    report.transcript_lines = results[0][2]
    report.stat("sessions", p["sessions"])
    report.stat("sessions_agreed", sum(agreed))
    report.stat("key_length_bits", p["length_bits"])
    report.stat("max_abs_sync_error_ns", max(r[1] for r in results))
    report.stat("key_render", results[0][3])
    report.verdict("agreement", all(agreed))
    return report


# -- scenario: coinflip ----------------------------------------------------------


def _coinflip_session(args):
    _, seed, p = args
    rng = np.random.default_rng(seed)
    result = coinflip.run_session(p["b"], p["k"], p["max_rounds"], rng, p["challenge_factor"])
    return result.verdict, result.n_trials, result.verified.ok


def _run_coinflip(config: ScenarioConfig) -> RunReport:
    p = config.params
    report = RunReport("coinflip")
    results = _map_trials(_coinflip_session, p["sessions"], config)
    verdicts = [r[0] for r in results]
    total_trials = sum(r[1] for r in results)
    decided = sum(1 for v in verdicts if v in (coinflip.HEADS, coinflip.TAILS))
    heads = sum(1 for v in verdicts if v == coinflip.HEADS)
    verified_all = all(r[2] for r in results)
    report.stat("sessions", p["sessions"])
    report.stat("total_trials", total_trials)
    report.stat("decided_sessions", decided)
    report.stat("undecided_sessions", p["sessions"] - decided)
    report.stat("decision_rate_per_trial", decided / total_trials)
    if decided:
        report.stat("heads_fraction_decided", heads / decided)
    report.stat("verified_all", verified_all)
    report.verdict("verify_honest", verified_all)
    if p["sessions"] >= 2000:
        report.verdict(
            "decision_rate", abs(decided / total_trials - 4.0 / 9.0) <= p["rate_tol"]
        )
        report.verdict("heads_balance", abs(heads / decided - 0.5) <= p["heads_tol"])
    return report


# -- scenarios: density / prng ----------------------------------------------------


def _run_density(config: ScenarioConfig) -> RunReport:
    p = config.params
    report = RunReport("density")
    result = ecurve.parity_density_scan(ecurve.Curve(p["a"], p["b"]), p["x"])
    report.stat("a", p["a"])
    report.stat("b", p["b"])
    report.stat("x_bound", result.x_bound)
    report.stat("primes_scanned", result.primes_scanned)
    report.stat("even_fraction", result.even_fraction)
    report.stat("odd_prime_count", result.odd_prime_count)
    report.stat("excluded_bad_primes", ",".join(map(str, result.excluded_bad_primes)) or "-")
    report.stat("odd_primes_sample", ",".join(map(str, result.odd_primes_sample)) or "-")
    report.stat("splitting_degree", ecurve.splitting_degree(p["a"], p["b"]))
    if p["target"] >= 0:
        report.verdict("density_target", abs(result.even_fraction - p["target"]) <= p["tol"])
    return report


def _run_prng(config: ScenarioConfig) -> RunReport:
    p = config.params
    report = RunReport("prng")
    curve = ecurve.select_curve(p["prng_seed"])
    bits = ecurve.parity_prng(p["prng_seed"], p["bits"], curve)
    zero_fraction = float((bits == 0).mean())
    report.stat("prng_seed", p["prng_seed"])
    report.stat("curve_a", curve.a)
    report.stat("curve_b", curve.b)
    report.stat("bits", p["bits"])
    report.stat("zero_fraction", zero_fraction)
    report.stat("bits_hex", broadcast.bits_to_hex(bits))
    if p["bits"] >= 1000:
        report.verdict("zero_target", abs(zero_fraction - 2.0 / 3.0) <= p["tol"])
    return report


# -- scenarios: qwalk search / sweep ----------------------------------------------


def _build_walk_graph(p, rng):
    if p["graph"] == "torus":
        n = p["n"]
        factory = qwalk.torus_graph
    elif p["graph"] == "cycle":
        n = p["n"]
        factory = qwalk.cycle_graph
    elif p["graph"] == "tree":
        n = p["depth"]
        factory = qwalk.binary_tree_graph
    else:
        raise ConfigError(f"unknown graph kind {p['graph']!r}")
    probe = factory(n)
    marked = p["marked"]
    if marked < 0:
        marked = int(rng.integers(probe.n_vertices))
    return factory(n, marked={marked})


def _run_qwalk_search(config: ScenarioConfig) -> RunReport:
    p = config.params
    report = RunReport("qwalk-search")
    rng = derive_rng(config.master_seed, "qwalk-search", "graph")
    graph = _build_walk_graph(p, rng)
    t_steps = p["t"]
    if t_steps < 0:
        t_steps = qwalk.sweep_step_cap(graph.n_vertices)
    operator = qwalk.marked_walk(graph)
    state = qwalk.uniform_superposition(graph)
    for _ in range(t_steps):
        state = qwalk.step(state, graph, operator)
    probs = np.clip(qwalk.position_probabilities(state, graph).real, 0.0, None)
    exact = float(probs[sorted(graph.marked)].sum())
    sampler = derive_rng(config.master_seed, "qwalk-search", "sample")
    draws = sampler.choice(graph.n_vertices, size=p["trials"], p=probs / probs.sum())
    marked = np.array(sorted(graph.marked))
    hit_rate = float(np.isin(draws, marked).mean())
    sigma = math.sqrt(max(exact * (1 - exact), 1e-12) / p["trials"])
    report.stat("graph", p["graph"])
    report.stat("n_vertices", graph.n_vertices)
    report.stat("steps", t_steps)
    report.stat("marked_vertex", int(marked[0]))
    report.stat("exact_success_probability", exact)
    report.stat("sampled_success_rate", hit_rate)
    report.stat("trials", p["trials"])
    report.verdict("sampling_consistency", abs(hit_rate - exact) <= 3 * sigma + 1e-9)
    return report


def _run_qwalk_sweep(config: ScenarioConfig) -> RunReport:
    p = config.params
    report = RunReport("qwalk-sweep")
    sizes = [int(s) for s in str(p["sizes"]).split(",") if s]
    rng = derive_rng(config.master_seed, "qwalk-sweep", "marks")
    points = qwalk.scaling_sweep(sizes, rng, p["cap_factor"])
    scaled = []
    for point in points:
        c = point.p_star * math.log2(point.n_vertices)
        scaled.append(c)
        report.stat(f"n{point.n_vertices}_t_star", point.t_star)
        report.stat(f"n{point.n_vertices}_p_star", point.p_star)
        report.stat(f"n{point.n_vertices}_p_star_log2n", c)
    if len(scaled) >= 2:
        report.verdict("scaling_floor", min(scaled) >= scaled[0] / 2)
    return report


# -- scenarios: bounded-storage Eve / walk Eve --------------------------------------


def _eve_storage_trial(args):
    _, seed, p = args
    rng = np.random.default_rng(seed)
    source = broadcast.BroadcastSource(seed=p["broadcast_seed"], bitrate=1e6)
    target = broadcast.Receiver("target", 0.0, Clock(0.0))
    start_index = p["span_start"] + (p["span"] - p["length"]) // 2
    window = broadcast.KeyWindow((start_index + 0.5) * source.bit_period_ns, p["length"])
    view = broadcast.eve_store(
        source, window, p["span_start"], p["span"], p["fraction"], rng, p["strategy"]
    )
    recovery = broadcast.eve_recover(view, source, target)
    return recovery.known_bits, recovery.known_bits == p["length"]


def _run_eve_bounded_storage(config: ScenarioConfig) -> RunReport:
    p = config.params
    report = RunReport("eve-bounded-storage")
    results = _map_trials(_eve_storage_trial, p["trials"], config)
    known = np.array([r[0] for r in results], dtype=float)
    full_rate = float(np.mean([r[1] for r in results]))
    length, fraction, trials = p["length"], p["fraction"], p["trials"]
    mean_expected = length * fraction
    mean_sigma = math.sqrt(length * fraction * (1 - fraction) / trials)
    full_expected = fraction**length
    full_sigma = math.sqrt(max(full_expected * (1 - full_expected), 1e-12) / trials)
    report.stat("trials", trials)
    report.stat("length", length)
    report.stat("fraction", fraction)
    report.stat("span", p["span"])
    report.stat("strategy", p["strategy"])
    report.stat("mean_known_bits", float(known.mean()))
    report.stat("expected_known_bits", mean_expected)
    report.stat("full_recovery_rate", full_rate)
    report.stat("expected_full_recovery", full_expected)
    if p["strategy"] == "uniform":
        report.verdict(
            "mean_known", abs(float(known.mean()) - mean_expected) <= 3 * mean_sigma + 1e-12
        )
        if length <= 16:
            report.verdict(
                "full_recovery", abs(full_rate - full_expected) <= 3 * full_sigma + 1e-12
            )
    return report


def _run_eve_qwalk(config: ScenarioConfig) -> RunReport:
    p = config.params
    report = RunReport("eve-qwalk")
    rng = derive_rng(config.master_seed, "eve-qwalk", "key")
    true_key = int(rng.integers(1 << p["depth"]))
    attack = qwalk.keyspace_grid_attack(true_key, p["depth"], p["cap_factor"])
    report.stat("key_bits", p["depth"])
    report.stat("keyspace_size", attack.keyspace_size)
    report.stat("t_star", attack.t_star)
    report.stat("p_star", attack.p_star)
    report.stat("shortfall", attack.shortfall)
    report.stat(
        "step_bound", qwalk.sweep_step_cap(attack.keyspace_size, p["cap_factor"])
    )
    return report


# -- schemas and dispatch ------------------------------------------------------------


def _sync_fields():
    return {
        "sync_n_bits": FieldSpec(int, 14, "clock-sync ladder depth"),
        "sync_t_max_ns": FieldSpec(float, 1.6384e6, "clock-sync unambiguous window"),
        "sync_shots_per_bit": FieldSpec(int, 100, "measurements per ladder rung"),
    }


SCENARIOS: dict = {
    "teleport-demo": (
        {
            "trials": FieldSpec(int, 1000, "number of teleported states"),
            "fidelity_tol": FieldSpec(float, 1e-9, "allowed fidelity shortfall"),
            "freq_tol": FieldSpec(float, 0.02, "allowed outcome-frequency deviation"),
        },
        _run_teleport_demo,
    ),
    "clocksync": (
        {
            "trials": FieldSpec(int, 200, "number of sync runs"),
            "n_bits": FieldSpec(int, 14, "offset digits to resolve"),
            "t_max_ns": FieldSpec(float, 1.6384e6, "unambiguous offset window"),
            "shots_per_bit": FieldSpec(int, 100, "measurements per rung"),
            "delta_span": FieldSpec(float, 0.45, "offsets drawn from +-span*t_max"),
            "resolution_ns": FieldSpec(float, -1.0, "target resolution (<=0: t_max/2^n)"),
            "pass_fraction": FieldSpec(float, 0.99, "required fraction within target"),
        },
        _run_clocksync,
    ),
    "dh": (
        {
            "p": FieldSpec(int, 23, "prime modulus (single-run mode)"),
            "g": FieldSpec(int, 5, "public base (single-run mode)"),
            "instances": FieldSpec(int, 0, "random instances (0: single run with p,g)"),
            "p_bits": FieldSpec(int, 48, "prime size for random instances"),
        },
        _run_dh,
    ),
    "pqdh": (
        {
            "sessions": FieldSpec(int, 5, "independent protocol sessions"),
            "p_bits": FieldSpec(int, 48, "prime modulus size"),
            "broadcast_seed": FieldSpec(_seed_int, 7, "stream seed (decimal or 0x-hex)"),
            "bitrate": FieldSpec(float, 1e6, "broadcast bits per second"),
            "distance_a_m": FieldSpec(float, 0.0, "satellite distance, first party"),
            "distance_b_m": FieldSpec(float, 299792.458, "satellite distance, second party"),
            "offset_a_ns": FieldSpec(float, 0.0, "first party clock offset"),
            "offset_b_ns": FieldSpec(float, 40000.0, "second party clock offset"),
            **_sync_fields(),
        },
        _run_pqdh,
    ),
    "private": (
        {
            "sessions": FieldSpec(int, 5, "independent protocol sessions"),
            "length_bits": FieldSpec(int, 128, "key length"),
            "slot_bits": FieldSpec(int, 8, "log2 of the slot schedule size"),
            "broadcast_seed": FieldSpec(_seed_int, 7, "stream seed (decimal or 0x-hex)"),
            "bitrate": FieldSpec(float, 1e6, "broadcast bits per second"),
            "distance_a_m": FieldSpec(float, 0.0, "satellite distance, first party"),
            "distance_b_m": FieldSpec(float, 299792.458, "satellite distance, second party"),
            "offset_a_ns": FieldSpec(float, 0.0, "first party clock offset"),
            "offset_b_ns": FieldSpec(float, 40000.0, "second party clock offset"),
            **_sync_fields(),
        },
        _run_private,
    ),
    "coinflip": (
        {
            "b": FieldSpec(int, 64, "discriminant window base"),
            "k": FieldSpec(int, 3, "commitment length exponent"),
            "sessions": FieldSpec(int, 200, "sessions to run"),
            "max_rounds": FieldSpec(int, 64, "challenge rounds before undecided"),
            "challenge_factor": FieldSpec(int, 10, "challenge primes drawn from (m, c*m]"),
            "rate_tol": FieldSpec(float, 0.02, "decision-rate tolerance around 4/9"),
            "heads_tol": FieldSpec(float, 0.02, "heads-balance tolerance around 1/2"),
        },
        _run_coinflip,
    ),
    "density": (
        {
            "a": FieldSpec(int, _REQUIRED, "curve coefficient a"),
            "b": FieldSpec(int, _REQUIRED, "curve coefficient b"),
            "x": FieldSpec(int, _REQUIRED, "prime scan bound"),
            "target": FieldSpec(float, -1.0, "expected even fraction (<0: no verdict)"),
            "tol": FieldSpec(float, 0.02, "allowed deviation from target"),
        },
        _run_density,
    ),
    "prng": (
        {
            "prng_seed": FieldSpec(int, 1, "generator seed"),
            "bits": FieldSpec(int, 10000, "output length"),
            "tol": FieldSpec(float, 0.03, "allowed deviation of the zero fraction"),
        },
        _run_prng,
    ),
    "qwalk-search": (
        {
            "graph": FieldSpec(str, "torus", "graph kind: torus, cycle, or tree"),
            "n": FieldSpec(int, 16, "vertex count (torus/cycle)"),
            "depth": FieldSpec(int, 3, "tree depth (tree)"),
            "t": FieldSpec(int, -1, "walk steps (<0: 4*sqrt(N log2 N))"),
            "marked": FieldSpec(int, -1, "marked vertex (<0: seeded choice)"),
            "trials": FieldSpec(int, 2000, "sampled measurements"),
        },
        _run_qwalk_search,
    ),
    "qwalk-sweep": (
        {
            "sizes": FieldSpec(str, "16,64,256", "comma-separated torus sizes"),
            "cap_factor": FieldSpec(float, 4.0, "step cap multiplier"),
        },
        _run_qwalk_sweep,
    ),
    "eve-bounded-storage": (
        {
            "trials": FieldSpec(int, 10000, "independent storage draws"),
            "length": FieldSpec(int, 8, "key window length"),
            "fraction": FieldSpec(float, 0.5, "stored fraction of the span"),
            "span": FieldSpec(int, 2048, "observed stream span (bits)"),
            "span_start": FieldSpec(int, 0, "first index of the span"),
            "strategy": FieldSpec(str, "uniform", "storage strategy: uniform or prefix"),
            "broadcast_seed": FieldSpec(_seed_int, 7, "stream seed (decimal or 0x-hex)"),
        },
        _run_eve_bounded_storage,
    ),
    "eve-qwalk": (
        {
            "depth": FieldSpec(int, 8, "key width in bits (even)"),
            "cap_factor": FieldSpec(float, 4.0, "step cap multiplier"),
        },
        _run_eve_qwalk,
    ),
}


def load_config_file(path: str) -> dict:
    """Flat `key = value` lines; `#` starts a comment; blank lines ignored."""
    values = {}
    try:
        text = open(path).read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        values[key] = value
    return values


def build_config(
    scenario: str,
    file_values: dict | None = None,
    overrides: dict | None = None,
    master_seed: int | None = None,
    workers: int = 1,
) -> ScenarioConfig:
    """Merge defaults, config file, and overrides; reject unknown keys."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}")
    schema, _ = SCENARIOS[scenario]
    params = {name: spec.default for name, spec in schema.items()}
    seed_from_file = None
    for source in (file_values or {},):
        for key, value in source.items():
            if key == "master_seed":
                seed_from_file = int(value)
                continue
            if key not in schema:
                raise ConfigError(f"unknown config key {key!r} for scenario {scenario}")
            try:
                params[key] = schema[key].parse(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key!r}: {value!r}") from exc
    for key, value in (overrides or {}).items():
        if key not in schema:
            raise ConfigError(f"unknown config key {key!r} for scenario {scenario}")
        params[key] = schema[key].parse(value)
    missing = [name for name, value in params.items() if value is _REQUIRED]
    if missing:
        raise ConfigError(f"missing required field: {missing[0]}")
    if master_seed is None:
        env = os.environ.get(ENV_MASTER_SEED)
        if env is not None:
            master_seed = int(env)
        elif seed_from_file is not None:
            master_seed = seed_from_file
        else:
            master_seed = DEFAULT_MASTER_SEED
    return ScenarioConfig(scenario, master_seed, max(1, workers), params)


def run(config: ScenarioConfig) -> RunReport:
    """Dispatch to the scenario runner and echo the effective parameters."""
    schema, runner = SCENARIOS[config.scenario]
    report = runner(config)
    report.params = [("master_seed", _fmt(config.master_seed))] + [
        (name, _fmt(config.params[name])) for name in schema
    ]
    return report


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkeylab",
        description="Deterministic key-agreement protocol experiments.",
    )
    sub = parser.add_subparsers(dest="scenario", required=True)
    for name, (schema, _) in SCENARIOS.items():
        p = sub.add_parser(name, help=f"run the {name} scenario")
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--master-seed", type=int, default=None, help="master seed")
        p.add_argument("--workers", type=int, default=1, help="parallel workers")
        p.add_argument("--out", help="also write the report to this file")
        for field_name, spec in schema.items():
            p.add_argument(
                f"--{field_name.replace('_', '-')}",
                dest=f"param_{field_name}",
                default=None,
                help=spec.help,
            )
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        file_values = load_config_file(args.config) if args.config else {}
        overrides = {
            name[len("param_") :]: value
            for name, value in vars(args).items()
            if name.startswith("param_") and value is not None
        }
        config = build_config(
            args.scenario, file_values, overrides, args.master_seed, args.workers
        )
        report = run(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except QKeyLabError as exc:
        print(f"protocol failure: {exc}", file=sys.stderr)
        return 1
    text = report.render()
    if args.out:
        with open(args.out, "w") as handle:
            handle.write(text)
    sys.stdout.write(text)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
