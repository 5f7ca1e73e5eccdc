"""Seeded experiment runners behind the command-line interface.

Every runner is a pure function of (config, seed): data outputs (CSV and
result documents) are byte-identical across re-runs; the run summary
(report.json) additionally records wall time, the one field excluded from
that determinism contract. Angles are degrees in files, radians internally.
"""

from __future__ import annotations

import json
import math
import time
from pathlib import Path

import numpy as np

from . import analysis, pattern, synthesis
from .analysis import LinkBudget, CoverageStats
from .channel import (ArrayGeometry, ChannelConfig, PathSet, assemble_channel,
                      channel_stats, sample_paths)
from .manifold import random_unit_modulus
from .pattern import region_masks
from .scenario import ScenarioConfig, scenario_rng_children
from .synthesis import CoverageRegion, measure_minus3db_region, predict_shifted_region
from .validation import gradient_check


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.12g}"


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _finish(out_dir: Path, command: str, config: ScenarioConfig, payload: dict,
            outputs: list[str], t0: float, exit_code: int = 0) -> dict:
    report = {
        "command": command,
        "seed": config.seed,
        "config_hash": config.config_hash(),
        "outputs": outputs,
        "payload": payload,
        "exit_code": exit_code,
        "wall_time_s": round(time.perf_counter() - t0, 3),
    }
    with open(out_dir / "report.json", "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return report


def _ensure_dir(out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _design(config: ScenarioConfig):
    """Draw the design channel and synthesize (theta, W) for the scenario."""
    chan_seed, synth_seed = scenario_rng_children(config, 2)
    paths = sample_paths(config.bs_ris_channel(), np.random.default_rng(chan_seed))
    stats = channel_stats(paths, ArrayGeometry(config.ris_elements),
                          ArrayGeometry(config.bs_antennas))
    result = synthesis.synthesize(config.target(), stats, config.streams,
                                  oversampling=config.oversampling,
                                  weight_config=config.weight_config(),
                                  seed=synth_seed,
                                  **config.optimizer.synthesis_kwargs())
    return paths, stats, result


def run_synthesize(config: ScenarioConfig, out_dir, assert_ripple_db: float | None = None) -> dict:
    """Synthesize the configured flat-top design; emit the pattern, the cost
    trace, and the full design document. Nonzero exit when the achieved
    ripple exceeds ``assert_ripple_db``."""
    t0 = time.perf_counter()
    out = _ensure_dir(out_dir)
    paths, stats, result = _design(config)
    grid = result.grid
    angles = grid.angles

    pattern.pattern_to_csv(out / "pattern.csv", angles, result.achieved_pattern,
                           result.target_values)
    trace = result.concatenated_trace()
    _write_csv(out / "trace.csv", ["iteration", "cost"],
               ((i, c) for i, c in enumerate(trace)))

    flat_mask, _, _ = region_masks(config.target(), angles)
    payload = {
        "ripple_db": result.flat_top_ripple_db,
        "achieved_flat_mean": float(result.achieved_pattern[flat_mask].mean()),
        "target_flat_power": config.flat_power_value(),
        "initial_cost": float(result.outer_cost_trace[0]),
        "final_cost": result.final_cost,
        "outer_iterations": int(len(result.outer_cost_trace) - 1),
        "winning_start": result.start_index,
    }
    doc = dict(payload)
    doc.update({
        "phases_rad": np.angle(result.theta).tolist(),
        "precoder_real": result.precoder.real.tolist(),
        "precoder_imag": result.precoder.imag.tolist(),
        "outer_cost_trace": result.outer_cost_trace.tolist(),
        "config_hash": config.config_hash(),
    })
    with open(out / "result.json", "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")
    outputs = ["pattern.csv", "trace.csv", "result.json"]

    if config.batch_channels > 0:
        batch = _batch_patterns(config)
        _write_csv(out / "pattern_stats.csv",
                   ["angle_deg", "mean_gain_linear", "std_gain_linear", "mean_gain_db"],
                   ((math.degrees(a), m, s, 10.0 * math.log10(max(m, 1e-30)))
                    for a, m, s in zip(angles, batch.mean(axis=0), batch.std(axis=0))))
        payload["batch_channels"] = config.batch_channels
        outputs.append("pattern_stats.csv")

    exit_code = 0
    if assert_ripple_db is not None and not result.flat_top_ripple_db <= assert_ripple_db:
        payload["ripple_assertion"] = f"FAIL: {result.flat_top_ripple_db:.3f} dB > {assert_ripple_db} dB"
        exit_code = 1
    return _finish(out, "synthesize", config, payload, outputs, t0, exit_code)


def _batch_patterns(config: ScenarioConfig) -> np.ndarray:
    """Achieved patterns over freshly drawn design channels, one per row."""
    children = np.random.SeedSequence(config.seed).spawn(2 * config.batch_channels)
    rows = []
    for i in range(config.batch_channels):
        paths = sample_paths(config.bs_ris_channel(), np.random.default_rng(children[2 * i]))
        stats = channel_stats(paths, ArrayGeometry(config.ris_elements),
                              ArrayGeometry(config.bs_antennas))
        result = synthesis.synthesize(config.target(), stats, config.streams,
                                      oversampling=config.oversampling,
                                      weight_config=config.weight_config(),
                                      seed=children[2 * i + 1],
                                      **config.optimizer.synthesis_kwargs())
        rows.append(result.achieved_pattern)
    return np.asarray(rows)


def _subcarrier_rate(eq_channel: np.ndarray, precoder: np.ndarray, snr_scale: float) -> float:
    hw = eq_channel @ precoder
    gram = np.eye(eq_channel.shape[0]) + snr_scale * hw @ hw.conj().T
    sign, logdet = np.linalg.slogdet(gram)
    return float(logdet / math.log(2.0))


def run_broadcast_cdf(config: ScenarioConfig, out_dir,
                      overhead_fraction: float = 0.0) -> dict:
    """Empirical downlink-rate CDFs of the synthesized design against the
    random-phase and no-surface baselines, users at random angles inside the
    coverage with one subcarrier each, common channel draws across
    strategies. Rates are per assigned subcarrier, cyclic-prefix adjusted
    and scaled by (1 - overhead_fraction).

    None of the strategies sees instantaneous CSI: the no-surface baseline
    transmits the same broad-coverage precoder over the direct channel
    alone, and the random-phase baseline redraws the surface phases each
    realization while keeping that precoder.
    """
    t0 = time.perf_counter()
    out = _ensure_dir(out_dir)
    design_paths, stats, design = _design(config)
    theta = design.theta
    w = design.precoder
    budget = config.budget()
    lo, hi = config.coverage_rad()
    n_c = config.subcarriers
    m = config.ris_elements
    ue = ArrayGeometry(config.ue_antennas)
    ris = ArrayGeometry(m)
    bs = ArrayGeometry(config.bs_antennas)
    cp = n_c / (n_c + config.cp_length)
    scale = cp * (1.0 - overhead_fraction)

    feed_cfg = ChannelConfig(
        num_paths=design_paths.num_paths,
        k_factor_db=config.bs_ris_channel().k_factor_db,
        delay_spread_taps=config.cp_length,
        angle_distribution=(tuple(design_paths.arrival_angles),
                            tuple(design_paths.departure_angles)))

    (trial_seed,) = scenario_rng_children(config, 3)[2:3]
    rng = np.random.default_rng(trial_seed)
    rates = {"proposed": [], "random_phase": [], "no_ris": []}
    for _ in range(config.realizations):
        feed = sample_paths(feed_cfg, rng)
        theta_rand = random_unit_modulus(m, rng)
        for u in range(config.users):
            k = u % n_c
            angle = rng.uniform(lo, hi)
            user_cfg = ChannelConfig(num_paths=config.ris_user_paths,
                                     k_factor_db=config.ris_user_k_factor_db,
                                     delay_spread_taps=config.cp_length,
                                     los_departure=angle)
            user = sample_paths(user_cfg, rng)
            direct = sample_paths(config.direct_channel(), rng)
            g_k = assemble_channel(feed, bs, ris, k, n_c)
            h_k = assemble_channel(user, ris, ue, k, n_c,
                                   rx_convention="departure_sin_neg",
                                   tx_convention="arrival_cos_pos")
            hd_k = assemble_channel(direct, bs, ue, k, n_c,
                                    rx_convention="departure_sin_neg",
                                    tx_convention="departure_sin_neg")
            for name, th in (("proposed", theta), ("random_phase", theta_rand)):
                heq = analysis.equivalent_channel(h_k, th, g_k, hd_k, budget)
                rates[name].append(scale * _subcarrier_rate(heq, w, budget.snr_scale))
            heq_d = math.sqrt(budget.direct_gain) * hd_k
            rates["no_ris"].append(scale * _subcarrier_rate(heq_d, w, budget.snr_scale))

    rows = []
    medians = {}
    for name in ("proposed", "random_phase", "no_ris"):
        vals = np.sort(np.asarray(rates[name]))
        medians[name] = float(np.median(vals)) if vals.size else None
        n = vals.size
        rows.extend((name, v, (i + 1) / n) for i, v in enumerate(vals))
    _write_csv(out / "cdf.csv",
               ["strategy", "rate_bits_per_subcarrier_symbol", "cdf"], rows)
    payload = {
        "median_rates": medians,
        "users": config.users,
        "realizations": config.realizations,
        "overhead_fraction": overhead_fraction,
        "ripple_db": design.flat_top_ripple_db,
        "no_ris_strategy": "direct channel only, same broad-coverage precoder "
                           "(no instantaneous CSI at the transmitter)",
    }
    return _finish(out, "broadcast-cdf", config, payload, ["cdf.csv"], t0)


def run_ofdma_eval(config: ScenarioConfig, out_dir,
                   overhead_fraction: float = 0.0) -> dict:
    """Monte Carlo mean OFDMA rate under the ideal flat top next to its
    closed-form prediction, swept over the Rice factor and transmit power."""
    t0 = time.perf_counter()
    out = _ensure_dir(out_dir)
    spec = config.ofdma
    budget0 = config.budget()
    lo, hi = (math.radians(d) for d in spec.coverage_deg)
    beamwidth = hi - lo
    flat = spec.ris_elements * math.pi / beamwidth
    n_c = config.subcarriers
    cp = n_c / (n_c + config.cp_length)
    scale = cp * (1.0 - overhead_fraction)

    children = np.random.SeedSequence(config.seed).spawn(len(spec.k_sweep_db))
    rows = []
    worst = 0.0
    for child, k_db in zip(children, spec.k_sweep_db):
        k_lin = 10.0 ** (k_db / 10.0)
        stats = CoverageStats(k_lin, beamwidth, flat)
        gains = analysis.idealized_ofdma_channel_gains(
            stats, (lo, hi), spec.nlos_paths, spec.direct_paths, n_c,
            config.bs_antennas, budget0.bs_ris_gain * budget0.ris_user_gain,
            budget0.direct_gain, spec.realizations, np.random.default_rng(child))
        for p_dbm in spec.p_sweep_dbm:
            budget = LinkBudget(analysis.dbm_to_watts(p_dbm), budget0.noise_power_w,
                                budget0.bs_ris_gain, budget0.ris_user_gain,
                                budget0.direct_gain)
            mc = scale * float(np.mean(np.sum(np.log2(1.0 + budget.snr_scale * gains), axis=1)))
            closed = scale * analysis.analytic_ofdma_rate(stats, budget, n_c,
                                                          config.bs_antennas)
            rel = abs(closed - mc) / max(mc, np.finfo(float).tiny)
            worst = max(worst, rel)
            rows.append((k_db, p_dbm, mc, closed, 100.0 * rel))
    _write_csv(out / "rates.csv",
               ["k_factor_db", "tx_power_dbm", "mc_rate_bits_per_symbol",
                "analytic_rate_bits_per_symbol", "rel_err_pct"], rows)
    with open(out / "analytic.txt", "w") as fh:
        fh.write("closed-form OFDMA downlink rate (bits per OFDM symbol, "
                 "CP-adjusted, overhead-scaled)\n")
        for k_db, p_dbm, _, closed, _ in rows:
            fh.write(f"K = {k_db:+.1f} dB, p = {p_dbm:.1f} dBm: {closed:.6g}\n")
    payload = {
        "worst_rel_err_pct": 100.0 * worst,
        "flat_power": flat,
        "realizations": spec.realizations,
        "overhead_fraction": overhead_fraction,
    }
    return _finish(out, "ofdma-eval", config, payload, ["rates.csv", "analytic.txt"], t0)


def run_gradcheck(config: ScenarioConfig, out_dir) -> dict:
    """Finite-difference audit of both analytic gradients and the
    diagonal-extraction identity on random small instances; nonzero exit
    above the configured threshold."""
    t0 = time.perf_counter()
    out = _ensure_dir(out_dir)
    spec = config.gradcheck
    worst = {"precoder_fd": 0.0, "phase_fd": 0.0, "full_matrix_fd": 0.0,
             "diag_extraction": 0.0}
    rows = []
    for i, child in enumerate(np.random.SeedSequence(config.seed).spawn(spec.instances)):
        rng = np.random.default_rng(child)
        m = int(rng.integers(4, spec.ris_elements + 1))
        n_bs = int(rng.integers(2, spec.bs_antennas + 1))
        n_d = int(rng.integers(1, spec.streams + 1))
        n_paths = int(rng.integers(1, spec.paths + 1))
        paths = sample_paths(ChannelConfig(num_paths=n_paths, delay_spread_taps=0), rng)
        stats = channel_stats(paths, ArrayGeometry(m), ArrayGeometry(n_bs))
        grid = pattern.AngularGrid(spec.oversampling, m)
        center = rng.uniform(1.2, 1.9)
        half = rng.uniform(0.2, 0.5)
        target = pattern.TargetPattern(flat_power=2.0, sidelobe_power=0.02,
                                       center=center, half_width=half, rolloff=0.1)
        theta = random_unit_modulus(m, rng)
        w = rng.standard_normal((n_bs, n_d)) + 1j * rng.standard_normal((n_bs, n_d))
        w /= np.linalg.norm(w)
        errs = gradient_check(stats, target, pattern.WeightConfig(), grid, theta, w,
                              fd_step=spec.fd_step)
        for key in worst:
            worst[key] = max(worst[key], errs[key])
        rows.append((i, m, n_bs, n_d, n_paths, errs["precoder_fd"], errs["phase_fd"],
                     errs["full_matrix_fd"], errs["diag_extraction"]))
    _write_csv(out / "gradcheck.csv",
               ["instance", "ris_elements", "bs_antennas", "streams", "paths",
                "precoder_fd", "phase_fd", "full_matrix_fd", "diag_extraction"], rows)
    fd_worst = max(worst["precoder_fd"], worst["phase_fd"], worst["full_matrix_fd"])
    ok = fd_worst < spec.threshold and worst["diag_extraction"] < 1e-8
    lines = [f"max {k}: {v:.3e}" for k, v in worst.items()]
    lines.append(f"threshold {spec.threshold:g}: {'PASS' if ok else 'FAIL'}")
    (out / "gradcheck.txt").write_text("\n".join(lines) + "\n")
    payload = {"worst": worst, "instances": spec.instances, "pass": ok}
    return _finish(out, "gradcheck", config, payload,
                   ["gradcheck.csv", "gradcheck.txt"], t0, 0 if ok else 1)


def run_beamshift(config: ScenarioConfig, out_dir, from_deg: float | None = None,
                  to_deg: float | None = None) -> dict:
    """Synthesize a single-feed flat top, re-illuminate it from a different
    incident angle, and compare the measured -3 dB region with the
    closed-form shift prediction (one grid bin tolerance)."""
    t0 = time.perf_counter()
    out = _ensure_dir(out_dir)
    spec = config.beamshift
    phi0 = math.radians(spec.incident_from_deg if from_deg is None else from_deg)
    phi1 = math.radians(spec.incident_to_deg if to_deg is None else to_deg)
    chan_seed, synth_seed = scenario_rng_children(config, 2)
    rng = np.random.default_rng(chan_seed)
    feed_departure = rng.uniform(0.0, math.pi)
    m = spec.ris_elements
    lo, hi = (math.radians(d) for d in spec.coverage_deg)
    flat = m * math.pi / (hi - lo)
    target = pattern.TargetPattern.for_coverage(lo, hi, flat_power=flat)

    def stats_for(incident: float):
        paths = _single_path(incident, feed_departure)
        return channel_stats(paths, ArrayGeometry(m), ArrayGeometry(config.bs_antennas))

    design = synthesis.synthesize(target, stats_for(phi0), num_streams=1,
                                  oversampling=config.oversampling,
                                  weight_config=config.weight_config(),
                                  seed=synth_seed,
                                  **config.optimizer.synthesis_kwargs())
    grid = design.grid
    angles = grid.angles
    measured0 = measure_minus3db_region(angles, design.achieved_pattern)
    predicted = predict_shifted_region(CoverageRegion(*measured0), phi0, phi1)
    shifted_pattern = pattern.normalized_pattern(design.theta, design.precoder,
                                                 stats_for(phi1), grid)
    measured1 = measure_minus3db_region(angles, shifted_pattern)

    bin_rad = grid.spacing
    if predicted is None:
        ok = False
        errs = (math.nan, math.nan)
    else:
        errs = (abs(predicted.phi_min - measured1[0]), abs(predicted.phi_max - measured1[1]))
        ok = max(errs) <= bin_rad
    payload = {
        "incident_from_deg": math.degrees(phi0),
        "incident_to_deg": math.degrees(phi1),
        "design_region_deg": [math.degrees(a) for a in measured0],
        "predicted_region_deg": None if predicted is None else
            [math.degrees(predicted.phi_min), math.degrees(predicted.phi_max)],
        "measured_region_deg": [math.degrees(a) for a in measured1],
        "errors_deg": [math.degrees(e) for e in errs],
        "grid_bin_deg": math.degrees(bin_rad),
        "pass": ok,
    }
    lines = [f"{k}: {v}" for k, v in payload.items()]
    (out / "beamshift.txt").write_text("\n".join(lines) + "\n")
    return _finish(out, "beamshift", config, payload, ["beamshift.txt"], t0,
                   0 if ok else 1)


def _single_path(arrival: float, departure: float) -> PathSet:
    return PathSet(gains=[1.0 + 0.0j], arrival_angles=[arrival],
                   departure_angles=[departure], tap_indices=[0], mean_powers=[1.0])


def run_scaling_probe(config: ScenarioConfig, out_dir) -> dict:
    """Synthesize every (element count, beamwidth) cell over several seeds
    and tabulate the achieved flat-top mean power."""
    t0 = time.perf_counter()
    out = _ensure_dir(out_dir)
    spec = config.scaling
    rows = analysis.power_scaling_probe(
        spec.element_counts, [math.radians(b) for b in spec.beamwidths_deg],
        ChannelConfig(num_paths=spec.paths,
                      k_factor_db=-10.0 * math.log10(max(spec.paths - 1, 1))
                      if spec.paths > 1 else math.inf,
                      delay_spread_taps=config.cp_length),
        spec.bs_antennas, spec.streams, math.radians(spec.center_deg),
        seeds=range(config.seed, config.seed + spec.num_seeds),
        oversampling=config.oversampling,
        weight_config=config.weight_config(),
        **config.optimizer.synthesis_kwargs())
    _write_csv(out / "scaling.csv",
               ["num_elements", "beamwidth_deg", "seed", "target_flat_power",
                "achieved_flat_mean", "ripple_db"],
               ((r["num_elements"], math.degrees(r["beamwidth_rad"]), r["seed"],
                 r["target_flat_power"], r["achieved_flat_mean"], r["ripple_db"])
                for r in rows))
    cells: dict[tuple[int, float], list[float]] = {}
    for r in rows:
        cells.setdefault((r["num_elements"], r["beamwidth_rad"]), []).append(
            r["achieved_flat_mean"])
    payload = {
        "cell_means": [
            {"num_elements": m, "beamwidth_deg": math.degrees(bw),
             "mean_achieved": float(np.mean(v))}
            for (m, bw), v in sorted(cells.items())
        ],
    }
    return _finish(out, "scaling-probe", config, payload, ["scaling.csv"], t0)
