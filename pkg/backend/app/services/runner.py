import json
import logging
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Any, Dict, List, Tuple

import numpy as np
import pandas as pd

from app.core.exceptions import SpinBathError
from app.models.bath import BathParams
from app.models.channel import DensityMatrix
from app.models.nonmarkov import PairName, StatePair
from app.models.run import CommandType, OutputFormat, RunConfig, RunResult, SampleFlag, SweepRow
from app.services.generator import rate_trace
from app.services.nonmarkov import (
    blp_trace, bloch_grid_pairs, default_pairs, positive_increase, rhp_from_rates, summarize_rhp,
)
from app.services.spin_bath import coefficient_trace, time_grid
from app.services.thermo import thermo_trace, witness_summary
from app.services.verification import all_passed, run_verification

logger = logging.getLogger(__name__)

# Column order of every per-sample artifact
COLUMNS: Dict[CommandType, List[str]] = {
    CommandType.TRACE: ["t", "A", "B", "C_re", "C_im", "dA", "dB", "dC_re", "dC_im", "flags"],
    CommandType.RATES: ["t", "gamma_dis", "gamma_abs", "gamma_deph", "U", "flags"],
    CommandType.NONMARKOV: ["t", "q_dis", "q_deph", "q", "D", "p", "flags"],
    CommandType.THERMO: ["t", "S", "sigma", "x", "P", "dP_dt", "kappa", "flags"],
}


def pairs_for(name: PairName) -> List[StatePair]:
    if name == PairName.ALL:
        return default_pairs()
    if name == PairName.GRID:
        return bloch_grid_pairs()
    return [pair for pair in default_pairs() if pair.label == name.value]


def _flags(bad: np.ndarray, flag: SampleFlag) -> np.ndarray:
    return np.where(bad, flag.value, SampleFlag.OK.value)


def trace_frame(params: BathParams, times: np.ndarray) -> pd.DataFrame:
    coeffs = coefficient_trace(params, times)
    eps = params.eps_degeneracy
    singular = (np.abs(coeffs.contraction) <= eps) | (coeffs.abs_C <= eps)
    return pd.DataFrame({
        "t": coeffs.times, "A": coeffs.A, "B": coeffs.B,
        "C_re": coeffs.C.real, "C_im": coeffs.C.imag,
        "dA": coeffs.dA, "dB": coeffs.dB, "dC_re": coeffs.dC.real, "dC_im": coeffs.dC.imag,
        "flags": _flags(singular, SampleFlag.SINGULAR_MAP),
    }, columns=COLUMNS[CommandType.TRACE])


def rates_frame(params: BathParams, times: np.ndarray) -> pd.DataFrame:
    rates = rate_trace(params, times)
    return pd.DataFrame({
        "t": rates.times, "gamma_dis": rates.gamma_dis, "gamma_abs": rates.gamma_abs,
        "gamma_deph": rates.gamma_deph, "U": rates.u_rate,
        "flags": _flags(~rates.defined, SampleFlag.SINGULAR_MAP),
    }, columns=COLUMNS[CommandType.RATES])


def nonmarkov_frame(params: BathParams, times: np.ndarray, pair_name: PairName) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """q columns and the D, p columns of the pair with the largest positive increase"""
    rhp = rhp_from_rates(rate_trace(params, times))
    summary = summarize_rhp(rhp)

    traces = [(pair, blp_trace(params, pair, times)) for pair in pairs_for(pair_name)]
    values = {pair.label: positive_increase(trace.distance) for pair, trace in traces}
    best_pair, best = max(traces, key=lambda item: values[item[0].label])

    frame = pd.DataFrame({
        "t": rhp.times, "q_dis": rhp.q_dis, "q_deph": rhp.q_deph, "q": rhp.q_total,
        "D": best.distance, "p": best.p,
        "flags": _flags(~(rhp.defined & best.defined), SampleFlag.SINGULAR_MAP),
    }, columns=COLUMNS[CommandType.NONMARKOV])
    return frame, {
        "eta": summary.eta,
        "g_measure": summary.g_measure,
        "horizon": summary.horizon,
        "undefined_fraction": summary.undefined_fraction,
        "blp_lower_bound": values[best_pair.label],
        "blp_pair": best_pair.label,
        "blp_pair_values": values,
    }


def thermo_frame(params: BathParams, times: np.ndarray, rho0: DensityMatrix) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    trace = thermo_trace(params, rho0, times)
    frame = pd.DataFrame({
        "t": trace.times, "S": trace.entropy, "sigma": trace.sigma, "x": trace.bloch_x,
        "P": trace.purity, "dP_dt": trace.purity_rate, "kappa": trace.kappa,
        "flags": _flags(trace.pure, SampleFlag.PURE_STATE),
    }, columns=COLUMNS[CommandType.THERMO])
    return frame, {"pure_samples": int(trace.pure.sum())}


def sweep_cell(params: BathParams, t_max: float, dt: float, rho0: DensityMatrix, pair_name: PairName) -> SweepRow:
    """Summary measures of one (alpha, N) cell; top level so process pools can pickle it"""
    times = time_grid(t_max, dt)
    rates = rate_trace(params, times)
    rhp = summarize_rhp(rhp_from_rates(rates))
    coeffs = coefficient_trace(params, times)
    blp = max(
        positive_increase(np.sqrt(p.a ** 2 * coeffs.contraction ** 2 + abs(p.b) ** 2 * coeffs.abs_C ** 2))
        for p in pairs_for(pair_name)
    )
    witness = witness_summary(params, rho0, t_max, dt)
    min_gamma = float(np.nanmin(rates.gamma_dis)) if rates.defined.any() else float("nan")
    return SweepRow(
        N=params.N, alpha=params.alpha, eta=rhp.eta, g_measure=rhp.g_measure,
        blp_lower_bound=blp, phi=witness.phi, min_gamma_dis=min_gamma,
        rhp_undefined_fraction=rhp.undefined_fraction,
        witness_skipped_fraction=witness.skipped_fraction,
    )


def sweep_frame(config: RunConfig) -> pd.DataFrame:
    cells = config.sweep_cells()
    args = [(cell, config.t_max, config.dt, config.rho0, config.pair) for cell in cells]
    logger.info(f"Sweep over {len(cells)} cells with {config.workers} worker(s)")
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as executor:
            rows = list(executor.map(sweep_cell, *zip(*args)))
    else:
        rows = [sweep_cell(*a) for a in args]
    frame = pd.DataFrame([row.model_dump() for row in rows], columns=list(SweepRow.model_fields))
    return frame.sort_values(["N", "alpha"], kind="mergesort").reset_index(drop=True)


def build_frame(config: RunConfig) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """The artifact table and summary of a trace-style command"""
    if config.command == CommandType.SWEEP:
        return sweep_frame(config), {}
    times = time_grid(config.t_max, config.dt)
    params = config.params
    if config.command == CommandType.TRACE:
        return trace_frame(params, times), {}
    if config.command == CommandType.RATES:
        return rates_frame(params, times), {}
    if config.command == CommandType.NONMARKOV:
        return nonmarkov_frame(params, times, config.pair)
    if config.command == CommandType.THERMO:
        return thermo_frame(params, times, config.rho0)
    raise ValueError(f"{config.command.value} does not produce a table")


def frame_records(frame: pd.DataFrame) -> List[Dict[str, Any]]:
    """JSON-safe row objects; NaN and infinities become null"""
    return json.loads(frame.to_json(orient="records", double_precision=15))


def _write_atomic(path: Path, write) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    partial = path.with_name(path.name + ".part")
    try:
        write(partial)
        partial.replace(path)
    finally:
        partial.unlink(missing_ok=True)


def write_frame(frame: pd.DataFrame, path: Path, fmt: OutputFormat) -> None:
    if fmt == OutputFormat.CSV:
        _write_atomic(path, lambda p: frame.to_csv(p, index=False, encoding="utf-8", lineterminator="\n"))
    else:
        _write_atomic(path, lambda p: p.write_text(
            frame.to_json(orient="records", indent=2, double_precision=15) + "\n", encoding="utf-8"))


def write_json(payload: Dict[str, Any], path: Path) -> None:
    _write_atomic(path, lambda p: p.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"))


def summary_path(path: Path) -> Path:
    return path.with_name(f"{path.stem}.summary.json")


def run(config: RunConfig) -> RunResult:
    """Execute one command and write its artifacts.

    Returns exit code 1 for a failed verification (its report is kept);
    any exception removes every file this run already wrote.
    """
    path = config.output_path
    written: List[Path] = []
    logger.info(f"Running {config.command.value} for N={config.params.N}, alpha={config.params.alpha}")
    try:
        if config.command == CommandType.VERIFY:
            report = run_verification(config.params, config.t_max, config.dt, config.seed)
            passed = all_passed(report)
            write_json({"passed": passed, "seed": config.seed, "suites": report}, path)
            written.append(path)
            return RunResult(command=config.command, exit_code=0 if passed else 1,
                             outputs=[str(path)], summary={"passed": passed})

        frame, summary = build_frame(config)
        write_frame(frame, path, config.format)
        written.append(path)
        if summary:
            write_json(summary, summary_path(path))
            written.append(summary_path(path))
        return RunResult(command=config.command, outputs=[str(p) for p in written], summary=summary)
    except SpinBathError:
        _remove(written)
        raise
    except Exception as e:
        logger.error(f"Run {config.command.value} failed: {e}")
        _remove(written)
        raise


def _remove(paths: List[Path]) -> None:
    for p in paths:
        p.unlink(missing_ok=True)
        logger.warning(f"Removed partial output {p}")
