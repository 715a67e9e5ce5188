"""``dpovqe`` command line.

Exit status: 0 on success, 1 for usage or configuration errors, 2 when a
valid request fails at run time. Messages go to stderr; artifacts to files.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .baselines import SAE_TOTAL_TIME, SaeConfig, exhaustive_search, sae_run, simulated_annealing, write_trace_csv
from .circuits import ANSATZ_FAMILIES, CouplingMap, build_ansatz, logical_depth, route_and_depth, tailored_grid
from .config import METHODS, ExperimentConfig, load_config
from .errors import ConfigError, DpoError
from .market import (
    MarketModel,
    RebalanceGrid,
    build_market_model,
    generate_synthetic_prices,
    load_prices_csv,
    write_prices_csv,
)
from .optimizers import DeConfig
from .problem import build_qubo, qubo_to_ising
from .vqe import (
    VqeRunConfig,
    build_distribution,
    cheapest,
    default_sampler_shots,
    make_report,
    random_baseline,
    run_vqe,
    write_histogram_csv,
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _say(msg: str) -> None:
    print(msg, file=sys.stderr)


def market_model(cfg: ExperimentConfig) -> MarketModel:
    p = cfg.problem
    if cfg.data.source == "zero":
        return MarketModel.zeros(p.n_t, p.n_a)
    grid = RebalanceGrid.regular(p.n_t, cfg.data.delta_t_days)
    if cfg.data.source == "csv":
        series = load_prices_csv(cfg.data.path)
    else:
        series = generate_synthetic_prices(
            cfg.data.assets or p.n_a, cfg.data.days or grid.rows_needed, cfg.data.seed
        )
    if series.n_assets < p.n_a:
        raise ConfigError(f"data has {series.n_assets} assets, problem needs {p.n_a}")
    return build_market_model(series.select_assets(p.n_a), grid)


def _cmd_gen_data(args) -> None:
    if args.assets < 1 or args.days < 2:
        raise UsageError("gen-data needs --assets >= 1 and --days >= 2")
    write_prices_csv(generate_synthetic_prices(args.assets, args.days, args.seed), args.out)
    _say(f"wrote {args.days} days x {args.assets} assets to {args.out}")


def _cmd_build(args) -> None:
    cfg = load_config(args.config)
    model = market_model(cfg)
    qubo = build_qubo(cfg.problem, model)
    h = qubo_to_ising(qubo)
    doc = {"problem": cfg.problem.to_dict(), "qubo": qubo.to_json(), "ising": h.to_json(), "offset": h.identity_coeff}
    Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    _say(f"wrote {h.n_qubits}-qubit problem to {args.out} (offset {h.identity_coeff:.6g})")


def _solve(cfg: ExperimentConfig, method: str, threads: int):
    run = cfg.run
    model = market_model(cfg)
    h = qubo_to_ising(build_qubo(cfg.problem, model))
    dpo = cfg.problem
    trace = None
    if method == "vqe":
        vqe_cfg = VqeRunConfig(
            ansatz=run.ansatz,
            reps=run.reps,
            ranges=run.ranges,
            reps_per_block=run.reps_per_block,
            optimizer=run.optimizer,
            de=DeConfig(pop_size=run.pop_size, generations=run.generations, elitist_pool=run.elitist_pool),
            cg_max_iter=run.cg_max_iter,
            estimator_mode=run.estimator,
            estimator_shots=run.estimator_shots,
            sampler_shots=run.shots,
            seed=run.seed,
            workers=threads,
            qubit_cap=run.qubit_cap,
        )
        report = run_vqe(h, vqe_cfg, dpo, model)
    elif method == "exhaustive":
        res = exhaustive_search(h)
        dist = build_distribution({res.argmin: 1.0}, h)
        report = make_report("exhaustive", h, dist, res.argmin, dpo=dpo, model=model)
    elif method == "sa":
        res = simulated_annealing(h, run.sa_sweeps, restarts=run.sa_restarts, seed=run.seed, workers=threads)
        dist = build_distribution({res.argmin: 1.0}, h)
        report = make_report(
            "sa", h, dist, res.argmin, dpo=dpo, model=model,
            details={"sweeps": run.sa_sweeps, "restarts": run.sa_restarts, "seed": run.seed, "beta_range": list(res.betas)},
        )
    elif method == "sae":
        total = run.sae_time or SAE_TOTAL_TIME.get(cfg.preset or "", 7.0)
        sae_cfg = SaeConfig(total, run.sae_steps, seed=run.seed, sampler_shots=run.shots, qubit_cap=run.qubit_cap)
        trace = sae_run(h, sae_cfg)
        dist = trace.final_distribution
        report = make_report(
            "sae", h, dist, cheapest(trace.samples.counts, h), dpo=dpo, model=model,
            expectation=trace.expectations[-1],
            convergence=[{"tau": t, "expectation": e} for t, e in zip(trace.times, trace.expectations)],
            details={"total_time": total, "trotter_steps": sae_cfg.steps, "seed": run.seed},
        )
    else:
        shots = run.shots or default_sampler_shots(h.n_qubits)
        report = random_baseline(h, shots, run.seed, dpo=dpo, model=model)
    return report, trace


def _cmd_solve(args) -> None:
    cfg = load_config(args.config)
    method = args.method or cfg.run.method
    if method != cfg.run.method:
        cfg = replace(cfg, run=replace(cfg.run, method=method))
    out = Path(args.out) if args.out else cfg.output_dir / "report.json"
    out.parent.mkdir(parents=True, exist_ok=True)
    report, trace = _solve(cfg, method, args.threads)
    report.save(out)
    if args.hist:
        write_histogram_csv(report.distribution, args.hist)
    if args.trace and trace is not None:
        write_trace_csv(trace, args.trace)
    _say(f"{method}: min_cost {report.min_cost:.6f} at {report.best_bitstring}; "
         f"{report.pct_below_offset:.2f}% below offset {report.offset:.6f}; wrote {out}")


def _cmd_report(args) -> None:
    try:
        doc = json.loads(Path(args.inp).read_text(encoding="utf-8"))
        bins = doc["distribution"]["bins"]
    except FileNotFoundError as exc:
        raise UsageError(f"no such report: {args.inp}") from exc
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise UsageError(f"{args.inp} is not a report file ({exc})") from exc
    _say(f"method {doc.get('method')}  n_qubits {doc.get('n_qubits')}")
    _say(f"min_cost {doc.get('min_cost')}  best {doc.get('best_bitstring')}  sharpe {doc.get('sharpe')}")
    _say(f"offset {doc.get('offset')}  below offset {doc.get('pct_below_offset')}%")
    if args.hist:
        with open(args.hist, "w", encoding="utf-8", newline="") as fh:
            fh.write("cost_bin,count\n")
            for b, c in bins:
                fh.write(f"{float(b):.2f},{c}\n")
        _say(f"wrote {len(bins)} bins to {args.hist}")


def _cmd_depth(args) -> None:
    cfg = load_config(args.config)
    circuit = build_ansatz(args.ansatz, cfg.problem, reps=cfg.run.reps, ranges=cfg.run.ranges,
                           reps_per_block=cfg.run.reps_per_block)
    _say(f"ansatz = {args.ansatz}")
    _say(f"n_qubits = {circuit.n_qubits}")
    _say(f"n_params = {circuit.n_params}")
    _say(f"cnots = {circuit.count('CNOT')}")
    _say(f"logical_depth = {logical_depth(circuit)}")
    if args.coupling:
        cmap, layout = CouplingMap.from_edge_list(args.coupling), None
    elif args.grid:
        cmap, layout = tailored_grid(cfg.problem)
    else:
        return
    routed = route_and_depth(circuit, cmap, layout)
    _say(f"swaps = {routed.swap_count}")
    _say(f"routed_depth = {routed.depth}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="dpovqe", description="Variational solver for dynamic portfolio optimisation.")
    p.add_argument("--threads", type=int, default=1, help="worker cap for parallel sections")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("gen-data", help="write a synthetic price CSV")
    g.add_argument("--assets", type=int, required=True)
    g.add_argument("--days", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_gen_data)

    b = sub.add_parser("build", help="write the QUBO and Ising problem as JSON")
    b.add_argument("--config", required=True)
    b.add_argument("--out", required=True)
    b.set_defaults(func=_cmd_build)

    s = sub.add_parser("solve", help="solve the configured problem")
    s.add_argument("--config", required=True)
    s.add_argument("--method", choices=METHODS)
    s.add_argument("--out")
    s.add_argument("--hist", help="also write the cost histogram CSV")
    s.add_argument("--trace", help="SAE only: write the expectation trace CSV")
    s.set_defaults(func=_cmd_solve)

    r = sub.add_parser("report", help="summarise a report and export its histogram")
    r.add_argument("--in", dest="inp", required=True)
    r.add_argument("--hist")
    r.set_defaults(func=_cmd_report)

    d = sub.add_parser("depth", help="parameter count and circuit depth of an ansatz")
    d.add_argument("--config", required=True)
    d.add_argument("--ansatz", required=True, choices=ANSATZ_FAMILIES)
    m = d.add_mutually_exclusive_group()
    m.add_argument("--coupling", help="edge-list coupling map to route onto")
    m.add_argument("--grid", action="store_true", help="route onto the time x (asset, bit) grid")
    d.set_defaults(func=_cmd_depth)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required (gen-data, build, solve, report, depth)")
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        args.func(args)
    except (UsageError, ConfigError) as exc:
        _say(f"error: {exc}")
        return 1
    except (DpoError, OSError, ValueError) as exc:
        _say(f"error: {exc}")
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
