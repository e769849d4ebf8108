"""Command-line front end.

Four subcommands cover the workflow: ``analyze`` certifies a single model,
``iterate`` dumps orbits as CSV or SVG, ``cycles`` searches periodic systems,
and ``sweep`` classifies a two-parameter grid and draws the stability
boundaries.  Models come from a config file (INI sections or JSON), from
flags, or both, with flags winning.  Exit codes: 0 certified, 2 pseudo pairs
found, 3 inconclusive, 1 usage or configuration error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .config import ConfigError, RunConfig, load_config, parse_region
from .dynamics import (
    DynamicsConfig,
    Verdict,
    certify_global_attractor,
    iterate_orbit,
    squeeze_trajectory,
)
from .embedding import Domain, MapSpec, verify_pattern
from .expr import AmbiguousMonotonicityError, ParseError, compile_text, infer_pattern
from .kernels import BACKEND
from .models import (
    RationalModel,
    RickerModel,
    rational_analyze,
    rational_certify,
    rational_simple_facts,
    ricker_certify,
    ricker_local_boundary,
    ricker_thresholds,
)
from .order import pattern_from_text, pattern_to_text
from .periodic import PeriodicSystem, certify_periodic_attractor, find_cycles
from .program import EvaluationError
from .svgplot import Series, line_chart, write_svg

_EXPR_DEFAULT_REGION = (0.0, 100.0)


def _fmt(v: float) -> str:
    """CSV float format: 17 significant digits, '.' decimal separator."""
    return format(float(v), ".17g")


def _write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _write_json(path: str, obj) -> None:
    _write_text(path, json.dumps(obj, indent=2) + "\n")


# ---------------------------------------------------------------------------
# Model construction


@dataclass
class BuiltModel:
    """A run-ready model: one spec per phase plus report metadata."""

    specs: list[MapSpec]
    kind: str                     # "ricker" | "rational" | "expr"
    model: object | None
    pattern_source: str           # "builtin" | "declared" | "sampled"
    meta: dict = field(default_factory=dict)

    @property
    def periodic(self) -> bool:
        return len(self.specs) > 1


def _build_ricker(params: dict[str, float]) -> BuiltModel:
    known = {"r", "h", "k", "delay"}
    unknown = sorted(set(params) - known)
    if unknown:
        raise ConfigError(f"[model] unknown ricker parameter(s): {', '.join(unknown)}")
    if "r" not in params:
        raise ConfigError("[model] ricker needs r=")
    delay = params.get("delay", params.get("k", 1.0))
    if delay != int(delay):
        raise ConfigError("[model] ricker delay must be an integer")
    try:
        model = RickerModel(r=params["r"], h=params.get("h", 0.0), delay=int(delay))
        spec = model.map_spec()
    except ValueError as exc:
        raise ConfigError(f"[model] ricker: {exc}") from None
    meta = {"name": "ricker",
            "params": {"r": model.r, "h": model.h, "delay": model.delay}}
    return BuiltModel([spec], "ricker", model, "builtin", meta)


def _build_rational(params: dict[str, float]) -> BuiltModel:
    coeffs: dict[str, dict[int, float]] = {"a": {}, "b": {}}
    for key, value in params.items():
        side, idx = key[:1], key[1:]
        if side not in coeffs or not idx.isdigit():
            raise ConfigError(f"[model] unknown rational parameter {key!r} "
                              "(use a1..aK, b1..bK)")
        if int(idx) == 0:
            raise ConfigError("[model] a0 and b0 are fixed at 1")
        coeffs[side][int(idx)] = value
    k = max(coeffs["a"] | coeffs["b"], default=0)
    if k == 0:
        raise ConfigError("[model] rational needs at least one of a1..aK, b1..bK")
    a = (1.0,) + tuple(coeffs["a"].get(j, 0.0) for j in range(1, k + 1))
    b = (1.0,) + tuple(coeffs["b"].get(j, 0.0) for j in range(1, k + 1))
    try:
        model = RationalModel(a=a, b=b)
        spec = model.map_spec()
    except ValueError as exc:
        raise ConfigError(f"[model] rational: {exc}") from None
    meta = {"name": "rational", "params": {"a": list(a), "b": list(b)}}
    return BuiltModel([spec], "rational", model, "builtin", meta)


def _build_expr(config: RunConfig, seed: int) -> BuiltModel:
    arity = config.arity
    programs = []
    for i, text in enumerate(config.exprs):
        try:
            programs.append(compile_text(text, arity))
        except ParseError as exc:
            raise ConfigError(f"[model] expr.{i}: {exc}") from None
    region = config.region or _EXPR_DEFAULT_REGION
    pattern_text = (config.pattern or "infer").strip()
    if pattern_text.lower() == "infer":
        # probe phase 0; the shared-pattern requirement is checked below
        probe = MapSpec(arity, (1,) * arity, Domain(*region), program=programs[0])
        try:
            report = infer_pattern(probe, arity, region, seed=seed)
        except AmbiguousMonotonicityError as exc:
            raise ConfigError(f"[model] pattern inference: {exc}") from None
        pattern = report.pattern
        source = "sampled"
    else:
        try:
            pattern = pattern_from_text(pattern_text)
        except ValueError as exc:
            raise ConfigError(f"[model] pattern: {exc}") from None
        if len(pattern) != arity:
            raise ConfigError(f"[model] pattern length {len(pattern)} != arity {arity}")
        source = "declared"
    specs = [MapSpec(arity, pattern, Domain.orthant(), program=p,
                     name=f"expr{i}" if len(programs) > 1 else "expr")
             for i, p in enumerate(programs)]
    meta = {"exprs": list(config.exprs), "arity": arity,
            "pattern": pattern_to_text(pattern)}
    return BuiltModel(specs, "expr", None, source, meta)


def build_model(config: RunConfig, seed: int) -> BuiltModel:
    """Resolve the configured model source into executable map specs."""
    if config.exprs:
        return _build_expr(config, seed)
    if config.model_name == "ricker":
        return _build_ricker(dict(config.params))
    return _build_rational(dict(config.params))


def default_scan_range(built: BuiltModel) -> tuple[float, float]:
    """Scan interval used when the config does not pin one."""
    if built.kind == "ricker":
        return (0.0, max(10.0, 4.0 * built.model.equilibrium()))
    if built.kind == "rational":
        analysis = rational_analyze(built.model)
        return (0.0, 2.0 * max(3.0 * analysis.equilibrium,
                               2.0 * (analysis.beta or 0.0), 1.0))
    return _EXPR_DEFAULT_REGION


def check_patterns(built: BuiltModel, region: tuple[float, float],
                   seed: int) -> tuple[list[dict], list[str]]:
    """Run the sampled monotonicity check on every phase."""
    reports = []
    problems = []
    for i, spec in enumerate(built.specs):
        rep = verify_pattern(spec, region, seed=seed)
        reports.append({"phase": i, "checked": rep.checked,
                        "violations": len(rep.violations),
                        "skipped": rep.skipped})
        if not rep.ok:
            v = rep.violations[0]
            problems.append(
                f"phase {i}: {len(rep.violations)} pattern violation(s) in "
                f"{rep.checked} ordered pairs, e.g. F{v.lower} = {v.f_lower} "
                f"vs F{v.upper} = {v.f_upper}")
    return reports, problems


# ---------------------------------------------------------------------------
# Report serialization


def _pair_dicts(verdict: Verdict) -> list[dict]:
    return [{"x": p.x, "y": p.y, "genuine": p.genuine,
             "residual_norm": p.residual_norm} for p in verdict.pairs]


def verdict_to_dict(verdict: Verdict) -> dict:
    att = verdict.attractor
    return {"kind": verdict.kind.value,
            "stage": verdict.stage,
            "reason": verdict.reason,
            "samples_run": verdict.samples_run,
            "attractor": None if att is None else list(att),
            "exit_code": verdict.exit_code}


def _cycle_dicts(records) -> list[dict]:
    out = []
    for rec in records:
        out.append({
            "q": rec.q,
            "genuine": rec.genuine,
            "residual": rec.residual,
            "scalar_values": list(rec.scalar_values()),
            "points": [{"first": list(pt.first), "second": list(pt.second)}
                       for pt in rec.points],
        })
    return out


def _budget_dict(config: RunConfig, dyn: DynamicsConfig, seed: int) -> dict:
    return {"tol": dyn.tol, "match_tol": dyn.match_tol,
            "samples": dyn.samples, "burn_in": dyn.burn_in,
            "squeeze_max_iter": config.max_iter, "starts": config.starts,
            "seed": seed, "grid": config.solver.grid,
            "root_tol": config.solver.root_tol,
            "newton_max_iter": config.solver.newton_max_iter}


def _model_analysis(built: BuiltModel) -> dict:
    """Closed-form facts for the report, by model kind."""
    if built.kind == "ricker":
        model = built.model
        r0, r1, rinf = ricker_thresholds(model.h)
        return {"equilibrium": model.equilibrium(),
                "thresholds": {"r0": r0, "r1": r1, "r_inf": rinf},
                "below_onset": model.r < rinf}
    if built.kind == "rational":
        an = rational_analyze(built.model)
        facts = rational_simple_facts(an)
        return {"pattern": pattern_to_text(an.pattern),
                "equilibrium": an.equilibrium,
                "A0": an.A0, "A1": an.A1, "B0": an.B0, "B1": an.B1,
                "A_hat": an.A_hat, "B_tilde": an.B_tilde, "delta": an.delta,
                "beta": an.beta, "B_star": an.B_star, "case": an.case,
                "unique": an.unique, "degenerate": an.degenerate,
                "pseudo_pair": None if an.pseudo_pair is None else list(an.pseudo_pair),
                "facts": {"checked": facts.checked,
                          "all_pass": facts.all_pass,
                          "skipped_reason": facts.skipped_reason,
                          "items": [list(item) for item in facts.items]}}
    return {}


def _base_report(command: str, built: BuiltModel, region, checks,
                 config: RunConfig, dyn: DynamicsConfig, seed: int) -> dict:
    pattern = pattern_to_text(built.specs[0].pattern)
    return {"tool": {"name": "monoembed", "backend": BACKEND},
            "command": command,
            "model": built.meta,
            "pattern": {"text": pattern, "source": built.pattern_source,
                        "checks": checks},
            "region": list(region),
            "budgets": _budget_dict(config, dyn, seed),
            "analysis": _model_analysis(built)}


# ---------------------------------------------------------------------------
# Commands


def _resolve_seed(config: RunConfig) -> int:
    if config.seed is not None:
        return config.seed
    env = os.environ.get("MONOEMBED_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"MONOEMBED_SEED: expected an integer, got {env!r}") from None
    return 0


def _dynamics(config: RunConfig, seed: int) -> DynamicsConfig:
    return DynamicsConfig(tol=config.tol, squeeze_max_iter=config.max_iter,
                          match_tol=config.match_tol, burn_in=config.burn_in,
                          samples=config.samples, seed=seed,
                          solver=config.solver)


def _print_verdict(verdict: Verdict) -> None:
    print(f"fixed pairs: {len(verdict.pairs) - len(verdict.pseudo_pairs)} genuine, "
          f"{len(verdict.pseudo_pairs)} pseudo")
    for p in verdict.pseudo_pairs:
        print(f"  pseudo pair: ({_fmt(p.x)}, {_fmt(p.y)})")
    line = f"verdict: {verdict.kind.value}"
    if verdict.reason:
        line += f" — {verdict.reason}"
    print(line)
    if verdict.attractor is not None:
        print(f"attractor: ({', '.join(_fmt(v) for v in verdict.attractor)})")
    print(f"exit: {verdict.exit_code}")


def cmd_analyze(config: RunConfig, args) -> int:
    seed = _resolve_seed(config)
    built = build_model(config, seed)
    region = config.region or default_scan_range(built)
    checks, problems = check_patterns(built, region, seed)
    if problems:
        for msg in problems:
            print(f"pattern check failed: {msg}", file=sys.stderr)
        return 1
    dyn = _dynamics(config, seed)
    t0 = time.perf_counter()
    report = _base_report("analyze", built, region, checks, config, dyn, seed)
    if built.periodic:
        system = PeriodicSystem(tuple(built.specs))
        records = find_cycles(system, region, config.starts, seed, config.solver)
        verdict = certify_periodic_attractor(system, region, dyn,
                                             starts=config.starts)
        report["cycles"] = _cycle_dicts(records)
        for rec in records:
            label = "genuine" if rec.genuine else "pseudo"
            vals = ", ".join(_fmt(v) for v in rec.scalar_values())
            print(f"cycle q={rec.q} {label}: ({vals})")
    else:
        region4 = (region[0], region[1], region[0], region[1])
        if built.kind == "ricker":
            verdict = ricker_certify(built.model, region4, dyn)
        elif built.kind == "rational":
            verdict = rational_certify(built.model, region4, dyn)
        else:
            verdict = certify_global_attractor(built.specs[0], region4, dyn)
    runtime = time.perf_counter() - t0

    print(f"model: {json.dumps(built.meta)}")
    print(f"pattern: {report['pattern']['text']} ({built.pattern_source}); "
          + "; ".join(f"phase {c['phase']}: {c['checked']} pairs checked, "
                      f"{c['violations']} violations" for c in checks))
    for key, value in report["analysis"].items():
        if key != "pattern" and not isinstance(value, dict):
            print(f"{key}: {value}")
    _print_verdict(verdict)
    print(f"runtime: {runtime:.2f}s", file=sys.stderr)

    report["fixed_pairs"] = _pair_dicts(verdict)
    report["verdict"] = verdict_to_dict(verdict)
    if config.out:
        _write_json(config.out, report)
        print(f"report written to {config.out}", file=sys.stderr)
    return verdict.exit_code


def _parse_x0(text: str, arity: int) -> tuple[float, ...]:
    try:
        parts = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"--x0: expected comma-separated numbers, got {text!r}") from None
    if len(parts) == 1 and arity > 1:
        parts = parts * arity
    if len(parts) != arity:
        raise ConfigError(f"--x0: expected {arity} values, got {len(parts)}")
    return parts


def _iterate_csv(header: list[str], rows: list[list[float]], out: str | None) -> None:
    lines = [",".join(header)]
    for i, row in enumerate(rows, start=1):
        lines.append(",".join([str(i)] + [_fmt(v) for v in row]))
    text = "\n".join(lines) + "\n"
    if out:
        _write_text(out, text)
    else:
        sys.stdout.write(text)


def cmd_iterate(config: RunConfig, args) -> int:
    seed = _resolve_seed(config)
    built = build_model(config, seed)
    spec = built.specs[0]
    x0 = _parse_x0(args.x0, spec.arity)
    steps = args.steps
    if steps < 1:
        raise ConfigError("--steps: must be >= 1")
    if args.embedded and built.periodic:
        raise ConfigError("--embedded envelopes support single-phase models only")

    fmt = config.fmt or "csv"
    if fmt == "json":
        raise ConfigError("iterate emits csv or svg, not json")

    failure: str | None = None
    if args.embedded:
        from .solver import find_trapping_box
        # same policy as the certifier: orbit burn-in until a box exists
        state, burn_rows, box = x0, [], find_trapping_box(spec, x0)
        while box is None and len(burn_rows) < min(config.burn_in, steps):
            state = spec.step(state)
            burn_rows.append(state[0])
            box = find_trapping_box(spec, state)
        if box is None:
            print(f"no trapping box within {len(burn_rows)} burn-in steps; "
                  "cannot emit envelopes", file=sys.stderr)
            return 3
        nan_env = [float("nan")] * (2 * spec.arity)
        rows = [[v] + nan_env for v in burn_rows]
        vals, env = squeeze_trajectory(spec, box, state, steps - len(burn_rows))
        rows += [[v] + list(e) for v, e in zip(vals, env)]
        header = ["n", "x"] + [f"e{j + 1}" for j in range(2 * spec.arity)]
        if burn_rows:
            print(f"envelopes start at row {len(burn_rows) + 1} "
                  "(orbit burn-in before a trapping box existed)",
                  file=sys.stderr)
    elif built.periodic:
        system = PeriodicSystem(tuple(built.specs))
        state = x0
        values = []
        for n in range(steps):
            try:
                state = system.step_scalar(state, n)
            except EvaluationError as exc:
                failure = f"evaluation failed at step {n + 1}: {exc}"
                break
            values.append(state[0])
        rows = [[v] for v in values]
        header = ["n", "x"]
    else:
        try:
            vals = iterate_orbit(spec, x0, steps)
        except EvaluationError as exc:
            good = max(exc.step, 0)
            failure = f"evaluation failed at step {good + 1}: {exc}"
            vals = iterate_orbit(spec, x0, good) if good else []
        rows = [[v] for v in vals]
        header = ["n", "x"]

    if fmt == "svg":
        n_axis = list(range(1, len(rows) + 1))
        series = [Series(n_axis, [r[0] for r in rows], label="orbit")]
        for j in range(1, len(header) - 1):
            series.append(Series(n_axis, [r[j] for r in rows],
                                 label=header[j + 1], width=0.9, dash="5,3"))
        svg = line_chart(series, title=f"orbit of {spec.name}",
                         xlabel="n", ylabel="x")
        if config.out:
            write_svg(config.out, svg)
        else:
            sys.stdout.write(svg)
    else:
        _iterate_csv(header, rows, config.out)
    if failure:
        print(f"{failure}; wrote {len(rows)} rows", file=sys.stderr)
        return 3
    return 0


def cmd_cycles(config: RunConfig, args) -> int:
    seed = _resolve_seed(config)
    built = build_model(config, seed)
    if not built.periodic:
        return cmd_analyze(config, args)
    region = config.region or default_scan_range(built)
    checks, problems = check_patterns(built, region, seed)
    if problems:
        for msg in problems:
            print(f"pattern check failed: {msg}", file=sys.stderr)
        return 1
    dyn = _dynamics(config, seed)
    t0 = time.perf_counter()
    system = PeriodicSystem(tuple(built.specs))
    records = find_cycles(system, region, config.starts, seed, config.solver)
    verdict = certify_periodic_attractor(system, region, dyn, starts=config.starts)
    runtime = time.perf_counter() - t0

    print(f"period: {system.period}, cycles found: {len(records)}")
    for rec in records:
        label = "Genuine" if rec.genuine else "Pseudo"
        vals = ", ".join(_fmt(v) for v in rec.scalar_values())
        print(f"  {label} {rec.q}-cycle: ({vals})  residual {rec.residual:.2e}")
    _print_verdict(verdict)
    print(f"runtime: {runtime:.2f}s", file=sys.stderr)

    report = _base_report("cycles", built, region, checks, config, dyn, seed)
    report["cycles"] = _cycle_dicts(records)
    report["verdict"] = verdict_to_dict(verdict)
    if config.out:
        _write_json(config.out, report)
        print(f"report written to {config.out}", file=sys.stderr)
    return verdict.exit_code


# ---------------------------------------------------------------------------
# Sweep


def _sweep_cell(payload) -> tuple[int, int]:
    """Run the configured analysis on one grid cell; never raises
    (failures become code -1)."""
    (idx, p1_name, p1, p2_name, p2, delay, region4, dyn) = payload
    try:
        params = {p1_name: p1, p2_name: p2}
        model = RickerModel(r=params["r"], h=params["h"], delay=delay)
        verdict = ricker_certify(model, region4, dyn)
        return idx, verdict.exit_code
    except Exception:
        return idx, -1


def _cell_centers(rng: tuple[float, float], cells: int) -> list[float]:
    lo, hi = rng
    step = (hi - lo) / cells
    return [lo + (i + 0.5) * step for i in range(cells)]


def _boundary_points(centers1, centers2, codes) -> list[tuple[float, float]]:
    """Midpoints between vertically adjacent cells with differing verdicts."""
    pts = []
    n2 = len(centers2)
    for i, c1 in enumerate(centers1):
        col = codes[i * n2:(i + 1) * n2]
        for j in range(n2 - 1):
            if col[j] != col[j + 1] and col[j] >= 0 and col[j + 1] >= 0:
                pts.append((c1, 0.5 * (centers2[j] + centers2[j + 1])))
    return pts


def cmd_sweep(config: RunConfig, args) -> int:
    if config.exprs or config.model_name != "ricker":
        raise ConfigError("sweep supports the built-in ricker model only")
    sweep = config.sweep
    if {sweep.p1, sweep.p2} != {"r", "h"}:
        raise ConfigError("[sweep] p1/p2 must be the ricker parameters h and r")
    delay = int(config.params.get("delay", config.params.get("k", sweep.delay)))
    if delay < 1:
        raise ConfigError("[sweep] delay: must be >= 1 for the embedding scan")

    seed = _resolve_seed(config)
    cell_solver = replace(config.solver, grid=sweep.grid,
                          newton_max_iter=sweep.newton_iter)
    cell_dyn = DynamicsConfig(tol=config.tol, squeeze_max_iter=config.max_iter,
                              match_tol=config.match_tol, burn_in=config.burn_in,
                              samples=sweep.samples, seed=seed,
                              solver=cell_solver)
    region4 = None
    if config.region is not None:
        lo, hi = config.region
        region4 = (lo, hi, lo, hi)

    centers1 = _cell_centers(sweep.p1_range, sweep.p1_cells)
    centers2 = _cell_centers(sweep.p2_range, sweep.p2_cells)
    payloads = []
    idx = 0
    for p1 in centers1:
        for p2 in centers2:
            payloads.append((idx, sweep.p1, p1, sweep.p2, p2, delay,
                             region4, cell_dyn))
            idx += 1

    t0 = time.perf_counter()
    jobs = config.jobs if config.jobs is not None else (os.cpu_count() or 1)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_sweep_cell, payloads, chunksize=16))
    else:
        results = [_sweep_cell(p) for p in payloads]
    codes = [code for _, code in sorted(results)]

    base = config.out or "sweep"
    cells_path = f"{base}_cells.csv"
    boundary_path = f"{base}_boundary.csv"
    svg_path = f"{base}.svg"

    lines = ["p1,p2,verdict"]
    i = 0
    for p1 in centers1:
        for p2 in centers2:
            lines.append(f"{_fmt(p1)},{_fmt(p2)},{codes[i]}")
            i += 1
    _write_text(cells_path, "\n".join(lines) + "\n")

    boundary = _boundary_points(centers1, centers2, codes)
    lines = ["p1,p2"]
    lines += [f"{_fmt(a)},{_fmt(b)}" for a, b in boundary]
    _write_text(boundary_path, "\n".join(lines) + "\n")

    # chart: computed transition points plus reference curves over h
    series = []
    if boundary:
        series.append(Series([p[0] for p in boundary], [p[1] for p in boundary],
                             label="computed boundary", color="#111111", width=2.2))
    h_axis = (centers1 if sweep.p1 == "h" else centers2)
    if sweep.p1 == "h":
        hs = np.linspace(sweep.p1_range[0], sweep.p1_range[1], 200)
        closed = [ricker_thresholds(h) for h in hs]
        for pos, label in ((0, "r0 (no delay)"), (1, "r1 (delay 1)"),
                           (2, "r_inf (onset)")):
            series.append(Series(list(hs), [c[pos] for c in closed],
                                 label=label, width=1.4))
        for kk in sweep.curves:
            ys = [ricker_local_boundary(h, kk) for h in h_axis]
            series.append(Series(
                list(h_axis),
                [float("nan") if y is None else y for y in ys],
                label=f"local boundary k={kk}", width=1.2, dash="6,3"))
    svg = line_chart(series, title=f"ricker stability sweep (delay {delay})",
                     xlabel=sweep.p1, ylabel=sweep.p2,
                     x_range=sweep.p1_range, y_range=sweep.p2_range)
    write_svg(svg_path, svg)

    runtime = time.perf_counter() - t0
    failures = sum(1 for c in codes if c < 0)
    print(f"sweep: {len(codes)} cells, {failures} failures, "
          f"{len(boundary)} boundary points")
    print(f"wrote {cells_path}, {boundary_path}, {svg_path}")
    print(f"runtime: {runtime:.1f}s", file=sys.stderr)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing


class _Parser(argparse.ArgumentParser):
    """argparse that exits 1 on usage errors (2 is reserved for pseudo pairs)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("-c", "--config", metavar="PATH",
                     help="config file (INI sections or JSON)")
    sub.add_argument("--model", metavar="NAME",
                     help="built-in model: ricker or rational")
    sub.add_argument("--param", metavar="K=V", action="append", default=[],
                     help="built-in model parameter (repeatable)")
    sub.add_argument("--expr", metavar="TEXT", action="append", default=[],
                     help="map expression; repeat for periodic phases")
    sub.add_argument("--arity", type=int, help="number of arguments of F")
    sub.add_argument("--pattern", metavar="SIGNS",
                     help="monotonicity pattern like '++-', or 'infer'")
    sub.add_argument("--region", metavar="LO:HI", help="scan interval")
    sub.add_argument("--tol", type=float, help="squeeze convergence tolerance")
    sub.add_argument("--max-iter", type=int, help="squeeze iteration budget")
    sub.add_argument("--samples", type=int, help="certification sample count")
    sub.add_argument("--starts", type=int, help="cycle-search multistart count")
    sub.add_argument("--seed", type=int, help="RNG seed (or env MONOEMBED_SEED)")
    sub.add_argument("--out", metavar="PATH", help="output file (or prefix for sweep)")
    sub.add_argument("--format", choices=("csv", "svg", "json"), dest="fmt")
    sub.add_argument("--jobs", type=int, help="parallel workers for sweeps")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="monoembed",
                     description="Certify global stability of mixed-monotone "
                                 "delay difference equations.")
    subs = parser.add_subparsers(dest="command", metavar="COMMAND")
    specs = [
        ("analyze", cmd_analyze, "certify one model and report fixed pairs"),
        ("iterate", cmd_iterate, "dump an orbit as CSV (or SVG chart)"),
        ("cycles", cmd_cycles, "enumerate cycles of a periodic system"),
        ("sweep", cmd_sweep, "classify a two-parameter grid and plot boundaries"),
    ]
    for name, func, help_text in specs:
        sub = subs.add_parser(name, help=help_text, description=help_text)
        _add_common(sub)
        if name == "iterate":
            sub.add_argument("--x0", required=True, metavar="V1,V2,...",
                             help="initial window, newest value first")
            sub.add_argument("-n", "--steps", type=int, default=100,
                             help="number of iterates (default 100)")
            sub.add_argument("--embedded", action="store_true",
                             help="add the 2k envelope coordinates per step")
        sub.set_defaults(func=func)
    return parser


def make_config(args) -> RunConfig:
    """File config (if any) with flag overrides folded in."""
    config = RunConfig()
    if args.config:
        config = load_config(args.config, config)
    if args.model:
        config.model_name = args.model.strip().lower()
        config.exprs = ()
    if args.expr:
        config.exprs = tuple(args.expr)
        config.model_name = None
        config.params = {}
    for item in args.param:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--param: expected K=V, got {item!r}")
        try:
            config.params[key.strip().lower()] = float(value)
        except ValueError:
            raise ConfigError(f"--param {key}: expected a number, got {value!r}") from None
    if args.arity is not None:
        config.arity = args.arity
    if args.pattern is not None:
        config.pattern = args.pattern
    if args.region is not None:
        config.region = parse_region(args.region)
    for attr, key in (("tol", "tol"), ("max_iter", "max_iter"),
                      ("samples", "samples"), ("starts", "starts"),
                      ("seed", "seed"), ("out", "out"), ("fmt", "fmt"),
                      ("jobs", "jobs")):
        value = getattr(args, attr)
        if value is not None:
            setattr(config, key, value)
    config.validate()
    return config


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(sys.stderr)
        return 1
    try:
        config = make_config(args)
        return args.func(config, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EvaluationError as exc:
        print(f"evaluation error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
