"""Command-line front end: ``typeslab <command> --scenario FILE``.

Exit codes:
  0 success
  1 unexpected internal error
  2 usage error (bad flags, missing sweep block or prefix)
  3 scenario file could not be parsed
  4 configuration or precondition error (e.g. float source for gamma/OR/Jeffreys)
  5 numerical failure (solver did not converge)
  6 ``verify`` ran and at least one check failed
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .conditioning import (
    Ball,
    OverlappingBalls,
    PrefixQuery,
    ball_concentrations,
    conditional_mass,
    default_epsilon,
    mixture_prediction,
    prefix_law_exact,
)
from .core import Pmf
from .feasible import EmptyTypeSet, InfeasibleSet, feasible_type_array
from .montecarlo import mc_conditional, worker_count
from .optimize import SolverError
from .oracle import MAX_SEQUENCES, lemma_fuzz, lemma_threshold, sequence_oracle
from .projections import ProjectionSet, project
from .scenario import Scenario, ScenarioError, load_scenario
from .weights import jeffreys_period

EXIT_OK, EXIT_INTERNAL, EXIT_USAGE, EXIT_PARSE, EXIT_CONFIG, EXIT_NUMERIC, EXIT_CHECKS = range(7)
COLUMNS = ("scenario", "command", "n", "kind", "index_j", "quantity", "value", "mode", "seconds")


class UsageError(Exception):
    pass


class ConfigError(Exception):
    pass


@dataclass
class RunRecord:
    scenario: str
    command: str
    n: int | None
    kind: str
    index_j: int | None
    quantity: str
    value: object
    mode: str
    seconds: float | None = None


def format_value(value, precision: int = 12) -> str:
    if value is None:
        return "undefined"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, Pmf):
        return ";".join(format_value(w, precision) for w in value.weights)
    if isinstance(value, (tuple, list)):
        return ";".join(format_value(v, precision) for v in value)
    if isinstance(value, str):
        return value
    x = float(value)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return f"{x:.{precision}g}"


# -- per-n work units (module level so they pickle for worker processes) -----


def _projection_rows(sc, command, kind, proj: ProjectionSet, mode, n=None):
    rows = [RunRecord(sc.name, command, n, kind, None, "k", proj.k, mode)]
    if proj.degenerate:
        rows.append(RunRecord(sc.name, command, n, kind, None, "degenerate", True, mode))
    for j, point in enumerate(proj.points):
        rows.append(RunRecord(sc.name, command, n, kind, j, "point", point, mode))
        if proj.types:
            rows.append(RunRecord(sc.name, command, n, kind, j, "counts", proj.types[j].counts, mode))
        rows.append(RunRecord(sc.name, command, n, kind, j, "objective", proj.values[j], mode))
        rows.append(RunRecord(sc.name, command, n, kind, j, "proper", proj.proper[j], mode))
    return rows


def _centers(proj: ProjectionSet):
    return proj.proper_points or proj.points


def _project_at(sc: Scenario, kind: str, n: int, mode: str):
    proj = project(kind, sc.source, sc.set, n, mode=mode)
    used = "exact" if isinstance(proj.values[0] if proj.values else 0, Fraction) else "log"
    return _projection_rows(sc, "project", kind, proj, used, n), proj


def _concentrate_at(sc, n, kind, centers, epsilon, mode, weighting, command):
    if kind == "mu":
        centers = _centers(project("mu", sc.source, sc.set, n, mode=mode))
    report = ball_concentrations(sc.source, sc.set, n, centers, epsilon, mode, weighting)
    rows = [RunRecord(sc.name, command, n, kind, j, "ball_mass", m, report.mode)
            for j, m in enumerate(report.masses)]
    rows.append(RunRecord(sc.name, command, n, kind, None, "complement", report.complement,
                          report.mode))
    rows.append(RunRecord(sc.name, command, n, kind, None, "epsilon", report.epsilon, report.mode))
    rows.append(RunRecord(sc.name, command, n, kind, None, "log_normalizer",
                          report.log_normalizer, report.mode))
    return rows


def _gibbs_at(sc, n, prefix, i_proj, mode):
    law = prefix_law_exact(sc.source, sc.set, n, prefix, mode)
    used = "exact" if isinstance(law, Fraction) else "log"
    mu_proj = project("mu", sc.source, sc.set, n, mode=mode)
    mix_i = mixture_prediction(_centers(i_proj), prefix)
    mix_mu = mixture_prediction(_centers(mu_proj), prefix)
    rec = lambda kind, q, v: RunRecord(sc.name, "gibbs", n, kind, None, q, v, used)  # noqa: E731
    return [
        rec("exact", "prefix_law", law),
        rec("I", "mixture", mix_i),
        rec("I", "gap", abs(float(law) - float(mix_i))),
        rec("mu", "mixture", mix_mu),
        rec("mu", "gap", abs(float(law) - float(mix_mu))),
    ]


def _guarded(fn, *args):
    """Run ``fn``; undefined-but-legal situations come back as a marker."""
    start = time.perf_counter()
    try:
        return fn(*args), None, time.perf_counter() - start
    except EmptyTypeSet as exc:
        return None, f"empty: {exc}", time.perf_counter() - start
    except Exception as exc:  # re-raised by the aggregator, in n order
        return None, exc, time.perf_counter() - start


def _sweep(fn, ns, args_for):
    """Yield ``(n, result, problem, seconds)`` in ascending n, in parallel when asked."""
    workers = worker_count()
    if workers > 1 and len(ns) > 1:
        with ProcessPoolExecutor(workers) as pool:
            futures = [pool.submit(_guarded, fn, *args_for(n)) for n in ns]
            for n, fut in zip(ns, futures):
                yield (n, *fut.result())
    else:
        for n in ns:
            yield (n, *_guarded(fn, *args_for(n)))


# -- output ------------------------------------------------------------------


class Emitter:
    def __init__(self, fmt: str, precision: int, timing: bool, stream=None):
        self.fmt = fmt
        self.precision = precision
        self.timing = timing
        self.stream = stream or sys.stdout
        self.rows: list[RunRecord] = []
        self.projections: list[dict] = []
        if fmt == "csv":
            self.writer = csv.writer(self.stream, lineterminator="\n")
            self.writer.writerow(COLUMNS)

    def emit(self, rows, seconds=None):
        for row in rows:
            if self.timing and seconds is not None:
                row.seconds = seconds
            self.rows.append(row)
            if self.fmt == "csv":
                self.writer.writerow(self._cells(row))
        if self.fmt == "csv":
            self.stream.flush()

    def _cells(self, row: RunRecord):
        return [
            row.scenario, row.command, "" if row.n is None else row.n, row.kind,
            "" if row.index_j is None else row.index_j, row.quantity,
            format_value(row.value, self.precision), row.mode,
            "" if row.seconds is None else f"{row.seconds:.6f}",
        ]

    def undefined(self, sc, command, n, kind, reason):
        self.emit([RunRecord(sc.name, command, n, kind, None, "undefined", reason, "")])

    def close(self, error: str | None = None):
        if self.fmt == "json":
            doc = {
                "rows": [dict(zip(COLUMNS, self._cells(r))) for r in self.rows],
                "projections": self.projections,
            }
            if error:
                doc["error"] = error
            json.dump(doc, self.stream, indent=2)
            self.stream.write("\n")
            self.stream.flush()


# -- commands ----------------------------------------------------------------


def _require_sweep(sc: Scenario):
    if sc.sweep is None or not sc.sweep.n:
        raise UsageError(f"scenario {sc.name} has no sweep block with n values")
    return sc.sweep.n


def _require_rational(sc: Scenario, what: str):
    if not sc.source.exact:
        raise ConfigError(f"{what} needs a rational source; scenario {sc.name} has float weights")


def cmd_project(sc: Scenario, kind: str, mode: str, out: Emitter):
    if kind in ("I", "J"):
        proj = project(kind, sc.source, sc.set)
        out.projections.append(proj.to_dict())
        out.emit(_projection_rows(sc, "project", kind, proj, "float"))
        return
    if kind in ("gamma", "or"):
        _require_rational(sc, f"{kind}-projection")
    ns = _require_sweep(sc)
    for n, result, problem, secs in _sweep(_project_at, ns, lambda n: (sc, kind, n, mode)):
        if problem is not None:
            _raise_or_mark(problem, out, sc, "project", n, kind)
            continue
        rows, proj = result
        out.projections.append(proj.to_dict())
        out.emit(rows, secs)


def _raise_or_mark(problem, out, sc, command, n, kind):
    if isinstance(problem, str):
        out.undefined(sc, command, n, kind, problem)
    else:
        raise problem


def cmd_concentrate(sc: Scenario, kind: str, mode: str, epsilon, out: Emitter,
                    jeffreys: bool = False):
    ns = _require_sweep(sc)
    command = "jeffreys" if jeffreys else "concentrate"
    weighting = "jeffreys" if jeffreys else "source"
    if kind not in ("I", "J", "mu"):
        raise UsageError(f"concentration centers must be I, J or mu, not {kind}")
    if jeffreys:
        _require_rational(sc, "Jeffreys weighting")
    centers = None
    if kind in ("I", "J"):
        proj = project(kind, sc.source, sc.set)
        out.projections.append(proj.to_dict())
        centers = _centers(proj)
        if epsilon is None:
            epsilon = default_epsilon(centers)
    n0 = jeffreys_period(sc.source) if jeffreys else 1
    valid = [n for n in ns if n % n0 == 0]
    results = {}
    for n, result, problem, secs in _sweep(
        _concentrate_at, valid,
        lambda n: (sc, n, kind, centers, epsilon, mode, weighting, command),
    ):
        results[n] = (result, problem, secs)
    for n in ns:
        if n not in results:
            out.undefined(sc, command, n, kind, f"n not a multiple of n0={n0}")
            continue
        result, problem, secs = results[n]
        if problem is not None:
            _raise_or_mark(problem, out, sc, command, n, kind)
            continue
        out.emit(result, secs)


def cmd_gibbs(sc: Scenario, mode: str, out: Emitter):
    ns = _require_sweep(sc)
    if not sc.sweep.prefix:
        raise UsageError(f"scenario {sc.name} has no prefix in its sweep block")
    prefix = PrefixQuery.from_labels(sc.sweep.prefix, sc.alphabet)
    if prefix.t > ns[0]:
        raise UsageError(f"prefix length {prefix.t} exceeds the smallest n={ns[0]}")
    i_proj = project("I", sc.source, sc.set)
    out.projections.append(i_proj.to_dict())
    for n, result, problem, secs in _sweep(_gibbs_at, ns, lambda n: (sc, n, prefix, i_proj, mode)):
        if problem is not None:
            _raise_or_mark(problem, out, sc, "gibbs", n, "exact")
            continue
        out.emit(result, secs)


def cmd_verify(sc: Scenario, samples: int, seed: int, out: Emitter, lemma_cases: int = 10_000):
    """Oracle comparisons; failures become rows, and the exit code reports them."""
    rows = []
    failures = 0

    def check(kind, quantity, value, ok, n=None, mode="exact"):
        nonlocal failures
        failures += not ok
        rows.append(RunRecord(sc.name, "verify", n, kind, None, quantity, value, mode))
        rows.append(RunRecord(sc.name, "verify", n, kind, None, quantity + "_pass", ok, mode))

    q, s, m = sc.source, sc.set, sc.alphabet.m
    i_proj = project("I", q, s)
    centers = _centers(i_proj)
    eps = sc.sweep.epsilon if sc.sweep and sc.sweep.epsilon is not None else default_epsilon(centers)
    prefixes = [PrefixQuery((x,)) for x in range(m)]
    if sc.sweep and sc.sweep.prefix:
        prefixes.append(PrefixQuery.from_labels(sc.sweep.prefix, sc.alphabet))

    if q.exact:
        deviation, compared, mismatches = 0.0, 0, 0
        n = 1
        while m**n <= MAX_SEQUENCES and n <= 12:
            if len(feasible_type_array(s, n)):
                exact_centers = [_rational(c) for c in centers]
                regions = [s] + [Ball(c, Fraction(eps)) for c in exact_centers]
                usable = [p for p in prefixes if p.t <= n]
                want_r, want_p = sequence_oracle(q, s, n, regions, usable)
                got_r = [conditional_mass(q, s, n, r, "exact") for r in regions]
                got_p = [prefix_law_exact(q, s, n, p, "exact") for p in usable]
                for a, b in zip(want_r + want_p, got_r + got_p):
                    deviation = max(deviation, abs(float(a - b)))
                    mismatches += a != b
                    compared += 1
            n += 1
        check("oracle", "mismatches", mismatches, mismatches == 0)
        rows.append(RunRecord(sc.name, "verify", None, "oracle", None, "max_deviation", deviation, "exact"))
        rows.append(RunRecord(sc.name, "verify", None, "oracle", None, "comparisons", compared, "exact"))

        worst = 0.0
        for n in (10, 20, 40, 60):
            if not len(feasible_type_array(s, n)):
                continue
            for region in [Ball(c, eps) for c in centers]:
                a = conditional_mass(q, s, n, region, "exact")
                b = conditional_mass(q, s, n, region, "log")
                worst = max(worst, _rel(a, b))
            for p in prefixes:
                if p.t <= n:
                    a = prefix_law_exact(q, s, n, p, "exact")
                    b = prefix_law_exact(q, s, n, p, "log")
                    worst = max(worst, _rel(a, b))
        check("log_vs_exact", "max_relative_deviation", worst, worst <= 1e-10, mode="both")

    cases = lemma_fuzz(lemma_cases, seed)
    bad = [c for c in cases if not c.holds]
    thresholds = {mm: lemma_threshold(mm) for mm in range(1, 6)}
    bad_large = [c for c in bad if c.t1.n >= thresholds[c.t1.m]]
    check("lemma", "violations", len(bad), not bad)
    check("lemma", "violations_above_threshold", len(bad_large), not bad_large)

    n_mc = next((n for n in range(min(12, sc.sweep.n[0] if sc.sweep and sc.sweep.n else 12), 0, -1)
                 if len(feasible_type_array(s, n))), None)
    if n_mc is not None:
        region = Ball(centers[0], eps)
        exact = conditional_mass(q, s, n_mc, region)
        est = mc_conditional(q, s, n_mc, region, samples, seed)
        if est.estimate is None:
            check("mc", "ball_z", math.inf, False, n=n_mc, mode="mc")
        else:
            check("mc", "ball_z", est.z_score(exact), est.z_score(exact) <= 4, n=n_mc, mode="mc")
        p = prefixes[-1]
        if p.t <= n_mc:
            exact = prefix_law_exact(q, s, n_mc, p)
            est = mc_conditional(q, s, n_mc, p, samples, seed + 1)
            z = math.inf if est.estimate is None else est.z_score(exact)
            check("mc", "prefix_z", z, z <= 4, n=n_mc, mode="mc")
    out.emit(rows)
    return failures


def _rational(p: Pmf) -> Pmf:
    if p.exact:
        return p
    return Pmf(tuple(Fraction(w).limit_denominator(10**6) for w in p.weights[:-1])
               + (1 - sum(Fraction(w).limit_denominator(10**6) for w in p.weights[:-1]),))


def _rel(a, b) -> float:
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


# -- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="typeslab", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
        ("project", "compute I, J, mu, gamma or OR projections"),
        ("concentrate", "conditional ball masses around projections over the n sweep"),
        ("gibbs", "exact prefix law versus mixture predictions over the n sweep"),
        ("jeffreys", "ball masses under the two-way (Jeffreys) weighting"),
        ("verify", "oracle comparisons, lemma fuzz and Monte Carlo cross-checks"),
    ]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=True, help="scenario file")
        p.add_argument("--kind", choices=["I", "J", "mu", "gamma", "or"],
                       default="J" if name == "jeffreys" else "I")
        p.add_argument("--epsilon", type=Fraction, default=None, help="ball radius (total variation)")
        p.add_argument("--mode", choices=["auto", "exact", "log"], default=None)
        p.add_argument("--out", choices=["csv", "json"], default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--samples", type=int, default=None)
        p.add_argument("--precision", type=int, default=None)
        p.add_argument("--timing", action="store_true", help="fill the seconds column")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
    except OSError as exc:
        print(f"typeslab: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ScenarioError as exc:
        print(f"typeslab: {args.scenario}: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if args.epsilon is not None and args.epsilon <= 0:
        print("typeslab: --epsilon must be positive", file=sys.stderr)
        return EXIT_USAGE
    mode = args.mode or sc.output.mode
    out = Emitter(args.out or sc.output.format, args.precision or sc.output.precision, args.timing)
    sweep = sc.sweep
    epsilon = args.epsilon if args.epsilon is not None else (sweep.epsilon if sweep else None)
    seed = args.seed if args.seed is not None else (sweep.seed if sweep else 0)
    samples = args.samples if args.samples is not None else (sweep.samples if sweep else 1_000_000)
    code = EXIT_OK
    error = None
    try:
        if args.command == "project":
            cmd_project(sc, args.kind, mode, out)
        elif args.command in ("concentrate", "jeffreys"):
            cmd_concentrate(sc, args.kind, mode, epsilon, out, jeffreys=args.command == "jeffreys")
        elif args.command == "gibbs":
            cmd_gibbs(sc, mode, out)
        else:
            if cmd_verify(sc, samples, seed, out):
                code = EXIT_CHECKS
    except UsageError as exc:
        code, error = EXIT_USAGE, str(exc)
    except (ConfigError, OverlappingBalls, InfeasibleSet, EmptyTypeSet, ValueError) as exc:
        code, error = EXIT_CONFIG, str(exc)
    except SolverError as exc:
        code, error = EXIT_NUMERIC, str(exc)
    except BrokenPipeError:
        # downstream reader went away (e.g. ``| head``); stay quiet
        sys.stderr.close()
        return code
    out.close(error)
    if error:
        print(f"typeslab {args.command}: {sc.name}: {error}", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
