"""Command-line front end.

Subcommands write CSV (header row always present, floats with 17 significant
digits) to ``--out`` or stdout. Exit codes: 0 success, 1 invariant failure,
2 usage or parse error, 3 resource cap.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import io
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from importlib import metadata
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import batteries
from . import channel as chmod
from . import exponent as ex
from . import simkit
from .errors import InvariantViolation, ResourceError

EXIT_OK, EXIT_INVARIANT, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3
SWEEP_VARS = ("R", "p", "gamma", "q")
VACUOUS = "vacuous at this n"


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (float, np.floating)):
        return format(float(x) + 0.0, ".17g")
    return str(x)


# sweeps -------------------------------------------------------------------------


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    step: float
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.variable not in SWEEP_VARS:
            raise ValueError(f"sweep variable must be one of {SWEEP_VARS}, got {self.variable!r}")
        if not (self.step > 0 and self.start <= self.stop):
            raise ValueError("sweep needs step > 0 and start <= stop")

    @classmethod
    def parse(cls, text: str) -> "SweepSpec":
        parts = text.split(":")
        if len(parts) != 4:
            raise ValueError(f"sweep {text!r} is not VAR:START:STOP:STEP")
        try:
            start, stop, step = (float(s) for s in parts[1:])
        except ValueError:
            raise ValueError(f"sweep {text!r} has a non-numeric bound") from None
        return cls(parts[0], start, stop, step)

    def points(self) -> list[float]:
        # integer indexing keeps the grid free of accumulated drift
        count = int(math.floor((self.stop - self.start) / self.step + 1e-9)) + 1
        return [min(self.start + i * self.step, self.stop) for i in range(count)]


def _grid(sweeps: Sequence[SweepSpec]) -> list[dict[str, float]]:
    rows: list[dict[str, float]] = [{}]
    for s in sweeps:
        rows = [{**r, s.variable: v} for r in rows for v in s.points()]
    return rows


def _available_cpus() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:
        return os.cpu_count() or 1


def _run_pool(fn: Callable, tasks: list, jobs: int) -> list:
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * jobs))))


# channel resolution -------------------------------------------------------------


@dataclass(frozen=True)
class ChannelSource:
    """A channel given as a JSON file or as a built-in family with one parameter."""

    path: str | None = None
    builtin: str | None = None
    param: float | None = None

    @property
    def param_name(self) -> str | None:
        return chmod.BUILTINS[self.builtin][1] if self.builtin else None

    def build(self, point: dict[str, float] | None = None) -> chmod.QuantumChannel:
        if self.path is not None:
            return chmod.QuantumChannel.load(self.path)
        value = self.param
        if point and self.param_name in point:
            value = point[self.param_name]
        return chmod.builtin_channel(self.builtin, value)


def resolve_channel(spec: str, param: float | None) -> ChannelSource:
    if Path(spec).is_file():
        chmod.QuantumChannel.load(spec)  # validate early
        return ChannelSource(path=spec)
    if spec in chmod.BUILTINS:
        return ChannelSource(builtin=spec, param=param)
    raise ValueError(f"--channel {spec!r} is neither a file nor a built-in {sorted(chmod.BUILTINS)}")


def _channel_sweeps(src: ChannelSource, sweeps: Sequence[SweepSpec]) -> list[SweepSpec]:
    out = []
    for s in sweeps:
        if s.variable == "R":
            continue
        if s.variable != src.param_name:
            raise ValueError(f"sweep variable {s.variable!r} does not parameterize channel {src.builtin or src.path}")
        out.append(s)
    if src.builtin and src.param_name and src.param is None and not out:
        raise ValueError(f"channel {src.builtin} needs --param or a sweep over {src.param_name}")
    return out


# writers ------------------------------------------------------------------------


def _write_csv(header: Sequence[str], rows: Sequence[Sequence], out) -> None:
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])


def _file_digest(paths: Sequence[str | None]) -> str | None:
    h = hashlib.sha256()
    seen = False
    for p in paths:
        if p and Path(p).is_file():
            h.update(Path(p).read_bytes())
            seen = True
    return h.hexdigest() if seen else None


def _version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "0+unknown"


@dataclass
class RunManifest:
    command: str
    arguments: list[str]
    seed: int
    tool_version: str
    timestamp: str
    input_digest: str | None

    def save(self, path: str) -> None:
        Path(path).write_text(json.dumps(asdict(self), indent=2, sort_keys=True) + "\n")


# exponent -----------------------------------------------------------------------


def _exponent_task(task):
    src, point, n, k = task
    P = chmod.error_distribution(src.build(point))
    res = ex.exponent_E_tilted(point["R"], P)
    row = [res.value, ex.entropy(res.minimizer), res.active_branch]
    if n is not None:
        tb = ex.finite_length_bound(n, k, point["R"], P, exponent=res.value)
        row += [tb, VACUOUS if tb < 0 else ""]
    return row


def cmd_exponent(args, out) -> int:
    src = resolve_channel(args.channel, args.param)
    sweeps = [SweepSpec.parse(s) for s in args.sweep]
    ch_sweeps = _channel_sweeps(src, sweeps)
    r_sweeps = [s for s in sweeps if s.variable == "R"] or [SweepSpec("R", 0.0, 1.0, 0.01)]
    if len(r_sweeps) > 1 or len(ch_sweeps) > 1:
        raise ValueError("at most one sweep per variable")
    grid = _grid(ch_sweeps + r_sweeps)
    k = args.k
    if args.n is not None and k is None:
        k = 0
    tasks = [(src, pt, args.n, k) for pt in grid]
    results = _run_pool(_exponent_task, tasks, args.jobs)
    cols = [s.variable for s in ch_sweeps] + ["R"]
    header = cols + ["E", "H_of_Qstar", "active_branch"]
    if args.n is not None:
        header += ["finite_length_bound", "note"]
    _write_csv(header, [[pt[c] for c in cols] + r for pt, r in zip(grid, results)], out)
    return EXIT_OK


# bounds -------------------------------------------------------------------------


def _bounds_task(task):
    src, point, seed = task
    ch = src.build(point)
    P = chmod.error_distribution(ch)
    cap = ex.capacity_lower_bound(P)
    closed = None
    if src.builtin == "amplitude_damping":
        gamma = point.get("gamma", src.param)
        closed = ex.amplitude_damping_bound(gamma)
        if abs(closed - cap) > 1e-10:
            raise InvariantViolation(f"closed form {closed!r} differs from 1-H(P_A) {cap!r} at gamma={gamma}")
    if ch.d != 2:
        return [cap, None, None, closed] + [None] * 8
    rep = ex.bound_comparison(ch, seed=seed)
    eta = rep.maximizing_entangled_state
    flat = [c for z in eta for c in (z.real, z.imag)]
    return [cap, rep.rival_lb, rep.p_prime, closed] + flat


def cmd_bounds(args, out) -> int:
    src = resolve_channel(args.channel, args.param)
    sweeps = [SweepSpec.parse(s) for s in args.sweep]
    if any(s.variable == "R" for s in sweeps):
        raise ValueError("bounds do not depend on R")
    ch_sweeps = _channel_sweeps(src, sweeps)
    if len(ch_sweeps) > 1:
        raise ValueError("at most one sweep per variable")
    grid = _grid(ch_sweeps)
    tasks = [(src, pt, args.seed ^ i) for i, pt in enumerate(grid)]
    results = _run_pool(_bounds_task, tasks, args.jobs)
    cols = [s.variable for s in ch_sweeps]
    eta_cols = [f"eta{i}_{part}" for i in range(4) for part in ("re", "im")]
    header = cols + ["capacity_lb", "rival_lb", "p_prime", "closed_form"] + eta_cols
    _write_csv(header, [[pt[c] for c in cols] + r for pt, r in zip(grid, results)], out)
    return EXIT_OK


# simulate -----------------------------------------------------------------------


def cmd_simulate(args, out) -> int:
    src = resolve_channel(args.channel, args.param)
    ch = src.build()
    L, leaders = simkit.parse_stabilizer_text(Path(args.stabilizer).read_text(), ch.d)
    rep = simkit.ensemble_check(
        L, ch, leaders=leaders, enlarge=not args.no_enlarge, seed=args.seed, starts=args.starts
    )
    codes = simkit.build_codes(L, rep.leaders)
    header = ["code", "syndrome", "K", "F_min", "F_avg", "F_e", "uncorrectable_prob", "target", "verdict"]
    rows = []
    for code, r in zip(codes, rep.per_code):
        syn = "".join(str(s) for s in code.exponents)
        rows.append(
            [r.index, syn, code.K, r.min_fidelity, r.min_avg_fidelity_upper, r.entanglement_fidelity,
             rep.rhs, 1.0 - rep.rhs, rep.verdict]
        )
    _write_csv(header, rows, out)
    return EXIT_OK


# verify -------------------------------------------------------------------------


def cmd_verify(args, out) -> int:
    results = batteries.run_suite(args.suite, seed=args.seed)
    out.write("name,trials,worst_slack,status\n")
    for r in results:
        out.write(r.line() + "\n")
    return EXIT_OK if all(r.passed for r in results) else EXIT_INVARIANT


# search -------------------------------------------------------------------------


def cmd_search(args, out) -> int:
    """Random search over (error basis, preprocessing unitary) for 1 - H(P_UA)."""
    src = resolve_channel(args.channel, args.param)
    ch = src.build()
    rng = np.random.default_rng(args.seed)
    d = ch.d
    base = ex.capacity_lower_bound(chmod.error_distribution(ch))
    best = base
    for _ in range(args.trials):
        kets = chmod.random_unitary(d, rng)
        basis = chmod.error_basis(kets, np.exp(2j * np.pi / d))
        u = chmod.random_unitary(d, rng)
        val = ex.capacity_lower_bound(chmod.error_distribution(chmod.compose_unitary(u, ch), basis))
        best = max(best, val)
    _write_csv(["trials", "standard_basis_value", "best_found"], [[args.trials, base, best]], out)
    return EXIT_OK


# helpers ------------------------------------------------------------------------


def cmd_make_channel(args, out) -> int:
    ch = chmod.builtin_channel(args.name, args.param)
    out.write(ch.to_json() + "\n")
    return EXIT_OK


GNUPLOT = {
    "exponent-surface": """set datafile separator ','
set key autotitle columnhead
set xlabel 'R'
set ylabel 'p'
set zlabel 'E(R,p)'
set dgrid3d
splot '{data}' using 2:1:3 with lines title 'E(R,p)'
""",
    "bound-comparison": """set datafile separator ','
set key autotitle columnhead
set xlabel 'gamma'
set ylabel 'rate'
plot '{data}' using 1:2 with lines lt 1 title 'f = 1-H(P_A)', \\
     '{data}' using 1:3 with lines dt 2 title 'g = 1-H_1(p'')'
""",
}


def cmd_gnuplot(args, out) -> int:
    out.write(GNUPLOT[args.figure].format(data=args.data))
    return EXIT_OK


# entry point --------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=_available_cpus())
    common.add_argument("--out", default=None, help="output file (default stdout)")
    common.add_argument("--format", choices=["csv"], default="csv")
    common.add_argument("--manifest", default=None, help="write a run manifest JSON here")

    chan = argparse.ArgumentParser(add_help=False)
    chan.add_argument("--channel", required=True, help="channel JSON file or built-in name")
    chan.add_argument("--param", type=float, default=None, help="parameter of a built-in channel")

    sweep = argparse.ArgumentParser(add_help=False)
    sweep.add_argument("--sweep", action="append", default=[], metavar="VAR:START:STOP:STEP")

    p = _Parser(prog="qcodebound", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("exponent", parents=[common, chan, sweep], help="E(R,P) over a grid")
    s.add_argument("--n", type=int, default=None, help="block length for the finite-n fidelity bound")
    s.add_argument("--k", type=int, default=None, help="logical dimension exponent (default 0)")
    s.set_defaults(func=cmd_exponent)

    s = sub.add_parser("bounds", parents=[common, chan, sweep], help="capacity lower bounds")
    s.set_defaults(func=cmd_bounds)

    s = sub.add_parser("simulate", parents=[common, chan], help="simulate the syndrome code ensemble")
    s.add_argument("--stabilizer", required=True)
    s.add_argument("--starts", type=int, default=32)
    s.add_argument("--no-enlarge", action="store_true", help="use the bare leaders as the correctable set")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("verify", parents=[common], help="run invariant batteries")
    s.add_argument("--suite", choices=list(batteries.SUITES) + ["all"], default="all")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("search", parents=[common, chan], help="random search over bases and unitaries")
    s.add_argument("--trials", type=int, default=1000)
    s.set_defaults(func=cmd_search)

    s = sub.add_parser("make-channel", parents=[common], help="write a built-in channel as JSON")
    s.add_argument("name", choices=sorted(chmod.BUILTINS))
    s.add_argument("--param", type=float, default=None)
    s.set_defaults(func=cmd_make_channel)

    s = sub.add_parser("gnuplot", parents=[common], help="emit a gnuplot script for a sweep CSV")
    s.add_argument("--figure", choices=sorted(GNUPLOT), required=True)
    s.add_argument("--data", required=True)
    s.set_defaults(func=cmd_gnuplot)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    buf = io.StringIO()
    try:
        code = args.func(args, buf)
    except InvariantViolation as exc:
        print(f"invariant failure: {exc}", file=sys.stderr)
        return EXIT_INVARIANT
    except ResourceError as exc:
        print(f"resource cap: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    # verify still reports its summary on failure
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    if args.manifest:
        inputs = [getattr(args, "channel", None), getattr(args, "stabilizer", None)]
        RunManifest(
            args.command,
            argv,
            args.seed,
            _version(),
            datetime.now(timezone.utc).isoformat(timespec="seconds"),
            _file_digest(inputs),
        ).save(args.manifest)
    return code


if __name__ == "__main__":
    sys.exit(main())
