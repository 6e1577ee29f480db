"""Command-line front end.

    optoweak check
    optoweak trajectory [--config FILE] [--KEY VALUE ...]
    optoweak condition  [--config FILE] [--KEY VALUE ...]
    optoweak scan       [--config FILE] [--KEY VALUE ...]
    optoweak kerr       [--config FILE] [--KEY VALUE ...] --output PATH
    optoweak limits     [--config FILE] [--KEY VALUE ...]

Every config key is also a flag (``--kappa 0.05``); flags override the file.
Exit status: 0 success, 1 configuration or usage error, 2 numerical failure.
"""

import argparse
import os
import sys
import tempfile

import numpy as np

from . import analysis, hilbert, pointer_states
from .config import KEYS, __doc__ as CONFIG_DOC, parse_config
from .dynamics import (
    CouplingParams,
    aligned_distance,
    branch_block,
    branch_unitary,
    interior_levels,
    oracle_propagator,
)
from .errors import (
    ConfigError,
    ConvergenceError,
    DarkPortVanished,
    EmptyScan,
    OptoweakError,
    TruncationError,
)
from .protocol import PathState, PostSelection, condition

SCAN_HEADER = ("tau", "theta", "phi", "probability", "mean_x", "mean_p", "pop0", "pop1")

NUMERICAL_ERRORS = (TruncationError, ConvergenceError, EmptyScan, DarkPortVanished)


class UsageError(Exception):
    pass


class IoError(OptoweakError):
    pass


def fmt(value):
    """12 significant digits; negative zero is written as 0."""
    if value == 0:
        return "0"
    return format(value, ".12g")


def _render(header, rows):
    lines = [",".join(header)]
    lines.extend(",".join(v if isinstance(v, str) else fmt(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _atomic_write(text, path):
    if path is None:
        sys.stdout.write(text)
        return
    directory = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(prefix=".optoweak-", suffix=".tmp", dir=directory)
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from None


def write_csv(records, path, header=SCAN_HEADER):
    """Write records as UTF-8 CSV with LF endings, via a temp file and rename.

    ``records`` is a :class:`~optoweak.analysis.ScanRecords` or an iterable of
    rows matching ``header``. ``path=None`` writes to standard output.
    """
    rows = records.rows() if isinstance(records, analysis.ScanRecords) else records
    _atomic_write(_render(header, rows), path)


def _dim_for(cfg):
    if cfg.dim is not None:
        return cfg.dim
    return pointer_states.auto_dim(cfg.pointer, cfg.kappa)


def _summary(cfg, text):
    # keep stdout clean for CSV when no output file is given
    print(text, file=sys.stdout if cfg.output else sys.stderr)


def cmd_check(cfg):
    results = []

    def record(name, ok, detail):
        results.append(ok)
        print(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")

    for d in (8, 64, 256):
        c = hilbert.annihilate(d)
        comm = c @ hilbert.create(d) - hilbert.create(d) @ c
        err = np.abs(comm[: d - 1, : d - 1] - np.eye(d - 1)).max()
        record(f"commutator d={d}", err < 1e-12, f"max_err={err:.2e}")

    d = 40
    for alpha in (0.2, 0.3 - 0.1j):
        gen = alpha * hilbert.create(d) - np.conj(alpha) * hilbert.annihilate(d)
        err = np.abs(hilbert.expm_oracle(gen)[:, 0] - hilbert.displacement(alpha, d)[:, 0]).max()
        record(f"displacement vs expm alpha={alpha}", err < 1e-10, f"max_err={err:.2e}")

    d = 64
    worst = 0.0
    for kappa in (0.02, 0.1, 0.2):
        for tau in np.linspace(0, 4 * np.pi, 9):
            p = CouplingParams(kappa, True, tau)
            closed = branch_unitary(1, p, d)
            oracle = branch_block(oracle_propagator(p, d), 1)
            m = interior_levels(kappa, d)
            worst = max(worst, aligned_distance(closed[:, :m], oracle[:, :m]))
    record("branch unitary vs Hamiltonian oracle", worst < 1e-8, f"max_dist={worst:.2e}")

    rho = pointer_states.make_pointer(pointer_states.Thermal(0.5), 60)
    p = CouplingParams(0.1, True, 2.0)
    sel = PostSelection(np.pi / 4 - 0.1, np.pi - 0.3)
    total = condition(rho, PathState.balanced(), sel, p).probability
    total += condition(rho, PathState.balanced(), sel.complement(), p).probability
    record("dark + bright = 1", abs(total - 1) < 1e-10, f"err={abs(total - 1):.2e}")
    return 0 if all(results) else 2


def cmd_trajectory(cfg):
    p = CouplingParams(cfg.kappa, cfg.kerr)
    traj = analysis.unconditioned_trajectory(cfg.pointer, p, cfg.trajectory_taus(), dim=_dim_for(cfg))
    write_csv(traj, cfg.output, header=("tau", "mean_x"))
    return 0


def cmd_condition(cfg):
    dim = _dim_for(cfg)
    state = pointer_states.make_pointer(cfg.pointer, dim)
    sel = PostSelection(cfg.theta, cfg.phi)
    res = condition(state, PathState.balanced(), sel, CouplingParams(cfg.kappa, cfg.kerr, cfg.tau))
    pops = res.fock_populations
    row = (cfg.tau, cfg.theta, sel.phi, res.probability, res.mean_x, res.mean_p, pops[0], pops[1])
    write_csv([row], cfg.output)
    _summary(cfg, "fock_populations=" + ";".join(fmt(v) for v in pops))
    return 0


def cmd_scan(cfg):
    report = analysis.amplification_scan(
        cfg.pointer, cfg.kappa, cfg.kerr, cfg.scan_grid(), dim=_dim_for(cfg), threads=cfg.threads
    )
    write_csv(report.records, cfg.output)
    tau, theta, phi = report.argmax
    _summary(
        cfg,
        f"max_abs_x={fmt(report.max_abs_x)}  cap={report.cap!r}  "
        f"argmax=(tau={fmt(tau)}, theta={fmt(theta)}, phi={fmt(phi)})  "
        f"probability_at_max={fmt(report.probability_at_max)}",
    )
    return 0


def cmd_kerr(cfg):
    if cfg.output is None:
        raise UsageError("kerr writes two CSV files and needs --output")
    taus = cfg.trajectory_taus()
    res = analysis.kerr_contrast(cfg.pointer, cfg.kappa, taus, dim=_dim_for(cfg), threads=cfg.threads)
    stem, ext = os.path.splitext(cfg.output)
    ext = ext or ".csv"
    paths = (f"{stem}_kerr{ext}", f"{stem}_nokerr{ext}")
    texts = [_render(SCAN_HEADER, r.records.rows()) for r in res]
    for text, path in zip(texts, paths):
        _atomic_write(text, path)
    print(
        f"with_kerr max_abs_x={fmt(res.with_kerr.max_abs_x)}  "
        f"without_kerr max_abs_x={fmt(res.without_kerr.max_abs_x)}  cap={res.with_kerr.cap!r}"
    )
    return 0


def cmd_limits(cfg):
    rows = [(pointer_states.describe(spec), cap) for spec, cap in analysis.limit_table([cfg.pointer])]
    write_csv(rows, cfg.output, header=("pointer", "cap"))
    return 0


COMMANDS = {
    "check": cmd_check,
    "trajectory": cmd_trajectory,
    "condition": cmd_condition,
    "scan": cmd_scan,
    "kerr": cmd_kerr,
    "limits": cmd_limits,
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    parser = _Parser(
        prog="optoweak",
        description="Post-selected weak amplification with a single-photon optomechanical pointer.",
        epilog=CONFIG_DOC,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=COMMANDS[name].__name__[4:])
        sp.add_argument("--config", help="flat key = value configuration file")
        for key in KEYS:
            sp.add_argument(f"--{key}", dest=key, default=None, metavar="VALUE")
    return parser


def run_command(argv):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("missing command; see --help")
        text = ""
        if args.config:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise UsageError(f"cannot read config {args.config}: {exc}") from None
        cfg = parse_config(text, overrides={k: getattr(args, k) for k in KEYS})
        return COMMANDS[args.command](cfg)
    except (UsageError, ConfigError, IoError) as exc:
        print(f"optoweak: error: {exc}", file=sys.stderr)
        return 1
    except NUMERICAL_ERRORS as exc:
        print(f"optoweak: numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


def main():
    sys.exit(run_command(sys.argv[1:]))
