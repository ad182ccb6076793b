"""Command line front end: ``subshift-ifs <command> --config NAME|PATH``.

Data goes to files under ``--out`` (default: the current directory) or,
with ``--stdout``, to standard output; ``lang`` prints its listing unless
``--out`` is given.  Diagnostics always go to stderr.

Exit codes: 0 ok, 2 config error, 3 empty shift, 4 unconverged attractor,
5 cycle error, 6 probe error, 7 separation error, 8 factor error.
"""

from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    SCHEMA_VERSION,
    ProbeError,
    SeparationCapError,
    periodic_density_probe,
    return_time_probe,
    separation_report,
    verify_factoring,
)
from .attractor import ConvergenceConfigError, compute_attractor, self_similarity_scan, terminal_pass_start
from .config import ConfigError, FactorPairConfig, SystemConfig, load_config, parse_number
from .io import cloud_csv, json_bytes, manifest_dict, ppm_bytes, svg_text, write_atomic
from .maps import BoxInvarianceError, NotAContractionError
from .orbit import EventuallyPeriodicPoint, InadmissibleSequenceError, cycle_of
from .symbolic import BlockMapDomainError, EmptyShiftError, enumerate_language, format_word, parse_word

log = logging.getLogger("subshift_ifs")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_EMPTY = 3
EXIT_UNCONVERGED = 4
EXIT_CYCLE = 5
EXIT_PROBE = 6
EXIT_SEPARATION = 7
EXIT_FACTOR = 8

FORMATS = ("csv", "json", "ppm", "svg")


class CommandError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


class Run:
    """Collects the outputs of one command, then writes or prints them."""

    def __init__(self, args, config):
        self.args = args
        self.config = config
        self.files: list[tuple[str, bytes]] = []

    def add(self, name: str, data: bytes):
        self.files.append((name, data))

    def wanted(self, default: list[str]) -> list[str]:
        if self.args.format:
            return list(self.args.format)
        out = self.config.output.get("formats") if self.config is not None else None
        return list(out or default)


# ---------------------------------------------------------------------------
# helpers


def _system(run: Run) -> SystemConfig:
    cfg = run.config
    if not isinstance(cfg, SystemConfig):
        raise CommandError(EXIT_CONFIG, "this command needs a system config, not a factor pair")
    return cfg


def _numeric(run: Run, cfg) -> dict:
    num = dict(cfg.numeric)
    a = run.args
    if a.epsilon is not None:
        num["epsilon"] = a.epsilon
    if a.tol is not None:
        num["tol"] = a.tol
    if a.n_max is not None:
        num["n_max"] = a.n_max
    if a.horizon is not None:
        num["horizon"] = a.horizon
    return num


def _attractor(run: Run, cfg: SystemConfig):
    num = _numeric(run, cfg)
    log.info("computing attractor of %s (eps=%g, tol=%g)", cfg.name, num["epsilon"], num["tol"])
    rep = compute_attractor(
        cfg.system,
        float(num["epsilon"]),
        float(num["tol"]),
        int(num["n_max"]),
        threads=run.args.threads,
        seed_cap=int(num["seed_cap"]),
    )
    log.info("%s after %d levels, %d points", rep.status, rep.n_final, len(rep.S))
    return rep, num


def _parse_range(text: str | None, default: tuple[int, int]) -> list[int]:
    if text is None:
        lo, hi = default
    elif ":" in text:
        a, b = text.split(":", 1)
        lo, hi = int(a), int(b)
    else:
        lo = hi = int(text)
    if lo < 1 or hi < lo:
        raise CommandError(EXIT_CONFIG, f"bad range {text!r}")
    return list(range(lo, hi + 1))


def _ball(spec, where: str, d: int):
    """``[center, radius]`` from a config record or a ``"x[,y..];r"`` flag."""
    if isinstance(spec, str):
        try:
            c, r = spec.split(";")
            center = [parse_number(v) for v in c.split(",")]
            radius = parse_number(r)
        except ValueError:
            raise CommandError(EXIT_CONFIG, f"{where}: expected 'x[,y,...];radius', got {spec!r}") from None
    else:
        try:
            center, radius = spec
            center = [parse_number(v) for v in np.atleast_1d(center).tolist()]
            radius = parse_number(radius)
        except (TypeError, ValueError):
            raise CommandError(EXIT_CONFIG, f"{where}: expected [center, radius]") from None
    if len(center) != d or not radius > 0:
        raise CommandError(EXIT_CONFIG, f"{where}: center must have {d} coordinates and radius > 0")
    return np.array(center), radius


# ---------------------------------------------------------------------------
# commands


def cmd_lang(run: Run) -> int:
    cfg = _system(run)
    n = 1 if run.args.n is None else int(run.args.n)
    if n < 0:
        raise CommandError(EXIT_CONFIG, "--n must be >= 0")
    words = enumerate_language(cfg.system.shift, n)
    lines = [f"# n={n} count={len(words)}"] + [format_word(w) for w in words]
    run.add(f"lang_n{n}.csv", ("\n".join(lines) + "\n").encode("ascii"))
    return EXIT_OK


def cmd_attractor(run: Run) -> int:
    cfg = _system(run)
    rep, num = _attractor(run, cfg)
    report = {"schema_version": SCHEMA_VERSION, "config": cfg.name, **rep.to_dict()}
    formats = run.wanted(["csv", "json"])
    if "csv" in formats:
        run.add("attractor.csv", cloud_csv(rep.S.points, [
            f"config={cfg.name} status={rep.status} n_final={rep.n_final}",
            f"epsilon={rep.epsilon!r} points={len(rep.S)}",
        ]))
    if "json" in formats:
        run.add("attractor.json", json_bytes(report))
    for fmt_name in ("ppm", "svg"):
        if fmt_name not in formats:
            continue
        if rep.S.dim != 2:
            log.warning("%s output needs a 2D attractor; skipped", fmt_name)
            continue
        if fmt_name == "ppm":
            run.add("attractor.ppm", ppm_bytes(rep.S, cfg.system.box, int(cfg.output.get("ppm_size", 1024))))
        else:
            run.add("attractor.svg", svg_text(rep.S, cfg.system.box))
    return EXIT_OK if rep.converged else EXIT_UNCONVERGED


def cmd_selfsim(run: Run) -> int:
    cfg = _system(run)
    rep, num = _attractor(run, cfg)
    orders = 6 if run.args.n is None else int(run.args.n)
    if orders < 1:
        raise CommandError(EXIT_CONFIG, "--n must be >= 1")
    rows = self_similarity_scan(cfg.system, rep.S, orders, float(num["tol"]), run.args.threads)
    for r in rows:
        log.info("n=%-3d defect=%.6g  lower=%.6g upper=%.6g  %s",
                 r.n, r.defect, r.lower_excess, r.upper_excess, "pass" if r.passed else "FAIL")
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.name,
        "attractor_status": rep.status,
        "n_final": rep.n_final,
        "epsilon": rep.epsilon,
        "tol": rep.tol,
        "rows": [r.to_dict() for r in rows],
        "terminal_pass_start": terminal_pass_start(rows),
    }
    run.add("selfsim.json", json_bytes(doc))
    return EXIT_OK if rep.converged else EXIT_UNCONVERGED


def cmd_cycle(run: Run) -> int:
    cfg = _system(run)
    if run.args.u is None:
        raise CommandError(EXIT_CONFIG, "cycle needs --u WORD")
    try:
        p = EventuallyPeriodicPoint(parse_word(run.args.v or ""), parse_word(run.args.u))
        cyc = cycle_of(cfg.system, p, merge_tol=cfg.eps)
    except (InadmissibleSequenceError, ValueError) as exc:
        raise CommandError(EXIT_CYCLE, str(exc)) from None
    formats = run.wanted(["csv", "json"])
    if "csv" in formats:
        run.add("cycle.csv", cloud_csv(cyc.points, [
            f"word={format_word(p.transient)}({format_word(p.period)})^inf residual={cyc.residual!r}",
        ]))
    if "json" in formats:
        doc = {"schema_version": SCHEMA_VERSION, "config": cfg.name, "sequence": str(p), **cyc.to_dict()}
        run.add("cycle.json", json_bytes(doc))
    return EXIT_OK


def cmd_probe(run: Run) -> int:
    cfg = _system(run)
    rep, num = _attractor(run, cfg)
    probe = cfg.raw.get("probe", {})
    d = cfg.system.dim
    U = _ball(run.args.U if run.args.U is not None else probe.get("U"), "U", d)
    V = _ball(run.args.V if run.args.V is not None else probe.get("V"), "V", d)
    try:
        res = return_time_probe(cfg.system, rep.S, U, V, int(num["horizon"]),
                                horizon_cap=int(num["horizon_cap"]))
        dens = periodic_density_probe(cfg.system, rep.S, int(num["max_period"]))
    except ProbeError as exc:
        raise CommandError(EXIT_PROBE, str(exc)) from None
    log.info("N(U,V) up to %d: %s -> %s", res.horizon, res.observed, res.classification)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg.name,
        "attractor_status": rep.status,
        "U": {"center": U[0].tolist(), "radius": U[1]},
        "V": {"center": V[0].tolist(), "radius": V[1]},
        "return_times": res.to_dict(),
        "periodic_density": dens.to_dict(),
    }
    run.add("probe.json", json_bytes(doc))
    return EXIT_OK


def cmd_separation(run: Run) -> int:
    cfg = _system(run)
    ns = _parse_range(run.args.n, (1, 4))
    num = _numeric(run, cfg)
    try:
        rep = separation_report(cfg.system, ns, int(num["image_cap"]))
    except SeparationCapError as exc:
        raise CommandError(EXIT_SEPARATION, str(exc)) from None
    log.info("ratio sum %.6g (%s)", rep.ratio_sum, "pass" if rep.ratio_sum_pass else "fail")
    for n, r in sorted(rep.per_n.items()):
        log.info("n=%d separation %s gap=%.6g", n, r.status, r.min_gap)
    run.add("separation.json", json_bytes({"config": cfg.name, **rep.to_dict()}))
    return EXIT_OK


def cmd_factor(run: Run) -> int:
    cfg = run.config
    if not isinstance(cfg, FactorPairConfig):
        raise CommandError(EXIT_CONFIG, "factor needs a factor_pair config")
    num = dict(cfg.numeric)
    if run.args.epsilon is not None:
        num["epsilon"] = run.args.epsilon
    if run.args.tol is not None:
        num["tol"] = run.args.tol
    if run.args.n_max is not None:
        num["n_max"] = run.args.n_max
    try:
        rep = verify_factoring(
            cfg.source.system,
            cfg.target.system,
            cfg.code,
            cfg.phi2,
            seed=run.args.seed,
            eps=float(num["epsilon"]),
            tol=float(num["tol"]),
            n_max=int(num["n_max"]),
        )
    except (BlockMapDomainError, ValueError) as exc:
        raise CommandError(EXIT_FACTOR, str(exc)) from None
    log.info("max residual %.3g, attractor distance %s (budget %s)",
             rep.max_residual, rep.attractor_distance, rep.budget)
    run.add("factor.json", json_bytes({"config": cfg.name, **rep.to_dict()}))
    return EXIT_OK


COMMANDS = {
    "lang": (cmd_lang, "list the admissible words of length --n"),
    "attractor": (cmd_attractor, "compute the attractor cloud and its report"),
    "selfsim": (cmd_selfsim, "self-similarity defects for orders 1..--n"),
    "cycle": (cmd_cycle, "limit cycle of the sequence v u^inf (--v, --u)"),
    "probe": (cmd_probe, "return-time and periodic-point probes"),
    "separation": (cmd_separation, "ratio-sum and image separation checks for --n a:b"),
    "factor": (cmd_factor, "check a factor pair config"),
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="subshift-ifs", description=__doc__.split("\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True, metavar="COMMAND")
    for name, (_, help_text) in COMMANDS.items():
        s = sub.add_parser(name, help=help_text)
        s.add_argument("--config", required=True, help="config path or bundled config name")
        s.add_argument("--out", type=Path, help="output directory (default: current directory)")
        s.add_argument("--stdout", action="store_true", help="write the primary output to stdout")
        s.add_argument("--format", action="append", choices=FORMATS, help="output format (repeatable)")
        s.add_argument("--n", help="word length, scan order or separation range a:b")
        s.add_argument("--n-max", type=int, help="maximum number of Hutchinson levels")
        s.add_argument("--epsilon", type=float, help="grid pitch")
        s.add_argument("--tol", type=float, help="convergence tolerance")
        s.add_argument("--horizon", type=int, help="return-time horizon")
        s.add_argument("--threads", type=int, default=1)
        s.add_argument("--seed", type=int, default=0, help="seed for sampled checks")
        s.add_argument("-v", "--verbose", action="store_true")
        if name == "cycle":
            s.add_argument("--v", dest="v", default="", help="transient word (default empty)")
            s.add_argument("--u", dest="u", help="period word")
        if name == "probe":
            s.add_argument("--U", help="open ball 'x[,y,...];radius'")
            s.add_argument("--V", help="open ball 'x[,y,...];radius'")
    return p


def _emit(run: Run, code: int, started: float, argv) -> None:
    args = run.args
    # lang is a listing command: it prints unless an output directory is named
    to_stdout = args.stdout or (args.command == "lang" and args.out is None)
    out_dir = args.out if args.out is not None or to_stdout else Path(".")
    if out_dir is not None:
        for name, data in run.files:
            write_atomic(out_dir / name, data)
    if to_stdout and run.files:
        name, data = run.files[0]
        if args.format:
            pick = [f for f in run.files if f[0].endswith("." + args.format[0])]
            if pick:
                name, data = pick[0]
        sys.stdout.buffer.write(data)
        sys.stdout.flush()
    digest = run.config.digest() if run.config is not None else ""
    man = manifest_dict(digest, __version__, ["subshift-ifs", *argv], time.perf_counter() - started,
                        run.files, code)
    if out_dir is not None:
        write_atomic(out_dir / "manifest.json", json_bytes(man))
    else:
        log.info("manifest: config_hash=%s files=%s", digest[:16], [n for n, _ in run.files])


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr, force=True)
    started = time.perf_counter()
    run = Run(args, None)
    try:
        run.config = load_config(args.config)
        code = COMMANDS[args.command][0](run)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ConfigError, BoxInvarianceError, NotAContractionError, ConvergenceConfigError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyShiftError as exc:
        print(f"empty shift: {exc}", file=sys.stderr)
        return EXIT_EMPTY
    if code == EXIT_UNCONVERGED:
        print("warning: attractor did not converge within n_max", file=sys.stderr)
    _emit(run, code, started, argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
