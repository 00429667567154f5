"""Command-line entry point: ``optomech-sim <scenario> --config FILE --out FILE``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from ..errors import ConfigParse, IOFailure, OptomechError, UnknownScenario
from .config import ScenarioConfig, load
from .pool import resolve_threads
from .results import SweepResult, read_metadata, write_result
from .scenarios import run

log = logging.getLogger("optomech_sim")

COMMANDS = {
    "param-map": "param_map",
    "blockade": "blockade_sweep",
    "rwa-check": "rwa_check",
    "phase-sweep": "phase_sweep",
    "cat-wigner": "cat_wigner",
    "custom": "custom",
}

EXIT_CONFIG, EXIT_IO, EXIT_RUN = 2, 3, 1


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", type=Path, help="output file (default: <scenario>.<format>)")
    p.add_argument("--format", choices=("csv", "json"), help="output format")
    p.add_argument("--threads", type=int,
                   help="worker processes, 0 = one per CPU (env OPTOMECH_SIM_THREADS)")
    p.add_argument("--verbose", "-v", action="store_true", help="log progress to stderr")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="optomech-sim",
        description="Photon blockade and cat-state simulations of a parametrically "
                    "amplified optomechanical cavity.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, scenario in COMMANDS.items():
        p = sub.add_parser(name, help=f"run the {scenario} scenario")
        p.add_argument("--config", type=Path, help="scenario config file")
        p.add_argument("--cavity-dim", type=int, help="cavity Fock truncation")
        p.add_argument("--mech-dim", type=int, help="mechanical Fock truncation")
        _common(p)
    p = sub.add_parser("replay", help="rerun from the config embedded in an output file")
    p.add_argument("source", type=Path, help="CSV or JSON output of an earlier run")
    _common(p)
    return parser


def _resolve(args) -> ScenarioConfig:
    if args.command == "replay":
        meta = read_metadata(args.source)
        if "config_text" not in meta:
            raise ConfigParse(f"{args.source} has no embedded configuration", key="config_text")
        return load(text=meta["config_text"], overrides={"format": args.format})
    overrides = {"cavity_dim": args.cavity_dim, "mech_dim": args.mech_dim, "format": args.format}
    return load(path=args.config, scenario=COMMANDS[args.command], overrides=overrides)


def _report(cfg: ScenarioConfig, result: SweepResult, out: Path, stream) -> None:
    print("# resolved configuration", file=stream)
    print(cfg.to_text(), file=stream)
    meta = result.metadata
    if "rwa_report" in meta:
        r = meta["rwa_report"]
        status = "ok" if r["ok"] else "WARNING: counter-rotating terms may matter"
        print(f"# rwa_report: omega_d/omega_m_tilde={r['omega_d_over_omega_m']:.4g} "
              f"omega_d/(g0 cosh r_d)={r['omega_d_over_g0_cosh']:.4g} "
              f"omega_d/(g0 sinh r_d)={r['omega_d_over_g0_sinh']:.4g} ({status})", file=stream)
    flagged = sum(1 for row in result.rows if row["error"])
    print(f"# wrote {len(result)} rows to {out} ({flagged} flagged)", file=stream)
    for name in result.extras:
        print(f"# wrote {_extra_path(out, name)}", file=stream)
    if "metrics" in meta:
        print("# metrics: " + json.dumps(meta["metrics"], sort_keys=True), file=stream)


def _extra_path(out: Path, name: str) -> Path:
    return out.with_name(f"{out.stem}_{name}{out.suffix}")


def _fail(exc: BaseException, code: int) -> int:
    payload = exc.to_dict() if isinstance(exc, OptomechError) else {
        "error": type(exc).__name__, "message": str(exc)}
    print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _resolve(args)
        fmt = cfg.run["format"]
        out = args.out or Path(f"{cfg.scenario}.{fmt}")
        configured = None if "run.threads" in cfg.defaults_used else cfg.run["threads"]
        threads = resolve_threads(args.threads, configured)
        log.info("running %s with %d worker(s)", cfg.scenario, threads)
        result = run(cfg, threads=threads)
        write_result(result, out, fmt)
        for name, extra in result.extras.items():
            write_result(extra, _extra_path(out, name), fmt)
        _report(cfg, result, out, sys.stdout)
    except (ConfigParse, UnknownScenario) as exc:
        return _fail(exc, EXIT_CONFIG)
    except IOFailure as exc:
        return _fail(exc, EXIT_IO)
    except OptomechError as exc:
        return _fail(exc, EXIT_RUN)
    except ValueError as exc:
        return _fail(exc, EXIT_CONFIG)
    return 0


if __name__ == "__main__":
    sys.exit(main())
