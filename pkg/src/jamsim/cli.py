"""Command-line entry point: ``jamsim run | compare | demo``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import shutil
import sys
import tempfile
from pathlib import Path

from . import config as cfgmod
from .experiment import (
    COMPARE_FIELDS,
    SraWindow,
    compare_rows,
    evaluate_sra,
    per_trial_sra_from_log,
    run_grid,
    run_trial,
    summarize,
    write_curves,
    write_step_log,
    write_summary,
)

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3
STEPS, SUMMARY, CURVES, MANIFEST = "steps.csv", "summary.csv", "curves.csv", "manifest.json"

log = logging.getLogger("jamsim")


def cmd_run(config_path: str, out_dir: str, seed: int | None = None, trials: int | None = None,
            parallel: int = 1, figures: bool = True) -> int:
    try:
        grid = cfgmod.build_grid(cfgmod.load(config_path), seed=seed, trials=trials)
    except cfgmod.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        staging = Path(tempfile.mkdtemp(prefix=".partial-", dir=out))
    except OSError as exc:
        print(f"cannot write to {out}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    try:
        log.info("running %d scenario/agent cells", len(grid.scenarios))
        results = run_grid(grid.scenarios, parallel)
        rows = summarize(grid.scenarios, results)
        write_step_log(staging / STEPS, grid.scenarios, results)
        write_summary(staging / SUMMARY, rows)
        curves = write_curves(staging / CURVES, grid.scenarios, results)
        with open(staging / MANIFEST, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(cfgmod.manifest(grid), fh, indent=2, sort_keys=True)
            fh.write("\n")
        if figures:
            from .report import plot_reward_curves, plot_sra_bars

            plot_reward_curves(curves, staging / "figures")
            plot_sra_bars(rows, staging / "figures")
        for item in staging.iterdir():
            dest = out / item.name
            if dest.is_dir():
                shutil.rmtree(dest)
            item.replace(dest)
    except Exception as exc:  # noqa: BLE001 - any failure maps to the runtime exit code
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    finally:
        shutil.rmtree(staging, ignore_errors=True)
    for r in rows:
        print(f"{r.scenario:18s} {r.agent:8s} tau={r.tau:g}  SRA={r.mean:.3f} (sd {r.std:.3f})")
    return EXIT_OK


def _window_of(run_dir: Path) -> SraWindow:
    doc = json.loads((run_dir / MANIFEST).read_text(encoding="utf-8"))
    win = doc["run"]["sra_window"]
    if "final_fraction" in win:
        return SraWindow(final_fraction=win["final_fraction"])
    return SraWindow(final_fraction=None, start=win.get("start"), stop=win.get("stop"))


def cmd_compare(dir_a: str, dir_b: str, out_file: str | None = None) -> int:
    """Per (scenario, agent, tau): both runs' SRA mean/std and the paired t-test."""
    try:
        sides = []
        for d in (Path(dir_a), Path(dir_b)):
            for name in (STEPS, MANIFEST):
                if not (d / name).is_file():
                    print(f"{d} has no {name}", file=sys.stderr)
                    return EXIT_CONFIG
            sides.append(per_trial_sra_from_log(d / STEPS, _window_of(d)))
        rows = compare_rows(*sides)
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(COMPARE_FIELDS)
        w.writerows(rows)
        if out_file:
            Path(out_file).write_text(buf.getvalue(), encoding="utf-8", newline="\n")
        else:
            sys.stdout.write(buf.getvalue())
    except Exception as exc:  # noqa: BLE001
        print(f"compare failed: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    bad = [r for r in rows if r[-1].startswith("error")]
    for r in bad:
        print(f"{r[0]}/{r[2]} tau={r[3]}: {r[-1]}", file=sys.stderr)
    return EXIT_OK


def cmd_demo(seed: int = 0) -> int:
    """200-step constant-sender MAAS trial with default settings."""
    grid = cfgmod.build_grid({
        "sender": {"strategy": "constant"},
        "agents": [{"kind": "maas"}],
        "run": {"horizon": 200, "n_trials": 1, "base_seed": seed, "taus": [0.5]},
    })
    scenario = grid.scenarios[0]
    record = run_trial(scenario, scenario.trial_seed(0))
    print(f"SRA={evaluate_sra(record, 0.5, scenario.sra_window):.6f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="jamsim", description="Multi-agent jamming simulator")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment grid")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.add_argument("--seed", type=int, help="override run.base_seed")
    r.add_argument("--trials", type=int, help="override run.n_trials")
    r.add_argument("--parallel", type=int, default=1, help="concurrent trials (default 1)")
    r.add_argument("--no-figures", action="store_true", help="skip the PNG figures")

    c = sub.add_parser("compare", help="paired t-test between two run directories")
    c.add_argument("dir_a")
    c.add_argument("dir_b")
    c.add_argument("--out")

    d = sub.add_parser("demo", help="short smoke-test trial")
    d.add_argument("--seed", type=int, default=0)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.command == "run":
        if args.seed is not None and args.seed < 0:
            print("config error: --seed must be non-negative", file=sys.stderr)
            return EXIT_CONFIG
        if args.trials is not None and args.trials < 1:
            print("config error: --trials must be >= 1", file=sys.stderr)
            return EXIT_CONFIG
        return cmd_run(args.config, args.out, args.seed, args.trials, max(1, args.parallel),
                       not args.no_figures)
    if args.command == "compare":
        return cmd_compare(args.dir_a, args.dir_b, args.out)
    return cmd_demo(args.seed)


if __name__ == "__main__":
    sys.exit(main())
