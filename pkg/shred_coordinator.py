import argparse
import hashlib
import os
import re
import sys
import threading
import time
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from dotenv import dotenv_values, load_dotenv

from mhd_shred.errors import (
    ConfigurationError,
    CorruptFileError,
    DataError,
    SensorPlacementError,
    ShredToolkitError,
    SimulationError,
    UsageError,
)
from mhd_shred.dataset import audit_bundle, load_preset, make_splits, run_directory, save_bundle
from mhd_shred.dataset.bundle import SPLITS, sim_config_for
from mhd_shred.evaluation import campaign_report, evaluate_case, residual_field
from mhd_shred.linalg import file_sha256
from mhd_shred.manifest import read_manifest
from mhd_shred.mhdsim import FIELDS, build_grid, is_complete, run_simulation, save_series, write_vtk
from mhd_shred.mhdsim.storage import MANIFEST, load_field
from mhd_shred.schemas import ExperimentConfig, SimConfig
from mhd_shred.shred import ShredArchitecture, init_model, load_model, save_model, train

# Load environment variables from .env file
load_dotenv()

EXIT_OK = 0
EXIT_THRESHOLD = 1
EXIT_USAGE = 2
EXIT_RUNTIME = 3

# Everything else a command raises is a runtime failure
USAGE_ERRORS = (UsageError, ConfigurationError, SensorPlacementError)

CYAN = '\033[96m'
YELLOW = '\033[93m'
GREEN = '\033[92m'
RED = '\033[91m'
BLUE = '\033[94m'
MAGENTA = '\033[95m'
BOLD = '\033[1m'
RESET = '\033[0m'

# ============================================================================
# Progress Display
# ============================================================================

BAR_CELLS = 7


def render_bar(done: int, total: Optional[int], tick: int = 0) -> str:
    """Progress bar text: filled share of `total`, or a sweeping block while the total is unknown"""
    if total:
        filled = min(BAR_CELLS, (BAR_CELLS * max(done, 0)) // total)
        return "▰" * filled + "▱" * (BAR_CELLS - filled) + f" {min(done, total)}/{total}"
    pos = tick % (2 * BAR_CELLS)
    cells = ["▰" if (i < pos if pos <= BAR_CELLS else i >= pos - BAR_CELLS) else "▱" for i in range(BAR_CELLS)]
    return "".join(cells)


class ProgressIndicator:
    """Animated progress line for simulations and training; silent when stdout is not a terminal"""

    def __init__(self, message: str = "Working", total: Optional[int] = None):
        self.message = message
        self.total = total
        self.done = 0
        self.detail = ""
        self.is_running = False
        self.thread = None

    def update(self, done: int, detail: str = ""):
        self.done = done
        self.detail = detail

    def advance(self, detail: str = ""):
        self.update(self.done + 1, detail)

    def line(self, tick: int = 0) -> str:
        text = f"{render_bar(self.done, self.total, tick)} {self.message}"
        return f"{text} ({self.detail})" if self.detail else f"{text}..."

    def _animate(self):
        tick = 0
        while self.is_running:
            print(f"\r{self.line(tick)}", end="", flush=True)
            time.sleep(0.1)
            tick += 1

    def start(self):
        if not sys.stdout.isatty():
            return
        self.is_running = True
        self.thread = threading.Thread(target=self._animate, daemon=True)
        self.thread.start()

    def stop(self):
        if not self.is_running:
            return
        self.is_running = False
        if self.thread:
            self.thread.join(timeout=0.5)
        print("\r" + " " * 80 + "\r", end="", flush=True)

    def __enter__(self):
        self.start()
        return self

    def __exit__(self, *exc):
        self.stop()
        return False


# ============================================================================
# Output Lock
# ============================================================================

class OutputLock:
    """Exclusive `.lock` file so two commands never write one output directory"""

    def __init__(self, directory: Path):
        self.path = Path(directory) / ".lock"

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            owner = self.path.read_text(encoding="utf-8").strip() or "unknown"
            state = "running" if _pid_alive(owner) else "stale"
            raise UsageError(
                f"{self.path.parent} is locked by PID {owner} ({state}); "
                f"remove {self.path} if that process is gone"
            ) from None
        with os.fdopen(fd, "w") as f:
            f.write(str(os.getpid()))
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False


def _pid_alive(owner: str) -> bool:
    try:
        os.kill(int(owner), 0)
    except (ValueError, ProcessLookupError):
        return False
    except PermissionError:
        return True
    return True


# ============================================================================
# Configuration
# ============================================================================

def parse_grid(text: str) -> Dict[str, str]:
    match = re.fullmatch(r"\s*(\d+)[xX](\d+)[xX](\d+)\s*", text)
    if not match:
        raise UsageError(f"--grid expects NXxNYxNZ (e.g. 16x16x32), got '{text}'")
    nx, ny, nz = match.groups()
    return {"sim.geometry.nx": nx, "sim.geometry.ny": ny, "sim.geometry.nz": nz}


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    """
    Preset, then environment defaults, then the --config file, then flags.

    The config file is flat key=value text with dotted section prefixes
    (sim.t_end=3.0, train.epochs=500); an optional `preset` key picks the base.
    """
    file_values: Dict[str, str] = {}
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise UsageError(f"Config file not found: {path}")
        file_values = {k: v for k, v in dotenv_values(path).items() if v is not None}

    file_preset = file_values.pop("preset", None)
    preset = args.preset or file_preset or "toroidal"
    config = load_preset(preset)

    env = {}
    if os.getenv("SHRED_OUTPUT_DIR"):
        env["output_dir"] = os.environ["SHRED_OUTPUT_DIR"]
    if os.getenv("SHRED_SEED"):
        env["seed"] = env["train.seed"] = os.environ["SHRED_SEED"]
    config = config.with_overrides(env)
    config = config.with_overrides(file_values)

    flags: Dict[str, str] = {}
    if args.seed is not None:
        flags["seed"] = flags["train.seed"] = str(args.seed)
    if args.grid:
        flags.update(parse_grid(args.grid))
    if args.rank is not None:
        flags["rank"] = str(args.rank)
    if args.param_estimation:
        flags["param_estimation"] = "true"
    if args.out:
        flags["output_dir"] = args.out
    if args.epochs is not None:
        flags["train.epochs"] = str(args.epochs)
    if args.frames_at:
        flags["frames_at"] = args.frames_at
    return config.with_overrides(flags)


def config_hash(config: ExperimentConfig) -> str:
    return hashlib.sha256(config.model_dump_json().encode("utf-8")).hexdigest()


def output_root(config: ExperimentConfig) -> Path:
    return Path(config.output_dir)


def default_model_path(config: ExperimentConfig) -> Path:
    return output_root(config) / "models" / f"{config.campaign}.shred"


def bundle_directory(config: ExperimentConfig) -> Path:
    return output_root(config) / "bundle"


def _default_workers() -> int:
    return int(os.getenv("SHRED_WORKERS", "0")) or (os.cpu_count() or 1)


# ============================================================================
# Commands
# ============================================================================

def _generate_one(sim: SimConfig, directory: str, debug: bool):
    series = run_simulation(sim, debug=debug)
    save_series(series, directory)
    return series.run_id, series.wall_time


def cmd_generate(config: ExperimentConfig, workers: int = 1, debug: bool = False) -> Dict[str, int]:
    """Simulate every drive of every split; runs already on disk with a matching config hash are skipped"""
    config.splits.check_disjoint()
    pending = []
    skipped = 0
    for split in SPLITS:
        for drive in getattr(config.splits, split):
            sim = sim_config_for(config, drive)
            directory = run_directory(config, drive)
            if is_complete(directory, sim):
                skipped += 1
                if debug:
                    print(f"[DEBUG] {split}: {drive.label} already present, skipping")
                continue
            pending.append((split, drive.label, sim, directory))

    print(f"🔍 [SIM] {len(pending)} run(s) to simulate, {skipped} already present")
    if not pending:
        return {"new": 0, "skipped": skipped}

    started = time.perf_counter()
    if workers <= 1 or len(pending) == 1:
        with ProgressIndicator("Simulating", total=len(pending)) as progress:
            for split, label, sim, directory in pending:
                progress.detail = f"{label}, {split}"
                try:
                    rid, wall = _generate_one(sim, str(directory), debug)
                except SimulationError as e:
                    raise SimulationError(e.frame, RuntimeError(f"run {label}: {e.cause}")) from e
                progress.advance()
                print(f"\r✅ [SIM] {rid} done in {wall:.1f} s")
    else:
        with ProgressIndicator(f"Simulating on {workers} workers", total=len(pending)) as progress:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                futures = {
                    pool.submit(_generate_one, sim, str(directory), False): label
                    for _, label, sim, directory in pending
                }
                for future in as_completed(futures):
                    label = futures[future]
                    try:
                        rid, wall = future.result()
                    except SimulationError as e:
                        raise SimulationError(e.frame, RuntimeError(f"run {label}: {e.cause}")) from e
                    progress.advance()
                    print(f"\r✅ [SIM] {rid} done in {wall:.1f} s")
    print(f"⏱️  [SIM] Generated {len(pending)} run(s) in {time.perf_counter() - started:.1f} s")
    return {"new": len(pending), "skipped": skipped}


def cmd_train(config: ExperimentConfig, model_path: Optional[Path] = None, debug: bool = False) -> Path:
    started = time.perf_counter()
    with ProgressIndicator("Building dataset bundle"):
        bundle = make_splits(config, verbose=False)
        bundle_dir = save_bundle(bundle, bundle_directory(config))
    print(f"✅ [DATASET] Bundle saved to {bundle_dir} "
          f"({len(bundle.split_runs('train'))} train / {len(bundle.split_runs('validation'))} validation runs)")

    arch = ShredArchitecture.from_train_config(
        config.train, n_sensors=len(bundle.sensor_dofs), output_width=bundle.output_map.width, lag=config.lag
    )
    model = init_model(arch, seed=config.train.seed, output_map=bundle.output_map, scaling=bundle.scaling)
    print(f"🧠 [SHRED] {arch.parameter_count()} parameters, {arch.lstm_layers}x LSTM({arch.hidden}), "
          f"decoder {'/'.join(str(w) for w in arch.decoder_widths)}, output width {arch.output_width}")

    train_batch = bundle.batch("train")
    val_batch = bundle.batch("validation")
    with ProgressIndicator("Training", total=config.train.epochs) as progress:
        def on_epoch(epoch: int, train_loss: float, val_loss: float):
            progress.update(epoch, f"val {val_loss:.3e}")

        model, history = train(model, train_batch, val_batch, config.train, verbose=False, debug=debug,
                               on_epoch=on_epoch)

    model.provenance = {
        "campaign": config.campaign,
        "config_sha256": config_hash(config),
        "bundle_manifest_sha256": file_sha256(bundle_dir / "split_manifest.txt"),
        "seed": str(config.train.seed),
        "best_epoch": str(history.best_epoch),
        "epochs_run": str(len(history.epochs)),
    }
    model_path = Path(model_path) if model_path else default_model_path(config)
    save_model(model, model_path)
    history.save_csv(model_path.with_name(f"{model_path.stem}_history.csv"))
    best = history.val_loss[history.best_epoch - 1] if history.best_epoch else float("nan")
    print(f"✅ [SHRED] Best validation loss {best:.4e} at epoch {history.best_epoch}"
          f"{' (early stop)' if history.stopped_early else ''}")
    print(f"💾 [SHRED] Model saved to {model_path}")
    print(f"⏱️  [SHRED] Total training wall time {time.perf_counter() - started:.1f} s")
    return model_path


def export_frames(config: ExperimentConfig, results, directory: Path, debug: bool = False) -> List[Path]:
    """VTK files of truth, reconstruction and residual at the configured instants"""
    grid = build_grid(config.sim.geometry)
    written = []
    for result in results:
        for t in config.frames_at:
            k = int(round(t / config.sim.store_dt)) - 1
            if not 0 <= k < result.n_frames:
                print(f"⚠️  [REPORT] t = {t} s is outside the stored frames of {result.name}; skipped")
                continue
            fields = {}
            for name in FIELDS:
                label = "p_prime" if name == "p" else name
                truth = result.truth[name][:, k]
                recon = result.recon[name][:, k]
                fields[f"{label}_fom"] = truth
                fields[f"{label}_shred"] = recon
                fields[f"{label}_residual"] = residual_field(truth, recon)
            path = directory / "frames" / f"{result.name}_t{t:g}.vtk"
            write_vtk(path, grid, fields, title=f"{result.name} t={t:g}s")
            written.append(path)
            if debug:
                print(f"[DEBUG] wrote {path}")
    return written


def cmd_evaluate(config: ExperimentConfig, model_path: Optional[Path] = None, oracle: bool = False,
                 report_dir: Optional[Path] = None, debug: bool = False):
    """
    Reconstruct every test trajectory, write the campaign report and VTK
    frames. The oracle-latent truncation floor is always reported alongside.
    """
    started = time.perf_counter()
    model = None
    if not oracle:
        model_path = Path(model_path) if model_path else default_model_path(config)
        if not model_path.is_file():
            raise UsageError(f"Model file not found: {model_path}; run the 'train' subcommand first")
        model = load_model(model_path)

    with ProgressIndicator("Rebuilding dataset bundle"):
        bundle = make_splits(config, verbose=False)
    if model is not None:
        if model.output_map != bundle.output_map:
            raise ConfigurationError("Model output layout does not match the bundle (rank, basis mode or param head changed)")
        expected = model.provenance.get("config_sha256")
        if expected and expected != config_hash(config):
            print("⚠️  [REPORT] Model was trained with a different configuration")

    tests = bundle.split_runs("test")
    if not tests:
        raise DataError("The campaign has no test runs to evaluate")

    report_root = Path(report_dir) if report_dir else Path("reports")
    outputs = {}
    modes = [("oracle", True)] if oracle else [("shred", False), ("oracle", True)]
    for mode, use_oracle in modes:
        results = []
        with ProgressIndicator(f"Evaluating [{mode}]", total=len(tests)) as progress:
            for record in tests:
                results.append(evaluate_case(model, bundle, record, oracle=use_oracle))
                progress.advance(record.drive.label)
        directory = report_root / (config.campaign if mode == "shred" else f"{config.campaign}_oracle")
        title = f"SHRED Campaign Report: {config.campaign}" + (" (oracle latents)" if use_oracle else "")
        report = campaign_report(results, directory, config.lag, config.thresholds, title=title,
                                 timings={"evaluate_wall_s": time.perf_counter() - started})
        if mode == "shred" or oracle:
            export_frames(config, results, directory, debug)
        outputs[mode] = report
        print(f"📊 [REPORT] {mode}: {len(results)} case(s) -> {directory}")

    primary = outputs["oracle" if oracle else "shred"]
    print_summary(primary.summary, config)
    if primary.violations:
        print(f"\n{RED}{BOLD}⚠️  {len(primary.violations)} acceptance threshold violation(s){RESET}")
        for v in primary.violations:
            print(f"  • {v}")
    else:
        print(f"\n{GREEN}{BOLD}✅ All acceptance thresholds met{RESET}")
    return primary


def cmd_export(source: Path, fmt: str, out: Path, field: str = "T", frame: int = -1) -> Path:
    """Export one stored field/frame (run directory) or a report CSV"""
    source = Path(source)
    if fmt not in ("vtk", "csv"):
        raise UsageError(f"Unknown export format '{fmt}'; choose vtk or csv")
    if not source.exists():
        raise UsageError(f"Export source not found: {source}")

    if source.is_file() and source.suffix == ".csv":
        if fmt != "csv":
            raise UsageError("Report tables can only be exported as csv")
        table = pd.read_csv(source)
        table.to_csv(out, index=False, float_format="%.17g")
        print(f"💾 [EXPORT] {len(table)} rows -> {out}")
        return Path(out)

    if not (source / MANIFEST).is_file():
        raise UsageError(f"{source} is neither a run directory nor a report CSV")
    try:
        sim = SimConfig.model_validate_json(read_manifest(source / MANIFEST)["config"])
    except (KeyError, ValueError) as e:
        raise CorruptFileError(f"{source}: manifest has no readable config") from e
    values = load_field(source, field)
    n_frames = values.shape[1]
    k = frame if frame >= 0 else n_frames + frame
    if not 0 <= k < n_frames:
        raise UsageError(f"Frame {frame} is outside 0..{n_frames - 1}")

    grid = build_grid(sim.geometry)
    if fmt == "vtk":
        write_vtk(out, grid, {field: values[:, k]}, title=f"{source.name} {field} frame {k}")
    else:
        cells = pd.read_csv(source / "cells.csv")
        cells[field] = values[:, k]
        cells.to_csv(out, index=False, float_format="%.17g")
    print(f"💾 [EXPORT] {field} frame {k} of {source.name} -> {out}")
    return Path(out)


def cmd_audit(config: ExperimentConfig, model_path: Optional[Path] = None) -> Dict[str, object]:
    """Leakage audit of the bundle plus the snapshot -> bundle -> model hash chain"""
    directory = bundle_directory(config)
    if not (directory / "split_manifest.txt").is_file():
        raise UsageError(f"No bundle at {directory}; run the 'train' subcommand first")
    result = audit_bundle(directory)

    manifest = read_manifest(directory / "split_manifest.txt")
    problems = []
    for key, expected in manifest.items():
        if not key.startswith("run_sha256_"):
            continue
        run_dir = output_root(config) / "snapshots" / key[len("run_sha256_"):]
        try:
            actual = read_manifest(run_dir / MANIFEST).get("sha256_T")
        except CorruptFileError:
            problems.append(f"run {run_dir.name} is missing from the snapshot store")
            continue
        if actual != expected:
            problems.append(f"run {run_dir.name} changed since the bundle was built")
        elif file_sha256(run_dir / "T.dmx") != expected:
            problems.append(f"run {run_dir.name}: T.dmx does not match its manifest")

    model_path = Path(model_path) if model_path else default_model_path(config)
    if model_path.is_file():
        model = load_model(model_path)
        if model.provenance.get("bundle_manifest_sha256") != result["manifest_sha256"]:
            problems.append(f"model {model_path.name} was trained on a different bundle")
        result["model_checked"] = True
    else:
        result["model_checked"] = False
    if problems:
        raise DataError("Hash chain broken:\n" + "\n".join(f"  - {p}" for p in problems))

    print(f"✅ [AUDIT] No leakage: scaling and bases fitted on {result['train']} train + "
          f"{result['validation']} validation runs, {result['test']} test runs untouched")
    print(f"✅ [AUDIT] {result['files_checked']} bundle file hashes verified"
          f"{', model provenance verified' if result['model_checked'] else ''}")
    return result


# ============================================================================
# Console Output
# ============================================================================

def print_banner(command: str, config: ExperimentConfig):
    g = config.sim.geometry
    print(f"\n{CYAN}{'='*80}{RESET}")
    print(f"{BOLD}{MAGENTA}🧲 MHD SHRED  |  {command}  |  campaign: {config.campaign}{RESET}")
    print(f"{CYAN}{'='*80}{RESET}")
    print(f"{GREEN}Grid:{RESET} {g.nx}x{g.ny}x{g.nz}   {GREEN}Rank:{RESET} {config.rank} ({config.basis_mode})   "
          f"{GREEN}Lag:{RESET} {config.lag}   {GREEN}Seed:{RESET} {config.seed}   "
          f"{GREEN}Output:{RESET} {config.output_dir}")
    print(f"{CYAN}{'-'*80}{RESET}\n")


def print_summary(summary: pd.DataFrame, config: ExperimentConfig):
    if summary.empty:
        print(f"{YELLOW}No test cases evaluated{RESET}")
        return
    s = "" if config.thresholds.convention == "normalized" else "_phys"
    print(f"\n{BLUE}{BOLD}POST-BURN-IN MAX ERRORS ({config.thresholds.convention}){RESET}")
    for _, row in summary.iterrows():
        marker = "" if row["in_range"] else f" {YELLOW}(extrapolation){RESET}"
        line = (f"  • {row['case']}: eps_T {row[f'max_eps_T_post{s}']:.4f}  eps_u {row[f'max_eps_u_post{s}']:.4f}  "
                f"eps_p {row[f'max_eps_p_post{s}']:.4f}")
        if np.isfinite(row["b_rmse_post"]):
            line += f"  B RMSE {row['b_rmse_post']:.4f}"
        print(line + marker)


# ============================================================================
# Main Application
# ============================================================================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key=value experiment file overlaying the preset")
    common.add_argument("--preset", choices=["toroidal", "combined", "oscillating"], help="Campaign preset (default toroidal)")
    common.add_argument("--seed", type=int, help="Seed for training and initialization")
    common.add_argument("--grid", help="Simulator grid override NXxNYxNZ")
    common.add_argument("--rank", type=int, help="SVD truncation rank")
    common.add_argument("--param-estimation", action="store_true", help="Add the |B| estimation head")
    common.add_argument("--out", help="Output directory for snapshots, bundle and models")
    common.add_argument("--epochs", type=int, help="Maximum training epochs")
    common.add_argument("--frames-at", help="Comma-separated VTK export times [s]")
    common.add_argument("--debug", action="store_true", help="Verbose diagnostics and tracebacks")

    parser = argparse.ArgumentParser(
        prog="shred_coordinator",
        description="Desk-scale MHD snapshot generation and SHRED reconstruction pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", parents=[common], help="Simulate every drive of the campaign")
    gen.add_argument("--workers", type=int, default=None, help="Parallel simulations (default SHRED_WORKERS or CPU count)")

    tr = sub.add_parser("train", parents=[common], help="Build the bundle and train a SHRED model")
    tr.add_argument("--model", help="Model file to write")

    ev = sub.add_parser("evaluate", parents=[common], help="Reconstruct the test runs and write reports")
    ev.add_argument("--model", help="Model file to read")
    ev.add_argument("--oracle-latents", action="store_true", help="Inject true latents (truncation floor)")
    ev.add_argument("--report-dir", default="reports", help="Report root directory")

    ex = sub.add_parser("export", parents=[common], help="Export a stored field/frame or a report CSV")
    ex.add_argument("source", help="Run directory or report CSV")
    ex.add_argument("--format", default="vtk", help="vtk or csv")
    ex.add_argument("--field", default="T", choices=list(FIELDS))
    ex.add_argument("--frame", type=int, default=-1, help="0-based frame index (negative counts from the end)")
    ex.add_argument("--output", help="Destination file")

    au = sub.add_parser("audit", parents=[common], help="Check the bundle for leakage and broken hashes")
    au.add_argument("--model", help="Model file whose provenance to verify")
    return parser


def run(args: argparse.Namespace) -> int:
    if args.command == "export":
        fmt = args.format.lower()
        source = Path(args.source)
        out = Path(args.output) if args.output else source.parent / f"{source.stem}_{args.field}.{fmt}"
        cmd_export(Path(args.source), fmt, out, field=args.field, frame=args.frame)
        return EXIT_OK

    config = resolve_config(args)
    print_banner(args.command, config)
    with OutputLock(output_root(config)):
        if args.command == "generate":
            cmd_generate(config, workers=args.workers or _default_workers(), debug=args.debug)
        elif args.command == "train":
            cmd_train(config, model_path=args.model, debug=args.debug)
        elif args.command == "evaluate":
            report = cmd_evaluate(config, model_path=args.model, oracle=args.oracle_latents,
                                  report_dir=Path(args.report_dir), debug=args.debug)
            if report.violations:
                return EXIT_THRESHOLD
        elif args.command == "audit":
            cmd_audit(config, model_path=args.model)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.debug:
        print("[DEBUG MODE ENABLED]")
        print("=" * 80)
    try:
        code = run(args)
    except ShredToolkitError as e:
        if args.debug:
            traceback.print_exc()
        print(f"\n{RED}❌ {type(e).__name__}: {e}{RESET}")
        return EXIT_USAGE if isinstance(e, USAGE_ERRORS) else EXIT_RUNTIME
    except KeyboardInterrupt:
        print(f"\n{YELLOW}Interrupted{RESET}")
        return EXIT_RUNTIME
    if code == EXIT_OK:
        print(f"\n{BOLD}{GREEN}✅ {args.command} complete!{RESET}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
