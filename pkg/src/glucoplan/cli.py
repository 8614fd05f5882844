"""Operator command line: ingest, train, finetune, evaluate, ablate,
recommend, forecast, serve, report.

Exit codes are a stable contract for CI: 0 success, 1 user error (bad
arguments, bad data, violated preconditions), 2 internal error.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import traceback
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .errors import GlucoplanError
from .forecast import ForecastRequest, forecast, glucose_mae
from .model import (
    ModelConfig,
    forecast_config,
    load_checkpoint,
    save_checkpoint,
    titration_config,
)
from .model.config import FORECAST_TARGET, TITRATION_TARGET
from .nutrition import MealDescription, OfflineBackend, backend_from_config, estimate_nutrients
from .pipeline.adapters import ADAPTERS, write_canonical
from .pipeline.dataset import DEFAULT_HISTORY, DEFAULT_WINDOW, load_patient_dir
from .pipeline.splits import split
from .report import emit_report, write_eval_artifacts
from .safety import GuardAudit, RetitrationContext, guard
from .service import App, FileStore, ModelRuntime, history_from_wire, serve
from .titration import InsulinPlan, TitrationRequest, recommend
from .training import TrainConfig, ablation_run, evaluate, personalize, train_foundation

logger = logging.getLogger(__name__)

# Reference targets kept for documentation and printed next to desk-scale
# results; they come from accelerator-scale training on the licensed
# clinical datasets and are not reproduced by the bundled synthetic data.
REFERENCE_TARGETS = {
    TITRATION_TARGET: ("IU", {"ShanghaiDM": 0.0641}),
    FORECAST_TARGET: ("mg/dl", {"ShanghaiDM": 15.91, "OhioT1DM": 19.60}),
}

# Desk-scale preset for demos and CPU smoke runs; "full" uses the defaults
# sized to the published parameter budget.
SMALL_PRESET = dict(
    enc_hidden=24, basal_hidden=12, profile_hidden=16, d_model=32,
    fusion_layers=2, fusion_heads=2, fusion_ffn=64,
    dec_width=32, dec_layers=2, dec_heads=2, dec_ffn=64, cnn_channels=16,
)


@dataclass
class CliConfig:
    data_dir: Optional[str] = None
    out_dir: str = "out"
    seed: int = 0
    titration_checkpoint: Optional[str] = None
    glucose_checkpoint: Optional[str] = None
    backend_config: Optional[str] = None

    @classmethod
    def load(cls, path: Optional[str]) -> "CliConfig":
        if not path:
            return cls()
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in data.items() if k in known})


def _limit_blas_threads() -> None:
    """Small-matrix inference suffers from BLAS thread spinning; cap it."""
    try:
        from threadpoolctl import threadpool_limits
        threadpool_limits(limits=1, user_api="blas")
    except ImportError:
        pass


def _require(path: Optional[str], what: str, directory: bool = False) -> Path:
    if not path:
        raise GlucoplanError(f"{what} is required (flag or config file)")
    p = Path(path)
    if directory and not p.is_dir():
        raise GlucoplanError(f"{what} {p} is not a directory")
    if not directory and not p.is_file():
        raise GlucoplanError(f"{what} {p} does not exist")
    return p


def _model_config(args, cfg_seed: int) -> ModelConfig:
    factory = titration_config if args.target == "titration" else forecast_config
    overrides = dict(SMALL_PRESET) if args.preset == "small" else {}
    overrides.update(window=args.window, history_len=args.history, seed=cfg_seed)
    if getattr(args, "decoder", None):
        overrides["decoder_kind"] = args.decoder
    if getattr(args, "feature_group", None):
        overrides["feature_group"] = args.feature_group
    return factory(**overrides)


def _train_config(args, seed: int) -> TrainConfig:
    return TrainConfig(
        batch_size=args.batch_size,
        learning_rate=args.lr,
        max_epochs=args.epochs,
        early_stop_patience=args.patience,
        seed=seed,
    )


def _write_history_csv(path: Path, history) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "train_mae", "val_mae"])
        for row in history:
            writer.writerow([row.epoch, f"{row.train_mae:.6f}", f"{row.val_mae:.6f}"])


def _load_bundle(args):
    data = _require(args.data, "--data", directory=True)
    return load_patient_dir(
        data,
        adapter=args.adapter,
        window=args.window,
        history_len=args.history,
        stride=args.stride,
    )


def _print_reference(target_channel: str) -> None:
    unit, targets = REFERENCE_TARGETS[target_channel]
    refs = ", ".join(f"{name} {value} {unit}" for name, value in targets.items())
    print(f"reference targets (documentation, licensed data at scale): {refs}")


# -- subcommands ---------------------------------------------------------------


def cmd_ingest(args, cfg: CliConfig) -> int:
    data = _require(args.data, "--data", directory=True)
    out = Path(args.out or cfg.out_dir) / "canonical"
    out.mkdir(parents=True, exist_ok=True)
    from .pipeline.adapters import ingest_directory

    results = ingest_directory(data, args.adapter)
    bundle = load_patient_dir(data, adapter=args.adapter,
                              window=args.window, history_len=args.history)
    summary_rows = []
    for result, summary in zip(results, bundle.summaries):
        write_canonical(out / f"{result.patient_id}.csv", result.records)
        if result.profile is not None:
            (out / f"{result.patient_id}.profile.json").write_text(
                json.dumps(result.profile.to_dict(), indent=2), encoding="utf-8"
            )
        summary_rows.append(
            {
                "patient_id": summary.patient_id,
                "records": summary.records,
                "slots": summary.slots,
                "clips": summary.clips,
                "glucose_missing_rate": round(summary.glucose_missing_rate, 4),
            }
        )
    (out / "summary.json").write_text(json.dumps(summary_rows, indent=2), encoding="utf-8")
    print(f"ingested {len(summary_rows)} patient(s) -> {out}")
    for row in summary_rows:
        print(
            f"  {row['patient_id']}: {row['records']} records, {row['slots']} slots, "
            f"{row['clips']} clips, glucose missing {row['glucose_missing_rate']:.1%}"
        )
    return 0


def cmd_train(args, cfg: CliConfig) -> int:
    bundle = _load_bundle(args)
    if not bundle.clips:
        raise GlucoplanError("no clips produced; is the dataset long enough?")
    ds = split(bundle.clips, seed=args.seed)
    model_cfg = _model_config(args, args.seed)
    result = train_foundation(ds, _train_config(args, args.seed), model_cfg, bundle.profiles)
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ckpt = out / f"{args.target}.npz"
    save_checkpoint(ckpt, result.model)
    _write_history_csv(out / f"{args.target}_history.csv", result.history)
    # day-level grouping can leave tiny datasets without held-out clips
    eval_clips, eval_name = ds.test_clips, "test"
    if not eval_clips:
        eval_clips, eval_name = ds.val_clips, "val"
    if not eval_clips:
        eval_clips, eval_name = ds.train_clips, "train (no held-out day)"
    report = evaluate(result.model, eval_clips, bundle.profiles)
    print(f"trained {args.target} model: {len(result.history)} epochs "
          f"(best val MAE {result.best_val_mae:.4f} at epoch {result.best_epoch})")
    print(f"{eval_name} MAE: {report.mae:.4f}")
    _print_reference(model_cfg.target_channel)
    print(f"checkpoint: {ckpt}")
    return 0


def cmd_finetune(args, cfg: CliConfig) -> int:
    ckpt = _require(args.checkpoint or cfg.titration_checkpoint, "--checkpoint")
    model = load_checkpoint(ckpt)
    bundle = load_patient_dir(
        _require(args.data, "--data", directory=True),
        adapter=args.adapter,
        window=model.config.window,
        history_len=model.config.history_len,
        stride=args.stride,
    )
    result = personalize(
        model, bundle.clips, mode=args.mode,
        config=_train_config(args, args.seed), profiles=bundle.profiles,
    )
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tuned = out / f"{ckpt.stem}_{args.mode}.npz"
    save_checkpoint(tuned, result.model)
    if result.history:
        _write_history_csv(out / f"{ckpt.stem}_{args.mode}_history.csv", result.history)
    print(f"fine-tuned ({args.mode}) on {len(bundle.clips)} clips -> {tuned}")
    return 0


def cmd_evaluate(args, cfg: CliConfig) -> int:
    ckpt = _require(args.checkpoint or cfg.titration_checkpoint, "--checkpoint")
    model = load_checkpoint(ckpt)
    bundle = load_patient_dir(
        _require(args.data, "--data", directory=True),
        adapter=args.adapter,
        window=model.config.window,
        history_len=model.config.history_len,
        stride=args.stride,
    )
    if not bundle.clips:
        raise GlucoplanError("no clips to evaluate")
    report = evaluate(model, bundle.clips, bundle.profiles)
    out = Path(args.out or cfg.out_dir) / "eval"
    write_eval_artifacts(
        out, model.config.target_channel, report.predictions, report.labels,
        report.per_clip, report.mae,
    )
    unit = "IU" if model.config.target_channel == TITRATION_TARGET else "mg/dl"
    print(f"evaluated {len(bundle.clips)} clips: MAE {report.mae:.4f} {unit}")
    _print_reference(model.config.target_channel)
    print(f"artifacts: {out}")
    return 0


def cmd_ablate(args, cfg: CliConfig) -> int:
    bundle = _load_bundle(args)
    if not bundle.clips:
        raise GlucoplanError("no clips produced")
    ds = split(bundle.clips, seed=args.seed)
    groups = [g.strip().upper() for g in args.groups.split(",") if g.strip()]
    rows = ablation_run(groups, ds, _train_config(args, args.seed),
                        _model_config(args, args.seed), bundle.profiles)
    out = Path(args.out or cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table = out / "ablation.csv"
    with open(table, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["group", "val_mae", "test_mae", "epochs"])
        for row in rows:
            writer.writerow([row.group, f"{row.val_mae:.6f}", f"{row.test_mae:.6f}",
                             row.epochs_run])
    for row in rows:
        print(f"{row.group}: val {row.val_mae:.4f}  test {row.test_mae:.4f} "
              f"({row.epochs_run} epochs)")
    print(f"table: {table}")
    return 0


def _load_wire_history(path: Path, model) -> tuple[dict, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        wire = json.load(fh)
    return history_from_wire(wire, model.config.history_len, model.config.basal_len)


def _print_plan(plan: InsulinPlan, patient: str) -> None:
    print(f"patient: {patient}")
    print(f"safety_status: {plan.safety_status}")
    print(f"retitration_count: {plan.retitration_count}")
    print("doses_iu: " + ", ".join(f"{d:.2f}" for d in plan.display_doses()))


def cmd_recommend(args, cfg: CliConfig) -> int:
    ckpt = _require(args.checkpoint or cfg.titration_checkpoint, "--checkpoint")
    model = load_checkpoint(ckpt)
    history, basal_24h = _load_wire_history(_require(args.history, "--history"), model)

    backend_path = args.backend_config or cfg.backend_config
    backend = backend_from_config(backend_path) if backend_path else OfflineBackend()
    meal = MealDescription(text=args.meal)
    estimate = estimate_nutrients(meal, backend)
    future_len = model.config.future_len
    nutrients = {
        "carb_g": np.zeros(future_len),
        "protein_g": np.zeros(future_len),
        "fat_g": np.zeros(future_len),
        "calories": np.zeros(future_len),
    }
    nutrients["carb_g"][0] = estimate.carbohydrate_g
    nutrients["protein_g"][0] = estimate.protein_g
    nutrients["fat_g"][0] = estimate.fat_g
    nutrients["calories"][0] = estimate.calories_cal

    request = TitrationRequest(
        patient_id=args.patient,
        history=history,
        basal_24h=basal_24h,
        profile=None,
        future_nutrients=nutrients,
        future_drugs=np.zeros(future_len),
        projected_basal=np.full(future_len, float(history["basal_insulin"][-1])),
        target_glucose=float(args.target),
    )
    plan = recommend(request, model)
    print(f"meal nutrients ({estimate.source}): carb {estimate.carbohydrate_g:.1f} g, "
          f"protein {estimate.protein_g:.1f} g, fat {estimate.fat_g:.1f} g, "
          f"calories {estimate.calories_cal:.0f} cal")

    if args.guard_checkpoint:
        glucose_model = load_checkpoint(args.guard_checkpoint)
        runtime = ModelRuntime(model, glucose_model)
        from .service.runtime import PlanningContext

        ctx = PlanningContext(
            patient_id=args.patient, profile=None, history=history, basal_24h=basal_24h,
            future_nutrients=nutrients, future_drugs=np.zeros(future_len),
            projected_basal=request.projected_basal,
            target_glucose=request.target_trace(future_len),
        )
        guard_ctx = RetitrationContext(
            current_glucose_mg_dl=[float(v) for v in history["glucose"][-8:]],
            recent_meals=meal.text, candidate=plan, predicted_trace=None, risk=None,
        )
        audit = GuardAudit()
        plan = guard(plan, runtime.forecaster_for(ctx), backend, guard_ctx, audit=audit)
        trace = audit.iterations[-1].trace_mg_dl
        print("forecast_mg_dl: " + ", ".join(f"{v:.0f}" for v in trace))
    _print_plan(plan, args.patient)
    return 0


def cmd_forecast(args, cfg: CliConfig) -> int:
    ckpt = _require(args.checkpoint or cfg.glucose_checkpoint, "--checkpoint")
    model = load_checkpoint(ckpt)
    request_path = _require(args.request, "--request")
    with open(request_path, encoding="utf-8") as fh:
        payload = json.load(fh)
    history, basal_24h = history_from_wire(
        payload["history"], model.config.history_len, model.config.basal_len
    )
    future_len = model.config.future_len
    request = ForecastRequest(
        patient_id=payload.get("patient_id", "unknown"),
        history=history,
        basal_24h=basal_24h,
        profile=None,
        future_nutrients={},
        future_drugs=None,
        projected_basal=None,
        candidate_doses_iu=np.asarray(payload["candidate_doses_iu"], dtype=float),
    )
    trace = forecast(request, model)
    print("glucose_mg_dl: " + ", ".join(f"{v:.1f}" for v in trace.values_mg_dl))
    return 0


def cmd_serve(args, cfg: CliConfig) -> int:
    """Flags beat environment variables beat the config file."""
    import os

    _limit_blas_threads()

    def pick(flag, env, fallback=None):
        return flag if flag is not None else os.environ.get(env, fallback)

    titration_ckpt = _require(
        pick(args.titration_checkpoint, "GLUCOPLAN_TITRATION_CHECKPOINT",
             cfg.titration_checkpoint),
        "--titration-checkpoint",
    )
    glucose_ckpt = _require(
        pick(args.glucose_checkpoint, "GLUCOPLAN_GLUCOSE_CHECKPOINT", cfg.glucose_checkpoint),
        "--glucose-checkpoint",
    )
    runtime = ModelRuntime(load_checkpoint(titration_ckpt), load_checkpoint(glucose_ckpt))
    backend_path = pick(args.backend_config, "GLUCOPLAN_BACKEND_CONFIG", cfg.backend_config)
    backend = backend_from_config(backend_path) if backend_path else OfflineBackend()
    store_dir = pick(args.store, "GLUCOPLAN_STORE") or Path(args.out or cfg.out_dir) / "store"
    port = args.port if args.port is not None else int(os.environ.get("GLUCOPLAN_PORT", 8040))
    max_iters = (args.max_iters if args.max_iters is not None
                 else int(os.environ.get("GLUCOPLAN_MAX_ITERS", 5)))
    static = pick(args.static, "GLUCOPLAN_STATIC")

    app = App(FileStore(store_dir), runtime, backend, max_iters=max_iters, static_dir=static)
    server = serve(app, host=args.host, port=port)
    print(f"serving on http://{args.host}:{port} (backend: {backend.name})")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    return 0


def cmd_report(args, cfg: CliConfig) -> int:
    paths = emit_report(args.eval_dir, args.out or None)
    for path in paths:
        print(path)
    return 0


# -- argument wiring -------------------------------------------------------------


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", help="patient data directory")
    p.add_argument("--adapter", choices=sorted(ADAPTERS), default="canonical")
    p.add_argument("--window", type=int, default=DEFAULT_WINDOW)
    p.add_argument("--history", dest="history", type=int, default=DEFAULT_HISTORY)
    p.add_argument("--stride", type=int, default=1)


def _add_train_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--lr", type=float, default=0.005)
    p.add_argument("--patience", type=int, default=40)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glucoplan",
        description="Meal-aware insulin bolus planning with a forecast-backed safety loop.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--config", help="JSON config with default paths")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="output directory (default: ./out)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="map a dataset export onto canonical patient CSVs")
    _add_data_args(p)

    for name in ("train", "ablate"):
        p = sub.add_parser(name, help=f"{name} on a patient data directory")
        _add_data_args(p)
        _add_train_args(p)
        p.add_argument("--target", choices=["titration", "glucose"], default="titration")
        p.add_argument("--preset", choices=["full", "small"], default="full")
        p.add_argument("--decoder", choices=["transformer", "lstm"])
        if name == "train":
            p.add_argument("--feature-group", dest="feature_group")
        else:
            p.add_argument("--groups", required=True, help="comma-separated, e.g. G1,G4,G7")

    p = sub.add_parser("finetune", help="personalize a checkpoint on one patient's data")
    _add_data_args(p)
    _add_train_args(p)
    p.add_argument("--checkpoint")
    p.add_argument("--mode", choices=["single", "foundation", "ft_full", "ft_cnn_dense",
                                      "ft_dense"], default="ft_dense")

    p = sub.add_parser("evaluate", help="free-running MAE of a checkpoint on a dataset")
    _add_data_args(p)
    p.add_argument("--checkpoint")

    p = sub.add_parser("recommend", help="one-shot plan for a meal and target")
    p.add_argument("--patient", required=True)
    p.add_argument("--target", type=float, required=True, help="target glucose (mg/dl)")
    p.add_argument("--meal", required=True)
    p.add_argument("--checkpoint")
    p.add_argument("--history", required=True, help="wire-format history JSON file")
    p.add_argument("--backend-config")
    p.add_argument("--guard-checkpoint", help="glucose checkpoint; runs the guard loop")

    p = sub.add_parser("forecast", help="glucose trace for a candidate plan")
    p.add_argument("--request", required=True, help="JSON with history + candidate_doses_iu")
    p.add_argument("--checkpoint")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, help="default 8040; env GLUCOPLAN_PORT")
    p.add_argument("--store", help="state directory; env GLUCOPLAN_STORE")
    p.add_argument("--titration-checkpoint", help="env GLUCOPLAN_TITRATION_CHECKPOINT")
    p.add_argument("--glucose-checkpoint", help="env GLUCOPLAN_GLUCOSE_CHECKPOINT")
    p.add_argument("--backend-config", help="env GLUCOPLAN_BACKEND_CONFIG")
    p.add_argument("--static", help="web client bundle dir; env GLUCOPLAN_STATIC")
    p.add_argument("--max-iters", type=int, help="default 5; env GLUCOPLAN_MAX_ITERS")

    p = sub.add_parser("report", help="tables and plots from evaluate artifacts")
    p.add_argument("--eval-dir", required=True)

    return parser


_COMMANDS = {
    "ingest": cmd_ingest,
    "train": cmd_train,
    "finetune": cmd_finetune,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "recommend": cmd_recommend,
    "forecast": cmd_forecast,
    "serve": cmd_serve,
    "report": cmd_report,
}


def main(argv: Optional[list[str]] = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; that's a user error here
        return 0 if exc.code in (0, None) else 1
    try:
        cfg = CliConfig.load(args.config)
        return _COMMANDS[args.command](args, cfg)
    except GlucoplanError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        return 1
    except Exception:
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
