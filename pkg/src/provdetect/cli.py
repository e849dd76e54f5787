"""Command-line front end for the detection pipeline.

One command per stage: ingest, embed, train, score, eval, grid, report.
All stages read one config file (JSON; YAML when pyyaml is installed)
and write their artifacts into the --out directory, updating a shared
manifest.json with input/output digests, the config hash, the seed, and
timings. Identical config + seed reproduce byte-identical artifacts
(the manifest's timing fields excepted).

Exit codes: 0 success, 2 input or validation error, 3 embedding backend
error, 4 numeric failure during training or scoring.
"""

from __future__ import annotations

import functools
import hashlib
import json
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import __version__
from .autoenc import (
    TrainConfig,
    build_model,
    load_model,
    save_model,
    train,
)
from .dataset import (
    AspectDataset,
    SyntheticConfig,
    generate_synthetic,
    imbalance_ratio,
    load_dataset,
    save_dataset,
    union_aspects,
)
from .detect import (
    AnomalyScore,
    Threshold,
    scores_from_csv,
    scores_to_csv,
    score_all,
    select_threshold,
)
from .embedder import (
    EmbedderConfig,
    cache_header,
    cache_load,
    cache_store,
    default_pooling,
    embed_all,
    make_backend,
)
from .errors import (
    CacheError,
    EmbeddingError,
    ParseError,
    TrainingError,
    ValidationError,
)
from .evalviz import (
    EmbedSpec,
    GridResult,
    best_cell,
    heatmap_csv,
    heatmap_svg,
    loss_svg,
    roc_curve,
    roc_svg,
    roc_to_csv,
    run_grid,
    scatter_csv,
    scatter_svg,
)
from .textify import IDENTITY_PHRASES, PhraseMap, dataset_to_sentences

EXIT_INPUT = 2
EXIT_BACKEND = 3
EXIT_NUMERIC = 4


def read_config_file(path: str | Path) -> dict:
    """Parse a JSON (or, by extension, YAML) config into a dict."""
    p = Path(path)
    if not p.is_file():
        raise ParseError(f"{p}: no such config file")
    text = p.read_text(encoding="utf-8")
    if p.suffix.lower() in (".yaml", ".yml"):
        try:
            import yaml
        except ImportError as exc:
            raise ParseError(
                f"{p}: YAML config requires the pyyaml package"
            ) from exc
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ParseError(f"{p}: {exc}") from exc
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ParseError(f"{p}: {exc}") from exc
    if not isinstance(data, dict):
        raise ParseError(f"{p}: config root must be a mapping")
    return data


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with path.open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _config_hash(config: dict) -> str:
    canon = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()


class Run:
    """Resolved global options shared by all commands."""

    def __init__(
        self,
        config_path: str | None,
        seed: int | None,
        out: str,
        jobs: int,
        force: bool,
    ) -> None:
        self.config = read_config_file(config_path) if config_path else {}
        self.out = Path(out)
        self.jobs = jobs
        self.force = force
        resolved = seed if seed is not None else self.config.get("seed")
        if resolved is None:
            raise ValidationError(
                "a seed is required: pass --seed or set 'seed' in the config"
            )
        self.seed = int(resolved)
        if self.seed < 0:
            raise ValidationError(f"seed must be non-negative, got {self.seed}")
        self.out.mkdir(parents=True, exist_ok=True)

    # -- manifest bookkeeping -------------------------------------------

    def record(
        self,
        command: str,
        inputs: list[Path],
        outputs: list[Path],
        elapsed: float,
        extra: dict | None = None,
    ) -> None:
        manifest_path = self.out / "manifest.json"
        manifest = {}
        if manifest_path.is_file():
            try:
                manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
            except json.JSONDecodeError:
                manifest = {}
        commands = manifest.setdefault("commands", {})
        commands[command] = {
            "config_hash": _config_hash(self.config),
            "seed": self.seed,
            "versions": {
                "package": __version__,
                "numpy": np.__version__,
                "python": ".".join(map(str, sys.version_info[:3])),
            },
            "inputs": {str(p): _sha256(p) for p in inputs if p.is_file()},
            "outputs": {str(p): _sha256(p) for p in outputs if p.is_file()},
            "elapsed_seconds": round(elapsed, 6),
        }
        if extra:
            commands[command].update(extra)
        manifest_path.write_text(
            json.dumps(manifest, sort_keys=True, indent=2) + "\n",
            encoding="utf-8",
        )

    def recorded_hash(self, command: str) -> str | None:
        manifest_path = self.out / "manifest.json"
        if not manifest_path.is_file():
            return None
        try:
            manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            return None
        entry = manifest.get("commands", {}).get(command)
        return entry.get("config_hash") if entry else None

    # -- config sections --------------------------------------------------

    def section(self, name: str) -> dict:
        value = self.config.get(name, {})
        if not isinstance(value, dict):
            raise ValidationError(f"config section {name!r} must be a mapping")
        return value

    def phrases(self) -> PhraseMap:
        raw = self.config.get("phrases")
        if raw is None:
            return IDENTITY_PHRASES
        if isinstance(raw, str):
            return PhraseMap.from_file(raw)
        if isinstance(raw, dict):
            return PhraseMap({str(k): str(v) for k, v in raw.items()})
        raise ValidationError("config 'phrases' must be a path or a mapping")

    def dataset_paths(self) -> tuple[Path, Path]:
        return self.out / "dataset.csv", self.out / "dataset.labels"

    def load_ingested(self) -> AspectDataset:
        matrix, labels = self.dataset_paths()
        if not matrix.is_file() or not labels.is_file():
            raise ValidationError(
                f"no ingested dataset under {self.out}; run 'ingest' first"
            )
        meta = self.section("dataset")
        return load_dataset(
            matrix,
            labels,
            aspect=meta.get("aspect", "PE"),
            os=meta.get("os", "Linux"),
            scenario=meta.get("scenario", "Pandex"),
        )

    def embedding_config(self) -> tuple[EmbedderConfig, dict]:
        section = self.section("embedding")
        model_id = section.get("model_id", "hash")
        dim = int(section.get("dim", 128))
        cfg = EmbedderConfig(
            model_id=model_id,
            dim=dim,
            pooling=section.get("pooling", default_pooling(model_id)),
            max_tokens=int(section.get("max_tokens", 256)),
            normalize=bool(section.get("normalize", False)),
        )
        return cfg, section

    def build_model_from_config(self, input_dim: int):
        m = self.section("model")
        return build_model(
            m.get("variant", "ae"),
            input_dim,
            hidden=tuple(int(h) for h in m.get("hidden", [128])),
            latent_dim=int(m.get("latent_dim", 32)),
            beta=float(m.get("beta", 1.0)),
            noise_mode=m.get("noise_mode", "gaussian"),
            noise_sigma=float(m.get("noise_sigma", 0.1)),
            mask_fraction=float(m.get("mask_fraction", 0.1)),
            attention=bool(m.get("attention", False)),
            attention_heads=int(m.get("attention_heads", 2)),
        )

    def train_config(self) -> TrainConfig:
        t = self.section("train")
        return TrainConfig(
            epochs=int(t.get("epochs", 100)),
            batch_size=int(t.get("batch_size", 64)),
            learning_rate=float(t.get("learning_rate", 1e-3)),
            val_fraction=float(t.get("val_fraction", 0.2)),
            seed=self.seed,
            shuffle=bool(t.get("shuffle", True)),
        )


def _handle_errors(fn):
    """Map package exceptions onto the documented exit codes."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ParseError, ValidationError, CacheError, FileNotFoundError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_INPUT)
        except EmbeddingError as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_BACKEND)
        except (TrainingError, FloatingPointError, np.linalg.LinAlgError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_NUMERIC)

    return wrapper


@click.group()
@click.option("--config", "config_path", type=str, default=None,
              help="Config file (JSON, or YAML with pyyaml).")
@click.option("--seed", type=int, default=None,
              help="Master seed; overrides the config value.")
@click.option("--out", type=str, default="runs/latest",
              help="Output directory for artifacts and the manifest.")
@click.option("--jobs", type=int, default=1, help="Worker threads for grid cells.")
@click.option("--force", is_flag=True, help="Recompute even on a cache hit.")
@click.version_option(version=__version__)
@click.pass_context
@_handle_errors
def main(ctx, config_path, seed, out, jobs, force):
    """Provenance anomaly detection pipeline."""
    ctx.obj = Run(config_path, seed, out, jobs, force)


@main.command()
@click.pass_obj
@_handle_errors
def ingest(run: Run):
    """Load or synthesize the dataset and write it in canonical form."""
    t0 = time.perf_counter()
    section = run.section("dataset")
    kind = section.get("kind", "synthetic")
    inputs: list[Path] = []
    if kind == "csv":
        matrix, labels = Path(section["matrix"]), Path(section["labels"])
        inputs = [matrix, labels]
        ds = load_dataset(
            matrix,
            labels,
            aspect=section.get("aspect", "PE"),
            os=section.get("os", "Linux"),
            scenario=section.get("scenario", "Pandex"),
        )
    elif kind == "union":
        parts = []
        for part in section.get("parts", []):
            matrix, labels = Path(part["matrix"]), Path(part["labels"])
            inputs += [matrix, labels]
            parts.append(
                load_dataset(
                    matrix,
                    labels,
                    aspect=part["aspect"],
                    os=part.get("os", section.get("os", "Linux")),
                    scenario=part.get("scenario", section.get("scenario", "Pandex")),
                )
            )
        ds = union_aspects(parts)
    elif kind == "synthetic":
        raw = section.get("synthetic", {})
        cfg = SyntheticConfig(
            n_normal=int(raw.get("n_normal", 2000)),
            n_attack=int(raw.get("n_attack", 10)),
            n_attributes=int(raw.get("n_attributes", 64)),
            normal_density=float(raw.get("normal_density", 0.05)),
            attack_signature_attributes=int(
                raw.get("attack_signature_attributes", 8)
            ),
            seed=int(raw.get("seed", run.seed)),
        )
        ds = generate_synthetic(cfg)
    else:
        raise ValidationError(f"unknown dataset kind {kind!r}")

    matrix_path, labels_path = run.dataset_paths()
    save_dataset(ds, matrix_path, labels_path)
    run.record("ingest", inputs, [matrix_path, labels_path],
               time.perf_counter() - t0)
    click.echo(
        f"{ds.os.value} {ds.scenario.value} {ds.aspect.value}: "
        f"{ds.n_processes} processes, {ds.n_attributes} attributes, "
        f"{len(ds.attack_ids)} attacks "
        f"({100.0 * imbalance_ratio(ds):.3f}%)"
    )


@main.command()
@click.pass_obj
@_handle_errors
def embed(run: Run):
    """Render sentences and embed them into the on-disk cache."""
    t0 = time.perf_counter()
    ds = run.load_ingested()
    cfg, section = run.embedding_config()
    cache_path = run.out / "embeddings.bin"
    if cache_path.is_file() and not run.force:
        try:
            head = cache_header(cache_path)
            if (
                head.model_id == cfg.model_id
                and head.dim == cfg.dim
                and head.count == ds.n_processes
            ):
                click.echo(f"cache hit: {cache_path} ({head.count} vectors)")
                return
        except CacheError:
            pass  # unreadable cache: rebuild below
    backend = make_backend(
        cfg.model_id,
        cfg.dim,
        seed=int(section.get("seed", run.seed)),
        backend_dir=section.get("backend_dir"),
    )
    sentences = dataset_to_sentences(ds, run.phrases())
    vectors = embed_all(sentences, cfg, backend)
    cache_store(cache_path, vectors)
    matrix_path, labels_path = run.dataset_paths()
    run.record("embed", [matrix_path, labels_path], [cache_path],
               time.perf_counter() - t0)
    click.echo(f"embedded {len(vectors)} sentences at dim {cfg.dim}")


@main.command(name="train")
@click.option("--epochs", type=int, default=None,
              help="Override the configured epoch count.")
@click.option("--variant", type=click.Choice(["ae", "vae", "dae"]),
              default=None, help="Override the configured model variant.")
@click.pass_obj
@_handle_errors
def train_cmd(run: Run, epochs: int | None, variant: str | None):
    """Train the configured variant on normal-labeled vectors."""
    t0 = time.perf_counter()
    if epochs is not None:
        run.config.setdefault("train", {})["epochs"] = epochs
    if variant is not None:
        run.config.setdefault("model", {})["variant"] = variant
    ckpt_path = run.out / "model.ckpt"
    if (
        ckpt_path.is_file()
        and not run.force
        and run.recorded_hash("train") == _config_hash(run.config)
    ):
        click.echo(f"cache hit: {ckpt_path}")
        return
    ds = run.load_ingested()
    cache_path = run.out / "embeddings.bin"
    vectors = cache_load(cache_path)
    labels = ds.labels()
    normal = [v for v in vectors if labels.get(v.process_id) == "normal"]
    if not normal:
        raise ValidationError("no normal-labeled vectors to train on")
    model = run.build_model_from_config(normal[0].values.shape[0])
    report = train(model, normal, run.train_config(), labels=labels)
    save_model(ckpt_path, model, seed=run.seed)
    loss_csv = run.out / "loss.csv"
    report.to_csv(loss_csv)
    loss_fig = run.out / "loss.svg"
    loss_svg(report.train_losses, report.val_losses, loss_fig)
    matrix_path, labels_path = run.dataset_paths()
    run.record(
        "train",
        [matrix_path, labels_path, cache_path],
        [ckpt_path, loss_csv, loss_fig],
        time.perf_counter() - t0,
        extra={"final_train_loss": report.train_losses[-1],
               "final_val_loss": report.val_losses[-1]},
    )
    click.echo(
        f"trained {model.variant} for {run.train_config().epochs} epochs: "
        f"train {report.train_losses[-1]:.6f}, "
        f"val {report.val_losses[-1]:.6f}"
    )


@main.command()
@click.option("--percentile", type=float, default=None,
              help="Override the configured threshold percentile.")
@click.pass_obj
@_handle_errors
def score(run: Run, percentile: float | None):
    """Score every process and flag those above the threshold."""
    t0 = time.perf_counter()
    if percentile is not None:
        run.config.setdefault("threshold", {})["percentile"] = percentile
    ds = run.load_ingested()
    cache_path = run.out / "embeddings.bin"
    ckpt_path = run.out / "model.ckpt"
    if not ckpt_path.is_file():
        raise ValidationError(f"{ckpt_path}: no checkpoint; run 'train' first")
    model = load_model(ckpt_path)
    vectors = cache_load(cache_path)
    labels = ds.labels()
    scores = score_all(model, vectors)
    normal_scores = [
        s for s in scores if labels.get(s.process_id) == "normal"
    ]
    pct = float(run.section("threshold").get("percentile", 95.0))
    threshold = select_threshold(normal_scores, pct)

    scores_path = run.out / "scores.csv"
    scores_to_csv(scores_path, scores, threshold, labels)
    thr_path = run.out / "threshold.json"
    thr_path.write_text(
        json.dumps(
            {
                "tau": threshold.tau,
                "method": threshold.method,
                "percentile": threshold.percentile,
                "source_count": threshold.source_count,
            },
            sort_keys=True,
        )
        + "\n",
        encoding="utf-8",
    )
    sc_csv = run.out / "scatter.csv"
    scatter_csv(scores, threshold, sc_csv)
    sc_svg = run.out / "scatter.svg"
    scatter_svg(scores, threshold, sc_svg)
    flagged = sum(1 for s in scores if s.r > threshold.tau)
    run.record(
        "score",
        [cache_path, ckpt_path],
        [scores_path, thr_path, sc_csv, sc_svg],
        time.perf_counter() - t0,
        extra={"tau": threshold.tau, "flagged": flagged},
    )
    click.echo(
        f"scored {len(scores)} processes, tau={threshold.tau:.6g} "
        f"(p{pct:g} of {threshold.source_count} normals), "
        f"flagged {flagged}"
    )


@main.command(name="eval")
@click.pass_obj
@_handle_errors
def eval_cmd(run: Run):
    """Compute AUC and the ROC curve from existing scores."""
    t0 = time.perf_counter()
    scores_path = run.out / "scores.csv"
    if not scores_path.is_file():
        raise ValidationError(f"{scores_path}: no scores; run 'score' first")
    rows = scores_from_csv(scores_path)
    values = [r["score"] for r in rows]
    y = [1 if r["label"] == "attack" else 0 for r in rows]
    curve = roc_curve(values, y)
    roc_path = run.out / "roc.csv"
    roc_to_csv(curve, roc_path)
    roc_fig = run.out / "roc.svg"
    roc_svg(curve, roc_fig)
    run.record("eval", [scores_path], [roc_path, roc_fig],
               time.perf_counter() - t0, extra={"auc": curve.auc})
    click.echo(f"auc={curve.auc:.6f} over {len(rows)} processes")


@main.command()
@click.option("--epochs", type=int, default=None,
              help="Override the per-cell training epoch count.")
@click.pass_obj
@_handle_errors
def grid(run: Run, epochs: int | None):
    """Run the embedding-by-variant grid and write the heatmap."""
    t0 = time.perf_counter()
    if epochs is not None:
        run.config.setdefault("grid", {})["epochs"] = epochs
    ds = run.load_ingested()
    section = run.section("grid")
    specs = [
        EmbedSpec(
            model_id=e["model_id"],
            dim=int(e.get("dim", 128)),
            seed=int(e.get("seed", run.seed)),
            pooling=e.get("pooling"),
        )
        for e in section.get("embeddings", [{"model_id": "hash", "dim": 128}])
    ]
    variants = tuple(section.get("variants", ["ae", "vae", "dae"]))
    self_model = run.section("model")
    result = run_grid(
        ds,
        specs,
        variants,
        master_seed=run.seed,
        phrases=run.phrases(),
        epochs=int(section.get("epochs", run.section("train").get("epochs", 100))),
        batch_size=int(run.section("train").get("batch_size", 64)),
        hidden=tuple(int(h) for h in self_model.get("hidden", [128])),
        latent_dim=int(self_model.get("latent_dim", 32)),
        beta=float(self_model.get("beta", 1.0)),
        noise_sigma=float(self_model.get("noise_sigma", 0.1)),
        attention=bool(self_model.get("attention", False)),
        holdout_fraction=float(section.get("holdout_fraction", 0.2)),
        jobs=run.jobs,
    )
    heat_csv = run.out / "heatmap.csv"
    heatmap_csv(result, heat_csv)
    heat_fig = run.out / "heatmap.svg"
    heatmap_svg(result, heat_fig)
    matrix_path, labels_path = run.dataset_paths()
    extra: dict = {
        "errors": {f"{k[0]}/{k[1]}": v for k, v in sorted(result.errors.items())},
    }
    try:
        llm, variant, value = best_cell(result)
        extra["best"] = {"llm": llm, "variant": variant, "auc": value}
        message = f"best cell: {llm} / {variant} (auc={value:.4f})"
    except ValidationError:
        message = "every grid cell failed"
    run.record("grid", [matrix_path, labels_path], [heat_csv, heat_fig],
               time.perf_counter() - t0, extra=extra)
    click.echo(message)


@main.command()
@click.pass_obj
@_handle_errors
def report(run: Run):
    """Re-render SVG figures from the CSV artifacts already present."""
    t0 = time.perf_counter()
    rendered: list[Path] = []
    inputs: list[Path] = []

    heat_csv = run.out / "heatmap.csv"
    if heat_csv.is_file():
        result = _grid_from_csv(heat_csv)
        fig = run.out / "heatmap.svg"
        heatmap_svg(result, fig)
        rendered.append(fig)
        inputs.append(heat_csv)

    scores_path = run.out / "scores.csv"
    thr_path = run.out / "threshold.json"
    if scores_path.is_file() and thr_path.is_file():
        rows = scores_from_csv(scores_path)
        thr_raw = json.loads(thr_path.read_text(encoding="utf-8"))
        threshold = Threshold(
            tau=float(thr_raw["tau"]),
            method=thr_raw.get("method", "fixed"),
            percentile=thr_raw.get("percentile"),
            source_count=int(thr_raw.get("source_count", 0)),
        )
        scores = [AnomalyScore(r["process_id"], r["score"]) for r in rows]
        values = [r["score"] for r in rows]
        y = [1 if r["label"] == "attack" else 0 for r in rows]
        fig = run.out / "scatter.svg"
        scatter_svg(scores, threshold, fig)
        rendered.append(fig)
        inputs += [scores_path, thr_path]
        if 0 < sum(y) < len(y):
            curve = roc_curve(values, y)
            roc_to_csv(curve, run.out / "roc.csv")
            fig = run.out / "roc.svg"
            roc_svg(curve, fig)
            rendered += [run.out / "roc.csv", fig]

    loss_path = run.out / "loss.csv"
    if loss_path.is_file():
        epochs, tr, va = _loss_from_csv(loss_path)
        fig = run.out / "loss.svg"
        loss_svg(tr, va, fig)
        rendered.append(fig)
        inputs.append(loss_path)

    if not rendered:
        raise ValidationError(f"no renderable artifacts under {run.out}")
    run.record("report", inputs, rendered, time.perf_counter() - t0)
    click.echo(f"rendered {len(rendered)} artifacts under {run.out}")


def _grid_from_csv(path: Path) -> GridResult:
    """Rebuild a GridResult shell from a heatmap CSV (values only)."""
    from .evalviz.grid import CellEval

    lines = [
        ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()
    ]
    if not lines or not lines[0].startswith("variant,"):
        raise ParseError(f"{path}: missing heatmap header")
    llm_ids = tuple(lines[0].split(",")[1:])
    variants = []
    cells = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != len(llm_ids) + 1:
            raise ParseError(f"{path}:{lineno}: wrong column count")
        variants.append(parts[0])
        for llm, cell in zip(llm_ids, parts[1:]):
            value = float(cell)
            if np.isfinite(value):
                cells[(llm, parts[0])] = CellEval(
                    auc=value, n_train=0, n_eval=0, n_attack=0
                )
    result = GridResult(llm_ids=llm_ids, variants=tuple(variants))
    result.cells = cells
    return result


def _loss_from_csv(path: Path) -> tuple[list[int], list[float], list[float]]:
    lines = [
        ln for ln in path.read_text(encoding="utf-8").splitlines() if ln.strip()
    ]
    if not lines or lines[0] != "epoch,train_loss,val_loss":
        raise ParseError(f"{path}: missing loss header")
    epochs, tr, va = [], [], []
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != 3:
            raise ParseError(f"{path}:{lineno}: expected 3 columns")
        epochs.append(int(parts[0]))
        tr.append(float(parts[1]))
        va.append(float(parts[2]))
    return epochs, tr, va


if __name__ == "__main__":
    main()
