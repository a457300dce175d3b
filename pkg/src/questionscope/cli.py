"""qscope: command-line front end for the interrogative-stance pipeline."""
import json
import logging
import sys

import click

from . import pipeline
from .answers import EmbeddingError
from .config import ConfigError, load_config
from .corpus import DataError
from .providers import ProviderError
from .triangulate import SamplePlan

log = logging.getLogger(__name__)

EXIT_CONFIG = 2
EXIT_PROVIDER = 3
EXIT_DATA = 4


def _fail(code: int, kind: str, message: str) -> None:
    click.echo(json.dumps({"error": kind, "message": message}), err=True)
    sys.exit(code)


def _run(stage, *args, **kwargs):
    try:
        result = stage(*args, **kwargs)
    except ConfigError as e:
        _fail(EXIT_CONFIG, "config", str(e))
    except ProviderError as e:
        _fail(EXIT_PROVIDER, "provider", str(e))
    except (DataError, EmbeddingError) as e:
        _fail(EXIT_DATA, "data", str(e))
    else:
        if result is not None:
            click.echo(json.dumps(result, default=str, sort_keys=True))


def _config(ctx, **overrides):
    try:
        return load_config(ctx.obj.get("config_path"), **overrides)
    except ConfigError as e:
        _fail(EXIT_CONFIG, "config", str(e))


common_options = [
    click.option("--out-dir", default=None, help="Stage output directory."),
    click.option("--seed", type=int, default=None, help="Random seed."),
    click.option("--cassette", default=None, help="Provider cassette file."),
    click.option("--threads", type=int, default=None, help="Worker threads."),
]


def with_common(fn):
    for option in reversed(common_options):
        fn = option(fn)
    return fn


@click.group()
@click.option("--config", "config_path", default=None,
              help="Path to a key = value config file.")
@click.option("-v", "--verbose", is_flag=True, help="Enable debug logging.")
@click.pass_context
def main(ctx, config_path, verbose):
    """Detect, type, and triangulate interrogative stances in French news."""
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING)
    ctx.ensure_object(dict)
    ctx.obj["config_path"] = config_path


@main.command()
@click.option("--articles", required=True, help="Articles JSONL file.")
@click.option("--ontology", default=None, help="Outlet ontology CSV.")
@click.option("--meta-topic-map", default=None, help="topic_id,meta_topic CSV.")
@click.option("--lenient", is_flag=True, default=None,
              help="Skip malformed lines instead of failing.")
@with_common
@click.pass_context
def ingest(ctx, **kwargs):
    """Parse articles, join the ontology, and segment into sentences."""
    cfg = _config(ctx, **kwargs)
    _run(lambda: pipeline.stage_ingest(cfg).__dict__)


@main.command()
@with_common
@click.pass_context
def candidates(ctx, **kwargs):
    """Flag rule-based interrogative candidates and calibration picks."""
    cfg = _config(ctx, **kwargs)
    _run(pipeline.stage_candidates, cfg)


@main.command("pseudo-label")
@click.option("--binary-url", default=None, help="Binary teacher endpoint.")
@click.option("--stance-url", default=None, help="Stance teacher endpoint.")
@with_common
@click.pass_context
def pseudo_label(ctx, **kwargs):
    """Teacher-label candidates and calibration picks."""
    cfg = _config(ctx, **kwargs)
    _run(pipeline.stage_pseudo_label, cfg)


@main.command("export-train")
@click.option("--gold", default=None, help="Gold units JSONL (articles excluded).")
@with_common
@click.pass_context
def export_train(ctx, **kwargs):
    """Export high-confidence pseudo-labels as train/validation sets."""
    cfg = _config(ctx, **kwargs)
    _run(pipeline.stage_export_train, cfg)


@main.command()
@click.option("--binary-url", default=None)
@click.option("--stance-url", default=None)
@with_common
@click.pass_context
def infer(ctx, **kwargs):
    """Two-step student inference over every sentence."""
    cfg = _config(ctx, **kwargs)
    _run(lambda: {"predictions": pipeline.stage_infer(cfg)})


@main.command()
@click.option("--embed-url", default=None, help="Embedding endpoint.")
@with_common
@click.pass_context
def answers(ctx, **kwargs):
    """Group question runs and search for answer spans."""
    cfg = _config(ctx, **kwargs)
    _run(pipeline.stage_answers, cfg)


@main.command()
@click.option("--ner-url", default=None, help="NER endpoint.")
@with_common
@click.pass_context
def entities(ctx, **kwargs):
    """Annotate question contexts and answer spans with entity mentions."""
    cfg = _config(ctx, **kwargs)
    _run(pipeline.stage_entities, cfg)


@main.command()
@with_common
@click.pass_context
def indices(ctx, **kwargs):
    """Compute per-article interrogativity and dialogicity indices."""
    cfg = _config(ctx, **kwargs)
    _run(lambda: {"articles": pipeline.stage_indices(cfg)})


@main.command()
@click.option("--kind", type=click.Choice(["confidence", "similarity"]),
              required=True)
@with_common
@click.pass_context
def sweep(ctx, kind, **kwargs):
    """Threshold sensitivity sweeps over stored predictions and scores."""
    cfg = _config(ctx, **kwargs)
    _run(lambda: {"written": pipeline.stage_sweep(cfg, kind)})


@main.command()
@click.option("--table", type=click.Choice(pipeline.REPORT_TABLES), default=None,
              help="Emit one table; default emits all available.")
@with_common
@click.pass_context
def report(ctx, table, **kwargs):
    """Emit the report CSV tables."""
    cfg = _config(ctx, **kwargs)

    def run_all():
        written = []
        for name in pipeline.REPORT_TABLES if table is None else [table]:
            try:
                written.append(pipeline.stage_report(cfg, name))
            except DataError:
                if table is not None:
                    raise
                log.warning("skipping table %s: prior stage missing", name)
        return {"written": written}

    _run(run_all)


@main.command()
@click.option("--main-eval", type=int, default=400, show_default=True)
@click.option("--double-coded", type=int, default=100, show_default=True)
@click.option("--extension-per-annotator", type=int, default=100, show_default=True)
@with_common
@click.pass_context
def sample(ctx, main_eval, double_coded, extension_per_annotator, **kwargs):
    """Draw the stratified annotation sample."""
    cfg = _config(ctx, **kwargs)
    plan = SamplePlan(main_eval=main_eval, double_coded=double_coded,
                      extension_per_annotator=extension_per_annotator)
    _run(lambda: {"sampled": pipeline.stage_sample(cfg, plan)})


@main.command("spot-check")
@click.option("--n-answered", type=int, default=40, show_default=True)
@click.option("--n-unanswered", type=int, default=10, show_default=True)
@with_common
@click.pass_context
def spot_check(ctx, n_answered, n_unanswered, **kwargs):
    """Draw the manual answer-heuristic audit sample."""
    cfg = _config(ctx, **kwargs)
    _run(lambda: {"written": pipeline.stage_spot_check(
        cfg, n_answered=n_answered, n_unanswered=n_unanswered)})


@main.command("eval")
@click.option("--gold", required=True, help="Gold units JSONL file.")
@with_common
@click.pass_context
def eval_cmd(ctx, **kwargs):
    """Evaluate predictions against gold units and compute agreement."""
    cfg = _config(ctx, **kwargs)
    _run(pipeline.stage_eval, cfg)


@main.command()
@click.option("--gold", default=None, help="Gold units JSONL store.")
@click.option("--addr", default=None, help="host:port to bind (QS_SERVE_ADDR).")
@with_common
@click.pass_context
def serve(ctx, addr, **kwargs):
    """Run the annotation service."""
    cfg = _config(ctx, serve_addr=addr, **kwargs)
    try:
        import uvicorn

        from .api import create_app
        app = create_app(cfg)
        host, _, port = cfg.serve_addr.partition(":")
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8310))
    except ConfigError as e:
        _fail(EXIT_CONFIG, "config", str(e))
    except (DataError, ValueError) as e:
        _fail(EXIT_DATA, "data", str(e))


if __name__ == "__main__":
    main()
