"""`af` command-line entry point wiring the toolkit together.

stdout carries exactly one machine-readable JSON summary per invocation; all
progress and warnings go to stderr. Exit codes: 0 success, 1 validation error,
2 external-service failure.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import click

from . import export as export_mod
from . import harness, pope, qagen, review
from .corpus import (
    ATTRIBUTE,
    OBJECT,
    RELATION,
    QAItem,
    TableSet,
    load_category_table,
    load_corpus,
    read_jsonl,
    write_jsonl,
)
from .errors import AnswerabilityError, GatewayError, PartialRun
from .gateway import (
    ENV_CACHE_DIR,
    EndpointRegistry,
    Gateway,
    HttpTransport,
    MockBackend,
)
from .lexicon import DEFAULT_REFUSAL_PHRASES, load_lexicon
from .perturb import AlteredDescription, LexiconTagger, load_synonyms, perturb_corpus

log = logging.getLogger("af")


class Context:
    """Resolved global configuration shared by the subcommands."""

    def __init__(
        self,
        registry_path: str | None,
        cache_dir: str | None,
        mock_playbook: str | None,
        seed: int | None,
        lexicon_path: str | None,
        template_dir: str | None,
        concurrency: int,
    ):
        self.registry = (
            EndpointRegistry.load(registry_path) if registry_path else EndpointRegistry.from_env()
        )
        self.cache_dir = cache_dir or os.environ.get(ENV_CACHE_DIR)
        self.mock_playbook = mock_playbook
        self.seed = seed
        self.lexicon = load_lexicon(lexicon_path) if lexicon_path else DEFAULT_REFUSAL_PHRASES
        self.template_dir = template_dir
        self.concurrency = concurrency
        self._gateway: Gateway | None = None

    def gateway(self) -> Gateway:
        if self._gateway is None:
            if self.mock_playbook:
                transport = MockBackend.from_file(self.mock_playbook)
            else:
                transport = HttpTransport(self.registry)
            self._gateway = Gateway(
                transport, cache_dir=self.cache_dir, max_in_flight=self.concurrency
            )
        return self._gateway

    def model_for(self, endpoint_id: str) -> str:
        return self.registry.model_for(endpoint_id, default="mock")

    def require_seed(self) -> int:
        if self.seed is None:
            raise click.UsageError("--seed is required for this subcommand")
        return self.seed


def emit(summary: dict) -> None:
    sys.stdout.write(json.dumps(summary, ensure_ascii=False) + "\n")


@click.group(name="af")
@click.option("--registry", "registry_path", type=click.Path(exists=True), default=None,
              help="Endpoint registry JSON file.")
@click.option("--cache-dir", default=None, help="Response cache directory (or AF_CACHE_DIR).")
@click.option("--mock", "mock_playbook", type=click.Path(exists=True), default=None,
              help="Playbook file; substitutes the mock backend for every endpoint.")
@click.option("--seed", type=int, default=None, help="Global seed for perturb/generate/build.")
@click.option("--lexicon", "lexicon_path", type=click.Path(exists=True), default=None,
              help="Refusal lexicon file, one phrase per line.")
@click.option("--templates", "template_dir", type=click.Path(exists=True), default=None,
              help="Directory of prompt template overrides.")
@click.option("--concurrency", type=int, default=4, show_default=True)
@click.pass_context
def cli(ctx, registry_path, cache_dir, mock_playbook, seed, lexicon_path, template_dir, concurrency):
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(levelname)s %(message)s")
    ctx.obj = Context(
        registry_path, cache_dir, mock_playbook, seed, lexicon_path, template_dir, concurrency
    )


def _load_tables(object_table, relation_table, attribute_table) -> TableSet:
    tables = TableSet()
    if object_table:
        tables.tables[OBJECT] = load_category_table(object_table, OBJECT)
    if relation_table:
        tables.tables[RELATION] = load_category_table(relation_table, RELATION)
    if attribute_table:
        tables.tables[ATTRIBUTE] = load_category_table(attribute_table, ATTRIBUTE)
    return tables


@cli.command()
@click.option("--triplets", type=click.Path(exists=True), default=None)
@click.option("--captions", type=click.Path(exists=True), default=None)
@click.option("--object-table", type=click.Path(exists=True), default=None)
@click.option("--relation-table", type=click.Path(exists=True), default=None)
@click.option("--attribute-table", type=click.Path(exists=True), default=None)
@click.option("--synonyms", type=click.Path(exists=True), default=None)
@click.option("--per-description", type=int, default=1, show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.pass_obj
def perturb(cfg, triplets, captions, object_table, relation_table, attribute_table,
            synonyms, per_description, out):
    """Alter descriptions: one same-category element swap per output."""
    seed = cfg.require_seed()
    if not triplets and not captions:
        raise click.UsageError("provide --triplets and/or --captions")
    tables = _load_tables(object_table, relation_table, attribute_table)
    synonym_map = load_synonyms(synonyms) if synonyms else None
    altered = []
    if triplets:
        records = load_corpus(triplets, "triplets", tables=tables)
        altered.extend(perturb_corpus(records, tables, seed, per_description, synonym_map))
    if captions:
        records = load_corpus(captions, "captions", tables=tables)
        tagger = LexiconTagger(tables.get(ATTRIBUTE))
        altered.extend(
            perturb_corpus(records, tables, seed, per_description, synonym_map, tagger=tagger)
        )
    n = write_jsonl((ad.to_dict() for ad in altered), out)
    emit({"command": "perturb", "written": n, "out": str(out)})


@cli.command()
@click.option("--alterations", required=True, type=click.Path(exists=True))
@click.option("--endpoint", default="generator", show_default=True)
@click.option("--subtype-map", type=click.Path(exists=True), default=None,
              help="JSON map of relation category -> relation subtype.")
@click.option("--out", required=True, type=click.Path(), help="GenerationOutcome lines.")
@click.option("--dataset-out", type=click.Path(), default=None,
              help="Accepted items are additionally appended here as QA items.")
@click.pass_obj
def generate(cfg, alterations, endpoint, subtype_map, out, dataset_out):
    """Generate unanswerable QA pairs from altered descriptions."""
    cfg.require_seed()
    backend = cfg.gateway()
    subtypes = json.loads(Path(subtype_map).read_text()) if subtype_map else None
    outcomes = []
    accepted = []
    for raw in read_jsonl(alterations):
        ad = AlteredDescription.from_dict(raw)
        video = ad.video
        if video is None:
            from .corpus import VideoRef

            video = VideoRef(id=f"video-{ad.base_id}", source_dataset="unknown")
        outcome = qagen.generate_unanswerable_qa(
            ad,
            video,
            backend,
            endpoint_id=endpoint,
            model=cfg.model_for(endpoint),
            template_dir=cfg.template_dir,
            refusal_phrases=cfg.lexicon,
            subtype_map=subtypes,
        )
        outcomes.append(outcome)
        if outcome.item is not None:
            accepted.append(outcome.item)
    write_jsonl((o.to_dict() for o in outcomes), out)
    if dataset_out:
        write_jsonl((i.to_dict() for i in accepted), dataset_out)
    by_status: dict[str, int] = {}
    for o in outcomes:
        by_status[o.status] = by_status.get(o.status, 0) + 1
    emit({"command": "generate", "outcomes": by_status, "accepted": len(accepted)})


@cli.group()
def dataset():
    """Dataset assembly."""


@dataset.command("build")
@click.option("--unanswerable", required=True, type=click.Path(exists=True))
@click.option("--answerable", required=True, type=click.Path(exists=True))
@click.option("--per-category", type=int, required=True)
@click.option("--out", required=True, type=click.Path())
@click.pass_obj
def dataset_build(cfg, unanswerable, answerable, per_category, out):
    """Assemble a balanced eval/train set: per-category unanswerable + equal answerable."""
    seed = cfg.require_seed()
    unans = load_corpus(unanswerable, "qa_items", refusal_phrases=cfg.lexicon)
    ans = load_corpus(answerable, "qa_items", refusal_phrases=cfg.lexicon)
    items = qagen.build_balanced_dataset(unans, ans, per_category, seed)
    n = write_jsonl((i.to_dict() for i in items), out)
    emit({"command": "dataset build", "written": n, "out": str(out)})


def _run_id_for(dataset_path: str, endpoint: str, judge_mode: str) -> str:
    h = hashlib.sha256()
    h.update(Path(dataset_path).read_bytes())
    h.update(f"|{endpoint}|{judge_mode}".encode())
    return h.hexdigest()[:12]


@cli.command()
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--endpoint", default="model", show_default=True)
@click.option("--judge", "judge_mode", type=click.Choice(["llm", "rules"]), default="rules",
              show_default=True)
@click.option("--judge-endpoint", default="judge", show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.pass_obj
def run(cfg, dataset_path, endpoint, judge_mode, judge_endpoint, out):
    """Evaluate a model over a dataset; judged responses land in a run file."""
    items = load_corpus(dataset_path, "qa_items", refusal_phrases=cfg.lexicon)
    backend = cfg.gateway()
    record = harness.run_eval(
        items,
        backend,
        endpoint_id=endpoint,
        model=cfg.model_for(endpoint),
        judge_mode=judge_mode,
        judge_backend=backend,
        judge_endpoint_id=judge_endpoint,
        judge_model=cfg.model_for(judge_endpoint),
        run_id=_run_id_for(dataset_path, endpoint, judge_mode),
        out_path=out,
        concurrency=cfg.concurrency,
        lexicon=cfg.lexicon,
        template_dir=cfg.template_dir,
    )
    emit({"command": "run", "items": len(record.responses), "out": str(out)})


@cli.command()
@click.option("--pre", "pre_path", required=True, type=click.Path(exists=True))
@click.option("--post", "post_path", required=True, type=click.Path(exists=True))
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_prefix", type=click.Path(), default=None,
              help="Writes <out>.json and <out>_pareto.csv.")
@click.pass_obj
def metrics(cfg, pre_path, post_path, dataset_path, out_prefix):
    """Pair two runs and compute the transition metric suite."""
    items = load_corpus(dataset_path, "qa_items", refusal_phrases=cfg.lexicon)
    pre = harness.read_run(pre_path)
    post = harness.read_run(post_path)
    counts = harness.tally(pre, post, items)
    report = harness.compute_metrics(counts, post, items)
    if out_prefix:
        Path(f"{out_prefix}.json").write_text(
            json.dumps(report.to_dict(), indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
        )
        Path(f"{out_prefix}_pareto.csv").write_text(
            harness.pareto_csv(report, post.run_id), encoding="utf-8"
        )
    emit({"command": "metrics", **report.to_dict()})


@cli.command("pope")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--endpoint", default="model", show_default=True)
@click.option("--decomposer", default="decomposer", show_default=True)
@click.option("--expected", "expected_mode", type=click.Choice(["provenance", "verifier"]),
              default="provenance", show_default=True)
@click.option("--out", required=True, type=click.Path())
@click.option("--cost-report", "cost_path", type=click.Path(), default=None)
@click.pass_obj
def pope_cmd(cfg, dataset_path, endpoint, decomposer, expected_mode, out, cost_path):
    """Existence-probe splitting baseline; emits a harness-compatible run file."""
    items = load_corpus(dataset_path, "qa_items", refusal_phrases=cfg.lexicon)
    backend = cfg.gateway()
    record, outcomes = pope.run_pope(
        items,
        backend,
        model_endpoint_id=endpoint,
        model=cfg.model_for(endpoint),
        decomposer_endpoint_id=decomposer,
        decomposer_model=cfg.model_for(decomposer),
        expected_mode=expected_mode,
        run_id=_run_id_for(dataset_path, endpoint, "pope"),
        lexicon=cfg.lexicon,
        template_dir=cfg.template_dir,
    )
    harness.write_run(record, out)
    # Direct evaluation would ask each question once.
    cost = pope.cost_report(outcomes, direct_baseline_calls=len(items))
    if cost_path:
        Path(cost_path).write_text(json.dumps(cost, indent=2) + "\n", encoding="utf-8")
    emit({"command": "pope", "items": len(record.responses), "cost": cost})


@cli.group("export")
def export_group():
    """Training-file export."""


@export_group.command("sft")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--out", required=True, type=click.Path())
@click.pass_obj
def export_sft_cmd(cfg, dataset_path, out):
    items = load_corpus(dataset_path, "qa_items", refusal_phrases=cfg.lexicon)
    n = export_mod.export_sft(items, out)
    emit({"command": "export sft", "written": n, "out": str(out)})


@export_group.command("dpo")
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--run", "run_path", type=click.Path(exists=True), default=None,
              help="Run file supplying real score-0 rejected responses.")
@click.option("--out", required=True, type=click.Path())
@click.pass_obj
def export_dpo_cmd(cfg, dataset_path, run_path, out):
    items = load_corpus(dataset_path, "qa_items", refusal_phrases=cfg.lexicon)
    rejected_run = harness.read_run(run_path) if run_path else None
    n = export_mod.export_dpo(items, out, rejected_run=rejected_run, lexicon=cfg.lexicon)
    emit({"command": "export dpo", "written": n, "out": str(out),
          "rejected_source": "run" if run_path else "synthetic"})


@cli.group("review")
def review_group():
    """Human curation service."""


@review_group.command("serve")
@click.option("--queue", "queue_path", required=True, type=click.Path(exists=True))
@click.option("--log", "log_path", required=True, type=click.Path())
@click.option("--port", type=int, default=8010, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui-dir", type=click.Path(exists=True), default=None)
def review_serve(queue_path, log_path, port, host, ui_dir):
    review.serve(queue_path, log_path, port=port, host=host, ui_dir=ui_dir)


@cli.group("cache")
def cache_group():
    """Response cache maintenance."""


@cache_group.command("stats")
@click.pass_obj
def cache_stats(cfg):
    emit({"command": "cache stats", **cfg.gateway().cache_stats()})


@cache_group.command("clear")
@click.pass_obj
def cache_clear(cfg):
    removed = cfg.gateway().clear_cache()
    emit({"command": "cache clear", "removed": removed})


def main(argv: list[str] | None = None) -> int:
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as e:
        e.show(file=sys.stderr)
        return 1
    except click.ClickException as e:
        e.show(file=sys.stderr)
        return 1
    except click.exceptions.Abort:
        return 1
    except PartialRun as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except GatewayError as e:
        sys.stderr.write(f"error: {e}\n")
        return 2
    except AnswerabilityError as e:
        sys.stderr.write(f"error: {e}\n")
        return 1
    except (OSError, ValueError, KeyError) as e:
        sys.stderr.write(f"error: {e}\n")
        return 1


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
