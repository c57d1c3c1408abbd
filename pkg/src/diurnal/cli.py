"""Command line interface: ``diurnal {ingest,synth,cluster,analyze,report,run}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import ingest
from .pipeline import (EXIT_INPUT, EXIT_INTERNAL, EXIT_OK, ConfigError, RunConfig, StageError,
                       emit_report, load_bundle, run_pipeline)

log = logging.getLogger("diurnal")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML file with run settings")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("-v", "--verbose", action="store_true")


def _inputs(p: argparse.ArgumentParser) -> None:
    p.add_argument("--posts", help="posts TSV/CSV")
    p.add_argument("--category-map", dest="category_map")
    p.add_argument("--bot-list", dest="bot_list")
    p.add_argument("--coordinates")
    p.add_argument("--tz-rule", dest="tz_rule")
    p.add_argument("--strict", action="store_true", default=None,
                   help="treat degenerate-data warnings as errors (exit 3)")


def _config(args) -> RunConfig:
    overrides = {k: getattr(args, k, None) for k in
                 ("posts", "category_map", "bot_list", "coordinates", "tz_rule", "seed", "threads",
                  "strict", "output_dir")}
    if getattr(args, "formats", None):
        overrides["formats"] = args.formats.split(",")
    synthetic = getattr(args, "synthetic", False)
    if args.config:
        cfg = RunConfig.from_toml(args.config, **overrides)
    else:
        cfg = RunConfig.from_mapping({k: v for k, v in overrides.items() if v is not None})
    if synthetic and cfg.synth is None:
        cfg = replace(cfg, synth={})
    return cfg


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diurnal", description="Diurnal activity and content-ratio analysis")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="clean, categorize and localize a posts file")
    _common(p)
    _inputs(p)
    p.add_argument("--out", required=True, help="cleaned posts TSV")

    p = sub.add_parser("synth", help="generate a synthetic corpus with planted structure")
    _common(p)
    p.add_argument("--out-dir", dest="output_dir", required=True)
    p.add_argument("--users", type=int, default=300, help="users per chronotype population")
    p.add_argument("--posts-per-user", type=int, nargs=2, default=(300, 400))
    p.add_argument("--infrequent", type=int, default=0, help="number of infrequent users")
    p.add_argument("--surge", action="store_true", help="plant a night-time disinformation surge")

    for name, help_ in (("cluster", "cluster users by activity profile"),
                        ("analyze", "run the analysis and write CSV/JSON tables"),
                        ("run", "full pipeline including plots")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        _inputs(p)
        p.add_argument("--out-dir", dest="output_dir")
        p.add_argument("--synthetic", action="store_true", help="use a default synthetic corpus as input")
        if name != "cluster":
            p.add_argument("--formats", help="comma separated subset of csv,json,svg")

    p = sub.add_parser("report", help="render plots from an emitted report directory")
    p.add_argument("report_dir")
    p.add_argument("--formats", default="svg")
    p.add_argument("-v", "--verbose", action="store_true")
    return parser


def _cmd_ingest(args) -> int:
    cfg = _config(args)
    if not cfg.posts:
        raise ConfigError("--posts is required")
    table = ingest.load_table(cfg.posts, cfg.category_map, cfg.bot_list, cfg.coordinates,
                              span=cfg.span, tz_rule=cfg.tz_rule, centroid=cfg.centroid,
                              reject_threshold=cfg.reject_threshold)
    ingest.write_posts(table, args.out)
    print(json.dumps(dict(table.counters), sort_keys=True))
    return EXIT_OK


def _cmd_synth(args) -> int:
    from .synth import Surge, default_spec, synth_generate
    cfg = _config(args)
    spec = default_spec(args.users, tuple(args.posts_per_user), infrequent_users=args.infrequent,
                        surge=Surge(shape="vonmises") if args.surge else None, span=cfg.span)
    result = synth_generate(spec, cfg.seed)
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    ingest.write_posts(result.table, out / "posts.tsv")
    result.labels.rename_axis("user").to_csv(out / "labels.tsv", sep="\t", lineterminator="\n")
    print(f"{len(result.table)} posts, {len(result.labels)} users -> {out}")
    return EXIT_OK


def _cmd_cluster(args) -> int:
    from .pipeline import _cluster, _clustering_tables, _ingest, ReportBundle
    from ._parallel import set_default_workers
    cfg = _config(args)
    set_default_workers(cfg.threads)
    table, labels = _ingest(cfg)
    bundle = ReportBundle(cfg)
    model = _cluster(table, cfg)
    _clustering_tables(bundle, table, model, labels)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for name in ("assignments", "cluster_indices"):
        with open(out / f"{name}.csv", "w", newline="", encoding="utf-8") as fh:
            fh.write(f"# config_hash={cfg.config_hash}\n")
            bundle.tables[name].to_csv(fh, index=False, lineterminator="\n")
    print(f"k={model.k} votes={model.votes} groups={ {g: len(m) for g, m in model.groups().items()} }")
    return EXIT_OK


def _cmd_analyze(args, default_formats=("csv", "json")) -> int:
    cfg = _config(args)
    if not getattr(args, "formats", None):
        if not args.config:
            cfg = replace(cfg, formats=default_formats)
        elif "svg" in default_formats and "svg" not in cfg.formats:
            cfg = replace(cfg, formats=(*cfg.formats, "svg"))
    bundle = run_pipeline(cfg)
    files = emit_report(bundle)
    for w in bundle.warnings:
        log.warning(w)
    print(f"wrote {len(files)} files to {cfg.output_dir} (config {cfg.config_hash})")
    return EXIT_OK


def _cmd_report(args) -> int:
    bundle = load_bundle(args.report_dir)
    files = emit_report(bundle, args.report_dir, set(args.formats.split(",")))
    print(f"wrote {len(files)} files to {args.report_dir}")
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handlers = {"ingest": _cmd_ingest, "synth": _cmd_synth, "cluster": _cmd_cluster,
                "analyze": _cmd_analyze, "report": _cmd_report,
                "run": lambda a: _cmd_analyze(a, ("csv", "json", "svg"))}
    try:
        return handlers[args.command](args)
    except StageError as exc:
        log.error("%s", exc)
        return exc.exit_code
    except (ConfigError, ingest.IngestError, FileNotFoundError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT
    except Exception as exc:  # noqa: BLE001
        log.exception("internal error: %s", exc)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
