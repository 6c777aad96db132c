"""``vforge <stage> --config pipeline.toml [--force] [--jobs N]``

Exit codes: 0 ok, 1 internal error, 2 missing input, 3 bad config.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .pipeline import STAGES, MissingInputError, run_stage

EXIT_OK, EXIT_INTERNAL, EXIT_MISSING, EXIT_CONFIG = 0, 1, 2, 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vforge", description="Version-identification dataset pipeline.")
    p.add_argument("stage", choices=STAGES + ("all",))
    p.add_argument("--config", required=True, type=Path, help="pipeline.toml")
    p.add_argument("--force", action="store_true", help="rerun even when cached")
    p.add_argument("--jobs", type=int, default=1, help="worker processes cap")
    p.add_argument("--artist-graph-cache", type=Path, default=None,
                   help="pickle of the frozen artist graph, keyed by dump checksum")
    p.add_argument("--noise-label", default=None, help="eval: label of noise items")
    p.add_argument("--self-mask", dest="self_mask", action="store_true", default=None,
                   help="eval: exclude each query from its own candidates (default)")
    p.add_argument("--no-self-mask", dest="self_mask", action="store_false")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("error: --jobs: must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        config = load_config(args.config)
        if args.noise_label is not None:
            config.eval.noise_label = args.noise_label
        if args.self_mask is not None:
            config.eval.self_mask = args.self_mask
        stages = STAGES[:-1] if args.stage == "all" else (args.stage,)
        for stage in stages:
            if stage in ("match", "dedupe") and config.paths.candidates is None and args.stage == "all":
                continue
            report = run_stage(stage, config, force=args.force, jobs=args.jobs,
                               graph_cache=args.artist_graph_cache)
            print(json.dumps(report.to_dict(), sort_keys=True))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MissingInputError as exc:
        print(f"missing input: {exc.artifact}", file=sys.stderr)
        return EXIT_MISSING
    except FileNotFoundError as exc:
        print(f"missing input: {exc.filename}", file=sys.stderr)
        return EXIT_MISSING
    except Exception as exc:  # noqa: BLE001
        logging.getLogger("vforge").exception("internal error")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
