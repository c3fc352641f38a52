"""Command-line interface.

Exit codes: 0 success, 1 usage or configuration error, 2 generation finished
but the failure rate crossed the configured threshold, 3 backend (gateway or
auth) failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import BadConfig, PipelineConfig, apply_overrides, load_config
from .dataset import BadFractions, DuplicateId, IOFailure
from .evaluation import EmptyInput
from .gateway import GatewayError
from .pipeline import (
    PipelineError,
    cmd_eval,
    cmd_export_training,
    cmd_generate,
    cmd_stats,
    cmd_topics,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARTIAL = 2
EXIT_GATEWAY = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; this CLI reserves 2 for partial
    # generation failures, so remap.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML or JSON config file")
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--master-seed", dest="master_seed", type=int)
    p.add_argument(
        "--count", type=int, help="figures per chart type (overrides all counts)"
    )
    p.add_argument(
        "--gateway-mode", dest="gateway_mode", choices=("mock", "real")
    )
    p.add_argument("--endpoint-url", dest="endpoint_url")
    p.add_argument("--model", dest="model")
    p.add_argument("--api-key-env", dest="api_key_env")
    p.add_argument("--mock-seed", dest="mock_seed", type=int)
    p.add_argument("--parallelism", type=int)


def _build_parser() -> _Parser:
    parser = _Parser(prog="chartforge", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("topics", parents=[], help="build per-chart-type topic pools")
    _add_config_flags(p)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--budget-factor", dest="budget_factor", type=int)

    p = sub.add_parser("generate", help="generate figures, QA, and the manifest")
    _add_config_flags(p)
    p.add_argument("--qa-mode", dest="qa_mode", choices=("template", "llm", "both"))
    p.add_argument("--k-template", dest="k_template", type=int)
    p.add_argument(
        "--no-verify", dest="verify", action="store_false", default=None,
        help="skip oracle verification of backend QA",
    )
    p.add_argument(
        "--drop-unverified", dest="drop_unverified", action="store_true", default=None
    )
    p.add_argument(
        "--fixed-appearance", dest="randomize_appearance", action="store_false",
        default=None, help="use one constant style per chart type",
    )
    p.add_argument("--max-attempts", dest="max_attempts", type=int)
    p.add_argument("--failure-threshold", dest="failure_threshold", type=float)

    p = sub.add_parser("stats", help="summarize a manifest")
    p.add_argument("target", help="run directory or manifest.jsonl")
    p.add_argument("--output", help="also write the stats JSON here")

    p = sub.add_parser("eval", help="score predictions against gold QA")
    p.add_argument("--predictions", required=True)
    p.add_argument("--gold", required=True, help="manifest.jsonl or QA JSONL")
    p.add_argument("--tolerance", type=float, default=0.05)
    p.add_argument("--output", help="also write the report JSON here")

    p = sub.add_parser("export-training", help="flatten a manifest into training JSONL")
    p.add_argument("--manifest", required=True, help="run directory or manifest.jsonl")
    p.add_argument("--output", required=True)
    p.add_argument(
        "--prompt-token", dest="prompt_token", default="both",
        choices=("chartqa", "synthetic_qa", "both"),
    )
    p.add_argument("--task", default="qa", choices=("qa", "json-parse"))

    return parser


def _load_cfg(args: argparse.Namespace) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {
        key: getattr(args, key)
        for key in (
            "output_dir",
            "master_seed",
            "count",
            "gateway_mode",
            "endpoint_url",
            "model",
            "api_key_env",
            "mock_seed",
            "parallelism",
            "batch_size",
            "budget_factor",
            "qa_mode",
            "k_template",
            "verify",
            "drop_unverified",
            "randomize_appearance",
            "max_attempts",
            "failure_threshold",
        )
        if hasattr(args, key)
    }
    return apply_overrides(cfg, overrides)


def _emit(obj: dict, output: str | None = None) -> None:
    text = json.dumps(obj, sort_keys=True, indent=2)
    print(text)
    if output:
        from .util import atomic_write_text

        atomic_write_text(output, text + "\n")


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "topics":
            summary = cmd_topics(_load_cfg(args))
            _emit(summary)
            return EXIT_OK
        if args.command == "generate":
            summary = cmd_generate(_load_cfg(args))
            _emit(summary.to_dict())
            return EXIT_PARTIAL if summary.over_threshold else EXIT_OK
        if args.command == "stats":
            stats, problems = cmd_stats(args.target)
            payload = stats.to_dict()
            if problems:
                payload["bad_lines"] = [list(p) for p in problems]
            _emit(payload, args.output)
            return EXIT_OK
        if args.command == "eval":
            report = cmd_eval(args.predictions, args.gold, tolerance=args.tolerance)
            _emit(report.to_dict(), args.output)
            return EXIT_OK
        if args.command == "export-training":
            count = cmd_export_training(
                args.manifest, args.output,
                prompt_token=args.prompt_token, task=args.task,
            )
            _emit({"examples": count, "output": args.output})
            return EXIT_OK
        parser.error(f"unknown command {args.command!r}")
    except (
        BadConfig,
        PipelineError,
        ValueError,
        EmptyInput,
        DuplicateId,
        IOFailure,
        BadFractions,
    ) as exc:
        print(f"chartforge: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GatewayError as exc:
        print(f"chartforge: gateway error: {exc}", file=sys.stderr)
        return EXIT_GATEWAY
    except OSError as exc:
        print(f"chartforge: io error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
