"""Command-line client for the calibration service.

Subcommands: validate, synth, run, serve. By default requests are dispatched
to an in-process instance of the service (no server needed); pass --server to
target a running instance instead.
"""

from __future__ import annotations

import argparse
import asyncio
import sys
from pathlib import Path
from typing import Any

import httpx

from . import __version__
from .sweep import DEFAULT_ALPHAS


def _parse_floats(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _parse_ints(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _parse_distribution(text: str) -> dict[str, float]:
    parts = text.split(":")
    if len(parts) != 3 or parts[0] != "uniform":
        raise argparse.ArgumentTypeError(f"expected uniform:LOW:HIGH, got {text!r}")
    return {"low": float(parts[1]), "high": float(parts[2])}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="entrocal", description=__doc__)
    parser.add_argument("--version", action="version", version=f"entrocal {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--server", default=None, help="base URL of a running service (default: in-process)")

    p_validate = sub.add_parser("validate", parents=[common], help="check a dataset file")
    p_validate.add_argument("input", type=Path)
    p_validate.set_defaults(handler=cmd_validate)

    p_synth = sub.add_parser("synth", parents=[common], help="generate a synthetic dataset")
    p_synth.add_argument("output", type=Path)
    p_synth.add_argument("--mode", choices=["exact", "realistic"], default="exact")
    p_synth.add_argument("--n-records", type=int, default=100)
    p_synth.add_argument("--m-candidates", type=int, default=10)
    p_synth.add_argument(
        "--correct-score-distribution", type=_parse_distribution, default={"low": 0.0, "high": 1.0},
        metavar="uniform:LOW:HIGH",
    )
    p_synth.add_argument(
        "--incorrect-score-distribution", type=_parse_distribution, default={"low": 0.5, "high": 1.5},
        metavar="uniform:LOW:HIGH",
    )
    p_synth.add_argument("--correct-fraction", type=float, default=0.5)
    p_synth.add_argument("--pairwise-agreement", action="store_true")
    p_synth.add_argument("--seed", type=int, default=0)
    p_synth.set_defaults(handler=cmd_synth)

    p_run = sub.add_parser("run", parents=[common], help="run an alpha x ratio x seed sweep")
    p_run.add_argument("inputs", type=Path, nargs="+", metavar="input")
    p_run.add_argument("--output-dir", type=Path, required=True)
    p_run.add_argument("--method", choices=["token_entropy", "consistency"], default="token_entropy")
    p_run.add_argument("--entropy-aggregation", choices=["sum", "mean"], default="sum")
    p_run.add_argument("--lambda", dest="lambda_weight", type=float, default=0.5)
    p_run.add_argument("--equivalence-threshold", type=float, default=0.9)
    p_run.add_argument("--include-self", action=argparse.BooleanOptionalAction, default=True)
    p_run.add_argument("--tau", type=float, default=0.9)
    p_run.add_argument("--correctness-threshold", type=float, default=0.7)
    p_run.add_argument("--score-variant", choices=["correct_only", "all_candidates"], default="correct_only")
    p_run.add_argument("--alphas", type=_parse_floats, default=list(DEFAULT_ALPHAS), metavar="A1,A2,...")
    p_run.add_argument("--split-ratios", type=_parse_floats, default=[0.5], metavar="R1,R2,...")
    p_run.add_argument("--seeds", type=_parse_ints, default=None, metavar="S1,S2,...")
    p_run.add_argument("--seed-start", type=int, default=0)
    p_run.add_argument("--seed-count", type=int, default=100)
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--formats", type=lambda s: s.split(","), default=["csv"], metavar="csv[,json]")
    p_run.set_defaults(handler=cmd_run)

    p_serve = sub.add_parser("serve", help="run the HTTP service")
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.set_defaults(handler=cmd_serve)

    return parser


async def _post(server: str | None, path: str, payload: dict[str, Any]) -> tuple[int, Any]:
    if server:
        client = httpx.AsyncClient(base_url=server, timeout=None)
    else:
        from .service import app

        client = httpx.AsyncClient(transport=httpx.ASGITransport(app=app), base_url="http://entrocal.local", timeout=None)
    async with client:
        response = await client.post(path, json=payload)
        try:
            body = response.json()
        except ValueError:
            body = {"detail": response.text}
    return response.status_code, body


def _call(server: str | None, path: str, payload: dict[str, Any]) -> Any:
    status, body = asyncio.run(_post(server, path, payload))
    if status >= 400:
        detail = body.get("detail", body) if isinstance(body, dict) else body
        print(f"error: {detail}", file=sys.stderr)
        raise SystemExit(1)
    return body


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except OSError as exc:
        print(f"error: cannot read {path}: {exc.strerror or exc}", file=sys.stderr)
        raise SystemExit(1) from exc


def cmd_validate(args) -> int:
    content = _read_text(args.input)
    body = _call(args.server, "/validate", {"content": content})
    if body["ok"]:
        print(f"{body['n_records']} records OK")
        return 0
    for violation in body["violations"]:
        loc = f"line {violation['line']}: " if violation.get("line") is not None else ""
        path = f"{violation['path']}: " if violation.get("path") else ""
        print(f"{loc}{path}{violation['message']}")
    return 1


def cmd_synth(args) -> int:
    payload = {
        "mode": args.mode,
        "n_records": args.n_records,
        "m_candidates": args.m_candidates,
        "correct_score_distribution": args.correct_score_distribution,
        "incorrect_score_distribution": args.incorrect_score_distribution,
        "correct_fraction": args.correct_fraction,
        "pairwise_agreement": args.pairwise_agreement,
        "seed": args.seed,
    }
    body = _call(args.server, "/synth", payload)
    args.output.parent.mkdir(parents=True, exist_ok=True)
    args.output.write_text(body["content"], encoding="utf-8")
    print(f"wrote {body['n_records']} records to {args.output}")
    return 0


def cmd_run(args) -> int:
    pieces = []
    for path in args.inputs:
        text = _read_text(path)
        pieces.append(text if text.endswith("\n") or not text else text + "\n")
    dataset = "".join(pieces)
    payload = {
        "dataset": dataset,
        "method": args.method,
        "entropy_aggregation": args.entropy_aggregation,
        "lambda": args.lambda_weight,
        "equivalence_threshold": args.equivalence_threshold,
        "include_self": args.include_self,
        "tau": args.tau,
        "correctness_threshold": args.correctness_threshold,
        "score_variant": args.score_variant,
        "alphas": args.alphas,
        "split_ratios": args.split_ratios,
        "seed_start": args.seed_start,
        "seed_count": args.seed_count,
        "workers": args.workers,
        "formats": args.formats,
    }
    if args.seeds is not None:
        payload["seeds"] = args.seeds
    body = _call(args.server, "/run", payload)
    args.output_dir.mkdir(parents=True, exist_ok=True)
    for name in sorted(body["files"]):
        target = args.output_dir / name
        target.write_text(body["files"][name], encoding="utf-8")
        print(f"wrote {target}")
    print(f"completed {body['n_trials']} trials")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.handler(args)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
