"""Console entry point: run the bridge under uvicorn."""

from __future__ import annotations

import argparse

import uvicorn

from .service import create_app


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="trialscreen-bridge",
        description="Serve transformer fine-tune/predict endpoints.",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8400)
    parser.add_argument(
        "--stub", action="store_true",
        help="no-learning mode: validate requests, score every text 0.5",
    )
    parser.add_argument("--models-dir", help="where fine-tuned models are stored")
    parser.add_argument(
        "--default-model", help="checkpoint used when requests omit model_name"
    )
    args = parser.parse_args(argv)

    app = create_app(
        stub=args.stub or None,
        model_root=args.models_dir,
        default_model=args.default_model,
    )
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
