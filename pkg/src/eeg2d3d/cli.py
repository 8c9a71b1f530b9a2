"""Command-line client for the pipeline.

Each subcommand builds the matching service request and executes it
in-process; with --server it posts the request to a running service
instead. Exit codes: 0 success, 1 usage, 2 data error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Sequence

from .errors import DataError, NumericalError
from .parallel import THREADS_ENV


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # exit 1 on usage errors
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_manifest_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--manifest-2d", action="append", required=True,
                   help="2D recording manifest (repeat per subject)")
    p.add_argument("--manifest-3d", action="append", required=True,
                   help="3D recording manifest (repeat per subject)")


def _add_cv_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--k", type=int, default=10, help="cross-validation folds")
    p.add_argument("--cv-seed", type=int, default=5)
    p.add_argument("--c-grid", type=float, nargs="+", default=[0.1, 1.0, 10.0, 100.0])
    p.add_argument("--sigma-scales", type=float, nargs="+",
                   default=[0.25, 0.5, 1.0, 2.0, 4.0],
                   help="multiples of the median pairwise distance")
    p.add_argument("--max-components", type=int, default=8)


def build_parser() -> _Parser:
    parser = _Parser(prog="eeg2d3d",
                     description="EEG 2D-vs-3D video-watching analysis pipeline")
    parser.add_argument("--server", default=None,
                        help="base URL of a running service (default: run in-process)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic recordings")
    p.add_argument("--profile", choices=["paper", "flat"], default="paper")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--subjects", default="s01", help="comma-separated subject ids")
    p.add_argument("--base-noise", type=float, default=4.0)
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("validate", help="check a recording against the paradigm")
    p.add_argument("--manifest", required=True)

    p = sub.add_parser("bandselect", help="band-difference matrix and dominant bands")
    _add_manifest_args(p)
    p.add_argument("--window", type=int, default=512)
    p.add_argument("--hop", type=int, default=1)
    p.add_argument("--threshold", type=float, default=2.0)
    p.add_argument("--n-select", type=int, default=2)
    p.add_argument("--out", default=None, help="write band_diff.csv + selection.json here")
    p.add_argument("--dump-spectrograms", default=None, metavar="DIR",
                   help="debug: per-channel spectrogram CSVs (rows=frames, cols=bins)")

    p = sub.add_parser("features", help="epoch feature datasets (train/test CSVs)")
    _add_manifest_args(p)
    p.add_argument("--channels", default=None, help="comma-separated subset (default: all)")
    p.add_argument("--bands", default="delta,theta")
    p.add_argument("--window", type=int, default=512)
    p.add_argument("--hop", type=int, default=1)
    p.add_argument("--split-seed", type=int, default=20)
    p.add_argument("--chronological", action="store_true")
    p.add_argument("--out", required=True, help="output directory")

    p = sub.add_parser("train", help="k-fold hyperparameter selection + final fit")
    p.add_argument("--dataset", required=True, help="training-partition CSV")
    p.add_argument("--classifier", choices=["plsr", "svm"], default="svm")
    _add_cv_args(p)
    p.add_argument("--model-out", default=None, help="write the fitted model JSON here")

    p = sub.add_parser("evaluate", help="per-channel ranking + combination search")
    _add_manifest_args(p)
    p.add_argument("--sel-hop", type=int, default=1)
    p.add_argument("--feat-hop", type=int, default=1)
    p.add_argument("--split-seed", type=int, default=20)
    _add_cv_args(p)
    p.add_argument("--accuracy-floor", type=float, default=0.60)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--out", required=True)

    p = sub.add_parser("report", help="regenerate the CSV bundle from summary.json")
    p.add_argument("--summary", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("all", help="full pipeline: synth-or-load through reports")
    p.add_argument("--synth-profile", choices=["paper", "flat"], default="paper")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--subjects", default="s01")
    p.add_argument("--manifest-2d", action="append", default=None)
    p.add_argument("--manifest-3d", action="append", default=None)
    p.add_argument("--sel-hop", type=int, default=1)
    p.add_argument("--feat-hop", type=int, default=1)
    p.add_argument("--split-seed", type=int, default=20)
    _add_cv_args(p)
    p.add_argument("--threads", type=int, default=None,
                   help=f"worker threads (default: ${THREADS_ENV} or 1)")
    p.add_argument("--no-trials", action="store_true",
                   help="skip writing the synthetic trial CSVs")
    p.add_argument("--out", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _post(server: str, endpoint: str, payload: dict) -> dict:
    import httpx

    response = httpx.post(f"{server.rstrip('/')}{endpoint}", json=payload, timeout=None)
    if response.status_code >= 400:
        detail = response.json().get("detail", response.text)
        raise DataError(f"{endpoint} failed ({response.status_code}): {detail}")
    return response.json()


def _execute(server: str | None, endpoint: str, request_model) -> dict:
    """Run a service operation in-process, or remotely when --server is set."""
    if server is not None:
        return _post(server, endpoint, json.loads(request_model.model_dump_json()))
    from .service import ops

    handler = {
        "/synth": ops.synth,
        "/validate": ops.validate,
        "/bandselect": ops.bandselect,
        "/features": ops.features,
        "/train": ops.train,
        "/evaluate": ops.evaluate,
        "/run": ops.run,
    }[endpoint]
    return handler(request_model).model_dump()


def _print(data: dict) -> None:
    print(json.dumps(data, indent=2, sort_keys=True))


def _csv_list(text: str | None) -> list[str] | None:
    if text is None:
        return None
    return [part.strip() for part in text.split(",") if part.strip()]


def _run_command(args: argparse.Namespace) -> int:
    from .service import schemas

    if args.command == "synth":
        result = _execute(args.server, "/synth", schemas.SynthRequest(
            subjects=_csv_list(args.subjects), profile=args.profile,
            seed=args.seed, base_noise=args.base_noise, out_dir=args.out,
        ))
        _print(result)
        return 0

    if args.command == "validate":
        result = _execute(args.server, "/validate",
                          schemas.ValidateRequest(manifest=args.manifest))
        _print(result)
        return 0 if result["ok"] else 2

    if args.command == "bandselect":
        result = _execute(args.server, "/bandselect", schemas.BandselectRequest(
            manifests_2d=args.manifest_2d, manifests_3d=args.manifest_3d,
            window=args.window, hop=args.hop, threshold=args.threshold,
            n_select=args.n_select, out_dir=args.out,
            dump_spectrograms=args.dump_spectrograms,
        ))
        _print({k: result[k] for k in ("bands", "counts", "threshold", "files")})
        return 0

    if args.command == "features":
        result = _execute(args.server, "/features", schemas.FeaturesRequest(
            manifests_2d=args.manifest_2d, manifests_3d=args.manifest_3d,
            channels=_csv_list(args.channels), bands=_csv_list(args.bands),
            window=args.window, hop=args.hop, split_seed=args.split_seed,
            chronological=args.chronological, out_dir=args.out,
        ))
        _print(result)
        return 0

    if args.command == "train":
        result = _execute(args.server, "/train", schemas.TrainRequest(
            dataset=args.dataset, classifier=args.classifier, k=args.k,
            seed=args.cv_seed, c_grid=args.c_grid, sigma_scales=args.sigma_scales,
            max_components=args.max_components, model_out=args.model_out,
        ))
        print(f"classifier: {result['classifier']}")
        print(f"best: {json.dumps(result['best'], sort_keys=True)}")
        print(f"cv_accuracy: {result['cv_accuracy']:.4f}")
        print("cv table:")
        for row in result["table"]:
            params = {k: v for k, v in row.items() if k != "cv_accuracy"}
            print(f"  {json.dumps(params, sort_keys=True)} -> {row['cv_accuracy']:.4f}")
        if result.get("model_path"):
            print(f"model: {result['model_path']}")
        return 0

    if args.command in ("evaluate", "all"):
        from .pipeline import RunConfig

        common = dict(
            sel_hop=args.sel_hop, feat_hop=args.feat_hop, split_seed=args.split_seed,
            cv_k=args.k, cv_seed=args.cv_seed, c_grid=args.c_grid,
            sigma_scales=args.sigma_scales, max_components=args.max_components,
            out_dir=args.out,
        )
        if args.command == "evaluate":
            config = RunConfig(
                manifests_2d=args.manifest_2d, manifests_3d=args.manifest_3d,
                accuracy_floor=args.accuracy_floor, threads=args.threads, **common,
            )
            result = _execute(args.server, "/evaluate", schemas.EvaluateRequest(config=config))
            summary = result["summary"]
        else:
            config = RunConfig(
                subjects=_csv_list(args.subjects), profile=args.synth_profile,
                seed=args.seed, manifests_2d=args.manifest_2d,
                manifests_3d=args.manifest_3d, write_trials=not args.no_trials,
                threads=args.threads, **common,
            )
            result = _execute(args.server, "/run", schemas.RunRequest(config=config))
            summary = result["summary"]
        _print({
            "bands": summary["selection"]["bands"],
            "ranked_channels": summary.get("ranked_channels"),
            "compromise": summary.get("compromise"),
            "reports": summary.get("reports"),
        })
        return 0

    if args.command == "report":
        from .service.ops import report

        files = report(args.summary, args.out)
        _print({"reports": files})
        return 0

    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    raise AssertionError(f"unhandled command {args.command}")


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run_command(args)
    except NumericalError as exc:
        print(f"eeg2d3d {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (DataError, OSError, ValueError) as exc:
        print(f"eeg2d3d {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
