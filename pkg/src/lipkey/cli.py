"""Command-line front end.

Every subcommand is a thin client of the recognition service: by default
requests run against an in-process app (no daemon needed); pass
``--server URL`` to target a running instance started with ``serve``.
"""

from __future__ import annotations

import argparse
import base64
import json
import sys

import httpx

from .config import Config
from .errors import ConfigError, LipkeyError
from .image import Rect


def _client(server: str | None) -> httpx.Client:
    if server:
        return httpx.Client(base_url=server.rstrip("/"), timeout=600.0)
    from .service import create_app

    transport = httpx.ASGITransport(app=create_app())
    return httpx.Client(transport=transport, base_url="http://lipkey.local", timeout=600.0)


def _post(client: httpx.Client, path: str, payload: dict) -> dict:
    response = client.post(path, json=payload)
    if response.status_code != 200:
        try:
            detail = response.json().get("detail", response.text)
        except ValueError:
            detail = response.text
        raise LipkeyError(f"{path} failed ({response.status_code}): {detail}")
    return response.json()


def _read_b64(path: str) -> str:
    with open(path, "rb") as fh:
        return base64.b64encode(fh.read()).decode("ascii")


def _parse_roi(text: str | None) -> dict | None:
    if text is None:
        return None
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError(f"--roi expects x,y,w,h, got {text!r}")
    x, y, w, h = (int(p) for p in parts)
    Rect(x, y, w, h)  # validates extents
    return {"x": x, "y": y, "w": w, "h": h}


def _resolved_config(args) -> dict[str, str]:
    config = Config.from_sources(path=args.config, overrides=args.set or [])
    return {key: str(value) for key, value in config.as_dict().items()}


def _write_out(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lipkey",
        description="Training-free smile/laugh detection from mouth keypoints.",
    )
    parser.add_argument("--server", help="base URL of a running service (default: in-process)")
    parser.add_argument("--config", help="config file (key = value lines); LIPKEY_CONFIG names a default")
    parser.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="illumination-normalize a PGM image")
    p.add_argument("input")
    p.add_argument("output")

    p = sub.add_parser("detect-roi", help="locate the mouth rectangle with cascades")
    p.add_argument("input")
    p.add_argument("--face-cascade", required=True)
    p.add_argument("--mouth-cascade", required=True)

    p = sub.add_parser("keypoints", help="emit the scenario's keypoint CSV")
    p.add_argument("input")
    p.add_argument("--scenario", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--roi", help="x,y,w,h mouth rectangle (default: whole image)")
    p.add_argument("--descriptors", action="store_true", help="also emit 128-hex-char descriptors")
    p.add_argument("--out")

    p = sub.add_parser("recognize", help="classify one image")
    p.add_argument("input")
    p.add_argument("--scenario", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--roi", help="x,y,w,h mouth rectangle (default: whole image)")

    p = sub.add_parser("evaluate", help="run the metric protocol over a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--scenario", type=int, choices=(1, 2, 3), required=True)
    p.add_argument("--format", choices=("csv", "markdown"), default="csv")
    p.add_argument("--rotation-sweep", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("synth", help="render the synthetic mouth corpus")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--symmetric", action="store_true")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def run(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "serve":
        import uvicorn

        from .service import create_app

        uvicorn.run(create_app(), host=args.host, port=args.port)
        return 0

    try:
        config = _resolved_config(args)
        with _client(args.server) as client:
            if args.command == "preprocess":
                data = _post(client, "/preprocess", {
                    "image_b64": _read_b64(args.input), "config": config,
                })
                with open(args.output, "wb") as fh:
                    fh.write(base64.b64decode(data["image_b64"]))
            elif args.command == "detect-roi":
                with open(args.face_cascade, "r", encoding="utf-8") as fh:
                    face = fh.read()
                with open(args.mouth_cascade, "r", encoding="utf-8") as fh:
                    mouth = fh.read()
                data = _post(client, "/detect-roi", {
                    "image_b64": _read_b64(args.input),
                    "face_cascade": face,
                    "mouth_cascade": mouth,
                    "config": config,
                })
                print(f"{data['x']},{data['y']},{data['w']},{data['h']}")
            elif args.command == "keypoints":
                data = _post(client, "/keypoints", {
                    "image_b64": _read_b64(args.input),
                    "scenario": args.scenario,
                    "roi": _parse_roi(args.roi),
                    "with_descriptors": args.descriptors,
                    "config": config,
                })
                text = data["csv"]
                if args.descriptors and data.get("descriptors") is not None:
                    text += "".join(h + "\n" for h in data["descriptors"])
                _write_out(text, args.out)
            elif args.command == "recognize":
                data = _post(client, "/recognize", {
                    "image_b64": _read_b64(args.input),
                    "scenario": args.scenario,
                    "roi": _parse_roi(args.roi),
                    "config": config,
                })
                print(data["label"])
                print(json.dumps(data["diagnostics"], sort_keys=True))
            elif args.command == "evaluate":
                data = _post(client, "/evaluate", {
                    "manifest_path": args.manifest,
                    "scenario": args.scenario,
                    "format": args.format,
                    "rotation_sweep": args.rotation_sweep,
                    "config": config,
                })
                _write_out(data["report"], args.out)
            elif args.command == "synth":
                data = _post(client, "/synth", {
                    "out_dir": args.out,
                    "n": args.n,
                    "seed": args.seed,
                    "symmetric": args.symmetric,
                })
                print(data["manifest_path"])
    except ConfigError as exc:
        print(f"lipkey: {exc}", file=sys.stderr)
        return 2
    except (LipkeyError, OSError, httpx.HTTPError) as exc:
        print(f"lipkey: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
