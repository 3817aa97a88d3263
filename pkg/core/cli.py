"""
Command-line front end.

    python run.py gen-data --seed 0 --tracks 10 --length 48 --out runs/data
    python run.py train --data runs/data --out runs/train
    python run.py forecast --data runs/data --checkpoint runs/train/model.pt --out runs/forecast
    python run.py eval --forecasts runs/forecast/forecasts.json --lead-time 6 --out runs/eval
    python run.py ablate --data runs/data --axes scheme --out runs/ablate

Every subcommand accepts --config FILE (.toml or .json) and repeated
--set key=value overrides; explicit flags win over both.
"""
import argparse
import json
import logging
import sys
from typing import List, Optional

from .commands import Environment
from .notifications import Notification
from .worker.config import LoadRunConfig
from .worker.exceptions import ErrorTuple, PipeError
from .worker.variables import CORE_VERSION

logger = logging.getLogger("pipecore")


def _common(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="run config file (.toml or .json, e.g. a resolved_config.json)")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override one config key; may be repeated")
    parser.add_argument("--out", help="output directory (default: $PIPE_OUTPUT_DIR or ./pipe_runs)")
    parser.add_argument("--worker", action="store_true", help="run the command in a spawned worker process")
    parser.add_argument("-v", "--verbose", action="store_true", help="also show per-step notifications")
    parser.add_argument("-q", "--quiet", action="store_true", help="only print the result and errors")


def BuildParser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pipe", description="Physics-informed positional encoding forecasting core")
    parser.add_argument("--version", action="version", version=f"%(prog)s {CORE_VERSION}")
    commands = parser.add_subparsers(dest="command", required=True)

    genData = commands.add_parser("gen-data", help="generate synthetic tracks, images and the split manifest")
    _common(genData)
    genData.add_argument("--seed", type=int)
    genData.add_argument("--tracks", type=int)
    genData.add_argument("--length", type=int)

    encodeDump = commands.add_parser("encode-dump", help="write the position grid and PE matrix of one instance")
    _common(encodeDump)
    encodeDump.add_argument("--data", required=True, help="dataset folder written by gen-data")
    encodeDump.add_argument("--scheme", help="sequential, three_d or physics")
    encodeDump.add_argument("--instance", type=int, default=0, help="window index over all tracks")
    encodeDump.add_argument("--text-only", action="store_true", help="drop the image tokens")

    train = commands.add_parser("train", help="train a forecaster on the train split")
    _common(train)
    train.add_argument("--data", required=True)
    train.add_argument("--epochs", type=int)
    train.add_argument("--lr", type=float)
    train.add_argument("--batch-size", type=int)
    train.add_argument("--max-steps", type=int)

    forecast = commands.add_parser("forecast", help="greedy forecasts for one split")
    _common(forecast)
    forecast.add_argument("--data", required=True)
    forecast.add_argument("--checkpoint")
    forecast.add_argument("--split", default="test", choices=["train", "val", "test"])
    forecast.add_argument("--oracle", action="store_true", help="write the true labels as forecasts")
    forecast.add_argument("--max-new", type=int)

    evaluate = commands.add_parser("eval", help="score a forecasts file")
    _common(evaluate)
    evaluate.add_argument("--forecasts", required=True)
    evaluate.add_argument("--lead-time", type=int, help="score leads 1..N only")

    ablate = commands.add_parser("ablate", help="train and score one model per ablation cell")
    _common(ablate)
    ablate.add_argument("--data", required=True)
    ablate.add_argument("--axes", help="comma list of vision, scheme, negate, pe; or 'table'")
    ablate.add_argument("--seeds", help="comma list of seeds")
    ablate.add_argument("--workers", type=int)

    return parser


def _flags(args) -> dict:
    names = {"seed": "seed", "tracks": "tracks", "length": "length", "scheme": "scheme", "epochs": "epochs",
             "lr": "lr", "batch_size": "batchSize", "max_steps": "maxSteps", "max_new": "maxNew",
             "lead_time": "leadTime", "axes": "ablationAxes", "seeds": "ablationSeeds", "workers": "workers"}
    return {key: getattr(args, attr) for attr, key in names.items() if getattr(args, attr, None) is not None}


def _request(args, config: dict):
    if args.command == "gen-data":
        return Environment.GenData, (config, args.out)
    if args.command == "encode-dump":
        return Environment.EncodeDump, (config, args.data, args.instance, args.text_only, args.out)
    if args.command == "train":
        return Environment.Train, (config, args.data, args.out)
    if args.command == "forecast":
        return Environment.Forecast, (config, args.data, args.checkpoint, args.split, args.oracle, args.out)
    if args.command == "eval":
        return Environment.Eval, (config, args.forecasts, args.out)
    return Environment.Ablate, (config, args.data, args.out)


def _configureLogging(args):
    level = logging.WARNING if args.quiet else logging.DEBUG if args.verbose else logging.INFO
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(message)s"))
    logger.handlers[:] = [handler]
    logger.setLevel(level)
    logger.propagate = False


def main(argv: Optional[List[str]] = None) -> int:
    args = BuildParser().parse_args(argv)
    _configureLogging(args)

    try:
        config = LoadRunConfig(args.config, args.overrides, _flags(args))
    except PipeError as e:
        code, message = ErrorTuple(e)
        print(f"error: {message}", file=sys.stderr)
        return code

    env, payload = _request(args, config.getDict())
    if args.worker:
        from .controller import Controller
        from .worker.basedispatch import NotificationLevel

        def onNotification(notification: Notification):
            logger.log(NotificationLevel(notification.notificationType), "%s", notification)

        with Controller() as controller:
            ok, result = controller.call(env, *payload, onNotification=onNotification)
    else:
        from .worker.dispatch import Dispatch
        ok, result = Dispatch().call(env, *payload)

    if not ok:
        code, message = result
        print(f"error: {message}", file=sys.stderr)
        return code

    print(json.dumps(result, indent=4, default=str))
    return 0
