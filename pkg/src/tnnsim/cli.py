"""Command-line entry point.

Every subcommand goes through the same service layer as the HTTP API. With
``--server URL`` the CLI only talks to a running ``tnnsim serve`` instance.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
import time

from pydantic import ValidationError

from . import service
from .config import ConfigError, ExperimentConfig, load_config
from .costmodel import format_table
from .dataio import DataError
from .schemas import CostRequest, CostResponse, EquivalenceRequest, EquivalenceResponse, JobStatus

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_DIVERGENCE = 4
EXIT_SERVER = 5


def _add_experiment_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="INI-style config file; flags override it")
    for name, info in ExperimentConfig.model_fields.items():
        flag = "--" + name.replace("_", "-")
        if info.annotation is bool:
            parser.add_argument(flag, dest=name, default=None, action=argparse.BooleanOptionalAction)
        else:
            parser.add_argument(flag, dest=name, default=None, metavar=name.upper(),
                                help=f"(default: {info.default})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tnnsim", description="TNN column simulator and cost model")
    parser.add_argument("--server", help="base URL of a running tnnsim service")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, help_text in (("train", "online R-STDP/STDP training run"),
                            ("incremental", "hide one class, then acquire it unsupervised")):
        p = sub.add_parser(name, help=help_text)
        _add_experiment_flags(p)

    p = sub.add_parser("cost", help="gate-level cost and calibrated physical estimate")
    p.add_argument("p", type=int)
    p.add_argument("q", type=int)
    p.add_argument("--mode", choices=["stdp", "rstdp"], default="stdp")
    p.add_argument("--json", action="store_true", help="print the JSON report only")

    p = sub.add_parser("equiv", help="cycle-accurate vs functional engine check")
    p.add_argument("--p", type=int, default=16)
    p.add_argument("--q", type=int, default=4)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    return parser


def _experiment_config(args) -> ExperimentConfig:
    overrides = {name: getattr(args, name) for name in ExperimentConfig.model_fields}
    return load_config(args.config, overrides)


class _Remote:
    def __init__(self, url: str):
        import httpx

        self.client = httpx.Client(base_url=url.rstrip("/"), timeout=None)

    def post(self, path, payload):
        r = self.client.post(path, json=payload)
        if r.status_code == 422:
            raise ConfigError(r.text)
        r.raise_for_status()
        return r.json()

    def wait(self, job: JobStatus, poll: float = 1.0) -> JobStatus:
        while job.state in ("queued", "running"):
            time.sleep(poll)
            r = self.client.get(f"/runs/{job.id}")
            r.raise_for_status()
            job = JobStatus(**r.json())
        return job


def _print_cost(resp: CostResponse, as_json: bool):
    data = resp.model_dump()
    if as_json:
        print(json.dumps(data, indent=2))
        return
    rows = [{"source": "model", "gates": resp.gates, "gamma [gate delays]": resp.time_gate_delays,
             "area [mm2]": resp.area_mm2, "time [ns]": resp.time_ns, "power [mW]": resp.power_mw}]
    if resp.reference:
        ref = resp.reference
        rows.append({"source": "45nm synthesis", "gates": ref.gates, "gamma [gate delays]": "",
                     "area [mm2]": ref.area_mm2, "time [ns]": ref.time_ns, "power [mW]": ref.power_mw})
    print(f"{resp.p} x {resp.q} column, {resp.mode.upper()}")
    print(format_table(rows))
    for note in resp.assumptions:
        print(f"assumption: {note}")
    print(json.dumps(data))


def _run(args) -> int:
    remote = _Remote(args.server) if args.server else None

    if args.command == "cost":
        req = CostRequest(p=args.p, q=args.q, mode=args.mode)
        resp = CostResponse(**remote.post("/cost", req.model_dump())) if remote else service.cost(req)
        _print_cost(resp, args.json)
        return EXIT_OK

    if args.command == "equiv":
        req = EquivalenceRequest(p=args.p, q=args.q, trials=args.trials, seed=args.seed)
        resp = (EquivalenceResponse(**remote.post("/equivalence", req.model_dump()))
                if remote else service.equivalence(req))
        if resp.passed:
            print(f"PASS: {resp.trials} gamma cycles, cycle and functional engines identical")
            return EXIT_OK
        print(f"FAIL: first divergence at gamma cycle {resp.first_divergence}")
        print(json.dumps(resp.detail, indent=2))
        return EXIT_DIVERGENCE

    if args.command in ("train", "incremental"):
        cfg = _experiment_config(args)
        if remote:
            job = JobStatus(**remote.post(f"/runs/{args.command}", cfg.model_dump(mode="json")))
            job = remote.wait(job)
            if job.state == "failed":
                print(job.error, file=sys.stderr)
                return EXIT_DATA if job.error and job.error.startswith(("DataError", "Idx")) else EXIT_SERVER
            summary = job.summary
        else:
            summary = service.train(cfg) if args.command == "train" else service.incremental(cfg)
        print(json.dumps(summary, indent=2, sort_keys=True))
        return EXIT_OK

    if args.command == "serve":
        import uvicorn

        uvicorn.run("tnnsim.api:app", host=args.host, port=args.port)
        return EXIT_OK
    return EXIT_CONFIG


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except (ConfigError, ValidationError, ValueError) as exc:
        if isinstance(exc, DataError):
            print(f"data error: {exc}", file=sys.stderr)
            return EXIT_DATA
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
