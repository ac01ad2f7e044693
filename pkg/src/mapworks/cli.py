"""Command line front end.

Every subcommand is a thin client of the HTTP service: it assembles a
request body from a JSON config file plus flag overrides, posts it to
the matching endpoint, and prints the response. By default the service
runs in-process; pass ``--server URL`` to talk to a remote instance.

Exit codes: 0 success, 2 validation error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time

import httpx

from .data import read_csv


class CliError(Exception):
    """Bad input: malformed config, missing file, rejected request."""


class NumericalFailure(Exception):
    """Server-side numerical routine failed to converge or stabilize."""


# ---------------------------------------------------------------------------
# transport


class InProcessClient:
    """Synchronous client that serves each request from the ASGI app
    directly, without a network socket."""

    def __init__(self, app=None):
        if app is None:
            from .service import create_app

            app = create_app()
        self._transport = httpx.ASGITransport(app=app, raise_app_exceptions=False)

    def post(self, path: str, json: dict) -> httpx.Response:
        import asyncio

        async def _go():
            async with httpx.AsyncClient(
                    transport=self._transport,
                    base_url="http://in.process") as client:
                return await client.post(path, json=json)

        return asyncio.run(_go())

    def get(self, path: str) -> httpx.Response:
        import asyncio

        async def _go():
            async with httpx.AsyncClient(
                    transport=self._transport,
                    base_url="http://in.process") as client:
                return await client.get(path)

        return asyncio.run(_go())

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False


def _client(server: str | None):
    if server:
        return httpx.Client(base_url=server, timeout=600.0)
    return InProcessClient()


def _post(client, path: str, body: dict, verbose: bool) -> dict:
    if verbose:
        print(f"POST {path}", file=sys.stderr)
        start = time.monotonic()
    resp = client.post(path, json=body)
    if verbose:
        print(f"  -> {resp.status_code} in {time.monotonic() - start:.2f}s",
              file=sys.stderr)
    if resp.status_code == 200:
        return resp.json()
    message = _error_message(resp)
    if resp.status_code == 422:
        raise CliError(message)
    raise NumericalFailure(message)


def _error_message(resp) -> str:
    try:
        payload = resp.json()
    except ValueError:
        return f"HTTP {resp.status_code}: {resp.text[:200]}"
    if isinstance(payload, dict):
        err = payload.get("error")
        if isinstance(err, dict) and "message" in err:
            return str(err["message"])
        detail = payload.get("detail")
        if isinstance(detail, list):
            parts = []
            for item in detail:
                loc = ".".join(str(p) for p in item.get("loc", []) if p != "body")
                parts.append(f"{loc}: {item.get('msg', 'invalid')}")
            return "; ".join(parts) or f"HTTP {resp.status_code}"
        if detail is not None:
            return str(detail)
    return f"HTTP {resp.status_code}"


# ---------------------------------------------------------------------------
# input helpers


def _load_json(path: str, what: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise CliError(f"cannot read {what} file {path!r}: {exc}") from exc
    except ValueError as exc:
        raise CliError(f"{what} file {path!r} is not valid JSON: {exc}") from exc


def _json_or_file(text: str, what: str):
    """Accept either inline JSON or a path to a JSON file."""
    stripped = text.strip()
    if stripped.startswith(("{", "[")):
        try:
            return json.loads(stripped)
        except ValueError as exc:
            raise CliError(f"invalid inline JSON for {what}: {exc}") from exc
    return _load_json(text, what)


def _load_mixture(path: str) -> dict:
    """Mixture file: the plain mixture object, or the JSON written by the
    fit / robustify / update commands (unwrapped so outputs chain)."""
    payload = _load_json(path, "mixture")
    if isinstance(payload, dict) and "family" not in payload:
        if isinstance(payload.get("mixture"), dict):
            return payload["mixture"]
        best = payload.get("best")
        if isinstance(best, dict) and isinstance(best.get("mixture"), dict):
            return best["mixture"]
    return payload


def _load_sample(path: str) -> list:
    """Draws file: a JSON array, or one number per line."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read sample file {path!r}: {exc}") from exc
    stripped = text.strip()
    if not stripped:
        raise CliError(f"sample file {path!r} is empty")
    if stripped.startswith("["):
        try:
            values = json.loads(stripped)
        except ValueError as exc:
            raise CliError(f"sample file {path!r}: {exc}") from exc
    else:
        values = []
        for lineno, line in enumerate(stripped.splitlines(), start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise CliError(
                    f"sample file {path!r} line {lineno}: not a number: {line!r}")
    if not isinstance(values, list) or not values:
        raise CliError(f"sample file {path!r} holds no draws")
    return [float(v) for v in values]


def _parse_floats(text: str, flag: str) -> list:
    try:
        return [float(tok) for tok in text.replace(",", " ").split()]
    except ValueError as exc:
        raise CliError(f"{flag} expects comma-separated numbers: {exc}") from exc


def _merge(config: dict | None, overrides: dict) -> dict:
    """Config file fields first, explicit flags on top."""
    body = dict(config) if config else {}
    for key, value in overrides.items():
        if value is not None:
            body[key] = value
    return body


def _base_config(args) -> dict | None:
    return _load_json(args.config, "config") if args.config else None


# ---------------------------------------------------------------------------
# output


def _rows_for_csv(command: str, result: dict):
    if command == "oc":
        return result["rows"]
    if command == "forest":
        return result["rows"]
    if command == "ess":
        return [{"method": k, "value": v} for k, v in result["values"].items()]
    if command == "boundary":
        bound = result["boundary"]
        if "table" in bound:
            return bound["table"]
        return [bound]
    return None


def _write_csv(rows: list, stream) -> None:
    fieldnames = []
    for row in rows:
        for key in row:
            if key not in fieldnames:
                fieldnames.append(key)
    writer = csv.DictWriter(stream, fieldnames=fieldnames)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)


def _emit(result: dict, args) -> None:
    if args.format == "csv":
        rows = _rows_for_csv(args.command, result)
        if rows is None:
            raise CliError(
                f"--format csv is not available for {args.command!r}; "
                "use json")
        buf = io.StringIO()
        _write_csv(rows, buf)
        text = buf.getvalue()
    else:
        text = json.dumps(result, indent=2, sort_keys=False) + "\n"
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise CliError(f"cannot write {args.out!r}: {exc}") from exc
        if args.verbose:
            print(f"wrote {args.out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommand handlers


def _dataset_body(args, config: dict | None) -> dict | None:
    if args.data is None:
        return None
    if args.family is None and not (config and "data" in config):
        raise CliError("--data needs --family to pick the CSV columns")
    family = args.family
    if family is None:
        family = config["data"].get("family")
    try:
        dataset = read_csv(args.data, family)
    except OSError as exc:
        raise CliError(f"cannot read data file {args.data!r}: {exc}") from exc
    except ValueError as exc:
        raise CliError(str(exc)) from exc
    d = dataset.to_dict()
    return {"family": d["family"], "rows": d["rows"]}


def _hyperpriors(args, config: dict | None) -> dict | None:
    base = {}
    if config and isinstance(config.get("hyperpriors"), dict):
        base = dict(config["hyperpriors"])
    flags = {
        "mu_mean": args.mu_mean,
        "mu_sd": args.mu_sd,
        "tau_prior": args.tau_prior,
        "tau_params": args.tau_param,
    }
    provided = {k: v for k, v in flags.items() if v is not None}
    if not base and not provided:
        return None
    base.update(provided)
    return base


def _cmd_map(client, args):
    config = _base_config(args)
    body = _merge(config, {
        "data": _dataset_body(args, config),
        "hyperpriors": _hyperpriors(args, config),
        "chains": args.chains,
        "warmup": args.warmup,
        "samples": args.samples,
        "seed": args.seed,
        "include_draws": args.include_draws,
    })
    return _post(client, "/map", body, args.verbose)


def _cmd_fit(client, args):
    config = _base_config(args)
    overrides = {
        "family": args.family,
        "components": args.components,
        "k_max": args.k_max,
        "seed": args.seed,
        "likelihood": args.likelihood,
    }
    if args.sample:
        overrides["sample"] = _load_sample(args.sample)
    if args.analysis:
        overrides["analysis"] = _load_json(args.analysis, "analysis")
    return _post(client, "/fit", _merge(config, overrides), args.verbose)


def _cmd_robustify(client, args):
    config = _base_config(args)
    overrides = {
        "weight": args.weight,
        "mean": args.mean,
        "n": args.n,
        "sigma": args.sigma,
    }
    if args.prior:
        overrides["mixture"] = _load_mixture(args.prior)
    return _post(client, "/robustify", _merge(config, overrides), args.verbose)


def _cmd_ess(client, args):
    config = _base_config(args)
    overrides = {
        "method": args.method,
        "sigma": args.sigma,
        "on_divergence": args.on_divergence,
    }
    if args.prior:
        overrides["mixture"] = _load_mixture(args.prior)
    return _post(client, "/ess", _merge(config, overrides), args.verbose)


def _cmd_update(client, args):
    config = _base_config(args)
    overrides = {"sigma": args.sigma}
    if args.prior:
        overrides["mixture"] = _load_mixture(args.prior)
    if args.data:
        overrides["data"] = _json_or_file(args.data, "data")
    return _post(client, "/update", _merge(config, overrides), args.verbose)


def _cmd_predict(client, args):
    config = _base_config(args)
    overrides = {"n": args.n, "sigma": args.sigma}
    if args.prior:
        overrides["mixture"] = _load_mixture(args.prior)
    return _post(client, "/predict", _merge(config, overrides), args.verbose)


def _design_overrides(args) -> dict:
    if args.design:
        return {"design": _json_or_file(args.design, "design")}
    return {}


def _cmd_boundary(client, args):
    body = _merge(_base_config(args), _design_overrides(args))
    return _post(client, "/boundary", body, args.verbose)


def _cmd_oc(client, args):
    config = _base_config(args)
    overrides = _design_overrides(args)
    if args.theta is not None:
        overrides["theta1"] = _parse_floats(args.theta, "--theta")
    if args.theta1 is not None:
        overrides["theta1"] = _parse_floats(args.theta1, "--theta1")
    if args.theta2 is not None:
        overrides["theta2"] = _parse_floats(args.theta2, "--theta2")
    return _post(client, "/oc", _merge(config, overrides), args.verbose)


def _cmd_pos(client, args):
    config = _base_config(args)
    overrides = _design_overrides(args)
    if args.data_prior1:
        overrides["data_prior1"] = _load_mixture(args.data_prior1)
    if args.data_prior2:
        overrides["data_prior2"] = _load_mixture(args.data_prior2)
    return _post(client, "/pos", _merge(config, overrides), args.verbose)


def _cmd_forest(client, args):
    config = _base_config(args)
    overrides: dict = {}
    if args.analysis:
        overrides["analysis"] = _load_json(args.analysis, "analysis")
    if args.svg:
        overrides["include_svg"] = True
    result = _post(client, "/forest", _merge(config, overrides), args.verbose)
    if args.svg:
        svg = result.pop("svg", None)
        if not svg:
            raise NumericalFailure("server returned no SVG payload")
        try:
            with open(args.svg, "w", encoding="utf-8") as fh:
                fh.write(svg)
        except OSError as exc:
            raise CliError(f"cannot write {args.svg!r}: {exc}") from exc
        if args.verbose:
            print(f"wrote {args.svg}", file=sys.stderr)
    return result


def _cmd_pipeline(client, args):
    if not args.config:
        raise CliError("pipeline needs --config with the run description")
    config = _load_json(args.config, "config")
    if args.seed is not None:
        config = dict(config)
        config["seed"] = args.seed
    body = {"config": config}
    if args.out_dir:
        body["out_dir"] = args.out_dir
    return _post(client, "/pipeline", body, args.verbose)


_HANDLERS = {
    "map": _cmd_map,
    "fit": _cmd_fit,
    "robustify": _cmd_robustify,
    "ess": _cmd_ess,
    "update": _cmd_update,
    "predict": _cmd_predict,
    "boundary": _cmd_boundary,
    "oc": _cmd_oc,
    "pos": _cmd_pos,
    "forest": _cmd_forest,
    "pipeline": _cmd_pipeline,
}


# ---------------------------------------------------------------------------
# parser


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mapworks",
        description="Meta-analytic-predictive priors and design evaluation.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its fields")
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--verbose", action="store_true")
    common.add_argument("--server", default=None,
                        help="URL of a running service (default: in-process)")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("map", parents=[common],
                       help="MCMC meta-analysis of historical studies")
    p.add_argument("--data", help="study CSV (columns fixed per family)")
    p.add_argument("--family", choices=["binomial", "normal", "poisson"])
    p.add_argument("--chains", type=int, default=None)
    p.add_argument("--warmup", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--include-draws", choices=["none", "theta_star", "all"],
                   default=None)
    p.add_argument("--mu-mean", type=float, default=None)
    p.add_argument("--mu-sd", type=float, default=None)
    p.add_argument("--tau-prior",
                   choices=["half-normal", "truncated-normal", "uniform",
                            "log-normal"], default=None)
    p.add_argument("--tau-param", type=float, action="append", default=None,
                   help="repeatable; parameters of the tau prior")

    p = sub.add_parser("fit", parents=[common],
                       help="EM mixture approximation of a sample")
    p.add_argument("--sample", help="draws file: JSON array or one number per line")
    p.add_argument("--analysis", help="JSON report from the map command")
    p.add_argument("--family", choices=["beta", "normal", "gamma"])
    p.add_argument("--components", type=int, default=None,
                   help="fixed component count (skips model selection)")
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--likelihood", choices=["poisson", "exponential"],
                   default=None)

    p = sub.add_parser("robustify", parents=[common],
                       help="add a vague component to a mixture")
    p.add_argument("--prior", help="mixture JSON file")
    p.add_argument("--weight", type=float, default=None)
    p.add_argument("--mean", type=float, default=None)
    p.add_argument("--n", type=float, default=None)
    p.add_argument("--sigma", type=float, default=None)

    p = sub.add_parser("ess", parents=[common],
                       help="effective sample size of a mixture prior")
    p.add_argument("--prior", help="mixture JSON file")
    p.add_argument("--method", choices=["elir", "moment", "morita", "all"],
                   default=None)
    p.add_argument("--sigma", type=float, default=None)
    p.add_argument("--on-divergence", choices=["error", "inf"], default=None)

    p = sub.add_parser("update", parents=[common],
                       help="conjugate posterior update with observed data")
    p.add_argument("--prior", help="mixture JSON file")
    p.add_argument("--data", help="inline JSON or file, e.g. "
                   '\'{"kind": "binomial", "r": 7, "n": 20}\'')
    p.add_argument("--sigma", type=float, default=None)

    p = sub.add_parser("predict", parents=[common],
                       help="predictive distribution of a future summary")
    p.add_argument("--prior", help="mixture JSON file")
    p.add_argument("--n", type=float, default=None, help="future sample size")
    p.add_argument("--sigma", type=float, default=None)

    p = sub.add_parser("boundary", parents=[common],
                       help="critical decision boundary of a design")
    p.add_argument("--design", help="design JSON (inline or file)")

    p = sub.add_parser("oc", parents=[common],
                       help="operating characteristics over true parameters")
    p.add_argument("--design", help="design JSON (inline or file)")
    p.add_argument("--theta", help="comma-separated values (one-sample designs)")
    p.add_argument("--theta1", help="comma-separated arm-1 values")
    p.add_argument("--theta2", help="comma-separated arm-2 values")

    p = sub.add_parser("pos", parents=[common],
                       help="probability of success under data priors")
    p.add_argument("--design", help="design JSON (inline or file)")
    p.add_argument("--data-prior1", help="mixture JSON file for arm 1")
    p.add_argument("--data-prior2", help="mixture JSON file for arm 2")

    p = sub.add_parser("forest", parents=[common],
                       help="forest-plot rows (and optional SVG) for a map report")
    p.add_argument("--analysis", help="JSON report from the map command")
    p.add_argument("--svg", help="also render an SVG to this path")

    sub.add_parser("pipeline", parents=[common],
                   help="run map -> fit -> robustify -> ess -> design from one config"
                   ).add_argument("--out-dir", default=None,
                                  help="directory for report.json and artifacts")

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)

    return parser


def _serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port)
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help(file=sys.stderr)
        return 2
    if args.command == "serve":
        return _serve(args)
    try:
        with _client(args.server) as client:
            result = _HANDLERS[args.command](client, args)
        _emit(result, args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalFailure as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return 3
    except httpx.HTTPError as exc:
        print(f"error: cannot reach server: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
