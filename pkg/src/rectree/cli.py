"""Command-line front end: a thin client of the rectree HTTP service.

Without ``--server`` the CLI talks to an in-process instance of the same
FastAPI app (no sockets, fully offline); with ``--server URL`` it sends the
identical requests to a remote service started via ``rectree serve``.

Exit codes: 0 all checks passed, 1 a check failed, 2 usage error,
3 guard violation (problem size or overflow limits).
"""

from __future__ import annotations

import json
import os
import sys
import warnings
from typing import Dict, List, Optional

import click

from .formulas import REGISTRY

GUARD_EXIT = 3
CHECK_EXIT = 1


class ServiceClient:
    """Minimal synchronous client; in-process ASGI unless a URL is given."""

    def __init__(self, server: Optional[str] = None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server.rstrip("/"), timeout=None)
        else:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                from fastapi.testclient import TestClient

                from .service.app import app

                self._client = TestClient(app, base_url="http://rectree.local")

    def post(self, path: str, payload: dict) -> dict:
        response = self._client.post(path, json=payload)
        return self._handle(response)

    def get(self, path: str) -> dict:
        return self._handle(self._client.get(path))

    @staticmethod
    def _handle(response) -> dict:
        if response.status_code == 400:
            detail = response.json().get("detail", {})
            message = detail.get("guard", str(detail)) if isinstance(detail, dict) else str(detail)
            click.echo(f"guard violation: {message}", err=True)
            sys.exit(GUARD_EXIT)
        if response.status_code == 422:
            click.echo(f"invalid request: {response.text}", err=True)
            sys.exit(2)
        if response.status_code >= 300:
            click.echo(f"service error {response.status_code}: {response.text}", err=True)
            sys.exit(CHECK_EXIT)
        return response.json()


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, float):
        return repr(x)
    return str(x)


EXPERIMENT_HEADER = (
    "model,params,n,stat,R,seed,sample_mean,sample_var,"
    "oracle_mean,oracle_var,z_mean,d_K,tv,pass"
)


def _experiment_csv(rows: List[dict]) -> str:
    lines = [EXPERIMENT_HEADER]
    for row in rows:
        lines.append(
            ",".join(
                _fmt(row.get(key))
                for key in (
                    "model", "params", "n", "stat", "R", "seed",
                    "sample_mean", "sample_var", "oracle_mean", "oracle_var",
                    "z_mean", "d_K", "tv", "pass",
                )
            )
        )
    return "\n".join(lines) + "\n"


def _emit(text: str, outfile: Optional[str]) -> None:
    if not text.endswith("\n"):
        text += "\n"
    if outfile:
        with open(outfile, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def _model_payload(model, weights, theta, k, a, p) -> dict:
    payload = {"model": model}
    if weights is not None:
        payload["weights"] = weights
    if theta is not None:
        payload["theta"] = theta
    if k is not None:
        payload["k"] = k
    if a is not None:
        payload["a"] = a
    if p is not None:
        payload["p"] = [float(tok) for tok in p.split(",")]
    return payload


def _json_dump(data) -> str:
    return json.dumps(data, indent=2, sort_keys=True) + "\n"


model_options = [
    click.option("--model", type=click.Choice(["urt", "wrt", "hoppe", "thetak", "brt", "art"]),
                 help="tree model"),
    click.option("--weights", default=None,
                 help="weight preset: const|hoppe:T|thetak:T,K|linear|power:K|recip:K|log|geom:A|table:FILE"),
    click.option("--theta", type=float, default=None, help="root weight theta"),
    click.option("--k", type=int, default=None, help="number of heavy nodes / descendant count"),
    click.option("--a", type=int, default=None, help="uniform pile count"),
    click.option("--p", default=None, help="comma-separated pile probabilities"),
]


def with_model_options(fn):
    for option in reversed(model_options):
        fn = option(fn)
    return fn


@click.group()
@click.option("--server", default=None, envvar="RECTREE_SERVER",
              help="URL of a running rectree service; default runs in-process")
@click.pass_context
def main(ctx, server):
    """Generate, enumerate and verify random recursive trees."""
    ctx.obj = {"server": server}


def _client(ctx) -> ServiceClient:
    return ServiceClient(ctx.obj.get("server"))


def _resolve_threads(threads):
    return threads if threads else (os.cpu_count() or 1)


@main.command()
@with_model_options
@click.option("--n", type=int, required=True, help="tree size")
@click.option("--reps", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, envvar="RECTREE_SEED", show_default=True)
@click.option("--stat", default=None, help="statistic to evaluate; omit to emit trees")
@click.option("--threads", type=int, default=None,
              help="worker threads [default: logical cores]")
@click.option("--out", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--outfile", default=None)
@click.pass_context
def sample(ctx, model, weights, theta, k, a, p, n, reps, seed, stat, threads, out, outfile):
    """Draw seeded samples and print their statistics (or the trees)."""
    if model is None:
        raise click.UsageError("--model is required")
    payload = {
        "model": _model_payload(model, weights, theta, k, a, p),
        "n": n, "reps": reps, "seed": seed, "threads": _resolve_threads(threads),
    }
    if stat:
        payload["stat"] = stat
    data = _client(ctx).post("/sample", payload)
    if out == "json":
        _emit(_json_dump(data), outfile)
        return
    if stat:
        lines = ["rep,value"]
        lines += [f"{i},{_fmt(v)}" for i, v in enumerate(data["values"])]
        _emit("\n".join(lines) + "\n", outfile)
    else:
        _emit("\n".join(t.rstrip("\n") for t in data["trees"]) + "\n", outfile)


@main.command(name="enumerate")
@with_model_options
@click.option("--n", type=int, required=True)
@click.option("--stat", default=None, help="push the tree pmf through a statistic")
@click.option("--out", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--outfile", default=None)
@click.pass_context
def enumerate_cmd(ctx, model, weights, theta, k, a, p, n, stat, out, outfile):
    """Exact distribution over trees (or a statistic) by full enumeration."""
    if model is None:
        raise click.UsageError("--model is required")
    payload = {"model": _model_payload(model, weights, theta, k, a, p), "n": n}
    if stat:
        payload["stat"] = stat
    data = _client(ctx).post("/enumerate", payload)
    if out == "json":
        _emit(_json_dump(data), outfile)
        return
    lines = ["key,probability"]
    for key, prob in zip(data["keys"], data["probabilities"]):
        lines.append(f"\"{key}\",{_fmt(float(prob))}")
    _emit("\n".join(lines) + "\n", outfile)


def _run_verify(client: ServiceClient, payload: dict) -> dict:
    return client.post("/verify", payload)


@main.command()
@with_model_options
@click.option("--n", type=int, default=None)
@click.option("--reps", type=int, default=10**5, show_default=True)
@click.option("--seed", type=int, default=0, envvar="RECTREE_SEED", show_default=True)
@click.option("--stat", default=None)
@click.option("--mode", type=click.Choice(
    ["oracle-moments", "exact-pmf", "normal-CLT", "concentration", "limit-constant"]),
    default="oracle-moments", show_default=True)
@click.option("--t-grid", default=None, help="comma list of t values (concentration mode)")
@click.option("--threads", type=int, default=None,
              help="worker threads [default: logical cores]")
@click.option("--config", "config_path", default=None,
              help="key=value stanza file; one experiment per blank-line-separated stanza")
@click.option("--out", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--outfile", default=None)
@click.pass_context
def verify(ctx, model, weights, theta, k, a, p, n, reps, seed, stat, mode,
           t_grid, threads, config_path, out, outfile):
    """Check sampled statistics against their closed-form oracles."""
    client = _client(ctx)
    if config_path:
        conflicting = [name for name, value in
                       [("--model", model), ("--stat", stat), ("--n", n)]
                       if value is not None]
        if conflicting:
            raise click.UsageError(
                f"--config conflicts with {', '.join(conflicting)}; "
                "config stanzas must fully describe each experiment"
            )
        payloads = [_stanza_payload(s) for s in _read_stanzas(config_path)]
    else:
        if model is None or stat is None or n is None:
            raise click.UsageError("--model, --stat and --n are required (or use --config)")
        payload = {
            "model": _model_payload(model, weights, theta, k, a, p),
            "stat": stat, "n": n, "reps": reps, "seed": seed,
            "mode": mode, "threads": _resolve_threads(threads),
        }
        if t_grid:
            payload["t_grid"] = [float(t) for t in t_grid.split(",")]
        payloads = [payload]
    rows, all_passed = [], True
    for payload in payloads:
        data = _run_verify(client, payload)
        rows.extend(data["rows"])
        all_passed &= data["all_passed"]
    text = _experiment_csv(rows) if out == "csv" else _json_dump(rows)
    _emit(text, outfile)
    if not all_passed:
        sys.exit(CHECK_EXIT)


def _read_stanzas(path: str) -> List[Dict[str, str]]:
    stanzas: List[Dict[str, str]] = []
    current: Dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                if current:
                    stanzas.append(current)
                    current = {}
                continue
            if line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise click.UsageError(f"bad config line {line!r} (expected key=value)")
            key = key.strip()
            if key in current:
                raise click.UsageError(f"duplicate key {key!r} in config stanza")
            current[key] = value.strip()
    if current:
        stanzas.append(current)
    return stanzas


def _stanza_payload(stanza: Dict[str, str]) -> dict:
    known = {"model", "weights", "theta", "k", "a", "p", "n", "reps", "seed",
             "stat", "mode", "threads", "t_grid"}
    unknown = set(stanza) - known
    if unknown:
        raise click.UsageError(f"unknown config keys: {sorted(unknown)}")
    if "model" not in stanza or "stat" not in stanza or "n" not in stanza:
        raise click.UsageError("each config stanza needs model, stat and n")
    payload = {
        "model": _model_payload(
            stanza["model"],
            stanza.get("weights"),
            float(stanza["theta"]) if "theta" in stanza else None,
            int(stanza["k"]) if "k" in stanza else None,
            int(stanza["a"]) if "a" in stanza else None,
            stanza.get("p"),
        ),
        "stat": stanza["stat"],
        "n": int(stanza["n"]),
        "reps": int(stanza.get("reps", 100000)),
        "seed": int(stanza.get("seed", 0)),
        "mode": stanza.get("mode", "oracle-moments"),
        "threads": int(stanza.get("threads", 1)),
    }
    if "t_grid" in stanza:
        payload["t_grid"] = [float(t) for t in stanza["t_grid"].split(",")]
    return payload


@main.command()
@with_model_options
@click.option("--stat", required=True)
@click.option("--n", "n_grid", required=True,
              help="comma-separated strictly increasing n grid")
@click.option("--reps", type=int, default=10**5, show_default=True)
@click.option("--seed", type=int, default=0, envvar="RECTREE_SEED", show_default=True)
@click.option("--threads", type=int, default=None,
              help="worker threads [default: logical cores]")
@click.option("--out", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--outfile", default=None)
@click.pass_context
def converge(ctx, model, weights, theta, k, a, p, stat, n_grid, reps, seed,
             threads, out, outfile):
    """Track the Kolmogorov distance to the normal over a grid of sizes."""
    if model is None:
        raise click.UsageError("--model is required")
    payload = {
        "model": _model_payload(model, weights, theta, k, a, p),
        "stat": stat,
        "n_grid": [int(tok) for tok in n_grid.split(",")],
        "reps": reps, "seed": seed, "threads": _resolve_threads(threads),
    }
    data = _client(ctx).post("/converge", payload)
    if out == "json":
        _emit(_json_dump(data), outfile)
    else:
        _emit(_experiment_csv(data["rows"]), outfile)
    if data["bounded_variance"]:
        click.echo("note: bounded oracle variance; normality reported, not asserted",
                   err=True)
    if not data["all_passed"]:
        sys.exit(CHECK_EXIT)


@main.command()
@click.option("--kind", type=click.Choice(["general", "thetak", "merge", "split", "inverse-merge"]),
              required=True)
@click.option("--n", type=int, required=True)
@click.option("--reps", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, envvar="RECTREE_SEED", show_default=True)
@click.option("--weights", default=None)
@click.option("--theta", type=float, default=None)
@click.option("--k", type=int, default=None)
@click.option("--m", type=int, default=None)
@click.option("--stat", "stats", multiple=True, default=("leaves",), show_default=True)
@click.option("--exact-tv-n", type=int, default=None,
              help="also enumerate the coupling marginal law at this size")
@click.option("--out", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("--outfile", default=None)
@click.pass_context
def couple(ctx, kind, n, reps, seed, weights, theta, k, m, stats, exact_tv_n, out, outfile):
    """Run a coupling and emit paired source/derived statistics."""
    payload = {
        "kind": kind, "n": n, "reps": reps, "seed": seed, "stats": list(stats),
    }
    if weights is not None:
        payload["weights"] = weights
    if theta is not None:
        payload["theta"] = theta
    if k is not None:
        payload["k"] = k
    if m is not None:
        payload["m"] = m
    if exact_tv_n is not None:
        payload["exact_tv_n"] = exact_tv_n
    data = _client(ctx).post("/couple", payload)
    if out == "json":
        _emit(_json_dump(data), outfile)
    else:
        columns = ["rep"]
        for s in stats:
            columns += [f"source_{s}", f"derived_{s}"]
        lines = [",".join(columns)]
        for row in data["rows"]:
            cells = [str(row["rep"])]
            for s in stats:
                cells.append(_fmt(row["values"][f"source_{s}"]))
                cells.append(_fmt(row["values"][f"derived_{s}"]))
            lines.append(",".join(cells))
        _emit("\n".join(lines) + "\n", outfile)
    if not data["all_passed"]:
        sys.exit(CHECK_EXIT)


@main.command(epilog="Formula ids: " + " ".join(sorted(REGISTRY)))
@click.option("--oracle", "name", required=True, help="formula id (see `rectree oracles`)")
@click.option("--params", "params_json", default="{}",
              help="JSON object of formula parameters")
@click.option("--outfile", default=None)
@click.pass_context
def oracle(ctx, name, params_json, outfile):
    """Evaluate one closed-form oracle; prints JSON {value, formula_id, params}."""
    try:
        params = json.loads(params_json)
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"--params must be JSON: {exc}")
    data = _client(ctx).post("/oracle", {"name": name, "params": params})
    _emit(_json_dump(data), outfile)


@main.command()
@click.pass_context
def oracles(ctx):
    """List every formula id exposed by the oracle registry."""
    data = _client(ctx).get("/oracles")
    for info in data["formulas"]:
        args = ",".join(info["args"])
        click.echo(f"{info['formula_id']}({args}): {info['doc']}")


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def serve(host, port):
    """Run the HTTP service (the CLI's --server can then point at it)."""
    import uvicorn

    from .service.app import app

    uvicorn.run(app, host=host, port=port)


if __name__ == "__main__":
    main()
