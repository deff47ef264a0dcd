"""Command-line front end; a thin client of the HTTP service.

Commands run against an in-process app by default, or against a running
server via ``--server URL``.  Either way the service computes everything
and the CLI only resolves inputs (token files, weight headers), sends one
request, and writes the response to a file, so outputs are byte-identical
across runs with the same flags and seed.
"""

from __future__ import annotations

import json
import re
import sys
from pathlib import Path

import click
import numpy as np

from .formats import render_json
from .toy import load_weights
from .errors import RemapError

DEFAULT_CAPACITY = 32
DEFAULT_RATE = 0.02
DEFAULT_WINDOW = 1024
DEFAULT_TRAIN_LEN = 4096
DEFAULT_BASE = 10000.0


def _fail(kind: str, detail: str) -> None:
    click.echo(f"error: {kind}: {detail}", err=True)
    sys.exit(2)


class ServiceClient:
    def __init__(self, server: str | None):
        if server:
            import httpx

            self._client = httpx.Client(base_url=server, timeout=120.0)
        else:
            import warnings

            with warnings.catch_warnings():
                # starlette deprecates httpx-backed TestClient in favor of
                # httpx2 (a UserWarning subclass), which is not installable
                # here; keep stderr clean.
                warnings.filterwarnings("ignore", message=".*httpx2.*", category=UserWarning)
                from fastapi.testclient import TestClient

            from .service import create_app

            self._client = TestClient(create_app())

    def post(self, path: str, payload: dict):
        resp = self._client.post(path, json=payload)
        if resp.status_code != 200:
            try:
                body = resp.json()
            except ValueError:
                _fail("service-error", f"status {resp.status_code}")
            if "error" in body:
                _fail(body["error"], body.get("detail", ""))
            detail = body.get("detail")
            if isinstance(detail, list) and detail:
                first = detail[0]
                loc = ".".join(str(p) for p in first.get("loc", []))
                _fail("invalid-config", f"{loc}: {first.get('msg', '')}")
            _fail("service-error", str(body))
        return resp


@click.group()
@click.option("--server", default=None, metavar="URL", help="Talk to a running service instead of in-process.")
@click.pass_context
def main(ctx: click.Context, server: str | None) -> None:
    """Grouped rotary position remapping: maps, matrices, capacities, toy runs."""
    ctx.obj = server


def _client(ctx: click.Context) -> ServiceClient:
    return ServiceClient(ctx.obj)


def grouping_options(f):
    f = click.option("--capacity", "-C", type=int, default=None, help="Logistic maximal group size.")(f)
    f = click.option("--rate", "-r", type=float, default=None, help=f"Logistic growth rate (default {DEFAULT_RATE}).")(f)
    f = click.option("--group-size", "-G", type=int, default=None, help="Constant group size (floor-based grouping).")(f)
    f = click.option("--tabulated", default=None, metavar="S1,S2,...", help="Explicit nondecreasing group sizes.")(f)
    return f


def resolve_grouping(capacity, rate, group_size, tabulated) -> dict:
    chosen = [v is not None for v in (capacity, group_size, tabulated)]
    if sum(chosen) > 1:
        _fail("invalid-config", "give only one of --capacity, --group-size, --tabulated")
    if rate is not None and capacity is None:
        _fail("invalid-config", "--rate only applies to --capacity groupings")
    if group_size is not None:
        return {"variant": "constant", "size": group_size}
    if tabulated is not None:
        try:
            sizes = [int(s) for s in tabulated.split(",") if s]
        except ValueError:
            _fail("invalid-config", f"bad --tabulated list {tabulated!r}")
        return {"variant": "tabulated", "sizes": sizes}
    c = capacity if capacity is not None else DEFAULT_CAPACITY
    if c == 1:
        return {"variant": "constant", "size": 1}
    return {"variant": "logistic", "capacity": c, "growth_rate": rate if rate is not None else DEFAULT_RATE}


def _write_text(path: Path, text: str) -> None:
    path.write_text(text)


def _write_json_response(path: Path, resp) -> None:
    _write_text(path, render_json(resp.json()))


@main.command("map")
@grouping_options
@click.option("--n", type=int, required=True, help="Sequence length.")
@click.option("-o", "--output", type=click.Path(path_type=Path), default=Path("map.json"))
@click.pass_context
def cmd_map(ctx, capacity, rate, group_size, tabulated, n, output):
    """Dump the token-position -> group-index map as JSON."""
    payload = {"n": n, "function": resolve_grouping(capacity, rate, group_size, tabulated)}
    _write_json_response(output, _client(ctx).post("/map", payload))


@main.command("relpos")
@grouping_options
@click.option("--n", type=int, required=True, help="Sequence length.")
@click.option("--window", "-W", type=int, default=DEFAULT_WINDOW, show_default=True)
@click.option("--train-len", "-L", type=int, default=DEFAULT_TRAIN_LEN, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True,
              help="csv: relative-position matrix; json: full position assignment.")
@click.option("-o", "--output", type=click.Path(path_type=Path), default=None)
@click.pass_context
def cmd_relpos(ctx, capacity, rate, group_size, tabulated, n, window, train_len, fmt, output):
    """Dump pairwise relative positions (csv) or the position assignment (json)."""
    payload = {
        "n": n,
        "window": window,
        "train_len": train_len,
        "function": resolve_grouping(capacity, rate, group_size, tabulated),
        "format": fmt,
    }
    resp = _client(ctx).post("/relpos", payload)
    output = output or Path("assignment.json" if fmt == "json" else "relpos.csv")
    if fmt == "json":
        _write_json_response(output, resp)
    else:
        _write_text(output, resp.text)


def _int_list(raw: str | None, flag: str) -> list[int]:
    if raw is None:
        return []
    try:
        return [int(s) for s in raw.split(",") if s]
    except ValueError:
        _fail("invalid-config", f"bad {flag} list {raw!r}")


@main.command("capacity")
@click.option("--capacity", "-C", default=None, metavar="C1,C2,...", help="Logistic capacities to sweep.")
@click.option("--rate", "-r", type=float, default=DEFAULT_RATE, show_default=True)
@click.option("--group-size", "-G", default=None, metavar="G1,G2,...", help="Constant sizes to sweep.")
@click.option("--tabulated", default=None, metavar="S1,S2,...", help="One explicit size table.")
@click.option("--window", "-W", type=int, default=DEFAULT_WINDOW, show_default=True)
@click.option("--train-len", "-L", type=int, default=DEFAULT_TRAIN_LEN, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv", show_default=True)
@click.option("-o", "--output", type=click.Path(path_type=Path), default=None)
@click.pass_context
def cmd_capacity(ctx, capacity, rate, group_size, tabulated, window, train_len, fmt, output):
    """Tabulate maximum context lengths over a sweep of grouping schemes."""
    functions: list[dict] = []
    for c in _int_list(capacity, "--capacity"):
        if c == 1:
            functions.append({"variant": "constant", "size": 1})
        else:
            functions.append({"variant": "logistic", "capacity": c, "growth_rate": rate})
    for g in _int_list(group_size, "--group-size"):
        functions.append({"variant": "constant", "size": g})
    if tabulated is not None:
        functions.append({"variant": "tabulated", "sizes": _int_list(tabulated, "--tabulated")})
    if not functions:
        functions.append({"variant": "logistic", "capacity": DEFAULT_CAPACITY, "growth_rate": rate})
    payload = {"window": window, "train_len": train_len, "functions": functions, "format": fmt}
    resp = _client(ctx).post("/capacity", payload)
    output = output or Path(f"capacity.{fmt}")
    if fmt == "json":
        _write_json_response(output, resp)
    else:
        _write_text(output, resp.text)


@main.command("compare")
@click.option("--capacity", "-C", type=int, default=DEFAULT_CAPACITY, show_default=True)
@click.option("--rate", "-r", type=float, default=DEFAULT_RATE, show_default=True)
@click.option("--group-size", "-G", type=int, required=True, help="Constant scheme to compare against.")
@click.option("--n", type=int, required=True, help="Sequence length.")
@click.option("--window", "-W", type=int, default=DEFAULT_WINDOW, show_default=True)
@click.option("--train-len", "-L", type=int, default=DEFAULT_TRAIN_LEN, show_default=True)
@click.option("-o", "--output", type=click.Path(path_type=Path), default=Path("compare.json"))
@click.pass_context
def cmd_compare(ctx, capacity, rate, group_size, n, window, train_len, output):
    """Report constant vs logistic grouping structure at one sequence length."""
    payload = {
        "n": n,
        "window": window,
        "train_len": train_len,
        "constant_size": group_size,
        "capacity": capacity,
        "growth_rate": rate,
    }
    _write_json_response(output, _client(ctx).post("/compare", payload))


@main.command("toynll")
@grouping_options
@click.option("--n", type=int, default=None, help="Generate this many random tokens from the seed.")
@click.option("--tokens-file", type=click.Path(path_type=Path), default=None,
              help="File of whitespace/comma separated token ids.")
@click.option("--vocab", type=int, default=256, show_default=True)
@click.option("--layers", type=int, default=1, show_default=True)
@click.option("--heads", type=int, default=2, show_default=True)
@click.option("--head-dim", type=int, default=16, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--weights", type=click.Path(path_type=Path), default=None,
              help="Seeded weights file; its header overrides the shape flags.")
@click.option("--window", "-W", type=int, default=DEFAULT_WINDOW, show_default=True)
@click.option("--train-len", "-L", type=int, default=DEFAULT_TRAIN_LEN, show_default=True)
@click.option("--base", type=float, default=DEFAULT_BASE, show_default=True)
@click.option("-o", "--output", type=click.Path(path_type=Path), default=Path("toynll.csv"))
@click.pass_context
def cmd_toynll(ctx, capacity, rate, group_size, tabulated, n, tokens_file, vocab, layers,
               heads, head_dim, seed, weights, window, train_len, base, output):
    """Vanilla vs merged per-position NLL of the seeded toy decoder, as CSV."""
    if weights is not None:
        try:
            loaded = load_weights(weights)
        except FileNotFoundError:
            _fail("invalid-input", f"weights file {weights} not found")
        except RemapError as exc:
            _fail(exc.kind, exc.detail)
        vocab, layers, heads, head_dim, seed = (
            loaded.vocab, loaded.layers, loaded.heads, loaded.head_dim, loaded.seed,
        )
    if tokens_file is not None:
        try:
            raw = tokens_file.read_text()
        except FileNotFoundError:
            _fail("invalid-input", f"tokens file {tokens_file} not found")
        tokens = [int(t) for t in re.split(r"[\s,]+", raw.strip()) if t]
    elif n is not None:
        tokens = np.random.default_rng([seed, 1]).integers(0, vocab, size=n).tolist()
    else:
        _fail("invalid-config", "give --n or --tokens-file")
    payload = {
        "tokens": tokens,
        "vocab": vocab,
        "layers": layers,
        "heads": heads,
        "head_dim": head_dim,
        "seed": seed,
        "window": window,
        "train_len": train_len,
        "function": resolve_grouping(capacity, rate, group_size, tabulated),
        "base": base,
    }
    _write_text(output, _client(ctx).post("/toynll", payload).text)


@main.command("serve")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
def cmd_serve(host: str, port: int) -> None:
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("grouprope.service:app", host=host, port=port)


if __name__ == "__main__":
    main()
