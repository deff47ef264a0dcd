"""Adapter CLI: flag names mirror the core `grouprope` tool."""

from __future__ import annotations

import subprocess
import sys
import tempfile
from pathlib import Path

import click
import numpy as np

from .errors import AdapterError
from .maps import assignment_arrays, read_assignment_json
from .patch import PatchSpec
from .sweep import perplexity_sweep, plot_length_curves, write_rows_csv
from .tiny import build_tiny_rotary_model


def _fail(kind: str, detail: str) -> None:
    click.echo(f"error: {kind}: {' '.join(str(detail).split())}", err=True)
    sys.exit(2)


@click.group()
def main() -> None:
    """Apply grouped rotary position remapping to pretrained causal models."""
    from transformers.utils import logging as hf_logging

    hf_logging.disable_progress_bar()


@main.command("make-tiny")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--vocab", type=int, default=128, show_default=True)
@click.option("--hidden", type=int, default=64, show_default=True)
@click.option("--layers", type=int, default=2, show_default=True)
@click.option("--heads", type=int, default=4, show_default=True)
@click.option("--kv-heads", type=int, default=None)
@click.option("--seed", type=int, default=0, show_default=True)
def cmd_make_tiny(out, vocab, hidden, layers, heads, kv_heads, seed):
    """Save a tiny random rotary model for desk-scale sweeps."""
    model = build_tiny_rotary_model(vocab, hidden, layers, heads, kv_heads, seed=seed)
    model.save_pretrained(out)
    click.echo(str(out))


def _build_specs(capacities, rates_default, group_sizes, window, include_off, max_len):
    specs = []
    if include_off:
        specs.append(PatchSpec(scheme="off"))
    for g in group_sizes:
        specs.append(PatchSpec(scheme="se", group_size=g, window=window, max_len=max_len))
    for c in capacities:
        specs.append(
            PatchSpec(scheme="self", capacity=c, growth_rate=rates_default, window=window, max_len=max_len)
        )
    return specs


def _int_list(raw: str | None) -> list[int]:
    if not raw:
        return []
    try:
        return [int(v) for v in raw.split(",") if v]
    except ValueError:
        _fail("invalid-config", f"bad integer list {raw!r}")


@main.command("sweep")
@click.option("--model", "model_path", type=click.Path(path_type=Path), required=True,
              help="Model directory loadable by transformers.")
@click.option("--tokens-file", type=click.Path(path_type=Path), default=None,
              help="Whitespace/comma separated token ids; defaults to seeded random ids.")
@click.option("--text-file", type=click.Path(path_type=Path), default=None,
              help="Raw text, tokenized with the model's own tokenizer.")
@click.option("--random-tokens", type=int, default=0, help="Generate this many random token ids.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--capacity", "-C", default=None, metavar="C1,C2,...", help="Logistic capacities (scheme self).")
@click.option("--rate", "-r", type=float, default=0.02, show_default=True)
@click.option("--group-size", "-G", default=None, metavar="G1,G2,...", help="Constant sizes (scheme se).")
@click.option("--window", "-W", type=int, default=1024, show_default=True)
@click.option("--include-off/--no-include-off", default=True, show_default=True,
              help="Also sweep the unpatched model.")
@click.option("--lengths", default="256,512,1024", show_default=True)
@click.option("--max-len", type=int, default=None)
@click.option("-o", "--output", type=click.Path(path_type=Path), default=Path("sweep.csv"))
@click.option("--plot", type=click.Path(path_type=Path), default=None)
def cmd_sweep(model_path, tokens_file, text_file, random_tokens, seed, capacity, rate,
              group_size, window, include_off, lengths, max_len, output, plot):
    """Perplexity of each scheme over ascending sequence lengths."""
    from transformers import AutoModelForCausalLM

    try:
        model = AutoModelForCausalLM.from_pretrained(model_path).eval()
    except OSError as exc:
        _fail("invalid-input", f"cannot load model from {model_path}: {exc}")
    lengths_list = sorted(_int_list(lengths))
    specs = _build_specs(_int_list(capacity), rate, _int_list(group_size), window, include_off, max_len)
    if tokens_file is not None and text_file is not None:
        _fail("invalid-config", "give only one of --tokens-file and --text-file")
    if text_file is not None:
        from transformers import AutoTokenizer

        try:
            tokenizer = AutoTokenizer.from_pretrained(model_path)
        except (OSError, ValueError) as exc:
            _fail("invalid-input", f"model at {model_path} has no usable tokenizer: {exc}")
        tokens = np.asarray(tokenizer(text_file.read_text())["input_ids"], dtype=np.int64)
    elif tokens_file is not None:
        tokens = np.asarray(
            [int(t) for t in tokens_file.read_text().replace(",", " ").split()], dtype=np.int64
        )
    else:
        count = random_tokens or (max(lengths_list) if lengths_list else 0)
        tokens = np.random.default_rng(seed).integers(0, model.config.vocab_size, size=count)
    try:
        rows = perplexity_sweep(model, tokens, specs, lengths_list)
    except AdapterError as exc:
        _fail(exc.kind, exc.detail)
    write_rows_csv(rows, output)
    if plot is not None:
        plot_length_curves(rows, plot)
    click.echo(str(output))


@main.command("parity")
@click.option("--n", type=int, required=True)
@click.option("--window", "-W", type=int, default=1024, show_default=True)
@click.option("--train-len", "-L", type=int, default=4096, show_default=True)
@click.option("--capacity", "-C", type=int, default=None)
@click.option("--rate", "-r", type=float, default=0.02, show_default=True)
@click.option("--group-size", "-G", type=int, default=None)
@click.option("--grouprope-bin", default="grouprope", show_default=True)
def cmd_parity(n, window, train_len, capacity, rate, group_size, grouprope_bin):
    """Check native maps against the core CLI's assignment JSON, exactly."""
    if (capacity is None) == (group_size is None):
        _fail("invalid-config", "give exactly one of --capacity or --group-size")
    if capacity is not None:
        scheme, flags = "self", ["--capacity", str(capacity), "--rate", str(rate)]
    else:
        scheme, flags = "se", ["--group-size", str(group_size)]
    with tempfile.TemporaryDirectory() as tmp:
        out = Path(tmp) / "assignment.json"
        cmd = [grouprope_bin, "relpos", "--n", str(n), "-W", str(window), "-L", str(train_len),
               "--format", "json", "-o", str(out), *flags]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        if proc.returncode != 0:
            _fail("invalid-input", f"core CLI failed: {proc.stderr.strip()}")
        dumped = read_assignment_json(out)
    key, query = assignment_arrays(n, window, scheme, capacity, rate, group_size)
    if not (np.array_equal(key, dumped["key_pos"]) and np.array_equal(query, dumped["query_pos"])):
        _fail("parity-mismatch", f"native maps differ from core dump for n={n} W={window}")
    click.echo(f"parity ok: n={n} W={window} scheme={scheme}")


if __name__ == "__main__":
    main()
