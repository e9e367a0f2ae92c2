"""Command-line entry point ``sfst``.

Exit codes: 0 success, 1 usage error, 2 domain error.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor

from sfst import algebra, ctc
from sfst.errors import SfstError
from sfst.fst import connect, read_symbols, read_text, write_text
from sfst.sampling import Rng, Sampler

COMMANDS = ("push", "conflate", "normalize", "total", "sample", "ctc-decode", "ctc-eval")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser():
    p = _Parser(prog="sfst", description="Stochastic FST normalization, sampling and CTC decoding.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--in", dest="inputs", action="append", metavar="PATH",
                   help="input file ('-' for stdin); ctc-decode accepts several")
    p.add_argument("--out", metavar="PATH", help="output file (default stdout)")
    p.add_argument("--n", type=int, default=1, help="number of samples")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-draws", type=int, default=600)
    p.add_argument("--theta", type=float, default=0.01)
    p.add_argument("--strategy", choices=[s.value for s in ctc.Strategy], default="second")
    p.add_argument("--labeling", help='space-separated labels, e.g. "a b b"')
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--symbols", metavar="PATH", help="symbol table ('name id' lines)")
    return p


def _read(path, stdin):
    if path in (None, "-"):
        return stdin.read()
    with open(path, "rb") as fh:
        return fh.read()


def _as_bytes(data):
    return data.encode("utf-8") if isinstance(data, str) else data


def _names(ids, symbols):
    if symbols:
        return " ".join(symbols.get(x, str(x)) for x in ids)
    return " ".join(str(x) for x in ids)


def _decode_file(path, cfg):
    with open(path, "rb") as fh:
        post = ctc.read_posterior(fh.read())
    return ctc.decode_posterior(post, cfg).to_dict(post.symbols)


def _run(args, stdin):
    inputs = args.inputs or ["-"]
    if args.command != "ctc-decode" and len(inputs) > 1:
        raise UsageError(f"{args.command} takes a single --in")
    symbols = None
    if args.symbols:
        symbols = read_symbols(_read(args.symbols, stdin))

    if args.command in ("push", "conflate", "normalize", "total", "sample"):
        fst = read_text(_read(inputs[0], stdin), symbols=symbols)
        if args.command == "push":
            return write_text(algebra.weight_push(connect(fst)))
        if args.command == "conflate":
            return write_text(algebra.conflate_epsilon_cycles(fst))
        if args.command == "normalize":
            return write_text(algebra.normalize(fst))
        if args.command == "total":
            total = algebra.grand_total(fst)
            if args.format == "json":
                return json.dumps({"total": total}) + "\n"
            return f"{total!r}\n"
        if args.n < 0:
            raise UsageError("--n must be >= 0")
        sampler = Sampler(fst)
        rng = Rng(args.seed)
        pairs = []
        for _ in range(args.n):
            path = sampler.draw(rng)
            pairs.append((path.istr(), path.ostr()))
        if args.format == "json":
            return "".join(
                json.dumps({"input": _names(i, symbols), "output": _names(o, symbols)}) + "\n"
                for i, o in pairs
            )
        return "".join(f"{_names(i, symbols)}\t{_names(o, symbols)}\n" for i, o in pairs)

    if args.command == "ctc-eval":
        if args.labeling is None:
            raise UsageError("ctc-eval needs --labeling")
        post = ctc.read_posterior(_read(inputs[0], stdin))
        try:
            labeling = post.ids(args.labeling.split())
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
        lattice = ctc.build_lattice(post)
        p = ctc.labeling_probability(lattice, ctc.build_labeling_fst(post.L, post.blank_id), labeling)
        if args.format == "json":
            return json.dumps({"labeling": " ".join(post.names(labeling)), "probability": p}) + "\n"
        return f"{p!r}\n"

    # ctc-decode
    try:
        cfg = ctc.DecodeConfig(args.max_draws, args.theta, ctc.Strategy(args.strategy), args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if "-" in inputs:
        if len(inputs) > 1:
            raise UsageError("stdin cannot be combined with other inputs")
        post = ctc.read_posterior(_read("-", stdin))
        results = [ctc.decode_posterior(post, cfg).to_dict(post.symbols)]
    elif args.jobs > 1 and len(inputs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_decode_file, inputs, [cfg] * len(inputs)))
    else:
        results = [_decode_file(path, cfg) for path in inputs]
    return "".join(json.dumps(r) + "\n" for r in results)


def main(argv=None, stdin=None, stdout=None, stderr=None):
    """Run the CLI; returns the process exit code."""
    stdin = stdin or sys.stdin.buffer
    stdout = stdout or sys.stdout.buffer
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        out = _as_bytes(_run(args, stdin))
    except UsageError as exc:
        stderr.write(f"sfst: usage error: {exc}\n")
        return 1
    except OSError as exc:
        stderr.write(f"sfst: {exc}\n")
        return 1
    except SfstError as exc:
        stderr.write(f"sfst: {type(exc).__name__}: {exc}\n")
        return 2
    if args.out:
        with open(args.out, "wb") as fh:
            fh.write(out)
    else:
        stdout.write(out)
        stdout.flush()
    return 0


def entry():
    sys.exit(main())


if __name__ == "__main__":
    entry()
