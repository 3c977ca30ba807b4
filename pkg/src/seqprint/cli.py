"""Command-line interface: ``seqprint generate | analyze | compare | fingerprint``.

Exit status: 0 success, 1 usage or validation error, 2 data or format error,
3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import IncompatibleAnalysisError, SeqprintError
from .fingerprint import compute_fingerprint
from .pipeline import analyze_corpus, compare, null_baseline, read_analysis, write_analysis
from .report import format_tables, write_report
from .seqgen import ArxKeystream, BiasedBits, Lcg, UniformRef, generate_corpus, read_corpus, write_corpus

log = logging.getLogger("seqprint")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3

DEFAULT_COUNT = 10000
DEFAULT_LENGTH = 4096
DEFAULT_M_SET = (8, 16, 32)
DEFAULT_SHUFFLES = 100


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _m_list(text: str) -> tuple:
    try:
        ms = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not ms:
        raise argparse.ArgumentTypeError("m list is empty")
    return ms


def _uint64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="seqprint", description="Structural fingerprinting of generator bit sequences.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("generate", help="write a seeded corpus file")
    g.add_argument("--gen", choices=("arx", "lcg", "biased", "uniform"), default="arx")
    g.add_argument("--rounds", type=int, help="ARX rounds (even, 2..20; default 20)")
    g.add_argument("--bits-per-step", type=int, help="LCG output bits per step (default 1)")
    g.add_argument("--p-one", type=float, help="probability of a 1 bit for --gen biased")
    g.add_argument("--count", type=int, default=DEFAULT_COUNT)
    g.add_argument("--length", type=int, default=DEFAULT_LENGTH, help="bits per sequence")
    g.add_argument("--seed", type=_uint64, default=0)
    g.add_argument("--out", required=True, type=Path)

    a = sub.add_parser("analyze", help="pattern statistics of a corpus file")
    a.add_argument("corpus", type=Path)
    a.add_argument("--m", type=_m_list, default=DEFAULT_M_SET, help="comma-separated pattern lengths")
    a.add_argument("--out", required=True, type=Path, help="analysis JSON path")
    a.add_argument("--format", choices=("json", "csv", "table"), default="table")

    c = sub.add_parser("compare", help="compare two analyses against a permutation null")
    c.add_argument("cipher", type=Path, help="analysis of the cipher-side corpus")
    c.add_argument("reference", type=Path, help="analysis of the reference corpus")
    c.add_argument("--out-dir", required=True, type=Path)
    c.add_argument("--corpus-a", type=Path, help="corpus behind the cipher analysis (pooled null)")
    c.add_argument("--corpus-b", type=Path, help="corpus behind the reference analysis (pooled null)")
    c.add_argument("--null-corpus", type=Path, help="reference corpus split into halves (split null)")
    c.add_argument("--shuffles", type=int, default=DEFAULT_SHUFFLES)
    c.add_argument("--null-seed", type=_uint64, default=0)
    c.add_argument("--figures", action="store_true", help="also render PNG figures")
    c.add_argument("--format", choices=("json", "csv", "table"), default="table")

    f = sub.add_parser("fingerprint", help="corpus-level fingerprint vector")
    f.add_argument("corpus", type=Path)
    f.add_argument("--m", type=_m_list, default=DEFAULT_M_SET)
    f.add_argument("--out", required=True, type=Path)
    return p


def _spec_from_args(args):
    extra = {
        "arx": ("bits_per_step", "p_one"),
        "uniform": ("rounds", "bits_per_step", "p_one"),
        "lcg": ("rounds", "p_one"),
        "biased": ("rounds", "bits_per_step"),
    }[args.gen]
    bad = [f"--{k.replace('_', '-')}" for k in extra if getattr(args, k) is not None]
    if bad:
        raise UsageError(f"{', '.join(bad)} not valid with --gen {args.gen}")
    if args.gen == "arx":
        spec = ArxKeystream(rounds=20 if args.rounds is None else args.rounds)
    elif args.gen == "uniform":
        spec = UniformRef()
    elif args.gen == "lcg":
        spec = Lcg(bits_per_step=1 if args.bits_per_step is None else args.bits_per_step)
    else:
        if args.p_one is None:
            raise UsageError("--gen biased requires --p-one")
        spec = BiasedBits(p_one=args.p_one)
    try:
        spec.validate()
    except SeqprintError as exc:
        raise UsageError(str(exc)) from None
    return spec


def cmd_generate(args) -> int:
    spec = _spec_from_args(args)
    if args.count < 1 or args.length < 1:
        raise UsageError("--count and --length must be positive")
    corpus = generate_corpus(spec, args.seed, args.count, args.length)
    digest = write_corpus(corpus, args.out)
    print(f"{args.out}: {spec} seed={args.seed} count={corpus.count} "
          f"length_bits={corpus.length_bits} sha256={digest}")
    return EXIT_OK


def _metrics_rows(analysis):
    header = ["m", "total_windows", "distinct_count", "entropy_bits", "entropy_max_bits",
              "seq_entropy_mean", "seq_entropy_std", "max_prob", "distinct_fraction",
              "repeated_window_fraction", "mean_recurrence"]
    rows = []
    for m in analysis.m_set:
        s, sc = analysis[m].metrics, analysis[m]
        rows.append([m, s.total_windows, s.distinct_count, s.entropy_bits, s.entropy_max_bits,
                     sc.seq_entropy_mean, sc.seq_entropy_std, s.max_prob, s.distinct_fraction,
                     s.repeated_window_fraction, s.mean_recurrence])
    return header, rows


def cmd_analyze(args) -> int:
    corpus = read_corpus(args.corpus)
    analysis = analyze_corpus(corpus, args.m)
    write_analysis(analysis, args.out)
    if args.format == "json":
        sys.stdout.write(Path(args.out).read_text())
    else:
        header, rows = _metrics_rows(analysis)
        if args.format == "csv":
            w = csv.writer(sys.stdout, lineterminator="\n")
            w.writerow(header)
            w.writerows(rows)
        else:
            print(f"{args.corpus}: count={corpus.count} length_bits={corpus.length_bits}")
            for r in rows:
                print(f"  m={r[0]:<3d} H={r[3]:.4f}/{r[4]:.4f} bits  per-seq H={r[5]:.4f}±{r[6]:.4f}  "
                      f"max_p={r[7]:.3e}  repeated={r[9]:.4f}")
    return EXIT_OK


def _load_matching_corpus(path, analysis, label):
    corpus = read_corpus(path)
    if corpus.digest() != analysis.identity.get("digest"):
        raise IncompatibleAnalysisError(f"{path} is not the corpus behind the {label} analysis")
    return corpus


def cmd_compare(args) -> int:
    a = read_analysis(args.cipher)
    b = read_analysis(args.reference)
    if args.shuffles < 2:
        raise UsageError("--shuffles must be at least 2")
    pooled = args.corpus_a is not None or args.corpus_b is not None
    if pooled and (args.corpus_a is None or args.corpus_b is None):
        raise UsageError("--corpus-a and --corpus-b must be given together")
    if pooled and args.null_corpus is not None:
        raise UsageError("choose either --corpus-a/--corpus-b or --null-corpus")
    null = {}
    if pooled:
        ca = _load_matching_corpus(args.corpus_a, a, "cipher")
        cb = _load_matching_corpus(args.corpus_b, b, "reference")
        for m in a.m_set:
            null[m] = null_baseline(ca, m, args.shuffles, args.null_seed, other=cb)
    elif args.null_corpus is not None:
        ref = read_corpus(args.null_corpus)
        for m in a.m_set:
            null[m] = null_baseline(ref, m, args.shuffles, args.null_seed)
    report = compare(a, b, null)
    written = write_report(report, args.out_dir, figures=args.figures)
    if args.format == "table":
        print(format_tables(report))
    elif args.format == "csv":
        sys.stdout.write((Path(args.out_dir) / "deviation.csv").read_text())
    else:
        sys.stdout.write((Path(args.out_dir) / "report.json").read_text())
    log.info("wrote %s", ", ".join(str(p) for p in written))
    return EXIT_OK


def cmd_fingerprint(args) -> int:
    corpus = read_corpus(args.corpus)
    analysis = analyze_corpus(corpus, args.m)
    fp = compute_fingerprint([analysis[m].profile for m in analysis.m_set], analysis.m_set, "corpus")
    doc = fp.to_dict()
    doc["corpus"] = corpus.identity()
    args.out.write_text(json.dumps(doc, indent=2) + "\n")
    print(f"{args.out}: d={fp.d} m_set={list(fp.m_set)}")
    return EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "analyze": cmd_analyze,
    "compare": cmd_compare,
    "fingerprint": cmd_fingerprint,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"seqprint: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"seqprint {args.command}: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SeqprintError as exc:
        print(f"seqprint {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"seqprint {args.command}: I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        log.exception("internal error")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
