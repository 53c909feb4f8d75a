"""Benchmark the two import-specifier extractors over synthetic sources.

The dependency graph builder prefers the compiled tree-sitter engine and
falls back to a regex scan when the native module is unavailable. This
script times both paths on the same generated JS/TS corpus and verifies
they agree before reporting.

Usage: python3 benchmarks/import_extraction.py [--files N] [--loc N] [--repeat N]
"""

from __future__ import annotations

import argparse
import random
import statistics
import time

from contextcov import engine
from contextcov.graphs import (
    js_import_specifiers_native,
    js_import_specifiers_regex,
)

MODULE_NAMES = [
    "./watcher",
    "./paths",
    "../common/lifecycle",
    "../../base/common/event",
    "vs/platform/registry",
    "react",
    "node:fs",
]


def synthetic_source(rng: random.Random, loc: int) -> bytes:
    """A JS/TS file mixing import styles with ordinary statement noise."""
    lines = []
    for i in range(loc):
        roll = rng.random()
        spec = rng.choice(MODULE_NAMES)
        if roll < 0.08:
            lines.append(f'import {{ thing{i} }} from "{spec}";')
        elif roll < 0.12:
            lines.append(f'import * as ns{i} from "{spec}";')
        elif roll < 0.15:
            lines.append(f'const mod{i} = require("{spec}");')
        elif roll < 0.17:
            lines.append(f'const lazy{i} = await import("{spec}");')
        elif roll < 0.20:
            lines.append(f"// import commented out from \"{spec}\"")
        else:
            lines.append(f"export const value{i} = compute({i}) + {i};")
    return ("\n".join(lines) + "\n").encode("utf-8")


def time_extractor(fn, corpus: list[bytes], repeat: int) -> list[float]:
    samples = []
    for _ in range(repeat):
        started = time.perf_counter()
        for source in corpus:
            fn(source)
        samples.append(time.perf_counter() - started)
    return samples


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--files", type=int, default=200, help="corpus size")
    parser.add_argument("--loc", type=int, default=300, help="lines per file")
    parser.add_argument("--repeat", type=int, default=5, help="timed passes")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    if not engine.native_available():
        parser.error("native engine not available; nothing to compare")

    rng = random.Random(args.seed)
    corpus = [synthetic_source(rng, args.loc) for _ in range(args.files)]
    total_bytes = sum(len(s) for s in corpus)
    print(
        f"corpus: {args.files} files, {args.loc} loc each, "
        f"{total_bytes / 1024:.0f} KiB total"
    )

    disagreements = 0
    for source in corpus:
        native = js_import_specifiers_native(source, "typescript")
        regex = js_import_specifiers_regex(source)
        # The regex path cannot see comments, so it may over-report there;
        # everything the parser finds must also be found by the fallback.
        if not set(native) <= set(regex):
            disagreements += 1
    print(f"agreement: native subset of regex on {args.files - disagreements}/{args.files} files")
    if disagreements:
        print("warning: extractors disagree; timings below are not comparable")
        return 1

    native_samples = time_extractor(
        lambda s: js_import_specifiers_native(s, "typescript"), corpus, args.repeat
    )
    regex_samples = time_extractor(js_import_specifiers_regex, corpus, args.repeat)

    def report(label: str, samples: list[float]) -> float:
        best = min(samples)
        mean = statistics.mean(samples)
        print(f"{label:>10}: best {best * 1000:8.1f} ms  mean {mean * 1000:8.1f} ms")
        return best

    native_best = report("native", native_samples)
    regex_best = report("regex", regex_samples)
    faster, slower = (
        ("regex", native_best / regex_best)
        if regex_best < native_best
        else ("native", regex_best / native_best)
    )
    print(f"{faster} path is {slower:.1f}x faster on this corpus")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
