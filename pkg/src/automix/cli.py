"""Command-line interface: ``automix run <manifest.json> --out <dir> [...]``."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .errors import AutomixError
from . import psychoacoustics as psy
from .pipeline import run_session


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="automix",
        description="Masking-minimizing automatic mixer for multitrack speech sessions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="mix a session and write the analysis report")
    run.add_argument("manifest", type=Path, help="session manifest (JSON)")
    run.add_argument("--out", type=Path, required=True, help="output directory")
    run.add_argument("--seed", type=int, default=None, help="override the manifest RNG seed")
    run.add_argument(
        "--max-iter", type=int, default=None, help="override the iteration budget"
    )
    run.add_argument(
        "--target-lufs", type=float, default=None, help="override the loudness target"
    )
    run.add_argument(
        "--dump-bands",
        action="store_true",
        help="also write the critical-band table as bands.csv",
    )
    run.add_argument(
        "--no-plots", action="store_true", help="skip rendering the PNG figures"
    )
    return parser


def _dump_band_table(path: Path) -> None:
    table = psy.band_table()
    with path.open("w", encoding="utf-8") as fh:
        fh.write("band,lower_hz,center_hz,upper_hz,center_bark\n")
        for i in range(table.config.band_count):
            fh.write(
                f"{i},{table.lower_hz[i]:.3f},{table.center_hz[i]:.3f},"
                f"{table.upper_hz[i]:.3f},{table.center_bark[i]:.4f}\n"
            )


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        mix_result, search_result, written = run_session(
            args.manifest,
            args.out,
            seed=args.seed,
            max_iterations=args.max_iter,
            target_lufs=args.target_lufs,
            make_plots=not args.no_plots,
        )
        if args.dump_bands:
            bands_path = args.out / "bands.csv"
            _dump_band_table(bands_path)
            written.append(bands_path)
    except (AutomixError, OSError) as exc:
        print(f"automix: error: {exc}", file=sys.stderr)
        return 1

    report = mix_result.masking_report
    print(
        f"scenario {mix_result.scenario!r}: {len(search_result.trace.best_values)} iterations, "
        f"objective {mix_result.combined_objective:.6f} "
        f"(m_total {report.total:.6f}, m_diff {report.imbalance:.6f})"
    )
    print(f"wrote {len(written)} files to {args.out}")
    return 0


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
