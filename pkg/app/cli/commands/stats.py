import argparse

from app.cli.common import add_store_argument, open_store
from app.cli.output import JSON, add_format_argument, emit_json, render_table
from app.core.exceptions import EXIT_OK, UsageError
from app.services.kg_store import compute_stats, format_stats, stats_from_counts


def register(subparsers) -> None:
    parser = subparsers.add_parser("stats", help="entity, relation and triple counts, average degree, density")
    add_store_argument(parser, required=False)
    parser.add_argument(
        "--counts",
        type=int,
        nargs=3,
        metavar=("N_E", "N_R", "N_T"),
        help="compute from bare counts instead of a store",
    )
    parser.add_argument("--name", default=None, help="dataset label for the table row")
    add_format_argument(parser)
    parser.set_defaults(handler=run)


def run(args: argparse.Namespace) -> int:
    if (args.store is None) == (args.counts is None):
        raise UsageError("give exactly one of --store or --counts")
    if args.store is not None:
        stats = compute_stats(open_store(args.store))
        name = args.name or args.store.stem
    else:
        stats = stats_from_counts(*args.counts)
        name = args.name or "counts"
    row = format_stats(stats)

    if args.format == JSON:
        emit_json(
            {
                "dataset": name,
                "n_e": stats.n_e,
                "n_r": stats.n_r,
                "n_t": stats.n_t,
                "avg_degree": stats.avg_degree,
                "density": stats.density,
                "display": row,
            }
        )
        return EXIT_OK
    render_table(
        ["Dataset", "n_e", "n_r", "n_t", "avgDeg", "density", "density (sci)"],
        [[name, row["n_e"], row["n_r"], row["n_t"], row["avgDeg"], row["density"], row["density_sci"]]],
        title="Description of dataset",
        right_align=("n_e", "n_r", "n_t", "avgDeg", "density", "density (sci)"),
    )
    return EXIT_OK
