"""Command-line entry point.

Either a spec file:  hamscan-figures --spec fig.json
or flags:            hamscan-figures decay --inputs out/trace.csv --output decay.png

Exit codes: 0 success, 1 rendering failure, 2 spec/schema error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .render import KINDS, FigureSpec, SchemaError, render

log = logging.getLogger("hamscan_figures")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="hamscan-figures",
        description="Render hamscan CSV/JSON outputs to figure files",
    )
    parser.add_argument("kind", nargs="?", choices=KINDS, help="figure kind")
    parser.add_argument("--spec", default=None, help="JSON figure spec")
    parser.add_argument("--inputs", nargs="+", default=None, help="input data files")
    parser.add_argument("--output", default=None, help="output image path")
    parser.add_argument("--title", default=None)
    parser.add_argument("--linear-y", action="store_true",
                        help="use a linear error axis on decay plots")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.spec is not None:
            spec = FigureSpec.from_json(args.spec)
        else:
            if args.kind is None or args.inputs is None or args.output is None:
                log.error("need either --spec or: <kind> --inputs ... --output ...")
                return 2
            spec = FigureSpec(
                kind=args.kind,
                inputs=list(args.inputs),
                output=args.output,
                log_y=not args.linear_y,
                title=args.title,
            )
        render(spec)
        return 0
    except SchemaError as exc:
        log.error("%s", exc)
        return 2
    except Exception:  # noqa: BLE001 - CLI boundary
        log.exception("rendering failed")
        return 1


if __name__ == "__main__":
    sys.exit(main())
