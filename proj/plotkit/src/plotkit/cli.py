# Copyright 2026 The qpinn-lab Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""plotkit command line: plotkit <kind> INPUT... -o OUT [options]."""

from __future__ import annotations

import argparse
import sys

from plotkit.render import KINDS, FigureRequest, render
from plotkit.tables import SchemaError


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    p = argparse.ArgumentParser(prog="plotkit", description="Render figures from qpinn outputs.")
    p.add_argument("kind", choices=KINDS)
    p.add_argument("inputs", nargs="+", help="CSV files written by the qpinn tool")
    p.add_argument("-o", "--output", required=True, help="output .png or .svg")
    p.add_argument("--label", action="append", default=[], help="legend label, once per input")
    p.add_argument("--log-x", action="store_true", help="logarithmic epoch axis")
    p.add_argument("--linear-y", action="store_true", help="linear MSE / ratio axis")
    p.add_argument("--color-by-final-mse", action="store_true",
                   help="colour ratio lines by the final qPINN MSE from ratios.json")
    p.add_argument("--title", default="")
    return p.parse_args(argv)


def main(argv: list[str] | None = None) -> int:
    args = parse_args(argv)
    try:
        req = FigureRequest(kind=args.kind, inputs=args.inputs, output=args.output,
                            labels=args.label, log_x=args.log_x, log_y=not args.linear_y,
                            color_by_final_mse=args.color_by_final_mse, title=args.title)
        out = render(req)
    except SchemaError as e:
        print(f"plotkit: schema error: {e}", file=sys.stderr)
        return 2
    except (ValueError, FileNotFoundError) as e:
        print(f"plotkit: {e}", file=sys.stderr)
        return 2
    print(out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
