#!/usr/bin/env python3
"""Write the bundled IEEE test cases as MATPOWER-format text files.

The case data comes from PYPOWER (``pip install pypower``), which ships the
standard MATPOWER tables. Only the bus, gen and branch blocks are emitted.
"""

import argparse
import pathlib

from pypower import case14, case39, case118


def fmt_row(row, ints):
    out = []
    for i, v in enumerate(row):
        if i in ints:
            out.append(str(int(v)))
        else:
            out.append(repr(float(v)))
    return "\t" + "\t".join(out) + ";"


def write_case(name, mpc, path):
    lines = [
        f"function mpc = {name}",
        f"% {name}: exported from the standard MATPOWER tables",
        "",
        "mpc.version = '2';",
        f"mpc.baseMVA = {float(mpc['baseMVA'])!r};",
        "",
        "%% bus data",
        "%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin",
        "mpc.bus = [",
    ]
    lines += [fmt_row(r[:13], {0, 1, 6, 10}) for r in mpc["bus"]]
    lines += [
        "];",
        "",
        "%% generator data",
        "%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin",
        "mpc.gen = [",
    ]
    lines += [fmt_row(r[:10], {0, 7}) for r in mpc["gen"]]
    lines += [
        "];",
        "",
        "%% branch data",
        "%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax",
        "mpc.branch = [",
    ]
    lines += [fmt_row(r[:13], {0, 1, 10}) for r in mpc["branch"]]
    lines += ["];", ""]
    path.write_text("\n".join(lines))


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--out", default=str(pathlib.Path(__file__).parent.parent / "data" / "cases"))
    args = parser.parse_args()
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name, fn in (("case14", case14.case14), ("case39", case39.case39), ("case118", case118.case118)):
        write_case(name, fn(), out / f"{name}.m")


if __name__ == "__main__":
    main()
