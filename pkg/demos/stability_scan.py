"""Scan characteristic varieties across levels and report stability.

For each module the script computes Char^(m) for m = 0..2 together with a
microlocal-support crosscheck, and reports the least level from which the
variety stops changing (if the certificates are complete).

The Euler module D/(x d - 1) is stable from level 0; D/(d - x) flips between
levels 0 and 1 and is stable only from level 1.

Run:  python3 demos/stability_scan.py
"""

from microdiff import Bounds, CyclicModule, DiffOp, render_diffop, stability_probe

P = 2


def main() -> None:
    d = DiffOp.dx(P, 0)
    x = DiffOp.x(P, 0)
    modules = [
        ("Euler", x * d - DiffOp.one(P, 0)),
        ("exponential-type", d - x),
    ]
    for name, rel in modules:
        M = CyclicModule(P, 0, [rel])
        probe = stability_probe(M, mprime_max=2, bounds=Bounds(), window=-10)
        print(f"module D/({render_diffop(rel)})  [{name}]")
        for row in probe["rows"]:
            desc = row["char"]["char_class"]
            if row["char"]["fibers"]:
                desc += f" {row['char']['fibers']}"
            agree = row["crosscheck"]["agree"]
            print(
                f"  level {row['level']}: Char = {desc:<28} "
                f"complete={row['char']['complete']}  support-agree={agree}"
            )
        print(f"  stable from level: {probe['stable_from']}\n")


if __name__ == "__main__":
    main()
