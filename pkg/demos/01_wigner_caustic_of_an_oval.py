"""Trace the equidistants of a gently wavy oval and name their singularities.

The midpoint set (lambda = 1/2) of a convex-ish closed curve is a caustic
with an odd number of cusps; off-center ratios add self-crossings.  This
script traces both, verifies each cusp is an A2 contact point and each
crossing an A1, and writes CSV + SVG files next to itself.
"""

import os

from equidistants import (
    classify_pair,
    detect_singularities,
    fourier_oval,
    trace_equidistant,
    write_branches_csv,
    write_branches_svg,
)

OUT = os.path.join(os.path.dirname(os.path.abspath(__file__)), "output")


def describe(branches, lam):
    print("lambda = {}:".format(lam))
    for i, branch in enumerate(branches):
        labels = [a.label for a in branch.annotations]
        print(
            "  branch {}: {} samples, {}, {} cusps, {} crossings".format(
                i,
                len(branch),
                branch.status,
                labels.count("A2_cusp"),
                labels.count("A1_node") // 2,
            )
        )
        for ann in branch.annotations:
            if ann.germ_class is not None:
                x = ", ".join("{:+.4f}".format(v) for v in ann.x)
                print(
                    "    {} at ({})  contact class {}".format(
                        ann.label, x, ann.germ_class.label
                    )
                )


def main():
    os.makedirs(OUT, exist_ok=True)
    oval = fourier_oval(a=[0.0, 0.0, 0.2])
    print("curve: polar oval r(theta) = 1 + 0.2 cos(3 theta)")
    print()

    for lam in (0.5, 0.3):
        branches = [detect_singularities(b) for b in trace_equidistant(oval, lam)]
        describe(branches, lam)

        main_branch = max(branches, key=len)
        for ann in main_branch.annotations:
            if ann.label == "A2_cusp":
                cls = classify_pair(oval, ann.pair, lam)
                print(
                    "  exact bridge on the first cusp pair: {} (mu={})".format(
                        cls.label, cls.mu
                    )
                )
                break

        prefix = os.path.join(OUT, "oval_lambda_{}".format(str(lam).replace(".", "_")))
        write_branches_csv(branches, prefix + ".csv")
        write_branches_svg(branches, prefix + ".svg")
        print("  wrote {0}.csv and {0}.svg".format(prefix))
        print()


if __name__ == "__main__":
    main()
