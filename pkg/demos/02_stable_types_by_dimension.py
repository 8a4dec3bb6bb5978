"""Enumerate every stable contact type of weakly parallel points.

For a pair of n-dimensional submanifolds in R^q the stable types form a
finite list only inside the nice dimension range.  This script sweeps all
dimension pairs with n < q <= 2n, prints the full two-column table of
catalogues by corank k, and shows why the excluded pairs fall outside.
"""

from equidistants import (
    NotNiceDimensionsError,
    format_stable_table,
    is_nice_dimensions,
    stable_singularities,
)


def main():
    accepted = []
    rejected = []
    for n in range(1, 7):
        for q in range(n + 1, 2 * n + 1):
            if is_nice_dimensions(n, q):
                accepted.append(stable_singularities(n, q))
            else:
                rejected.append((n, q))

    print("stable types by dimension pair (n = submanifold, q = ambient):")
    print()
    print(format_stable_table(accepted))
    print()

    print("labels printed under a unified series name:")
    for listing in accepted:
        for shown, source in sorted(listing.interpreted.items()):
            print(
                "  (n,q) = ({},{}): {} appears as {} in the source tables".format(
                    listing.n, listing.q, shown, source
                )
            )
    print()

    print("types admitted by the codimension count but excluded from the lists:")
    for listing in accepted:
        for row in listing.rows:
            for cls, reason in row.excluded:
                print(
                    "  (n,q) = ({},{}), k = {}: {} ({})".format(
                        listing.n, listing.q, row.k, cls.label, reason
                    )
                )
    print()

    print("pairs outside the nice range have no finite list:")
    for n, q in rejected:
        try:
            stable_singularities(n, q)
        except NotNiceDimensionsError as exc:
            print("  (n,q) = ({},{}): {}".format(n, q, exc))


if __name__ == "__main__":
    main()
