from itertools import permutations


def brute_matching(xs, ys, related):
    """
    Return `!True` if a perfect matching between *xs* and *ys* exists.

    Try every permutation: only usable on short sequences.
    """
    if len(xs) != len(ys):
        return False
    return any(
        all(related(x, ys[j]) for x, j in zip(xs, perm))
        for perm in permutations(range(len(ys)))
    )


def is_matching(pairs, xs, ys, related):
    """Verify that *pairs* is a perfect matching of *xs* and *ys*."""
    lefts = sorted(i for i, _ in pairs)
    rights = sorted(j for _, j in pairs)
    if lefts != list(range(len(xs))) or rights != list(range(len(ys))):
        return False
    return all(related(xs[i], ys[j]) for i, j in pairs)
