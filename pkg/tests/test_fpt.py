import math

import numpy as np
import pytest

from gmschauder.fpt import default_band, exhaustive_passage, first_passage
from gmschauder.process import make_ou, make_wiener
from gmschauder.sampler import sample_paths
from gmschauder.tree import uniform_tree

IDS = np.arange(2000)


def test_unreachable_barrier():
    res = first_passage(make_wiener(), uniform_tree(10), 100.0, 4, 10, 0, IDS, band=default_band(make_wiener(), uniform_tree(10), 4))
    assert res.crossings == 0
    assert res.refined_fraction == 0.0
    assert res.survival == 1.0 and res.survival_se == 0.0


@pytest.mark.parametrize("spec", [make_wiener(), make_ou(1.0)], ids=lambda s: s.label)
def test_infinite_band_is_exhaustive(spec):
    tree = uniform_tree(9)
    adaptive = first_passage(spec, tree, 0.8, 3, 9, 5, IDS, band=math.inf, chunk=300)
    full = exhaustive_passage(spec, tree, 0.8, 9, 5, IDS)
    assert np.array_equal(adaptive.crossed, full.crossed)
    assert np.array_equal(adaptive.crossing_times[adaptive.crossed], full.crossing_times[full.crossed])
    assert adaptive.refined_fraction == 1.0


def test_crossings_against_direct_grid_scan():
    spec, tree = make_wiener(), uniform_tree(8)
    paths = sample_paths(spec, tree, 8, 3, IDS)
    expected = (paths.values >= 1.0).any(axis=1)
    res = first_passage(spec, tree, 1.0, 2, 8, 3, IDS, band=math.inf)
    assert np.array_equal(res.crossed, expected)


def test_band_monotone():
    spec, tree = make_wiener(), uniform_tree(10)
    counts = [first_passage(spec, tree, 1.0, 4, 10, 1, IDS, band=b).crossings for b in (0.0, 0.05, 0.1, 0.2, 0.4, 0.8, 1.6)]
    assert counts == sorted(counts)
    fractions = [first_passage(spec, tree, 1.0, 4, 10, 1, IDS, band=b).refined_fraction for b in (0.1, 0.2, 0.4)]
    assert fractions == sorted(fractions) and fractions[-1] < 1


def test_refined_values_match_exhaustive():
    # a finite band can only miss crossings, never invent them
    spec, tree = make_wiener(), uniform_tree(10)
    part = first_passage(spec, tree, 1.0, 4, 10, 2, IDS, band=0.3)
    full = exhaustive_passage(spec, tree, 1.0, 10, 2, IDS)
    assert not np.any(part.crossed & ~full.crossed)
    both = part.crossed & full.crossed
    assert np.all(part.crossing_times[both] >= full.crossing_times[both])


def test_default_band_value():
    assert default_band(make_wiener(), uniform_tree(6), 4) == pytest.approx(0.5)


def test_histogram():
    res = first_passage(make_wiener(), uniform_tree(8), 1.0, 4, 8, 0, IDS)
    counts, edges = res.histogram(8)
    assert counts.sum() == res.crossings
    assert edges[0] == 0.0 and edges[-1] == 1.0


def test_argument_validation():
    spec, tree = make_wiener(), uniform_tree(6)
    for kwargs in ({"barrier": 0.0}, {"barrier": 1.0, "coarse": 7}, {"barrier": 1.0, "band": -1.0}):
        args = {"coarse": 2, "band": math.inf, **kwargs}
        with pytest.raises(ValueError):
            first_passage(spec, tree, args["barrier"], args["coarse"], 6, 0, IDS, band=args["band"])
