from __future__ import annotations

import random

import pytest

from agentfield.clustering import (
    NOISE,
    StepClusters,
    cluster_timeline,
    clusters_from_labels,
    dbscan_labels,
    read_clusters,
    write_clusters,
)
from agentfield.world import Position, torus_chebyshev


def components_oracle(positions, eps, side):
    """Brute-force connected components of the within-eps graph.

    Singletons become noise. Components are numbered by their lowest member
    id in visit order, matching the dense first-appearance labeling.
    """
    ids = sorted(positions)
    labels = {}
    next_label = 0
    for i in ids:
        if i in labels:
            continue
        component = {i}
        frontier = [i]
        while frontier:
            a = frontier.pop()
            for b in ids:
                if b not in component and torus_chebyshev(
                    positions[a], positions[b], side
                ) <= eps:
                    component.add(b)
                    frontier.append(b)
        if len(component) == 1:
            labels[i] = NOISE
        else:
            for member in component:
                labels[member] = next_label
            next_label += 1
    return labels


def test_single_point_is_noise():
    assert dbscan_labels({0: Position(1, 1)}, 5, 50) == {0: NOISE}


def test_pair_within_eps_clusters():
    positions = {0: Position(0, 0), 1: Position(3, 3), 2: Position(20, 20)}
    labels = dbscan_labels(positions, 5, 50)
    assert labels == {0: 0, 1: 0, 2: NOISE}


def test_chain_connects_through_middle():
    # 0-1 and 1-2 within eps, 0-2 not: one cluster through density chaining.
    positions = {0: Position(0, 0), 1: Position(4, 0), 2: Position(8, 0)}
    labels = dbscan_labels(positions, 4, 50)
    assert labels == {0: 0, 1: 0, 2: 0}


def test_clusters_span_the_wrap():
    positions = {0: Position(0, 0), 1: Position(49, 49), 2: Position(25, 25)}
    labels = dbscan_labels(positions, 2, 50)
    assert labels[0] == labels[1] != NOISE
    assert labels[2] == NOISE


def test_eps_zero_groups_co_located_only():
    positions = {0: Position(5, 5), 1: Position(5, 5), 2: Position(5, 6)}
    labels = dbscan_labels(positions, 0, 50)
    assert labels == {0: 0, 1: 0, 2: NOISE}


def test_min_pts_above_two_demotes_thin_chains():
    # A 3-point line where ends see only the middle: with min_pts=3 the middle
    # is the only core point and the ends join as border points.
    positions = {0: Position(0, 0), 1: Position(4, 0), 2: Position(8, 0)}
    labels = dbscan_labels(positions, 4, 50, min_pts=3)
    assert labels == {0: 0, 1: 0, 2: 0}
    lonely = {0: Position(0, 0), 1: Position(4, 0)}
    assert dbscan_labels(lonely, 4, 50, min_pts=3) == {0: NOISE, 1: NOISE}


def test_labels_are_dense_and_deterministic():
    positions = {
        0: Position(0, 0), 1: Position(1, 1),
        2: Position(20, 20), 3: Position(21, 21),
        4: Position(40, 40),
    }
    labels = dbscan_labels(positions, 3, 50)
    assert labels == {0: 0, 1: 0, 2: 1, 3: 1, 4: NOISE}


@pytest.mark.parametrize("eps", [0, 5, 10, 15, 20, 25])
def test_matches_component_oracle_randomized(eps):
    rng = random.Random(1000 + eps)
    for _ in range(30):
        side = 50
        n = rng.randrange(2, 16)
        positions = {
            i: Position(rng.randrange(side), rng.randrange(side))
            for i in range(n)
        }
        assert dbscan_labels(positions, eps, side) == components_oracle(
            positions, eps, side
        )


def test_invalid_arguments():
    with pytest.raises(ValueError):
        dbscan_labels({0: Position(0, 0)}, -1, 10)
    with pytest.raises(ValueError):
        dbscan_labels({0: Position(0, 0)}, 1, 10, min_pts=0)


def test_clusters_from_labels():
    members = clusters_from_labels({0: 1, 1: NOISE, 2: 1, 3: 0})
    assert members == {1: [0, 2], 0: [3]}


def test_timeline_keeps_label_for_persisting_cluster():
    steps = [
        {0: Position(0, 0), 1: Position(1, 0), 2: Position(30, 30)},
        {0: Position(0, 1), 1: Position(1, 1), 2: Position(30, 31)},
    ]
    timeline = cluster_timeline(steps, eps=2, side=50)
    assert timeline[0].labels == {0: 0, 1: 0, 2: NOISE}
    assert timeline[1].labels == {0: 0, 1: 0, 2: NOISE}
    assert [sc.step for sc in timeline] == [1, 2]


def test_timeline_new_cluster_gets_fresh_label():
    steps = [
        {0: Position(0, 0), 1: Position(1, 0), 2: Position(30, 30), 3: Position(40, 40)},
        {0: Position(0, 0), 1: Position(1, 0), 2: Position(30, 30), 3: Position(31, 30)},
    ]
    timeline = cluster_timeline(steps, eps=2, side=50)
    assert timeline[1].labels[0] == timeline[0].labels[0]
    new_label = timeline[1].labels[2]
    assert new_label == timeline[1].labels[3]
    assert new_label not in (timeline[0].labels[0], NOISE)


def test_timeline_split_keeps_label_on_bigger_half():
    steps = [
        {i: Position(i, 0) for i in range(5)},  # one chain cluster
        # Chain breaks: {0,1,2} stays near, {3,4} drifts off together.
        {0: Position(0, 0), 1: Position(1, 0), 2: Position(2, 0),
         3: Position(20, 20), 4: Position(21, 20)},
    ]
    timeline = cluster_timeline(steps, eps=1, side=50)
    original = timeline[0].labels[0]
    assert timeline[1].labels[0] == original
    assert timeline[1].labels[3] != original


def test_timeline_labels_never_recycle():
    steps = [
        {0: Position(0, 0), 1: Position(1, 0)},   # cluster 0
        {0: Position(0, 0), 1: Position(10, 10)}, # all noise
        {0: Position(20, 20), 1: Position(21, 20)},  # no overlap with 0's members? same members...
    ]
    timeline = cluster_timeline(steps, eps=1, side=50)
    assert timeline[0].labels == {0: 0, 1: 0}
    assert timeline[1].labels == {0: NOISE, 1: NOISE}
    # Same members regroup, but continuity is judged against the previous
    # step only, so dissolving and regrouping mints a fresh label.
    assert timeline[2].labels[0] == 1


def test_step_clusters_roundtrip(tmp_path):
    timeline = cluster_timeline(
        [{0: Position(0, 0), 1: Position(1, 1), 2: Position(9, 9)}],
        eps=2, side=20,
    )
    path = tmp_path / "clusters.jsonl"
    write_clusters(path, timeline)
    loaded = read_clusters(path)
    assert loaded == timeline


def test_step_clusters_serialization_requires_dense_ids():
    with pytest.raises(ValueError):
        StepClusters(step=1, eps=2, labels={0: 0, 2: 0}).to_json()
