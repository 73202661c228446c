import json

import pytest

from distancing_lab.model import (
    DistancingProfile,
    GameParams,
    Network,
    NodeRole,
    builtin_network,
    network_from_json,
    node_roles,
    params_from_json,
)


def test_network_normalizes_and_validates_edges():
    net = Network.from_edges(4, [(2, 0), (0, 2), (1, 3)])
    assert net.edge_list == ((0, 2), (1, 3))
    with pytest.raises(ValueError):
        Network.from_edges(3, [(1, 1)])
    with pytest.raises(ValueError):
        Network.from_edges(3, [(0, 5)])


def test_builtin_networks():
    star = builtin_network("star")
    assert star.degree(0) == 4
    assert all(star.degree(v) == 1 for v in range(1, 5))
    k5 = builtin_network("complete")
    assert len(k5.edges) == 10
    with pytest.raises(ValueError):
        builtin_network("ring")


def test_roles_complete_and_star():
    assert set(node_roles(Network.complete(5))) == {NodeRole.CLOSE_KNIT}
    roles = node_roles(Network.star(5))
    assert roles[0] is NodeRole.SUPERSPREADER
    assert all(r is NodeRole.PERIPHERAL for r in roles[1:])


def test_roles_other_topologies():
    path = Network.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    assert set(node_roles(path)) == {NodeRole.OTHER}
    # max-degree node in a non-star graph is not a superspreader
    lollipop = Network.from_edges(5, [(0, 1), (0, 2), (0, 3), (1, 2)])
    assert set(node_roles(lollipop)) == {NodeRole.OTHER}


def test_params_validation():
    with pytest.raises(ValueError):
        GameParams(b=30.0, c=35.0)
    with pytest.raises(ValueError):
        GameParams(gamma=0.0)
    with pytest.raises(ValueError):
        GameParams(alpha=1.5)
    with pytest.raises(ValueError):
        GameParams(fine=-1.0)


def test_profile_helpers():
    prof = DistancingProfile.from_set({0, 3}, 5)
    assert prof.size == 2
    assert prof.as_set() == frozenset({0, 3})
    assert prof.with_node(1, True).as_set() == frozenset({0, 1, 3})
    assert prof.as_set() == frozenset({0, 3})  # original untouched
    with pytest.raises(ValueError):
        DistancingProfile.from_set({7}, 5)


def test_json_round_trip():
    net = Network.star(5)
    doc = json.dumps(net.to_json_dict())
    assert network_from_json(doc) == net
    params = GameParams(alpha=0.15, fine=15.0)
    assert params_from_json(json.dumps(params.to_json_dict())) == params
    assert params_from_json("{}") == GameParams()
