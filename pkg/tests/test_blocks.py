import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import path_graph, random_connected, undirected
from spectral_gn.autodiff import Tensor
from spectral_gn.blocks import (GCNLayerParams, GFTBlockParams, GNBlockParams, Latents, NodeOnlyParams, Topology,
                                gcn_layer, gft_block, gn_block, node_only_block, normalized_adjacency)
from spectral_gn.exceptions import NonSymmetricGraph, ShapeMismatch
from spectral_gn.nn import ModelParams


def latents(rng, n, e, dv=3, de=2, dg=2, graphs=1):
    return Latents(Tensor(rng.normal(size=(n, dv))), Tensor(rng.normal(size=(e, de))),
                   Tensor(rng.normal(size=(graphs, dg))))


def gn_params(rng, dv=3, de=2, dg=2, out=4, aggregation="sum", use_global=True):
    return GNBlockParams.create(ModelParams(), "gn", dv, de, dg, out, rng, hidden=5, n_hidden=1,
                                aggregation=aggregation, use_global=use_global)


def mlp_np(p, x):
    """Straight-line MLP on one row vector."""
    h = np.asarray(x, dtype=np.float64)
    for i, (w, b) in enumerate(zip(p.weights, p.biases)):
        h = h @ w.data + b.data[0]
        if i < len(p.weights) - 1:
            h = np.maximum(h, 0)
    return h


def gn_oracle(p, n, senders, receivers, V, E, g, aggregation="sum"):
    e_new = [mlp_np(p.edge_mlp, np.concatenate([E[k], V[s], V[r], g]))
             for k, (s, r) in enumerate(zip(senders, receivers))]
    out_w = p.node_mlp.out_width
    v_new = []
    for i in range(n):
        incoming = [e_new[k] for k, r in enumerate(receivers) if r == i]
        agg = np.sum(incoming, axis=0) if incoming else np.zeros(out_w)
        if aggregation == "mean" and incoming:
            agg = agg / len(incoming)
        v_new.append(mlp_np(p.node_mlp, np.concatenate([V[i], agg, g])))
    mean_v = np.mean(v_new, axis=0)
    mean_e = np.mean(e_new, axis=0) if e_new else np.zeros(out_w)
    g_new = mlp_np(p.global_mlp, np.concatenate([g, mean_v, mean_e]))
    return np.array(v_new), np.array(e_new).reshape(-1, out_w), g_new


@pytest.mark.parametrize("aggregation", ["sum", "mean"])
def test_gn_against_per_edge_oracle(rng, aggregation):
    g = path_graph(3)
    h = latents(rng, 3, g.n_edges)
    p = gn_params(rng, aggregation=aggregation)
    for mlp in (p.edge_mlp, p.node_mlp, p.global_mlp):
        for b in mlp.biases:
            b.data = rng.normal(size=b.shape)
    out = gn_block(p, Topology.single(3, g.senders, g.receivers), h)
    V, E, G = gn_oracle(p, 3, g.senders, g.receivers, h.nodes.data, h.edges.data, h.globals.data[0], aggregation)
    assert np.max(np.abs(out.nodes.data - V)) <= 1e-10
    assert np.max(np.abs(out.edges.data - E)) <= 1e-10
    assert np.max(np.abs(out.globals.data[0] - G)) <= 1e-10


def test_gn_no_edges_sees_zero_aggregate(rng):
    p = gn_params(rng)
    h = latents(rng, 2, 0)
    out = gn_block(p, Topology.single(2, [], []), h)
    for i in range(2):
        x = np.concatenate([h.nodes.data[i], np.zeros(4), h.globals.data[0]])
        assert np.allclose(out.nodes.data[i], mlp_np(p.node_mlp, x), atol=1e-12)


def test_gn_single_edge_only_receiver_aggregates(rng):
    p = gn_params(rng)
    h = latents(rng, 2, 1)
    topo = Topology.single(2, [0], [1])
    base = gn_block(p, topo, h)
    # changing the edge latent moves node 1 only
    h2 = h.replace(edges=Tensor(h.edges.data + 1.0))
    moved = gn_block(p, topo, h2)
    assert np.array_equal(base.nodes.data[0], moved.nodes.data[0])
    assert not np.array_equal(base.nodes.data[1], moved.nodes.data[1])


@given(st.integers(0, 2**31 - 1), st.integers(3, 10))
def test_gn_permutation_equivariance(seed, n):
    rng = np.random.default_rng(seed)
    g = random_connected(rng, n)
    h = latents(rng, n, g.n_edges)
    p = gn_params(rng)
    out = gn_block(p, Topology.single(n, g.senders, g.receivers), h)
    perm = rng.permutation(n)          # new vertex i is old vertex perm[i]
    inv = np.argsort(perm)
    eperm = rng.permutation(g.n_edges)
    topo = Topology.single(n, inv[g.senders[eperm]], inv[g.receivers[eperm]])
    h2 = Latents(Tensor(h.nodes.data[perm]), Tensor(h.edges.data[eperm]), h.globals)
    out2 = gn_block(p, topo, h2)
    assert np.allclose(out2.nodes.data, out.nodes.data[perm], atol=1e-12, rtol=0)
    assert np.allclose(out2.edges.data, out.edges.data[eperm], atol=1e-12, rtol=0)
    assert np.allclose(out2.globals.data, out.globals.data, atol=1e-12, rtol=0)


def test_gn_width_mismatch(rng):
    p = gn_params(rng)
    with pytest.raises(ShapeMismatch):
        gn_block(p, Topology.single(2, [0], [1]), latents(rng, 2, 1, dv=4))


def gcn(rng, d_in=3, d_out=3):
    return GCNLayerParams.create(ModelParams(), "gcn", d_in, d_out, rng)


def test_gcn_isolated_vertex(rng):
    p = gcn(rng)
    p.bias.data = rng.normal(size=(1, 3))
    X = rng.normal(size=(1, 3))
    out = gcn_layer(p, Topology.single(1, [], []), Latents(Tensor(X), Tensor(np.zeros((0, 1))), Tensor(np.zeros((1, 1)))))
    assert np.allclose(out.nodes.data, np.maximum(X @ p.weight.data + p.bias.data, 0), atol=1e-15)


def test_gcn_symmetric_pair(rng):
    p = gcn(rng)
    x = rng.normal(size=(1, 3))
    out = gcn_layer(p, Topology.single(2, [0, 1], [1, 0]),
                    Latents(Tensor(np.vstack([x, x])), Tensor(np.zeros((2, 1))), Tensor(np.zeros((1, 1)))))
    assert np.array_equal(out.nodes.data[0], out.nodes.data[1])


def test_gcn_p3_matrix_oracle(rng):
    p = gcn(rng)
    p.weight.data = np.eye(3)
    X = rng.normal(size=(3, 3))
    g = path_graph(3)
    out = gcn_layer(p, Topology.single(3, g.senders, g.receivers),
                    Latents(Tensor(X), Tensor(np.zeros((4, 1))), Tensor(np.zeros((1, 1)))), activation=False)
    At = np.array([[1, 1, 0], [1, 1, 1], [0, 1, 1]], dtype=float)
    d = At.sum(axis=1)
    expected = (At / np.sqrt(np.outer(d, d))) @ X
    assert np.allclose(out.nodes.data, expected, atol=1e-14)


def test_gcn_duplicate_edges_ignored(rng):
    g = path_graph(4)
    topo = Topology.single(4, g.senders, g.receivers)
    dup = Topology.single(4, np.concatenate([g.senders, g.senders[:2]]), np.concatenate([g.receivers, g.receivers[:2]]))
    assert np.array_equal(normalized_adjacency(topo).toarray(), normalized_adjacency(dup).toarray())


def test_gcn_rejects_asymmetric():
    with pytest.raises(NonSymmetricGraph):
        normalized_adjacency(Topology.single(2, [0], [1]))


def gft(rng, k, d_in=2, d_out=2, n_hidden=1):
    return GFTBlockParams.create(ModelParams(), "gft", k, d_in, d_out, rng, hidden=6, n_hidden=n_hidden)


def test_gft_k1_is_plain_mlp(rng):
    p = gft(rng, 1)
    x = rng.normal(size=(1, 2))
    assert np.allclose(gft_block(p, x).data[0], mlp_np(p.mlp, x[0]), atol=1e-14)


def test_gft_order_sensitive(rng):
    p = gft(rng, 3)
    x = rng.normal(size=(3, 2))
    assert not np.allclose(gft_block(p, x).data, gft_block(p, x[[1, 0, 2]]).data[[1, 0, 2]])


def test_gft_zero_input_zero_bias(rng):
    p = gft(rng, 3)
    assert not gft_block(p, np.zeros((3, 2))).data.any()


def test_gft_pads_and_truncates(rng):
    p = gft(rng, 3)
    x = rng.normal(size=(2, 2))
    assert np.array_equal(gft_block(p, x).data, gft_block(p, np.vstack([x, np.zeros((1, 2))])).data)
    y = rng.normal(size=(5, 2))
    assert np.array_equal(gft_block(p, y).data, gft_block(p, y[:3]).data)


def test_gft_batch_has_no_cross_graph_sharing(rng):
    p = gft(rng, 2)
    a, b = rng.normal(size=(2, 2)), rng.normal(size=(2, 2))
    both = gft_block(p, np.vstack([a, b]), n_graphs=2).data
    assert np.allclose(both[:2], gft_block(p, a).data, atol=1e-15)
    assert np.allclose(both[2:], gft_block(p, b).data, atol=1e-15)


def test_gft_eigval_count_checked(rng):
    with pytest.raises(ShapeMismatch):
        gft_block(gft(rng, 2), rng.normal(size=(2, 2)), eigvals=np.zeros(3))


def test_node_only_has_no_mixing(rng):
    p = NodeOnlyParams.create(ModelParams(), "node", 3, 3, rng, hidden=4, n_hidden=1)
    g = random_connected(rng, 5)
    h = latents(rng, 5, g.n_edges, dv=3)
    out = node_only_block(p, Topology.single(5, g.senders, g.receivers), h)
    for i in range(5):
        assert np.allclose(out.nodes.data[i], mlp_np(p.node_mlp, h.nodes.data[i]), atol=1e-14)
    assert out.edges is h.edges and out.globals is h.globals
