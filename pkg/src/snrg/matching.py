"""Integer-encoded graphs and the embedding-enumeration kernel interface.

Fragment matching is the inner loop of both decoding and the quadratic
containment step of rule induction, so the actual backtracking runs in a
kernel with two interchangeable implementations: a compiled Cython module
(snrg._kernels._cmatch) and a pure-Python fallback (snrg._kernels.pymatch).
Selection happens at import; set SNRG_KERNEL=py|c to force one.

Both kernels consume the same encoding: node/edge labels interned to ints
local to the graph (nonterminal fragment nodes encode as -1 and match any
nonterminal graph node), CSR adjacency, and a per-fragment matching plan
whose steps each ground one fragment edge against the graph.
"""

from __future__ import annotations

from array import array

from ._kernels import get_kernel


class GraphIndex:
    """Per-graph encoding, built once and shared by all match calls."""

    __slots__ = ("label_ids", "node_lab", "node_is_nt", "esrc", "elab",
                 "etgt", "out_start", "out_edges", "in_start", "in_edges",
                 "nodes_by_lab", "nt_nodes", "n_nodes", "n_edges")

    def __init__(self, nodes, edges, is_nt):
        self.n_nodes = len(nodes)
        self.n_edges = len(edges)
        self.label_ids = {}

        def intern(lab):
            i = self.label_ids.get(lab)
            if i is None:
                i = len(self.label_ids)
                self.label_ids[lab] = i
            return i

        self.node_lab = array("i", (intern(l) for l in nodes))
        self.node_is_nt = array("i", (1 if b else 0 for b in is_nt))
        self.esrc = array("i", (e[0] for e in edges))
        self.elab = array("i", (intern(e[1]) for e in edges))
        self.etgt = array("i", (e[2] for e in edges))

        out_lists = [[] for _ in range(self.n_nodes)]
        in_lists = [[] for _ in range(self.n_nodes)]
        for ei, (s, _, t) in enumerate(edges):
            out_lists[s].append(ei)
            in_lists[t].append(ei)
        self.out_start, self.out_edges = _csr(out_lists)
        self.in_start, self.in_edges = _csr(in_lists)

        self.nodes_by_lab = {}
        self.nt_nodes = []
        for v in range(self.n_nodes):
            if self.node_is_nt[v]:
                self.nt_nodes.append(v)
            else:
                self.nodes_by_lab.setdefault(self.node_lab[v], []).append(v)


def _csr(lists):
    start = array("i", [0] * (len(lists) + 1))
    flat = array("i")
    for i, lst in enumerate(lists):
        flat.extend(lst)
        start[i + 1] = len(flat)
    return start, flat


class FragmentPattern:
    """Per-fragment matching plan: one step per fragment edge.

    Step kinds: 0 = follow an out-edge of a bound source, binding the
    target; 2 = follow an in-edge of a bound target, binding the source;
    1 = both ends bound, just locate an unused parallel edge.
    """

    __slots__ = ("node_labels", "node_is_nt", "root", "edges",
                 "step_kind", "step_fedge", "step_known", "step_other")

    def __init__(self, nodes, edges, root, is_nt):
        self.node_labels = list(nodes)
        self.node_is_nt = list(is_nt)
        self.root = root
        self.edges = list(edges)

        bound = {root}
        planned = [False] * len(edges)
        kinds, fedges, knowns, others = [], [], [], []
        remaining = len(edges)
        while remaining:
            progressed = False
            for fe, (s, _, t) in enumerate(edges):
                if planned[fe]:
                    continue
                sb, tb = s in bound, t in bound
                if sb and tb:
                    kinds.append(1), fedges.append(fe)
                    knowns.append(s), others.append(t)
                elif sb:
                    kinds.append(0), fedges.append(fe)
                    knowns.append(s), others.append(t)
                    bound.add(t)
                elif tb:
                    kinds.append(2), fedges.append(fe)
                    knowns.append(t), others.append(s)
                    bound.add(s)
                else:
                    continue
                planned[fe] = True
                remaining -= 1
                progressed = True
            if not progressed:
                raise ValueError("fragment is not connected")
        if len(bound) != len(nodes):
            raise ValueError("fragment is not connected")
        self.step_kind = array("i", kinds)
        self.step_fedge = array("i", fedges)
        self.step_known = array("i", knowns)
        self.step_other = array("i", others)


def find_embeddings(gidx: GraphIndex, fpat: FragmentPattern,
                    kernel=None) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Enumerate all embeddings as (binding, edge assignment) int tuples.

    binding[i] is the graph node bound to fragment node i; the edge
    assignment maps fragment edge i to a graph edge index.
    """
    label_ids = gidx.label_ids
    f_node_lab = array("i", [0] * len(fpat.node_labels))
    for i, lab in enumerate(fpat.node_labels):
        if fpat.node_is_nt[i]:
            f_node_lab[i] = -1
            if not gidx.nt_nodes:
                return []
        else:
            gid = label_ids.get(lab)
            if gid is None:
                return []
            f_node_lab[i] = gid
    f_elab = array("i", [0] * len(fpat.edges))
    for i, (_, lab, _) in enumerate(fpat.edges):
        gid = label_ids.get(lab)
        if gid is None:
            return []
        f_elab[i] = gid

    if fpat.node_is_nt[fpat.root]:
        anchors = array("i", gidx.nt_nodes)
    else:
        anchors = array("i", gidx.nodes_by_lab.get(f_node_lab[fpat.root], ()))
    if not anchors:
        return []

    impl = kernel if kernel is not None else get_kernel()
    return impl.run_plan(
        gidx.n_nodes, gidx.node_lab, gidx.node_is_nt,
        gidx.esrc, gidx.elab, gidx.etgt,
        gidx.out_start, gidx.out_edges, gidx.in_start, gidx.in_edges,
        len(fpat.node_labels), f_node_lab, fpat.root, anchors,
        len(fpat.edges), f_elab,
        fpat.step_kind, fpat.step_fedge, fpat.step_known, fpat.step_other)
