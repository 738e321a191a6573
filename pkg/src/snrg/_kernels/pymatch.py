"""Pure-Python embedding enumeration; reference for the compiled kernel."""

from __future__ import annotations


def run_plan(n_gnodes, g_node_lab, g_node_is_nt,
             g_esrc, g_elab, g_etgt,
             g_out_start, g_out_edges, g_in_start, g_in_edges,
             n_fnodes, f_node_lab, f_root, anchors,
             n_fedges, f_elab,
             step_kind, step_fedge, step_known, step_other):
    n_steps = len(step_kind)
    binding = [-1] * n_fnodes
    edge_of = [-1] * n_fedges
    used_node = bytearray(n_gnodes)
    used_edge = bytearray(len(g_esrc))
    results = []

    def node_ok(fn, gn):
        lab = f_node_lab[fn]
        if lab == -1:
            return g_node_is_nt[gn] == 1
        return g_node_lab[gn] == lab

    def backtrack(d):
        if d == n_steps:
            results.append((tuple(binding), tuple(edge_of)))
            return
        kind = step_kind[d]
        fe = step_fedge[d]
        lab = f_elab[fe]
        gk = binding[step_known[d]]
        other = step_other[d]
        if kind == 0:                           # bind target via out-edge
            for i in range(g_out_start[gk], g_out_start[gk + 1]):
                ei = g_out_edges[i]
                if used_edge[ei] or g_elab[ei] != lab:
                    continue
                gt = g_etgt[ei]
                if used_node[gt] or not node_ok(other, gt):
                    continue
                binding[other] = gt
                used_node[gt] = 1
                used_edge[ei] = 1
                edge_of[fe] = ei
                backtrack(d + 1)
                binding[other] = -1
                used_node[gt] = 0
                used_edge[ei] = 0
        elif kind == 2:                         # bind source via in-edge
            for i in range(g_in_start[gk], g_in_start[gk + 1]):
                ei = g_in_edges[i]
                if used_edge[ei] or g_elab[ei] != lab:
                    continue
                gs = g_esrc[ei]
                if used_node[gs] or not node_ok(other, gs):
                    continue
                binding[other] = gs
                used_node[gs] = 1
                used_edge[ei] = 1
                edge_of[fe] = ei
                backtrack(d + 1)
                binding[other] = -1
                used_node[gs] = 0
                used_edge[ei] = 0
        else:                                   # both ends bound
            gt = binding[other]
            for i in range(g_out_start[gk], g_out_start[gk + 1]):
                ei = g_out_edges[i]
                if used_edge[ei] or g_elab[ei] != lab or g_etgt[ei] != gt:
                    continue
                used_edge[ei] = 1
                edge_of[fe] = ei
                backtrack(d + 1)
                used_edge[ei] = 0

    for a in anchors:
        binding[f_root] = a
        used_node[a] = 1
        backtrack(0)
        used_node[a] = 0
        binding[f_root] = -1
    return results
