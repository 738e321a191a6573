# cython: boundscheck=False, wraparound=False, initializedcheck=False
"""Compiled embedding enumeration; mirrors pymatch.run_plan exactly."""

from libc.stdlib cimport malloc, free


cdef struct PlanCtx:
    int n_steps
    int *binding
    int *edge_of
    unsigned char *used_node
    unsigned char *used_edge


cdef inline bint _node_ok(int fn, int gn, int[:] f_node_lab,
                          int[:] g_node_lab, int[:] g_node_is_nt) nogil:
    cdef int lab = f_node_lab[fn]
    if lab == -1:
        return g_node_is_nt[gn] == 1
    return g_node_lab[gn] == lab


cdef void _backtrack(int d, PlanCtx *ctx, list results,
                     int n_fnodes, int n_fedges,
                     int[:] g_node_lab, int[:] g_node_is_nt,
                     int[:] g_esrc, int[:] g_elab, int[:] g_etgt,
                     int[:] g_out_start, int[:] g_out_edges,
                     int[:] g_in_start, int[:] g_in_edges,
                     int[:] f_node_lab, int[:] f_elab,
                     int[:] step_kind, int[:] step_fedge,
                     int[:] step_known, int[:] step_other):
    cdef int kind, fe, lab, gk, other, i, ei, gt, gs, k
    if d == ctx.n_steps:
        binding = tuple([ctx.binding[k] for k in range(n_fnodes)])
        edges = tuple([ctx.edge_of[k] for k in range(n_fedges)])
        results.append((binding, edges))
        return
    kind = step_kind[d]
    fe = step_fedge[d]
    lab = f_elab[fe]
    gk = ctx.binding[step_known[d]]
    other = step_other[d]
    if kind == 0:
        for i in range(g_out_start[gk], g_out_start[gk + 1]):
            ei = g_out_edges[i]
            if ctx.used_edge[ei] or g_elab[ei] != lab:
                continue
            gt = g_etgt[ei]
            if ctx.used_node[gt] or not _node_ok(other, gt, f_node_lab,
                                                 g_node_lab, g_node_is_nt):
                continue
            ctx.binding[other] = gt
            ctx.used_node[gt] = 1
            ctx.used_edge[ei] = 1
            ctx.edge_of[fe] = ei
            _backtrack(d + 1, ctx, results, n_fnodes, n_fedges,
                       g_node_lab, g_node_is_nt, g_esrc, g_elab, g_etgt,
                       g_out_start, g_out_edges, g_in_start, g_in_edges,
                       f_node_lab, f_elab, step_kind, step_fedge,
                       step_known, step_other)
            ctx.binding[other] = -1
            ctx.used_node[gt] = 0
            ctx.used_edge[ei] = 0
    elif kind == 2:
        for i in range(g_in_start[gk], g_in_start[gk + 1]):
            ei = g_in_edges[i]
            if ctx.used_edge[ei] or g_elab[ei] != lab:
                continue
            gs = g_esrc[ei]
            if ctx.used_node[gs] or not _node_ok(other, gs, f_node_lab,
                                                 g_node_lab, g_node_is_nt):
                continue
            ctx.binding[other] = gs
            ctx.used_node[gs] = 1
            ctx.used_edge[ei] = 1
            ctx.edge_of[fe] = ei
            _backtrack(d + 1, ctx, results, n_fnodes, n_fedges,
                       g_node_lab, g_node_is_nt, g_esrc, g_elab, g_etgt,
                       g_out_start, g_out_edges, g_in_start, g_in_edges,
                       f_node_lab, f_elab, step_kind, step_fedge,
                       step_known, step_other)
            ctx.binding[other] = -1
            ctx.used_node[gs] = 0
            ctx.used_edge[ei] = 0
    else:
        gt = ctx.binding[other]
        for i in range(g_out_start[gk], g_out_start[gk + 1]):
            ei = g_out_edges[i]
            if ctx.used_edge[ei] or g_elab[ei] != lab or g_etgt[ei] != gt:
                continue
            ctx.used_edge[ei] = 1
            ctx.edge_of[fe] = ei
            _backtrack(d + 1, ctx, results, n_fnodes, n_fedges,
                       g_node_lab, g_node_is_nt, g_esrc, g_elab, g_etgt,
                       g_out_start, g_out_edges, g_in_start, g_in_edges,
                       f_node_lab, f_elab, step_kind, step_fedge,
                       step_known, step_other)
            ctx.used_edge[ei] = 0


def run_plan(int n_gnodes, int[:] g_node_lab, int[:] g_node_is_nt,
             int[:] g_esrc, int[:] g_elab, int[:] g_etgt,
             int[:] g_out_start, int[:] g_out_edges,
             int[:] g_in_start, int[:] g_in_edges,
             int n_fnodes, int[:] f_node_lab, int f_root, int[:] anchors,
             int n_fedges, int[:] f_elab,
             int[:] step_kind, int[:] step_fedge,
             int[:] step_known, int[:] step_other):
    cdef int n_gedges = g_esrc.shape[0]
    cdef int n_anchors = anchors.shape[0]
    cdef PlanCtx ctx
    cdef int i, a
    cdef list results = []

    ctx.n_steps = step_kind.shape[0]
    ctx.binding = <int *> malloc(max(n_fnodes, 1) * sizeof(int))
    ctx.edge_of = <int *> malloc(max(n_fedges, 1) * sizeof(int))
    ctx.used_node = <unsigned char *> malloc(max(n_gnodes, 1))
    ctx.used_edge = <unsigned char *> malloc(max(n_gedges, 1))
    if (ctx.binding == NULL or ctx.edge_of == NULL or
            ctx.used_node == NULL or ctx.used_edge == NULL):
        free(ctx.binding); free(ctx.edge_of)
        free(ctx.used_node); free(ctx.used_edge)
        raise MemoryError()
    try:
        for i in range(n_fnodes):
            ctx.binding[i] = -1
        for i in range(n_fedges):
            ctx.edge_of[i] = -1
        for i in range(n_gnodes):
            ctx.used_node[i] = 0
        for i in range(n_gedges):
            ctx.used_edge[i] = 0

        for i in range(n_anchors):
            a = anchors[i]
            ctx.binding[f_root] = a
            ctx.used_node[a] = 1
            _backtrack(0, &ctx, results, n_fnodes, n_fedges,
                       g_node_lab, g_node_is_nt, g_esrc, g_elab, g_etgt,
                       g_out_start, g_out_edges, g_in_start, g_in_edges,
                       f_node_lab, f_elab, step_kind, step_fedge,
                       step_known, step_other)
            ctx.used_node[a] = 0
            ctx.binding[f_root] = -1
    finally:
        free(ctx.binding)
        free(ctx.edge_of)
        free(ctx.used_node)
        free(ctx.used_edge)
    return results
