"""Multiscale fillings of a space: dyadic ball graphs and their audits.

A filling assigns to each level n a maximal separated family of cloud
points, each carrying an open ball of dyadic radius, and joins two vertices
by an edge when their levels differ by at most one and their balls share a
cloud point.  Edges are directed: the deeper endpoint is the head, and
same-level edges point from the smaller vertex id to the larger.  The edge
scale |e| is the smaller endpoint level, and the edge ball B(e) is the union
of the endpoint balls.

`build_filling` produces the plain construction (separation half the
radius).  `build_nested_filling` produces a compatible pair for a marked
subset F: ambient vertices are split into centers on F (radius four times
the scale, so their restrictions to F still cover it) and centers far from
F (plain radius), which makes the subset's own filling a subgraph of the
ambient one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse

from ._kernels import greedy_separated_subset
from .errors import ConfigError, NumericalError
from .space import (FiniteMetricMeasureSpace, SubsetMask, dist_to_subset,
                    space_from_descriptor, space_to_descriptor, subspace,
                    mask_from_descriptor, mask_to_descriptor,
                    RADIUS_FLOOR_FACTOR, _REL_EPS)


@dataclass
class Filling:
    space: FiniteMetricMeasureSpace
    flavor: str                  # "plain", "nested-ambient" or "trace"
    level_lo: int
    level_hi: int
    centers: np.ndarray          # (V,) cloud index of each vertex
    radii: np.ndarray            # (V,)
    vertex_levels: np.ndarray    # (V,)
    tails: np.ndarray            # (E,)
    heads: np.ndarray            # (E,)
    edge_levels: np.ndarray      # (E,) min of the endpoint levels
    ball_member_list: list       # per vertex, sorted cloud indices in the ball

    def __post_init__(self):
        self._level_start = {}
        for n in range(self.level_lo, self.level_hi + 1):
            ids = np.flatnonzero(self.vertex_levels == n)
            self._level_start[n] = (int(ids[0]), int(ids[-1]) + 1) if ids.size else (0, 0)
        self._edges_at = {}
        self._cross_at = {}
        for n in range(self.level_lo, self.level_hi + 1):
            at = np.flatnonzero(self.edge_levels == n)
            self._edges_at[n] = at
            cross = at[self.vertex_levels[self.heads[at]] != n]
            self._cross_at[n] = cross
        self.ball_weight_sums = np.array(
            [self.space.weights[m].sum() for m in self.ball_member_list])
        self._partition_cache = {}
        self._vertex_membership = None
        self._edge_membership = None
        self._edge_ball_mass = None

    # -- basic accessors ----------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return self.centers.shape[0]

    @property
    def n_edges(self) -> int:
        return self.tails.shape[0]

    @property
    def levels(self):
        return range(self.level_lo, self.level_hi + 1)

    def vertices_at_level(self, n: int) -> np.ndarray:
        lo, hi = self._require_level(n)
        return np.arange(lo, hi)

    def edges_at_level(self, k: int) -> np.ndarray:
        """Edge ids at scale k (same-level k edges plus k to k+1 edges)."""
        self._require_level(k)
        return self._edges_at[k]

    def cross_edges_at_level(self, n: int) -> np.ndarray:
        """Edge ids joining level n to level n+1, in edge order."""
        self._require_level(n)
        return self._cross_at[n]

    def ball_members(self, vertex_id: int) -> np.ndarray:
        if not (0 <= vertex_id < self.n_vertices):
            raise ConfigError(f"vertex id {vertex_id} out of range")
        return self.ball_member_list[vertex_id]

    def edge_ball_members(self, edge_id: int) -> np.ndarray:
        """Cloud indices of B(e), the union of the endpoint balls."""
        if not (0 <= edge_id < self.n_edges):
            raise ConfigError(f"edge id {edge_id} out of range")
        return np.union1d(self.ball_member_list[self.tails[edge_id]],
                          self.ball_member_list[self.heads[edge_id]])

    def _require_level(self, n: int):
        if not (self.level_lo <= n <= self.level_hi):
            raise ConfigError(f"level {n} outside window "
                              f"[{self.level_lo}, {self.level_hi}]")
        return self._level_start[n]

    # -- cached derived structures -------------------------------------------

    def vertex_membership(self) -> sparse.csr_matrix:
        """Sparse (n_vertices, n_points) indicator of the vertex balls."""
        if self._vertex_membership is None:
            self._vertex_membership = _membership_matrix(
                self.ball_member_list, self.space.n_points)
        return self._vertex_membership

    def edge_membership(self) -> sparse.csr_matrix:
        """Sparse (n_edges, n_points) indicator of the edge balls B(e)."""
        if self._edge_membership is None:
            rows = [self.edge_ball_members(e) for e in range(self.n_edges)]
            indptr = np.zeros(self.n_edges + 1, dtype=np.int64)
            indptr[1:] = np.cumsum([len(r) for r in rows])
            indices = (np.concatenate(rows) if rows
                       else np.empty(0, dtype=np.int64))
            data = np.ones(indices.shape[0])
            self._edge_membership = sparse.csr_matrix(
                (data, indices, indptr), shape=(self.n_edges, self.space.n_points))
        return self._edge_membership

    def edge_ball_mass(self) -> np.ndarray:
        """mu(B(e)) for every edge."""
        if self._edge_ball_mass is None:
            self._edge_ball_mass = self.edge_membership() @ self.space.weights
        return self._edge_ball_mass


@dataclass
class NestedFilling:
    """An ambient filling and the subset filling embedded inside it."""

    ambient: Filling
    trace: Filling
    mask: SubsetMask
    point_embedding: np.ndarray   # trace space point index -> ambient point index
    vertex_embedding: np.ndarray  # trace vertex id -> ambient vertex id
    edge_embedding: np.ndarray    # trace edge id -> ambient edge id

    @property
    def trace_space(self) -> FiniteMetricMeasureSpace:
        return self.trace.space


def _validate_window(space, level_lo, level_hi):
    if level_lo > level_hi:
        raise ConfigError("empty level window")
    if 2.0 ** (-level_lo) < space.declared_diam * (1 - _REL_EPS):
        raise ConfigError(
            f"2^-{level_lo} is below the diameter; raise the root level")
    if 2.0 ** (-level_hi) < RADIUS_FLOOR_FACTOR * space.resolution * (1 - _REL_EPS):
        raise ConfigError(
            f"2^-{level_hi} is under four times the resolution; lower level_hi")


def _ball_rows(space, center_indices, radii):
    """Sorted member indices of the open ball around each listed center."""
    rows = []
    for c, r in zip(center_indices, radii):
        d = space.dist_from(space.points[c])
        rows.append(np.flatnonzero(d < r))
    return rows


def _membership_matrix(rows, n_points):
    indptr = np.zeros(len(rows) + 1, dtype=np.int64)
    indptr[1:] = np.cumsum([len(r) for r in rows])
    indices = np.concatenate(rows) if rows else np.empty(0, dtype=np.int64)
    data = np.ones(indices.shape[0])
    return sparse.csr_matrix((data, indices, indptr), shape=(len(rows), n_points))


def _assemble(space, flavor, level_lo, level_hi, level_vertex_centers,
              level_vertex_radii):
    """Shared tail of the builders: ids, ball members, edges, orientation."""
    centers, radii, levels = [], [], []
    level_offset = {}
    for n in range(level_lo, level_hi + 1):
        level_offset[n] = len(centers)
        centers.extend(level_vertex_centers[n])
        radii.extend(level_vertex_radii[n])
        levels.extend([n] * len(level_vertex_centers[n]))
    centers = np.asarray(centers, dtype=np.int64)
    radii = np.asarray(radii, dtype=np.float64)
    levels = np.asarray(levels, dtype=np.int64)

    members = _ball_rows(space, centers, radii)
    mats = {n: _membership_matrix(
        [members[level_offset[n] + i] for i in range(len(level_vertex_centers[n]))],
        space.n_points) for n in range(level_lo, level_hi + 1)}

    tails, heads = [], []
    for n in range(level_lo, level_hi + 1):
        base = level_offset[n]
        overlap = (mats[n] @ mats[n].T).tocoo()
        same = sorted((base + i, base + j)
                      for i, j in zip(overlap.row, overlap.col) if i < j)
        tails.extend(t for t, _ in same)
        heads.extend(h for _, h in same)
        if n < level_hi:
            nxt = level_offset[n + 1]
            overlap = (mats[n] @ mats[n + 1].T).tocoo()
            cross = sorted((base + i, nxt + j)
                           for i, j in zip(overlap.row, overlap.col))
            tails.extend(t for t, _ in cross)
            heads.extend(h for _, h in cross)
    tails = np.asarray(tails, dtype=np.int64)
    heads = np.asarray(heads, dtype=np.int64)
    edge_levels = np.minimum(levels[tails], levels[heads]) if tails.size else \
        np.empty(0, dtype=np.int64)

    return Filling(space=space, flavor=flavor, level_lo=level_lo,
                   level_hi=level_hi, centers=centers, radii=radii,
                   vertex_levels=levels, tails=tails, heads=heads,
                   edge_levels=edge_levels, ball_member_list=members)


def build_filling(space: FiniteMetricMeasureSpace, level_lo: int,
                  level_hi: int) -> Filling:
    """Plain filling: level n vertices are a greedy maximal 2^-(n+1)-separated
    subset of the cloud (scanned by ascending point index), with balls of
    radius 2^-n."""
    _validate_window(space, level_lo, level_hi)
    all_idx = np.arange(space.n_points, dtype=np.int64)
    sup = space.metric_kind == "sup"
    level_centers, level_radii = {}, {}
    for n in range(level_lo, level_hi + 1):
        sel = greedy_separated_subset(space.points, all_idx, 2.0 ** (-n - 1), sup)
        level_centers[n] = sel
        level_radii[n] = np.full(sel.shape[0], 2.0 ** (-n))
    return _assemble(space, "plain", level_lo, level_hi, level_centers,
                     level_radii)


def build_nested_filling(space: FiniteMetricMeasureSpace, mask: SubsetMask,
                         level_lo: int, level_hi: int) -> NestedFilling:
    """Compatible ambient and subset fillings.

    Per level n the ambient vertex set is the union of

    * centers on F: greedy maximal 2^-n-separated subset of F, with balls of
      radius 2^-(n-2) (four times the scale), and
    * centers off F: greedy maximal 2^-(n+1)-separated subset of the points
      at distance >= 2^-n from F, with plain radius 2^-n.

    Only the first group's balls meet F, and their restrictions to F are the
    subset filling; its vertices and edges embed into the ambient ones.
    """
    mask.validate_against(space)
    _validate_window(space, level_lo, level_hi)
    dist_f = dist_to_subset(space, mask)
    members = mask.member_indices
    sup = space.metric_kind == "sup"

    level_centers, level_radii, on_counts = {}, {}, {}
    for n in range(level_lo, level_hi + 1):
        scale = 2.0 ** (-n)
        on_f = greedy_separated_subset(space.points, members, scale, sup)
        far = np.flatnonzero(dist_f >= scale)
        off_f = greedy_separated_subset(space.points, far, scale / 2, sup)
        level_centers[n] = np.concatenate([on_f, off_f])
        level_radii[n] = np.concatenate([
            np.full(on_f.shape[0], 4 * scale),
            np.full(off_f.shape[0], scale),
        ])
        on_counts[n] = on_f.shape[0]
    ambient = _assemble(space, "nested-ambient", level_lo, level_hi,
                        level_centers, level_radii)

    sub_space, point_embedding = subspace(space, mask)
    amb_to_sub = np.full(space.n_points, -1, dtype=np.int64)
    amb_to_sub[point_embedding] = np.arange(point_embedding.shape[0])

    trace_centers, trace_radii = {}, {}
    vertex_embedding = []
    for n in range(level_lo, level_hi + 1):
        lo, _ = ambient._level_start[n]
        k = on_counts[n]
        trace_centers[n] = amb_to_sub[ambient.centers[lo : lo + k]]
        trace_radii[n] = ambient.radii[lo : lo + k]
        vertex_embedding.extend(range(lo, lo + k))
    trace = _assemble(sub_space, "trace", level_lo, level_hi, trace_centers,
                      trace_radii)
    vertex_embedding = np.asarray(vertex_embedding, dtype=np.int64)

    ambient_edge_ids = {(int(t), int(h)): e for e, (t, h) in
                        enumerate(zip(ambient.tails, ambient.heads))}
    edge_embedding = np.empty(trace.n_edges, dtype=np.int64)
    for e in range(trace.n_edges):
        key = (int(vertex_embedding[trace.tails[e]]),
               int(vertex_embedding[trace.heads[e]]))
        if key not in ambient_edge_ids:
            raise NumericalError("subset edge missing from the ambient filling")
        edge_embedding[e] = ambient_edge_ids[key]

    return NestedFilling(ambient=ambient, trace=trace, mask=mask,
                         point_embedding=point_embedding,
                         vertex_embedding=vertex_embedding,
                         edge_embedding=edge_embedding)


# ---------------------------------------------------------------------------
# Audits
# ---------------------------------------------------------------------------

def overlap_audit(filling: Filling) -> dict:
    """Per level, the largest number of balls covering a single point."""
    out = {}
    for n in filling.levels:
        lo, hi = filling._level_start[n]
        counts = np.zeros(filling.space.n_points, dtype=np.int64)
        for v in range(lo, hi):
            counts[filling.ball_member_list[v]] += 1
        out[n] = int(counts.max()) if hi > lo else 0
    return out


def audit_filling(filling: Filling) -> dict:
    """Recheck the construction invariants; returns measured facts.

    Verifies per level: center separation, covering by half-balls, the
    radius law for the filling's flavor, the edge rule (edge iff levels
    within one and balls sharing a point), and edge orientation.
    """
    space = filling.space
    report = {"flavor": filling.flavor, "levels": {}, "edge_rule_ok": True,
              "orientation_ok": True, "radius_law_ok": True}

    for n in filling.levels:
        lo, hi = filling._level_start[n]
        centers = filling.centers[lo:hi]
        radii = filling.radii[lo:hi]
        scale = 2.0 ** (-n)
        if filling.flavor == "plain":
            seps = np.full(centers.shape[0], scale / 2)
            radius_ok = bool(np.all(radii == scale))
        elif filling.flavor == "trace":
            seps = np.full(centers.shape[0], scale)
            radius_ok = bool(np.all(radii == 4 * scale))
        else:
            on_f = radii == 4 * scale
            seps = np.where(on_f, scale, scale / 2)
            radius_ok = bool(np.all(on_f | (radii == scale)))
        report["radius_law_ok"] &= radius_ok

        coords = space.points[centers]
        dmat = space.cross_dist(coords, coords)
        np.fill_diagonal(dmat, np.inf)
        # Mixed separations: a pair must respect the smaller requirement.
        pair_sep = np.minimum(seps[:, None], seps[None, :])
        separation_ok = bool(np.all(dmat >= pair_sep - 1e-15))

        dist_all = space.cross_dist(space.points, coords)
        covering_ok = bool(np.all((dist_all < radii[None, :] / 2).any(axis=1)))
        report["levels"][n] = {
            "n_vertices": int(centers.shape[0]),
            "separation_ok": separation_ok,
            "covering_ok": covering_ok,
            "radius_law_ok": radius_ok,
        }

    # Edge rule: recount intersecting pairs from the ball members.
    point_sets = [set(m.tolist()) for m in filling.ball_member_list]
    expected = set()
    for a in range(filling.n_vertices):
        for b in range(a + 1, filling.n_vertices):
            if abs(int(filling.vertex_levels[a] - filling.vertex_levels[b])) > 1:
                continue
            if point_sets[a] & point_sets[b]:
                expected.add((a, b))
    actual = set()
    for t, h in zip(filling.tails, filling.heads):
        a, b = sorted((int(t), int(h)))
        actual.add((a, b))
    report["edge_rule_ok"] = expected == actual
    report["n_edges"] = filling.n_edges

    for t, h in zip(filling.tails, filling.heads):
        lt, lh = filling.vertex_levels[t], filling.vertex_levels[h]
        if lt == lh:
            ok = t < h
        else:
            ok = lh == lt + 1
        if not ok:
            report["orientation_ok"] = False
            break
    report["overlap"] = overlap_audit(filling)
    report["ok"] = bool(report["edge_rule_ok"] and report["orientation_ok"]
                        and report["radius_law_ok"]
                        and all(lv["separation_ok"] and lv["covering_ok"]
                                for lv in report["levels"].values()))
    return report


def audit_nested(nested: NestedFilling) -> dict:
    """Compatibility checks between the subset filling and the ambient one."""
    amb, tr = nested.ambient, nested.trace
    report = {}
    # Ambient balls meet F exactly on the embedded vertices.
    member_flags = nested.mask.member_flags
    embedded = np.zeros(amb.n_vertices, dtype=bool)
    embedded[nested.vertex_embedding] = True
    meets = np.array([member_flags[m].any() for m in amb.ball_member_list])
    report["meets_f_iff_embedded"] = bool(np.all(meets == embedded))
    # Vertex embedding preserves level, center and radius.
    ve = nested.vertex_embedding
    report["vertex_embedding_ok"] = bool(
        np.all(amb.vertex_levels[ve] == tr.vertex_levels)
        and np.all(amb.radii[ve] == tr.radii)
        and np.all(amb.centers[ve] == nested.point_embedding[tr.centers]))
    # Edge embedding preserves endpoints and orientation.
    ee = nested.edge_embedding
    report["edge_embedding_ok"] = bool(
        np.all(amb.tails[ee] == ve[tr.tails])
        and np.all(amb.heads[ee] == ve[tr.heads]))
    report["trace_ball_is_restriction"] = all(
        np.array_equal(
            nested.point_embedding[tr.ball_member_list[v]],
            np.intersect1d(amb.ball_member_list[ve[v]],
                           nested.mask.member_indices))
        for v in range(tr.n_vertices))
    report["ok"] = all(bool(v) for v in report.values())
    return report


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def filling_to_dict(filling: Filling) -> dict:
    return {
        "space": space_to_descriptor(filling.space),
        "flavor": filling.flavor,
        "level_lo": filling.level_lo,
        "level_hi": filling.level_hi,
        "vertices": [
            {"center": int(c), "radius": float(r), "level": int(n)}
            for c, r, n in zip(filling.centers, filling.radii,
                               filling.vertex_levels)
        ],
        "edges": [
            {"tail": int(t), "head": int(h)}
            for t, h in zip(filling.tails, filling.heads)
        ],
    }


def filling_from_dict(doc: dict) -> Filling:
    for key in ("space", "flavor", "level_lo", "level_hi", "vertices", "edges"):
        if key not in doc:
            raise ConfigError(f"filling document missing {key!r}")
    space, _ = space_from_descriptor(doc["space"])
    centers = np.array([v["center"] for v in doc["vertices"]], dtype=np.int64)
    radii = np.array([v["radius"] for v in doc["vertices"]], dtype=np.float64)
    levels = np.array([v["level"] for v in doc["vertices"]], dtype=np.int64)
    tails = np.array([e["tail"] for e in doc["edges"]], dtype=np.int64)
    heads = np.array([e["head"] for e in doc["edges"]], dtype=np.int64)
    if centers.size and (centers.min() < 0 or centers.max() >= space.n_points):
        raise ConfigError("vertex centers out of range")
    if tails.size and max(tails.max(), heads.max()) >= centers.size:
        raise ConfigError("edge endpoints out of range")
    edge_levels = (np.minimum(levels[tails], levels[heads]) if tails.size
                   else np.empty(0, dtype=np.int64))
    members = _ball_rows(space, centers, radii)
    return Filling(space=space, flavor=doc["flavor"],
                   level_lo=int(doc["level_lo"]), level_hi=int(doc["level_hi"]),
                   centers=centers, radii=radii, vertex_levels=levels,
                   tails=tails, heads=heads, edge_levels=edge_levels,
                   ball_member_list=members)


def nested_to_dict(nested: NestedFilling) -> dict:
    return {
        "ambient": filling_to_dict(nested.ambient),
        "trace": filling_to_dict(nested.trace),
        "subset": mask_to_descriptor(nested.mask),
        "point_embedding": nested.point_embedding.tolist(),
        "vertex_embedding": nested.vertex_embedding.tolist(),
        "edge_embedding": nested.edge_embedding.tolist(),
    }


def nested_from_dict(doc: dict) -> NestedFilling:
    ambient = filling_from_dict(doc["ambient"])
    trace = filling_from_dict(doc["trace"])
    mask = mask_from_descriptor(ambient.space, doc["subset"])
    return NestedFilling(
        ambient=ambient, trace=trace, mask=mask,
        point_embedding=np.asarray(doc["point_embedding"], dtype=np.int64),
        vertex_embedding=np.asarray(doc["vertex_embedding"], dtype=np.int64),
        edge_embedding=np.asarray(doc["edge_embedding"], dtype=np.int64),
    )
