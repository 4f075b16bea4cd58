"""Incremental Bowyer-Watson Delaunay triangulation with exact predicates.

Input points are integer coordinates.  Orientation and in-circle tests
first try a floating-point evaluation with an error bound and fall back to
exact Python integers when the sign is uncertain, so cocircular and
collinear configurations are decided exactly.
"""
from __future__ import annotations

from ..exceptions import DegenerateInput

_SUPER = 2 ** 100
_EPS = 2.0 ** -45


def orient(a, b, c) -> int:
    """Sign of the signed area of (a, b, c): +1 counter-clockwise."""
    acx, acy = a[0] - c[0], a[1] - c[1]
    bcx, bcy = b[0] - c[0], b[1] - c[1]
    det = acx * bcy - acy * bcx
    return (det > 0) - (det < 0)


def incircle(a, b, c, d) -> int:
    """+1 if ``d`` lies strictly inside the circle through ccw (a, b, c)."""
    adx, ady = a[0] - d[0], a[1] - d[1]
    bdx, bdy = b[0] - d[0], b[1] - d[1]
    cdx, cdy = c[0] - d[0], c[1] - d[1]
    if max(abs(adx), abs(ady), abs(bdx), abs(bdy), abs(cdx), abs(cdy)) < 2 ** 40:
        fa = float(adx * adx + ady * ady)
        fb = float(bdx * bdx + bdy * bdy)
        fc = float(cdx * cdx + cdy * cdy)
        t1 = fa * (float(bdx) * cdy - float(cdx) * bdy)
        t2 = fb * (float(cdx) * ady - float(adx) * cdy)
        t3 = fc * (float(adx) * bdy - float(bdx) * ady)
        det = t1 + t2 + t3
        bound = _EPS * (abs(fa) * (abs(bdx * cdy) + abs(cdx * bdy))
                        + abs(fb) * (abs(cdx * ady) + abs(adx * cdy))
                        + abs(fc) * (abs(adx * bdy) + abs(bdx * ady)))
        if det > bound:
            return 1
        if det < -bound:
            return -1
    alift = adx * adx + ady * ady
    blift = bdx * bdx + bdy * bdy
    clift = cdx * cdx + cdy * cdy
    det = (alift * (bdx * cdy - cdx * bdy)
           + blift * (cdx * ady - adx * cdy)
           + clift * (adx * bdy - bdx * ady))
    return (det > 0) - (det < 0)


class _Triangulation:
    def __init__(self, pts):
        self.pts = list(pts)
        n = len(self.pts)
        self.pts += [(-_SUPER, -_SUPER), (3 * _SUPER, -_SUPER), (-_SUPER, 3 * _SUPER)]
        self.n_real = n
        self.tris = {}
        # nbr[t][i] is the triangle across the edge opposite vertex i
        self.nbr = {}
        self._next = 0
        self.last = self._add((n, n + 1, n + 2), [None, None, None])

    def _add(self, tri, nbrs):
        tid = self._next
        self._next += 1
        self.tris[tid] = tri
        self.nbr[tid] = list(nbrs)
        return tid

    def _locate(self, p):
        t = self.last if self.last in self.tris else next(iter(self.tris))
        while True:
            a, b, c = self.tris[t]
            P = self.pts
            for i, (u, v) in enumerate(((b, c), (c, a), (a, b))):
                if orient(P[u], P[v], p) < 0:
                    t = self.nbr[t][i]
                    break
            else:
                return t

    def insert(self, idx):
        p = self.pts[idx]
        start = self._locate(p)
        bad = {start}
        stack = [start]
        P = self.pts
        while stack:
            t = stack.pop()
            for o in self.nbr[t]:
                if o is None or o in bad:
                    continue
                a, b, c = self.tris[o]
                if incircle(P[a], P[b], P[c], p) > 0:
                    bad.add(o)
                    stack.append(o)
        boundary = []
        for t in bad:
            a, b, c = self.tris[t]
            for i, (u, v) in enumerate(((b, c), (c, a), (a, b))):
                o = self.nbr[t][i]
                if o is None or o not in bad:
                    boundary.append((u, v, o))
        for t in bad:
            del self.tris[t]
            del self.nbr[t]
        # new triangle (u, v, idx): opposite idx -> outside, opposite u -> edge (v, idx),
        # opposite v -> edge (idx, u)
        starts, ends = {}, {}
        new = []
        for u, v, o in boundary:
            tid = self._add((u, v, idx), [None, None, o])
            if o is not None:
                ou = self.tris[o]
                for j in range(3):
                    x, y = ou[(j + 1) % 3], ou[(j + 2) % 3]
                    if x == v and y == u:
                        self.nbr[o][j] = tid
                        break
            starts[u] = tid
            ends[v] = tid
            new.append((tid, u, v))
        for tid, u, v in new:
            self.nbr[tid][0] = starts[v]   # edge (v, idx) shared with triangle starting at v
            self.nbr[tid][1] = ends[u]     # edge (idx, u) shared with triangle ending at u
        self.last = new[0][0]

    def real_triangles(self):
        n = self.n_real
        return [t for t in self.tris.values() if max(t) < n]


def triangulate(points):
    """Delaunay triangles of distinct integer points, each ccw.

    Raises
    ------
    DegenerateInput
        If fewer than three points are given, points repeat, or all points
        are collinear.
    """
    pts = [(int(x), int(y)) for x, y in points]
    if len(pts) < 3:
        raise DegenerateInput("need at least three points")
    if len(set(pts)) != len(pts):
        raise DegenerateInput("duplicate points")
    if all(orient(pts[0], pts[1], q) == 0 for q in pts[2:]):
        raise DegenerateInput("all points are collinear")
    tri = _Triangulation(pts)
    for i in range(len(pts)):
        tri.insert(i)
    return sorted(tuple(t) for t in tri.real_triangles())


def triangle_edges(triangles):
    """Sorted undirected edges ``(i, j)`` with ``i < j``."""
    out = set()
    for a, b, c in triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            out.add((min(u, v), max(u, v)))
    return sorted(out)
