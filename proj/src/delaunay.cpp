#include "deltet/grid.hpp"

#include "deltet/predicates.hpp"
#include "deltet/rng.hpp"

#include <algorithm>
#include <numeric>

namespace deltet
{
    namespace
    {
        constexpr int kGhost = -1;

        std::uint64_t spread_bits(std::uint64_t v)
        {
            v &= 0x1fffffULL;
            v = (v | (v << 32)) & 0x1f00000000ffffULL;
            v = (v | (v << 16)) & 0x1f0000ff0000ffULL;
            v = (v | (v << 8)) & 0x100f00f00f00f00fULL;
            v = (v | (v << 4)) & 0x10c30c30c30c30c3ULL;
            v = (v | (v << 2)) & 0x1249249249249249ULL;
            return v;
        }

        /// Insertion order with spatial locality (Morton curve).
        std::vector<int> spatial_order(std::span<const Vec3> pts)
        {
            Vec3 lo = pts[0], hi = pts[0];
            for (const Vec3 & p : pts)
            {
                lo = lo.cwiseMin(p);
                hi = hi.cwiseMax(p);
            }
            const double extent = std::max((hi - lo).maxCoeff(), 1e-300);
            const double scale = static_cast<double>((1 << 21) - 1) / extent;
            std::vector<std::pair<std::uint64_t, int>> keyed(pts.size());
            for (std::size_t i = 0; i < pts.size(); ++i)
            {
                const Vec3 q = (pts[i] - lo) * scale;
                const auto qx = static_cast<std::uint64_t>(q.x());
                const auto qy = static_cast<std::uint64_t>(q.y());
                const auto qz = static_cast<std::uint64_t>(q.z());
                keyed[i] = {spread_bits(qx) | (spread_bits(qy) << 1) | (spread_bits(qz) << 2), static_cast<int>(i)};
            }
            std::sort(keyed.begin(), keyed.end());
            std::vector<int> order(pts.size());
            for (std::size_t i = 0; i < pts.size(); ++i)
            {
                order[i] = keyed[i].second;
            }
            return order;
        }

        bool collinear(const Vec3 & a, const Vec3 & b, const Vec3 & c)
        {
            using predicates::orient2d;
            return orient2d(a.x(), a.y(), b.x(), b.y(), c.x(), c.y()) == 0
                && orient2d(a.y(), a.z(), b.y(), b.z(), c.y(), c.z()) == 0
                && orient2d(a.z(), a.x(), b.z(), b.x(), c.z(), c.x()) == 0;
        }

        int permutation_parity(const std::array<int, 4> & v)
        {
            int inversions = 0;
            for (int i = 0; i < 4; ++i)
                for (int j = i + 1; j < 4; ++j)
                    inversions += v[i] > v[j];
            return inversions & 1;
        }

        /// Bowyer-Watson with a ghost vertex closing the convex hull. Ghost
        /// tets keep the ghost at local index 3, and their finite face (0,1,2)
        /// is oriented so that orient3d(v0, v1, v2, x) > 0 for x beyond it.
        class Builder
        {
        public:
            explicit Builder(std::span<const Vec3> pts) : pts_(pts), rng_(0x64656c61756e6179ULL) {}

            void run()
            {
                const std::vector<int> order = spatial_order(pts_);
                const std::array<int, 4> seed = initial_simplex(order);
                for (int idx : order)
                {
                    if (idx == seed[0] || idx == seed[1] || idx == seed[2] || idx == seed[3])
                    {
                        continue;
                    }
                    insert(idx);
                }
            }

            /// Finite tets with neighbor links (-1 across hull faces).
            void finish(std::vector<Tet> & tets, std::vector<Tet> & neighbors) const
            {
                std::vector<int> compact(verts_.size(), -1);
                int count = 0;
                for (std::size_t t = 0; t < verts_.size(); ++t)
                {
                    if (alive_[t] && verts_[t][3] != kGhost)
                    {
                        compact[t] = count++;
                    }
                }
                std::vector<Tet> canon(count);
                std::vector<Tet> canon_nb(count);
                for (std::size_t t = 0; t < verts_.size(); ++t)
                {
                    const int c = compact[t];
                    if (c < 0)
                    {
                        continue;
                    }
                    const Tet & v = verts_[t];
                    // Canonical form: sorted vertices, last two swapped if needed for positive orientation.
                    Tet s = v;
                    std::sort(s.begin(), s.end());
                    std::array<int, 4> perm{};
                    for (int k = 0; k < 4; ++k)
                    {
                        perm[k] = static_cast<int>(std::find(v.begin(), v.end(), s[k]) - v.begin());
                    }
                    if (permutation_parity(perm) != 0)
                    {
                        std::swap(s[2], s[3]);
                        std::swap(perm[2], perm[3]);
                    }
                    canon[c] = s;
                    for (int k = 0; k < 4; ++k)
                    {
                        const int nb = neigh_[t][perm[k]];
                        canon_nb[c][k] = compact[nb];
                    }
                }

                std::vector<int> sorted(count);
                std::iota(sorted.begin(), sorted.end(), 0);
                auto key = [&](int t) {
                    Tet s = canon[t];
                    if (s[2] > s[3])
                    {
                        std::swap(s[2], s[3]);
                    }
                    return s;
                };
                std::sort(sorted.begin(), sorted.end(), [&](int a, int b) { return key(a) < key(b); });
                std::vector<int> rank(count);
                for (int i = 0; i < count; ++i)
                {
                    rank[sorted[i]] = i;
                }
                tets.resize(count);
                neighbors.resize(count);
                for (int i = 0; i < count; ++i)
                {
                    const int t = sorted[i];
                    tets[i] = canon[t];
                    for (int k = 0; k < 4; ++k)
                    {
                        const int nb = canon_nb[t][k];
                        neighbors[i][k] = nb < 0 ? -1 : rank[nb];
                    }
                }
            }

        private:
            std::array<int, 4> initial_simplex(const std::vector<int> & order)
            {
                const int a = order[0];
                int b = -1, c = -1, d = -1;
                std::size_t k = 1;
                for (; k < order.size(); ++k)
                {
                    if (pts_[order[k]] != pts_[a])
                    {
                        b = order[k];
                        break;
                    }
                }
                for (++k; b >= 0 && k < order.size(); ++k)
                {
                    if (!collinear(pts_[a], pts_[b], pts_[order[k]]))
                    {
                        c = order[k];
                        break;
                    }
                }
                int o = 0;
                for (++k; c >= 0 && k < order.size(); ++k)
                {
                    o = predicates::orient3d(pts_[a], pts_[b], pts_[c], pts_[order[k]]);
                    if (o != 0)
                    {
                        d = order[k];
                        break;
                    }
                }
                if (d < 0)
                {
                    throw Error(ErrorKind::degenerate_input, "delaunay: all points are coplanar");
                }
                Tet first = o > 0 ? Tet{a, b, c, d} : Tet{a, b, d, c};
                const int t0 = alloc(first);
                std::array<int, 4> ghosts{};
                for (int i = 0; i < 4; ++i)
                {
                    Tet g = first;
                    g[i] = kGhost;
                    if (i != 3)
                    {
                        std::swap(g[i], g[3]);
                    }
                    else
                    {
                        std::swap(g[0], g[1]);
                    }
                    ghosts[i] = alloc(g);
                }
                std::vector<int> created{t0, ghosts[0], ghosts[1], ghosts[2], ghosts[3]};
                link_by_faces(created);
                last_ = t0;
                return {a, b, c, d};
            }

            /// Links all faces shared among `tets` (used for the initial simplex).
            void link_by_faces(const std::vector<int> & tets)
            {
                struct Entry
                {
                    std::array<int, 3> key;
                    int tet;
                    int local;
                };
                std::vector<Entry> entries;
                for (int t : tets)
                {
                    for (int k = 0; k < 4; ++k)
                    {
                        std::array<int, 3> f{};
                        int m = 0;
                        for (int l = 0; l < 4; ++l)
                        {
                            if (l != k)
                            {
                                f[m++] = verts_[t][l];
                            }
                        }
                        std::sort(f.begin(), f.end());
                        entries.push_back({f, t, k});
                    }
                }
                std::sort(entries.begin(), entries.end(), [](const Entry & x, const Entry & y) { return x.key < y.key; });
                for (std::size_t i = 0; i + 1 < entries.size(); i += 2)
                {
                    if (entries[i].key != entries[i + 1].key)
                    {
                        throw Error(ErrorKind::internal, "delaunay: unmatched face in initial simplex");
                    }
                    neigh_[entries[i].tet][entries[i].local] = entries[i + 1].tet;
                    neigh_[entries[i + 1].tet][entries[i + 1].local] = entries[i].tet;
                }
            }

            int alloc(const Tet & v)
            {
                int t;
                if (!free_.empty())
                {
                    t = free_.back();
                    free_.pop_back();
                    verts_[t] = v;
                    neigh_[t] = {-1, -1, -1, -1};
                    alive_[t] = 1;
                    mark_[t] = 0;
                }
                else
                {
                    t = static_cast<int>(verts_.size());
                    verts_.push_back(v);
                    neigh_.push_back({-1, -1, -1, -1});
                    alive_.push_back(1);
                    mark_.push_back(0);
                }
                return t;
            }

            bool is_ghost(int t) const { return verts_[t][3] == kGhost; }

            bool in_circumsphere(int t, int p) const
            {
                const Tet & v = verts_[t];
                return predicates::insphere(pts_[v[0]], pts_[v[1]], pts_[v[2]], pts_[v[3]], pts_[p]) > 0;
            }

            bool conflict(int t, int p) const
            {
                const Tet & v = verts_[t];
                if (!is_ghost(t))
                {
                    return in_circumsphere(t, p);
                }
                const int o = predicates::orient3d(pts_[v[0]], pts_[v[1]], pts_[v[2]], pts_[p]);
                if (o != 0)
                {
                    return o > 0;
                }
                // Coplanar with the hull face: conflict iff inside its circumcircle,
                // i.e. inside the circumsphere of the finite tet across it.
                return in_circumsphere(neigh_[t][3], p);
            }

            int walk(int p)
            {
                int t = last_;
                if (t < 0 || !alive_[t])
                {
                    t = first_alive();
                }
                if (is_ghost(t))
                {
                    t = neigh_[t][3];
                }
                const std::size_t limit = 64 + 4 * verts_.size();
                for (std::size_t step = 0; step < limit; ++step)
                {
                    if (is_ghost(t))
                    {
                        return t;
                    }
                    const int k0 = static_cast<int>(rng_.bits() & 3U);
                    bool moved = false;
                    for (int f = 0; f < 4; ++f)
                    {
                        const int i = (k0 + f) & 3;
                        std::array<const Vec3 *, 4> q{&pts_[verts_[t][0]], &pts_[verts_[t][1]], &pts_[verts_[t][2]], &pts_[verts_[t][3]]};
                        q[i] = &pts_[p];
                        if (predicates::orient3d(*q[0], *q[1], *q[2], *q[3]) < 0)
                        {
                            t = neigh_[t][i];
                            moved = true;
                            break;
                        }
                    }
                    if (!moved)
                    {
                        return t;
                    }
                }
                for (std::size_t s = 0; s < verts_.size(); ++s)
                {
                    if (alive_[s] && conflict(static_cast<int>(s), p))
                    {
                        return static_cast<int>(s);
                    }
                }
                throw Error(ErrorKind::internal, "delaunay: no conflicting tet found");
            }

            int first_alive() const
            {
                for (std::size_t t = 0; t < verts_.size(); ++t)
                {
                    if (alive_[t])
                    {
                        return static_cast<int>(t);
                    }
                }
                throw Error(ErrorKind::internal, "delaunay: empty triangulation");
            }

            void insert(int p)
            {
                const int start = walk(p);
                if (!conflict(start, p))
                {
                    throw Error(ErrorKind::degenerate_input,
                                "delaunay: duplicate point " + std::to_string(p) + " (run perturb_duplicates first)");
                }

                ++stamp_;
                cavity_.clear();
                boundary_.clear();
                stack_.clear();
                stack_.push_back(start);
                mark_[start] = stamp_;
                while (!stack_.empty())
                {
                    const int t = stack_.back();
                    stack_.pop_back();
                    cavity_.push_back(t);
                    for (int i = 0; i < 4; ++i)
                    {
                        const int n = neigh_[t][i];
                        if (mark_[n] == stamp_)
                        {
                            continue;
                        }
                        if (conflict(n, p))
                        {
                            mark_[n] = stamp_;
                            stack_.push_back(n);
                        }
                        else
                        {
                            boundary_.push_back({t, i});
                        }
                    }
                }

                links_.clear();
                int any_new = -1;
                for (const auto & [t, i] : boundary_)
                {
                    Tet v = verts_[t];
                    v[i] = p;
                    const int nt = alloc(v);
                    any_new = nt;
                    const int n = neigh_[t][i];
                    neigh_[nt][i] = n;
                    for (int j = 0; j < 4; ++j)
                    {
                        if (neigh_[n][j] == t)
                        {
                            neigh_[n][j] = nt;
                            break;
                        }
                    }
                    for (int k = 0; k < 4; ++k)
                    {
                        if (k == i)
                        {
                            continue;
                        }
                        int e0 = -2, e1 = -2;
                        for (int l = 0; l < 4; ++l)
                        {
                            if (l != i && l != k)
                            {
                                (e0 == -2 ? e0 : e1) = v[l];
                            }
                        }
                        links_.push_back({std::min(e0, e1), std::max(e0, e1), nt, k});
                    }
                }
                std::sort(links_.begin(), links_.end(), [](const Link & x, const Link & y) {
                    return x.a != y.a ? x.a < y.a : x.b < y.b;
                });
                for (std::size_t k = 0; k + 1 < links_.size(); k += 2)
                {
                    const Link & x = links_[k];
                    const Link & y = links_[k + 1];
                    if (x.a != y.a || x.b != y.b)
                    {
                        throw Error(ErrorKind::internal, "delaunay: cavity boundary is not a closed surface");
                    }
                    neigh_[x.tet][x.local] = y.tet;
                    neigh_[y.tet][y.local] = x.tet;
                }
                // Cavity tets are recycled only now, after the new ones copied their data.
                for (int t : cavity_)
                {
                    alive_[t] = 0;
                    free_.push_back(t);
                }
                last_ = any_new;
            }

            struct Link
            {
                int a, b, tet, local;
            };

            std::span<const Vec3> pts_;
            std::vector<Tet> verts_;
            std::vector<Tet> neigh_;
            std::vector<char> alive_;
            std::vector<std::uint32_t> mark_;
            std::vector<int> free_;
            std::uint32_t stamp_ = 0;
            int last_ = -1;
            Rng rng_;

            std::vector<int> cavity_;
            std::vector<int> stack_;
            std::vector<std::pair<int, int>> boundary_;
            std::vector<Link> links_;
        };

        void build_connectivity(TetGrid & g)
        {
            const std::size_t n = g.points.size();
            std::vector<EdgeKey> all;
            all.reserve(g.tets.size() * 6);
            for (const Tet & t : g.tets)
            {
                for (const auto & le : kTetEdgeLocal)
                {
                    const int i = t[le[0]], j = t[le[1]];
                    all.push_back({std::min(i, j), std::max(i, j)});
                }
            }
            std::sort(all.begin(), all.end());
            all.erase(std::unique(all.begin(), all.end()), all.end());
            g.edges = std::move(all);

            g.adjacency_offsets.assign(n + 1, 0);
            for (const EdgeKey & e : g.edges)
            {
                ++g.adjacency_offsets[e[0] + 1];
                ++g.adjacency_offsets[e[1] + 1];
            }
            for (std::size_t i = 0; i < n; ++i)
            {
                g.adjacency_offsets[i + 1] += g.adjacency_offsets[i];
            }
            g.adjacency.assign(g.adjacency_offsets[n], 0);
            std::vector<int> fill(g.adjacency_offsets.begin(), g.adjacency_offsets.end() - 1);
            for (const EdgeKey & e : g.edges)
            {
                g.adjacency[fill[e[0]]++] = e[1];
                g.adjacency[fill[e[1]]++] = e[0];
            }

            g.edge_begin.assign(n + 1, 0);
            g.upper_begin.assign(n, 0);
            for (const EdgeKey & e : g.edges)
            {
                ++g.edge_begin[e[0] + 1];
            }
            for (std::size_t i = 0; i < n; ++i)
            {
                g.edge_begin[i + 1] += g.edge_begin[i];
                const auto nb = g.vertex_neighbors(static_cast<int>(i));
                g.upper_begin[i] = g.adjacency_offsets[i]
                                 + static_cast<int>(std::upper_bound(nb.begin(), nb.end(), static_cast<int>(i)) - nb.begin());
            }

            g.tet_edges.resize(g.tets.size());
            g.edge_tet_offsets.assign(g.edges.size() + 1, 0);
            for (std::size_t t = 0; t < g.tets.size(); ++t)
            {
                for (int k = 0; k < 6; ++k)
                {
                    const int e = g.edge_id(g.tets[t][kTetEdgeLocal[k][0]], g.tets[t][kTetEdgeLocal[k][1]]);
                    g.tet_edges[t][k] = e;
                    ++g.edge_tet_offsets[e + 1];
                }
            }
            for (std::size_t e = 0; e < g.edges.size(); ++e)
            {
                g.edge_tet_offsets[e + 1] += g.edge_tet_offsets[e];
            }
            g.edge_tets.assign(g.edge_tet_offsets.back(), 0);
            std::vector<int> efill(g.edge_tet_offsets.begin(), g.edge_tet_offsets.end() - 1);
            for (std::size_t t = 0; t < g.tets.size(); ++t)
            {
                for (int k = 0; k < 6; ++k)
                {
                    g.edge_tets[efill[g.tet_edges[t][k]]++] = static_cast<int>(t);
                }
            }
        }
    }

    int TetGrid::edge_id(int i, int j) const
    {
        if (i == j)
        {
            return -1;
        }
        if (i > j)
        {
            std::swap(i, j);
        }
        const int * first = adjacency.data() + upper_begin[i];
        const int * last = adjacency.data() + adjacency_offsets[i + 1];
        const int * it = std::lower_bound(first, last, j);
        if (it == last || *it != j)
        {
            return -1;
        }
        return edge_begin[i] + static_cast<int>(it - first);
    }

    double TetGrid::volume(std::size_t t) const
    {
        const Tet & v = tets[t];
        return predicates::orient3d_fast(points[v[0]], points[v[1]], points[v[2]], points[v[3]]) / 6.0;
    }

    TetGrid delaunay(std::span<const Vec3> points, std::uint64_t generation)
    {
        if (points.size() < 4)
        {
            throw Error(ErrorKind::degenerate_input, "delaunay: needs at least 4 points");
        }
        for (const Vec3 & p : points)
        {
            if (!p.allFinite())
            {
                throw Error(ErrorKind::invalid_argument, "delaunay: non-finite point");
            }
        }
        Builder builder(points);
        builder.run();

        TetGrid g;
        g.points.assign(points.begin(), points.end());
        builder.finish(g.tets, g.neighbors);
        g.generation = generation;
        build_connectivity(g);
        return g;
    }

    TetGrid delaunay(const PointSet & ps)
    {
        return delaunay(std::span<const Vec3>(ps.positions), ps.generation);
    }
}
