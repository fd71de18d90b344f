#pragma once

#include "types.hpp"

namespace mismatch {
namespace detail {

struct TransportResult {
    double cost = 0.0;
    Mat reduced;  // d(i,j) - u(i) - v(j) for an optimal dual (u, v); zero on the optimal face
};

// Exact min E[d] over couplings of (a, b): successive shortest paths on the transport network.
inline TransportResult transport_solve(const Vec& a, const Vec& b, const Mat& d) {
    const int n = static_cast<int>(a.size()), m = static_cast<int>(b.size());
    const int src = n + m, snk = n + m + 1, nv = n + m + 2;
    struct Edge {
        int to;
        double cap, cost;
    };
    std::vector<Edge> es;
    std::vector<std::vector<int>> adj(nv);
    auto add = [&](int u, int v, double cap, double cost) {
        adj[u].push_back(static_cast<int>(es.size()));
        es.push_back({v, cap, cost});
        adj[v].push_back(static_cast<int>(es.size()));
        es.push_back({u, 0.0, -cost});
    };
    for (int i = 0; i < n; ++i)
        if (a(i) > 0.0) add(src, i, a(i), 0.0);
    for (int j = 0; j < m; ++j)
        if (b(j) > 0.0) add(n + j, snk, b(j), 0.0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) add(i, n + j, kInf, d(i, j));
    double flow = 0.0, cost = 0.0, need = std::min(a.sum(), b.sum());
    const double eps = 1e-15;
    while (flow < need - 1e-13) {
        std::vector<double> dist(nv, kInf);
        std::vector<int> prev(nv, -1);
        dist[src] = 0.0;
        for (int round = 0; round < nv; ++round) {
            bool changed = false;
            for (int u = 0; u < nv; ++u) {
                if (dist[u] == kInf) continue;
                for (int e : adj[u])
                    if (es[e].cap > eps && dist[u] + es[e].cost < dist[es[e].to] - 1e-15) {
                        dist[es[e].to] = dist[u] + es[e].cost;
                        prev[es[e].to] = e;
                        changed = true;
                    }
            }
            if (!changed) break;
        }
        if (dist[snk] == kInf) break;
        double push = kInf;
        for (int v = snk; v != src; v = es[prev[v] ^ 1].to) push = std::min(push, es[prev[v]].cap);
        for (int v = snk; v != src; v = es[prev[v] ^ 1].to) {
            es[prev[v]].cap -= push;
            es[prev[v] ^ 1].cap += push;
        }
        flow += push;
        cost += push * dist[snk];
    }
    if (flow < need - 1e-9) throw Error(ErrorKind::infeasible, "transport_min: marginals admit no coupling");
    // Potentials from a virtual root joined to every node; reduced costs on residual edges are then >= 0.
    std::vector<double> pot(nv, 0.0);
    for (int round = 0; round < nv; ++round) {
        bool changed = false;
        for (int u = 0; u < nv; ++u)
            for (int e : adj[u])
                if (es[e].cap > eps && pot[u] + es[e].cost < pot[es[e].to] - 1e-15) {
                    pot[es[e].to] = pot[u] + es[e].cost;
                    changed = true;
                }
        if (!changed) break;
    }
    TransportResult r;
    r.cost = cost;
    r.reduced = Mat(n, m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) r.reduced(i, j) = d(i, j) + pot[i] - pot[n + j];
    return r;
}

inline double transport_min(const Vec& a, const Vec& b, const Mat& d) { return transport_solve(a, b, d).cost; }

}  // namespace detail
}  // namespace mismatch
