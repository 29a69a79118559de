#pragma once

// Physical coupling graphs: standard generators (chain, square grid,
// heavy-hex), edge-list loading, and BFS all-pairs hop distances.
// Heavy-hex indexing is documented in docs/heavy_hex.md.

#include "parse_error.hpp"

#include <algorithm>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <vector>

namespace qroute {

class InvalidSize : public std::runtime_error {
public:
    explicit InvalidSize(const std::string& what) : std::runtime_error(what) {}
};

class Disconnected : public std::runtime_error {
public:
    explicit Disconnected(const std::string& what) : std::runtime_error(what) {}
};

struct CouplingGraph {
    int n = 0;
    std::set<std::pair<int, int>> edges;           // (min, max) pairs
    std::vector<std::vector<int>> dist;            // hop counts
    std::vector<std::vector<int>> adj;

    bool has_edge(int i, int j) const {
        return edges.count({std::min(i, j), std::max(i, j)}) > 0;
    }
};

namespace topo_detail {

inline void finalize(CouplingGraph& g) {
    g.adj.assign(g.n, {});
    for (const auto& [i, j] : g.edges) {
        g.adj[i].push_back(j);
        g.adj[j].push_back(i);
    }
    for (auto& v : g.adj) std::sort(v.begin(), v.end());
    g.dist.assign(g.n, std::vector<int>(g.n, -1));
    for (int s = 0; s < g.n; ++s) {
        auto& d = g.dist[s];
        d[s] = 0;
        std::queue<int> q;
        q.push(s);
        while (!q.empty()) {
            int u = q.front();
            q.pop();
            for (int v : g.adj[u])
                if (d[v] < 0) {
                    d[v] = d[u] + 1;
                    q.push(v);
                }
        }
        for (int t = 0; t < g.n; ++t)
            if (d[t] < 0) throw Disconnected("coupling graph is disconnected");
    }
}

inline void add_edge(CouplingGraph& g, int i, int j) {
    g.edges.insert({std::min(i, j), std::max(i, j)});
}

} // namespace topo_detail

inline CouplingGraph chain_graph(int n) {
    if (n < 2) throw InvalidSize("chain: n must be >= 2");
    CouplingGraph g;
    g.n = n;
    for (int i = 0; i + 1 < n; ++i) topo_detail::add_edge(g, i, i + 1);
    topo_detail::finalize(g);
    return g;
}

inline CouplingGraph square_graph(int rows, int cols) {
    if (rows < 2 || cols < 2) throw InvalidSize("square: rows and cols must be >= 2");
    CouplingGraph g;
    g.n = rows * cols;
    auto idx = [&](int r, int c) { return r * cols + c; };
    for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) {
            if (c + 1 < cols) topo_detail::add_edge(g, idx(r, c), idx(r, c + 1));
            if (r + 1 < rows) topo_detail::add_edge(g, idx(r, c), idx(r + 1, c));
        }
    topo_detail::finalize(g);
    return g;
}

/// Brick-wall rendering of the IBM heavy-hex unit cell, k x k cells.
/// (k+1) horizontal chains of 4k+1 qubits; bridge qubits between adjacent
/// chains sit at columns 0,4,8,... below even-index chains and 2,6,...
/// below odd-index chains. Indexing is row-major: chain 0, bridges 0,
/// chain 1, bridges 1, ... (see docs/heavy_hex.md for the diagram).
inline CouplingGraph heavy_hex_graph(int k) {
    if (k < 2) throw InvalidSize("heavy_hex: k must be >= 2");
    CouplingGraph g;
    const int width = 4 * k + 1;
    std::vector<std::vector<int>> chain_ids(k + 1);
    int next = 0;
    std::vector<std::vector<std::pair<int, int>>> bridges(k);  // (column, id)
    for (int r = 0; r <= k; ++r) {
        for (int c = 0; c < width; ++c) chain_ids[r].push_back(next++);
        if (r < k) {
            int start = (r % 2 == 0) ? 0 : 2;
            for (int c = start; c < width; c += 4) bridges[r].push_back({c, next++});
        }
    }
    g.n = next;
    for (int r = 0; r <= k; ++r)
        for (int c = 0; c + 1 < width; ++c)
            topo_detail::add_edge(g, chain_ids[r][c], chain_ids[r][c + 1]);
    for (int r = 0; r < k; ++r)
        for (const auto& [c, id] : bridges[r]) {
            topo_detail::add_edge(g, chain_ids[r][c], id);
            topo_detail::add_edge(g, id, chain_ids[r + 1][c]);
        }
    topo_detail::finalize(g);
    return g;
}

inline CouplingGraph load_graph_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    CouplingGraph g;
    bool have_n = false;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;  // blank line
        if (first[0] == '#') continue;
        if (!have_n) {
            try {
                g.n = std::stoi(first);
            } catch (...) {
                throw ParseError(lineno, 1, "expected qubit count");
            }
            if (g.n < 1) throw ParseError(lineno, 1, "qubit count must be positive");
            have_n = true;
            continue;
        }
        int i, j;
        try {
            i = std::stoi(first);
        } catch (...) {
            throw ParseError(lineno, 1, "expected edge 'i j'");
        }
        if (!(ls >> j)) throw ParseError(lineno, 1, "expected edge 'i j'");
        if (i < 0 || j < 0 || i >= g.n || j >= g.n || i == j)
            throw ParseError(lineno, 1, "bad edge endpoint");
        topo_detail::add_edge(g, i, j);
    }
    if (!have_n) throw ParseError(lineno, 1, "empty graph file");
    topo_detail::finalize(g);
    return g;
}

inline CouplingGraph load_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open graph file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_graph_text(ss.str());
}

} // namespace qroute
