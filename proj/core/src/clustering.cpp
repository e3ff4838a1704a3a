// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#include "sir/clustering.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>

#include "sir/errors.hpp"

namespace sir {

OverlapGraph::OverlapGraph(std::vector<int> ids, std::vector<double> scores)
    : ids_(std::move(ids)), scores_(std::move(scores)) {
    if (!std::is_sorted(ids_.begin(), ids_.end()) ||
        std::adjacent_find(ids_.begin(), ids_.end()) != ids_.end())
        throw InvalidArgument("overlap graph ids must be sorted and unique");
    if (scores_.size() != ids_.size() * ids_.size())
        throw InvalidArgument("overlap graph score matrix size mismatch");
}

std::size_t OverlapGraph::index(int id) const {
    const auto it = std::lower_bound(ids_.begin(), ids_.end(), id);
    if (it == ids_.end() || *it != id)
        throw InvalidArgument("unknown view id " + std::to_string(id));
    return static_cast<std::size_t>(it - ids_.begin());
}

bool OverlapGraph::contains(int id) const {
    return std::binary_search(ids_.begin(), ids_.end(), id);
}

double OverlapGraph::score(int id_a, int id_b) const {
    if (id_a == id_b) return 1.0;
    return scores_[index(id_a) * ids_.size() + index(id_b)];
}

int OverlapGraph::degree(int id) const {
    const std::size_t row = index(id);
    int deg = 0;
    for (std::size_t k = 0; k < ids_.size(); ++k)
        if (k != row && scores_[row * ids_.size() + k] > kOverlapFloor) ++deg;
    return deg;
}

double overlap_score(const Camera& view_a, const Camera& view_b,
                     std::span<const Eigen::Vector3d> proxies) {
    if (proxies.empty()) throw EmptyProxy();
    std::size_t in_a = 0, in_b = 0, in_both = 0;
    for (const auto& p : proxies) {
        const auto pa = project(view_a, p);
        const auto pb = project(view_b, p);
        const bool a = pa && in_bounds(*pa, view_a.width, view_a.height);
        const bool b = pb && in_bounds(*pb, view_b.width, view_b.height);
        in_a += a;
        in_b += b;
        in_both += a && b;
    }
    if (in_a == 0 || in_b == 0) return 0.0;
    return 0.5 * (static_cast<double>(in_both) / static_cast<double>(in_a) +
                  static_cast<double>(in_both) / static_cast<double>(in_b));
}

OverlapGraph build_overlap_graph(const std::vector<std::pair<int, Camera>>& views,
                                 std::span<const Eigen::Vector3d> proxies) {
    std::vector<std::pair<int, const Camera*>> sorted;
    sorted.reserve(views.size());
    for (const auto& [id, cam] : views) sorted.emplace_back(id, &cam);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    const std::size_t n = sorted.size();
    std::vector<int> ids(n);
    for (std::size_t i = 0; i < n; ++i) ids[i] = sorted[i].first;
    std::vector<double> scores(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        scores[i * n + i] = 1.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = overlap_score(*sorted[i].second, *sorted[j].second, proxies);
            scores[i * n + j] = s;
            scores[j * n + i] = s;
        }
    }
    return OverlapGraph(std::move(ids), std::move(scores));
}

std::vector<Cluster> cluster_views(const OverlapGraph& graph, int target_size,
                                   int source_budget) {
    if (target_size < 2) throw InvalidArgument("cluster target size must be >= 2");
    const auto& ids = graph.ids();
    std::set<int> unassigned(ids.begin(), ids.end());
    std::vector<Cluster> clusters;

    while (!unassigned.empty()) {
        // Seed: highest degree, ties toward the smaller id.
        int seed = *unassigned.begin();
        int best_deg = graph.degree(seed);
        for (int id : unassigned) {
            const int d = graph.degree(id);
            if (d > best_deg) {
                seed = id;
                best_deg = d;
            }
        }
        Cluster cluster;
        cluster.id = static_cast<int>(clusters.size());
        cluster.members.push_back(seed);
        unassigned.erase(seed);

        while (static_cast<int>(cluster.members.size()) < target_size) {
            int best = -1;
            double best_total = 0.0;
            bool best_qualifies = false;
            for (int cand : unassigned) {
                double total = 0.0;
                double strongest = 0.0;
                for (int m : cluster.members) {
                    const double s = graph.score(cand, m);
                    total += s;
                    strongest = std::max(strongest, s);
                }
                if (strongest <= kOverlapFloor) continue;
                if (!best_qualifies || total > best_total) {
                    best = cand;
                    best_total = total;
                    best_qualifies = true;
                }
            }
            if (!best_qualifies) break;
            cluster.members.push_back(best);
            unassigned.erase(best);
        }

        std::sort(cluster.members.begin(), cluster.members.end());
        cluster.isolated = cluster.members.size() == 1 && graph.degree(cluster.members[0]) == 0;
        clusters.push_back(std::move(cluster));
    }

    attach_borrowed_sources(clusters, graph, source_budget);
    return clusters;
}

void attach_borrowed_sources(std::vector<Cluster>& clusters, const OverlapGraph& graph,
                             int source_budget) {
    const auto& ids = graph.ids();
    for (auto& cluster : clusters) {
        std::set<int> members(cluster.members.begin(), cluster.members.end());
        std::set<int> borrowed;
        for (int m : cluster.members) {
            std::vector<std::pair<double, int>> ranked;
            for (int other : ids) {
                if (other == m) continue;
                const double s = graph.score(m, other);
                if (s > kOverlapFloor) ranked.emplace_back(-s, other);
            }
            std::sort(ranked.begin(), ranked.end());
            const int take = std::min<int>(source_budget, static_cast<int>(ranked.size()));
            for (int k = 0; k < take; ++k)
                if (!members.count(ranked[k].second)) borrowed.insert(ranked[k].second);
        }
        cluster.borrowed.assign(borrowed.begin(), borrowed.end());
    }
}

std::vector<int> select_source_views(int reference_id, const Cluster& cluster,
                                     const OverlapGraph& graph, int k) {
    if (std::find(cluster.members.begin(), cluster.members.end(), reference_id) ==
        cluster.members.end())
        throw InvalidArgument("reference view is not a member of the cluster");
    std::vector<std::pair<double, int>> ranked;
    auto consider = [&](int id) {
        if (id == reference_id) return;
        const double s = graph.score(reference_id, id);
        if (s > kOverlapFloor) ranked.emplace_back(-s, id);
    };
    for (int id : cluster.members) consider(id);
    for (int id : cluster.borrowed) consider(id);
    std::sort(ranked.begin(), ranked.end());
    std::vector<int> out;
    const int take = std::min<int>(k, static_cast<int>(ranked.size()));
    out.reserve(static_cast<std::size_t>(take));
    for (int i = 0; i < take; ++i) out.push_back(ranked[i].second);
    return out;
}

void write_clusters(const std::vector<Cluster>& clusters, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot create " + path.string());
    for (const auto& c : clusters) {
        out << "cluster " << c.id << ":";
        for (int id : c.members) out << ' ' << id;
        out << '\n';
    }
    if (!out) throw IoError("write failed: " + path.string());
}

std::vector<Cluster> read_clusters(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingFile(path.string());
    std::vector<Cluster> clusters;
    std::string word;
    while (in >> word) {
        if (word != "cluster") throw ParseError(path.string(), 0, "expected 'cluster'");
        std::string id_tok;
        in >> id_tok;
        if (id_tok.empty() || id_tok.back() != ':')
            throw ParseError(path.string(), 0, "expected '<id>:'");
        Cluster c;
        c.id = std::stoi(id_tok.substr(0, id_tok.size() - 1));
        std::string rest;
        std::getline(in, rest);
        std::size_t pos = 0;
        while (pos < rest.size()) {
            while (pos < rest.size() && rest[pos] == ' ') ++pos;
            std::size_t start = pos;
            while (pos < rest.size() && rest[pos] != ' ' && rest[pos] != '\r') ++pos;
            if (pos > start) c.members.push_back(std::stoi(rest.substr(start, pos - start)));
        }
        clusters.push_back(std::move(c));
    }
    return clusters;
}

}  // namespace sir
