// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "sir/geometry.hpp"

namespace sir {

/// Pairs with overlap at or below this never act as stereo partners.
inline constexpr double kOverlapFloor = 0.05;

/// Symmetric view-overlap scores in [0,1]; the self-score is 1.
class OverlapGraph {
  public:
    OverlapGraph() = default;
    OverlapGraph(std::vector<int> ids, std::vector<double> scores);

    const std::vector<int>& ids() const { return ids_; }
    std::size_t size() const { return ids_.size(); }
    bool contains(int id) const;
    double score(int id_a, int id_b) const;
    /// Number of partners with score above the floor.
    int degree(int id) const;

  private:
    std::size_t index(int id) const;
    std::vector<int> ids_;           // sorted
    std::vector<double> scores_;     // size() * size(), symmetric
};

/// Fraction of proxy points visible in both views among those visible in
/// view a, averaged with the b-direction. Deterministic; 0 when the views
/// share no visible proxies. Throws EmptyProxy on an empty proxy set.
double overlap_score(const Camera& view_a, const Camera& view_b,
                     std::span<const Eigen::Vector3d> proxies);

/// Scores every unordered pair. Views are (id, posed camera).
OverlapGraph build_overlap_graph(const std::vector<std::pair<int, Camera>>& views,
                                 std::span<const Eigen::Vector3d> proxies);

/// A group of views processed in one stereo step. Every view is a member of
/// exactly one cluster; borrowed views are read-only stereo sources pulled
/// across the cluster boundary. isolated marks singletons with no partner
/// above the floor.
struct Cluster {
    int id = 0;
    std::vector<int> members;
    std::vector<int> borrowed;
    bool isolated = false;
};

/// Greedy agglomeration: seed each cluster with the highest-degree
/// unassigned view, grow by the unassigned view with the largest total
/// overlap to the members until target_size is reached or no candidate
/// clears the floor. Ties break toward the smaller view id. source_budget
/// bounds how many outside views each member may pull in as borrowed
/// sources.
std::vector<Cluster> cluster_views(const OverlapGraph& graph, int target_size,
                                   int source_budget = 8);

/// Recomputes the borrowed source lists (each member's strongest partners
/// outside its cluster, up to source_budget per member). cluster_views
/// applies this itself; callers that re-read clusters from disk use it to
/// restore the borrowed sets deterministically.
void attach_borrowed_sources(std::vector<Cluster>& clusters, const OverlapGraph& graph,
                             int source_budget);

/// Top-k stereo sources for a reference: cluster members and borrowed views
/// ranked by overlap with the reference, descending, ties toward the smaller
/// id, scores at or below the floor excluded. Empty result means the
/// reference has no usable source and should be skipped.
std::vector<int> select_source_views(int reference_id, const Cluster& cluster,
                                     const OverlapGraph& graph, int k);

/// Line-oriented text: "cluster <id>: <view ids...>".
void write_clusters(const std::vector<Cluster>& clusters, const std::filesystem::path& path);
std::vector<Cluster> read_clusters(const std::filesystem::path& path);

}  // namespace sir
