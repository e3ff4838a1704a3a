// Copyright 2026 The sir authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

namespace sir {

/// Plane-sweep configuration. Hypotheses are uniform in inverse depth with
/// the exact endpoints min_depth and max_depth.
struct SweepParams {
    int num_hypotheses = 128;
    int window = 7;               // odd patch side
    double cost_threshold = 0.3;  // minimum best NCC for a valid pixel
    double min_depth = 0.0;       // <= 0 means derive from sparse points
    double max_depth = 0.0;
};

/// Consistency filtering and fusion tolerances.
struct FuseParams {
    int min_support = 2;
    double reproj_tol = 1.0;      // px
    double depth_rel_tol = 0.01;  // relative
};

}  // namespace sir
