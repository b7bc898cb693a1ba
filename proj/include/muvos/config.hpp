#pragma once

#include <cstddef>
#include <filesystem>
#include <string>

#include "muvos/losses.hpp"
#include "muvos/metrics.hpp"
#include "muvos/mu_layer.hpp"

namespace muvos {

enum class PipelineMode { learned, analytic };

/// Run-time settings. Stored as flat `key = value` text; unknown keys are rejected.
struct RunConfig {
    std::size_t window_u = 25;
    std::size_t window_v = 25;
    std::size_t feature_dim = 64;
    std::size_t dk = 0;  // 0 selects feature_dim / 8
    std::size_t dv = 0;  // 0 selects feature_dim / 2
    std::size_t memory_every = 5;
    PipelineMode mode = PipelineMode::learned;
    int softargmin_sign = +1;
    double softargmin_beta = kDefaultSoftArgminBeta;
    double bootstrap_ratio = kDefaultBootstrapRatio;
    double lambda = kDefaultLossLambda;
    unsigned long long seed = 0;
    double boundary_tolerance_fraction = kDefaultBoundaryToleranceFraction;
    double analytic_locality = 1.5;  // analytic memory read bandwidth, grid cells

    Window window() const { return {window_u, window_v}; }
    std::size_t key_dim() const { return dk ? dk : feature_dim / 8; }
    std::size_t value_dim() const { return dv ? dv : feature_dim / 2; }

    /// Throws ValidationError on any violated invariant.
    void validate() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

std::string to_string(PipelineMode mode);

std::string serialize_config(const RunConfig& c);
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace muvos
