#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace distilkit {

inline constexpr double kGradcheckTolerance = 1e-6;
inline constexpr double kGradcheckStep = 1e-5;
inline constexpr std::size_t kGradcheckNets = 10;
inline constexpr std::uint64_t kGradcheckSeed = 2024;

struct LossCheck {
    std::string loss;
    double worst_error = 0.0;
    std::size_t worst_net = 0;
    std::vector<double> per_net;

    bool passed(double tolerance = kGradcheckTolerance) const { return worst_error <= tolerance; }
};

struct GradcheckOptions {
    std::size_t nets = kGradcheckNets;
    double step = kGradcheckStep;
    std::uint64_t seed = kGradcheckSeed;
    double lambda = 0.5;
    /// Negative control: scales every analytic gradient by this factor.
    double gradient_scale = 1.0;
};

struct GradcheckReport {
    std::vector<LossCheck> losses;  // kl, soft_ts, hard_ce, interpolated, conditional

    bool passed(double tolerance = kGradcheckTolerance) const;
};

/// Checks every loss on random nets of 2 or 3 layers with at most 32 hidden
/// units. Net i draws its shape, parameters, batch and targets from the
/// stream ("gradcheck-net", i) of `seed`.
GradcheckReport run_gradcheck(const GradcheckOptions& options = {});

std::string format_gradcheck(const GradcheckReport& report, double tolerance = kGradcheckTolerance);

}  // namespace distilkit
