// montecarlo.hpp
// Shot-based sampling of detector outcomes. Counts are bit-reproducible:
// draws come from std::mt19937_64 (whose output sequence the standard pins
// down) seeded through SplitMix64, and uniform doubles are built directly
// from the top 53 bits, so no library distribution is involved.
#pragma once

#include <cstdint>
#include <random>

#include "qclone/circuits.hpp"

namespace qclone {

struct ShotPlan {
    std::uint64_t n_shots = 1;
    std::uint64_t seed = 0;
};

struct BranchCount {
    std::string label;
    std::uint64_t count = 0;
    double rate = 0.0;
    double ci_low = 0.0, ci_high = 0.0;
};

struct CountTable {
    std::uint64_t n = 0;
    std::vector<BranchCount> rows;
};

namespace rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Independent stream seed for parallel sweeps: worker i draws from
/// splitmix64(seed xor mixed index).
inline std::uint64_t derive_stream_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed ^ splitmix64(index + 1));
}

inline double uniform_unit(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace rng

/// z = 3 normal-approximation interval around the empirical rate, clamped to
/// [0, 1].
inline std::pair<double, double> estimate_interval(std::uint64_t count, std::uint64_t n) {
    if (n == 0 || count > n) throw std::invalid_argument("estimate_interval: bad counts");
    double p = static_cast<double>(count) / static_cast<double>(n);
    double sigma = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    return {std::max(0.0, p - 3.0 * sigma), std::min(1.0, p + 3.0 * sigma)};
}

/// Multinomial draw over the branch labels, deterministic for a given seed.
inline CountTable sample(const std::vector<OutcomeBranch>& branches, const ShotPlan& plan) {
    if (plan.n_shots < 1) throw std::invalid_argument("sample: need n_shots >= 1");
    double total = 0.0;
    for (const auto& br : branches) total += br.probability;
    if (std::abs(total - 1.0) > kExactTol)
        throw std::invalid_argument("sample: branch probabilities must sum to 1");

    std::vector<double> cumulative;
    cumulative.reserve(branches.size());
    double acc = 0.0;
    for (const auto& br : branches) {
        acc += br.probability;
        cumulative.push_back(acc);
    }

    std::mt19937_64 gen(rng::splitmix64(plan.seed));
    std::vector<std::uint64_t> counts(branches.size(), 0);
    for (std::uint64_t shot = 0; shot < plan.n_shots; ++shot) {
        double u = rng::uniform_unit(gen);
        std::size_t idx =
            std::upper_bound(cumulative.begin(), cumulative.end(), u) - cumulative.begin();
        if (idx >= counts.size()) idx = counts.size() - 1;  // u landed past rounding
        ++counts[idx];
    }

    CountTable table;
    table.n = plan.n_shots;
    for (std::size_t i = 0; i < branches.size(); ++i) {
        auto [lo, hi] = estimate_interval(counts[i], plan.n_shots);
        table.rows.push_back({branches[i].detector_label, counts[i],
                              static_cast<double>(counts[i]) /
                                  static_cast<double>(plan.n_shots),
                              lo, hi});
    }
    return table;
}

}  // namespace qclone
