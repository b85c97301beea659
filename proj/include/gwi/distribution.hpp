#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "gwi/matrix.hpp"

namespace gwi {

// Parametric laws on nonnegative-integer vectors. The parametric kinds have
// independent coordinates; correlated vectors need a JointTable.
struct Deterministic {
    std::vector<std::int64_t> value;
};
struct Poisson {
    std::vector<double> mean;
};
struct Bernoulli {
    std::vector<double> prob;
};
// Number of failures before the first success, success probability prob[j].
struct Geometric {
    std::vector<double> prob;
};
struct JointTable {
    std::vector<std::vector<std::int64_t>> support;
    std::vector<double> prob;
};

enum class DistributionKind { deterministic, poisson, bernoulli, geometric, joint_table };

std::string_view to_string(DistributionKind kind) noexcept;

class DistributionSpec {
public:
    using Law = std::variant<Deterministic, Poisson, Bernoulli, Geometric, JointTable>;

    // Validates parameters; throws ValidationError.
    explicit DistributionSpec(Law law);

    static DistributionSpec deterministic(std::vector<std::int64_t> value);
    static DistributionSpec poisson(std::vector<double> mean);
    static DistributionSpec bernoulli(std::vector<double> prob);
    static DistributionSpec geometric(std::vector<double> prob);
    static DistributionSpec joint_table(std::vector<std::vector<std::int64_t>> support,
                                        std::vector<double> prob);

    DistributionKind kind() const noexcept { return static_cast<DistributionKind>(law_.index()); }
    const Law& law() const noexcept { return law_; }
    std::size_t dim() const noexcept { return dim_; }

    const RealVector& mean() const noexcept { return mean_; }
    const RealMatrix& covariance() const noexcept { return covariance_; }

    // True when coordinate j is almost surely zero.
    bool coordinate_always_zero(std::size_t j) const;

    // Relabels coordinates: new coordinate i is old coordinate perm[i].
    DistributionSpec permuted(std::span<const std::size_t> perm) const;

private:
    void compute_moments();

    Law law_;
    std::size_t dim_ = 0;
    RealVector mean_;
    RealMatrix covariance_;
};

}  // namespace gwi
