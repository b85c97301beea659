#include "gwi/distribution.hpp"

#include <cmath>
#include <string>

#include "gwi/error.hpp"

namespace gwi {

namespace {

constexpr double kSimplexTolerance = 1e-12;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void require(bool ok, const std::string& what) {
    if (!ok) throw ValidationError(what);
}

void check_nonempty(std::size_t n, std::string_view kind) {
    require(n > 0, std::string(kind) + ": parameter vector must be nonempty");
}

template <typename T>
std::vector<T> permute(const std::vector<T>& v, std::span<const std::size_t> perm) {
    std::vector<T> out(v.size());
    for (std::size_t i = 0; i < perm.size(); ++i) out[i] = v[perm[i]];
    return out;
}

}  // namespace

std::string_view to_string(DistributionKind kind) noexcept {
    switch (kind) {
        case DistributionKind::deterministic: return "Deterministic";
        case DistributionKind::poisson: return "Poisson";
        case DistributionKind::bernoulli: return "Bernoulli";
        case DistributionKind::geometric: return "Geometric";
        case DistributionKind::joint_table: return "JointTable";
    }
    return "?";
}

DistributionSpec::DistributionSpec(Law law) : law_(std::move(law)) {
    std::visit(
        overloaded{
            [&](const Deterministic& d) {
                check_nonempty(d.value.size(), "Deterministic");
                for (auto c : d.value) require(c >= 0, "Deterministic: values must be nonnegative");
                dim_ = d.value.size();
            },
            [&](const Poisson& d) {
                check_nonempty(d.mean.size(), "Poisson");
                for (double m : d.mean)
                    require(std::isfinite(m) && m >= 0.0, "Poisson: means must be finite and nonnegative");
                dim_ = d.mean.size();
            },
            [&](const Bernoulli& d) {
                check_nonempty(d.prob.size(), "Bernoulli");
                for (double q : d.prob)
                    require(q >= 0.0 && q <= 1.0, "Bernoulli: probabilities must lie in [0,1]");
                dim_ = d.prob.size();
            },
            [&](const Geometric& d) {
                check_nonempty(d.prob.size(), "Geometric");
                for (double q : d.prob)
                    require(q > 0.0 && q <= 1.0, "Geometric: success probabilities must lie in (0,1]");
                dim_ = d.prob.size();
            },
            [&](const JointTable& d) {
                require(!d.support.empty(), "JointTable: support must be nonempty");
                require(d.support.size() == d.prob.size(), "JointTable: support and prob sizes differ");
                dim_ = d.support.front().size();
                check_nonempty(dim_, "JointTable");
                double total = 0.0;
                for (std::size_t s = 0; s < d.support.size(); ++s) {
                    require(d.support[s].size() == dim_, "JointTable: support vectors differ in dimension");
                    for (auto c : d.support[s]) require(c >= 0, "JointTable: support must be nonnegative");
                    require(d.prob[s] >= 0.0 && d.prob[s] <= 1.0, "JointTable: weights must lie in [0,1]");
                    total += d.prob[s];
                }
                require(std::abs(total - 1.0) <= kSimplexTolerance, "JointTable: weights must sum to 1");
            },
        },
        law_);
    compute_moments();
}

DistributionSpec DistributionSpec::deterministic(std::vector<std::int64_t> value) {
    return DistributionSpec(Deterministic{std::move(value)});
}
DistributionSpec DistributionSpec::poisson(std::vector<double> mean) {
    return DistributionSpec(Poisson{std::move(mean)});
}
DistributionSpec DistributionSpec::bernoulli(std::vector<double> prob) {
    return DistributionSpec(Bernoulli{std::move(prob)});
}
DistributionSpec DistributionSpec::geometric(std::vector<double> prob) {
    return DistributionSpec(Geometric{std::move(prob)});
}
DistributionSpec DistributionSpec::joint_table(std::vector<std::vector<std::int64_t>> support,
                                               std::vector<double> prob) {
    return DistributionSpec(JointTable{std::move(support), std::move(prob)});
}

void DistributionSpec::compute_moments() {
    mean_.assign(dim_, 0.0);
    covariance_ = RealMatrix(dim_, dim_);
    std::visit(overloaded{
                   [&](const Deterministic& d) {
                       for (std::size_t j = 0; j < dim_; ++j) mean_[j] = static_cast<double>(d.value[j]);
                   },
                   [&](const Poisson& d) {
                       for (std::size_t j = 0; j < dim_; ++j) {
                           mean_[j] = d.mean[j];
                           covariance_(j, j) = d.mean[j];
                       }
                   },
                   [&](const Bernoulli& d) {
                       for (std::size_t j = 0; j < dim_; ++j) {
                           mean_[j] = d.prob[j];
                           covariance_(j, j) = d.prob[j] * (1.0 - d.prob[j]);
                       }
                   },
                   [&](const Geometric& d) {
                       for (std::size_t j = 0; j < dim_; ++j) {
                           const double q = d.prob[j];
                           mean_[j] = (1.0 - q) / q;
                           covariance_(j, j) = (1.0 - q) / (q * q);
                       }
                   },
                   [&](const JointTable& d) {
                       for (std::size_t s = 0; s < d.support.size(); ++s)
                           for (std::size_t j = 0; j < dim_; ++j)
                               mean_[j] += d.prob[s] * static_cast<double>(d.support[s][j]);
                       for (std::size_t s = 0; s < d.support.size(); ++s)
                           for (std::size_t i = 0; i < dim_; ++i)
                               for (std::size_t j = 0; j < dim_; ++j)
                                   covariance_(i, j) += d.prob[s] *
                                                        (static_cast<double>(d.support[s][i]) - mean_[i]) *
                                                        (static_cast<double>(d.support[s][j]) - mean_[j]);
                   },
               },
               law_);
}

bool DistributionSpec::coordinate_always_zero(std::size_t j) const {
    if (j >= dim_) throw ValidationError("coordinate index out of range");
    return std::visit(overloaded{
                          [&](const Deterministic& d) { return d.value[j] == 0; },
                          [&](const Poisson& d) { return d.mean[j] == 0.0; },
                          [&](const Bernoulli& d) { return d.prob[j] == 0.0; },
                          [&](const Geometric& d) { return d.prob[j] == 1.0; },
                          [&](const JointTable& d) {
                              for (std::size_t s = 0; s < d.support.size(); ++s)
                                  if (d.prob[s] > 0.0 && d.support[s][j] != 0) return false;
                              return true;
                          },
                      },
                      law_);
}

DistributionSpec DistributionSpec::permuted(std::span<const std::size_t> perm) const {
    if (perm.size() != dim_) throw DimensionError("permutation size does not match dimension");
    return std::visit(overloaded{
                          [&](const Deterministic& d) { return deterministic(permute(d.value, perm)); },
                          [&](const Poisson& d) { return poisson(permute(d.mean, perm)); },
                          [&](const Bernoulli& d) { return bernoulli(permute(d.prob, perm)); },
                          [&](const Geometric& d) { return geometric(permute(d.prob, perm)); },
                          [&](const JointTable& d) {
                              std::vector<std::vector<std::int64_t>> support;
                              support.reserve(d.support.size());
                              for (const auto& s : d.support) support.push_back(permute(s, perm));
                              return joint_table(std::move(support), d.prob);
                          },
                      },
                      law_);
}

}  // namespace gwi
