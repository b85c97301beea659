#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "gwi/distribution.hpp"
#include "gwi/matrix.hpp"

namespace gwi {

// A p-type Galton-Watson process with immigration, described by the laws of
// one individual's offspring per type and of the per-generation immigration.
// Immutable after construction.
class GwiModel {
public:
    // Throws ValidationError on dimension mismatch.
    static GwiModel build(std::vector<DistributionSpec> offspring, DistributionSpec immigration);

    std::size_t types() const noexcept { return offspring_.size(); }
    const std::vector<DistributionSpec>& offspring() const noexcept { return offspring_; }
    const DistributionSpec& offspring(std::size_t type) const { return offspring_.at(type); }
    const DistributionSpec& immigration() const noexcept { return immigration_; }

    // Column j is the mean offspring vector of a type-j individual.
    const RealMatrix& mean_matrix() const noexcept { return mean_matrix_; }
    const RealVector& immigration_mean() const noexcept { return immigration_.mean(); }
    const RealMatrix& immigration_variance() const noexcept { return immigration_.covariance(); }
    const RealMatrix& offspring_variance(std::size_t type) const { return offspring_.at(type).covariance(); }

    // Relabels types: new type i is old type perm[i].
    GwiModel permuted(std::span<const std::size_t> perm) const;

private:
    GwiModel(std::vector<DistributionSpec> offspring, DistributionSpec immigration);

    std::vector<DistributionSpec> offspring_;
    DistributionSpec immigration_;
    RealMatrix mean_matrix_;
};

enum class Criticality { subcritical, critical, supercritical };

std::string_view to_string(Criticality c) noexcept;

// Spectral radius of a square nonnegative matrix: exact diagonal read-off for
// triangular input, otherwise Perron root of each irreducible block by
// power iteration with Collatz-Wielandt bracketing.
double spectral_radius(const RealMatrix& a);

Criticality classify_criticality(const RealMatrix& a);

struct NormalForm {
    // Row i of the permuted matrix is row perm[i] of the input.
    std::vector<std::size_t> perm;
    std::vector<std::size_t> block_sizes;
    RealMatrix permuted;
};

// Block lower triangular form with irreducible diagonal blocks.
NormalForm reducible_normal_form(const RealMatrix& a);

bool is_strongly_critical(const RealMatrix& a);

// Type j is reachable from type i (0-based; i == i is always reachable).
bool accessible(const RealMatrix& a, std::size_t from, std::size_t to);

struct CaseId {
    int value = 0;
    // New coordinate i is old coordinate permutation[i].
    std::array<std::size_t, 3> permutation{0, 1, 2};

    bool identity_permutation() const noexcept {
        return permutation == std::array<std::size_t, 3>{0, 1, 2};
    }
};

// Sign pattern of a lower-unipotent 3x3 matrix; 0 when the pattern is not one
// of the four normalized cases (i.e. it is pattern (a) or (b)).
int case_of_pattern(const RealMatrix& a);

// Classifies a 3x3 matrix that is lower-unipotent up to a relabelling of
// types, normalizing patterns (a) and (b) to case 2.
CaseId detect_case(const RealMatrix& a);

RealMatrix permute_matrix(const RealMatrix& a, std::span<const std::size_t> perm);

bool is_lower_unipotent(const RealMatrix& a, double tolerance = 0.0);

}  // namespace gwi
