#pragma once

#include <cmath>
#include <vector>

#include "gwi/model.hpp"

namespace testutil {

using gwi::DistributionSpec;
using gwi::GwiModel;
using gwi::RealMatrix;

// Poisson offspring with mean matrix `a` (column j = type j) and Poisson immigration `b`.
inline GwiModel poisson_model(const RealMatrix& a, const std::vector<double>& b) {
    std::vector<DistributionSpec> offspring;
    for (std::size_t j = 0; j < a.cols(); ++j) {
        std::vector<double> col(a.rows());
        for (std::size_t i = 0; i < a.rows(); ++i) col[i] = a(i, j);
        offspring.push_back(DistributionSpec::poisson(col));
    }
    return GwiModel::build(std::move(offspring), DistributionSpec::poisson(b));
}

inline RealMatrix lower3(double a21, double a31, double a32) {
    return RealMatrix{{1, 0, 0}, {a21, 1, 0}, {a31, a32, 1}};
}

// Naive product used as an independent oracle.
inline RealMatrix naive_mul(const RealMatrix& x, const RealMatrix& y) {
    RealMatrix out(x.rows(), y.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < y.cols(); ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < x.cols(); ++k) s += x(i, k) * y(k, j);
            out(i, j) = s;
        }
    return out;
}

inline bool close(double x, double y, double rel, double abs_tol = 0.0) {
    return std::abs(x - y) <= std::max(abs_tol, rel * std::max(std::abs(x), std::abs(y)));
}

}  // namespace testutil
