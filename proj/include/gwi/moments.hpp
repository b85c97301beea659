#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <type_traits>
#include <vector>

#include "gwi/error.hpp"
#include "gwi/matrix.hpp"
#include "gwi/model.hpp"

namespace gwi {

using Int128 = __int128;

// C(k, m) in exact 128-bit arithmetic; zero when m > k. Throws
// OverflowError if the value does not fit.
Int128 binomial_exact(std::int64_t k, std::int64_t m);
double binomial(std::int64_t k, std::int64_t m);

namespace detail {

template <typename T>
inline constexpr bool is_exact_integer_v = std::is_integral_v<T> || std::is_same_v<T, Int128>;

template <typename T>
T checked_mul(T a, T b) {
    if constexpr (is_exact_integer_v<T>) {
        T out;
        if (__builtin_mul_overflow(a, b, &out)) throw OverflowError("integer overflow in unipotent power");
        return out;
    } else {
        return a * b;
    }
}

template <typename T>
T checked_add(T a, T b) {
    if constexpr (is_exact_integer_v<T>) {
        T out;
        if (__builtin_add_overflow(a, b, &out)) throw OverflowError("integer overflow in unipotent power");
        return out;
    } else {
        return a + b;
    }
}

template <typename T>
T binomial_as(std::int64_t k, std::int64_t m) {
    const Int128 c = binomial_exact(k, m);
    if constexpr (std::is_same_v<T, Int128>) {
        return c;
    } else if constexpr (std::is_integral_v<T>) {
        if (c > static_cast<Int128>(std::numeric_limits<T>::max())) throw OverflowError("binomial does not fit");
        return static_cast<T>(c);
    } else {
        return static_cast<T>(c);
    }
}

}  // namespace detail

// Lower-triangular matrix with unit diagonal, with its nilpotent part
// C = A - I and the powers C^0 .. C^{p-1} cached (C^p = 0).
template <typename T>
class UnipotentMatrix {
public:
    explicit UnipotentMatrix(Matrix<T> a) : a_(std::move(a)) {
        if (!a_.square() || a_.rows() == 0) throw ValidationError("unipotent matrix must be square and nonempty");
        const std::size_t p = a_.rows();
        for (std::size_t i = 0; i < p; ++i) {
            if (a_(i, i) != T{1}) throw ValidationError("matrix is not unipotent: diagonal entry differs from 1");
            for (std::size_t j = i + 1; j < p; ++j)
                if (a_(i, j) != T{0}) throw ValidationError("matrix is not lower triangular");
        }
        const Matrix<T> c = a_ - Matrix<T>::identity(p);
        powers_.push_back(Matrix<T>::identity(p));
        for (std::size_t m = 1; m < p; ++m) powers_.push_back(multiply(powers_.back(), c));
    }

    std::size_t size() const noexcept { return a_.rows(); }
    const Matrix<T>& matrix() const noexcept { return a_; }

    // C^m; zero matrix for m >= p.
    Matrix<T> nilpotent_power(std::size_t m) const {
        if (m < powers_.size()) return powers_[m];
        return Matrix<T>(size(), size());
    }

    // A^k = sum_{m=0}^{p-1} C(k, m) C^m.
    Matrix<T> power(std::int64_t k) const {
        if (k < 0) throw ValidationError("negative matrix power");
        const std::size_t p = size();
        Matrix<T> out(p, p);
        for (std::size_t m = 0; m < p && static_cast<std::int64_t>(m) <= k; ++m) {
            const T coeff = detail::binomial_as<T>(k, static_cast<std::int64_t>(m));
            for (std::size_t i = 0; i < p; ++i)
                for (std::size_t j = 0; j <= i; ++j)
                    out(i, j) = detail::checked_add(out(i, j), detail::checked_mul(coeff, powers_[m](i, j)));
        }
        return out;
    }

private:
    static Matrix<T> multiply(const Matrix<T>& x, const Matrix<T>& y) {
        Matrix<T> out(x.rows(), y.cols());
        for (std::size_t i = 0; i < x.rows(); ++i)
            for (std::size_t k = 0; k < x.cols(); ++k)
                for (std::size_t j = 0; j < y.cols(); ++j)
                    out(i, j) = detail::checked_add(out(i, j), detail::checked_mul(x(i, k), y(k, j)));
        return out;
    }

    Matrix<T> a_;
    std::vector<Matrix<T>> powers_;
};

template <typename T>
Matrix<T> unipotent_power(const Matrix<T>& a, std::int64_t k) {
    return UnipotentMatrix<T>(a).power(k);
}

// E X_k with X_0 = 0.
RealVector mean_vector(const GwiModel& model, std::int64_t k);

// E X_{k,i} = sum_{m=1}^{p} gamma_{i,m} C(k, m), gamma_{i,m} = sum_r (C^{m-1})_{i,r} b_r.
struct MeanPolynomial {
    // coefficients[i][m - 1] = gamma_{i,m}
    std::vector<RealVector> coefficients;

    double evaluate(std::size_t coordinate, std::int64_t k) const;
    // Largest m with a positive coefficient, 0 for the zero polynomial.
    int degree(std::size_t coordinate) const;
};

// Needs a lower-unipotent mean matrix.
MeanPolynomial mean_polynomial(const GwiModel& model);

// E(M_k M_k^T) = V^(0) + sum_i E(X_{k-1,i}) V^(i).
RealMatrix martingale_second_moment(const GwiModel& model, std::int64_t k);

// Var(X_k | X_{k-1} = state) = V^(0) + sum_i state_i V^(i).
RealMatrix conditional_covariance(const GwiModel& model, const std::vector<std::int64_t>& state);

// Var(X_k) = sum_{j=0}^{k-1} A^j E(M_{k-j} M_{k-j}^T) (A^T)^j.
RealMatrix variance_matrix(const GwiModel& model, std::int64_t k);

struct GrowthExponents {
    std::vector<int> eta;                     // eta_i >= 1
    std::vector<std::size_t> first_immigrant;  // r_i, 0-based
};

// eta_i = max{m : (C^{m-1})_{i,j} > 0 for some j}; r_i = min{r <= i : b_r > 0}, or the first type.
GrowthExponents growth_exponents(const RealMatrix& a, const RealVector& b);

struct LeadingTerm {
    int degree = 0;
    double coefficient = 0.0;
};

// E X_{k,i} ~ b_{r_i} (C^{i-r_i})_{i,r_i} C(k, i - r_i + 1); (0, 0) when b = 0.
LeadingTerm leading_asymptotic(const GwiModel& model, std::size_t coordinate);

struct MomentGrowthTargets {
    std::vector<int> mean;                   // eta_i
    std::vector<std::vector<int>> cross;     // min(eta_i, eta_j)
    std::vector<std::optional<int>> fourth;  // 2 when row i of A is the unit row
    std::vector<int> sum_sup;                // eta_i + 1
    std::vector<int> weighted_sum_sup;       // eta_i + 3
};

MomentGrowthTargets moment_growth_targets(const GwiModel& model);

}  // namespace gwi
