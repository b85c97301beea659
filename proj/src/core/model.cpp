#include "gwi/model.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <queue>
#include <string>

#include "gwi/error.hpp"

namespace gwi {

namespace {

constexpr double kZeroTolerance = 1e-12;
constexpr double kPowerIterationTolerance = 1e-10;
constexpr int kPowerIterationCap = 100000;
constexpr double kCriticalTolerance = 1e-9;

void check_square_nonnegative(const RealMatrix& a) {
    if (!a.square() || a.rows() == 0) throw ValidationError("matrix must be square and nonempty");
    for (double x : a.data())
        if (!std::isfinite(x) || x < 0.0) throw ValidationError("matrix entries must be finite and nonnegative");
}

bool is_lower_triangular(const RealMatrix& a, double tol) {
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            if (std::abs(a(i, j)) > tol) return false;
    return true;
}

bool is_triangular(const RealMatrix& a) {
    return is_lower_triangular(a, 0.0) || is_lower_triangular(a.transpose(), 0.0);
}

// Perron root of an irreducible nonnegative block. B + I is primitive, so
// power iteration on it converges; the Collatz-Wielandt quotients bracket
// the root from both sides.
double perron_root(const RealMatrix& block) {
    const std::size_t n = block.rows();
    if (n == 1) return block(0, 0);
    RealMatrix shifted = block + RealMatrix::identity(n);
    RealVector x(n, 1.0);
    double lo = 0.0, hi = 0.0;
    for (int it = 0; it < kPowerIterationCap; ++it) {
        RealVector y = shifted * x;
        lo = std::numeric_limits<double>::infinity();
        hi = 0.0;
        double scale = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double q = y[i] / x[i];
            lo = std::min(lo, q);
            hi = std::max(hi, q);
            scale = std::max(scale, y[i]);
        }
        if (hi - lo < kPowerIterationTolerance) break;
        for (std::size_t i = 0; i < n; ++i) x[i] = y[i] / scale;
    }
    return 0.5 * (lo + hi) - 1.0;
}

struct Digraph {
    // Edge j -> i whenever a(i, j) > 0 and i != j.
    explicit Digraph(const RealMatrix& a) : succ(a.rows()) {
        for (std::size_t i = 0; i < a.rows(); ++i)
            for (std::size_t j = 0; j < a.cols(); ++j)
                if (i != j && a(i, j) > 0.0) succ[j].push_back(i);
    }
    std::vector<std::vector<std::size_t>> succ;
};

// Tarjan's algorithm; returns component id per vertex.
std::vector<std::size_t> strongly_connected_components(const Digraph& g, std::size_t& count) {
    const std::size_t n = g.succ.size();
    constexpr std::size_t unvisited = static_cast<std::size_t>(-1);
    std::vector<std::size_t> index(n, unvisited), low(n, 0), comp(n, unvisited);
    std::vector<bool> on_stack(n, false);
    std::vector<std::size_t> stack;
    std::size_t next = 0;
    count = 0;
    std::function<void(std::size_t)> visit = [&](std::size_t v) {
        index[v] = low[v] = next++;
        stack.push_back(v);
        on_stack[v] = true;
        for (std::size_t w : g.succ[v]) {
            if (index[w] == unvisited) {
                visit(w);
                low[v] = std::min(low[v], low[w]);
            } else if (on_stack[w]) {
                low[v] = std::min(low[v], index[w]);
            }
        }
        if (low[v] == index[v]) {
            std::size_t w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = false;
                comp[w] = count;
            } while (w != v);
            ++count;
        }
    };
    for (std::size_t v = 0; v < n; ++v)
        if (index[v] == unvisited) visit(v);
    return comp;
}

}  // namespace

GwiModel::GwiModel(std::vector<DistributionSpec> offspring, DistributionSpec immigration)
    : offspring_(std::move(offspring)), immigration_(std::move(immigration)) {}

GwiModel GwiModel::build(std::vector<DistributionSpec> offspring, DistributionSpec immigration) {
    const std::size_t p = offspring.size();
    if (p == 0) throw ValidationError("model needs at least one type");
    for (std::size_t j = 0; j < p; ++j)
        if (offspring[j].dim() != p)
            throw DimensionError("offspring law of type " + std::to_string(j + 1) + " has dimension " +
                                  std::to_string(offspring[j].dim()) + ", expected " + std::to_string(p));
    if (immigration.dim() != p)
        throw DimensionError("immigration law has dimension " + std::to_string(immigration.dim()) +
                              ", expected " + std::to_string(p));

    GwiModel model(std::move(offspring), std::move(immigration));
    model.mean_matrix_ = RealMatrix(p, p);
    for (std::size_t j = 0; j < p; ++j) {
        const auto& law = model.offspring_[j];
        for (std::size_t i = 0; i < p; ++i) {
            model.mean_matrix_(i, j) = law.mean()[i];
            // a_ij = 0 must mean the coordinate is a.s. zero, so row/column i
            // of the offspring covariance vanishes.
            if (law.mean()[i] == 0.0 && !law.coordinate_always_zero(i))
                throw ValidationError("offspring law of type " + std::to_string(j + 1) +
                                      " has zero mean but positive mass in coordinate " + std::to_string(i + 1));
        }
    }
    return model;
}

GwiModel GwiModel::permuted(std::span<const std::size_t> perm) const {
    const std::size_t p = types();
    if (perm.size() != p) throw ValidationError("permutation size does not match number of types");
    std::vector<bool> seen(p, false);
    for (auto v : perm) {
        if (v >= p || seen[v]) throw ValidationError("not a permutation");
        seen[v] = true;
    }
    std::vector<DistributionSpec> offspring;
    offspring.reserve(p);
    for (std::size_t i = 0; i < p; ++i) offspring.push_back(offspring_[perm[i]].permuted(perm));
    return build(std::move(offspring), immigration_.permuted(perm));
}

std::string_view to_string(Criticality c) noexcept {
    switch (c) {
        case Criticality::subcritical: return "subcritical";
        case Criticality::critical: return "critical";
        case Criticality::supercritical: return "supercritical";
    }
    return "?";
}

double spectral_radius(const RealMatrix& a) {
    check_square_nonnegative(a);
    if (is_triangular(a)) {
        double r = 0.0;
        for (std::size_t i = 0; i < a.rows(); ++i) r = std::max(r, a(i, i));
        return r;
    }
    const NormalForm nf = reducible_normal_form(a);
    double r = 0.0;
    std::size_t offset = 0;
    for (std::size_t size : nf.block_sizes) {
        RealMatrix block(size, size);
        for (std::size_t i = 0; i < size; ++i)
            for (std::size_t j = 0; j < size; ++j) block(i, j) = nf.permuted(offset + i, offset + j);
        r = std::max(r, perron_root(block));
        offset += size;
    }
    return r;
}

Criticality classify_criticality(const RealMatrix& a) {
    const double r = spectral_radius(a);
    const double tol = is_triangular(a) ? 0.0 : kCriticalTolerance;
    if (std::abs(r - 1.0) <= tol) return Criticality::critical;
    return r < 1.0 ? Criticality::subcritical : Criticality::supercritical;
}

NormalForm reducible_normal_form(const RealMatrix& a) {
    check_square_nonnegative(a);
    const std::size_t n = a.rows();
    const Digraph g(a);
    std::size_t ncomp = 0;
    const auto comp = strongly_connected_components(g, ncomp);

    std::vector<std::vector<std::size_t>> members(ncomp);
    for (std::size_t v = 0; v < n; ++v) members[comp[v]].push_back(v);

    // Condensation edges, then Kahn's algorithm preferring the component
    // with the smallest original index so already-ordered input stays put.
    std::vector<std::vector<std::size_t>> csucc(ncomp);
    std::vector<std::size_t> indegree(ncomp, 0);
    for (std::size_t v = 0; v < n; ++v)
        for (std::size_t w : g.succ[v])
            if (comp[v] != comp[w]) {
                csucc[comp[v]].push_back(comp[w]);
                ++indegree[comp[w]];
            }
    using Entry = std::pair<std::size_t, std::size_t>;  // (min member, component)
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> ready;
    for (std::size_t c = 0; c < ncomp; ++c)
        if (indegree[c] == 0) ready.emplace(members[c].front(), c);

    NormalForm nf;
    while (!ready.empty()) {
        const auto [key, c] = ready.top();
        ready.pop();
        nf.perm.insert(nf.perm.end(), members[c].begin(), members[c].end());
        nf.block_sizes.push_back(members[c].size());
        for (std::size_t d : csucc[c])
            if (--indegree[d] == 0) ready.emplace(members[d].front(), d);
    }
    nf.permuted = permute_matrix(a, nf.perm);
    return nf;
}

bool is_strongly_critical(const RealMatrix& a) {
    const NormalForm nf = reducible_normal_form(a);
    std::size_t offset = 0;
    for (std::size_t size : nf.block_sizes) {
        RealMatrix block(size, size);
        for (std::size_t i = 0; i < size; ++i)
            for (std::size_t j = 0; j < size; ++j) block(i, j) = nf.permuted(offset + i, offset + j);
        const double tol = size == 1 ? 0.0 : kCriticalTolerance;
        if (std::abs(perron_root(block) - 1.0) > tol) return false;
        offset += size;
    }
    return true;
}

bool accessible(const RealMatrix& a, std::size_t from, std::size_t to) {
    check_square_nonnegative(a);
    if (from >= a.rows() || to >= a.rows()) throw ValidationError("type index out of range");
    if (from == to) return true;
    const Digraph g(a);
    std::vector<bool> seen(a.rows(), false);
    std::vector<std::size_t> frontier{from};
    seen[from] = true;
    while (!frontier.empty()) {
        const std::size_t v = frontier.back();
        frontier.pop_back();
        for (std::size_t w : g.succ[v]) {
            if (w == to) return true;
            if (!seen[w]) {
                seen[w] = true;
                frontier.push_back(w);
            }
        }
    }
    return false;
}

RealMatrix permute_matrix(const RealMatrix& a, std::span<const std::size_t> perm) {
    if (!a.square() || perm.size() != a.rows()) throw ValidationError("permutation size mismatch");
    RealMatrix out(a.rows(), a.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(perm[i], perm[j]);
    return out;
}

bool is_lower_unipotent(const RealMatrix& a, double tolerance) {
    if (!a.square()) return false;
    for (std::size_t i = 0; i < a.rows(); ++i)
        if (std::abs(a(i, i) - 1.0) > tolerance) return false;
    return is_lower_triangular(a, tolerance);
}

int case_of_pattern(const RealMatrix& a) {
    if (a.rows() != 3 || !is_lower_unipotent(a, kZeroTolerance))
        throw ValidationError("case table applies to 3x3 lower-unipotent matrices");
    const bool a21 = a(1, 0) > kZeroTolerance;
    const bool a31 = a(2, 0) > kZeroTolerance;
    const bool a32 = a(2, 1) > kZeroTolerance;
    if (!a21 && !a31 && !a32) return 1;
    if (!a21 && a31) return 2;
    if (a21 && a31 && !a32) return 3;
    if (a21 && a32) return 4;
    return 0;
}

CaseId detect_case(const RealMatrix& a) {
    if (a.rows() != 3 || a.cols() != 3) throw ValidationError("case detection needs a 3x3 matrix");
    check_square_nonnegative(a);
    std::array<std::size_t, 3> perm{0, 1, 2};
    do {
        const RealMatrix candidate = permute_matrix(a, perm);
        if (!is_lower_unipotent(candidate, kZeroTolerance)) continue;
        const int value = case_of_pattern(candidate);
        if (value != 0) return CaseId{value, perm};
        // Pattern (a): only a32 > 0, swap types 1 and 2.
        // Pattern (b): only a21 > 0, swap types 2 and 3.
        const bool pattern_a = candidate(2, 1) > kZeroTolerance;
        const std::array<std::size_t, 3> swap =
            pattern_a ? std::array<std::size_t, 3>{1, 0, 2} : std::array<std::size_t, 3>{0, 2, 1};
        CaseId id{2, {perm[swap[0]], perm[swap[1]], perm[swap[2]]}};
        if (case_of_pattern(permute_matrix(a, id.permutation)) != 2)
            throw ConsistencyError("case normalization did not reach case 2");
        return id;
    } while (std::next_permutation(perm.begin(), perm.end()));
    throw ValidationError("matrix is not lower-unipotent up to a relabelling of types");
}

}  // namespace gwi
