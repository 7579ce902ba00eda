#pragma once

#include <concepts>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "qslab/formulas.hpp"

namespace qslab {

/// Anything that yields independent uniforms on the open unit interval.
template <class S>
concept UniformSource = requires(S s) {
    { s.next_uniform() } -> std::convertible_to<double>;
};

enum class RootSide { is_root, left_of_root, right_of_root };

/// An unoccupied child slot of the search tree. The slot lengths tile [0,1];
/// a slot's length is the probability that the next key lands there.
struct FringeSlot {
    double length = 0.0;
    int depth = 0;
    double left_endpoint = 0.0;
    RootSide side = RootSide::is_root;
};

/// Incremental binary search tree over unit-interval keys. Each node carries
/// its key, its interval, and its depth; the tree maintains the running
/// comparison counts (internal path length overall and per root subtree) and
/// the running toll sums  sum_theta phi_theta * C(Upsilon_theta)  over the
/// occupied nodes.
class SearchTree {
public:
    SearchTree() = default;
    explicit SearchTree(std::int64_t reserve_hint) { nodes_.reserve(static_cast<std::size_t>(reserve_hint)); }

    /// Inserts a key and returns its depth. Throws if the key collides with
    /// an occupied node (a measure-zero event; indicates a broken stream).
    int insert_key(double u);

    /// The n+1 unoccupied slots in left-to-right (in-order) order.
    std::vector<FringeSlot> fringe() const;

    std::int64_t size() const { return static_cast<std::int64_t>(nodes_.size()); }
    std::int64_t internal_path_length() const { return ipl_; }  // comparison count K
    std::int64_t left_count() const { return left_count_; }     // keys left of the root key
    std::int64_t left_ipl() const { return left_ipl_; }         // comparisons inside the left sublist
    std::int64_t right_ipl() const { return right_ipl_; }
    double toll_total() const { return toll_total_; }
    double toll_left() const { return toll_left_; }
    double toll_right() const { return toll_right_; }
    double root_key() const;

private:
    struct Node {
        double key;
        double lo, hi;  // enclosing interval; lo <= key <= hi
        int depth;
        RootSide side;
        int left = -1;
        int right = -1;
    };

    void emit_fringe(int index, std::vector<FringeSlot>& out) const;

    std::vector<Node> nodes_;
    std::int64_t ipl_ = 0;
    std::int64_t left_count_ = 0;
    std::int64_t left_ipl_ = 0;
    std::int64_t right_ipl_ = 0;
    double toll_total_ = 0.0;
    double toll_left_ = 0.0;
    double toll_right_ = 0.0;
};

struct ExtensionResult {
    double sum = 0.0;                // accumulated phi * C(Upsilon) tolls
    double discarded_mass_sq = 0.0;  // sum of phi^2 over abandoned intervals
};

namespace detail {

template <UniformSource S>
void extend_recursive(double length, S& stream, double delta, ExtensionResult& r) {
    if (length < delta) {
        r.discarded_mass_sq += length * length;
        return;
    }
    const double u = stream.next_uniform();
    r.sum += length * ExactValues::cost_c(u);
    extend_recursive(length * u, stream, delta, r);
    extend_recursive(length * (1.0 - u), stream, delta, r);
}

}  // namespace detail

/// Realizes the toll series below one interval of the given length,
/// depth-first, cutting off every subinterval shorter than delta. The L2
/// error of the cut-off relative to the full series is bounded by
/// ||Y||_2 * sqrt(discarded_mass_sq) <= ||Y||_2 * sqrt(delta).
template <UniformSource S>
ExtensionResult extend_and_truncate(double length, S& stream, double delta) {
    if (!(delta > 0.0)) throw std::invalid_argument("extend_and_truncate: delta must be positive");
    if (!(length > 0.0 && length <= 1.0))
        throw std::invalid_argument("extend_and_truncate: length must lie in (0, 1]");
    ExtensionResult r;
    detail::extend_recursive(length, stream, delta, r);
    return r;
}

/// One truncated sample of the limit variable: the toll series over the whole
/// unit interval.
template <UniformSource S>
double sample_limit(S& stream, double delta) {
    return extend_and_truncate(1.0, stream, delta).sum;
}

/// One sample path of the joint construction: the first n stream values build
/// the tree (giving the comparison count and its normalization), fresh values
/// extend every fringe slot down to the truncation threshold (giving the
/// truncated limit and the two rescaled subtree limits).
struct CouplingOutcome {
    std::int64_t n = 0;
    std::int64_t k_n = 0;    // comparison count
    std::int64_t i_n = 0;    // keys in the left subtree of the root
    double y_n = 0.0;        // (k_n - mu(n)) / (n+1)
    double y_trunc = 0.0;    // truncated limit on the same path
    double y0_trunc = 0.0;   // truncated left subtree limit
    double y1_trunc = 0.0;   // truncated right subtree limit
    double u1 = 0.0;         // root key
    double y_n0 = 0.0;       // (K_{n,0} - mu(I_n)) / (I_n + 1)
    double y_n1 = 0.0;       // (K_{n,1} - mu(n-1-I_n)) / (n - I_n)
    double delta = 0.0;
    double discarded_mass_sq = 0.0;
};

namespace detail {

template <UniformSource S, class Tail>
CouplingOutcome sample_coupled_impl(const ExactValues& exact, S& stream, std::int64_t n,
                                    double delta, Tail&& tail) {
    CouplingOutcome out;
    out.n = n;
    out.delta = delta;

    double total = 0.0, left = 0.0, right = 0.0, discarded = 0.0;

    if (n == 0) {
        // No key is counted, but the limit construction still splits the unit
        // interval at a first uniform, which doubles as the recorded root key.
        out.u1 = stream.next_uniform();
        total = ExactValues::cost_c(out.u1);
        const ExtensionResult l = tail(out.u1);
        const ExtensionResult r = tail(1.0 - out.u1);
        left = l.sum;
        right = r.sum;
        total += left + right;
        discarded = l.discarded_mass_sq + r.discarded_mass_sq;
    } else {
        SearchTree tree(n);
        for (std::int64_t j = 0; j < n; ++j) tree.insert_key(stream.next_uniform());

        out.u1 = tree.root_key();
        out.k_n = tree.internal_path_length();
        out.i_n = tree.left_count();
        total = tree.toll_total();
        left = tree.toll_left();
        right = tree.toll_right();
        for (const FringeSlot& slot : tree.fringe()) {
            const ExtensionResult e = tail(slot.length);
            total += e.sum;
            discarded += e.discarded_mass_sq;
            if (slot.side == RootSide::left_of_root)
                left += e.sum;
            else
                right += e.sum;
        }

        out.y_n = (static_cast<double>(out.k_n) - exact.mean_kn(n)) / (static_cast<double>(n) + 1.0);
        out.y_n0 = (static_cast<double>(tree.left_ipl()) - exact.mean_kn(out.i_n)) /
                   (static_cast<double>(out.i_n) + 1.0);
        out.y_n1 = (static_cast<double>(tree.right_ipl()) - exact.mean_kn(n - 1 - out.i_n)) /
                   static_cast<double>(n - out.i_n);
    }

    out.y_trunc = total;
    out.y0_trunc = left / out.u1;
    out.y1_trunc = right / (1.0 - out.u1);
    out.discarded_mass_sq = discarded;
    return out;
}

}  // namespace detail

template <UniformSource S>
CouplingOutcome sample_coupled(const ExactValues& exact, S& stream, std::int64_t n,
                               double delta) {
    if (n < 0) throw std::invalid_argument("sample_coupled: n must be nonnegative");
    if (!(delta > 0.0)) throw std::invalid_argument("sample_coupled: delta must be positive");
    return detail::sample_coupled_impl(exact, stream, n, delta, [&](double length) {
        return extend_and_truncate(length, stream, delta);
    });
}

/// Pool-based tail completion: instead of extending each fringe slot with
/// fresh uniforms, attaches scaled draws from a pre-generated pool of
/// truncated limit samples (threshold pool_delta). Faster for large batches,
/// but reusing a finite pool across trials correlates them; the fresh
/// extension stays the default strategy. The recorded discarded_mass_sq is
/// the equivalent truncation budget sum phi^2 * pool_delta.
template <UniformSource S>
    requires requires(S s) { { s.next_below(std::uint64_t{1}) } -> std::convertible_to<std::uint64_t>; }
CouplingOutcome sample_coupled_pooled(const ExactValues& exact, S& stream, std::int64_t n,
                                      std::span<const double> pool, double pool_delta) {
    if (n < 0) throw std::invalid_argument("sample_coupled_pooled: n must be nonnegative");
    if (!(pool_delta > 0.0))
        throw std::invalid_argument("sample_coupled_pooled: delta must be positive");
    if (pool.empty()) throw std::invalid_argument("sample_coupled_pooled: empty pool");
    return detail::sample_coupled_impl(exact, stream, n, pool_delta, [&](double length) {
        const double y = pool[static_cast<std::size_t>(stream.next_below(pool.size()))];
        return ExtensionResult{length * y, length * length * pool_delta};
    });
}

/// Residuals of the three pathwise identities; all vanish up to rounding on
/// every sample path.
struct DecompositionResiduals {
    double r_y = 0.0;     // limit = u1 * left-limit + (1-u1) * right-limit + C(u1)
    double r_yn = 0.0;    // finite-n split with the C_n toll
    double r_residual = 0.0;  // five-term decomposition of the residual y_n - y
};

DecompositionResiduals decomposition_residuals(const CouplingOutcome& outcome,
                                               const ExactValues& exact);

/// The perturbation term of the sigma-scaled decomposition.
double perturbation_b(const CouplingOutcome& outcome, const ExactValues& exact);

/// Residual of the scaled identity x_n = A0 z0 + A1 z1 + b on one path.
double scaled_identity_residual(const CouplingOutcome& outcome, const ExactValues& exact);

/// Per-trial coefficient deviations |A0 - sqrt(u1)|^p and |A1 - sqrt(1-u1)|^p.
struct CoefficientError {
    double e0 = 0.0;
    double e1 = 0.0;
};

CoefficientError coefficient_error(const CouplingOutcome& outcome, const ExactValues& exact,
                                   int p);

/// Truncation threshold for coupled runs: min(1e-4, (0.05 sigma(n) / 0.65)^2),
/// so the truncation L2 error stays below 5% of sigma(n).
double default_delta(const ExactValues& exact, std::int64_t n);

/// Draws m values U y' + (1-U) y'' + C(U) with y', y'' resampled uniformly
/// with replacement from the population. Iterating this map from any
/// population contracts to the fixed-point law of the limit variable.
template <UniformSource S>
    requires requires(S s) { { s.next_below(std::uint64_t{1}) } -> std::convertible_to<std::uint64_t>; }
std::vector<double> resample_fixed_point(std::span<const double> population, S& stream,
                                         std::int64_t m) {
    if (m < 0) throw std::invalid_argument("resample_fixed_point: m must be nonnegative");
    if (population.empty() && m > 0)
        throw std::invalid_argument("resample_fixed_point: empty population");
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(m));
    for (std::int64_t i = 0; i < m; ++i) {
        const double a = population[static_cast<std::size_t>(stream.next_below(population.size()))];
        const double b = population[static_cast<std::size_t>(stream.next_below(population.size()))];
        const double u = stream.next_uniform();
        out.push_back(u * a + (1.0 - u) * b + ExactValues::cost_c(u));
    }
    return out;
}

}  // namespace qslab
