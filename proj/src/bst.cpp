#include "qslab/bst.hpp"

#include <cmath>

namespace qslab {

int SearchTree::insert_key(double u) {
    if (nodes_.empty()) {
        nodes_.push_back(Node{u, 0.0, 1.0, 0, RootSide::is_root});
        toll_total_ += ExactValues::cost_c(u);  // phi = 1, Upsilon = u at the root
        return 0;
    }
    int idx = 0;
    RootSide side = RootSide::is_root;
    for (;;) {
        Node& node = nodes_[static_cast<std::size_t>(idx)];
        if (u == node.key)
            throw std::invalid_argument("insert_key: key collides with an occupied node");
        const bool go_left = u < node.key;
        if (side == RootSide::is_root)
            side = go_left ? RootSide::left_of_root : RootSide::right_of_root;
        int& child = go_left ? node.left : node.right;
        if (child >= 0) {
            idx = child;
            continue;
        }
        const double lo = go_left ? node.lo : node.key;
        const double hi = go_left ? node.key : node.hi;
        const int depth = node.depth + 1;
        child = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{u, lo, hi, depth, side});

        const double phi = hi - lo;
        const double upsilon = (u - lo) / phi;
        const double toll = phi * ExactValues::cost_c(upsilon);
        toll_total_ += toll;
        ipl_ += depth;
        if (side == RootSide::left_of_root) {
            toll_left_ += toll;
            ++left_count_;
            left_ipl_ += depth - 1;  // depth inside the left subtree
        } else {
            toll_right_ += toll;
            right_ipl_ += depth - 1;
        }
        return depth;
    }
}

double SearchTree::root_key() const {
    if (nodes_.empty()) throw std::logic_error("root_key: tree is empty");
    return nodes_.front().key;
}

void SearchTree::emit_fringe(int index, std::vector<FringeSlot>& out) const {
    const Node& node = nodes_[static_cast<std::size_t>(index)];
    const bool at_root = node.side == RootSide::is_root && node.depth == 0;
    const RootSide left_side = at_root ? RootSide::left_of_root : node.side;
    const RootSide right_side = at_root ? RootSide::right_of_root : node.side;
    if (node.left >= 0)
        emit_fringe(node.left, out);
    else
        out.push_back(FringeSlot{node.key - node.lo, node.depth + 1, node.lo, left_side});
    if (node.right >= 0)
        emit_fringe(node.right, out);
    else
        out.push_back(FringeSlot{node.hi - node.key, node.depth + 1, node.key, right_side});
}

std::vector<FringeSlot> SearchTree::fringe() const {
    std::vector<FringeSlot> out;
    if (nodes_.empty()) {
        out.push_back(FringeSlot{1.0, 0, 0.0, RootSide::is_root});
        return out;
    }
    out.reserve(nodes_.size() + 1);
    emit_fringe(0, out);
    return out;
}

DecompositionResiduals decomposition_residuals(const CouplingOutcome& o,
                                               const ExactValues& exact) {
    if (o.n < 1) throw std::invalid_argument("decomposition_residuals: n must be positive");
    const double n = static_cast<double>(o.n);
    const double i = static_cast<double>(o.i_n);
    const double w0 = (i + 1.0) / (n + 1.0);
    const double w1 = (n - i) / (n + 1.0);
    const double cn = exact.toll_cn(o.n, o.i_n + 1);
    const double cu = ExactValues::cost_c(o.u1);

    DecompositionResiduals r;
    r.r_y = o.y_trunc - (cu + o.u1 * o.y0_trunc + (1.0 - o.u1) * o.y1_trunc);
    r.r_yn = o.y_n - (w0 * o.y_n0 + w1 * o.y_n1 + n / (n + 1.0) * cn);
    const double rhs = w0 * (o.y_n0 - o.y0_trunc) + w1 * (o.y_n1 - o.y1_trunc) +
                       (w0 - o.u1) * o.y0_trunc + (w1 - (1.0 - o.u1)) * o.y1_trunc +
                       n / (n + 1.0) * cn - cu;
    r.r_residual = (o.y_n - o.y_trunc) - rhs;
    return r;
}

double perturbation_b(const CouplingOutcome& o, const ExactValues& exact) {
    if (o.n < 1) throw std::invalid_argument("perturbation_b: n must be positive");
    const double n = static_cast<double>(o.n);
    const double i = static_cast<double>(o.i_n);
    const double w0 = (i + 1.0) / (n + 1.0);
    const double w1 = (n - i) / (n + 1.0);
    const double cn = exact.toll_cn(o.n, o.i_n + 1);
    const double sigma_n = exact.sigma(o.n);
    return ((w0 - o.u1) * o.y0_trunc + (w1 - (1.0 - o.u1)) * o.y1_trunc +
            n / (n + 1.0) * cn - ExactValues::cost_c(o.u1)) /
           sigma_n;
}

double scaled_identity_residual(const CouplingOutcome& o, const ExactValues& exact) {
    if (o.n < 1) throw std::invalid_argument("scaled_identity_residual: n must be positive");
    const double n = static_cast<double>(o.n);
    const double i = static_cast<double>(o.i_n);
    const double sigma_n = exact.sigma(o.n);
    const double sigma_0 = exact.sigma(o.i_n);
    const double sigma_1 = exact.sigma(o.n - 1 - o.i_n);
    const double x_n = (o.y_n - o.y_trunc) / sigma_n;
    const double a0 = (i + 1.0) * sigma_0 / ((n + 1.0) * sigma_n);
    const double a1 = (n - i) * sigma_1 / ((n + 1.0) * sigma_n);
    const double z0 = (o.y_n0 - o.y0_trunc) / sigma_0;
    const double z1 = (o.y_n1 - o.y1_trunc) / sigma_1;
    return x_n - (a0 * z0 + a1 * z1 + perturbation_b(o, exact));
}

CoefficientError coefficient_error(const CouplingOutcome& o, const ExactValues& exact, int p) {
    if (o.n < 1) throw std::invalid_argument("coefficient_error: n must be positive");
    if (p < 1 || p > 3) throw std::invalid_argument("coefficient_error: p must lie in {1,2,3}");
    const double n = static_cast<double>(o.n);
    const double i = static_cast<double>(o.i_n);
    const double sigma_n = exact.sigma(o.n);
    const double a0 = (i + 1.0) * exact.sigma(o.i_n) / ((n + 1.0) * sigma_n);
    const double a1 = (n - i) * exact.sigma(o.n - 1 - o.i_n) / ((n + 1.0) * sigma_n);
    const double d0 = std::abs(a0 - std::sqrt(o.u1));
    const double d1 = std::abs(a1 - std::sqrt(1.0 - o.u1));
    CoefficientError e;
    e.e0 = p == 1 ? d0 : (p == 2 ? d0 * d0 : d0 * d0 * d0);
    e.e1 = p == 1 ? d1 : (p == 2 ? d1 * d1 : d1 * d1 * d1);
    return e;
}

double default_delta(const ExactValues& exact, std::int64_t n) {
    const double budget = 0.05 * exact.sigma(n) / 0.65;
    return std::min(1e-4, budget * budget);
}

}  // namespace qslab
