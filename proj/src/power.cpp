#include "cfmimo/power.hpp"

#include <cmath>
#include <stdexcept>

namespace cfmimo {

namespace {

void check_shape(const Eigen::MatrixXcd& w, const PowerBudget& budget)
{
    if (budget.p_t_node_w <= 0.0 || budget.n_node < 1 || budget.n_f < 1) {
        throw std::invalid_argument("invalid power budget");
    }
    if (w.rows() != static_cast<Eigen::Index>(budget.n_node) * budget.n_f) {
        throw std::invalid_argument("matrix rows do not match n_node * n_f");
    }
}

double max_row_power(const Eigen::MatrixXcd& w)
{
    double max_p = 0.0;
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        max_p = std::max(max_p, w.row(r).squaredNorm());
    }
    return max_p;
}

} // namespace

double row_power(const Eigen::MatrixXcd& w, Eigen::Index row)
{
    return w.row(row).squaredNorm();
}

NormalizedMatrix normalize_spc(const Eigen::MatrixXcd& w, const PowerBudget& budget)
{
    check_shape(w, budget);
    const double total = w.squaredNorm();
    if (total <= 0.0) {
        throw std::invalid_argument("cannot normalize a zero beamforming matrix");
    }
    NormalizedMatrix out;
    out.scheme = Normalization::Spc;
    out.entries = std::sqrt(budget.p_t_total_w() / total) * w;
    return out;
}

NormalizedMatrix normalize_mpc(const Eigen::MatrixXcd& w, const PowerBudget& budget)
{
    check_shape(w, budget);
    const double max_p = max_row_power(w);
    if (max_p <= 0.0) {
        throw std::invalid_argument("cannot normalize a zero beamforming matrix");
    }
    NormalizedMatrix out;
    out.scheme = Normalization::Mpc;
    out.entries = std::sqrt(budget.per_element_cap_w() / max_p) * w;
    return out;
}

NormalizedMatrix normalize_pac(const Eigen::MatrixXcd& w, const PowerBudget& budget)
{
    check_shape(w, budget);
    NormalizedMatrix out;
    out.scheme = Normalization::Pac;
    out.entries = w;
    const double cap = budget.per_element_cap_w();
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
        const double p = w.row(r).squaredNorm();
        if (p <= 0.0) {
            out.zero_rows.push_back(static_cast<int>(r));
            continue;
        }
        out.entries.row(r) *= std::sqrt(cap / p);
    }
    return out;
}

NormalizedMatrix normalize_swarm(const Eigen::MatrixXcd& w, const PowerBudget& budget,
                                 Normalization scheme)
{
    if (scheme != Normalization::Sspc && scheme != Normalization::Smpc) {
        throw std::invalid_argument("normalize_swarm expects sSPC or sMPC");
    }
    check_shape(w, budget);
    NormalizedMatrix out;
    out.scheme = scheme;
    out.entries = w;
    for (int s = 0; s < budget.n_node; ++s) {
        auto block = out.entries.middleRows(static_cast<Eigen::Index>(s) * budget.n_f,
                                            budget.n_f);
        double ref = 0.0;
        double target = 0.0;
        if (scheme == Normalization::Sspc) {
            ref = block.squaredNorm();
            target = budget.p_t_node_w;
        } else {
            ref = max_row_power(block);
            target = budget.per_element_cap_w();
        }
        if (ref <= 0.0) {
            out.zero_node_blocks.push_back(s);
            continue;
        }
        block *= std::sqrt(target / ref);
    }
    if (static_cast<int>(out.zero_node_blocks.size()) == budget.n_node) {
        throw std::invalid_argument("cannot normalize a zero beamforming matrix");
    }
    return out;
}

NormalizedMatrix normalize(const Eigen::MatrixXcd& w, const PowerBudget& budget,
                           Normalization scheme)
{
    switch (scheme) {
    case Normalization::Spc:
        return normalize_spc(w, budget);
    case Normalization::Mpc:
        return normalize_mpc(w, budget);
    case Normalization::Pac:
        return normalize_pac(w, budget);
    case Normalization::Sspc:
    case Normalization::Smpc:
        return normalize_swarm(w, budget, scheme);
    }
    throw std::logic_error("unknown normalization");
}

double scale_node_power(double p_t_w, int n_b_single, int n_b_multi, int n_node)
{
    if (p_t_w <= 0.0 || n_b_single < 1 || n_b_multi < 1 || n_node < 1) {
        throw std::invalid_argument("scale_node_power arguments must be positive");
    }
    return p_t_w * static_cast<double>(n_b_multi) /
           (static_cast<double>(n_node) * static_cast<double>(n_b_single));
}

} // namespace cfmimo
