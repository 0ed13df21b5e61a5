#pragma once

#include "cfmimo/types.hpp"

#include <vector>

namespace cfmimo {

enum class Normalization : std::uint8_t { Spc, Mpc, Pac, Sspc, Smpc };

/// Per-node power budget. The beamforming matrix has n_node blocks of n_f
/// rows; a radiating element's emitted power is its squared row norm and its
/// amplifier is sized for p_t_node_w / n_f.
struct PowerBudget {
    double p_t_node_w = 1.0;
    int n_node = 1;
    int n_f = 1;

    double p_t_total_w() const { return n_node * p_t_node_w; }
    double per_element_cap_w() const { return p_t_node_w / n_f; }
};

struct NormalizedMatrix {
    Eigen::MatrixXcd entries;
    Normalization scheme = Normalization::Spc;
    std::vector<int> zero_rows;       ///< rows passed through unscaled by PAC
    std::vector<int> zero_node_blocks; ///< node blocks that contributed nothing
};

/// Sum power constraint: scalar rescale to total power = p_t_total.
NormalizedMatrix normalize_spc(const Eigen::MatrixXcd& w, const PowerBudget& budget);

/// Maximum power constraint: scalar rescale so the hottest radiating element
/// emits exactly its cap; total emitted power stays at or below the budget.
NormalizedMatrix normalize_mpc(const Eigen::MatrixXcd& w, const PowerBudget& budget);

/// Per antenna constraint: every nonzero row rescaled to the element cap.
/// Breaks column orthogonality; zero rows pass through and are reported.
NormalizedMatrix normalize_pac(const Eigen::MatrixXcd& w, const PowerBudget& budget);

/// Swarm variants: per-node blocks normalized independently (SPC or MPC per
/// block), so every node respects its own budget.
NormalizedMatrix normalize_swarm(const Eigen::MatrixXcd& w, const PowerBudget& budget,
                                 Normalization scheme);

/// Dispatch on the scheme.
NormalizedMatrix normalize(const Eigen::MatrixXcd& w, const PowerBudget& budget,
                           Normalization scheme);

/// Per-node power that keeps the average power per active beam equal between
/// the single-node and multi-node deployments:
/// p_t_node = p_t * n_b_multi / (n_node * n_b_single).
double scale_node_power(double p_t_w, int n_b_single, int n_b_multi, int n_node);

/// Emitted power of element (row) n.
double row_power(const Eigen::MatrixXcd& w, Eigen::Index row);

} // namespace cfmimo
