#include "cfmimo/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace cfmimo {

namespace {

void check_transmission(const ChannelMatrix& h)
{
    if (h.time_tag != TimeTag::Transmission) {
        throw std::logic_error("metrics require the transmission-time channel");
    }
    if (h.estimated_with_impairments) {
        throw std::logic_error("an impaired estimation matrix reached the metrics path");
    }
}

SinrResult from_powers(double signal, double interference)
{
    SinrResult r;
    r.snr_linear = signal;
    r.sinr_linear = signal / (1.0 + interference);
    r.sir_linear = interference > 0.0 ? signal / interference
                                      : std::numeric_limits<double>::infinity();
    return r;
}

} // namespace

SinrResult sinr(const ChannelMatrix& h_t1, const BeamformingMatrix& w_t0, Eigen::Index i)
{
    check_transmission(h_t1);
    if (i < 0 || i >= h_t1.entries.rows() || i >= w_t0.entries.cols()) {
        throw std::out_of_range("user index out of range");
    }
    const Eigen::RowVectorXcd products = h_t1.entries.row(i) * w_t0.entries;
    const double signal = std::norm(products(i));
    double interference = 0.0;
    for (Eigen::Index l = 0; l < products.size(); ++l) {
        if (l != i) {
            interference += std::norm(products(l));
        }
    }
    return from_powers(signal, interference);
}

std::vector<SinrResult> slot_sinr(const ChannelMatrix& h_t1, const BeamformingMatrix& w_t0)
{
    check_transmission(h_t1);
    if (h_t1.entries.rows() != w_t0.entries.cols()) {
        throw std::invalid_argument("channel rows and beamformer columns must match");
    }
    const Eigen::MatrixXcd g = h_t1.entries * w_t0.entries;
    std::vector<SinrResult> out;
    out.reserve(static_cast<std::size_t>(g.rows()));
    for (Eigen::Index i = 0; i < g.rows(); ++i) {
        const double signal = std::norm(g(i, i));
        double interference = 0.0;
        for (Eigen::Index l = 0; l < g.cols(); ++l) {
            if (l != i) {
                interference += std::norm(g(i, l));
            }
        }
        out.push_back(from_powers(signal, interference));
    }
    return out;
}

SinrResult fr_sinr(const ChannelMatrix& h_t1, const Eigen::MatrixXcd& w,
                   const std::vector<int>& column_colors, Eigen::Index i)
{
    check_transmission(h_t1);
    if (static_cast<Eigen::Index>(column_colors.size()) != w.cols()) {
        throw std::invalid_argument("one color per beamformer column required");
    }
    const Eigen::RowVectorXcd products = h_t1.entries.row(i) * w;
    const double signal = std::norm(products(i));
    const int my_color = column_colors[static_cast<std::size_t>(i)];
    double interference = 0.0;
    for (Eigen::Index l = 0; l < products.size(); ++l) {
        if (l != i && column_colors[static_cast<std::size_t>(l)] == my_color) {
            interference += std::norm(products(l));
        }
    }
    return from_powers(signal, interference);
}

double truncated_shannon(double gamma_linear, const ShannonParams& params)
{
    if (gamma_linear < 0.0) {
        throw std::invalid_argument("SINR must be non-negative");
    }
    const double gamma_min = db_to_linear(params.gamma_min_db);
    const double gamma_max = db_to_linear(params.gamma_max_db);
    if (gamma_linear < gamma_min) {
        return 0.0;
    }
    if (gamma_linear >= gamma_max) {
        return params.epsilon * std::log2(1.0 + gamma_max);
    }
    return params.epsilon * std::log2(1.0 + gamma_linear);
}

MetricsReport aggregate(const std::vector<UserSlotResult>& results, double bandwidth_hz)
{
    if (results.empty()) {
        throw std::invalid_argument("cannot aggregate empty results");
    }
    MetricsReport report;
    double se_sum = 0.0;
    for (const auto& r : results) {
        ++report.n_total;
        if (r.served) {
            ++report.n_served;
            se_sum += r.se_bps_hz;
        }
    }
    report.outage_pct =
        100.0 * static_cast<double>(report.n_total - report.n_served) / report.n_total;
    if (report.n_served > 0) {
        report.avg_se_bps_hz = se_sum / static_cast<double>(report.n_served);
        report.avg_capacity_mbps = report.avg_se_bps_hz * bandwidth_hz / 1e6;
    } else {
        report.avg_se_bps_hz = std::numeric_limits<double>::quiet_NaN();
        report.avg_capacity_mbps = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

std::vector<int> color_beams(const std::vector<Beam>& beams, int n_colors)
{
    if (n_colors != 3 && n_colors != 4) {
        throw std::invalid_argument("frequency reuse supports 3 or 4 colors");
    }
    std::vector<int> colors;
    colors.reserve(beams.size());
    for (const auto& b : beams) {
        int c = 0;
        if (n_colors == 3) {
            c = ((b.axial_q + 2 * b.axial_r) % 3 + 3) % 3;
        } else {
            const int qp = ((b.axial_q % 2) + 2) % 2;
            const int rp = ((b.axial_r % 2) + 2) % 2;
            c = qp + 2 * rp;
        }
        colors.push_back(c);
    }
    return colors;
}

} // namespace cfmimo
