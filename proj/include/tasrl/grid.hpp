#pragma once

// Radial distribution network under the linearized branch-flow model.
//
// Bus 0 is the substation. Matrix and vector quantities are indexed by
// bus id - 1, so a network with buses {0, ..., n} yields n x n R and X.
// All quantities are per-unit and v is the squared voltage magnitude.

#include <memory>
#include <string>
#include <vector>

#include "tasrl/types.hpp"

namespace tasrl {

struct Bus {
    int id = 0;
    double p = 0.0;
    double q_min = 0.0;
    double q_max = 0.0;
    double v_nom = 1.0;
    double v_lo = 0.95;
    double v_hi = 1.05;
    double eta = 0.1;
    double s_bar = 1.0;
    bool controllable = false;
};

struct Line {
    int from_bus = 0;
    int to_bus = 0;
    double r = 0.0;
    double x = 0.0;
};

class Network {
public:
    [[nodiscard]] int size() const noexcept { return static_cast<int>(buses_.size()) - 1; }
    [[nodiscard]] const std::vector<Bus>& buses() const noexcept { return buses_; }
    [[nodiscard]] const Bus& bus(int id) const { return buses_.at(static_cast<std::size_t>(id)); }
    [[nodiscard]] const std::vector<Line>& lines() const noexcept { return lines_; }
    [[nodiscard]] const Mat& R() const noexcept { return R_; }
    [[nodiscard]] const Mat& X() const noexcept { return X_; }
    [[nodiscard]] double v0() const noexcept { return v0_; }

    /// Indices into lines() on the path from bus 0 to `id`, root first.
    [[nodiscard]] const std::vector<int>& path(int id) const { return paths_.at(static_cast<std::size_t>(id)); }
    /// Parent bus id (-1 for the substation).
    [[nodiscard]] int parent(int id) const { return parent_.at(static_cast<std::size_t>(id)); }

    /// Bus ids with an installed controller, ascending.
    [[nodiscard]] const std::vector<int>& controlled() const noexcept { return controlled_; }

    /// Per-bus vectors (length n) for convenience.
    [[nodiscard]] Vec v_nom() const;
    [[nodiscard]] Vec v_lo() const;
    [[nodiscard]] Vec v_hi() const;
    [[nodiscard]] Vec q_min() const;
    [[nodiscard]] Vec q_max() const;
    [[nodiscard]] Vec p() const;

private:
    friend Network build_network(std::vector<Bus> buses, std::vector<Line> lines, double v0);

    std::vector<Bus> buses_;
    std::vector<Line> lines_;  // oriented parent -> child
    Mat R_;
    Mat X_;
    double v0_ = 1.0;
    std::vector<std::vector<int>> paths_;
    std::vector<int> parent_;
    std::vector<int> controlled_;
};

/// Checks the per-bus invariants (band ordering, positive cost and capacity,
/// q_min < 0 < q_max on controllable buses). The substation is exempt.
void validate_bus(const Bus& bus);

/// Validates the tree rooted at bus 0 and the per-bus invariants, then
/// caches root paths and the R/X matrices. Lines may be listed in either
/// orientation; they are stored parent -> child.
Network build_network(std::vector<Bus> buses, std::vector<Line> lines, double v0);

struct ImpedanceMatrices {
    Mat R;
    Mat X;
};
ImpedanceMatrices impedance_matrices(const Network& network);

/// v = X q + v_env
Vec voltage(const Network& network, const Vec& q, const Vec& v_env);

/// v_env = R p + v0 1
Vec env_voltage(const Network& network, const Vec& p, double v0);

// ---------------------------------------------------------------------------
// File format: a JSON document with "v0", "buses" and "lines" arrays.
// ---------------------------------------------------------------------------

Network parse_network(const std::string& text, const std::string& source = "<string>");
Network load_network(const std::string& path);
std::string network_to_json(const Network& network);
void save_network(const Network& network, const std::string& path);

// ---------------------------------------------------------------------------
// Shipped synthetic feeders. Line impedances are drawn from a fixed seed.
// ---------------------------------------------------------------------------

/// IEEE 13-bus topology, controllers at buses 2, 7 and 9.
Network make_feeder13();
inline constexpr std::uint64_t kFeeder123Seed = 1425;
/// 123-bus radial feeder with 14 controllers. Other seeds give other
/// random trees of the same size and placement.
Network make_feeder123(std::uint64_t seed = kFeeder123Seed);
/// Chain 0-1-...-n with every bus controllable; used for small instances.
Network make_chain(int n, std::uint64_t seed, double x_lo = 0.01, double x_hi = 0.1);
/// Random tree on n+1 buses with every bus controllable.
Network make_random_tree(int n, std::uint64_t seed, double x_lo = 0.01, double x_hi = 0.1);

/// Reactive capacity from apparent-power capacity with q_bar ~= 0.45 p_bar.
double reactive_capacity(double s_bar);

}  // namespace tasrl
