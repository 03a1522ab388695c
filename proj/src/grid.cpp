#include "tasrl/grid.hpp"

#include <algorithm>
#include <set>
#include <utility>

namespace tasrl {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidInput: return "InvalidInput";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::CycleDetected: return "CycleDetected";
        case ErrorCode::DisconnectedBus: return "DisconnectedBus";
        case ErrorCode::DuplicateLine: return "DuplicateLine";
        case ErrorCode::ProblemTooLarge: return "ProblemTooLarge";
        case ErrorCode::InfeasibleState: return "InfeasibleState";
        case ErrorCode::SafetyViolation: return "SafetyViolation";
        case ErrorCode::DegenerateReference: return "DegenerateReference";
        case ErrorCode::SingularX: return "SingularX";
        case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
        case ErrorCode::CorruptCheckpoint: return "CorruptCheckpoint";
        case ErrorCode::InvariantViolation: return "InvariantViolation";
        case ErrorCode::InvalidAlpha: return "InvalidAlpha";
        case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

void validate_bus(const Bus& b) {
    const std::string where = "bus " + std::to_string(b.id) + ": ";
    auto finite = [](double x) { return std::isfinite(x); };
    if (!finite(b.p) || !finite(b.q_min) || !finite(b.q_max) || !finite(b.v_nom) ||
        !finite(b.v_lo) || !finite(b.v_hi) || !finite(b.eta) || !finite(b.s_bar)) {
        fail(ErrorCode::InvariantViolation, where + "non-finite field");
    }
    if (b.id == 0) return;  // substation fields are not used
    if (!(b.v_lo < b.v_nom && b.v_nom < b.v_hi)) {
        fail(ErrorCode::InvariantViolation, where + "requires v_lo < v_nom < v_hi");
    }
    if (!(b.eta > 0.0) || !(b.s_bar > 0.0)) {
        fail(ErrorCode::InvariantViolation, where + "requires eta > 0 and s_bar > 0");
    }
    if (b.controllable) {
        if (!(b.q_min < 0.0 && 0.0 < b.q_max)) {
            fail(ErrorCode::InvariantViolation, where + "controllable bus requires q_min < 0 < q_max");
        }
    } else if (b.q_min != 0.0 || b.q_max != 0.0) {
        fail(ErrorCode::InvariantViolation, where + "uncontrolled bus requires q_min = q_max = 0");
    }
}

Network build_network(std::vector<Bus> buses, std::vector<Line> lines, double v0) {
    if (buses.empty()) fail(ErrorCode::InvalidInput, "network has no buses");
    if (!std::isfinite(v0) || !(v0 > 0.0)) fail(ErrorCode::InvalidInput, "v0 must be positive");

    std::sort(buses.begin(), buses.end(), [](const Bus& a, const Bus& b) { return a.id < b.id; });
    for (std::size_t i = 0; i < buses.size(); ++i) {
        if (buses[i].id != static_cast<int>(i)) {
            fail(ErrorCode::InvalidInput, "bus ids must be contiguous 0..n (missing or repeated id " +
                                              std::to_string(i) + ")");
        }
        validate_bus(buses[i]);
    }
    const int nb = static_cast<int>(buses.size());

    std::set<std::pair<int, int>> seen;
    for (const Line& l : lines) {
        if (l.from_bus < 0 || l.from_bus >= nb || l.to_bus < 0 || l.to_bus >= nb) {
            fail(ErrorCode::InvalidInput, "line (" + std::to_string(l.from_bus) + ", " +
                                              std::to_string(l.to_bus) + ") references an unknown bus");
        }
        if (!(l.r > 0.0) || !(l.x > 0.0) || !std::isfinite(l.r) || !std::isfinite(l.x)) {
            fail(ErrorCode::InvariantViolation, "line (" + std::to_string(l.from_bus) + ", " +
                                                    std::to_string(l.to_bus) + ") requires r > 0 and x > 0");
        }
        if (l.from_bus == l.to_bus) {
            fail(ErrorCode::CycleDetected, "self-loop at bus " + std::to_string(l.from_bus));
        }
        auto key = std::minmax(l.from_bus, l.to_bus);
        if (!seen.insert(key).second) {
            fail(ErrorCode::DuplicateLine, "duplicate line between buses " + std::to_string(key.first) +
                                               " and " + std::to_string(key.second));
        }
    }

    // Breadth-first orientation from the substation.
    std::vector<std::vector<int>> adjacent(static_cast<std::size_t>(nb));
    for (int k = 0; k < static_cast<int>(lines.size()); ++k) {
        adjacent[static_cast<std::size_t>(lines[k].from_bus)].push_back(k);
        adjacent[static_cast<std::size_t>(lines[k].to_bus)].push_back(k);
    }
    std::vector<int> parent(static_cast<std::size_t>(nb), -2);
    std::vector<int> parent_line(static_cast<std::size_t>(nb), -1);
    std::vector<int> order{0};
    parent[0] = -1;
    for (std::size_t head = 0; head < order.size(); ++head) {
        const int u = order[head];
        for (int k : adjacent[static_cast<std::size_t>(u)]) {
            if (k == parent_line[static_cast<std::size_t>(u)]) continue;
            const Line& l = lines[static_cast<std::size_t>(k)];
            const int w = l.from_bus == u ? l.to_bus : l.from_bus;
            if (parent[static_cast<std::size_t>(w)] != -2) {
                fail(ErrorCode::CycleDetected, "cycle through line (" + std::to_string(l.from_bus) + ", " +
                                                   std::to_string(l.to_bus) + ")");
            }
            parent[static_cast<std::size_t>(w)] = u;
            parent_line[static_cast<std::size_t>(w)] = k;
            order.push_back(w);
        }
    }
    for (int i = 0; i < nb; ++i) {
        if (parent[static_cast<std::size_t>(i)] == -2) {
            fail(ErrorCode::DisconnectedBus, "bus " + std::to_string(i) + " is not connected to the substation");
        }
    }

    Network net;
    net.v0_ = v0;
    net.parent_ = parent;
    net.buses_ = std::move(buses);
    // Re-index lines so that line k feeds bus k+1.
    net.lines_.resize(static_cast<std::size_t>(nb - 1));
    for (int i = 1; i < nb; ++i) {
        Line l = lines[static_cast<std::size_t>(parent_line[static_cast<std::size_t>(i)])];
        l.from_bus = parent[static_cast<std::size_t>(i)];
        l.to_bus = i;
        net.lines_[static_cast<std::size_t>(i - 1)] = l;
    }
    net.paths_.assign(static_cast<std::size_t>(nb), {});
    for (int i : order) {
        if (i == 0) continue;
        auto p = net.paths_[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
        p.push_back(i - 1);
        net.paths_[static_cast<std::size_t>(i)] = std::move(p);
    }

    // X_ij = 2 * sum of x over the shared prefix of the two root paths.
    const int n = nb - 1;
    net.R_ = Mat::Zero(n, n);
    net.X_ = Mat::Zero(n, n);
    for (int i = 1; i <= n; ++i) {
        const auto& pi = net.paths_[static_cast<std::size_t>(i)];
        for (int j = i; j <= n; ++j) {
            const auto& pj = net.paths_[static_cast<std::size_t>(j)];
            double r = 0.0;
            double x = 0.0;
            for (std::size_t k = 0; k < std::min(pi.size(), pj.size()) && pi[k] == pj[k]; ++k) {
                r += net.lines_[static_cast<std::size_t>(pi[k])].r;
                x += net.lines_[static_cast<std::size_t>(pi[k])].x;
            }
            net.R_(i - 1, j - 1) = net.R_(j - 1, i - 1) = 2.0 * r;
            net.X_(i - 1, j - 1) = net.X_(j - 1, i - 1) = 2.0 * x;
        }
    }
    for (int i = 1; i <= n; ++i) {
        if (net.buses_[static_cast<std::size_t>(i)].controllable) net.controlled_.push_back(i);
    }
    return net;
}

Vec Network::v_nom() const {
    Vec out(size());
    for (int i = 1; i <= size(); ++i) out(i - 1) = buses_[static_cast<std::size_t>(i)].v_nom;
    return out;
}
Vec Network::v_lo() const {
    Vec out(size());
    for (int i = 1; i <= size(); ++i) out(i - 1) = buses_[static_cast<std::size_t>(i)].v_lo;
    return out;
}
Vec Network::v_hi() const {
    Vec out(size());
    for (int i = 1; i <= size(); ++i) out(i - 1) = buses_[static_cast<std::size_t>(i)].v_hi;
    return out;
}
Vec Network::q_min() const {
    Vec out(size());
    for (int i = 1; i <= size(); ++i) out(i - 1) = buses_[static_cast<std::size_t>(i)].q_min;
    return out;
}
Vec Network::q_max() const {
    Vec out(size());
    for (int i = 1; i <= size(); ++i) out(i - 1) = buses_[static_cast<std::size_t>(i)].q_max;
    return out;
}
Vec Network::p() const {
    Vec out(size());
    for (int i = 1; i <= size(); ++i) out(i - 1) = buses_[static_cast<std::size_t>(i)].p;
    return out;
}

ImpedanceMatrices impedance_matrices(const Network& network) { return {network.R(), network.X()}; }

Vec voltage(const Network& network, const Vec& q, const Vec& v_env) {
    require_size(q, network.size(), "voltage: q");
    require_size(v_env, network.size(), "voltage: v_env");
    return network.X() * q + v_env;
}

Vec env_voltage(const Network& network, const Vec& p, double v0) {
    require_size(p, network.size(), "env_voltage: p");
    return network.R() * p + Vec::Constant(network.size(), v0);
}

double reactive_capacity(double s_bar) {
    // q = sqrt(s^2 - p^2) = 0.45 p  =>  p = s / sqrt(1 + 0.45^2)
    return 0.45 * s_bar / std::sqrt(1.0 + 0.45 * 0.45);
}

}  // namespace tasrl
