#include <utility>

#include "tasrl/grid.hpp"

namespace tasrl {

namespace {

constexpr double kCostPerCapacity = 0.1;  // eta / s_bar on shipped feeders

Bus load_bus(int id, Rng& rng) {
    Bus b;
    b.id = id;
    b.p = -rng.uniform(0.0, 0.1);
    return b;
}

void make_controllable(Bus& b, double s_bar) {
    b.controllable = true;
    b.s_bar = s_bar;
    b.eta = kCostPerCapacity * s_bar;
    b.q_max = reactive_capacity(s_bar);
    b.q_min = -b.q_max;
}

Network assemble(int n, const std::vector<int>& parent, const std::vector<int>& controlled, Rng& rng,
                 double x_lo, double x_hi, double s_bar, bool all_controlled) {
    std::vector<Bus> buses;
    std::vector<Line> lines;
    Bus sub;
    sub.id = 0;
    buses.push_back(sub);
    for (int i = 1; i <= n; ++i) {
        buses.push_back(load_bus(i, rng));
        Line l;
        l.from_bus = parent[static_cast<std::size_t>(i)];
        l.to_bus = i;
        l.r = rng.uniform(x_lo, x_hi);
        l.x = rng.uniform(x_lo, x_hi);
        lines.push_back(l);
    }
    if (all_controlled) {
        for (int i = 1; i <= n; ++i) make_controllable(buses[static_cast<std::size_t>(i)], s_bar);
    } else {
        for (int id : controlled) make_controllable(buses[static_cast<std::size_t>(id)], s_bar);
    }
    return build_network(std::move(buses), std::move(lines), 1.0);
}

}  // namespace

Network make_feeder13() {
    // 650-632-633-634, 632-645-646, 632-671-692-675, 671-684-{611,652}, 671-680
    const std::vector<int> parent{-1, 0, 1, 2, 1, 4, 1, 6, 7, 6, 9, 9, 6};
    Rng rng(13);
    return assemble(12, parent, {2, 7, 9}, rng, 0.01, 0.1, 1.0, false);
}

Network make_feeder123(std::uint64_t seed) {
    // Random recursive tree: bus k hangs off a uniformly chosen earlier bus.
    // The default seed keeps the spectrum of C_q + X over the controlled
    // buses inside [0.23, 1.53], so a unit-time gradient step contracts.
    Rng rng(seed);
    const int n = 122;
    std::vector<int> parent(static_cast<std::size_t>(n + 1), -1);
    for (int k = 1; k <= n; ++k) parent[static_cast<std::size_t>(k)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    return assemble(n, parent, {10, 11, 16, 20, 33, 36, 48, 59, 61, 66, 75, 83, 92, 104}, rng, 0.01, 0.1, 1.0,
                    false);
}

Network make_chain(int n, std::uint64_t seed, double x_lo, double x_hi) {
    Rng rng(seed);
    std::vector<int> parent(static_cast<std::size_t>(n + 1), -1);
    for (int k = 1; k <= n; ++k) parent[static_cast<std::size_t>(k)] = k - 1;
    return assemble(n, parent, {}, rng, x_lo, x_hi, 1.0, true);
}

Network make_random_tree(int n, std::uint64_t seed, double x_lo, double x_hi) {
    Rng rng(seed);
    std::vector<int> parent(static_cast<std::size_t>(n + 1), -1);
    for (int k = 1; k <= n; ++k) parent[static_cast<std::size_t>(k)] = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    return assemble(n, parent, {}, rng, x_lo, x_hi, 1.0, true);
}

}  // namespace tasrl
