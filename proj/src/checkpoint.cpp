#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tasrl/policy.hpp"

namespace tasrl {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "tasrl-policy-checkpoint";

void check_derived(const json& bus, const char* w_key, const char* b_key, const MonotoneBranchParams& params,
                   Branch branch, const std::string& where) {
    if (!bus.contains(w_key) && !bus.contains(b_key)) return;
    const auto w = bus.at(w_key).get<std::vector<double>>();
    const auto b = bus.at(b_key).get<std::vector<double>>();
    const BranchWeights expected = branch_weights(params, branch);
    if (w.size() != expected.w.size() || b.size() != expected.b.size()) {
        fail(ErrorCode::InvariantViolation, where + w_key + "/" + b_key + " length does not match d");
    }
    if (b.front() != 0.0) fail(ErrorCode::InvariantViolation, where + b_key + "[0] must be 0");
    double partial = 0.0;
    for (std::size_t l = 0; l < w.size(); ++l) {
        partial += w[l];
        const bool ok = branch == Branch::High ? partial < 0.0 : partial > 0.0;
        if (!ok) {
            fail(ErrorCode::InvariantViolation,
                 where + w_key + ": partial sum " + std::to_string(l + 1) + " has the wrong sign");
        }
        if (l > 0 && b[l] > b[l - 1]) fail(ErrorCode::InvariantViolation, where + b_key + " must be non-increasing");
        const double tol_w = 1e-9 * std::max(1.0, std::abs(expected.w[l]));
        const double tol_b = 1e-9 * std::max(1.0, std::abs(expected.b[l]));
        if (std::abs(w[l] - expected.w[l]) > tol_w || std::abs(b[l] - expected.b[l]) > tol_b) {
            fail(ErrorCode::InvariantViolation, where + w_key + "/" + b_key + " disagree with u/beta");
        }
    }
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
    const PolicyParams& p = checkpoint.params;
    p.validate();
    json doc;
    doc["format"] = kFormat;
    doc["version"] = 1;
    doc["d"] = p.units;
    doc["c"] = p.c;
    doc["epsilon"] = p.epsilon;
    doc["n_buses"] = p.buses.size();
    doc["buses"] = json::array();
    for (const BusPolicy& bp : p.buses) {
        const BranchWeights hi = branch_weights(bp.high, Branch::High);
        const BranchWeights lo = branch_weights(bp.low, Branch::Low);
        doc["buses"].push_back({{"bus", bp.bus},
                                {"u_plus", bp.high.u},
                                {"beta_plus", bp.high.beta},
                                {"u_minus", bp.low.u},
                                {"beta_minus", bp.low.beta},
                                {"w_plus", hi.w},
                                {"b_plus", hi.b},
                                {"w_minus", lo.w},
                                {"b_minus", lo.b}});
    }
    json meta;
    meta["training_ineffective"] = checkpoint.meta.training_ineffective;
    meta["method"] = checkpoint.meta.method;
    meta["certificate"] = checkpoint.meta.certificate.empty() ? json(nullptr) : json::parse(checkpoint.meta.certificate);
    doc["meta"] = meta;
    return doc.dump(1) + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::CorruptCheckpoint, std::string("checkpoint is not valid JSON: ") + e.what());
    }
    Checkpoint out;
    try {
        if (doc.value("format", std::string{}) != kFormat) {
            fail(ErrorCode::CorruptCheckpoint, "checkpoint: missing or unknown format tag");
        }
        PolicyParams& p = out.params;
        p.units = doc.at("d").get<int>();
        p.c = doc.at("c").get<double>();
        p.epsilon = doc.at("epsilon").get<double>();
        const auto& buses = doc.at("buses");
        if (!buses.is_array()) fail(ErrorCode::CorruptCheckpoint, "checkpoint: buses must be an array");
        const auto declared = doc.at("n_buses").get<std::size_t>();
        if (declared != buses.size()) {
            fail(ErrorCode::InvariantViolation, "checkpoint: n_buses = " + std::to_string(declared) + " but " +
                                                    std::to_string(buses.size()) + " bus entries present");
        }
        for (const json& b : buses) {
            BusPolicy bp;
            bp.bus = b.at("bus").get<int>();
            bp.high.u = b.at("u_plus").get<std::vector<double>>();
            bp.high.beta = b.at("beta_plus").get<std::vector<double>>();
            bp.low.u = b.at("u_minus").get<std::vector<double>>();
            bp.low.beta = b.at("beta_minus").get<std::vector<double>>();
            p.buses.push_back(std::move(bp));
        }
        p.validate();
        for (std::size_t k = 0; k < buses.size(); ++k) {
            const std::string where = "checkpoint bus " + std::to_string(p.buses[k].bus) + ": ";
            check_derived(buses[k], "w_plus", "b_plus", p.buses[k].high, Branch::High, where);
            check_derived(buses[k], "w_minus", "b_minus", p.buses[k].low, Branch::Low, where);
        }
        if (doc.contains("meta") && doc["meta"].is_object()) {
            const json& meta = doc["meta"];
            out.meta.training_ineffective = meta.value("training_ineffective", false);
            out.meta.method = meta.value("method", std::string{});
            if (meta.contains("certificate") && !meta["certificate"].is_null()) {
                out.meta.certificate = meta["certificate"].dump();
            }
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::CorruptCheckpoint, std::string("checkpoint: ") + e.what());
    }
    return out;
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
    const std::string text = checkpoint_to_json(checkpoint);
    std::ofstream out(path);
    if (!out) fail(ErrorCode::Io, "cannot write checkpoint '" + path + "'");
    out << text;
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open checkpoint '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_checkpoint(ss.str());
}

void check_matches(const PolicyParams& params, const Network& network) {
    const auto& ids = network.controlled();
    if (params.buses.size() != ids.size()) {
        fail(ErrorCode::InvariantViolation, "checkpoint has " + std::to_string(params.buses.size()) +
                                                " bus policies but the network has " + std::to_string(ids.size()) +
                                                " controlled buses");
    }
    for (std::size_t k = 0; k < ids.size(); ++k) {
        if (params.buses[k].bus != ids[k]) {
            fail(ErrorCode::InvariantViolation, "checkpoint bus " + std::to_string(params.buses[k].bus) +
                                                    " does not match controlled bus " + std::to_string(ids[k]));
        }
    }
}

Checkpoint load_checkpoint(const std::string& path, const Network& network) {
    Checkpoint c = load_checkpoint(path);
    check_matches(c.params, network);
    return c;
}

}  // namespace tasrl
