#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "tasrl/grid.hpp"

namespace tasrl {

namespace {

using nlohmann::json;

// Line number (1-based) at which each element of the top-level arrays starts.
// nlohmann::json keeps no source positions, so the text is scanned once more.
std::map<std::string, std::vector<int>> element_lines(const std::string& text) {
    std::map<std::string, std::vector<int>> out;
    int line = 1;
    int depth = 0;
    bool in_string = false;
    bool escape = false;
    std::string last_key;
    std::string current;
    std::string active_array;  // top-level key whose array we are inside
    bool expect_element = false;
    for (char ch : text) {
        if (ch == '\n') ++line;
        if (in_string) {
            if (escape) {
                escape = false;
            } else if (ch == '\\') {
                escape = true;
            } else if (ch == '"') {
                in_string = false;
                if (depth == 1) last_key = current;
            } else {
                current.push_back(ch);
            }
            continue;
        }
        if (std::isspace(static_cast<unsigned char>(ch))) continue;
        if (!active_array.empty() && depth == 2 && expect_element && ch != ']') {
            out[active_array].push_back(line);
            expect_element = false;
        }
        switch (ch) {
            case '"':
                in_string = true;
                current.clear();
                break;
            case '{':
            case '[':
                if (ch == '[' && depth == 1) {
                    active_array = last_key;
                    expect_element = true;
                }
                ++depth;
                break;
            case '}':
            case ']':
                --depth;
                if (depth == 1) active_array.clear();
                break;
            case ',':
                if (depth == 2 && !active_array.empty()) expect_element = true;
                break;
            default:
                break;
        }
    }
    return out;
}

int parse_error_line(const std::string& text, std::size_t byte) {
    int line = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') ++line;
    }
    return line;
}

template <typename T>
T field(const json& obj, const char* key, const T& fallback) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    return it->get<T>();
}

}  // namespace

Network parse_network(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::InvalidInput, source + ":" + std::to_string(parse_error_line(text, e.byte)) +
                                          ": malformed network document: " + e.what());
    }
    const auto lines_at = element_lines(text);
    auto line_of = [&](const char* array, std::size_t k) {
        auto it = lines_at.find(array);
        if (it == lines_at.end() || k >= it->second.size()) return 0;
        return it->second[k];
    };

    if (!doc.is_object() || !doc.contains("buses") || !doc["buses"].is_array() || !doc.contains("lines") ||
        !doc["lines"].is_array()) {
        fail(ErrorCode::InvalidInput, source + ":1: document requires \"buses\" and \"lines\" arrays");
    }

    std::vector<Bus> buses;
    for (std::size_t k = 0; k < doc["buses"].size(); ++k) {
        const json& b = doc["buses"][k];
        const int at = line_of("buses", k);
        try {
            Bus bus;
            bus.id = b.at("id").get<int>();
            bus.p = field(b, "p", 0.0);
            bus.q_min = field(b, "q_min", 0.0);
            bus.q_max = field(b, "q_max", 0.0);
            bus.v_nom = field(b, "v_nom", 1.0);
            bus.v_lo = field(b, "v_lo", 0.95);
            bus.v_hi = field(b, "v_hi", 1.05);
            bus.eta = field(b, "eta", 0.1);
            bus.s_bar = field(b, "s_bar", 1.0);
            bus.controllable = field(b, "controllable", bus.q_max > bus.q_min);
            // Validate one bus at a time so the failure names its line.
            validate_bus(bus);
            buses.push_back(bus);
        } catch (const Error& e) {
            fail(e.code(), source + ":" + std::to_string(at) + ": buses[" + std::to_string(k) + "]: " + e.what());
        } catch (const json::exception& e) {
            fail(ErrorCode::InvalidInput,
                 source + ":" + std::to_string(at) + ": buses[" + std::to_string(k) + "]: " + e.what());
        }
    }

    std::vector<Line> lines;
    for (std::size_t k = 0; k < doc["lines"].size(); ++k) {
        const json& l = doc["lines"][k];
        const int at = line_of("lines", k);
        try {
            Line line;
            line.from_bus = l.at("from_bus").get<int>();
            line.to_bus = l.at("to_bus").get<int>();
            line.r = l.at("r").get<double>();
            line.x = l.at("x").get<double>();
            if (!(line.r > 0.0) || !(line.x > 0.0)) {
                fail(ErrorCode::InvariantViolation, "requires r > 0 and x > 0");
            }
            lines.push_back(line);
        } catch (const Error& e) {
            fail(e.code(), source + ":" + std::to_string(at) + ": lines[" + std::to_string(k) + "]: " + e.what());
        } catch (const json::exception& e) {
            fail(ErrorCode::InvalidInput,
                 source + ":" + std::to_string(at) + ": lines[" + std::to_string(k) + "]: " + e.what());
        }
    }

    const double v0 = field(doc, "v0", 1.0);
    try {
        return build_network(std::move(buses), std::move(lines), v0);
    } catch (const Error& e) {
        fail(e.code(), source + ":1: " + e.what());
    }
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Io, "cannot open network file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_network(ss.str(), path);
}

std::string network_to_json(const Network& network) {
    json doc;
    doc["units"] = "per-unit; v is squared voltage magnitude";
    doc["v0"] = network.v0();
    doc["buses"] = json::array();
    for (const Bus& b : network.buses()) {
        doc["buses"].push_back({{"id", b.id},
                                {"p", b.p},
                                {"q_min", b.q_min},
                                {"q_max", b.q_max},
                                {"v_nom", b.v_nom},
                                {"v_lo", b.v_lo},
                                {"v_hi", b.v_hi},
                                {"eta", b.eta},
                                {"s_bar", b.s_bar},
                                {"controllable", b.controllable}});
    }
    doc["lines"] = json::array();
    for (const Line& l : network.lines()) {
        doc["lines"].push_back({{"from_bus", l.from_bus}, {"to_bus", l.to_bus}, {"r", l.r}, {"x", l.x}});
    }
    return doc.dump(1) + "\n";
}

void save_network(const Network& network, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorCode::Io, "cannot write network file '" + path + "'");
    out << network_to_json(network);
}

}  // namespace tasrl
