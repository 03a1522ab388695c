#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <unistd.h>

#include "doctest.h"
#include "tasrl/tasrl.h"

namespace {

std::string take(char* s) {
    std::string out = s == nullptr ? "" : s;
    tasrl_string_free(s);
    return out;
}

std::filesystem::path scratch(const char* name) {
    auto p = std::filesystem::temp_directory_path() / ("tasrl_capi_" + std::to_string(::getpid()) + "_" + name);
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

TEST_CASE("exit code mapping") {
    CHECK(tasrl_exit_code(TASRL_OK) == 0);
    CHECK(tasrl_exit_code(TASRL_E_INVALID_INPUT) == 1);
    CHECK(tasrl_exit_code(TASRL_E_INVALID_ALPHA) == 1);
    CHECK(tasrl_exit_code(TASRL_E_IO) == 1);
    CHECK(tasrl_exit_code(TASRL_E_SAFETY_VIOLATION) == 2);
    CHECK(tasrl_exit_code(TASRL_E_INVARIANT_VIOLATION) == 2);
    CHECK(tasrl_exit_code(TASRL_E_CHECK_FAILED) == 2);
    CHECK(tasrl_exit_code(TASRL_E_SINGULAR_X) == 3);
    CHECK(tasrl_exit_code(TASRL_E_NON_FINITE_LOSS) == 3);
    CHECK(tasrl_exit_code(TASRL_E_NOT_CONVERGED) == 3);
    CHECK(std::strcmp(tasrl_status_name(TASRL_E_INVALID_ALPHA), "InvalidAlpha") == 0);
}

TEST_CASE("network handles and errors") {
    tasrl_network* net = nullptr;
    CHECK(tasrl_network_load("/nonexistent/feeder.json", &net) == TASRL_E_IO);
    CHECK(std::strlen(tasrl_last_error()) > 0);
    CHECK(net == nullptr);
    CHECK(tasrl_network_make("nope", 0, 0, &net) == TASRL_E_INVALID_INPUT);
    REQUIRE(tasrl_network_make("feeder13", 0, 0, &net) == TASRL_OK);
    int buses = 0, controlled = 0;
    CHECK(tasrl_network_size(net, &buses, &controlled) == TASRL_OK);
    CHECK(buses == 12);
    CHECK(controlled == 3);

    const auto dir = scratch("net");
    const std::string path = (dir / "f.json").string();
    CHECK(tasrl_network_save(net, path.c_str()) == TASRL_OK);
    tasrl_network* back = nullptr;
    CHECK(tasrl_network_load(path.c_str(), &back) == TASRL_OK);
    tasrl_network_free(back);
    tasrl_network_free(net);
    std::filesystem::remove_all(dir);
}

TEST_CASE("simulate, benchmark and sweep through the C interface") {
    tasrl_network* net = nullptr;
    REQUIRE(tasrl_network_make("feeder13", 0, 0, &net) == TASRL_OK);
    tasrl_policy* pol = nullptr;
    REQUIRE(tasrl_policy_initial(net, 8, 0.5, 0.1, &pol) == TASRL_OK);

    tasrl_run_options o;
    tasrl_run_options_default(&o);
    o.count = 5;
    char* s = nullptr;
    CHECK(tasrl_simulate(net, pol, &o, nullptr, &s) == TASRL_OK);
    CHECK(!take(s).empty());

    char* a = nullptr;
    char* b = nullptr;
    o.count = 20;
    CHECK(tasrl_benchmark(net, pol, &o, nullptr, &a) == TASRL_OK);
    CHECK(tasrl_benchmark(net, pol, &o, nullptr, &b) == TASRL_OK);
    CHECK(take(a) == take(b));

    o.alpha = 2.0;
    CHECK(tasrl_simulate(net, pol, &o, nullptr, &s) == TASRL_E_INVALID_ALPHA);
    o.alpha = 0.5;

    const double alphas[] = {0.1, 0.5};
    o.magnitude_lo = o.magnitude_hi = 0.12;
    char* sweep = nullptr;
    CHECK(tasrl_alpha_sweep(net, pol, &o, alphas, 2, nullptr, &sweep) == TASRL_OK);
    CHECK(take(sweep).find("holds=1") != std::string::npos);

    char* ss = nullptr;
    CHECK(tasrl_solve_steady_state(net, &o, "oracle", 1e-8, 1000, &ss) == TASRL_OK);
    CHECK(take(ss).find("\"q_star\"") != std::string::npos);
    CHECK(tasrl_solve_steady_state(net, &o, "pgd", 1e-8, 1, &ss) == TASRL_E_NOT_CONVERGED);
    tasrl_string_free(ss);

    tasrl_policy_free(pol);
    tasrl_network_free(net);
}

TEST_CASE("checkpoint load errors") {
    const auto dir = scratch("ck");
    tasrl_network* net = nullptr;
    REQUIRE(tasrl_network_make("feeder13", 0, 0, &net) == TASRL_OK);
    tasrl_network* big = nullptr;
    REQUIRE(tasrl_network_make("feeder123", 0, 0, &big) == TASRL_OK);
    tasrl_policy* pol = nullptr;
    REQUIRE(tasrl_policy_initial(net, 8, 0.5, 0.1, &pol) == TASRL_OK);
    const std::string path = (dir / "p.json").string();
    CHECK(tasrl_policy_save(pol, path.c_str()) == TASRL_OK);

    tasrl_policy* back = nullptr;
    CHECK(tasrl_policy_load(path.c_str(), net, &back) == TASRL_OK);
    tasrl_policy_free(back);
    CHECK(tasrl_policy_load(path.c_str(), big, &back) == TASRL_E_INVARIANT_VIOLATION);
    CHECK(std::string(tasrl_last_error()).find("controlled buses") != std::string::npos);

    std::ofstream(dir / "bad.json") << "{ not json";
    CHECK(tasrl_policy_load((dir / "bad.json").string().c_str(), net, &back) == TASRL_E_CORRUPT_CHECKPOINT);

    tasrl_policy_free(pol);
    tasrl_network_free(big);
    tasrl_network_free(net);
    std::filesystem::remove_all(dir);
}
