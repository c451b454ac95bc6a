#include "dp3/io.hpp"

#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <thread>

namespace dp3 {

unsigned thread_count() {
    if (const char* env = std::getenv("DP3_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1)
            throw ConfigError(std::string("DP3_THREADS must be a positive integer, got \"") +
                              env + "\"");
        return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? hw : 1u;
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn) {
    const std::size_t workers = std::min<std::size_t>(thread_count(), n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(body);
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

json to_json(cx z) { return json::array({z.real(), z.imag()}); }

cx cx_from_json(const json& j, const std::string& where) {
    if (j.is_number()) return cx{j.get<double>(), 0.0};
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ConfigError(where + " must be a number or a [re, im] pair");
    return cx{j[0].get<double>(), j[1].get<double>()};
}

json to_json(const EquationParams& p) {
    return json{{"a", to_json(p.a)},
                {"b", p.b},
                {"epsilon", p.epsilon},
                {"eps1", p.eps1},
                {"eps2", p.eps2}};
}

EquationParams params_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("params must be a JSON object");
    require_keys(j, {"a", "b", "epsilon", "eps1", "eps2"}, "params");
    EquationParams p;
    if (j.contains("a")) p.a = cx_from_json(j.at("a"), "params.a");
    if (j.contains("b")) {
        if (!j.at("b").is_number()) throw ConfigError("params.b must be a real number");
        p.b = j.at("b").get<double>();
    }
    if (j.contains("epsilon")) p.epsilon = j.at("epsilon").get<int>();
    if (j.contains("eps1")) p.eps1 = j.at("eps1").get<int>();
    if (j.contains("eps2")) p.eps2 = j.at("eps2").get<int>();
    p.validate();
    return p;
}

json to_json(const MonodromyData& md) {
    return json{{"a", to_json(md.a)},       {"s00", to_json(md.s00)},
                {"s0inf", to_json(md.s0inf)}, {"s1inf", to_json(md.s1inf)},
                {"g11", to_json(md.g11)},   {"g12", to_json(md.g12)},
                {"g21", to_json(md.g21)},   {"g22", to_json(md.g22)}};
}

MonodromyData monodromy_from_json(const json& j) {
    if (!j.is_object()) throw ConfigError("monodromy data must be a JSON object");
    const std::vector<std::string> keys = {"a",   "s00", "s0inf", "s1inf",
                                           "g11", "g12", "g21",   "g22"};
    require_keys(j, keys, "monodromy");
    MonodromyData md;
    for (const auto& k : keys)
        if (!j.contains(k)) throw ConfigError("monodromy data is missing key \"" + k + "\"");
    md.a = cx_from_json(j.at("a"), "monodromy.a");
    md.s00 = cx_from_json(j.at("s00"), "monodromy.s00");
    md.s0inf = cx_from_json(j.at("s0inf"), "monodromy.s0inf");
    md.s1inf = cx_from_json(j.at("s1inf"), "monodromy.s1inf");
    md.g11 = cx_from_json(j.at("g11"), "monodromy.g11");
    md.g12 = cx_from_json(j.at("g12"), "monodromy.g12");
    md.g21 = cx_from_json(j.at("g21"), "monodromy.g21");
    md.g22 = cx_from_json(j.at("g22"), "monodromy.g22");
    return md;
}

json to_json(const ManifoldReport& rep) {
    return json{{"residuals", rep.residuals}, {"worst", rep.worst}, {"pass", rep.pass}};
}

void require_keys(const json& j, const std::vector<std::string>& allowed,
                  const std::string& context) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const auto& k : allowed)
            if (it.key() == k) { known = true; break; }
        if (!known)
            throw ConfigError("unknown key \"" + it.key() + "\" in " + context);
    }
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string config_hash(const json& j) {
    // json::dump emits object keys in sorted order, so the digest is stable
    // against key insertion order.
    const std::uint64_t h = fnv1a(j.dump());
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot open \"" + path + "\" for writing");
    out << content;
    if (!out) throw ConfigError("failed while writing \"" + path + "\"");
}

}  // namespace dp3
