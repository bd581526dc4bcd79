#pragma once

#include <chrono>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cdet {

/// Flat key-value report: one fact per line, in insertion order, so every
/// value can be grepped exactly.
struct TestReport {
    std::vector<std::pair<std::string, std::string>> fields;

    void add(const std::string& key, const std::string& value) {
        fields.emplace_back(key, value);
    }
    void add(const std::string& key, const char* value) { fields.emplace_back(key, value); }
    void add(const std::string& key, double value) {
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.10g", value);
        fields.emplace_back(key, buf);
    }
    void add(const std::string& key, bool value) {
        fields.emplace_back(key, value ? "true" : "false");
    }
    template <typename Int, typename = std::enable_if_t<std::is_integral_v<Int>>>
    void add(const std::string& key, Int value) {
        fields.emplace_back(key, std::to_string(value));
    }

    const std::string* find(const std::string& key) const {
        for (const auto& [k, v] : fields)
            if (k == key) return &v;
        return nullptr;
    }

    std::string to_string() const {
        std::ostringstream os;
        for (const auto& [k, v] : fields) os << k << " = " << v << '\n';
        return os.str();
    }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("report: cannot open " + path);
        out << to_string();
    }
};

inline std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    char buf[32];
    std::tm tm_utc{};
    gmtime_r(&t, &tm_utc);
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
    return buf;
}

}  // namespace cdet
