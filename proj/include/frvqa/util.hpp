// Copyright 2026 The FRVQA Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace frvqa {

// Domain error. Anything thrown as Error maps to exit code 1 in the CLI;
// programming errors stay as assertions.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

inline void require(bool cond, const std::string& msg) {
    if (!cond) fail(msg);
}

// ---------------------------------------------------------------------------
// Deterministic RNG. splitmix64 core with explicit distributions, so results
// are identical across standard libraries (std::*_distribution is not).
// ---------------------------------------------------------------------------

class Rng {
  public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform integer in [0, n), unbiased (rejection sampling).
    uint64_t below(uint64_t n) {
        if (n == 0) fail("Rng::below: n must be positive");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t v;
        do {
            v = next_u64();
        } while (v >= limit);
        return v % n;
    }

    // Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal, Box-Muller with a cached spare.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        u2 = uniform();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(2.0 * M_PI * u2);
        has_spare_ = true;
        return mag * std::cos(2.0 * M_PI * u2);
    }

    bool bernoulli(double p) { return uniform() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[below(i)]);
        }
    }

  private:
    uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// FNV-1a, used for stable id hashing and config fingerprints.
inline uint64_t hash64(std::string_view s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline uint64_t mix_seed(uint64_t seed, std::string_view salt) {
    return hash64(salt) ^ (seed * 0x9e3779b97f4a7c15ULL + 0x517cc1b727220a95ULL);
}

// ---------------------------------------------------------------------------
// Small string helpers
// ---------------------------------------------------------------------------

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    size_t start = 0;
    for (size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == sep) {
            out.emplace_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
    return s.size() >= prefix.size() && s.substr(0, prefix.size()) == prefix;
}

inline std::string replace_all(std::string s, std::string_view needle, std::string_view repl) {
    if (needle.empty()) return s;
    size_t pos = 0;
    while ((pos = s.find(needle, pos)) != std::string::npos) {
        s.replace(pos, needle.size(), repl);
        pos += repl.size();
    }
    return s;
}

inline double parse_double(const std::string& s, const std::string& what) {
    try {
        size_t idx = 0;
        double v = std::stod(s, &idx);
        while (idx < s.size() && std::isspace(static_cast<unsigned char>(s[idx]))) ++idx;
        if (idx != s.size()) fail("trailing characters");
        return v;
    } catch (const std::exception&) {
        fail("invalid number for " + what + ": '" + s + "'");
    }
}

inline long long parse_int(const std::string& s, const std::string& what) {
    try {
        size_t idx = 0;
        long long v = std::stoll(s, &idx);
        if (idx != s.size()) fail("trailing characters");
        return v;
    } catch (const std::exception&) {
        fail("invalid integer for " + what + ": '" + s + "'");
    }
}

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

// ---------------------------------------------------------------------------
// CSV, minimal dialect: comma separator, double-quote escaping only when a
// field contains comma/quote/newline. First row is a header.
// ---------------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const {
        for (size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return static_cast<int>(i);
        }
        fail("CSV is missing column '" + name + "'");
    }
};

inline std::string csv_escape(const std::string& field) {
    if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

inline std::vector<std::string> parse_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open CSV file: " + path.string());
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        auto fields = parse_csv_line(line);
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    return table;
}

inline void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream out(path);
    if (!out) fail("cannot write CSV file: " + path.string());
    auto write_row = [&](const std::vector<std::string>& row) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out << ',';
            out << csv_escape(row[i]);
        }
        out << '\n';
    };
    write_row(table.header);
    for (const auto& row : table.rows) write_row(row);
}

// ---------------------------------------------------------------------------
// File helpers
// ---------------------------------------------------------------------------

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail("cannot write file: " + path.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) fail("short write to " + path.string());
}

// Write-then-rename so a crash never leaves a half-written file in place.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    auto tmp = path;
    tmp += ".tmp";
    write_file(tmp, content);
    std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// External process execution with captured stdout/stderr.
// ---------------------------------------------------------------------------

struct ProcessResult {
    int exit_code = -1;
    std::string out;
    std::string err;
    bool ok() const { return exit_code == 0; }
};

inline ProcessResult run_process(const std::string& command) {
    namespace fs = std::filesystem;
    static std::atomic<uint64_t> counter{0};
    fs::path errfile = fs::temp_directory_path() /
                       ("frvqa_stderr_" + std::to_string(::getpid()) + "_" +
                        std::to_string(counter.fetch_add(1)) + ".txt");
    std::string shell_cmd = command + " 2>" + errfile.string();
    ProcessResult result;
    FILE* pipe = popen(shell_cmd.c_str(), "r");
    if (!pipe) fail("failed to launch process: " + command);
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) {
        result.out.append(buf, n);
    }
    int status = pclose(pipe);
    if (status == -1) {
        result.exit_code = -1;
    } else if (WIFEXITED(status)) {
        result.exit_code = WEXITSTATUS(status);
    } else {
        result.exit_code = 128;
    }
    std::error_code ec;
    if (fs::exists(errfile, ec)) {
        std::ifstream in(errfile);
        std::ostringstream ss;
        ss << in.rdbuf();
        result.err = ss.str();
        fs::remove(errfile, ec);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Key-value configuration file: "[section]" lines open sections, "key = value"
// lines populate them. '#' and ';' start comments. One file is shared by all
// pipeline stages; command-line flags override file values.
// ---------------------------------------------------------------------------

class Config {
  public:
    Config() = default;

    static Config load(const std::filesystem::path& path) {
        Config cfg;
        cfg.parse(read_file(path));
        return cfg;
    }

    void parse(const std::string& text) {
        std::string section;
        for (const auto& raw : split(text, '\n')) {
            std::string line = trim(raw);
            if (line.empty() || line[0] == '#' || line[0] == ';') continue;
            if (line.front() == '[' && line.back() == ']') {
                section = trim(line.substr(1, line.size() - 2));
                sections_[section];
                continue;
            }
            auto eq = line.find('=');
            if (eq == std::string::npos) fail("config line is not 'key = value': " + line);
            sections_[section][trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
        }
    }

    bool has(const std::string& section, const std::string& key) const {
        auto it = sections_.find(section);
        return it != sections_.end() && it->second.count(key) > 0;
    }

    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback = {}) const {
        auto it = sections_.find(section);
        if (it == sections_.end()) return fallback;
        auto kv = it->second.find(key);
        return kv == it->second.end() ? fallback : kv->second;
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        return has(section, key) ? parse_double(get(section, key), section + "." + key) : fallback;
    }

    long long get_int(const std::string& section, const std::string& key, long long fallback) const {
        return has(section, key) ? parse_int(get(section, key), section + "." + key) : fallback;
    }

    void set(const std::string& section, const std::string& key, const std::string& value) {
        sections_[section][key] = value;
    }

    std::vector<std::string> section_names() const {
        std::vector<std::string> names;
        for (const auto& [name, _] : sections_) names.push_back(name);
        return names;
    }

    const std::map<std::string, std::string>& section(const std::string& name) const {
        static const std::map<std::string, std::string> empty;
        auto it = sections_.find(name);
        return it == sections_.end() ? empty : it->second;
    }

    // Stable fingerprint of the resolved configuration, for run manifests.
    std::string fingerprint() const {
        std::ostringstream ss;
        for (const auto& [name, kv] : sections_) {
            for (const auto& [k, v] : kv) ss << name << '\x1f' << k << '\x1f' << v << '\x1e';
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(hash64(ss.str())));
        return buf;
    }

  private:
    std::map<std::string, std::map<std::string, std::string>> sections_;
};

}  // namespace frvqa
