#pragma once

#include <charconv>
#include <fstream>
#include <string>

#include "fuzzydp/errors.hpp"

namespace fuzzydp {

/// Shortest round-trip decimal form, locale-independent, '.' radix point.
inline std::string num_to_string(double x) {
    char buf[40];
    auto res = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, res.ptr);
}

inline std::string num_to_string(int x) { return std::to_string(x); }
inline std::string num_to_string(long x) { return std::to_string(x); }
inline std::string num_to_string(unsigned long x) { return std::to_string(x); }

/// Minimal CSV emitter: header row first, then one row per record.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::string& header) : out_(path) {
        if (!out_) throw Error("cannot open for writing: " + path);
        out_ << header << '\n';
    }

    template <typename... Ts>
    void row(const Ts&... fields) {
        bool first = true;
        ((out_ << (first ? "" : ","), first = false, write(fields)), ...);
        out_ << '\n';
    }

private:
    void write(const std::string& s) { out_ << s; }
    void write(const char* s) { out_ << s; }
    void write(double x) { out_ << num_to_string(x); }
    void write(int x) { out_ << x; }
    void write(long x) { out_ << x; }
    void write(unsigned long x) { out_ << x; }

    std::ofstream out_;
};

}  // namespace fuzzydp
