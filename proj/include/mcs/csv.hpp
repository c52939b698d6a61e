#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "mcs/errors.hpp"

namespace mcs {

inline constexpr const char* kVersion = "0.1.0";

// CSV writer with a reproducibility header comment. Floats go out with 17
// significant digits so reruns are byte-identical.
class CsvWriter {
public:
    CsvWriter(const std::string& path, std::uint64_t config_hash, std::uint64_t seed,
              const std::vector<std::string>& columns)
        : out_(path) {
        if (!out_) throw ConfigError("cannot open output file '" + path + "'");
        char head[160];
        std::snprintf(head, sizeof(head), "# mcslab %s config_hash=%016llx seed=%llu\n", kVersion,
                      static_cast<unsigned long long>(config_hash),
                      static_cast<unsigned long long>(seed));
        out_ << head;
        for (std::size_t i = 0; i < columns.size(); ++i)
            out_ << columns[i] << (i + 1 < columns.size() ? "," : "\n");
    }

    void row(const std::vector<double>& values) {
        char buf[32];
        for (std::size_t i = 0; i < values.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
            out_ << buf << (i + 1 < values.size() ? "," : "\n");
        }
    }

    void mixed_row(const std::vector<std::string>& values) {
        for (std::size_t i = 0; i < values.size(); ++i)
            out_ << values[i] << (i + 1 < values.size() ? "," : "\n");
    }

    static std::string num(double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }

private:
    std::ofstream out_;
};

} // namespace mcs
