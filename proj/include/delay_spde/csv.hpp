#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "delay_spde/weights.hpp"

namespace delay_spde {

/// Deterministic CSV emission: fixed headers, %.17g doubles, no locale.
class CsvWriter {
public:
    explicit CsvWriter(const std::string& path);

    void header(const std::vector<std::string>& names);
    void row(const std::vector<std::string>& cells);

    static std::string num(double v);
    static std::string num(std::uint64_t v);
    static std::string num(int v);

private:
    std::ofstream out_;
};

std::uint64_t fnv1a64(const std::string& text);
std::uint64_t fnv1a64_file(const std::string& path);

/// Columnar segment dump: node, weight, then one coefficient column per mode.
void write_segment_csv(const std::string& path, const HistorySegment& seg);

} // namespace delay_spde
