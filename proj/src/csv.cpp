#include "delay_spde/csv.hpp"

#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace delay_spde {

CsvWriter::CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path);
}

void CsvWriter::header(const std::vector<std::string>& names) { row(names); }

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out_ << ',';
        out_ << cells[i];
    }
    out_ << '\n';
}

std::string CsvWriter::num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string CsvWriter::num(std::uint64_t v) { return std::to_string(v); }
std::string CsvWriter::num(int v) { return std::to_string(v); }

std::uint64_t fnv1a64(const std::string& text) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fnv1a64_file: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return fnv1a64(buf.str());
}

void write_segment_csv(const std::string& path, const HistorySegment& seg) {
    CsvWriter csv(path);
    std::vector<std::string> head{"node", "weight"};
    for (int k = 1; k <= seg.space()->modes(); ++k) head.push_back("a_" + std::to_string(k));
    csv.header(head);
    for (int j = 0; j < seg.grid()->node_count(); ++j) {
        std::vector<std::string> row{CsvWriter::num(seg.grid()->nodes()(j)),
                                     CsvWriter::num(seg.grid()->weights()(j))};
        for (int k = 0; k < seg.space()->modes(); ++k)
            row.push_back(CsvWriter::num(seg.values()(k, j)));
        csv.row(row);
    }
}

} // namespace delay_spde
