#pragma once

// Event CSV format: header `f0,...,f{d-1},label[,weight]`, one event per
// line, LF endings, decimal-point floats printed with 17 significant digits
// so files round-trip and re-runs are byte-identical.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "momentpoly/errors.hpp"
#include "momentpoly/moment_engine.hpp"

namespace momentpoly {

struct EventTable {
    std::vector<Event> events;
    int dimension = 0;
    bool has_weight = false;
};

inline void write_events_csv(std::ostream& os, std::span<const Event> events, int dimension) {
    bool any_weight = false;
    for (const auto& e : events) any_weight = any_weight || e.weight != 1.0;
    for (int i = 0; i < dimension; ++i) os << 'f' << i << ',';
    os << "label";
    if (any_weight) os << ",weight";
    os << '\n';
    char buf[64];
    for (const auto& e : events) {
        if (e.features.size() != static_cast<std::size_t>(dimension))
            throw InputError("event dimension does not match CSV dimension");
        for (double v : e.features) {
            std::snprintf(buf, sizeof buf, "%.17g,", v);
            os << buf;
        }
        std::snprintf(buf, sizeof buf, "%.17g", e.label);
        os << buf;
        if (any_weight) {
            std::snprintf(buf, sizeof buf, ",%.17g", e.weight);
            os << buf;
        }
        os << '\n';
    }
}

inline void write_events_csv(const std::string& path, std::span<const Event> events,
                             int dimension) {
    std::ofstream os(path, std::ios::binary);  // binary: keep LF on every platform
    if (!os) throw InputError("cannot open '" + path + "' for writing");
    write_events_csv(os, events, dimension);
    if (!os) throw InputError("failed while writing '" + path + "'");
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline double parse_double(const std::string& token, std::size_t line_no) {
    if (token.empty())
        throw InputError("empty field on line " + std::to_string(line_no));
    char* end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size())
        throw InputError("malformed number '" + token + "' on line " + std::to_string(line_no));
    return v;
}

}  // namespace detail

inline EventTable read_events_csv(std::istream& is) {
    EventTable table;
    std::string line;
    if (!std::getline(is, line)) throw InputError("CSV is empty (missing header on line 1)");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = detail::split_csv_line(line);

    std::size_t n_features = 0;
    while (n_features < header.size() && header[n_features] == "f" + std::to_string(n_features))
        ++n_features;
    if (n_features == 0 || n_features >= header.size() || header[n_features] != "label")
        throw InputError("bad CSV header on line 1: expected f0,...,f{d-1},label[,weight]");
    if (header.size() == n_features + 2 && header[n_features + 1] == "weight")
        table.has_weight = true;
    else if (header.size() != n_features + 1)
        throw InputError("bad CSV header on line 1: unexpected trailing columns");

    table.dimension = static_cast<int>(n_features);
    const std::size_t expected = n_features + 1 + (table.has_weight ? 1 : 0);
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto fields = detail::split_csv_line(line);
        if (fields.size() != expected)
            throw InputError("expected " + std::to_string(expected) + " fields but got " +
                             std::to_string(fields.size()) + " on line " +
                             std::to_string(line_no));
        Event e;
        e.features.resize(n_features);
        for (std::size_t i = 0; i < n_features; ++i)
            e.features[i] = detail::parse_double(fields[i], line_no);
        e.label = detail::parse_double(fields[n_features], line_no);
        if (table.has_weight) e.weight = detail::parse_double(fields[n_features + 1], line_no);
        table.events.push_back(std::move(e));
    }
    return table;
}

inline EventTable read_events_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw InputError("cannot open '" + path + "' for reading");
    return read_events_csv(is);
}

}  // namespace momentpoly
