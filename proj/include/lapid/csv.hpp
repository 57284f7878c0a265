#pragma once

// CSV round-tripping for trajectories and fields. All floats are written with 17
// significant digits so read(write(x)) is bit-exact.

#include "lapid/core.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace lapid {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& tok, std::size_t line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        while (pos < tok.size() && (tok[pos] == ' ' || tok[pos] == '\r')) ++pos;
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw ParseError("line " + std::to_string(line_no) + ": bad number '" + tok + "'");
    }
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace detail

/// Header "t,<name1>,..."; one row per instant.
inline void write_csv(const TimeSeriesSet& data, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("write_csv: cannot open " + path);
    f << "t";
    for (const auto& n : data.names) f << "," << n;
    f << "\n";
    for (std::size_t j = 0; j < data.grid.size(); ++j) {
        f << format_double(data.grid[j]);
        for (Eigen::Index c = 0; c < data.states.rows(); ++c)
            f << "," << format_double(data.states(c, static_cast<Eigen::Index>(j)));
        f << "\n";
    }
}

inline TimeSeriesSet read_csv_series(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line.empty()) throw ParseError("line 1: empty file");
    auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header[0] != "t")
        throw ParseError("line 1: expected header 't,<channels...>'");
    std::vector<std::string> names(header.begin() + 1, header.end());

    std::vector<double> t;
    std::vector<std::vector<double>> cols(names.size());
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto toks = detail::split_csv_line(line);
        if (toks.size() != names.size() + 1)
            throw ShapeError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(names.size() + 1) + " fields");
        const double tv = parse_double(toks[0], line_no);
        if (!t.empty() && !(tv > t.back()))
            throw ParseError("line " + std::to_string(line_no) + ": time column not increasing");
        t.push_back(tv);
        for (std::size_t c = 0; c < names.size(); ++c)
            cols[c].push_back(parse_double(toks[c + 1], line_no));
    }
    if (t.size() < 4) throw ParseError("fewer than 4 data rows");
    Eigen::MatrixXd states(static_cast<Eigen::Index>(names.size()),
                           static_cast<Eigen::Index>(t.size()));
    for (std::size_t c = 0; c < names.size(); ++c)
        for (std::size_t j = 0; j < t.size(); ++j)
            states(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(j)) = cols[c][j];
    return TimeSeriesSet(TimeGrid(std::move(t)), std::move(states), std::move(names));
}

/// First row carries the x grid ("t\x,x1,x2,..."), then one row per instant.
inline void write_csv(const SpatioTemporalField& field, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw Error("write_csv: cannot open " + path);
    f << "t\\x";
    for (double x : field.xgrid) f << "," << format_double(x);
    f << "\n";
    for (std::size_t j = 0; j < field.nt(); ++j) {
        f << format_double(field.tgrid[j]);
        for (std::size_t i = 0; i < field.nx(); ++i)
            f << "," << format_double(field.values(static_cast<Eigen::Index>(i),
                                                   static_cast<Eigen::Index>(j)));
        f << "\n";
    }
}

inline SpatioTemporalField read_csv_field(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ParseError("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(f, line) || line.empty()) throw ParseError("line 1: empty file");
    auto header = detail::split_csv_line(line);
    if (header.size() < 2 || header[0] != "t\\x")
        throw ParseError("line 1: expected header 't\\x,<xgrid...>'");
    std::vector<double> xg;
    for (std::size_t i = 1; i < header.size(); ++i) xg.push_back(parse_double(header[i], 1));

    std::vector<double> t;
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 1;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        auto toks = detail::split_csv_line(line);
        if (toks.size() != xg.size() + 1)
            throw ShapeError("line " + std::to_string(line_no) + ": expected " +
                             std::to_string(xg.size() + 1) + " fields");
        const double tv = parse_double(toks[0], line_no);
        if (!t.empty() && !(tv > t.back()))
            throw ParseError("line " + std::to_string(line_no) + ": time column not increasing");
        t.push_back(tv);
        std::vector<double> vals(xg.size());
        for (std::size_t i = 0; i < xg.size(); ++i) vals[i] = parse_double(toks[i + 1], line_no);
        rows.push_back(std::move(vals));
    }
    if (t.size() < 4) throw ParseError("fewer than 4 data rows");
    Eigen::MatrixXd values(static_cast<Eigen::Index>(xg.size()),
                           static_cast<Eigen::Index>(t.size()));
    for (std::size_t j = 0; j < t.size(); ++j)
        for (std::size_t i = 0; i < xg.size(); ++i)
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[j][i];
    return SpatioTemporalField(TimeGrid(std::move(t)), std::move(xg), std::move(values));
}

}  // namespace lapid
