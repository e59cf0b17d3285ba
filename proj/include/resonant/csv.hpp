#pragma once

// Plain CSV in and out, plus gnuplot companion scripts for the figure data.
// Numbers are written in shortest round-trip form so that outputs are
// byte-identical across runs.

#include <charconv>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "resonant/errors.hpp"

namespace resonant {

inline std::string format_number(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc{}) return "nan";
    return std::string(buf, res.ptr);
}

class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, std::initializer_list<std::string> header)
        : path_(path) {
        if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
        out_.open(path, std::ios::out | std::ios::trunc);
        if (!out_) throw IoError("cannot write " + path.string());
        bool first = true;
        for (const auto& h : header) {
            out_ << (first ? "" : ",") << h;
            first = false;
        }
        out_ << '\n';
        columns_ = header.size();
    }

    /// Empty optionals are written as empty cells (missing values).
    void row(std::initializer_list<std::optional<double>> values) {
        if (values.size() != columns_) {
            throw IoError("row width does not match the header of " + path_.string());
        }
        bool first = true;
        for (const auto& v : values) {
            if (!first) out_ << ',';
            if (v) out_ << format_number(*v);
            first = false;
        }
        out_ << '\n';
    }

    /// Blank line: a data-block separator for gnuplot, skipped by read_csv.
    void block_break() { out_ << '\n'; }

    void close() {
        out_.close();
        if (out_.fail()) throw IoError("failed to finish " + path_.string());
    }

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    std::ofstream out_;
    std::size_t columns_ = 0;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw IoError("CSV has no column '" + name + "'");
    }

    std::vector<double> values(const std::string& name) const {
        const std::size_t j = column(name);
        std::vector<double> out;
        out.reserve(rows.size());
        for (const auto& r : rows) out.push_back(r.at(j));
        return out;
    }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    CsvTable t;
    std::string line;
    if (!std::getline(in, line)) throw IoError(path.string() + " is empty");
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) t.header.push_back(cell);
    }
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> r;
        std::size_t start = 0;
        while (start <= line.size()) {
            std::size_t end = line.find(',', start);
            if (end == std::string::npos) end = line.size();
            const std::string cell = line.substr(start, end - start);
            start = end + 1;
            if (cell.empty()) {
                r.push_back(std::numeric_limits<double>::quiet_NaN());
                continue;
            }
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size()) {
                if (cell == "nan") {
                    r.push_back(std::numeric_limits<double>::quiet_NaN());
                    continue;
                }
                throw IoError(path.string() + ":" + std::to_string(lineno) + ": bad number '" +
                              cell + "'");
            }
            r.push_back(v);
        }
        if (r.size() != t.header.size()) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": wrong number of cells");
        }
        t.rows.push_back(std::move(r));
    }
    return t;
}

/// gnuplot script next to a CSV. `plot` is the body of the `verb` command
/// (plot or splot), referring to data files relative to the script.
inline void write_gnuplot(const std::filesystem::path& script, const std::string& title,
                          const std::string& xlabel, const std::string& ylabel,
                          const std::string& plot, const std::string& extra = {},
                          const std::string& verb = "plot") {
    std::ofstream out(script, std::ios::out | std::ios::trunc);
    if (!out) throw IoError("cannot write " + script.string());
    out << "set datafile separator ','\n"
        << "set key autotitle columnhead\n"
        << "set title '" << title << "'\n"
        << "set xlabel '" << xlabel << "'\n"
        << "set ylabel '" << ylabel << "'\n";
    if (!extra.empty()) out << extra << (extra.back() == '\n' ? "" : "\n");
    out << verb << ' ' << plot << "\n";
    if (!out) throw IoError("failed to write " + script.string());
}

}  // namespace resonant
