#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mcorr/detail/numeric.hpp"
#include "mcorr/errors.hpp"

namespace mcorr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// n x d sample matrix with named columns. Rows are realizations, columns are
/// coordinates. Every entry is finite and names are unique.
class Dataset {
public:
    Dataset(Matrix values, std::vector<std::string> column_names)
        : values_(std::move(values)), names_(std::move(column_names)) {
        validate();
    }

    /// Columns are named x1..xd.
    explicit Dataset(Matrix values) : values_(std::move(values)) {
        for (Eigen::Index j = 0; j < values_.cols(); ++j) names_.push_back("x" + std::to_string(j + 1));
        validate();
    }

    const Matrix& values() const noexcept { return values_; }
    const std::vector<std::string>& column_names() const noexcept { return names_; }
    Eigen::Index rows() const noexcept { return values_.rows(); }
    Eigen::Index cols() const noexcept { return values_.cols(); }
    auto column(Eigen::Index j) const { return values_.col(j); }

private:
    void validate() const {
        if (values_.rows() < 1) throw InvalidArgument("dataset needs at least one row");
        if (values_.cols() < 1) throw InvalidArgument("dataset needs at least one column");
        if (static_cast<Eigen::Index>(names_.size()) != values_.cols())
            throw InvalidArgument("column name count does not match column count");
        std::set<std::string> seen;
        for (const auto& n : names_)
            if (!seen.insert(n).second) throw InvalidArgument("duplicate column name '" + n + "'");
        for (Eigen::Index j = 0; j < values_.cols(); ++j)
            for (Eigen::Index i = 0; i < values_.rows(); ++i)
                if (!std::isfinite(values_(i, j)))
                    throw InvalidArgument("non-finite value at row " + std::to_string(i + 1) + ", column '" +
                                          names_[static_cast<std::size_t>(j)] + "'");
    }

    Matrix values_;
    std::vector<std::string> names_;
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        cells.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace detail

/// Reads a comma-delimited file whose first row holds column names and whose
/// remaining rows are decimal numbers. Row numbers in errors are 1-based file lines.
inline Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty CSV: missing header row", 1, 0);
    std::vector<std::string> names;
    for (auto cell : detail::split_commas(line)) names.emplace_back(detail::trim(cell));
    const std::size_t d = names.size();

    std::vector<double> flat;
    std::size_t file_row = 1;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++file_row;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_commas(line);
        if (cells.size() != d)
            throw ParseError("row " + std::to_string(file_row) + " has " + std::to_string(cells.size()) +
                                 " cells, expected " + std::to_string(d),
                             file_row, 0);
        for (std::size_t j = 0; j < d; ++j) {
            const auto cell = detail::trim(cells[j]);
            double v = 0.0;
            const auto* first = cell.data();
            const auto* last = cell.data() + cell.size();
            if (!cell.empty() && *first == '+') ++first;
            const auto res = std::from_chars(first, last, v);
            if (cell.empty() || res.ec != std::errc() || res.ptr != last || !std::isfinite(v))
                throw ParseError("non-numeric cell '" + std::string(cell) + "' at row " + std::to_string(file_row) +
                                     ", column " + std::to_string(j + 1) + " ('" + names[j] + "')",
                                 file_row, j + 1);
            flat.push_back(v);
        }
        ++n;
    }
    if (n == 0) throw ParseError("CSV has a header but no data rows", file_row, 0);
    Matrix values(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = flat[i * d + j];
    return Dataset(std::move(values), std::move(names));
}

inline Dataset read_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open '" + path + "'");
    try {
        return read_csv(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ":" + std::to_string(e.row()) + ": " + e.what(), e.row(), e.column());
    }
}

/// Writes in the dialect read_csv accepts, with shortest round-trip numbers.
inline void write_csv(std::ostream& out, const Dataset& data) {
    const auto& names = data.column_names();
    for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
    out << '\n';
    const auto& v = data.values();
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        for (Eigen::Index j = 0; j < v.cols(); ++j) out << (j ? "," : "") << detail::format_double(v(i, j));
        out << '\n';
    }
}

} // namespace mcorr
