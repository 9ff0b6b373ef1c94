#pragma once
#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <istream>
#include <limits>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace simpscan {

enum class ColumnRole { outcome, covariate, ignored };

struct ColumnSpec {
    std::string name;
    ColumnRole role = ColumnRole::covariate;
};

// Schema applied while loading a CSV: which column is the binary outcome and
// which covariates to keep. An empty include list means "all covariates".
struct SchemaConfig {
    std::string outcome;
    std::vector<std::string> include;
    std::vector<std::string> exclude;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return s.substr(b, e - b);
}

// Parses a full cell as a double. Empty or unparseable cells and non-finite
// values come back as NaN (the in-memory missing marker).
inline double parse_cell(const std::string& raw) {
    const std::string s = trim(raw);
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) return std::numeric_limits<double>::quiet_NaN();
    if (!std::isfinite(v)) return std::numeric_limits<double>::quiet_NaN();
    return v;
}

// Quotes a field for CSV output when it contains a delimiter, quote, or
// line break.
inline std::string csv_escape(const std::string& s) {
    bool needs = false;
    for (char c : s)
        if (c == ',' || c == '"' || c == '\n' || c == '\r') { needs = true; break; }
    if (!needs) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out += c;
    }
    out += '"';
    return out;
}

// Outcome cells accept exactly "0", "1", "true", "false".
inline int parse_outcome_cell(const std::string& raw) {
    const std::string s = trim(raw);
    if (s == "0" || s == "false") return 0;
    if (s == "1" || s == "true") return 1;
    return -1;
}

// RFC 4180 record reader: quoted fields, doubled-quote escapes, CRLF or LF
// record ends, newlines allowed inside quoted fields.
inline std::vector<std::vector<std::string>> read_csv_records(std::istream& in) {
    std::vector<std::vector<std::string>> records;
    std::vector<std::string> rec;
    std::string field;
    bool in_quotes = false;
    bool any = false;
    int c;
    while ((c = in.get()) != EOF) {
        const char ch = static_cast<char>(c);
        if (in_quotes) {
            if (ch == '"') {
                if (in.peek() == '"') { field += '"'; in.get(); }
                else in_quotes = false;
            } else {
                field += ch;
            }
            continue;
        }
        switch (ch) {
            case '"': in_quotes = true; any = true; break;
            case ',': rec.push_back(field); field.clear(); any = true; break;
            case '\r': break;
            case '\n':
                rec.push_back(field); field.clear();
                records.push_back(std::move(rec)); rec.clear();
                any = false;
                break;
            default: field += ch; any = true; break;
        }
    }
    if (in_quotes) throw ParseError("unterminated quoted field at end of input", records.size() + 1);
    if (any || !field.empty() || !rec.empty()) {
        rec.push_back(field);
        records.push_back(std::move(rec));
    }
    return records;
}

class Fnv1a64 {
public:
    void bytes(const void* data, std::size_t len) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < len; ++i) {
            h_ ^= p[i];
            h_ *= 1099511628211ull;
        }
    }
    void str(const std::string& s) {
        const std::uint64_t n = s.size();
        bytes(&n, sizeof n);
        bytes(s.data(), s.size());
    }
    void u64(std::uint64_t v) { bytes(&v, sizeof v); }
    void f64(double v) {
        // canonical NaN so every missing cell hashes the same
        if (std::isnan(v)) { u64(0x7ff8000000000000ull); return; }
        std::uint64_t bits;
        static_assert(sizeof bits == sizeof v);
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    std::uint64_t value() const { return h_; }
private:
    std::uint64_t h_ = 1469598103934665603ull;
};

} // namespace detail

// Immutable columnar table: one binary outcome, numeric covariates.
// Missing covariate cells are stored as NaN; outcome cells are never missing.
class Dataset {
public:
    Dataset(std::vector<ColumnSpec> columns,
            std::vector<double> outcome,
            std::vector<std::vector<double>> covariate_data)
        : columns_(std::move(columns)),
          outcome_(std::move(outcome)),
          data_(std::move(covariate_data)) {
        n_rows_ = outcome_.size();
        validate();
        for (std::size_t i = 0; i < columns_.size(); ++i) index_[columns_[i].name] = i;
    }

    // Assembles a dataset from an outcome vector plus named covariate vectors.
    static Dataset from_columns(const std::string& outcome_name,
                                std::vector<double> outcome,
                                std::vector<std::pair<std::string, std::vector<double>>> covariates) {
        std::vector<ColumnSpec> cols;
        std::vector<std::vector<double>> data;
        cols.push_back({outcome_name, ColumnRole::outcome});
        data.emplace_back();
        for (auto& [name, values] : covariates) {
            cols.push_back({name, ColumnRole::covariate});
            data.push_back(std::move(values));
        }
        return Dataset(std::move(cols), std::move(outcome), std::move(data));
    }

    std::size_t n_rows() const noexcept { return n_rows_; }
    const std::vector<ColumnSpec>& columns() const noexcept { return columns_; }
    const std::vector<double>& outcome() const noexcept { return outcome_; }

    const std::vector<double>& covariate(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw UnknownColumn("unknown column '" + name + "'");
        if (columns_[it->second].role != ColumnRole::covariate)
            throw UnknownColumn("column '" + name + "' is not a covariate");
        return data_[it->second];
    }

    std::vector<std::string> covariate_names() const {
        std::vector<std::string> out;
        for (const auto& c : columns_)
            if (c.role == ColumnRole::covariate) out.push_back(c.name);
        return out;
    }

    // Stable content hash of the parsed table; invariant to the file path the
    // data came from.
    std::string fingerprint() const {
        detail::Fnv1a64 h;
        h.str("simpscan.dataset.v1");
        h.u64(n_rows_);
        h.u64(columns_.size());
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            h.str(columns_[i].name);
            h.u64(static_cast<std::uint64_t>(columns_[i].role));
            if (columns_[i].role == ColumnRole::covariate)
                for (double v : data_[i]) h.f64(v);
        }
        for (double v : outcome_) h.f64(v);
        char buf[17];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(h.value()));
        return std::string(buf);
    }

private:
    void validate() const {
        if (n_rows_ < 1) throw SchemaError("dataset must contain at least one row");
        if (columns_.size() != data_.size())
            throw SchemaError("column spec / data length mismatch");
        std::size_t outcome_count = 0;
        std::unordered_map<std::string, int> seen;
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            const auto& c = columns_[i];
            if (c.name.empty()) throw SchemaError("column names must be non-empty");
            if (++seen[c.name] > 1) throw SchemaError("duplicate column name '" + c.name + "'");
            if (c.role == ColumnRole::outcome) ++outcome_count;
            if (c.role == ColumnRole::covariate && data_[i].size() != n_rows_)
                throw SchemaError("column '" + c.name + "' length does not match row count");
        }
        if (outcome_count != 1) throw SchemaError("exactly one outcome column required");
        for (double v : outcome_)
            if (v != 0.0 && v != 1.0) throw SchemaError("outcome values must be 0 or 1");
    }

    std::vector<ColumnSpec> columns_;
    std::size_t n_rows_ = 0;
    std::vector<double> outcome_;
    std::vector<std::vector<double>> data_;
    std::unordered_map<std::string, std::size_t> index_;
};

// Per-pair working set: the surviving rows of (x_j, x_c, y) after dropping
// rows with a missing or non-finite value in either covariate.
struct PairView {
    std::string x_j_name;
    std::string x_c_name;
    std::vector<double> x_j;
    std::vector<double> x_c;
    std::vector<double> y;
    std::vector<std::size_t> rows;  // source row indices in the dataset
    std::size_t n = 0;
};

inline PairView pair_view(const Dataset& ds, const std::string& x_j_name,
                          const std::string& x_c_name) {
    if (x_j_name == x_c_name)
        throw SameColumn("x_j and x_c must name different covariates (got '" + x_j_name + "')");
    const auto& xj = ds.covariate(x_j_name);
    const auto& xc = ds.covariate(x_c_name);
    const auto& y = ds.outcome();
    PairView pv;
    pv.x_j_name = x_j_name;
    pv.x_c_name = x_c_name;
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        if (!std::isfinite(xj[i]) || !std::isfinite(xc[i])) continue;
        pv.x_j.push_back(xj[i]);
        pv.x_c.push_back(xc[i]);
        pv.y.push_back(y[i]);
        pv.rows.push_back(i);
    }
    pv.n = pv.rows.size();
    return pv;
}

inline Dataset parse_csv(std::istream& in, const SchemaConfig& schema,
                         std::ostream& warnings = std::cerr) {
    if (schema.outcome.empty()) throw SchemaError("outcome column name required");
    auto records = detail::read_csv_records(in);
    if (records.empty()) throw SchemaError("empty input: header row required");

    std::vector<std::string> header;
    header.reserve(records[0].size());
    for (const auto& h : records[0]) header.push_back(detail::trim(h));

    std::unordered_map<std::string, int> seen;
    for (const auto& name : header) {
        if (name.empty()) throw SchemaError("header contains an empty column name");
        if (++seen[name] > 1) throw SchemaError("duplicate column '" + name + "' in header");
    }
    if (!seen.count(schema.outcome))
        throw SchemaError("outcome column '" + schema.outcome + "' not found in header");
    for (const auto& inc : schema.include)
        if (!seen.count(inc)) throw SchemaError("include column '" + inc + "' not found in header");

    const std::size_t ncols = header.size();
    const std::size_t nrows = records.size() - 1;
    if (nrows == 0) throw SchemaError("no data rows");

    auto listed = [](const std::vector<std::string>& list, const std::string& name) {
        return std::find(list.begin(), list.end(), name) != list.end();
    };

    std::vector<ColumnSpec> cols(ncols);
    std::vector<std::vector<double>> data(ncols);
    std::vector<double> outcome(nrows);
    std::size_t outcome_idx = 0;
    for (std::size_t c = 0; c < ncols; ++c) {
        cols[c].name = header[c];
        if (header[c] == schema.outcome) {
            cols[c].role = ColumnRole::outcome;
            outcome_idx = c;
        } else if (listed(schema.exclude, header[c]) ||
                   (!schema.include.empty() && !listed(schema.include, header[c]))) {
            cols[c].role = ColumnRole::ignored;
        } else {
            cols[c].role = ColumnRole::covariate;
            data[c].resize(nrows);
        }
    }

    for (std::size_t r = 0; r < nrows; ++r) {
        const auto& rec = records[r + 1];
        const std::size_t file_row = r + 2;  // header is row 1
        if (rec.size() != ncols)
            throw ParseError("row " + std::to_string(file_row) + " has " +
                                 std::to_string(rec.size()) + " fields, expected " +
                                 std::to_string(ncols),
                             file_row);
        const int yv = detail::parse_outcome_cell(rec[outcome_idx]);
        if (yv < 0)
            throw ParseError("outcome value '" + detail::trim(rec[outcome_idx]) +
                                 "' at row " + std::to_string(file_row) +
                                 " is not binary (expected 0/1/true/false)",
                             file_row);
        outcome[r] = static_cast<double>(yv);
        for (std::size_t c = 0; c < ncols; ++c)
            if (cols[c].role == ColumnRole::covariate)
                data[c][r] = detail::parse_cell(rec[c]);
    }

    // Demote columns with no numeric content at all: the scan only handles
    // numeric covariates.
    for (std::size_t c = 0; c < ncols; ++c) {
        if (cols[c].role != ColumnRole::covariate) continue;
        bool any_numeric = false;
        for (double v : data[c])
            if (std::isfinite(v)) { any_numeric = true; break; }
        if (!any_numeric) {
            warnings << "warning: column '" << cols[c].name
                     << "' has no numeric values; ignoring it\n";
            cols[c].role = ColumnRole::ignored;
            data[c].clear();
            data[c].shrink_to_fit();
        }
    }

    return Dataset(std::move(cols), std::move(outcome), std::move(data));
}

inline Dataset load_csv(const std::string& path, const SchemaConfig& schema,
                        std::ostream& warnings = std::cerr) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileError("cannot open '" + path + "' for reading");
    return parse_csv(in, schema, warnings);
}

} // namespace simpscan
