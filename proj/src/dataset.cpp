#include "rrnn/dataset.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "rrnn/error.hpp"

namespace rrnn {

namespace {

Error parse_error(std::size_t line, const std::string& msg) {
    return Error(ErrorCode::parse, "line " + std::to_string(line) + ": " + msg);
}

std::vector<std::string> split_ws(const std::string& line) {
    std::vector<std::string> tokens;
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) {
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

}  // namespace

std::string format_real(double value) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", value);
    return std::string(buf, static_cast<std::size_t>(n));
}

double parse_real(const std::string& token) {
    double value = 0.0;
    const char* first = token.data();
    const char* last = first + token.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw Error(ErrorCode::parse, "not a finite decimal: '" + token + "'");
    }
    return value;
}

void write_features(std::ostream& out, const FeatureTable& table) {
    out << kFeatureHeader << " d=" << table.dim << '\n';
    for (const FeatureRecord& rec : table.records) {
        if (rec.feature.size() != table.dim) {
            throw Error(ErrorCode::shape, "record '" + rec.sample_id + "' has dimension " +
                                              std::to_string(rec.feature.size()) +
                                              ", table has d=" + std::to_string(table.dim));
        }
        out << rec.sample_id << ' ' << rec.subject << ' ' << rec.tag;
        for (double x : rec.feature) {
            out << ' ' << format_real(x);
        }
        out << '\n';
    }
}

FeatureTable read_features(std::istream& in) {
    FeatureTable table;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) {
        throw parse_error(1, "missing header");
    }
    ++line_no;
    {
        const auto tokens = split_ws(line);
        const std::string prefix = "d=";
        if (tokens.size() != 3 || tokens[0] + " " + tokens[1] != kFeatureHeader ||
            tokens[2].rfind(prefix, 0) != 0) {
            throw parse_error(line_no, "expected header 'rrnn-features v1 d=<d>'");
        }
        const std::string dim = tokens[2].substr(prefix.size());
        const auto [ptr, ec] = std::from_chars(dim.data(), dim.data() + dim.size(), table.dim);
        if (ec != std::errc() || ptr != dim.data() + dim.size() || table.dim == 0) {
            throw parse_error(line_no, "invalid dimension '" + dim + "'");
        }
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const auto tokens = split_ws(line);
        if (tokens.empty()) {
            continue;
        }
        if (tokens.size() != 3 + table.dim) {
            throw parse_error(line_no, "expected " + std::to_string(3 + table.dim) +
                                           " fields, found " + std::to_string(tokens.size()));
        }
        FeatureRecord rec;
        rec.sample_id = tokens[0];
        rec.subject = tokens[1];
        const std::string& tag = tokens[2];
        const auto [ptr, ec] = std::from_chars(tag.data(), tag.data() + tag.size(), rec.tag);
        if (ec != std::errc() || ptr != tag.data() + tag.size()) {
            throw parse_error(line_no, "invalid tag '" + tag + "'");
        }
        rec.feature = Vector(table.dim);
        for (std::size_t i = 0; i < table.dim; ++i) {
            try {
                rec.feature[i] = parse_real(tokens[3 + i]);
            } catch (const Error& e) {
                throw parse_error(line_no, e.what());
            }
        }
        table.records.push_back(std::move(rec));
    }
    return table;
}

void save_features(const std::string& path, const FeatureTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::io, "cannot open '" + path + "' for writing");
    }
    write_features(out, table);
    out.flush();
    if (!out) {
        throw Error(ErrorCode::io, "write to '" + path + "' failed");
    }
}

FeatureTable load_features(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::io, "cannot open '" + path + "' for reading");
    }
    try {
        return read_features(in);
    } catch (const Error& e) {
        throw Error(e.code(), path + ": " + e.what());
    }
}

}  // namespace rrnn
