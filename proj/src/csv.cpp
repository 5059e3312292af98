#include "lotkit/csv.hpp"

#include <charconv>
#include <cstdio>

#include "lotkit/errors.hpp"

namespace lotkit::csv {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) {
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }
    return std::string(buf, ptr);
}

double parse_double(std::string_view text, const std::string& what, std::size_t line) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError("line " + std::to_string(line) + ": invalid " + what + " '" +
                         std::string(text) + "'");
    }
    return v;
}

long parse_long(std::string_view text, const std::string& what, std::size_t line) {
    long v = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) {
        throw ParseError("line " + std::to_string(line) + ": invalid " + what + " '" +
                         std::string(text) + "'");
    }
    return v;
}

std::vector<std::string> split_fields(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.emplace_back(line.substr(start));
            break;
        }
        out.emplace_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

namespace {

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

}  // namespace

Reader::Reader(const std::string& path) : in_(path), path_(path) {
    if (!in_) throw IoError("cannot open '" + path + "' for reading");
    std::string line;
    if (!std::getline(in_, line)) throw SchemaError("'" + path + "': missing header row");
    line_ = 1;
    for (auto& f : split_fields(strip_cr(line))) header_.push_back(f);
}

bool Reader::next(std::vector<std::string>& fields) {
    std::string line;
    while (std::getline(in_, line)) {
        ++line_;
        line = strip_cr(line);
        if (line.empty()) continue;
        fields = split_fields(line);
        return true;
    }
    return false;
}

Writer::Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
    if (!out_) throw IoError("cannot open '" + path + "' for writing");
}

void Writer::write_row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out_ << ',';
        out_ << fields[i];
    }
    out_ << '\n';
    if (!out_) throw IoError("write failed on '" + path_ + "'");
}

}  // namespace lotkit::csv
