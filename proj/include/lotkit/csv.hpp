#pragma once

#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace lotkit::csv {

// Shortest decimal representation that round-trips the exact double.
std::string format_double(double v);

// Strict numeric parsing; `what` and `line` feed the error message.
double parse_double(std::string_view text, const std::string& what, std::size_t line);
long parse_long(std::string_view text, const std::string& what, std::size_t line);

std::vector<std::string> split_fields(std::string_view line);

// Line-oriented CSV reader. Fields never contain commas or quotes in any of
// the formats this project defines, so no quoting rules are needed.
class Reader {
public:
    explicit Reader(const std::string& path);

    const std::vector<std::string>& header() const { return header_; }
    const std::string& path() const { return path_; }

    // Reads the next data row; returns false at end of file.
    bool next(std::vector<std::string>& fields);

    // 1-based line number of the row most recently returned by next().
    std::size_t line() const { return line_; }

private:
    std::ifstream in_;
    std::string path_;
    std::vector<std::string> header_;
    std::size_t line_ = 0;
};

class Writer {
public:
    explicit Writer(const std::string& path);
    void write_row(const std::vector<std::string>& fields);

private:
    std::ofstream out_;
    std::string path_;
};

}  // namespace lotkit::csv
