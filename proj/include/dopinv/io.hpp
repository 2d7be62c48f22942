#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "dopinv/grid.hpp"

namespace dopinv::io {

/// Malformed or unreadable input file.
class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shortest decimal representation that parses back to the same double.
std::string format_double(double v);

/// Strict full-token parse of a finite number; throws FormatError.
double parse_double(std::string_view token);
long long parse_integer(std::string_view token);

// ScalarField text format: "n=<n>" then n rows of n values, bottom row first.
void write_field(std::ostream& os, const ScalarField& f);
ScalarField read_field(std::istream& is);
void save_field(const std::filesystem::path& path, const ScalarField& f);
ScalarField load_field(const std::filesystem::path& path);

// Trace CSV: header "x,value", one row per face midpoint.
void write_trace(std::ostream& os, const Trace& t);
Trace read_trace(std::istream& is, const Grid& grid, Segment segment);
void save_trace(const std::filesystem::path& path, const Trace& t);
Trace load_trace(const std::filesystem::path& path, const Grid& grid, Segment segment);

/// Writes `text` to `path`, creating parent directories.
void write_text_file(const std::filesystem::path& path, std::string_view text);

std::string trim(std::string_view s);

struct KeyValue {
    std::string key;
    std::string value;
    int line = 0;
};

/// Flat "key = value" lines; '#' starts a comment. Throws FormatError on a
/// non-blank line without '=' or with an empty key.
std::vector<KeyValue> parse_key_values(std::istream& is);

}  // namespace dopinv::io
