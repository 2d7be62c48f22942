#include "dopinv/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace dopinv::io {

namespace {

std::vector<std::string> split(std::string_view s, char sep)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = s.find(sep, start);
        out.emplace_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::ifstream open_for_read(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open '" + path.string() + "' for reading");
    return in;
}

}  // namespace

std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

std::string format_double(double v)
{
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view token)
{
    const std::string t = trim(token);
    double v = 0.0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    if (!t.empty() && *begin == '+') ++begin;
    const auto res = std::from_chars(begin, end, v);
    if (t.empty() || res.ec != std::errc() || res.ptr != end) {
        throw FormatError("not a number: '" + t + "'");
    }
    if (!std::isfinite(v)) throw FormatError("non-finite number: '" + t + "'");
    return v;
}

long long parse_integer(std::string_view token)
{
    const std::string t = trim(token);
    long long v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size()) {
        throw FormatError("not an integer: '" + t + "'");
    }
    return v;
}

void write_field(std::ostream& os, const ScalarField& f)
{
    const int n = f.grid().n();
    os << "n=" << n << '\n';
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            if (i > 0) os << ' ';
            os << format_double(f(i, j));
        }
        os << '\n';
    }
}

ScalarField read_field(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line)) throw FormatError("empty field file");
    line = trim(line);
    if (line.rfind("n=", 0) != 0) throw FormatError("field header must be 'n=<n>', got '" + line + "'");
    const long long n = parse_integer(std::string_view(line).substr(2));
    if (n < Grid::kMinCells || n > 1 << 15) throw FormatError("unsupported field size n=" + std::to_string(n));
    const Grid grid(static_cast<int>(n));
    ScalarField f(grid);
    for (int j = 0; j < grid.n(); ++j) {
        if (!std::getline(is, line)) throw FormatError("field truncated at row " + std::to_string(j));
        std::istringstream row(line);
        std::string tok;
        int i = 0;
        while (row >> tok) {
            if (i >= grid.n()) throw FormatError("too many values in row " + std::to_string(j));
            f(i++, j) = parse_double(tok);
        }
        if (i != grid.n()) throw FormatError("row " + std::to_string(j) + " has " + std::to_string(i) + " values");
    }
    while (std::getline(is, line)) {
        if (!trim(line).empty()) throw FormatError("trailing content after field rows");
    }
    return f;
}

void save_field(const std::filesystem::path& path, const ScalarField& f)
{
    std::ostringstream os;
    write_field(os, f);
    write_text_file(path, os.str());
}

ScalarField load_field(const std::filesystem::path& path)
{
    auto in = open_for_read(path);
    try {
        return read_field(in);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_trace(std::ostream& os, const Trace& t)
{
    os << "x,value\n";
    for (std::size_t k = 0; k < t.size(); ++k) {
        os << format_double(t.grid().face_coordinate(static_cast<int>(k))) << ','
           << format_double(t[k]) << '\n';
    }
}

Trace read_trace(std::istream& is, const Grid& grid, Segment segment)
{
    std::string line;
    if (!std::getline(is, line) || trim(line) != "x,value") {
        throw FormatError("trace CSV must start with header 'x,value'");
    }
    std::vector<double> values;
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        const auto cols = split(line, ',');
        if (cols.size() != 2) throw FormatError("trace row needs 2 columns: '" + line + "'");
        const double x = parse_double(cols[0]);
        const auto k = values.size();
        if (k >= static_cast<std::size_t>(grid.n()) ||
            std::abs(x - grid.face_coordinate(static_cast<int>(k))) > 1e-12) {
            throw FormatError("trace row " + std::to_string(k) + " has unexpected x=" + cols[0]);
        }
        values.push_back(parse_double(cols[1]));
    }
    if (values.size() != static_cast<std::size_t>(grid.n())) {
        throw FormatError("trace has " + std::to_string(values.size()) + " rows, expected " +
                          std::to_string(grid.n()));
    }
    return Trace(grid, segment, std::move(values));
}

void save_trace(const std::filesystem::path& path, const Trace& t)
{
    std::ostringstream os;
    write_trace(os, t);
    write_text_file(path, os.str());
}

Trace load_trace(const std::filesystem::path& path, const Grid& grid, Segment segment)
{
    auto in = open_for_read(path);
    try {
        return read_trace(in, grid, segment);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

std::vector<KeyValue> parse_key_values(std::istream& is)
{
    std::vector<KeyValue> out;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        const std::string body = trim(std::string_view(line).substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw FormatError("line " + std::to_string(lineno) + ": expected 'key = value', got '" + body + "'");
        }
        KeyValue kv{trim(std::string_view(body).substr(0, eq)), trim(std::string_view(body).substr(eq + 1)), lineno};
        if (kv.key.empty()) throw FormatError("line " + std::to_string(lineno) + ": empty key");
        out.push_back(std::move(kv));
    }
    return out;
}

void write_text_file(const std::filesystem::path& path, std::string_view text)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
    out << text;
    if (!out) throw FormatError("write to '" + path.string() + "' failed");
}

}  // namespace dopinv::io
