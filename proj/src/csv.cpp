#include "qacost/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "qacost/error.hpp"

namespace qacost::csv {

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

Table parse(std::string_view text, std::string_view expected_header, std::string_view source) {
    Table t;
    std::size_t pos = 0;
    std::size_t line_no = 0;
    bool have_header = false;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (!have_header) {
            // Skip a UTF-8 byte order mark.
            if (line.substr(0, 3) == "\xEF\xBB\xBF") line.remove_prefix(3);
            if (line != expected_header)
                throw Error(ErrorCode::parse_error, std::string(source) + ": expected header '" +
                                                        std::string(expected_header) + "', got '" +
                                                        std::string(line) + "'");
            t.header = split_line(line);
            have_header = true;
            continue;
        }
        if (trim(line).empty()) {
            if (pos > text.size()) break;
            continue;
        }
        auto fields = split_line(line);
        if (fields.size() != t.header.size())
            throw Error(ErrorCode::parse_error, std::string(source) + ":" + std::to_string(line_no) + ": expected " +
                                                    std::to_string(t.header.size()) + " fields, got " +
                                                    std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
        t.line_numbers.push_back(line_no);
    }
    if (!have_header) throw Error(ErrorCode::parse_error, std::string(source) + ": empty file");
    return t;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_error, "cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw Error(ErrorCode::io_error, "error reading '" + path.string() + "'");
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    if (ec) throw Error(ErrorCode::io_error, "cannot create directory for '" + path.string() + "': " + ec.message());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::io_error, "cannot open '" + path.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::io_error, "error writing '" + path.string() + "'");
}

Table read(const std::filesystem::path& path, std::string_view expected_header) {
    return parse(read_file(path), expected_header, path.string());
}

std::string format_double(double v) {
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) return "nan";
    return std::string(buf, end);
}

double parse_double(std::string_view field, std::string_view what) {
    const std::string f = trim(field);
    double v = 0;
    const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || ec != std::errc{} || end != f.data() + f.size())
        throw Error(ErrorCode::parse_error, std::string(what) + ": '" + std::string(field) + "' is not a number");
    return v;
}

long long parse_integer(std::string_view field, std::string_view what) {
    const std::string f = trim(field);
    long long v = 0;
    const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (f.empty() || ec != std::errc{} || end != f.data() + f.size())
        throw Error(ErrorCode::parse_error, std::string(what) + ": '" + std::string(field) + "' is not an integer");
    return v;
}

}  // namespace qacost::csv
