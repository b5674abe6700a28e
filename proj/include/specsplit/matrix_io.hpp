#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "specsplit/error.hpp"
#include "specsplit/matrix_kernel.hpp"

namespace specsplit {

/// Input that failed to parse; line and column are 1-based.
class ParseError : public InputError {
public:
    ParseError(const std::string& what, std::size_t line, std::size_t column)
        : InputError(what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"),
          line_(line),
          column_(column)
    {
    }

    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

namespace io {

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

//---------------------------------------------------------------------------//
// Matrix Market, dense "array" layout (column-major), complex or real field
//---------------------------------------------------------------------------//

inline std::string to_matrix_market(const Matrix& m)
{
    std::string out = "%%MatrixMarket matrix array complex general\n";
    out += std::to_string(m.rows()) + " " + std::to_string(m.cols()) + "\n";
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            out += format_double(m(i, j).real());
            out += ' ';
            out += format_double(m(i, j).imag());
            out += '\n';
        }
    }
    return out;
}

namespace detail {

class LineScanner {
public:
    LineScanner(std::string_view line, std::size_t line_no) : line_(line), line_no_(line_no) {}

    bool at_end()
    {
        skip_ws();
        return pos_ >= line_.size();
    }

    double number(const char* what)
    {
        skip_ws();
        const std::size_t start = pos_;
        if (start >= line_.size()) {
            throw ParseError(std::string("expected ") + what, line_no_, start + 1);
        }
        double v = 0.0;
        const char* first = line_.data() + start;
        const char* last = line_.data() + line_.size();
        if (*first == '+') {
            ++first;
        }
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || (ptr != last && *ptr != ' ' && *ptr != '\t' && *ptr != '\r')) {
            throw ParseError(std::string("malformed ") + what, line_no_, start + 1);
        }
        pos_ = static_cast<std::size_t>(ptr - line_.data());
        return v;
    }

    long integer(const char* what)
    {
        skip_ws();
        const std::size_t start = pos_;
        long v = 0;
        const char* first = line_.data() + start;
        const char* last = line_.data() + line_.size();
        auto [ptr, ec] = std::from_chars(first, last, v);
        if (ec != std::errc{} || (ptr != last && *ptr != ' ' && *ptr != '\t' && *ptr != '\r')) {
            throw ParseError(std::string("malformed ") + what, line_no_, start + 1);
        }
        pos_ = static_cast<std::size_t>(ptr - line_.data());
        return v;
    }

    std::size_t column() const { return pos_ + 1; }

private:
    void skip_ws()
    {
        while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t' || line_[pos_] == '\r')) {
            ++pos_;
        }
    }

    std::string_view line_;
    std::size_t line_no_;
    std::size_t pos_ = 0;
};

inline std::string lower(std::string s)
{
    for (char& c : s) {
        if (c >= 'A' && c <= 'Z') {
            c = static_cast<char>(c - 'A' + 'a');
        }
    }
    return s;
}

} // namespace detail

inline Matrix parse_matrix_market(std::string_view text)
{
    std::vector<std::string_view> lines;
    for (std::size_t start = 0; start <= text.size();) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            end = text.size();
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    if (lines.empty() || lines[0].substr(0, 14) != "%%MatrixMarket") {
        throw ParseError("missing %%MatrixMarket banner", 1, 1);
    }
    std::istringstream banner{std::string(lines[0])};
    std::string tag, object, format, field, symmetry;
    banner >> tag >> object >> format >> field >> symmetry;
    object = detail::lower(object);
    format = detail::lower(format);
    field = detail::lower(field);
    symmetry = detail::lower(symmetry);
    if (object != "matrix" || format != "array") {
        throw ParseError("only dense 'matrix array' files are supported", 1, 16);
    }
    if (field != "complex" && field != "real" && field != "integer") {
        throw ParseError("unsupported field '" + field + "'", 1, 1);
    }
    if (symmetry != "general") {
        throw ParseError("only 'general' symmetry is supported", 1, 1);
    }
    const bool is_complex = field == "complex";

    std::size_t li = 1;
    auto next_data_line = [&]() -> std::size_t {
        while (li < lines.size()) {
            std::string_view l = lines[li];
            std::size_t k = l.find_first_not_of(" \t\r");
            if (k != std::string_view::npos && l[k] != '%') {
                return li++;
            }
            ++li;
        }
        return lines.size();
    };

    std::size_t size_line = next_data_line();
    if (size_line >= lines.size()) {
        throw ParseError("missing size line", lines.size(), 1);
    }
    detail::LineScanner size_scan(lines[size_line], size_line + 1);
    const long rows = size_scan.integer("row count");
    const long cols = size_scan.integer("column count");
    if (!size_scan.at_end()) {
        throw ParseError("trailing data on size line", size_line + 1, size_scan.column());
    }
    if (rows < 1 || rows != cols) {
        throw ParseError("matrix must be square with n >= 1", size_line + 1, 1);
    }
    Matrix m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            std::size_t l = next_data_line();
            if (l >= lines.size()) {
                throw ParseError("unexpected end of file: expected " + std::to_string(rows * cols) + " entries",
                                 lines.size(), 1);
            }
            detail::LineScanner scan(lines[l], l + 1);
            const double re = scan.number("real part");
            const double im = is_complex ? scan.number("imaginary part") : 0.0;
            if (!scan.at_end()) {
                throw ParseError("trailing data after entry", l + 1, scan.column());
            }
            m(i, j) = cplx(re, im);
        }
    }
    if (std::size_t extra = next_data_line(); extra < lines.size()) {
        throw ParseError("more entries than the declared size", extra + 1, 1);
    }
    return m;
}

//---------------------------------------------------------------------------//
// JSON: { "n": int, "re": [[...]], "im": [[...]] }, row-major
//---------------------------------------------------------------------------//

inline nlohmann::json to_json_value(const Matrix& m)
{
    nlohmann::json re = nlohmann::json::array();
    nlohmann::json im = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json rr = nlohmann::json::array();
        nlohmann::json ir = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            rr.push_back(m(i, j).real());
            ir.push_back(m(i, j).imag());
        }
        re.push_back(std::move(rr));
        im.push_back(std::move(ir));
    }
    return {{"n", m.rows()}, {"re", std::move(re)}, {"im", std::move(im)}};
}

inline Matrix from_json_value(const nlohmann::json& j)
{
    if (!j.is_object() || !j.contains("n") || !j.contains("re")) {
        throw InputError("matrix JSON needs fields 'n' and 're' (and optionally 'im')");
    }
    if (!j["n"].is_number_integer() || j["n"].get<long>() < 1) {
        throw InputError("matrix JSON: 'n' must be a positive integer");
    }
    const auto n = static_cast<Eigen::Index>(j["n"].get<long>());
    auto read_part = [&](const char* key, bool required) -> Eigen::MatrixXd {
        Eigen::MatrixXd part = Eigen::MatrixXd::Zero(n, n);
        if (!j.contains(key)) {
            if (required) {
                throw InputError(std::string("matrix JSON: missing '") + key + "'");
            }
            return part;
        }
        const auto& rows = j[key];
        if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != n) {
            throw InputError(std::string("matrix JSON: '") + key + "' must have n rows");
        }
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto& row = rows[static_cast<std::size_t>(r)];
            if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
                throw InputError(std::string("matrix JSON: row ") + std::to_string(r) + " of '" + key
                                 + "' must have n entries");
            }
            for (Eigen::Index c = 0; c < n; ++c) {
                const auto& v = row[static_cast<std::size_t>(c)];
                if (!v.is_number()) {
                    throw InputError(std::string("matrix JSON: non-numeric entry in '") + key + "' at ("
                                     + std::to_string(r) + ", " + std::to_string(c) + ")");
                }
                part(r, c) = v.get<double>();
            }
        }
        return part;
    };
    const Eigen::MatrixXd re = read_part("re", true);
    const Eigen::MatrixXd im = read_part("im", false);
    Matrix m(n, n);
    m.real() = re;
    m.imag() = im;
    return m;
}

inline std::string to_json(const Matrix& m) { return to_json_value(m).dump(); }

inline Matrix parse_json(std::string_view text)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        // Convert the byte offset to a line/column pair.
        std::size_t line = 1, col = 1;
        for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
        }
        throw ParseError("invalid JSON", line, col);
    }
    return from_json_value(j);
}

//---------------------------------------------------------------------------//
// Files
//---------------------------------------------------------------------------//

inline std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InputError("cannot open '" + path + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InputError("cannot write '" + path + "'");
    }
    out << content;
}

/// Parses either format, chosen by the first non-blank character.
inline OperatorMatrix parse_matrix(std::string_view text)
{
    const std::size_t k = text.find_first_not_of(" \t\r\n");
    if (k != std::string_view::npos && text[k] == '{') {
        return OperatorMatrix(parse_json(text));
    }
    return OperatorMatrix(parse_matrix_market(text));
}

inline OperatorMatrix read_matrix(const std::string& path) { return parse_matrix(read_file(path)); }

/// 64-bit FNV-1a digest, hex encoded; identifies inputs in output headers.
inline std::string digest(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    static const char* hex = "0123456789abcdef";
    for (int i = 15; i >= 0; --i) {
        buf[i] = hex[h & 0xF];
        h >>= 4;
    }
    buf[16] = '\0';
    return std::string("fnv1a64:") + buf;
}

} // namespace io
} // namespace specsplit
