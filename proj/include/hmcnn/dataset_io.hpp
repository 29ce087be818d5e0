#ifndef HMCNN_DATASET_IO_HPP
#define HMCNN_DATASET_IO_HPP

// Dataset CSV format:
//   line 1:  "d1,d2"
//   line k:  "label,p_1_1,p_1_2,…,p_1_d2,p_2_1,…,p_d1_d2"
// Pixels are row-major over the 1-based (i,j) convention, i.e. p_i_j is the
// grey value at first-axis index i and second-axis index j. Numbers use '.'
// as radix independent of locale; values are written as the shortest decimal
// string that round-trips to the same double.

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hmcnn/image.hpp"

namespace hmcnn {

/// Malformed dataset file; the message carries the 1-based line number.
class dataset_format_error : public std::runtime_error {
public:
    dataset_format_error(std::size_t line, const std::string& what)
        : std::runtime_error("dataset line " + std::to_string(line) + ": " + what), line_{line}
    {
    }
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view s, double& out)
{
    s = trim(s);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size() && !s.empty();
}

inline bool parse_int(std::string_view s, long long& out)
{
    s = trim(s);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size() && !s.empty();
}

inline void append_number(std::string& out, double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::fixed);
    out.append(buf, res.ptr);
}

} // namespace detail

/// Tolerance within which out-of-range grey values are clamped on load.
inline constexpr double kPixelClampSlack = 1e-12;

inline LabeledDataset read_dataset(std::istream& in)
{
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw dataset_format_error(1, "missing header");
    ++lineno;
    const auto header = detail::split_commas(detail::trim(line));
    long long d1 = 0, d2 = 0;
    if (header.size() != 2 || !detail::parse_int(header[0], d1) || !detail::parse_int(header[1], d2) || d1 <= 1 ||
        d2 <= 1 || d1 > 1 << 15 || d2 > 1 << 15)
        throw dataset_format_error(lineno, "header must be \"d1,d2\" with d1,d2 > 1");

    const std::size_t npx = static_cast<std::size_t>(d1 * d2);
    std::vector<Image> images;
    std::vector<int> labels;
    while (std::getline(in, line)) {
        ++lineno;
        const auto body = detail::trim(line);
        if (body.empty()) continue;
        const auto fields = detail::split_commas(body);
        if (fields.size() != npx + 1)
            throw dataset_format_error(lineno, "expected " + std::to_string(npx + 1) + " fields, found " +
                                                   std::to_string(fields.size()));
        long long label = -1;
        if (!detail::parse_int(fields[0], label) || (label != 0 && label != 1))
            throw dataset_format_error(lineno, "label must be 0 or 1");
        std::vector<double> px(npx);
        for (std::size_t k = 0; k < npx; ++k) {
            double v = 0;
            if (!detail::parse_double(fields[k + 1], v))
                throw dataset_format_error(lineno, "pixel " + std::to_string(k + 1) + " is not a number");
            if (v < 0.0 && v >= -kPixelClampSlack) v = 0.0;
            if (v > 1.0 && v <= 1.0 + kPixelClampSlack) v = 1.0;
            if (!(v >= 0.0 && v <= 1.0))
                throw dataset_format_error(lineno, "pixel " + std::to_string(k + 1) + " outside [0,1]");
            px[k] = v;
        }
        images.emplace_back(static_cast<int>(d1), static_cast<int>(d2), std::move(px));
        labels.push_back(static_cast<int>(label));
    }
    if (images.empty()) throw dataset_format_error(lineno, "no data rows");
    return LabeledDataset{std::move(images), std::move(labels)};
}

inline void write_dataset(std::ostream& out, const LabeledDataset& ds)
{
    std::string buf;
    buf += std::to_string(ds.d1()) + "," + std::to_string(ds.d2()) + "\n";
    out << buf;
    for (std::size_t k = 0; k < ds.size(); ++k) {
        buf.clear();
        buf += ds.label(k) ? '1' : '0';
        for (double v : ds.image(k).pixels().values()) {
            buf += ',';
            detail::append_number(buf, v);
        }
        buf += '\n';
        out << buf;
    }
}

inline LabeledDataset load_dataset(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open dataset file: " + path);
    return read_dataset(in);
}

inline void save_dataset(const LabeledDataset& ds, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write dataset file: " + path);
    write_dataset(out, ds);
    if (!out) throw std::runtime_error("write failed: " + path);
}

} // namespace hmcnn

#endif
