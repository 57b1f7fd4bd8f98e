#include "nvsplit/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>

namespace nvsplit {

std::string format_double(double v)
{
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

CsvWriter& CsvWriter::field(std::string_view s)
{
    if (!first_) *out_ << ',';
    *out_ << s;
    first_ = false;
    return *this;
}

CsvWriter& CsvWriter::field(double v) { return field(std::string_view(format_double(v))); }

CsvWriter& CsvWriter::field(long long v) { return field(std::string_view(std::to_string(v))); }

void CsvWriter::end_row()
{
    *out_ << '\n';
    first_ = true;
}

} // namespace nvsplit
