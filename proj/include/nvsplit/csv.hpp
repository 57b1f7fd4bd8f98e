#pragma once

#include <ostream>
#include <string>
#include <string_view>

namespace nvsplit {

/// Shortest decimal that round-trips to the same double; "nan", "inf", "-inf" otherwise.
std::string format_double(double v);

/// Comma-separated rows; fields are written verbatim (no quoting).
class CsvWriter {
public:
    explicit CsvWriter(std::ostream& out) : out_(&out) {}

    CsvWriter& field(std::string_view s);
    CsvWriter& field(double v);
    CsvWriter& field(long long v);
    CsvWriter& field(int v) { return field(static_cast<long long>(v)); }
    CsvWriter& field(long v) { return field(static_cast<long long>(v)); }
    CsvWriter& field(bool v) { return field(static_cast<long long>(v ? 1 : 0)); }
    CsvWriter& field(const char* s) { return field(std::string_view(s)); }
    void end_row();

private:
    std::ostream* out_;
    bool first_ = true;
};

} // namespace nvsplit
