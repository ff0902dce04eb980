#include "bearingreg/csv.hpp"

#include "bearingreg/errors.hpp"

#include <cstdio>

namespace bearingreg {

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& header)
    : out_(path) {
    if (!out_) {
        throw ConfigError("cannot open output file: " + path);
    }
    row(header);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) {
            out_ << ',';
        }
        out_ << escape(fields[i]);
    }
    out_ << "\r\n";
}

std::string CsvWriter::escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) {
        return field;
    }
    std::string quoted = "\"";
    for (char c : field) {
        if (c == '"') {
            quoted += '"';
        }
        quoted += c;
    }
    quoted += '"';
    return quoted;
}

std::string CsvWriter::num(double value) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", value);
    return buf;
}

std::string CsvWriter::num(int value) {
    return std::to_string(value);
}

} // namespace bearingreg
