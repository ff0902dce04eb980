#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace bearingreg {

/// Minimal RFC-4180 CSV writer with a header row.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);

    void row(const std::vector<std::string>& fields);

    static std::string escape(const std::string& field);
    static std::string num(double value);
    static std::string num(int value);

private:
    std::ofstream out_;
};

} // namespace bearingreg
