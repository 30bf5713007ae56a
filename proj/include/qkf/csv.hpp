// Plot-ready CSV output. Formatting is fixed (%.12e, '\n', C locale) so a
// given seed always produces byte-identical files.
#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace qkf {

class CsvWriter {
  public:
    explicit CsvWriter(const std::filesystem::path& path);

    // Column names carry units in brackets, e.g. "err_x [km]".
    void header(const std::vector<std::string>& columns);
    void row(const std::vector<double>& values);

  private:
    std::ofstream out_;
    std::size_t columns_ = 0;
};

std::string format_double(double v);

}  // namespace qkf
