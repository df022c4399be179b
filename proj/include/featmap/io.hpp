#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "featmap/mapping.hpp"
#include "featmap/optimizer.hpp"
#include "featmap/sensitivity.hpp"

namespace featmap {

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

/// Quotes a CSV field when it holds a comma, quote or line break.
std::string csv_escape(std::string_view field);

/// RFC-4180 style writer: CRLF record separators, header row first.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

  void row(const std::vector<std::string>& fields);
  void row(std::span<const double> values);
  void close();

 private:
  std::filesystem::path path_;
  std::string buffer_;
  std::size_t columns_ = 0;
  bool open_ = true;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(std::string_view name) const;  // -1 when absent
};

CsvTable read_csv(const std::filesystem::path& path);

/// Binary P5 greyscale, maxval 255, pixel = round(255 value) after
/// clamping to [0, 1]. Rows are written top row (largest y) first.
void write_pgm(const std::filesystem::path& path, int width, int height, std::span<const double> values);
void write_density_pgm(const std::filesystem::path& path, const Grid& grid, std::span<const double> rho);

/// Columns ex,ey,rho in element order.
void write_density_csv(const std::filesystem::path& path, const Grid& grid, std::span<const double> rho);

/// Columns param,analytic,fd,rel_err.
void write_gradient_csv(const std::filesystem::path& path, const GradientReport& report);

/// Columns iter,objective,max_constraint,grad_norm,s_1..s_n.
void write_history_csv(const std::filesystem::path& path, const History& history);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace featmap
